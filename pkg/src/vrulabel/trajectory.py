"""Track smoothing, spline interpolation and motion estimation for GNSS tracks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InputError, OutOfRangeError
from .geomath import EnuPoint, GeoFix, geodetic_to_enu_arrays, wrap_angle

log = logging.getLogger(__name__)

PEDESTRIAN = "pedestrian"
CYCLIST = "cyclist"
VRU_KINDS = (PEDESTRIAN, CYCLIST)


@dataclass(frozen=True)
class VruTrack:
    id: str
    kind: str
    fixes: tuple[GeoFix, ...] = field(repr=False)

    def __post_init__(self):
        if self.kind not in VRU_KINDS:
            raise InputError(f"track {self.id!r}: unknown VRU kind {self.kind!r}")
        if len(self.fixes) < 2:
            raise InputError(f"track {self.id!r}: needs at least 2 fixes")
        times = np.array([f.time_s for f in self.fixes])
        if not np.all(np.diff(times) > 0):
            raise InputError(f"track {self.id!r}: fix times must be strictly increasing")

    def span(self) -> tuple[float, float]:
        return self.fixes[0].time_s, self.fixes[-1].time_s

    def to_enu(self, origin: GeoFix, time_offset_s: float = 0.0):
        """Return (times, xy) arrays in the ENU frame of ``origin``."""
        arr = np.array(self.fixes, dtype=float)
        e, n, _ = geodetic_to_enu_arrays(arr[:, 1], arr[:, 2], arr[:, 3], origin)
        return arr[:, 0] + time_offset_s, np.column_stack([e, n])


class MotionEstimate(NamedTuple):
    speed_mps: float
    yaw_rad: float
    yaw_rate_rps: float
    stationary: bool


def moving_average(values, window: int = 9) -> np.ndarray:
    """Centered moving average along axis 0.

    Near the ends the window shrinks symmetrically, so the first and last
    samples are returned unchanged, their neighbours averaged over 3, and so on.
    """
    if window < 1 or window % 2 == 0:
        raise InputError(f"smoothing window must be odd and >= 1, got {window}")
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        raise InputError("cannot smooth an empty track")
    idx = np.arange(n)
    half = np.minimum(window // 2, np.minimum(idx, n - 1 - idx))
    acc = np.zeros_like(x)
    for k in range(-(window // 2), window // 2 + 1):
        use = np.abs(k) <= half
        acc[use] += x[idx[use] + k]
    count = (2 * half + 1).reshape((n,) + (1,) * (x.ndim - 1))
    return acc / count


def smooth_track(points: Sequence[tuple[float, EnuPoint]], window: int = 9):
    """Smooth a list of ``(time, EnuPoint)`` pairs; timestamps are kept."""
    if not points:
        raise InputError("cannot smooth an empty track")
    times = [t for t, _ in points]
    xyz = moving_average(np.array([tuple(p) for _, p in points], dtype=float), window)
    return [(t, EnuPoint(*map(float, row))) for t, row in zip(times, xyz)]


def fit_spline(times, xy) -> CubicSpline:
    """Natural cubic interpolating spline through each coordinate column."""
    times = np.asarray(times, dtype=float)
    xy = np.asarray(xy, dtype=float)
    if len(times) < 2:
        raise InputError("spline needs at least 2 samples")
    return CubicSpline(times, xy, axis=0, bc_type="natural")


def position_at(spline: CubicSpline, t: float, tolerance_s: float = 0.05) -> np.ndarray:
    lo, hi = spline.x[0], spline.x[-1]
    if t < lo:
        if lo - t > tolerance_s:
            raise OutOfRangeError(f"t={t:.3f} s before track start {lo:.3f} s")
        t = lo
    elif t > hi:
        if t - hi > tolerance_s:
            raise OutOfRangeError(f"t={t:.3f} s after track end {hi:.3f} s")
        t = hi
    return spline(t)


def _line_direction(xy: np.ndarray) -> float:
    """Yaw of the total-least-squares line through ``xy``, oriented first -> last."""
    d = xy - xy.mean(axis=0)
    sxx = float(d[:, 0] @ d[:, 0])
    syy = float(d[:, 1] @ d[:, 1])
    sxy = float(d[:, 0] @ d[:, 1])
    ang = 0.5 * math.atan2(2.0 * sxy, sxx - syy)
    chord = xy[-1] - xy[0]
    if chord[0] * math.cos(ang) + chord[1] * math.sin(ang) < 0:
        ang += math.pi
    return wrap_angle(ang)


class SmoothedTrack:
    """A smoothed, spline-interpolated VRU track in a planar frame.

    Motion estimates are computed per anchor sample and memoised; the cache
    only ever stores values that are a pure function of the immutable samples.
    """

    def __init__(self, track_id, times, xy, *, max_distance_m: float = 0.25,
                 stationary_threshold_s: float = 2.0, edge_tolerance_s: float = 0.05,
                 kind: str | None = None):
        self.track_id = track_id
        self.kind = kind
        self.times = np.asarray(times, dtype=float)
        self.xy = np.asarray(xy, dtype=float)[:, :2]
        if len(self.times) < 2 or len(self.times) != len(self.xy):
            raise InputError(f"track {track_id!r}: need >= 2 aligned samples")
        if not np.all(np.diff(self.times) > 0):
            raise InputError(f"track {track_id!r}: times must be strictly increasing")
        self.max_distance_m = max_distance_m
        self.stationary_threshold_s = stationary_threshold_s
        self.edge_tolerance_s = edge_tolerance_s
        self.spline = fit_spline(self.times, self.xy)
        self._motion: dict[int, MotionEstimate] = {}

    @classmethod
    def from_raw(cls, track_id, times, xy, window: int = 9, **kwargs) -> "SmoothedTrack":
        return cls(track_id, times, moving_average(np.asarray(xy, float)[:, :2], window),
                   **kwargs)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def covers(self, t: float) -> bool:
        lo, hi = self.span
        return lo - self.edge_tolerance_s <= t <= hi + self.edge_tolerance_s

    def position_at(self, t: float) -> np.ndarray:
        return position_at(self.spline, t, self.edge_tolerance_s)

    def samples(self) -> list[tuple[float, EnuPoint]]:
        return [(float(t), EnuPoint(float(x), float(y))) for t, (x, y) in zip(self.times, self.xy)]

    def anchor_index(self, t: float) -> int:
        if not self.covers(t):
            lo, hi = self.span
            raise OutOfRangeError(f"t={t:.3f} s outside track span [{lo:.3f}, {hi:.3f}]")
        j = int(np.searchsorted(self.times, t))
        if j == 0:
            return 0
        if j == len(self.times):
            return j - 1
        return j if self.times[j] - t < t - self.times[j - 1] else j - 1

    def _reach(self, k: int):
        """Window bounds around anchor ``k`` and time gaps to the next far sample.

        Returns ``(lo, hi, gap_back, gap_fwd)``. A sample is "far" when its
        displacement from the anchor exceeds the regression distance; with no
        far sample in a direction the gap runs to the track end.
        """
        n = len(self.times)
        p = self.xy[k]
        fwd = np.hypot(*(self.xy[k + 1:] - p).T) > self.max_distance_m
        back = np.hypot(*(self.xy[k - 1::-1] - p).T) > self.max_distance_m if k else np.zeros(0, bool)
        if fwd.any():
            j = k + 1 + int(np.argmax(fwd))
            hi, gap_f = j - 1, self.times[j] - self.times[k]
        else:
            hi, gap_f = n - 1, self.times[-1] - self.times[k]
        if back.any():
            j = k - 1 - int(np.argmax(back))
            lo, gap_b = j + 1, self.times[k] - self.times[j]
        else:
            lo, gap_b = 0, self.times[k] - self.times[0]
        return lo, hi, float(gap_b), float(gap_f)

    def is_stationary_at(self, k: int, threshold_s: float | None = None) -> bool:
        thr = self.stationary_threshold_s if threshold_s is None else threshold_s
        _, _, gap_b, gap_f = self._reach(k)
        return gap_b > thr or gap_f > thr

    def _moving_estimate(self, k: int, lo: int, hi: int) -> MotionEstimate:
        n = len(self.times)
        if hi - lo + 1 < 3:
            log.debug("track %s: regression window at sample %d widened to 3 samples",
                      self.track_id, k)
            lo, hi = max(0, k - 1), min(n - 1, k + 1)
            if hi - lo + 1 < 3 and n >= 3:
                lo, hi = (0, 2) if lo == 0 else (n - 3, n - 1)
        pts = self.xy[lo:hi + 1]
        ts = self.times[lo:hi + 1]
        yaw = _line_direction(pts)
        span = ts[-1] - ts[0]
        speed = float(np.hypot(*(pts[-1] - pts[0]))) / span
        yaw_rate = 0.0
        if len(pts) >= 3:
            m = (len(pts) - 1) // 2
            first, second = pts[:m + 1], pts[m:]
            dt = ts[m:].mean() - ts[:m + 1].mean()
            yaw_rate = wrap_angle(_line_direction(second) - _line_direction(first)) / dt
        return MotionEstimate(speed, yaw, float(yaw_rate), False)

    def _estimate_at(self, k: int) -> MotionEstimate:
        cached = self._motion.get(k)
        if cached is not None:
            return cached
        lo, hi, gap_b, gap_f = self._reach(k)
        thr = self.stationary_threshold_s
        if gap_b > thr or gap_f > thr:
            est = MotionEstimate(0.0, self._held_yaw(k), 0.0, True)
        else:
            est = self._moving_estimate(k, lo, hi)
        self._motion[k] = est
        return est

    def _held_yaw(self, k: int) -> float:
        # last stable yaw before k, else the first one after it; a cached
        # stationary neighbour already holds that same value
        for j in list(range(k - 1, -1, -1)) + list(range(k + 1, len(self.times))):
            cached = self._motion.get(j)
            if cached is not None:
                return cached.yaw_rad
            lo, hi, gap_b, gap_f = self._reach(j)
            if gap_b <= self.stationary_threshold_s and gap_f <= self.stationary_threshold_s:
                est = self._moving_estimate(j, lo, hi)
                self._motion[j] = est
                return est.yaw_rad
        return 0.0

    def estimate_motion(self, t: float) -> MotionEstimate:
        return self._estimate_at(self.anchor_index(t))


def estimate_motion(smoothed: SmoothedTrack, t: float) -> MotionEstimate:
    return smoothed.estimate_motion(t)
