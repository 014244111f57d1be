"""Deterministic synthetic scenes: a VRU on a figure-eight course seen by two radars.

Every scene is a pure function of its :class:`ScenarioConfig`. Randomness is
drawn from independent streams keyed by ``(seed, stream label)``, so e.g.
changing the clutter rate leaves the GNSS noise untouched.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InvariantError
from .geomath import GeoFix, SensorMount, enu_to_geodetic_arrays, wrap_angle
from .pipeline import BACKGROUND, EgoFix, LabeledDetection, RadarDetection, RadarFrame
from .trajectory import CYCLIST, PEDESTRIAN, VRU_KINDS, VruTrack

log = logging.getLogger(__name__)

DEFAULT_SPEED_MPS = {PEDESTRIAN: 1.4, CYCLIST: 3.0}

# stream labels for np.random.default_rng([seed, label, ...])
_VRU_GNSS, _EGO_GNSS, _BODY, _CLUTTER, _DRIFT = 1, 2, 3, 4, 5
# attempts to redraw a body return whose quantized position leaves the footprint
_MAX_REDRAWS = 50


def default_mounts() -> dict[str, SensorMount]:
    return {
        "front_left": SensorMount(3.6, 0.7, math.radians(25.0)),
        "front_right": SensorMount(3.6, -0.7, math.radians(-25.0)),
    }


@dataclass
class ScenarioConfig:
    kind: str = PEDESTRIAN
    speed_mps: float | None = None
    course_scale_m: float = 10.0
    course_center: tuple[float, float] = (14.0, 0.0)
    course_yaw_rad: float = math.pi / 2
    duration_s: float = 120.0
    gnss_rate_hz: float = 20.0
    gnss_sigma_m: float = 0.02
    radar_rate_hz: float = 17.0
    range_res_m: float = 0.15
    azimuth_res_rad: float = math.radians(2.4)
    doppler_res_mps: float = 0.17
    detections_per_cycle: float = 12.0
    clutter_rate: float = 5.0
    seed: int = 0
    track_id: str = "vru1"
    footprint_diameter_m: float = 0.6
    footprint_length_m: float = 1.8
    footprint_width_m: float = 0.6
    vru_amplitude_db: float = 60.0
    clutter_amplitude_db: float = 50.0
    amplitude_sigma_db: float = 3.0
    antenna_height_m: float = 1.8
    ego_speed_mps: float = 0.0
    ego_yaw_rad: float = 0.0
    origin: tuple[float, float, float] = (48.4, 9.95, 500.0)
    mounts: dict[str, SensorMount] = field(default_factory=default_mounts)

    def __post_init__(self):
        if self.kind not in VRU_KINDS:
            raise InputError(f"unknown VRU kind {self.kind!r}")
        if self.speed_mps is None:
            self.speed_mps = DEFAULT_SPEED_MPS[self.kind]
        for name in ("duration_s", "gnss_rate_hz", "radar_rate_hz", "course_scale_m",
                     "range_res_m", "azimuth_res_rad", "doppler_res_mps"):
            if not getattr(self, name) > 0:
                raise InputError(f"scenario {name} must be positive")
        for name in ("gnss_sigma_m", "detections_per_cycle", "clutter_rate", "speed_mps",
                     "ego_speed_mps", "amplitude_sigma_db"):
            if not getattr(self, name) >= 0:
                raise InputError(f"scenario {name} must be non-negative")
        if not self.mounts:
            raise InputError("scenario needs at least one sensor mount")

    @property
    def origin_fix(self) -> GeoFix:
        return GeoFix(0.0, *self.origin)


class EightCourse:
    """Gerono lemniscate x = s cos(th), y = s sin(th) cos(th), by arc length."""

    def __init__(self, scale_m: float, center=(0.0, 0.0), yaw_rad: float = 0.0,
                 resolution: int = 20001):
        if not scale_m > 0:
            raise InputError("course scale must be positive")
        self.scale = float(scale_m)
        self.center = (float(center[0]), float(center[1]))
        self.yaw = float(yaw_rad)
        self._theta = np.linspace(0.0, 2.0 * math.pi, resolution)
        ds = self._speed(self._theta)
        dth = np.diff(self._theta)
        self._s = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * dth)])
        self.length = float(self._s[-1])

    def _speed(self, th):
        return self.scale * np.sqrt(np.sin(th) ** 2 + np.cos(2 * th) ** 2)

    def theta_at(self, s):
        return np.interp(np.mod(s, self.length), self._s, self._theta)

    def local_at_theta(self, th):
        """Untransformed lemniscate point (course frame, no rotation/offset)."""
        th = np.asarray(th, dtype=float)
        return self.scale * np.cos(th), self.scale * np.sin(th) * np.cos(th)

    def state(self, s):
        """Position, heading and curvature at arc length ``s`` (array-friendly)."""
        th = self.theta_at(s)
        x, y = self.local_at_theta(th)
        dx, dy = -self.scale * np.sin(th), self.scale * np.cos(2 * th)
        ddx, ddy = -self.scale * np.cos(th), -2.0 * self.scale * np.sin(2 * th)
        curvature = (dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5
        c, sn = math.cos(self.yaw), math.sin(self.yaw)
        px = self.center[0] + c * x - sn * y
        py = self.center[1] + sn * x + c * y
        heading = wrap_angle(np.arctan2(dy, dx) + self.yaw)
        return px, py, heading, curvature


def gen_eight_course(scale_m: float, center=(0.0, 0.0), yaw_rad: float = 0.0) -> EightCourse:
    return EightCourse(scale_m, center, yaw_rad)


@dataclass
class TruthScene:
    config: ScenarioConfig
    course: EightCourse

    def vru_state(self, t):
        """True (x, y, yaw, yaw_rate) of the VRU body center in ENU."""
        v = self.config.speed_mps
        x, y, yaw, kappa = self.course.state(v * np.asarray(t, dtype=float))
        return x, y, yaw, v * kappa

    def ego_state(self, t):
        """Ego (x, y, yaw, speed); a straight constant-speed path from the origin."""
        cfg = self.config
        t = np.asarray(t, dtype=float)
        d = cfg.ego_speed_mps * t
        return (d * math.cos(cfg.ego_yaw_rad), d * math.sin(cfg.ego_yaw_rad),
                np.full_like(t, cfg.ego_yaw_rad), np.full_like(t, cfg.ego_speed_mps))

    def in_footprint(self, t: float, x, y) -> np.ndarray:
        """Whether ENU points lie in the true body footprint at time ``t``."""
        cx, cy, yaw, _ = self.vru_state(t)
        dx, dy = np.asarray(x) - cx, np.asarray(y) - cy
        u = math.cos(yaw) * dx + math.sin(yaw) * dy
        w = -math.sin(yaw) * dx + math.cos(yaw) * dy
        cfg = self.config
        eps = 1e-9
        if cfg.kind == PEDESTRIAN:
            return np.hypot(u, w) <= 0.5 * cfg.footprint_diameter_m + eps
        return ((np.abs(u) <= 0.5 * cfg.footprint_length_m + eps)
                & (np.abs(w) <= 0.5 * cfg.footprint_width_m + eps))


def gen_truth(config: ScenarioConfig) -> TruthScene:
    return TruthScene(config, EightCourse(config.course_scale_m, config.course_center,
                                          config.course_yaw_rad))


def _times(duration_s: float, rate_hz: float, phase_s: float = 0.0) -> np.ndarray:
    n = int(math.floor((duration_s - phase_s) * rate_hz + 1e-9)) + 1
    return phase_s + np.arange(n) / rate_hz


def _to_fixes(times, east, north, up, origin: GeoFix) -> list[GeoFix]:
    lat, lon, alt = enu_to_geodetic_arrays(east, north, up, origin)
    return [GeoFix(float(t), float(a), float(b), float(c))
            for t, a, b, c in zip(times, lat, lon, alt)]


def gen_gnss(truth: TruthScene, sigma_m: float | None = None, rate_hz: float | None = None,
             seed: int | None = None) -> list[GeoFix]:
    """VRU GNSS fixes: true position plus isotropic Gaussian noise."""
    cfg = truth.config
    sigma = cfg.gnss_sigma_m if sigma_m is None else sigma_m
    rate = cfg.gnss_rate_hz if rate_hz is None else rate_hz
    seed = cfg.seed if seed is None else seed
    times = _times(cfg.duration_s, rate)
    x, y, _, _ = truth.vru_state(times)
    rng = np.random.default_rng([seed, _VRU_GNSS])
    noise = rng.normal(0.0, 1.0, size=(len(times), 2)) * sigma
    up = np.full_like(times, cfg.antenna_height_m)
    return _to_fixes(times, x + noise[:, 0], y + noise[:, 1], up, cfg.origin_fix)


def gen_ego(truth: TruthScene) -> list[EgoFix]:
    cfg = truth.config
    times = _times(cfg.duration_s, cfg.gnss_rate_hz)
    x, y, yaw, speed = truth.ego_state(times)
    rng = np.random.default_rng([cfg.seed, _EGO_GNSS])
    noise = rng.normal(0.0, 1.0, size=(len(times), 2)) * cfg.gnss_sigma_m
    fixes = _to_fixes(times, x + noise[:, 0], y + noise[:, 1], np.zeros_like(times),
                      cfg.origin_fix)
    return [EgoFix(*f, float(a), float(v)) for f, a, v in zip(fixes, yaw, speed)]


def gen_imu_drift_track(truth: TruthScene, drift_rate: float, seed: int | None = None
                        ) -> list[GeoFix]:
    """GNSS track degraded by a 2-D random-walk bias of ``drift_rate`` m/sqrt(s).

    The RMS horizontal offset after ``t`` seconds is ``drift_rate * sqrt(t)``.
    """
    cfg = truth.config
    seed = cfg.seed if seed is None else seed
    times = _times(cfg.duration_s, cfg.gnss_rate_hz)
    x, y, _, _ = truth.vru_state(times)
    rng = np.random.default_rng([seed, _VRU_GNSS])
    noise = rng.normal(0.0, 1.0, size=(len(times), 2)) * cfg.gnss_sigma_m
    drift_rng = np.random.default_rng([seed, _DRIFT])
    dt = np.diff(times)
    steps = drift_rng.normal(0.0, 1.0, size=(len(dt), 2)) * (drift_rate * np.sqrt(dt / 2.0))[:, None]
    bias = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
    up = np.full_like(times, cfg.antenna_height_m)
    return _to_fixes(times, x + noise[:, 0] + bias[:, 0], y + noise[:, 1] + bias[:, 1], up,
                     cfg.origin_fix)


def _quantize(v, res: float):
    return np.round(np.asarray(v) / res) * res


def _reported_xy(px, py, sx, sy, syaw, cfg: ScenarioConfig):
    """ENU position a sensor at (sx, sy, syaw) reports for true points (px, py)."""
    dx, dy = px - sx, py - sy
    r_q = _quantize(np.hypot(dx, dy), cfg.range_res_m)
    a_q = _quantize(wrap_angle(np.arctan2(dy, dx) - syaw), cfg.azimuth_res_rad)
    return sx + r_q * np.cos(a_q + syaw), sy + r_q * np.sin(a_q + syaw)


def _sample_footprint(rng, n: int, cfg: ScenarioConfig):
    """Uniform points in the body footprint, body frame (u along heading)."""
    if cfg.kind == PEDESTRIAN:
        r = 0.5 * cfg.footprint_diameter_m * np.sqrt(rng.random(n))
        a = rng.uniform(-math.pi, math.pi, n)
        return r * np.cos(a), r * np.sin(a)
    return (rng.uniform(-0.5, 0.5, n) * cfg.footprint_length_m,
            rng.uniform(-0.5, 0.5, n) * cfg.footprint_width_m)


def gen_radar(truth: TruthScene, mounts: dict[str, SensorMount] | None = None,
              config: ScenarioConfig | None = None, seed: int | None = None):
    """Radar frames of all sensors, time-ordered, with aligned truth labels.

    Returns ``(frames, truth_labels)``; ``truth_labels`` is flat, in frame
    and detection order.
    """
    cfg = config or truth.config
    mounts = mounts or cfg.mounts
    seed = cfg.seed if seed is None else seed
    amp0 = cfg.vru_amplitude_db + (5.0 if cfg.kind == CYCLIST else 0.0)
    entries = []
    for si, (sensor_id, mount) in enumerate(sorted(mounts.items())):
        phase = si / (cfg.radar_rate_hz * len(mounts))
        body_rng = np.random.default_rng([seed, _BODY, si])
        clutter_rng = np.random.default_rng([seed, _CLUTTER, si])
        for t in _times(cfg.duration_s, cfg.radar_rate_hz, phase):
            entries.append((float(t), sensor_id, mount,
                            *_frame(truth, cfg, float(t), sensor_id, mount, body_rng,
                                    clutter_rng, amp0)))
    entries.sort(key=lambda e: (e[0], e[1]))
    frames, labels = [], []
    n_true = 0
    for t, sensor_id, _, dets, truth_flags in entries:
        frames.append(RadarFrame(t, sensor_id, tuple(dets)))
        for d, is_vru in zip(dets, truth_flags):
            n_true += is_vru
            labels.append(LabeledDetection(d, cfg.track_id, f"{cfg.track_id}/footprint")
                          if is_vru else LabeledDetection(d, BACKGROUND))
    if n_true == 0 and cfg.detections_per_cycle > 0:
        warnings.warn("VRU footprint never inside any sensor field of view", RuntimeWarning)
    return frames, labels


def _frame(truth: TruthScene, cfg: ScenarioConfig, t: float, sensor_id: str,
           mount: SensorMount, body_rng, clutter_rng, amp0: float):
    ex, ey, eyaw, espeed = (float(v) for v in truth.ego_state(t))
    ce, se = math.cos(eyaw), math.sin(eyaw)
    # sensor origin and boresight in ENU
    sx = ex + ce * mount.x_m - se * mount.y_m
    sy = ey + se * mount.x_m + ce * mount.y_m
    syaw = eyaw + mount.yaw_rad
    evx, evy = espeed * ce, espeed * se

    # body scatterers; a return is kept only if its reported (quantized)
    # position still lies in the true footprint, redrawing it otherwise
    cx, cy, yaw, yaw_rate = (float(v) for v in truth.vru_state(t))
    c, s = math.cos(yaw), math.sin(yaw)

    def reported_inside(u, w):
        qx, qy = _reported_xy(cx + c * u - s * w, cy + s * u + c * w, sx, sy, syaw, cfg)
        return truth.in_footprint(t, qx, qy)

    n_body = body_rng.poisson(cfg.detections_per_cycle)
    u, w = _sample_footprint(body_rng, n_body, cfg)
    bad = ~reported_inside(u, w)
    for _ in range(_MAX_REDRAWS):
        if not bad.any():
            break
        u[bad], w[bad] = _sample_footprint(body_rng, int(bad.sum()), cfg)
        bad[bad] = ~reported_inside(u[bad], w[bad])
    u, w = u[~bad], w[~bad]
    n_body = len(u)
    body_amp_noise = body_rng.normal(0.0, cfg.amplitude_sigma_db, n_body)
    bx = cx + c * u - s * w
    by = cy + s * u + c * w
    if n_body and not np.all(truth.in_footprint(t, *_reported_xy(bx, by, sx, sy, syaw, cfg))):
        raise InvariantError("body return reported outside the true footprint")
    vx = cfg.speed_mps * c - yaw_rate * (by - cy)
    vy = cfg.speed_mps * s + yaw_rate * (bx - cx)

    # static clutter, uniform over the field-of-view sector area
    n_cl = clutter_rng.poisson(cfg.clutter_rate)
    r_min = max(1.0, cfg.range_res_m)
    r_cl = np.sqrt(clutter_rng.uniform(r_min ** 2, mount.max_range_m ** 2, n_cl))
    a_cl = clutter_rng.uniform(-0.5 * mount.fov_rad, 0.5 * mount.fov_rad, n_cl)
    cl_amp_noise = clutter_rng.normal(0.0, cfg.amplitude_sigma_db, n_cl)
    qx = sx + r_cl * np.cos(a_cl + syaw)
    qy = sy + r_cl * np.sin(a_cl + syaw)

    px = np.concatenate([bx, qx])
    py = np.concatenate([by, qy])
    pvx = np.concatenate([vx, np.zeros(n_cl)])
    pvy = np.concatenate([vy, np.zeros(n_cl)])
    amp = np.concatenate([amp0 + body_amp_noise, cfg.clutter_amplitude_db + cl_amp_noise])
    is_vru = np.concatenate([np.ones(n_body, bool), np.zeros(n_cl, bool)])

    dx, dy = px - sx, py - sy
    rng_true = np.hypot(dx, dy)
    az_true = wrap_angle(np.arctan2(dy, dx) - syaw)
    ux, uy = dx / rng_true, dy / rng_true
    radial = (pvx - evx) * ux + (pvy - evy) * uy
    visible = ((np.abs(az_true) <= 0.5 * mount.fov_rad) & (rng_true <= mount.max_range_m)
               & (rng_true >= cfg.range_res_m))
    r_q = _quantize(rng_true, cfg.range_res_m)
    a_q = wrap_angle(_quantize(az_true, cfg.azimuth_res_rad))
    v_q = _quantize(radial, cfg.doppler_res_mps)
    amp = amp - 40.0 * np.log10(rng_true)

    idx = np.flatnonzero(visible)
    idx = idx[np.lexsort((a_q[idx], r_q[idx]))]
    dets = [RadarDetection(t, sensor_id, float(r_q[i]), float(a_q[i]), float(v_q[i]),
                           float(amp[i])) for i in idx]
    return dets, [bool(is_vru[i]) for i in idx]


@dataclass
class SimulatedScene:
    truth: TruthScene
    vru_track: VruTrack
    ego_fixes: list[EgoFix]
    frames: list[RadarFrame]
    truth_labels: list[LabeledDetection]


def simulate(config: ScenarioConfig) -> SimulatedScene:
    truth = gen_truth(config)
    track = VruTrack(config.track_id, config.kind, tuple(gen_gnss(truth)))
    frames, labels = gen_radar(truth)
    return SimulatedScene(truth, track, gen_ego(truth), frames, labels)
