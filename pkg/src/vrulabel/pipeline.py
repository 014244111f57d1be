"""End-to-end auto-labeling of radar detections from GNSS-tracked VRUs.

Processing order per scene: convert all GNSS to a local ENU frame anchored at
the first ego fix, smooth every track with a centered moving average, fit
natural cubic splines, then for each radar frame interpolate the ego pose and
every covering VRU position, estimate VRU motion, build the selection region
in vehicle coordinates and assign labels to the detections inside it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError, TimeAlignmentError
from .geomath import (EgoPose, EnuPoint, GeoFix, SensorMount, enu_to_vehicle,
                      geodetic_to_enu_arrays, polar_to_vehicle, wrap_angle)
from .regions import SPEED_GATE_MPS, SelectionRegion, contains_points, region_for
from .trajectory import SmoothedTrack, VruTrack, moving_average

log = logging.getLogger(__name__)

BACKGROUND = "BACKGROUND"


class RadarDetection(NamedTuple):
    time_s: float
    sensor_id: str
    range_m: float
    azimuth_rad: float
    radial_speed_mps: float
    amplitude_db: float


class RadarFrame(NamedTuple):
    time_s: float
    sensor_id: str
    detections: tuple[RadarDetection, ...]


class LabeledDetection(NamedTuple):
    detection: RadarDetection
    label: str
    region_id: str | None = None
    ambiguous: bool = False


class EgoFix(NamedTuple):
    """Ego GNSS fix plus the vehicle's own heading and speed."""

    time_s: float
    lat_deg: float
    lon_deg: float
    alt_m: float
    yaw_rad: float
    speed_mps: float

    def geo(self) -> GeoFix:
        return GeoFix(self.time_s, self.lat_deg, self.lon_deg, self.alt_m)


@dataclass
class PipelineConfig:
    smoothing_window: int = 9
    stationary_threshold_s: float = 2.0
    max_regression_distance_m: float = 0.25
    speed_gate_mps: float = SPEED_GATE_MPS
    time_tolerance_s: float = 0.05
    ego_offset_s: float = 0.0
    vru_offset_s: float = 0.0
    radar_offset_s: float = 0.0
    mounts: dict[str, SensorMount] = field(default_factory=dict)


@dataclass
class RunReport:
    frames_total: int = 0
    frames_processed: int = 0
    frames_skipped: int = 0
    skipped_no_ego: int = 0
    skipped_no_vru: int = 0
    frames_ambiguous: int = 0
    detections_total: int = 0
    detections_labeled: int = 0
    detections_ambiguous: int = 0
    misaligned: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


class EgoTrack:
    """Ego poses in ENU, linearly interpolated between smoothed fixes."""

    def __init__(self, fixes: Sequence[EgoFix], origin: GeoFix, window: int = 9,
                 time_offset_s: float = 0.0, tolerance_s: float = 0.05):
        if len(fixes) < 2:
            raise InputError("ego track needs at least 2 fixes")
        arr = np.array(fixes, dtype=float)
        self.times = arr[:, 0] + time_offset_s
        if not np.all(np.diff(self.times) > 0):
            raise InputError("ego fix times must be strictly increasing")
        e, n, _ = geodetic_to_enu_arrays(arr[:, 1], arr[:, 2], arr[:, 3], origin)
        self.xy = moving_average(np.column_stack([e, n]), window)
        self.yaw = arr[:, 4]
        self.speed = arr[:, 5]
        self.tolerance_s = tolerance_s

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def pose_at(self, t: float) -> EgoPose | None:
        """Interpolated pose, or ``None`` outside the track (beyond tolerance)."""
        lo, hi = self.span
        if t < lo - self.tolerance_s or t > hi + self.tolerance_s:
            return None
        t = min(max(t, lo), hi)
        j = int(np.searchsorted(self.times, t, side="right"))
        j = min(max(j, 1), len(self.times) - 1)
        t0, t1 = self.times[j - 1], self.times[j]
        w = (t - t0) / (t1 - t0)
        xy = (1 - w) * self.xy[j - 1] + w * self.xy[j]
        dyaw = wrap_angle(self.yaw[j] - self.yaw[j - 1])
        yaw = wrap_angle(self.yaw[j - 1] + w * dyaw)
        speed = (1 - w) * self.speed[j - 1] + w * self.speed[j]
        return EgoPose(t, EnuPoint(float(xy[0]), float(xy[1])), float(yaw), float(speed))


def label_frame(frame: RadarFrame, regions: Sequence[tuple[str, SelectionRegion]],
                mount: SensorMount) -> list[LabeledDetection]:
    """Label one frame against regions given in the vehicle frame.

    A detection inside several regions goes to the nearest region center and
    is flagged ambiguous; ties keep the first region in list order.
    """
    dets = frame.detections
    if not dets:
        return []
    if not regions:
        return [LabeledDetection(d, BACKGROUND) for d in dets]
    rng = np.array([d.range_m for d in dets])
    az = np.array([d.azimuth_rad for d in dets])
    x, y = polar_to_vehicle(rng, az, mount)
    inside = np.array([contains_points(reg, x, y) for _, reg in regions])
    hits = inside.sum(axis=0)
    out = []
    for i, d in enumerate(dets):
        if hits[i] == 0:
            out.append(LabeledDetection(d, BACKGROUND))
            continue
        if hits[i] == 1:
            k = int(np.argmax(inside[:, i]))
        else:
            dist = [math.hypot(x[i] - reg.center[0], y[i] - reg.center[1]) if inside[j, i]
                    else math.inf for j, (_, reg) in enumerate(regions)]
            k = int(np.argmin(dist))
        track_id, reg = regions[k]
        out.append(LabeledDetection(d, track_id, f"{track_id}/{reg.kind}", bool(hits[i] > 1)))
    return out


class Scene:
    """Preprocessed tracks of one scene, ready for per-frame queries."""

    def __init__(self, config: PipelineConfig, ego_fixes: Sequence[EgoFix],
                 vru_tracks: Sequence[VruTrack]):
        self.config = config
        self.origin = ego_fixes[0].geo()
        self.ego = EgoTrack(ego_fixes, self.origin, config.smoothing_window,
                            config.ego_offset_s, config.time_tolerance_s)
        ids = [t.id for t in vru_tracks]
        if len(set(ids)) != len(ids):
            raise InputError(f"duplicate VRU track ids: {ids}")
        if BACKGROUND in ids:
            raise InputError(f"track id {BACKGROUND!r} is reserved")
        self.tracks = []
        for track in vru_tracks:
            times, xy = track.to_enu(self.origin, config.vru_offset_s)
            self.tracks.append(SmoothedTrack.from_raw(
                track.id, times, xy, config.smoothing_window,
                max_distance_m=config.max_regression_distance_m,
                stationary_threshold_s=config.stationary_threshold_s,
                edge_tolerance_s=config.time_tolerance_s, kind=track.kind))

    def regions_at(self, t: float, pose: EgoPose) -> list[tuple[str, SelectionRegion]]:
        out = []
        for track in self.tracks:
            if not track.covers(t):
                continue
            x, y = track.position_at(t)
            m = track.estimate_motion(t)
            center = enu_to_vehicle(EnuPoint(x, y), pose)
            m_vehicle = m._replace(yaw_rad=wrap_angle(m.yaw_rad - pose.yaw_rad))
            out.append((track.track_id, region_for(track.kind, center, m_vehicle,
                                                   self.config.speed_gate_mps)))
        return out


def _overlaps(a: tuple[float, float], b: tuple[float, float], tol: float) -> bool:
    return a[0] - tol <= b[1] and b[0] - tol <= a[1]


def run(config: PipelineConfig, ego_fixes: Sequence[EgoFix], vru_tracks: Sequence[VruTrack],
        radar_frames: Sequence[RadarFrame]) -> tuple[list[LabeledDetection], RunReport]:
    """Label every radar frame of a scene.

    Frames outside the ego or VRU spans are skipped and counted. If the radar
    frames share no time span with the ego track or with any VRU track, a
    :class:`TimeAlignmentError` is raised carrying the (all-skipped) report.
    """
    report = RunReport(frames_total=len(radar_frames))
    if not radar_frames:
        return [], report
    scene = Scene(config, ego_fixes, vru_tracks)
    frames = [f._replace(time_s=f.time_s + config.radar_offset_s) for f in radar_frames]
    times = [f.time_s for f in frames]
    radar_span = (min(times), max(times))
    tol = config.time_tolerance_s
    if not _overlaps(radar_span, scene.ego.span, tol) or not any(
            _overlaps(radar_span, t.span, tol) for t in scene.tracks):
        report.frames_skipped = len(frames)
        report.misaligned = True
        raise TimeAlignmentError(
            f"radar frames [{radar_span[0]:.3f}, {radar_span[1]:.3f}] s do not overlap "
            f"the ego track {scene.ego.span} or any VRU track "
            f"{[t.span for t in scene.tracks]}", report)

    labeled: list[LabeledDetection] = []
    for frame, raw in zip(frames, radar_frames):
        pose = scene.ego.pose_at(frame.time_s)
        if pose is None:
            report.frames_skipped += 1
            report.skipped_no_ego += 1
            continue
        regions = scene.regions_at(frame.time_s, pose)
        if not regions:
            report.frames_skipped += 1
            report.skipped_no_vru += 1
            continue
        mount = config.mounts.get(frame.sensor_id)
        if mount is None:
            raise InputError(f"no mount configured for sensor {frame.sensor_id!r}")
        # labels carry the detections exactly as read, before any clock offset
        out = label_frame(raw, regions, mount)
        report.frames_processed += 1
        report.detections_total += len(out)
        n_amb = sum(1 for ld in out if ld.ambiguous)
        report.detections_ambiguous += n_amb
        report.frames_ambiguous += n_amb > 0
        report.detections_labeled += sum(1 for ld in out if ld.label != BACKGROUND)
        labeled.extend(out)
    if report.frames_skipped:
        log.info("skipped %d of %d frames (no ego: %d, no VRU: %d)", report.frames_skipped,
                 report.frames_total, report.skipped_no_ego, report.skipped_no_vru)
    return labeled, report
