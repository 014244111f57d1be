"""Labeling accuracy and per-cycle radar feature statistics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InputError
from .geomath import EgoPose, SensorMount, compensate_doppler_arrays, polar_to_vehicle
from .pipeline import BACKGROUND, LabeledDetection
from .stats import TTestResult, t_test_unpaired

log = logging.getLogger(__name__)

CHI2_2DOF_95 = 5.991
FEATURES = ("mean_power_db", "doppler_std_mps", "conf_major_m", "conf_minor_m",
            "weighted_count")


@dataclass(frozen=True)
class EvalCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None


def precision_recall(auto_labels: Sequence[str], reference_labels: Sequence[str]) -> EvalCounts:
    """Count detection-level agreement between two aligned label streams.

    A detection given the wrong track id counts both as a false positive and
    as a false negative.
    """
    if len(auto_labels) != len(reference_labels):
        raise InputError(f"label streams differ in length: {len(auto_labels)} auto vs "
                         f"{len(reference_labels)} reference")
    tp = fp = fn = 0
    for a, r in zip(auto_labels, reference_labels):
        if a == r:
            tp += a != BACKGROUND
            continue
        fp += a != BACKGROUND
        fn += r != BACKGROUND
    return EvalCounts(tp, fp, fn)


def macro_average(per_scene: Iterable[EvalCounts]) -> tuple[float | None, float | None]:
    """Unweighted mean of per-scene precision and recall; undefined scores are skipped."""
    per_scene = list(per_scene)
    prs = [c.precision for c in per_scene if c.precision is not None]
    res = [c.recall for c in per_scene if c.recall is not None]
    if len(prs) < len(per_scene) or len(res) < len(per_scene):
        log.warning("macro average skips %d scene(s) without precision and %d without recall",
                    len(per_scene) - len(prs), len(per_scene) - len(res))
    return (math.fsum(prs) / len(prs) if prs else None,
            math.fsum(res) / len(res) if res else None)


def path_loss_correct(amplitude_db, range_m, ref_range_m: float = 1.0):
    """Add the two-way free-space loss, 40 log10(R / R_ref), back onto an amplitude."""
    r = np.asarray(range_m, dtype=float)
    if np.any(~(r > 0)) or not ref_range_m > 0:
        raise InputError("path-loss correction needs positive ranges")
    out = np.asarray(amplitude_db, dtype=float) + 40.0 * np.log10(r / ref_range_m)
    return float(out) if out.ndim == 0 else out


class FeatureVector(NamedTuple):
    mean_power_db: float
    doppler_std_mps: float
    conf_major_m: float
    conf_minor_m: float
    weighted_count: float


def confidence_axes(x, y, chi2: float = CHI2_2DOF_95) -> tuple[float, float]:
    """Full major/minor axis lengths of the confidence ellipse of a 2-D point set."""
    pts = np.column_stack([np.asarray(x, float), np.asarray(y, float)])
    if len(pts) < 2:
        return 0.0, 0.0
    cov = np.cov(pts, rowvar=False, ddof=1)
    lam = np.clip(np.linalg.eigvalsh(cov), 0.0, None)
    return 2.0 * math.sqrt(chi2 * lam[1]), 2.0 * math.sqrt(chi2 * lam[0])


def feature_vector(detections: Sequence, mount: SensorMount, pose: EgoPose | None = None,
                   ref_range_m: float = 10.0) -> FeatureVector | None:
    """Features of the detections of one object in one sensor scan.

    Returns ``None`` for an empty scan. Doppler values are ego-compensated
    with ``pose`` (a static ego when omitted).
    """
    dets = [getattr(d, "detection", d) for d in detections]
    n = len(dets)
    if n == 0:
        return None
    rng = np.array([d.range_m for d in dets])
    az = np.array([d.azimuth_rad for d in dets])
    power = path_loss_correct(np.array([d.amplitude_db for d in dets]), rng)
    doppler = compensate_doppler_arrays([d.radial_speed_mps for d in dets], az,
                                        pose.speed_mps if pose is not None else 0.0, mount)
    x, y = polar_to_vehicle(rng, az, mount)
    major, minor = confidence_axes(x, y)
    return FeatureVector(
        mean_power_db=float(np.mean(power)),
        doppler_std_mps=float(np.std(doppler, ddof=1)) if n > 1 else 0.0,
        conf_major_m=major,
        conf_minor_m=minor,
        weighted_count=n * float(np.mean(rng)) / ref_range_m,
    )


class CycleFeatures(NamedTuple):
    time_s: float
    sensor_id: str
    track_id: str
    n: int
    features: FeatureVector


def cycle_features(labeled: Iterable[LabeledDetection], mounts: dict[str, SensorMount],
                   ego=None, ref_range_m: float = 10.0) -> list[CycleFeatures]:
    """Per measurement cycle and VRU, the feature vector of its labeled detections.

    Each sensor scan is its own cycle. ``ego`` is anything with a
    ``pose_at(t)`` method; without one the ego is taken as static.
    """
    groups: dict[tuple, list] = {}
    for ld in labeled:
        if ld.label == BACKGROUND:
            continue
        d = ld.detection
        groups.setdefault((d.time_s, d.sensor_id, ld.label), []).append(d)
    out = []
    for (t, sensor, track), dets in groups.items():
        mount = mounts.get(sensor, SensorMount())
        pose = ego.pose_at(t) if ego is not None else None
        fv = feature_vector(dets, mount, pose, ref_range_m)
        out.append(CycleFeatures(t, sensor, track, len(dets), fv))
    return out


def normalize_to_baseline(values, baseline_values) -> np.ndarray:
    base = float(np.mean(np.asarray(baseline_values, dtype=float)))
    if base == 0.0 or not math.isfinite(base):
        raise InputError(f"cannot normalize to baseline mean {base}")
    return np.asarray(values, dtype=float) / base


class FeatureComparison(NamedTuple):
    feature: str
    a_mean: float
    a_std: float
    b_mean: float
    b_std: float
    test: TTestResult


def compare_features(a: Sequence[FeatureVector], b: Sequence[FeatureVector],
                     alpha: float = 0.05, welch: bool = False) -> list[FeatureComparison]:
    """Compare two sets of cycle features; ``b`` is the baseline.

    Means and standard deviations are normalized to the baseline mean of each
    feature, so every ``b_mean`` is 1.
    """
    rows = []
    for i, name in enumerate(FEATURES):
        va = np.array([fv[i] for fv in a], dtype=float)
        vb = np.array([fv[i] for fv in b], dtype=float)
        na = normalize_to_baseline(va, vb)
        nb = normalize_to_baseline(vb, vb)
        res = t_test_unpaired(va, vb, alpha, welch)
        # the baseline mean is 1 by construction; pin it rather than report rounding
        rows.append(FeatureComparison(
            name, float(na.mean()), float(na.std(ddof=1)) if len(na) > 1 else 0.0,
            1.0, float(nb.std(ddof=1)) if len(nb) > 1 else 0.0, res))
    return rows
