import math
import numpy as np
import pytest

from vrulabel.geomath import geodetic_to_enu_arrays
from vrulabel.pipeline import BACKGROUND
from vrulabel.regions import CYCLIST_BASE_WIDTH_M, CYCLIST_LENGTH_M, PED_BASE_MINOR_M
from vrulabel.simulator import (EightCourse, ScenarioConfig, gen_eight_course, gen_gnss,
                                gen_imu_drift_track, gen_radar, gen_truth, simulate,
                                _quantize)


def short(**kw):
    kw.setdefault("duration_s", 10.0)
    return ScenarioConfig(**kw)


def enu_of(fixes, origin):
    arr = np.array(fixes)
    e, n, _ = geodetic_to_enu_arrays(arr[:, 1], arr[:, 2], arr[:, 3], origin)
    return arr[:, 0], np.column_stack([e, n])


def test_course_start_point():
    c = gen_eight_course(10.0)
    x, y, _, _ = c.state(0.0)
    assert (float(x), float(y)) == pytest.approx((10.0, 0.0), abs=1e-12)


def test_course_point_symmetry():
    c = EightCourse(7.0)
    th = np.linspace(0, 2 * math.pi, 101)
    x, y = c.local_at_theta(th)
    xm, ym = c.local_at_theta(math.pi - th)
    assert np.allclose(xm, -x, atol=1e-12) and np.allclose(ym, -y, atol=1e-12)


def test_course_arc_length_against_polyline():
    th = np.linspace(0, 2 * math.pi, 1_000_001)
    x, y = 10 * np.cos(th), 10 * np.sin(th) * np.cos(th)
    polyline = np.sum(np.hypot(np.diff(x), np.diff(y)))
    assert gen_eight_course(10.0).length == pytest.approx(polyline, rel=0.01)


def test_course_self_intersects_at_center():
    c = EightCourse(10.0, center=(3.0, 4.0), yaw_rad=0.4)
    x, y, _, _ = c.state(np.array([c.length / 4, 3 * c.length / 4]))
    assert np.allclose(x, 3.0, atol=1e-3) and np.allclose(y, 4.0, atol=1e-3)


def test_constant_speed_traversal():
    truth = gen_truth(short(kind="cyclist"))
    t = np.arange(0, 10, 0.01)
    x, y, _, _ = truth.vru_state(t)
    speeds = np.hypot(np.diff(x), np.diff(y)) / 0.01
    assert np.allclose(speeds, 3.0, rtol=1e-3)


def test_noiseless_gnss_on_true_path_and_all_positive():
    cfg = short(gnss_sigma_m=0.0, clutter_rate=0.0)
    sc = simulate(cfg)
    t, xy = enu_of(sc.vru_track.fixes, cfg.origin_fix)
    x, y, _, _ = sc.truth.vru_state(t)
    assert np.max(np.hypot(xy[:, 0] - x, xy[:, 1] - y)) < 1e-6
    assert sc.truth_labels and all(ld.label == cfg.track_id for ld in sc.truth_labels)


def test_fixed_seed_is_deterministic():
    a, b = simulate(short(seed=9)), simulate(short(seed=9))
    assert a.frames == b.frames and a.truth_labels == b.truth_labels
    assert a.vru_track == b.vru_track and a.ego_fixes == b.ego_fixes
    assert simulate(short(seed=10)).frames != a.frames


def test_clutter_does_not_perturb_gnss():
    a = simulate(short(seed=3, clutter_rate=0.0))
    b = simulate(short(seed=3, clutter_rate=20.0))
    assert a.vru_track == b.vru_track


def test_truth_positive_count_per_cycle():
    cfg = ScenarioConfig(duration_s=60.0)
    frames, labels = gen_radar(gen_truth(cfg))
    per_frame = {}
    for ld in labels:
        key = (ld.detection.time_s, ld.detection.sensor_id)
        per_frame[key] = per_frame.get(key, 0) + (ld.label != BACKGROUND)
    visible = [n for n in per_frame.values() if n > 0]
    assert 0.5 * cfg.detections_per_cycle <= np.mean(visible) <= 1.5 * cfg.detections_per_cycle


def test_truth_labels_consistent():
    sc = simulate(short())
    flat = [d for f in sc.frames for d in f.detections]
    assert [ld.detection for ld in sc.truth_labels] == flat
    for ld in sc.truth_labels:
        assert (ld.label != BACKGROUND) == (ld.region_id is not None)


def test_quantization_grid():
    cfg = short()
    sc = simulate(cfg)
    r = np.array([d.range_m for f in sc.frames for d in f.detections])
    a = np.array([d.azimuth_rad for f in sc.frames for d in f.detections])
    v = np.array([d.radial_speed_mps for f in sc.frames for d in f.detections])
    for vals, res in ((r, cfg.range_res_m), (a, cfg.azimuth_res_rad), (v, cfg.doppler_res_mps)):
        k = vals / res
        assert np.allclose(k, np.round(k), atol=1e-6)


def test_quantization_error_bound():
    rng = np.random.default_rng(1)
    for res in (0.15, math.radians(2.4), 0.17):
        v = rng.uniform(-50, 50, 100_000)
        assert np.max(np.abs(_quantize(v, res) - v)) <= res / 2 + 1e-12


@pytest.mark.parametrize("kind", ["pedestrian", "cyclist"])
def test_truth_positives_reported_inside_footprint(kind):
    cfg = short(kind=kind, duration_s=20.0)
    truth = gen_truth(cfg)
    frames, labels = gen_radar(truth)
    n = 0
    for ld in labels:
        if ld.label == BACKGROUND:
            continue
        d = ld.detection
        m = cfg.mounts[d.sensor_id]
        ex, ey, eyaw, _ = (float(v) for v in truth.ego_state(d.time_s))
        vx = m.x_m + d.range_m * math.cos(d.azimuth_rad + m.yaw_rad)
        vy = m.y_m + d.range_m * math.sin(d.azimuth_rad + m.yaw_rad)
        x = ex + math.cos(eyaw) * vx - math.sin(eyaw) * vy
        y = ey + math.sin(eyaw) * vx + math.cos(eyaw) * vy
        assert truth.in_footprint(d.time_s, x, y)
        n += 1
    assert n > 1000


def test_footprints_inside_minimal_regions():
    ped, cyc = ScenarioConfig(), ScenarioConfig(kind="cyclist")
    assert ped.footprint_diameter_m / 2 < PED_BASE_MINOR_M / 2
    assert cyc.footprint_length_m < CYCLIST_LENGTH_M
    assert cyc.footprint_width_m < CYCLIST_BASE_WIDTH_M


def test_footprint_out_of_view_warns():
    cfg = short(course_center=(-60.0, 0.0), clutter_rate=1.0)
    with pytest.warns(RuntimeWarning, match="field of view"):
        _, labels = gen_radar(gen_truth(cfg))
    assert all(ld.label == BACKGROUND for ld in labels)


def test_drift_zero_matches_gnss():
    truth = gen_truth(short())
    assert gen_imu_drift_track(truth, 0.0) == gen_gnss(truth)


def test_drift_rms_grows_like_random_walk():
    cfg = ScenarioConfig(duration_s=120.0, gnss_rate_hz=1.0, gnss_sigma_m=0.0)
    truth = gen_truth(cfg)
    t, base = enu_of(gen_gnss(truth), cfg.origin_fix)
    offsets = []
    for seed in range(1000):
        _, xy = enu_of(gen_imu_drift_track(truth, 0.05, seed=seed), cfg.origin_fix)
        offsets.append(np.hypot(*(xy - base).T))
    rms = np.sqrt(np.mean(np.square(offsets), axis=0))
    assert rms[-1] == pytest.approx(0.05 * math.sqrt(120.0), rel=0.1)
    checkpoints = rms[[10, 30, 60, 90, 120]]
    assert np.all(np.diff(checkpoints) > 0)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(kind="horse")
    with pytest.raises(ValueError):
        ScenarioConfig(gnss_rate_hz=0)
    assert ScenarioConfig(kind="cyclist").speed_mps == 3.0
    assert ScenarioConfig().speed_mps == 1.4
