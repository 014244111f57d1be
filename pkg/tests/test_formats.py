import math

import pytest

from vrulabel import formats
from vrulabel.config import format_config, parse_config
from vrulabel.errors import InputError
from vrulabel.geomath import GeoFix, SensorMount
from vrulabel.pipeline import BACKGROUND, EgoFix, LabeledDetection, RadarDetection, RadarFrame

D1 = RadarDetection(0.1, "L", 7.35, -0.2094395102393195, 0.34, 51.123456789012345)
D2 = RadarDetection(0.1, "L", 12.0, 0.5, -1.7, 48.0)


def test_float_repr_roundtrip():
    for x in (0.1, 1 / 3, math.pi * 1e-9, -2.5e300, 48.4 + 1e-13):
        assert float(formats.fmt_float(x)) == x
    with pytest.raises(InputError):
        formats.fmt_float(math.nan)


def test_gnss_roundtrip(tmp_path):
    fixes = [GeoFix(0.05 * i, 48.4 + 1e-7 * i, 9.95 - 3e-7 * i, 501.8) for i in range(20)]
    formats.write_gnss(tmp_path / "g.csv", fixes)
    assert formats.read_gnss(tmp_path / "g.csv") == fixes


def test_ego_roundtrip(tmp_path):
    fixes = [EgoFix(0.05 * i, 48.4, 9.95 + 1e-6 * i, 0.0, 0.123, 1.5) for i in range(5)]
    formats.write_ego(tmp_path / "e.csv", fixes)
    assert formats.read_ego(tmp_path / "e.csv") == fixes


def test_frames_roundtrip(tmp_path):
    frames = [RadarFrame(0.1, "L", (D1, D2)), RadarFrame(0.2, "R", ())]
    formats.write_frames(tmp_path / "f.jsonl", frames)
    assert formats.read_frames(tmp_path / "f.jsonl") == frames


def test_labels_roundtrip(tmp_path):
    labeled = [LabeledDetection(D1, "v1", "v1/ellipse", True), LabeledDetection(D2, BACKGROUND)]
    formats.write_labels(tmp_path / "l.jsonl", labeled)
    assert formats.read_labels(tmp_path / "l.jsonl") == labeled


def test_jsonl_header_required():
    body = formats.format_frames([RadarFrame(0.1, "L", (D1,))])
    with pytest.raises(InputError, match="header"):
        formats.parse_frames(body.split("\n", 1)[1])
    with pytest.raises(InputError):
        formats.parse_labels(body)


def test_unknown_field_named():
    body = formats.format_frames([RadarFrame(0.1, "L", (D1,))])
    bad = body.replace('"range_m"', '"rcs_dbsm":1,"range_m"')
    with pytest.raises(InputError, match="rcs_dbsm"):
        formats.parse_frames(bad)


def test_label_region_consistency_enforced():
    text = formats.format_labels([LabeledDetection(D1, "v1", "v1/circle")])
    with pytest.raises(InputError):
        formats.parse_labels(text.replace('"v1/circle"', "null"))
    text = formats.format_labels([LabeledDetection(D1, BACKGROUND)])
    with pytest.raises(InputError):
        formats.parse_labels(text.replace('"region_id":null', '"region_id":"x/circle"'))


def test_unknown_and_missing_columns_named(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("time_s,lat_deg,lon_deg,alt_m,hdop\n0,1,2,3,4\n")
    with pytest.raises(InputError, match="hdop"):
        formats.read_gnss(p)
    p.write_text("time_s,lat_deg,lon_deg\n0,1,2\n")
    with pytest.raises(InputError, match="alt_m"):
        formats.read_gnss(p)


def test_bad_numbers_rejected(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("time_s,lat_deg,lon_deg,alt_m\n0,abc,2,3\n")
    with pytest.raises(InputError, match="lat_deg"):
        formats.read_gnss(p)
    p.write_text("time_s,lat_deg,lon_deg,alt_m\n0,inf,2,3\n")
    with pytest.raises(InputError):
        formats.read_gnss(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        formats.read_frames(tmp_path / "nope.jsonl")


def test_atomic_write_leaves_no_temp(tmp_path):
    formats.atomic_write_text(tmp_path / "a" / "x.txt", "hello\n")
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == ["x.txt"]


# -- config ------------------------------------------------------------------------

def test_config_roundtrip():
    text = """
    schema_version = 1
    pipeline.smoothing_window = 7      # shorter filter
    pipeline.stationary_threshold_s = 1.5
    clock.radar_offset_s = -0.02
    analysis.alpha = 0.01
    analysis.welch = true
    sensor.L.x_m = 3.6
    sensor.L.yaw_rad = 0.4363323129985824
    """
    cfg = parse_config(text)
    again = parse_config(format_config(cfg))
    assert again.pipeline == cfg.pipeline
    assert (again.alpha, again.welch, again.mounts) == (0.01, True, cfg.mounts)
    assert cfg.mounts["L"] == SensorMount(x_m=3.6, yaw_rad=0.4363323129985824)


def test_config_defaults():
    cfg = parse_config("")
    p = cfg.pipeline
    assert (p.smoothing_window, p.stationary_threshold_s, p.max_regression_distance_m,
            p.speed_gate_mps) == (9, 2.0, 0.25, 0.05)
    assert set(p.mounts) == {"front_left", "front_right"}


@pytest.mark.parametrize("text, fragment", [
    ("pipeline.smoothing_windw = 9", "smoothing_windw"),
    ("pipeline.smoothing_window = 9\npipeline.smoothing_window = 7", "duplicate"),
    ("pipeline.smoothing_window = 8", "odd"),
    ("analysis.alpha = lots", "analysis.alpha"),
    ("schema_version = 2", "schema_version"),
    ("input.vru.p1.path = a.csv", "p1"),
    ("just words", "key = value"),
])
def test_config_rejections(text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_config(text)


def test_config_sim_keys():
    cfg = parse_config("sim.kind = cyclist\nsim.course_center_x_m = 20\nsim.azimuth_res_deg = 1.2")
    sc = cfg.scenario
    assert sc.kind == "cyclist" and sc.speed_mps == 3.0
    assert sc.course_center == (20.0, 0.0)
    assert sc.azimuth_res_rad == pytest.approx(math.radians(1.2))
