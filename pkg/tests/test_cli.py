import csv
import json

import pytest

from scenes import cli_scene, write_sim_config
from vrulabel import cli, formats
from vrulabel.analysis import FEATURES
from vrulabel.cli import main
from vrulabel.errors import InvariantError
from vrulabel.pipeline import BACKGROUND

SHORT = {"duration_s": 8.0, "seed": 5}


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    return cli_scene(main, tmp_path_factory.mktemp("cli"), **SHORT)


def test_simulate_writes_manifest(scene):
    scene_dir, _ = scene
    names = sorted(p.name for p in scene_dir.iterdir())
    assert names == ["ego.csv", "manifest.json", "radar.jsonl", "truth.jsonl", "vru_vru1.csv"]
    man = json.loads((scene_dir / "manifest.json").read_text())
    assert man["seed"] == 5 and man["kind"] == "pedestrian"
    assert man["schema_version"] == 1
    assert set(man["sha256"]) == {"ego.csv", "radar.jsonl", "truth.jsonl", "vru_vru1.csv"}


def test_simulate_same_seed_same_bytes(tmp_path, scene):
    scene_dir, _ = scene
    cfg = write_sim_config(tmp_path / "sim.cfg", **SHORT)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    for p in scene_dir.iterdir():
        assert (tmp_path / "b" / p.name).read_bytes() == p.read_bytes()


def test_simulate_cyclist(tmp_path):
    cfg = write_sim_config(tmp_path / "sim.cfg", kind="cyclist", duration_s=3.0)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "manifest.json").read_text())["kind"] == "cyclist"


def test_label_processes_every_frame(scene, capsys):
    scene_dir, out = scene
    report = json.loads(out.with_name(out.name + ".report.json").read_text())
    n_frames = len(formats.read_frames(scene_dir / "radar.jsonl"))
    assert report["frames_total"] == n_frames == report["frames_processed"]
    assert len(formats.read_labels(out)) == report["detections_total"]


def test_label_with_explicit_inputs(tmp_path, scene):
    scene_dir, out = scene
    cfg = tmp_path / "label.cfg"
    cfg.write_text(f"input.ego = {scene_dir / 'ego.csv'}\n"
                   f"input.radar = {scene_dir / 'radar.jsonl'}\n"
                   f"input.vru.vru1.path = {scene_dir / 'vru_vru1.csv'}\n"
                   "input.vru.vru1.kind = pedestrian\n"
                   f"output.labels = {tmp_path / 'o.jsonl'}\n")
    assert main(["label", "--config", str(cfg)]) == 0
    assert (tmp_path / "o.jsonl").read_bytes() == out.read_bytes()


def test_label_missing_vru_file(tmp_path, scene, capsys):
    scene_dir, _ = scene
    cfg = tmp_path / "label.cfg"
    cfg.write_text(f"input.ego = {scene_dir / 'ego.csv'}\n"
                   f"input.radar = {scene_dir / 'radar.jsonl'}\n"
                   "input.vru.p.path = missing.csv\ninput.vru.p.kind = pedestrian\n")
    out = tmp_path / "o.jsonl"
    assert main(["label", "--config", str(cfg), "--out", str(out)]) == 2
    assert "missing.csv" in capsys.readouterr().err
    assert not out.exists()


def test_label_misaligned_exit_code(tmp_path, scene, capsys):
    cfg = tmp_path / "label.cfg"
    cfg.write_text(f"input.manifest = {scene[0] / 'manifest.json'}\nclock.vru_offset_s = 100\n")
    out = tmp_path / "o.jsonl"
    assert main(["label", "--config", str(cfg), "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert '"misaligned": true' in err and not out.exists()


def test_internal_error_exit_code(tmp_path, monkeypatch):
    def boom(_):
        raise InvariantError("footprint escaped")
    monkeypatch.setattr(cli, "simulate", boom)
    cfg = write_sim_config(tmp_path / "sim.cfg")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 4


def test_noiseless_truth_positives_all_labeled(tmp_path):
    scene_dir, out = cli_scene(main, tmp_path, gnss_sigma_m=0.0, clutter_rate=0.0, duration_s=8)
    auto = formats.read_labels(out)
    truth = formats.read_labels(scene_dir / "truth.jsonl")
    assert not [a for a, t in zip(auto, truth) if t.label != BACKGROUND and a.label == BACKGROUND]


def test_evaluate_truth_against_itself(tmp_path, scene):
    truth = scene[0] / "truth.jsonl"
    out = tmp_path / "eval.csv"
    assert main(["evaluate", "--auto", str(truth), "--truth", str(truth), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[-1]["scene"] == "macro"
    assert float(rows[-1]["precision"]) == 1.0 and float(rows[-1]["recall"]) == 1.0


def test_evaluate_scene(tmp_path, scene):
    scene_dir, auto = scene
    out = tmp_path / "eval.csv"
    assert main(["evaluate", "--auto", str(auto), "--truth", str(scene_dir / "truth.jsonl"),
                 "--out", str(out)]) == 0
    row = read_csv(out)[0]
    assert float(row["recall"]) >= 0.99 and int(row["frames_unlabeled"]) == 0


def test_evaluate_rejects_unpaired(tmp_path, scene):
    truth = str(scene[0] / "truth.jsonl")
    assert main(["evaluate", "--auto", truth, truth, "--truth", truth]) == 2


def test_features_and_compare(tmp_path, scene):
    scene_dir, auto = scene
    feats = tmp_path / "f.csv"
    cfg = tmp_path / "f.cfg"
    cfg.write_text(f"input.manifest = {scene_dir / 'manifest.json'}\n")
    assert main(["features", "--labels", str(auto), "--config", str(cfg),
                 "--out", str(feats)]) == 0
    rows = read_csv(feats)
    assert rows and all(int(r["n"]) >= 1 for r in rows)

    cmp_out = tmp_path / "cmp.csv"
    assert main(["compare", "--a", str(feats), "--b", str(feats), "--out", str(cmp_out)]) == 0
    res = read_csv(cmp_out)
    assert len(res) == 5
    assert all(float(r["p_two_sided"]) == 1.0 and r["significant"] == "false" for r in res)
    assert all(float(r["b_mean"]) == 1.0 for r in res)


def test_compare_two_scenes(tmp_path, scene):
    _, other = cli_scene(main, tmp_path, kind="cyclist", duration_s=8, seed=2)
    fa, fb = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["features", "--labels", str(other), "--out", str(fa)]) == 0
    assert main(["features", "--labels", str(scene[1]), "--out", str(fb)]) == 0
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--a", str(fa), "--b", str(fb), "--welch", "--out", str(out)]) == 0
    res = read_csv(out)
    assert tuple(r["feature"] for r in res) == FEATURES
    assert all(0.0 <= float(r["p_two_sided"]) <= 1.0 for r in res)


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("sim.bogus = 1\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
