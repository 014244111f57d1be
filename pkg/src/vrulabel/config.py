"""Flat ``key = value`` configuration files with dotted section names.

Example::

    schema_version = 1
    input.manifest = scene/manifest.json
    pipeline.smoothing_window = 9
    sensor.front_left.x_m = 3.6

Relative paths are resolved against the directory of the config file.
Unknown keys are rejected by name.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import InputError
from .geomath import SensorMount
from .pipeline import PipelineConfig
from .simulator import ScenarioConfig, default_mounts

SCHEMA_VERSION = 1

_PIPELINE_KEYS = {
    "pipeline.smoothing_window": ("smoothing_window", int),
    "pipeline.stationary_threshold_s": ("stationary_threshold_s", float),
    "pipeline.max_regression_distance_m": ("max_regression_distance_m", float),
    "pipeline.speed_gate_mps": ("speed_gate_mps", float),
    "pipeline.time_tolerance_s": ("time_tolerance_s", float),
    "clock.ego_offset_s": ("ego_offset_s", float),
    "clock.vru_offset_s": ("vru_offset_s", float),
    "clock.radar_offset_s": ("radar_offset_s", float),
}
_ANALYSIS_KEYS = {
    "analysis.alpha": ("alpha", float),
    "analysis.weighted_count_ref_m": ("weighted_count_ref_m", float),
    "analysis.welch": ("welch", "bool"),
}
_SIM_KEYS = {
    "sim.kind": ("kind", str),
    "sim.speed_mps": ("speed_mps", float),
    "sim.course_scale_m": ("course_scale_m", float),
    "sim.course_center_x_m": None,
    "sim.course_center_y_m": None,
    "sim.course_yaw_rad": ("course_yaw_rad", float),
    "sim.duration_s": ("duration_s", float),
    "sim.gnss_rate_hz": ("gnss_rate_hz", float),
    "sim.gnss_sigma_m": ("gnss_sigma_m", float),
    "sim.radar_rate_hz": ("radar_rate_hz", float),
    "sim.range_res_m": ("range_res_m", float),
    "sim.azimuth_res_deg": None,
    "sim.doppler_res_mps": ("doppler_res_mps", float),
    "sim.detections_per_cycle": ("detections_per_cycle", float),
    "sim.clutter_rate": ("clutter_rate", float),
    "sim.seed": ("seed", int),
    "sim.track_id": ("track_id", str),
    "sim.footprint_diameter_m": ("footprint_diameter_m", float),
    "sim.footprint_length_m": ("footprint_length_m", float),
    "sim.footprint_width_m": ("footprint_width_m", float),
    "sim.vru_amplitude_db": ("vru_amplitude_db", float),
    "sim.clutter_amplitude_db": ("clutter_amplitude_db", float),
    "sim.amplitude_sigma_db": ("amplitude_sigma_db", float),
    "sim.ego_speed_mps": ("ego_speed_mps", float),
    "sim.ego_yaw_rad": ("ego_yaw_rad", float),
    "sim.origin_lat_deg": None,
    "sim.origin_lon_deg": None,
    "sim.origin_alt_m": None,
}
_PATH_KEYS = ("input.ego", "input.radar", "input.manifest", "output.labels")
_SENSOR_RE = re.compile(r"^sensor\.([A-Za-z0-9_\-]+)\.(x_m|y_m|yaw_rad|fov_rad|max_range_m)$")
_VRU_RE = re.compile(r"^input\.vru\.([A-Za-z0-9_\-]+)\.(path|kind)$")


@dataclass
class VruInput:
    id: str
    path: Path | None = None
    kind: str | None = None


@dataclass
class RunConfig:
    source: Path | None = None
    ego_path: Path | None = None
    radar_path: Path | None = None
    manifest_path: Path | None = None
    labels_path: Path | None = None
    vru_inputs: dict[str, VruInput] = field(default_factory=dict)
    mounts: dict[str, SensorMount] = field(default_factory=dict)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    alpha: float = 0.05
    weighted_count_ref_m: float = 10.0
    welch: bool = False
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def sensor_mounts(self) -> dict[str, SensorMount]:
        return dict(self.mounts) if self.mounts else default_mounts()


def _convert(key: str, raw: str, typ):
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "1", "yes", "on")
        if typ is str:
            return raw
        v = typ(raw)
    except ValueError:
        raise InputError(f"config key {key!r}: bad value {raw!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise InputError(f"config key {key!r}: non-finite value {raw!r}")
    return v


def parse_pairs(text: str, where="<config>") -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{where}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise InputError(f"{where}:{lineno}: empty key")
        if key in pairs:
            raise InputError(f"{where}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(text: str, base_dir: Path | None = None, where="<config>") -> RunConfig:
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    cfg = RunConfig()
    pipe: dict = {}
    sim: dict = {}
    sensors: dict[str, dict] = {}
    extra_sim: dict[str, float] = {}
    for key, raw in parse_pairs(text, where).items():
        if key == "schema_version":
            if _convert(key, raw, int) != SCHEMA_VERSION:
                raise InputError(f"{where}: unsupported schema_version {raw}")
        elif key in _PATH_KEYS:
            attr = {"input.ego": "ego_path", "input.radar": "radar_path",
                    "input.manifest": "manifest_path", "output.labels": "labels_path"}[key]
            setattr(cfg, attr, base_dir / raw)
        elif key in _PIPELINE_KEYS:
            name, typ = _PIPELINE_KEYS[key]
            pipe[name] = _convert(key, raw, typ)
        elif key in _ANALYSIS_KEYS:
            name, typ = _ANALYSIS_KEYS[key]
            setattr(cfg, name, _convert(key, raw, typ))
        elif key in _SIM_KEYS:
            spec = _SIM_KEYS[key]
            if spec is None:
                extra_sim[key] = _convert(key, raw, float)
            else:
                sim[spec[0]] = _convert(key, raw, spec[1])
        elif m := _SENSOR_RE.match(key):
            sensors.setdefault(m.group(1), {})[m.group(2)] = _convert(key, raw, float)
        elif m := _VRU_RE.match(key):
            vin = cfg.vru_inputs.setdefault(m.group(1), VruInput(m.group(1)))
            if m.group(2) == "path":
                vin.path = base_dir / raw
            else:
                vin.kind = raw
        else:
            raise InputError(f"{where}: unknown config key {key!r}")

    for vin in cfg.vru_inputs.values():
        if vin.path is None or vin.kind is None:
            raise InputError(f"{where}: VRU input {vin.id!r} needs both .path and .kind")
    for sid, vals in sensors.items():
        cfg.mounts[sid] = SensorMount(**vals)
    if "sim.course_center_x_m" in extra_sim or "sim.course_center_y_m" in extra_sim:
        default = ScenarioConfig.__dataclass_fields__["course_center"].default
        sim["course_center"] = (extra_sim.get("sim.course_center_x_m", default[0]),
                                extra_sim.get("sim.course_center_y_m", default[1]))
    if "sim.azimuth_res_deg" in extra_sim:
        sim["azimuth_res_rad"] = math.radians(extra_sim["sim.azimuth_res_deg"])
    if any(k.startswith("sim.origin_") for k in extra_sim):
        default = ScenarioConfig.__dataclass_fields__["origin"].default
        sim["origin"] = (extra_sim.get("sim.origin_lat_deg", default[0]),
                         extra_sim.get("sim.origin_lon_deg", default[1]),
                         extra_sim.get("sim.origin_alt_m", default[2]))
    pipe["mounts"] = cfg.sensor_mounts()
    cfg.pipeline = PipelineConfig(**pipe)
    if cfg.pipeline.smoothing_window < 1 or cfg.pipeline.smoothing_window % 2 == 0:
        raise InputError(f"{where}: pipeline.smoothing_window must be odd and >= 1")
    cfg.scenario = ScenarioConfig(mounts=cfg.sensor_mounts(), **sim)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    cfg = parse_config(text, path.parent, str(path))
    cfg.source = path
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Serialise the tunable (non-path) settings back to the key-value format."""
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for key, (name, _) in _PIPELINE_KEYS.items():
        lines.append(f"{key} = {getattr(cfg.pipeline, name)!r}")
    for key, (name, typ) in _ANALYSIS_KEYS.items():
        v = getattr(cfg, name)
        lines.append(f"{key} = {str(v).lower() if typ == 'bool' else repr(v)}")
    for sid, m in sorted(cfg.mounts.items()):
        for f in fields(m):
            lines.append(f"sensor.{sid}.{f.name} = {getattr(m, f.name)!r}")
    return "\n".join(lines) + "\n"
