"""Readers and writers for the toolkit's text file formats.

* GNSS tracks: CSV with header ``time_s,lat_deg,lon_deg,alt_m``; ego tracks
  append ``yaw_rad,speed_mps``.
* Radar frames and labeled detections: JSON Lines. The first line is a header
  object naming the schema and its version; each following line is one record
  whose fields are exactly those of the domain type.

Floats are written with 17 significant digits so a read-back reproduces every
value bit for bit. All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError
from .geomath import GeoFix
from .pipeline import BACKGROUND, EgoFix, LabeledDetection, RadarDetection, RadarFrame

SCHEMA_VERSION = 1
GNSS_COLUMNS = ("time_s", "lat_deg", "lon_deg", "alt_m")
EGO_COLUMNS = GNSS_COLUMNS + ("yaw_rad", "speed_mps")
FRAMES_SCHEMA = "radar_frames"
LABELS_SCHEMA = "labeled_detections"


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"cannot serialize non-finite number {x}")
    return format(x, ".17g")


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


# -- CSV tables -------------------------------------------------------------

def format_table(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else fmt_float(v) if isinstance(v, float) else v
                    for v in row])
    return buf.getvalue()


def parse_table(text: str, columns: Sequence[str], path="<table>") -> list[dict[str, str]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{path}: empty file, expected header {','.join(columns)}") from None
    for name in header:
        if name not in columns:
            raise InputError(f"{path}: unknown column {name!r}")
    missing = [c for c in columns if c not in header]
    if missing:
        raise InputError(f"{path}: missing column(s) {missing}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        rows.append(dict(zip(header, row)))
    return rows


def _float(value: str, where: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise InputError(f"{where}: not a number: {value!r}") from None
    if not math.isfinite(x):
        raise InputError(f"{where}: non-finite value {value!r}")
    return x


def write_gnss(path, fixes: Sequence[GeoFix]) -> None:
    atomic_write_text(path, format_table(GNSS_COLUMNS, [tuple(map(float, f)) for f in fixes]))


def read_gnss(path) -> list[GeoFix]:
    rows = parse_table(_read_text(path), GNSS_COLUMNS, path)
    return [GeoFix(*(_float(r[c], f"{path}:{i + 2}:{c}") for c in GNSS_COLUMNS))
            for i, r in enumerate(rows)]


def write_ego(path, fixes: Sequence[EgoFix]) -> None:
    atomic_write_text(path, format_table(EGO_COLUMNS, [tuple(map(float, f)) for f in fixes]))


def read_ego(path) -> list[EgoFix]:
    rows = parse_table(_read_text(path), EGO_COLUMNS, path)
    return [EgoFix(*(_float(r[c], f"{path}:{i + 2}:{c}") for c in EGO_COLUMNS))
            for i, r in enumerate(rows)]


# -- JSON Lines -------------------------------------------------------------

def _header(schema: str) -> str:
    return _encode({"schema": schema, "schema_version": SCHEMA_VERSION}) + "\n"


def _records(text: str, schema: str, path) -> list[tuple[int, dict]]:
    lines = text.splitlines()
    if not lines:
        raise InputError(f"{path}: empty file, expected a {schema} header")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:1: bad header: {exc}") from None
    if (not isinstance(head, dict) or head.get("schema") != schema
            or set(head) != {"schema", "schema_version"}):
        raise InputError(f"{path}:1: expected header for schema {schema!r}, got {head}")
    if head["schema_version"] != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {head['schema_version']}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            out.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    return out


def _check_fields(obj, fields: Sequence[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    for k in obj:
        if k not in fields:
            raise InputError(f"{where}: unknown field {k!r}")
    missing = [f for f in fields if f not in obj]
    if missing:
        raise InputError(f"{where}: missing field(s) {missing}")


def _json_num(v, where: str, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InputError(f"{where}: field {name!r} must be a finite number")
    return float(v)


def _detection_from(obj, where: str) -> RadarDetection:
    _check_fields(obj, RadarDetection._fields, where)
    if not isinstance(obj["sensor_id"], str):
        raise InputError(f"{where}: sensor_id must be a string")
    vals = {name: _json_num(obj[name], where, name)
            for name in RadarDetection._fields if name != "sensor_id"}
    if not vals["range_m"] > 0:
        raise InputError(f"{where}: range_m must be positive")
    return RadarDetection(sensor_id=obj["sensor_id"], **vals)


def _detection_obj(d: RadarDetection) -> dict:
    return {"time_s": float(d.time_s), "sensor_id": d.sensor_id, "range_m": float(d.range_m),
            "azimuth_rad": float(d.azimuth_rad), "radial_speed_mps": float(d.radial_speed_mps),
            "amplitude_db": float(d.amplitude_db)}


def format_frames(frames: Iterable[RadarFrame]) -> str:
    parts = [_header(FRAMES_SCHEMA)]
    for f in frames:
        parts.append(_encode({"time_s": float(f.time_s), "sensor_id": f.sensor_id,
                              "detections": [_detection_obj(d) for d in f.detections]}) + "\n")
    return "".join(parts)


def parse_frames(text: str, path="<frames>") -> list[RadarFrame]:
    frames = []
    for lineno, obj in _records(text, FRAMES_SCHEMA, path):
        where = f"{path}:{lineno}"
        _check_fields(obj, RadarFrame._fields, where)
        t = _json_num(obj["time_s"], where, "time_s")
        if not isinstance(obj["sensor_id"], str):
            raise InputError(f"{where}: sensor_id must be a string")
        if not isinstance(obj["detections"], list):
            raise InputError(f"{where}: detections must be a list")
        dets = tuple(_detection_from(d, f"{where}:detection[{i}]")
                     for i, d in enumerate(obj["detections"]))
        for d in dets:
            if d.time_s != t or d.sensor_id != obj["sensor_id"]:
                raise InputError(f"{where}: detection time/sensor differs from its frame")
        frames.append(RadarFrame(t, obj["sensor_id"], dets))
    return frames


def write_frames(path, frames: Iterable[RadarFrame]) -> None:
    atomic_write_text(path, format_frames(frames))


def read_frames(path) -> list[RadarFrame]:
    return parse_frames(_read_text(path), path)


def format_labels(labeled: Iterable[LabeledDetection]) -> str:
    parts = [_header(LABELS_SCHEMA)]
    for ld in labeled:
        parts.append(_encode({"detection": _detection_obj(ld.detection), "label": ld.label,
                              "region_id": ld.region_id, "ambiguous": bool(ld.ambiguous)}) + "\n")
    return "".join(parts)


def parse_labels(text: str, path="<labels>") -> list[LabeledDetection]:
    out = []
    for lineno, obj in _records(text, LABELS_SCHEMA, path):
        where = f"{path}:{lineno}"
        _check_fields(obj, LabeledDetection._fields, where)
        label, region_id, amb = obj["label"], obj["region_id"], obj["ambiguous"]
        if not isinstance(label, str) or not isinstance(amb, bool):
            raise InputError(f"{where}: bad label or ambiguous flag")
        if region_id is not None and not isinstance(region_id, str):
            raise InputError(f"{where}: region_id must be a string or null")
        if (label != BACKGROUND) != (region_id is not None):
            raise InputError(f"{where}: region_id must be set exactly for non-background labels")
        out.append(LabeledDetection(_detection_from(obj["detection"], f"{where}:detection"),
                                    label, region_id, amb))
    return out


def write_labels(path, labeled: Iterable[LabeledDetection]) -> None:
    atomic_write_text(path, format_labels(labeled))


def read_labels(path) -> list[LabeledDetection]:
    return parse_labels(_read_text(path), path)


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
