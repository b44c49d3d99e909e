#!/usr/bin/env python3
"""
sunval_casefile.py - JSON sidecar ("case file") reading, per-case processing and reports.

A case file holds one record per photo:

    {
      "schema_version": 1,
      "records": [
        {
          "image_id": "IMG_0001",
          "image_size": [4032, 3024],
          "focal_px": 3351.6,
          "pitch_deg": 0.0,
          "yaw_deg": 0.0,
          "annotation": {"shadow_tip": [x, y], "object_base": [x, y], "object_top": [x, y]},
          "claimed": {"timestamp": "2017-03-21T12:00:00-04:00", "latitude": 40.71, "longitude": -74.0}
        }
      ]
    }

Pixels are top-left origin, y down. Angles are degrees. Each field is read
through the typed catalog in CASE_FIELDS.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from jsonschema import Draft202012Validator

from sunval_angles import SunPosition
from sunval_camera import CameraIntrinsics, CameraPose, PixelPoint
from sunval_ephemeris import ClaimedContext, sun_position_from_context
from sunval_errors import CaseFileError, ContextError, InsufficientAnnotationError, SunvalError
from sunval_shadow import ShadowAnnotation, infer_sun_position
from sunval_validator import RuleMode, Thresholds, Verdict, validate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BOUNDS_FACTOR = 4.0

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_ANGLE = {"type": "number"}

RECORD_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["image_id", "image_size", "pitch_deg", "annotation"],
    "additionalProperties": False,
    "properties": {
        "image_id": {"type": "string", "minLength": 1},
        "image_size": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "focal_px": {"type": "number", "exclusiveMinimum": 0},
        "principal_point": _POINT,
        "pitch_deg": {"type": "number", "exclusiveMinimum": -45, "exclusiveMaximum": 45},
        "yaw_deg": _ANGLE,
        "annotation": {
            "type": "object",
            "required": ["shadow_tip", "object_base"],
            "additionalProperties": False,
            "properties": {"shadow_tip": _POINT, "object_base": _POINT, "object_top": _POINT},
        },
        "claimed": {
            "type": "object",
            "required": ["timestamp", "latitude", "longitude"],
            "additionalProperties": False,
            "properties": {
                "timestamp": {"type": "string"},
                "latitude": {"type": "number", "minimum": -90, "maximum": 90},
                "longitude": {"type": "number", "exclusiveMinimum": -180, "maximum": 180},
            },
        },
        "truth": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"azimuth_deg": _ANGLE, "altitude_deg": _ANGLE},
        },
    },
}

CASE_FILE_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "records"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "records": {"type": "array"},
    },
}


# ============================================================================
# 1) FIELD CATALOG
# ============================================================================

class FieldKind(str, Enum):
    DEGREES = "degrees"
    PIXELS = "pixels"
    PIXEL_POINT = "pixel_point"
    TIMESTAMP = "timestamp"
    TEXT = "text"
    IMAGE_SIZE = "image_size"


@dataclass(frozen=True)
class CaseField:
    key: str
    path: Tuple[str, ...]
    kind: FieldKind
    doc: str = ""


CASE_FIELDS: Dict[str, CaseField] = {
    f.key: f
    for f in (
        CaseField("image_id", ("image_id",), FieldKind.TEXT, "photo identifier"),
        CaseField("image_size", ("image_size",), FieldKind.IMAGE_SIZE, "[width, height] in pixels"),
        CaseField("focal_px", ("focal_px",), FieldKind.PIXELS, "focal length in pixels"),
        CaseField("principal_point", ("principal_point",), FieldKind.PIXEL_POINT, "defaults to the image centre"),
        CaseField("pitch_deg", ("pitch_deg",), FieldKind.DEGREES, "camera inclination"),
        CaseField("yaw_deg", ("yaw_deg",), FieldKind.DEGREES, "compass bearing of the image direction"),
        CaseField("shadow_tip", ("annotation", "shadow_tip"), FieldKind.PIXEL_POINT),
        CaseField("object_base", ("annotation", "object_base"), FieldKind.PIXEL_POINT),
        CaseField("object_top", ("annotation", "object_top"), FieldKind.PIXEL_POINT),
        CaseField("timestamp", ("claimed", "timestamp"), FieldKind.TIMESTAMP, "ISO 8601 with UTC offset"),
        CaseField("latitude", ("claimed", "latitude"), FieldKind.DEGREES),
        CaseField("longitude", ("claimed", "longitude"), FieldKind.DEGREES, "east-positive"),
        CaseField("truth_azimuth", ("truth", "azimuth_deg"), FieldKind.DEGREES, "synthetic ground truth"),
        CaseField("truth_altitude", ("truth", "altitude_deg"), FieldKind.DEGREES, "synthetic ground truth"),
    )
}


def _finite(value: Any, field: CaseField, index: Optional[int]) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise CaseFileError(f"expected a number, got {value!r}", index, field.key) from exc
    if not math.isfinite(out):
        raise CaseFileError(f"expected a finite number, got {value!r}", index, field.key)
    return out


def read_field(record: Dict[str, Any], field: CaseField, index: Optional[int] = None):
    """Typed value of `field` in `record`, or None when absent."""
    raw: Any = record
    for part in field.path:
        if not isinstance(raw, dict) or part not in raw:
            return None
        raw = raw[part]
    if field.kind in (FieldKind.DEGREES, FieldKind.PIXELS):
        return _finite(raw, field, index)
    if field.kind == FieldKind.PIXEL_POINT:
        x, y = raw
        return PixelPoint(_finite(x, field, index), _finite(y, field, index))
    if field.kind == FieldKind.TIMESTAMP:
        try:
            ts = datetime.fromisoformat(str(raw))
        except ValueError as exc:
            raise CaseFileError(f"unparseable timestamp {raw!r}", index, field.key) from exc
        if ts.tzinfo is None:
            raise CaseFileError(f"timestamp {raw!r} has no UTC offset", index, field.key)
        return ts
    if field.kind == FieldKind.TEXT:
        return str(raw)
    if field.kind == FieldKind.IMAGE_SIZE:
        width, height = raw
        return int(width), int(height)
    raise ValueError(f"Unhandled field kind: {field.kind}")


# ============================================================================
# 2) RECORDS
# ============================================================================

@dataclass(frozen=True)
class CaseRecord:
    index: int
    image_id: str
    image_size: Tuple[int, int]
    focal_px: Optional[float]
    principal_point: Optional[PixelPoint]
    pitch_deg: float
    yaw_deg: Optional[float]
    shadow_tip: PixelPoint
    object_base: PixelPoint
    object_top: Optional[PixelPoint]
    claimed: Optional[ClaimedContext]
    truth: Optional[SunPosition]
    raw: Dict[str, Any]

    def intrinsics(self) -> CameraIntrinsics:
        if self.focal_px is None:
            raise InsufficientAnnotationError("focal_px is required")
        pp = self.principal_point.as_tuple() if self.principal_point is not None else None
        return CameraIntrinsics(self.focal_px, self.image_size, pp)

    def pose(self) -> CameraPose:
        return CameraPose(pitch_deg=self.pitch_deg, yaw_deg=self.yaw_deg)

    def annotation(self) -> ShadowAnnotation:
        return ShadowAnnotation(self.shadow_tip, self.object_base, self.object_top)


def _check_bounds(pt: Optional[PixelPoint], size: Tuple[int, int], index: int, key: str) -> None:
    if pt is None:
        return
    width, height = size
    if abs(pt.x) > BOUNDS_FACTOR * width or abs(pt.y) > BOUNDS_FACTOR * height:
        raise CaseFileError(f"point ({pt.x}, {pt.y}) is far outside a {width}x{height} image", index, key)


def parse_record(record: Dict[str, Any], index: int) -> CaseRecord:
    values = {key: read_field(record, f, index) for key, f in CASE_FIELDS.items()}
    for key in ("shadow_tip", "object_base", "object_top"):
        _check_bounds(values[key], values["image_size"], index, key)

    claimed = None
    if values["timestamp"] is not None:
        try:
            claimed = ClaimedContext(values["timestamp"], values["latitude"], values["longitude"])
        except SunvalError as exc:
            raise CaseFileError(str(exc), index, "claimed") from exc
    truth = None
    if values["truth_azimuth"] is not None or values["truth_altitude"] is not None:
        try:
            truth = SunPosition(values["truth_azimuth"], values["truth_altitude"])
        except SunvalError as exc:
            raise CaseFileError(str(exc), index, "truth") from exc

    return CaseRecord(
        index=index,
        image_id=values["image_id"],
        image_size=values["image_size"],
        focal_px=values["focal_px"],
        principal_point=values["principal_point"],
        pitch_deg=values["pitch_deg"],
        yaw_deg=values["yaw_deg"],
        shadow_tip=values["shadow_tip"],
        object_base=values["object_base"],
        object_top=values["object_top"],
        claimed=claimed,
        truth=truth,
        raw=record,
    )


@dataclass(frozen=True)
class RecordFailure:
    """A record that could not be parsed; the rest of the file is still usable."""

    index: int
    image_id: str
    raw: Any
    error: CaseFileError


CaseEntry = Union[CaseRecord, RecordFailure]

_FILE_VALIDATOR = Draft202012Validator(CASE_FILE_SCHEMA)
_RECORD_VALIDATOR = Draft202012Validator(RECORD_SCHEMA)


def _first_error(validator: Draft202012Validator, data: Any):
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    for extra in errors[1:]:
        log.debug("also invalid: %s", extra.message)
    return errors[0] if errors else None


def check_case_data(data: Any) -> None:
    """File-level shape only: schema_version and a records array."""
    err = _first_error(_FILE_VALIDATOR, data)
    if err is not None:
        raise CaseFileError(err.message, None, ".".join(str(p) for p in err.absolute_path) or None)


def parse_entry(record: Any, index: int) -> CaseEntry:
    try:
        err = _first_error(_RECORD_VALIDATOR, record)
        if err is not None:
            raise CaseFileError(err.message, index, ".".join(str(p) for p in err.absolute_path) or None)
        return parse_record(record, index)
    except CaseFileError as exc:
        image_id = record.get("image_id") if isinstance(record, dict) else None
        if not isinstance(image_id, str) or not image_id:
            image_id = f"record-{index}"
        return RecordFailure(index, image_id, record, exc)


def parse_case_entries(data: Any) -> List[CaseEntry]:
    check_case_data(data)
    return [parse_entry(rec, i) for i, rec in enumerate(data["records"])]


def parse_case_data(data: Any) -> List[CaseRecord]:
    """Strict parse: the first bad record raises."""
    entries = parse_case_entries(data)
    for entry in entries:
        if isinstance(entry, RecordFailure):
            raise entry.error
    return entries


def _read_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No case file at {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CaseFileError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_case_entries(path: Path) -> List[CaseEntry]:
    entries = parse_case_entries(_read_json(path))
    bad = sum(isinstance(e, RecordFailure) for e in entries)
    log.info("loaded %d records from %s (%d unreadable)", len(entries), path, bad)
    return entries


def load_case_file(path: Path) -> List[CaseRecord]:
    records = parse_case_data(_read_json(path))
    log.info("loaded %d records from %s", len(records), path)
    return records


def write_case_file(records: Sequence[Dict[str, Any]], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {"schema_version": SCHEMA_VERSION, "records": list(records)}
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def record_dict(
    image_id: str,
    intr: CameraIntrinsics,
    pose: CameraPose,
    ann: ShadowAnnotation,
    claimed: Optional[ClaimedContext] = None,
    truth: Optional[SunPosition] = None,
) -> Dict[str, Any]:
    """Case-file record for an annotation (the inverse of parse_record)."""
    rec: Dict[str, Any] = {
        "image_id": image_id,
        "image_size": list(intr.image_size),
        "focal_px": intr.focal_px,
        "principal_point": [intr.u0, intr.v0],
        "pitch_deg": pose.pitch_deg,
        "annotation": {
            "shadow_tip": list(ann.shadow_tip.as_tuple()),
            "object_base": list(ann.object_base.as_tuple()),
        },
    }
    if pose.yaw_deg is not None:
        rec["yaw_deg"] = pose.yaw_deg
    if ann.object_top is not None:
        rec["annotation"]["object_top"] = list(ann.object_top.as_tuple())
    if claimed is not None:
        rec["claimed"] = {
            "timestamp": claimed.timestamp.isoformat(),
            "latitude": claimed.latitude_deg,
            "longitude": claimed.longitude_deg,
        }
    if truth is not None:
        rec["truth"] = {k: v for k, v in sun_dict(truth).items() if v is not None}
    return rec


# ============================================================================
# 3) PROCESSING AND REPORTS
# ============================================================================

def sun_dict(sun: Optional[SunPosition]) -> Optional[Dict[str, Optional[float]]]:
    if sun is None:
        return None
    return {"azimuth_deg": sun.azimuth_deg, "altitude_deg": sun.altitude_deg}


def _error_entry(exc: SunvalError) -> Dict[str, str]:
    return {"code": exc.code, "message": str(exc)}


def failed_case(failure: RecordFailure, *empty: str) -> Dict[str, Any]:
    """Report entry for an unreadable record; `empty` names the result keys set to None."""
    log.warning("%s: %s", failure.image_id, failure.error)
    case: Dict[str, Any] = {"image_id": failure.image_id, "inputs": failure.raw}
    case.update(dict.fromkeys(empty))
    case["errors"] = [_error_entry(failure.error)]
    return case


def infer_case(rec: CaseRecord) -> Dict[str, Any]:
    case: Dict[str, Any] = {"image_id": rec.image_id, "inputs": rec.raw, "shadow": None, "errors": []}
    try:
        case["shadow"] = sun_dict(infer_sun_position(rec.annotation(), rec.intrinsics(), rec.pose()))
    except SunvalError as exc:
        log.warning("%s: %s", rec.image_id, exc)
        case["errors"].append(_error_entry(exc))
    return case


def verify_case(rec: CaseRecord, th: Thresholds) -> Dict[str, Any]:
    case: Dict[str, Any] = {
        "image_id": rec.image_id,
        "inputs": rec.raw,
        "shadow": None,
        "claimed_sun": None,
        "verdict": None,
        "mode": None,
        "errors": [],
    }
    try:
        if rec.claimed is None:
            raise ContextError("claimed timestamp and location are required")
        shadow = infer_sun_position(rec.annotation(), rec.intrinsics(), rec.pose())
        case["shadow"] = sun_dict(shadow)
        claimed = sun_position_from_context(rec.claimed)
        case["claimed_sun"] = sun_dict(claimed)
        verdict: Verdict = validate(shadow, claimed, th)
        case["verdict"] = verdict.as_dict()
        case["mode"] = verdict.rule_applied.value
        log.debug("%s: %s", rec.image_id, verdict)
    except SunvalError as exc:
        log.warning("%s: %s", rec.image_id, exc)
        case["errors"].append(_error_entry(exc))
    return case


def summarize(cases: Iterable[Dict[str, Any]]) -> Dict[str, int]:
    out = {"consistent": 0, "inconsistent": 0, "errors": 0}
    for case in cases:
        verdict = case.get("verdict")
        if verdict is None:
            out["errors"] += 1
        elif verdict["consistent"]:
            out["consistent"] += 1
        else:
            out["inconsistent"] += 1
    return out


def thresholds_dict(th: Thresholds) -> Dict[str, Optional[float]]:
    return {
        "altitude_threshold_deg": th.altitude_threshold_deg,
        "position_threshold_deg": th.position_threshold_deg,
        "azimuth_threshold_deg": th.azimuth_threshold_deg,
    }


def build_report(command: str, cases: List[Dict[str, Any]], th: Optional[Thresholds] = None) -> Dict[str, Any]:
    report: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "command": command, "cases": cases}
    if th is not None:
        report["thresholds"] = thresholds_dict(th)
        report["summary"] = summarize(cases)
    return report


# ============================================================================
# 4) RENDERING
# ============================================================================

REPORT_COLUMNS = (
    "image_id", "shadow_azimuth", "shadow_altitude", "claimed_azimuth", "claimed_altitude",
    "d_h", "d_A", "d_p", "consistent", "mode", "error",
)


def report_rows(report: Dict[str, Any]) -> List[Dict[str, Any]]:
    rows = []
    for case in report["cases"]:
        shadow = case.get("shadow") or {}
        claimed = case.get("claimed_sun") or {}
        verdict = case.get("verdict") or {}
        rows.append({
            "image_id": case["image_id"],
            "shadow_azimuth": shadow.get("azimuth_deg"),
            "shadow_altitude": shadow.get("altitude_deg"),
            "claimed_azimuth": claimed.get("azimuth_deg"),
            "claimed_altitude": claimed.get("altitude_deg"),
            "d_h": verdict.get("d_h"),
            "d_A": verdict.get("d_A"),
            "d_p": verdict.get("d_p"),
            "consistent": verdict.get("consistent"),
            "mode": case.get("mode"),
            "error": "; ".join(e["code"] for e in case.get("errors", [])) or None,
        })
    return rows


def fmt_value(val) -> str:
    if val is None:
        return "-"
    if isinstance(val, bool):
        return "yes" if val else "NO"
    if isinstance(val, float):
        return f"{val:.6f}"
    return str(val)


def render_csv(report: Dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report_rows(report):
        writer.writerow({k: "" if v is None else (fmt_value(v) if isinstance(v, float) else v)
                         for k, v in row.items()})
    return buf.getvalue()


def render_text(report: Dict[str, Any]) -> str:
    lines = [f"=== {report['command']} ==="]
    for row in report_rows(report):
        if row["error"]:
            lines.append(f"{row['image_id']:<20} <err {row['error']}>")
            continue
        parts = [f"{row['image_id']:<20}",
                 f"A_s={_short(row['shadow_azimuth'])}", f"h_s={_short(row['shadow_altitude'])}"]
        if row["claimed_altitude"] is not None:
            parts += [f"A_m={_short(row['claimed_azimuth'])}", f"h_m={_short(row['claimed_altitude'])}",
                      f"d_h={_short(row['d_h'])}", f"d_p={_short(row['d_p'])}",
                      "consistent" if row["consistent"] else "INCONSISTENT"]
            if row["mode"] != RuleMode.COMBINED.value:
                parts.append(f"[{row['mode']}]")
        lines.append("  ".join(parts))
    summary = report.get("summary")
    if summary:
        lines.append(
            f"{summary['consistent']} consistent, {summary['inconsistent']} inconsistent, {summary['errors']} errors"
        )
    return "\n".join(lines) + "\n"


def _short(val: Optional[float]) -> str:
    return "-" if val is None else f"{val:7.2f}"


def render_json(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
