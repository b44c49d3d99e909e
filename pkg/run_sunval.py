#!/usr/bin/env python3
"""
run_sunval.py - Command-line entry point.

  verify     shadow vs claimed-metadata sun position for every case in a case file
  infer      shadow-inferred sun position only
  ephemeris  sun position for a timestamp and location
  range      altitude interval from uncertain focal length / pitch, checked altitude-only
  synth      synthetic case file (New York 2017-03-21 grid by default)
  eval       detectability tables and the synthetic ROC study

Exit codes: 0 all consistent, 2 some inconsistent, 64 usage, 65 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError

import sunval_casefile as cf
from sunval_camera import CameraIntrinsics, CameraPose
from sunval_ephemeris import ClaimedContext, solar_angles, solar_noon, sun_position_from_context
from sunval_errors import CaseFileError, DomainError, SceneInfeasibleError, SunvalError
from sunval_eval import (
    CorpusConfig,
    build_corpus,
    detectability_tables,
    evaluate_corpus,
    min_detectable_latitude_shift,
    write_json,
    write_roc_csv,
)
from sunval_preview import render_scene, save_preview
from sunval_shadow import altitude_range
from sunval_synth import (
    DATASET1_CAMERA_HEIGHT,
    DATASET1_FOCAL_PX,
    DATASET1_FRAMES,
    DATASET1_IMAGE_SIZE,
    DATASET1_LATITUDE,
    DATASET1_LONGITUDE,
    DATASET1_OBJECT_HEIGHT,
    DATASET1_START,
    DATASET1_STEP,
    NoiseSpec,
    SceneSpec,
    SyntheticFrame,
    add_noise,
    frame_id,
    noise_study,
    synthesize_scene,
)
from sunval_validator import Thresholds, validate_altitude_range

log = logging.getLogger("sunval")

EXIT_OK = 0
EXIT_INCONSISTENT = 2
EXIT_USAGE = 64
EXIT_DATA = 65

SYNTH_CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "focal_px": {"type": "number", "exclusiveMinimum": 0},
        "image_size": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "camera_height": {"type": "number", "exclusiveMinimum": 0},
        "object_height": {"type": "number", "exclusiveMinimum": 0},
        "distance_m": {"type": "number", "exclusiveMinimum": 0},
        "pitch_deg": {"type": "number", "exclusiveMinimum": -45, "exclusiveMaximum": 45},
        "yaw_deg": {"type": "number"},
        "latitude": {"type": "number", "minimum": -90, "maximum": 90},
        "longitude": {"type": "number", "exclusiveMinimum": -180, "maximum": 180},
        "start": {"type": "string"},
        "step_minutes": {"type": "number", "exclusiveMinimum": 0},
        "frames": {"type": "integer", "minimum": 1},
        "sigma_px": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "check_frame": {"type": "boolean"},
    },
}

EVAL_CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "genuine": {"type": "integer", "minimum": 0},
        "repetitions": {"type": "integer", "minimum": 1},
        "sigma_px": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "distance_m": {"type": "number", "exclusiveMinimum": 0},
        "latitude": {"type": "number", "minimum": -90, "maximum": 90},
        "longitude": {"type": "number", "exclusiveMinimum": -180, "maximum": 180},
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_floats(s: str, count: int) -> Tuple[float, ...]:
    parts = [p for p in s.replace(",", " ").split() if p]
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {s!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_thresholds(s: str) -> Thresholds:
    """'h,p' -> Thresholds(altitude=h, position=p)."""
    h, p = _parse_floats(s, 2)
    try:
        return Thresholds(altitude_threshold_deg=h, position_threshold_deg=p)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _pair(s: str) -> Tuple[float, float]:
    return _parse_floats(s, 2)


def _float_list(s: str) -> List[float]:
    try:
        return [float(p) for p in s.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load_config(path: Optional[Path], schema: Dict[str, Any]) -> Dict[str, Any]:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    Draft202012Validator(schema).validate(data)
    return data


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    log.info("wrote %s", out)


def _render(report: Dict[str, Any], fmt: str) -> str:
    if fmt == "csv":
        return cf.render_csv(report)
    if fmt == "text":
        return cf.render_text(report)
    return cf.render_json(report)


def _thresholds(args) -> Thresholds:
    th = args.thresholds
    if args.azimuth_threshold is not None:
        th = dataclasses.replace(th, azimuth_threshold_deg=args.azimuth_threshold)
    return th


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_verify(args) -> int:
    th = _thresholds(args)
    cases = [
        cf.failed_case(e, "shadow", "claimed_sun", "verdict", "mode") if isinstance(e, cf.RecordFailure)
        else cf.verify_case(e, th)
        for e in cf.load_case_entries(args.case_file)
    ]
    report = cf.build_report("verify", cases, th)
    _emit(_render(report, args.format), args.out)
    summary = report["summary"]
    if summary["inconsistent"]:
        return EXIT_INCONSISTENT
    if summary["errors"]:
        return EXIT_DATA
    return EXIT_OK


def cmd_infer(args) -> int:
    cases = [
        cf.failed_case(e, "shadow") if isinstance(e, cf.RecordFailure) else cf.infer_case(e)
        for e in cf.load_case_entries(args.case_file)
    ]
    report = cf.build_report("infer", cases)
    _emit(_render(report, args.format), args.out)
    return EXIT_DATA if any(c["errors"] for c in cases) else EXIT_OK


def cmd_ephemeris(args) -> int:
    ctx = ClaimedContext.parse(args.timestamp, args.latitude, args.longitude)
    sun = sun_position_from_context(ctx)
    angles = solar_angles(ctx)
    result = {
        "timestamp": ctx.timestamp.isoformat(),
        "latitude": ctx.latitude_deg,
        "longitude": ctx.longitude_deg,
        "azimuth_deg": sun.azimuth_deg,
        "altitude_deg": sun.altitude_deg,
        "solar_time_h": angles.solar_time_h,
        "hour_angle_deg": angles.hour_angle_deg,
        "declination_deg": angles.declination_deg,
        "equation_of_time_min": angles.equation_of_time_min,
        "solar_noon": solar_noon(ctx).isoformat(),
    }
    if args.format == "text":
        text = "\n".join(f"{k:<22} {cf.fmt_value(v)}" for k, v in result.items()) + "\n"
    else:
        text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_range(args) -> int:
    th = _thresholds(args)
    cases = []
    for rec in cf.load_case_entries(args.case_file):
        if isinstance(rec, cf.RecordFailure):
            cases.append(cf.failed_case(rec, "altitude_range", "claimed_sun", "verdict", "mode"))
            continue
        case: Dict[str, Any] = {"image_id": rec.image_id, "inputs": rec.raw, "altitude_range": None,
                                "claimed_sun": None, "verdict": None, "mode": None, "errors": []}
        try:
            intr = CameraIntrinsics(args.focal_range[0], rec.image_size,
                                    rec.principal_point.as_tuple() if rec.principal_point else None)
            lo, hi = altitude_range(rec.annotation(), intr, args.focal_range, args.pitch_range, args.steps)
            case["altitude_range"] = [lo, hi]
            if rec.claimed is not None:
                claimed = sun_position_from_context(rec.claimed)
                case["claimed_sun"] = cf.sun_dict(claimed)
                verdict = validate_altitude_range((lo, hi), claimed, th)
                case["verdict"] = verdict.as_dict()
                case["mode"] = verdict.rule_applied.value
        except SunvalError as exc:
            log.warning("%s: %s", rec.image_id, exc)
            case["errors"].append({"code": exc.code, "message": str(exc)})
        cases.append(case)
    report = cf.build_report("range", cases, th)
    _emit(cf.render_json(report), args.out)
    summary = report["summary"]
    if summary["inconsistent"]:
        return EXIT_INCONSISTENT
    return EXIT_DATA if summary["errors"] else EXIT_OK


def _synth_scene(cfg: Dict[str, Any]) -> Tuple[SceneSpec, List[ClaimedContext]]:
    intr = CameraIntrinsics.from_image(*cfg.get("image_size", DATASET1_IMAGE_SIZE),
                                       focal_px=cfg.get("focal_px", DATASET1_FOCAL_PX))
    pose = CameraPose(cfg.get("pitch_deg", 0.0), cfg.get("yaw_deg", 0.0), cfg.get("camera_height", DATASET1_CAMERA_HEIGHT))
    scene = SceneSpec.at_distance(intr, pose, cfg.get("distance_m", 10.0), cfg.get("object_height", DATASET1_OBJECT_HEIGHT))
    lat = cfg.get("latitude", DATASET1_LATITUDE)
    lon = cfg.get("longitude", DATASET1_LONGITUDE)
    start = ClaimedContext.parse(cfg["start"], lat, lon).timestamp if "start" in cfg else DATASET1_START
    step = timedelta(minutes=cfg["step_minutes"]) if "step_minutes" in cfg else DATASET1_STEP
    contexts = [ClaimedContext(start + i * step, lat, lon) for i in range(cfg.get("frames", DATASET1_FRAMES))]
    return scene, contexts


def cmd_synth(args) -> int:
    cfg = {} if args.dataset1 else _load_config(args.config, SYNTH_CONFIG_SCHEMA)
    for key in ("distance_m", "pitch_deg", "yaw_deg", "sigma_px", "seed"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    scene, contexts = _synth_scene(cfg)
    noise = NoiseSpec(cfg.get("sigma_px", 0.0), cfg.get("seed", 0), 1)

    if args.noise_study:
        frames = _frames_for(scene, contexts, False)
        rows = noise_study(scene, frames, args.sigmas, args.trials, noise.seed)
        result = [dataclasses.asdict(r) for r in rows]
        _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK

    frames = _frames_for(scene, contexts, cfg.get("check_frame", False))
    records = []
    for i, frame in enumerate(frames):
        ann = add_noise(frame.annotation, noise, trial_index=args.trial, photo_index=i)
        records.append(cf.record_dict(frame.frame_id, scene.intrinsics, scene.pose, ann, frame.context, frame.sun))
        if args.preview is not None:
            save_preview(render_scene(ann, scene.intrinsics, scene.pose.pitch_deg), args.preview, frame.frame_id)
    if args.out is None:
        sys.stdout.write(json.dumps({"schema_version": cf.SCHEMA_VERSION, "records": records}, indent=2,
                                    sort_keys=True) + "\n")
    else:
        cf.write_case_file(records, args.out)
        log.info("wrote %d records to %s", len(records), args.out)
    return EXIT_OK


def _frames_for(scene: SceneSpec, contexts: Sequence[ClaimedContext], check_frame: bool) -> List[SyntheticFrame]:
    frames, bad = [], []
    for ctx in contexts:
        sun = sun_position_from_context(ctx)
        try:
            frames.append(SyntheticFrame(frame_id(ctx), ctx, sun, synthesize_scene(scene, sun, check_frame)))
        except SunvalError as exc:
            bad.append(f"{frame_id(ctx)} ({exc})")
    if bad:
        raise SceneInfeasibleError(f"{len(bad)} infeasible frames: {'; '.join(bad)}")
    return frames


def cmd_eval(args) -> int:
    cfg = _load_config(args.config, EVAL_CONFIG_SCHEMA)
    for key in ("genuine", "repetitions", "sigma_px", "seed"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    th = _thresholds(args)
    if not (args.tables or args.corpus):
        raise DomainError("nothing to do: pass --tables and/or --corpus")

    out_dir = Path(args.out_dir)
    if args.tables:
        lat = cfg.get("latitude", DATASET1_LATITUDE)
        lon = cfg.get("longitude", DATASET1_LONGITUDE)
        tables = detectability_tables(lat, lon, th)
        baseline = ClaimedContext(DATASET1_START.replace(hour=12), lat, lon)
        degrees, miles = min_detectable_latitude_shift(baseline, th)
        tables["latitude_shift"] = {"degrees": degrees, "miles": miles, "baseline": baseline.timestamp.isoformat()}
        write_json(tables, out_dir / "tables.json")
        log.info("tables: %s", json.dumps(tables["time_shift_minutes"], sort_keys=True))

    if args.corpus:
        corpus_cfg = CorpusConfig(**{k: v for k, v in cfg.items() if k in
                                     ("genuine", "repetitions", "sigma_px", "seed", "distance_m")})
        report = evaluate_corpus(build_corpus(corpus_cfg), th)
        write_json(report.as_dict(), out_dir / "roc.json")
        flat = {f"{kind}:{var}": curve for kind, per in report.curves.items() for var, curve in per.items()}
        flat.update({f"{kind}:combined": curve for kind, curve in report.combined.items()})
        write_roc_csv(flat, out_dir / "roc.csv")
    return EXIT_OK


# ============================================================================
# ARGUMENTS
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="run_sunval.py", description="Sun-position consistency checks for photo metadata")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def thresholds_args(p):
        p.add_argument("--thresholds", type=parse_thresholds, default=Thresholds(),
                       help="altitude,position thresholds in degrees (default 5,9.4)")
        p.add_argument("--azimuth-threshold", type=float, default=None,
                       help="additional d_A threshold (azimuth study)")

    p = sub.add_parser("verify", help="validate claimed metadata against the shadow")
    p.add_argument("case_file", type=Path)
    thresholds_args(p)
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("infer", help="shadow-inferred sun positions only")
    p.add_argument("case_file", type=Path)
    p.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ephemeris", help="sun position for a timestamp and location")
    p.add_argument("timestamp", help="ISO 8601 with UTC offset, e.g. 2017-06-15T16:50:00+08:00")
    p.add_argument("latitude", type=float)
    p.add_argument("longitude", type=float, help="degrees, east-positive")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_ephemeris)

    p = sub.add_parser("range", help="altitude interval from focal/pitch ranges, checked altitude-only")
    p.add_argument("case_file", type=Path)
    p.add_argument("--focal-range", type=_pair, required=True, help="min,max focal length in pixels")
    p.add_argument("--pitch-range", type=_pair, default=(-10.0, 10.0), help="min,max pitch in degrees")
    p.add_argument("--steps", type=int, default=21)
    thresholds_args(p)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_range)

    p = sub.add_parser("synth", help="emit a synthetic case file")
    p.add_argument("--dataset1", action="store_true", help="New York 2017-03-21 preset (ignores --config)")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--distance", dest="distance_m", type=float, default=None)
    p.add_argument("--pitch", dest="pitch_deg", type=float, default=None)
    p.add_argument("--yaw", dest="yaw_deg", type=float, default=None)
    p.add_argument("--sigma", dest="sigma_px", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--preview", type=Path, default=None, help="directory for PNG sketches")
    p.add_argument("--noise-study", action="store_true")
    p.add_argument("--sigmas", type=_float_list, default=[0.0, 1.0, 2.0, 3.0, 4.0])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="detectability tables and ROC study")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--tables", action="store_true")
    p.add_argument("--corpus", action="store_true")
    p.add_argument("--genuine", type=int, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--sigma", dest="sigma_px", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    thresholds_args(p)
    p.add_argument("--out-dir", type=Path, default=Path("eval_out"))
    p.set_defaults(func=cmd_eval)
    return parser


def setup_logging(debug: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if debug else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.debug, args.quiet)
    try:
        return args.func(args)
    except CaseFileError as exc:
        log.error("case file: %s", exc)
    except FileNotFoundError as exc:
        log.error("%s", exc)
    except ValidationError as exc:
        log.error("config: %s", exc.message)
    except json.JSONDecodeError as exc:
        log.error("config: invalid JSON at line %d: %s", exc.lineno, exc.msg)
    except SunvalError as exc:
        log.error("%s: %s", exc.code, exc)
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
