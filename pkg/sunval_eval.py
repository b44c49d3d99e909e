#!/usr/bin/env python3
"""
sunval_eval.py - Attack generation, ROC analysis and detectability tables.

Positives are genuine (shadow, claimed metadata) pairs, negatives are the same
shadows paired with falsified metadata. A sample is accepted as genuine when
its distance is <= threshold, so TPR and FPR both grow with the threshold.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from sunval_angles import SunPosition
from sunval_ephemeris import ClaimedContext, sun_position_from_context
from sunval_errors import DomainError, SunvalError
from sunval_shadow import infer_sun_position
from sunval_synth import NoiseSpec, SceneSpec, Stream, add_noise, dataset1_camera, stream_rng, synthesize_scene
from sunval_validator import (
    Thresholds,
    altitude_distance,
    azimuth_distance,
    position_distance,
    validate,
)

log = logging.getLogger(__name__)

ATTACK_HOURS = (8.0, 17.0)
ATTACK_LATITUDES = (25.0, 50.0)
MILES_PER_DEGREE_LATITUDE = 3958.8 * math.pi / 180.0

_ATTACK_STREAMS = {"time": Stream.ATTACK_TIME, "date": Stream.ATTACK_DATE, "latitude": Stream.ATTACK_LATITUDE}

VARIABLES = ("d_h", "d_A", "d_p")


class AttackKind(str, Enum):
    TIME = "time"
    DATE = "date"
    LATITUDE = "latitude"


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    rng_seed: int = 0
    count: int = 200
    repetitions: int = 5

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.count < 1:
            raise DomainError(f"count must be >= 1, got {self.count}")
        if self.repetitions < 1:
            raise DomainError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.rng_seed < 0:
            raise DomainError(f"rng_seed must be >= 0, got {self.rng_seed}")


def generate_attack(truth: ClaimedContext, spec: AttackSpec, index: int, repetition: int = 0) -> ClaimedContext:
    """Falsify exactly one field of `truth`; deterministic per (seed, kind, repetition, index)."""
    if not 0 <= index < spec.count:
        raise DomainError(f"index must be in range [0, {spec.count}), got {index}")
    if not 0 <= repetition < spec.repetitions:
        raise DomainError(f"repetition must be in range [0, {spec.repetitions}), got {repetition}")
    rng = stream_rng(spec.rng_seed, _ATTACK_STREAMS[spec.kind.value], repetition, index)
    if spec.kind is AttackKind.TIME:
        # whole seconds keep the timestamp exactly representable in ISO form
        seconds = int(rng.integers(int(ATTACK_HOURS[0] * 3600), int(ATTACK_HOURS[1] * 3600) + 1))
        return truth.with_time(seconds / 3600.0)
    if spec.kind is AttackKind.DATE:
        year = truth.timestamp.year
        n_days = (date(year + 1, 1, 1) - date(year, 1, 1)).days
        return truth.with_date(date(year, 1, 1) + timedelta(days=int(rng.integers(0, n_days))))
    return truth.with_latitude(float(rng.uniform(*ATTACK_LATITUDES)))


# ============================================================================
# 1) SCORING
# ============================================================================

@dataclass(frozen=True)
class Scores:
    d_h: Optional[float]
    d_A: Optional[float]
    d_p: Optional[float]

    def get(self, variable: str) -> Optional[float]:
        return getattr(self, variable)


def score(shadow: SunPosition, ctx: ClaimedContext) -> Scores:
    claimed = sun_position_from_context(ctx)
    d_h = altitude_distance(shadow.altitude_deg, claimed.altitude_deg) if shadow.altitude_deg is not None else None
    if shadow.azimuth_deg is None:
        return Scores(d_h, None, None)
    d_a = azimuth_distance(shadow.azimuth_deg, claimed.azimuth_deg)
    d_p = position_distance(d_a, d_h) if d_h is not None else None
    return Scores(d_h, d_a, d_p)


# ============================================================================
# 2) ROC
# ============================================================================

@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float

    def as_dict(self) -> Dict[str, Any]:
        thr = self.threshold if math.isfinite(self.threshold) else None
        return {"threshold": thr, "FPR": self.fpr, "TPR": self.tpr}


@dataclass(frozen=True)
class RocCurve:
    variable: str
    points: Tuple[RocPoint, ...]
    auc: float
    optimal: RocPoint
    fpr_by_repetition: Tuple[Tuple[float, ...], ...] = field(default=())

    def as_dict(self) -> Dict[str, Any]:
        return {
            "variable": self.variable,
            "auc": self.auc,
            "optimal": self.optimal.as_dict(),
            "points": [p.as_dict() for p in self.points],
            "fpr_by_repetition": [list(r) for r in self.fpr_by_repetition],
        }


Values = Sequence[float]


def _accept_rate(values: np.ndarray, eligible: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    kept = np.sort(values[eligible])
    return np.searchsorted(kept, thresholds, side="right") / float(len(values))


def _sweep(
    variable: str,
    pos: np.ndarray,
    pos_ok: np.ndarray,
    neg_sets: List[Tuple[np.ndarray, np.ndarray]],
) -> RocCurve:
    observed = [pos[pos_ok]] + [v[ok] for v, ok in neg_sets]
    uniq = np.unique(np.concatenate(observed))
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    thresholds = np.unique(np.concatenate([[0.0], mids, [np.inf]]))

    tpr = _accept_rate(pos, pos_ok, thresholds)
    per_rep = np.stack([_accept_rate(v, ok, thresholds) for v, ok in neg_sets])
    fpr = per_rep.mean(axis=0) if len(neg_sets) > 1 else per_rep[0]

    # (0, 0) anchor stands for a threshold below every observed distance
    xs = np.concatenate([[0.0], fpr])
    ys = np.concatenate([[0.0], tpr])
    auc = float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))

    dist = np.hypot(fpr, 1.0 - tpr)
    best = int(np.argmin(dist))
    points = tuple(RocPoint(float(t), float(f), float(p)) for t, f, p in zip(thresholds, fpr, tpr))
    reps = tuple(tuple(float(x) for x in row) for row in per_rep) if len(neg_sets) > 1 else ()
    return RocCurve(variable, points, min(max(auc, 0.0), 1.0), points[best], reps)


def _as_array(values: Values, name: str) -> np.ndarray:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise DomainError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def roc_curve(positives: Values, negatives: Values, variable: str = "d_p") -> RocCurve:
    pos = _as_array(positives, "positives")
    neg = _as_array(negatives, "negatives")
    return _sweep(variable, pos, np.ones(pos.shape, bool), [(neg, np.ones(neg.shape, bool))])


def averaged_roc_curve(positives: Values, negative_sets: Sequence[Values], variable: str = "d_p") -> RocCurve:
    """ROC with FPR averaged over repeated negative sets; per-repetition FPR kept on the curve."""
    if not negative_sets:
        raise DomainError("negative_sets must be non-empty")
    pos = _as_array(positives, "positives")
    sets = []
    for i, negs in enumerate(negative_sets):
        arr = _as_array(negs, f"negative set {i}")
        sets.append((arr, np.ones(arr.shape, bool)))
    return _sweep(variable, pos, np.ones(pos.shape, bool), sets)


Pair = Tuple[float, float]


def _split_pairs(pairs: Sequence[Pair], gate: float, name: str) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise DomainError(f"{name} must be non-empty")
    return arr[:, 0], arr[:, 1] <= gate


def combined_rule_sweep(
    positives: Sequence[Pair],
    negatives: Union[Sequence[Pair], Sequence[Sequence[Pair]]],
    fixed_dp_threshold: float = Thresholds().position_threshold_deg,
) -> RocCurve:
    """Sweep the d_h threshold with d_p <= fixed_dp_threshold required. Pairs are (d_h, d_p).

    `negatives` is either one list of pairs or a list of repetition lists.
    """
    pos, pos_ok = _split_pairs(positives, fixed_dp_threshold, "positives")
    negs = list(negatives)
    if not negs:
        raise DomainError("negatives must be non-empty")
    nested = not isinstance(negs[0][0], (int, float, np.floating, np.integer))
    neg_sets = [_split_pairs(n, fixed_dp_threshold, "negatives") for n in (negs if nested else [negs])]
    return _sweep(f"d_h|d_p<={fixed_dp_threshold:g}", pos, pos_ok, neg_sets)


def rule_rates(
    positives: Sequence[Scores], negative_sets: Sequence[Sequence[Scores]], th: Thresholds = Thresholds()
) -> Tuple[float, float]:
    """(TPR, mean FPR) of the combined d_h/d_p rule at fixed thresholds."""

    def accepted(s: Scores) -> bool:
        return s.d_h <= th.altitude_threshold_deg and s.d_p <= th.position_threshold_deg

    if not positives or not negative_sets:
        raise DomainError("positives and negative_sets must be non-empty")
    tpr = sum(accepted(s) for s in positives) / len(positives)
    fprs = [sum(accepted(s) for s in negs) / len(negs) for negs in negative_sets]
    return tpr, float(np.mean(fprs))


# ============================================================================
# 3) DETECTABILITY
# ============================================================================

def _daylight_truth(ctx: ClaimedContext) -> SunPosition:
    truth = sun_position_from_context(ctx)
    if not (0.0 < truth.altitude_deg < 90.0):
        raise DomainError(f"sun altitude {truth.altitude_deg:.2f} at {ctx.timestamp.isoformat()} is not in daylight")
    return truth


def _detected(truth: SunPosition, fake: ClaimedContext, th: Thresholds) -> bool:
    return not validate(truth, sun_position_from_context(fake), th).consistent


def min_detectable_time_shift(ctx: ClaimedContext, th: Thresholds = Thresholds(), max_minutes: int = 720) -> int:
    """Smallest clock shift in whole minutes, either direction, that the validator rejects."""
    truth = _daylight_truth(ctx)
    for minutes in range(1, max_minutes + 1):
        for sign in (1, -1):
            if _detected(truth, ctx.shifted(timedelta(minutes=sign * minutes)), th):
                return minutes
    raise DomainError(f"no time shift up to {max_minutes} minutes is detectable")


def min_detectable_date_shift(ctx: ClaimedContext, th: Thresholds = Thresholds(), max_days: int = 366) -> int:
    truth = _daylight_truth(ctx)
    for days in range(1, max_days + 1):
        for sign in (1, -1):
            if _detected(truth, ctx.shifted(timedelta(days=sign * days)), th):
                return days
    raise DomainError(f"no date shift up to {max_days} days is detectable")


def min_detectable_latitude_shift(
    ctx: ClaimedContext, th: Thresholds = Thresholds(), step_deg: float = 0.1
) -> Tuple[float, float]:
    """(degrees, miles) of the smallest detectable north/south move of the claimed location."""
    truth = _daylight_truth(ctx)
    steps = int(round(180.0 / step_deg))
    for k in range(1, steps + 1):
        shift = round(k * step_deg, 10)
        for sign in (1, -1):
            lat = ctx.latitude_deg + sign * shift
            if -90.0 <= lat <= 90.0 and _detected(truth, ctx.with_latitude(lat), th):
                return shift, shift * MILES_PER_DEGREE_LATITUDE
    raise DomainError("no latitude shift is detectable")


# 2017 New York civil offsets: EDT in March and June, EST in December
TABLE_DATES = (
    ("Dec 21", (12, 21), -5),
    ("Mar 21", (3, 21), -4),
    ("Jun 21", (6, 21), -4),
)
TABLE_TIMES = ("09:00", "12:00")


def detectability_tables(
    latitude_deg: float, longitude_deg: float, th: Thresholds = Thresholds(), year: int = 2017
) -> Dict[str, Dict[str, Dict[str, int]]]:
    """Minimum detectable time (minutes) and date (days) shifts per baseline date and clock time."""
    time_table: Dict[str, Dict[str, int]] = {}
    date_table: Dict[str, Dict[str, int]] = {}
    for label, (month, day), offset in TABLE_DATES:
        tz = timezone(timedelta(hours=offset))
        for clock in TABLE_TIMES:
            hh, mm = (int(x) for x in clock.split(":"))
            ctx = ClaimedContext(datetime(year, month, day, hh, mm, tzinfo=tz), latitude_deg, longitude_deg)
            time_table.setdefault(label, {})[clock] = min_detectable_time_shift(ctx, th)
            date_table.setdefault(clock, {})[label] = min_detectable_date_shift(ctx, th)
    return {"time_shift_minutes": time_table, "date_shift_days": date_table}


# ============================================================================
# 4) SYNTHETIC CORPUS
# ============================================================================

@dataclass(frozen=True)
class CorpusConfig:
    genuine: int = 200
    repetitions: int = 5
    sigma_px: float = 2.0
    seed: int = 0
    distance_m: float = 5.0
    year: int = 2017
    pitch_range: Tuple[float, float] = (-10.0, 10.0)
    min_altitude_deg: float = 10.0
    max_altitude_deg: float = 80.0
    max_attempts: int = 50

    def __post_init__(self):
        if self.genuine < 1:
            raise DomainError(f"genuine must be >= 1, got {self.genuine}")
        if self.repetitions < 1:
            raise DomainError(f"repetitions must be >= 1, got {self.repetitions}")
        NoiseSpec(self.sigma_px, self.seed, 1)
        if not (self.distance_m > 0):
            raise DomainError(f"distance_m must be > 0, got {self.distance_m}")


@dataclass(frozen=True)
class GenuineSample:
    sample_id: str
    context: ClaimedContext
    truth: SunPosition
    shadow: SunPosition


@dataclass
class Corpus:
    config: CorpusConfig
    genuine: List[GenuineSample]
    positives: List[Scores]
    # kind -> repetition -> scores, aligned with `genuine`
    negatives: Dict[str, List[List[Scores]]]


def _random_context(rng: np.random.Generator, cfg: CorpusConfig) -> ClaimedContext:
    n_days = (date(cfg.year + 1, 1, 1) - date(cfg.year, 1, 1)).days
    day = date(cfg.year, 1, 1) + timedelta(days=int(rng.integers(0, n_days)))
    lat = float(rng.uniform(*ATTACK_LATITUDES))
    lon = float(rng.uniform(-179.0, 179.0))
    offset = int(round(lon / 15.0))
    seconds = int(rng.integers(int(ATTACK_HOURS[0] * 3600), int(ATTACK_HOURS[1] * 3600) + 1))
    ts = datetime(day.year, day.month, day.day, tzinfo=timezone(timedelta(hours=offset))) + timedelta(seconds=seconds)
    return ClaimedContext(ts, lat, lon)


def _genuine_sample(index: int, cfg: CorpusConfig) -> GenuineSample:
    rng = stream_rng(cfg.seed, Stream.GENUINE, index)
    noise = NoiseSpec(cfg.sigma_px, cfg.seed, 1)
    for attempt in range(cfg.max_attempts):
        ctx = _random_context(rng, cfg)
        truth = sun_position_from_context(ctx)
        yaw = float(rng.uniform(0.0, 360.0))
        pitch = float(rng.uniform(*cfg.pitch_range))
        if not (cfg.min_altitude_deg <= truth.altitude_deg <= cfg.max_altitude_deg):
            continue
        intr, pose = dataset1_camera(pitch_deg=pitch, yaw_deg=yaw)
        scene = SceneSpec.at_distance(intr, pose, cfg.distance_m)
        try:
            ann = synthesize_scene(scene, truth)
            noisy = add_noise(ann, noise, trial_index=attempt, photo_index=index)
            shadow = infer_sun_position(noisy, intr, pose)
        except SunvalError as exc:
            log.debug("genuine sample %d attempt %d rejected: %s", index, attempt, exc)
            continue
        return GenuineSample(f"g{index:04d}", ctx, truth, shadow)
    raise DomainError(f"no feasible genuine sample {index} after {cfg.max_attempts} attempts")


def build_corpus(cfg: CorpusConfig = CorpusConfig()) -> Corpus:
    genuine = [_genuine_sample(i, cfg) for i in range(cfg.genuine)]
    positives = [score(g.shadow, g.context) for g in genuine]
    negatives: Dict[str, List[List[Scores]]] = {}
    for kind in AttackKind:
        spec = AttackSpec(kind, cfg.seed, cfg.genuine, cfg.repetitions)
        negatives[kind.value] = [
            [score(g.shadow, generate_attack(g.context, spec, i, rep)) for i, g in enumerate(genuine)]
            for rep in range(cfg.repetitions)
        ]
    log.info("corpus: %d genuine, %d attack kinds x %d repetitions", len(genuine), len(negatives), cfg.repetitions)
    return Corpus(cfg, genuine, positives, negatives)


@dataclass
class CorpusReport:
    curves: Dict[str, Dict[str, RocCurve]]
    combined: Dict[str, RocCurve]
    rule: Dict[str, Tuple[float, float]]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "curves": {k: {v: c.as_dict() for v, c in per.items()} for k, per in self.curves.items()},
            "combined": {k: c.as_dict() for k, c in self.combined.items()},
            "rule": {k: {"TPR": t, "FPR": f} for k, (t, f) in self.rule.items()},
        }


def _column(scores: Sequence[Scores], variable: str) -> List[float]:
    return [s.get(variable) for s in scores]


def evaluate_corpus(corpus: Corpus, th: Thresholds = Thresholds()) -> CorpusReport:
    """ROC per attack kind and variable, plus a pooled "all" entry; FPR averaged over repetitions."""
    if not corpus.positives:
        raise DomainError("corpus has no genuine samples")
    reps = corpus.config.repetitions
    groups = dict(corpus.negatives)
    groups["all"] = [
        [s for kind in corpus.negatives for s in corpus.negatives[kind][rep]] for rep in range(reps)
    ]

    curves: Dict[str, Dict[str, RocCurve]] = {}
    combined: Dict[str, RocCurve] = {}
    rule: Dict[str, Tuple[float, float]] = {}
    pos_pairs = [(s.d_h, s.d_p) for s in corpus.positives]
    for kind, neg_sets in groups.items():
        curves[kind] = {
            var: averaged_roc_curve(_column(corpus.positives, var), [_column(n, var) for n in neg_sets], var)
            for var in VARIABLES
        }
        combined[kind] = combined_rule_sweep(
            pos_pairs, [[(s.d_h, s.d_p) for s in n] for n in neg_sets], th.position_threshold_deg
        )
        rule[kind] = rule_rates(corpus.positives, neg_sets, th)
        log.info("%s: AUC d_h=%.3f d_A=%.3f d_p=%.3f rule TPR=%.3f FPR=%.3f", kind,
                 curves[kind]["d_h"].auc, curves[kind]["d_A"].auc, curves[kind]["d_p"].auc, *rule[kind])
    return CorpusReport(curves, combined, rule)


# ============================================================================
# 5) WRITERS
# ============================================================================

CSV_HEADER = ("variable", "threshold", "TPR", "FPR")


def write_roc_csv(curves: Dict[str, RocCurve], path: Path) -> Path:
    """One row per curve point; keys of `curves` fill the variable column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for name in sorted(curves):
            for p in curves[name].points:
                thr = f"{p.threshold:.6f}" if math.isfinite(p.threshold) else "inf"
                writer.writerow((name, thr, f"{p.tpr:.6f}", f"{p.fpr:.6f}"))
    return path


def write_json(data: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
