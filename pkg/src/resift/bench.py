"""Benchmark harness: manifest ingestion, monotonic regression, and
Pearson/Spearman reporting per database and distortion category.

Raw distortion labels expand to the four canonical categories; jointly
distorted labels (blur-jpeg, blur-noise) count in two categories.  Spearman
uses raw scores (rank correlation is invariant under the monotone fit);
Pearson is computed after fitting the five-parameter monotonic curve to
each evaluation group.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .config import ReSiftConfig
from .errors import (
    BenchmarkAborted,
    DegenerateData,
    DuplicatePair,
    MalformedRow,
    ResiftError,
    UnknownCategory,
)
from .imageio import load_image
from .score import resift_score

CANONICAL_CATEGORIES = ("Compression", "Noise", "Communication", "Blur")

# Raw distortion labels, lower-cased with separators stripped, mapped to the
# canonical categories they count toward.
_CATEGORY_MAP = {
    "compression": ("Compression",),
    "noise": ("Noise",),
    "communication": ("Communication",),
    "blur": ("Blur",),
    "jpeg": ("Compression",),
    "jp2k": ("Compression",),
    "jpeg2000": ("Compression",),
    "wn": ("Noise",),
    "whitenoise": ("Noise",),
    "fastfading": ("Communication",),
    "ff": ("Communication",),
    "gblur": ("Blur",),
    "gaussianblur": ("Blur",),
    "blurjpeg": ("Compression", "Blur"),
    "jpegblur": ("Compression", "Blur"),
    "blurnoise": ("Noise", "Blur"),
    "noiseblur": ("Noise", "Blur"),
}

_MANIFEST_HEADER = ["ref", "dist", "mos", "database", "category"]


@dataclass(frozen=True)
class BenchmarkRecord:
    ref_path: str
    dist_path: str
    mos: float
    database: str
    category: str
    categories: tuple
    line: int


@dataclass(frozen=True)
class RegressionParams:
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float

    def as_list(self) -> list:
        return [self.beta1, self.beta2, self.beta3, self.beta4, self.beta5]


def categories_for_label(label: str) -> tuple:
    key = label.strip().lower().replace("-", "").replace("_", "").replace(" ", "")
    if key not in _CATEGORY_MAP:
        raise UnknownCategory(f"unknown distortion category {label!r}")
    return _CATEGORY_MAP[key]


def parse_manifest(path) -> list:
    """Read a ``ref,dist,mos,database,category`` CSV into records, rejecting
    malformed rows, unknown categories, and duplicate (ref, dist) pairs."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise MalformedRow(f"cannot read manifest {path}: {exc}") from exc
    records = []
    seen = set()
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: manifest is empty") from None
        if [h.strip() for h in header] != _MANIFEST_HEADER:
            raise MalformedRow(
                f"{path}:1: header must be {','.join(_MANIFEST_HEADER)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(f"{path}:{line_no}: expected 5 fields, got {len(row)}")
            ref_path, dist_path, mos_raw, database, category = (f.strip() for f in row)
            if not ref_path or not dist_path or not database:
                raise MalformedRow(f"{path}:{line_no}: empty field")
            try:
                mos = float(mos_raw)
            except ValueError:
                raise MalformedRow(f"{path}:{line_no}: mos {mos_raw!r} is not a number") from None
            if not math.isfinite(mos):
                raise MalformedRow(f"{path}:{line_no}: mos must be finite")
            key = (ref_path, dist_path)
            if key in seen:
                raise DuplicatePair(f"{path}:{line_no}: duplicate pair {ref_path} / {dist_path}")
            seen.add(key)
            records.append(
                BenchmarkRecord(
                    ref_path=ref_path,
                    dist_path=dist_path,
                    mos=mos,
                    database=database,
                    category=category,
                    categories=categories_for_label(category),
                    line=line_no,
                )
            )
    return records


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("inputs must have equal length")
    if x.size < 3:
        raise DegenerateData("need at least 3 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0:
        raise DegenerateData("constant input has no correlation")
    return float(xc @ yc) / denom


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average (fractional) ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("inputs must have equal length")
    if x.size < 3:
        raise DegenerateData("need at least 3 samples")
    return pearson(_average_ranks(x), _average_ranks(y))


def apply_regression(params: RegressionParams, raw, variant: str = "literal") -> np.ndarray:
    """Five-parameter monotonic curve.  The 'literal' variant keeps the
    published constant-1 leading term and the 2+exp denominator; 'canonical'
    is the conventional 1/2 - 1/(1+exp) logistic."""
    s0 = np.asarray(raw, dtype=np.float64)
    b1, b2, b3, b4, b5 = params.as_list()
    with np.errstate(over="ignore"):
        e = np.exp(b2 * (s0 - b3))
        if variant == "canonical":
            core = 0.5 - 1.0 / (1.0 + e)
        else:
            core = 1.0 - 1.0 / (2.0 + e)
    return b1 * core + b4 * s0 + b5


def _regression_starts(raw: np.ndarray, mos: np.ndarray) -> list:
    s_std = float(raw.std()) or 1.0
    s_mean = float(raw.mean())
    s_med = float(np.median(raw))
    s_range = float(raw.max() - raw.min()) or 1.0
    m_range = float(mos.max() - mos.min()) or 1.0
    m_mean = float(mos.mean())
    # Affine-equivalent start: least-squares slope/intercept with no
    # logistic contribution, so the fit can never lose to a plain line.
    design = np.stack([raw, np.ones_like(raw)], axis=1)
    slope, intercept = np.linalg.lstsq(design, mos, rcond=None)[0]
    return [
        [0.0, 1.0 / s_std, s_mean, float(slope), float(intercept)],
        [m_range, 1.0 / s_std, s_mean, 0.0, m_mean],
        [-m_range, 1.0 / s_std, s_mean, 0.0, m_mean],
        [m_range, 4.0 / s_range, s_med, 0.0, float(mos.min())],
        [m_range, -1.0 / s_std, s_mean, 0.0, m_mean],
    ]


def fit_regression(raw, mos, variant: str = "literal") -> RegressionParams:
    """Least-squares fit of the monotonic curve by Nelder-Mead simplex
    descent from five deterministic data-derived starts."""
    raw = np.asarray(raw, dtype=np.float64)
    mos = np.asarray(mos, dtype=np.float64)
    if raw.shape != mos.shape:
        raise ValueError("inputs must have equal length")
    if raw.size < 5:
        raise DegenerateData("need at least 5 samples to fit 5 parameters")
    if raw.std() == 0 or mos.std() == 0:
        raise DegenerateData("constant scores cannot be regressed")

    def sse(beta):
        pred = apply_regression(RegressionParams(*beta), raw, variant)
        resid = pred - mos
        return float(resid @ resid)

    best = None
    for start in _regression_starts(raw, mos):
        result = minimize(
            sse,
            np.array(start, dtype=np.float64),
            method="Nelder-Mead",
            options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-10},
        )
        if best is None or result.fun < best.fun:
            best = result
    return RegressionParams(*(float(b) for b in best.x))


def _score_one(args):
    cfg, ref_path, dist_path = args
    ref = load_image(ref_path)
    dist = load_image(dist_path)
    return resift_score(ref, dist, cfg).score


def _group_stats(raws, moses, variant):
    entry = {"n": len(raws)}
    raws = np.asarray(raws, dtype=np.float64)
    moses = np.asarray(moses, dtype=np.float64)
    try:
        entry["spearman_raw"] = spearman(raws, moses)
    except DegenerateData:
        entry["spearman_raw"] = "DegenerateData"
    try:
        beta = fit_regression(raws, moses, variant)
        fitted = apply_regression(beta, raws, variant)
        entry["pearson_fitted"] = pearson(fitted, moses)
        entry["beta"] = beta.as_list()
    except DegenerateData:
        entry["pearson_fitted"] = "DegenerateData"
        entry["beta"] = None
    return entry


def run_benchmark(
    manifest_path,
    cfg: ReSiftConfig,
    database: str = None,
    category: str = None,
    jobs: int = 1,
    scatter_dir=None,
) -> dict:
    """Score every manifest pair and aggregate correlations per database and
    canonical category.  Per-record failures are collected (the run aborts
    only when more than 10% of records fail).  Results are keyed by database
    name; each entry also carries the scatter rows written for plotting."""
    records = parse_manifest(manifest_path)
    if database is not None:
        records = [r for r in records if r.database == database]
    if category is not None:
        records = [r for r in records if category in r.categories or r.category == category]
    if not records:
        raise BenchmarkAborted("no records match the requested filters")

    args = [(cfg, r.ref_path, r.dist_path) for r in records]
    scores = [None] * len(records)
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = pool.map(_score_one_safe, args)
            for idx, outcome in enumerate(outcomes):
                scores[idx] = outcome
    else:
        for idx, arg in enumerate(args):
            scores[idx] = _score_one_safe(arg)
    for idx, outcome in enumerate(scores):
        if isinstance(outcome, str):
            failures.append({"line": records[idx].line, "ref": records[idx].ref_path,
                             "dist": records[idx].dist_path, "error": outcome})
            scores[idx] = None
    if len(failures) > 0.10 * len(records):
        raise BenchmarkAborted(
            f"{len(failures)} of {len(records)} records failed (>10%); "
            f"first failure: {failures[0]['error']}"
        )

    report = {}
    by_db = {}
    for rec, score in zip(records, scores):
        if score is None:
            continue
        by_db.setdefault(rec.database, []).append((rec, score))
    for db in sorted(by_db):
        pairs = by_db[db]
        raws = [s for _, s in pairs]
        moses = [r.mos for r, _ in pairs]
        entry = _group_stats(raws, moses, cfg.regression)
        entry["categories"] = {}
        for cat in CANONICAL_CATEGORIES:
            cat_pairs = [(r, s) for r, s in pairs if cat in r.categories]
            if not cat_pairs:
                continue
            entry["categories"][cat] = _group_stats(
                [s for _, s in cat_pairs], [r.mos for r, _ in cat_pairs], cfg.regression
            )
        entry["errors"] = [f for f in failures if _db_of_failure(f, records) == db]
        report[db] = entry
        if scatter_dir is not None:
            _write_scatter(scatter_dir, db, raws, moses, entry, cfg.regression)
    return report


def _db_of_failure(failure, records):
    for rec in records:
        if rec.line == failure["line"]:
            return rec.database
    return None


def _write_scatter(scatter_dir, db, raws, moses, entry, variant):
    os.makedirs(scatter_dir, exist_ok=True)
    if entry.get("beta"):
        regressed = apply_regression(RegressionParams(*entry["beta"]), raws, variant)
    else:
        regressed = list(raws)
    path = os.path.join(scatter_dir, f"scatter_{db}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["raw_score", "regressed_score", "mos"])
        for raw, reg, mos in zip(raws, regressed, moses):
            writer.writerow([repr(float(raw)), repr(float(reg)), repr(float(mos))])


def _score_one_safe(args):
    try:
        return _score_one(args)
    except ResiftError as exc:
        return f"{type(exc).__name__}: {exc}"


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
