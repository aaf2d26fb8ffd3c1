"""Experiment reports, regression fits, and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

# project-wide tolerances; overriding them is recorded in the report
SLOPE_TOLERANCE = 0.2
CONVERGENCE_TOLERANCE = 0.15
TAIL_PROB_RANGE = (0.005, 0.8)
TAIL_MIN_POINTS = 6


@dataclass
class LinearFit:
    slope: float
    intercept: float
    slope_se: float
    slope_ci: tuple[float, float]
    n: int
    residual_rms: float

    @property
    def t_stat(self) -> float:
        if self.slope_se == 0:
            return math.copysign(math.inf, self.slope) if self.slope else 0.0
        return self.slope / self.slope_se

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_se": self.slope_se,
            "slope_ci95": list(self.slope_ci),
            "t_stat": self.t_stat,
            "n_points": self.n,
            "residual_rms": self.residual_rms,
        }


def linear_fit(x, y) -> LinearFit:
    """Least squares ``y = intercept + slope x`` with a 95% t-interval on the slope."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points to fit a line")
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    if n > 2:
        se = float(res.stderr)
        half = float(stats.t.ppf(0.975, n - 2) * se)
    else:
        se, half = 0.0, 0.0
    return LinearFit(
        float(res.slope), float(res.intercept), se, (float(res.slope) - half, float(res.slope) + half), n,
        float(np.sqrt(np.mean(resid**2))),
    )


def empirical_ccdf(samples, lambdas) -> np.ndarray:
    """``P(X > lambda)`` from samples."""
    s = np.sort(np.asarray(samples, float))
    return 1.0 - np.searchsorted(s, np.asarray(lambdas, float), side="right") / len(s)


def default_lambda_grid(samples, n_points: int = 16) -> np.ndarray:
    """Equispaced grid from the 20th to the 99.5th empirical percentile."""
    lo, hi = np.percentile(samples, [20.0, 99.5])
    return np.linspace(lo, hi, n_points)


@dataclass
class TailFit:
    lambdas: np.ndarray
    probs: np.ndarray
    used: np.ndarray
    fit: LinearFit | None

    @property
    def conclusive(self) -> bool:
        return self.fit is not None

    def verdict(self, min_t: float = 3.0) -> str:
        if self.fit is None:
            return INCONCLUSIVE
        return PASS if self.fit.slope < 0 and abs(self.fit.t_stat) > min_t else FAIL


def tail_fit(samples, lambdas=None) -> TailFit:
    """Fit ``log P(X > lambda)`` against ``lambda^2`` over the usable part of the grid."""
    lam = default_lambda_grid(samples) if lambdas is None else np.asarray(lambdas, float)
    probs = empirical_ccdf(samples, lam)
    lo, hi = TAIL_PROB_RANGE
    used = (probs > lo) & (probs < hi)
    fit = None
    if used.sum() >= TAIL_MIN_POINTS:
        fit = linear_fit(lam[used] ** 2, np.log(probs[used]))
    return TailFit(lam, probs, used, fit)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


@dataclass
class ExperimentReport:
    """Per-sample records, fitted quantities, verdicts and provenance of one run."""

    kind: str
    columns: list[str]
    records: list[dict] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    series: dict = field(default_factory=dict)
    # extra output files: name -> callable(path) that writes it
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def status(self) -> str:
        """``fail`` if any verdict fails, else ``inconclusive`` if any is, else ``pass``."""
        v = list(self.verdicts.values())
        if any(x == FAIL for x in v):
            return FAIL
        if any(x == INCONCLUSIVE for x in v):
            return INCONCLUSIVE
        return PASS

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.records:
            w.writerow([_cell(r[c]) for c in self.columns])
        return buf.getvalue()

    def summary(self) -> dict:
        return _jsonable(
            {
                "kind": self.kind,
                "status": self.status,
                "verdicts": self.verdicts,
                "fits": self.fits,
                "provenance": self.provenance,
                "notes": self.notes,
                "columns": self.columns,
                "n_records": len(self.records),
            }
        )

    def write(self, out_dir) -> dict:
        """Write ``report.csv`` and ``summary.json``; returns ``{name: sha256}``."""
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "report.csv": self.csv_text(),
            "summary.json": json.dumps(self.summary(), indent=2, sort_keys=True) + "\n",
        }
        sums = {}
        for name, text in files.items():
            (out / name).write_text(text)
            sums[name] = hashlib.sha256(text.encode()).hexdigest()
        for name, writer in self.artifacts.items():
            for path in writer(out / name):
                sums[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return sums

    def verdict_lines(self) -> list[str]:
        return [f"{name}: {v}" for name, v in self.verdicts.items()]
