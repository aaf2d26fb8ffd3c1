"""Tail and moment experiments for randomized data."""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import ParameterError
from ..norms import NormSpec, evaluate, sobolev_norm
from ..propagator import linear_evolution, linear_propagate
from ..randomize import RandomDistribution, build_window, philox, sample
from .config import ExperimentConfig
from .data import base_datum
from .parallel import run_indexed
from .report import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    ExperimentReport,
    default_lambda_grid,
    empirical_ccdf,
    linear_fit,
    tail_fit,
)

KHINTCHINE_MARGIN = 0.1
KHINTCHINE_BLOCK = 10_000


def derived_seed(seed: int, tag: str) -> int:
    """Stable 64-bit seed for a named sub-experiment."""
    return int.from_bytes(hashlib.sha256(f"{seed}:{tag}".encode()).digest()[:8], "little")


def _tail_sample(ctx, i):
    datum, field = sample(ctx["base"], ctx["dist"], ctx["seed"], i, ctx["window"])
    out = []
    for spec, evolve in zip(ctx["specs"], ctx["evolve"]):
        if spec.kind == "sobolev":
            f = linear_propagate(field, ctx["T"], ctx["alpha"]) if evolve else field
            out.append(sobolev_norm(f, spec["s"]))
        else:
            if not evolve:
                raise ParameterError(f"{spec} needs a space-time field: enable the linear flow")
            u = linear_evolution(field, ctx["alpha"], ctx["n_time"], ctx["T"] / (ctx["n_time"] - 1))
            out.append(evaluate(spec, u))
    return out


def _tail_values(config: ExperimentConfig, law: str, specs, evolve, jobs: int) -> np.ndarray:
    base = base_datum(config.grid, config.options)
    if base.l2_norm() == 0:
        raise ParameterError("degenerate base datum")
    ctx = {
        "base": base,
        "dist": RandomDistribution(law),
        "seed": derived_seed(config.seed, f"tail:{law}"),
        "window": build_window(config.grid.d, config.grid),
        "specs": list(specs),
        "evolve": list(evolve),
        "alpha": config.alpha,
        "T": config.T,
        "n_time": config.options.get("n_time", 9),
    }
    return np.array(run_indexed(_tail_sample, ctx, range(config.n_samples), jobs))


def _lambda_grid(config: ExperimentConfig, values: np.ndarray) -> np.ndarray:
    if not config.lambda_grid:
        return default_lambda_grid(values)
    lam = np.asarray(config.lambda_grid, float)
    lo, hi = np.percentile(values, [20.0, 99.5])
    if lam.min() > lo or lam.max() < hi:
        raise ParameterError(
            f"lambda grid [{lam.min():g}, {lam.max():g}] does not cover the empirical "
            f"20th-99.5th percentiles [{lo:g}, {hi:g}]"
        )
    return lam


def _add_tail(report: ExperimentReport, config, law: str, spec: NormSpec, values: np.ndarray) -> None:
    key = f"{law}|{spec}"
    lam = _lambda_grid(config, values)
    tf = tail_fit(values, lam)
    report.fits[key] = {
        "lambda": lam,
        "ccdf": tf.probs,
        "points_used": int(tf.used.sum()),
        "quadratic_coefficient": tf.fit,
        "median": float(np.median(values)),
    }
    report.verdicts[f"tail[{key}]"] = tf.verdict()
    if not tf.conclusive:
        report.notes.append(f"{key}: fewer than 6 lambda points with probability in (0.005, 0.8)")
    m = np.median(values)
    report.series.setdefault(f"tail_{law}", {
        "title": f"tail of randomized norms ({law})",
        "xlabel": "(lambda / median)^2",
        "ylabel": "P(X > lambda)",
        "yscale": "log",
        "lines": [],
    })["lines"].append({"label": str(spec), "x": (lam / m) ** 2, "y": tf.probs, "marker": "o"})
    for i, v in enumerate(values):
        report.records.append({"law": law, "norm": str(spec), "sample": i, "value": float(v)})


def mc_tail(config: ExperimentConfig, norm: NormSpec | str, evolve_linear: bool = False, jobs: int = 1) -> ExperimentReport:
    """Empirical tail of ``||f^omega||`` (or of ``U(t) f^omega``) and its fit against ``lambda^2``."""
    spec = NormSpec.parse(norm) if isinstance(norm, str) else norm
    law = config.distribution.kind
    values = _tail_values(config, law, [spec], [evolve_linear], jobs)[:, 0]
    report = _new_tail_report(config)
    _add_tail(report, config, law, spec, values)
    return report


def _new_tail_report(config) -> ExperimentReport:
    return ExperimentReport(
        "mc-tail",
        ["law", "norm", "sample", "value"],
        provenance=provenance(config),
    )


def tail_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """:func:`mc_tail` for every configured law and norm; mixed norms use the linear flow."""
    specs = [NormSpec.parse(t) for t in config.options["norms"]]
    evolve = [s.kind != "sobolev" for s in specs]
    report = _new_tail_report(config)
    for law in config.options["laws"]:
        values = _tail_values(config, law, specs, evolve, jobs)
        for j, spec in enumerate(specs):
            _add_tail(report, config, law, spec, values[:, j])
    return report


def provenance(config: ExperimentConfig) -> dict:
    from .. import __version__

    out = {"config_hash": config.hash, "seed": config.seed, "version": __version__, "config": config.document}
    over = config.tolerance_overrides()
    if over:
        out["tolerance_overrides"] = over
    return out


# moments of random sums


def gaussian_lp_norm(c, p: float) -> float:
    """Exact ``||sum g_n c_n||_{L^p}`` for i.i.d. standard real gaussians."""
    return float(np.linalg.norm(c) * RandomDistribution("complex_gaussian").moment(p) ** (1 / p))


def _moment_block(ctx, j):
    rng = philox(ctx["seed"], j)
    size = min(KHINTCHINE_BLOCK, ctx["n"] - j * KHINTCHINE_BLOCK)
    g = ctx["dist"].draw(rng, (size, len(ctx["c"])))
    s = np.abs(g @ ctx["c"])
    return [(float(np.sum(s**p)), float(np.sum(s ** (2 * p)))) for p in ctx["p"]]


def khintchine_moments(c, dist: RandomDistribution, p_grid, n_samples: int, seed: int, jobs: int = 1):
    """Monte-Carlo ``E|sum g_n c_n|^p`` and its standard error for each ``p``."""
    c = np.asarray(c, dtype=float)
    ctx = {"c": c, "dist": dist, "p": list(p_grid), "n": n_samples, "seed": seed}
    blocks = run_indexed(_moment_block, ctx, range(-(-n_samples // KHINTCHINE_BLOCK)), jobs)
    sums = np.sum(np.array(blocks), axis=0)  # (n_p, 2), folded in block order
    mean = sums[:, 0] / n_samples
    var = sums[:, 1] / n_samples - mean**2
    return mean, np.sqrt(np.maximum(var, 0) / n_samples)


def khintchine_check(
    c_vector,
    dist: RandomDistribution,
    p_grid,
    n_samples: int,
    seed: int = 0,
    jobs: int = 1,
    config: ExperimentConfig | None = None,
) -> ExperimentReport:
    """Growth in ``p`` of ``||sum g_n c_n||_{L^p(Omega)}``; coefficients use the real component law."""
    p = np.asarray(p_grid, float)
    if p.min() < 2 or p.max() > 12:
        raise ParameterError("p_grid must lie in [2, 12]")
    c = np.asarray(c_vector, float)
    if not np.any(c):
        raise ParameterError("coefficient vector is zero")
    report = ExperimentReport(
        "khintchine",
        ["law", "p", "moment", "moment_se", "lp_norm", "gaussian_lp_norm"],
        provenance=provenance(config) if config is not None else {"seed": seed},
    )
    _khintchine_into(report, c, dist, p, n_samples, seed, jobs)
    return report


def _khintchine_into(report, c, dist, p, n_samples, seed, jobs):
    law = dist.kind
    mean, se = khintchine_moments(c, dist, p, n_samples, seed, jobs)
    lp = mean ** (1 / p)
    cnorm = np.linalg.norm(c)
    exact = np.array([gaussian_lp_norm(c, pk) for pk in p])
    for k, pk in enumerate(p):
        report.records.append({
            "law": law, "p": float(pk), "moment": float(mean[k]), "moment_se": float(se[k]),
            "lp_norm": float(lp[k]), "gaussian_lp_norm": float(exact[k]),
        })
    fit = linear_fit(np.log(p), np.log(lp / cnorm))
    report.fits[f"{law}|growth"] = fit
    report.verdicts[f"growth[{law}]"] = PASS if fit.slope <= 0.5 + KHINTCHINE_MARGIN else FAIL
    if np.any(p == 2):
        k = int(np.argmax(p == 2))
        z = (mean[k] - cnorm**2) / se[k] if se[k] > 0 else 0.0
        report.fits[f"{law}|second_moment_z"] = float(z)
        report.verdicts[f"second_moment[{law}]"] = PASS if abs(z) <= 3 else FAIL
    if law == "complex_gaussian":
        rel = np.abs(lp / exact - 1)
        report.fits[f"{law}|closed_form_max_rel"] = float(rel.max())
        report.verdicts["closed_form[gaussian]"] = PASS if rel.max() <= 0.05 else FAIL
    report.series.setdefault("khintchine", {
        "title": "moment growth of random sums",
        "xlabel": "p",
        "ylabel": "||sum g_n c_n||_{L^p} / ||c||",
        "xscale": "log",
        "yscale": "log",
        "lines": [],
    })["lines"].append({"label": law, "x": p, "y": lp / cnorm, "marker": "o"})
    if law == "complex_gaussian":
        report.series["khintchine"]["lines"].append({"label": "gaussian closed form", "x": p, "y": exact / cnorm, "style": "--"})


def khintchine_suite(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    n = config.options["n_coefficients"]
    c = 1.0 / (1.0 + np.arange(n))
    p = np.asarray(config.options["p_grid"], float)
    report = ExperimentReport(
        "khintchine",
        ["law", "p", "moment", "moment_se", "lp_norm", "gaussian_lp_norm"],
        provenance=provenance(config),
    )
    for law in config.options["laws"]:
        _khintchine_into(report, c, RandomDistribution(law), p, config.n_samples, derived_seed(config.seed, f"khintchine:{law}"), jobs)
    return report


__all__ = [
    "mc_tail",
    "tail_suite",
    "khintchine_check",
    "khintchine_suite",
    "khintchine_moments",
    "gaussian_lp_norm",
    "empirical_ccdf",
    "INCONCLUSIVE",
]
