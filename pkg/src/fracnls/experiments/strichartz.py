"""Strichartz estimates with derivative loss and their transfer to X^{s,b} spaces."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..fields import Field, Grid, SpaceTimeField, to_physical, to_spectral
from ..norms import TimeWindow, mixed_norm, xsb_norm
from ..propagator import check_alpha, dispersion, riesz_multiplier
from ..randomize import build_window, philox, sample
from .config import ExperimentConfig, pair_problem
from .data import base_datum
from .parallel import run_indexed
from .report import FAIL, PASS, ExperimentReport
from .tails import derived_seed, provenance

STRICHARTZ_GROWTH = 0.10
UNITARITY_TOL = 1e-10


def loss_exponent(alpha: float, q: float) -> float:
    """Derivative loss ``(2 - alpha) / q``."""
    return 0.0 if np.isinf(q) else (2 - alpha) / q


def strichartz_ratio(f: Field, alpha: float, q: float, r: float, T: float, n_time: int) -> float:
    """``|| |grad|^{-(2-alpha)/q} U(t) f ||_{L^q([0,T]) L^r} / ||f||_{L^2}``."""
    alpha = check_alpha(alpha)
    g = f.grid.with_time(n_time, T / (n_time - 1))
    mult = riesz_multiplier(g, -loss_exponent(alpha, q))
    fhat = to_spectral(f.values, g) * mult
    disp = dispersion(g, alpha)
    u = np.stack([to_physical(fhat * np.exp(-1j * t * disp), g) for t in g.times()])
    return mixed_norm(SpaceTimeField(g, u), q, r) / f.l2_norm()


def _mean_zero(f: Field) -> Field:
    fh = to_spectral(f.values, f.grid)
    fh[(0,) * f.grid.d] = 0
    return Field(f.grid, to_physical(fh, f.grid))


def _strichartz_job(ctx, i):
    out = []
    for grid in ctx["grids"]:
        base = base_datum(grid, ctx["options"])
        _, f = sample(base, ctx["dist"], ctx["seed"], i, build_window(grid.d, grid))
        f = _mean_zero(f)
        out.append([strichartz_ratio(f, ctx["alpha"], q, r, ctx["T"], ctx["n_time"]) for q, r in ctx["pairs"]])
    return out


def strichartz_loss_check(config: ExperimentConfig, refinement_levels: int | None = None, jobs: int = 1) -> ExperimentReport:
    """Stability of the loss-weighted Strichartz ratio under spatial refinement at fixed box size."""
    opts = config.options
    levels = refinement_levels or opts["refinement_levels"]
    base = config.grid
    grids = [Grid(base.d, base.n * 2**k, base.length) for k in range(levels)]
    pairs = [tuple(p) for p in opts["pairs"]]
    d = base.d
    for q, r in pairs:
        problem = pair_problem(d, q, r)
        if problem:
            raise ParameterError(problem)
    pairs_all = pairs + [(np.inf, 2.0)]
    ctx = {
        "grids": grids,
        "options": opts,
        "dist": config.distribution,
        "seed": derived_seed(config.seed, "strichartz"),
        "alpha": config.alpha,
        "T": config.T,
        "n_time": opts["n_time"],
        "pairs": pairs_all,
    }
    vals = np.array(run_indexed(_strichartz_job, ctx, range(config.n_samples), jobs))  # (sample, level, pair)
    report = ExperimentReport("strichartz", ["sample", "N", "q", "r", "ratio"], provenance=provenance(config))
    for i in range(vals.shape[0]):
        for k, g in enumerate(grids):
            for j, (q, r) in enumerate(pairs_all):
                report.records.append({"sample": i, "N": g.n, "q": q, "r": r, "ratio": float(vals[i, k, j])})
    fig = {"title": f"loss-weighted Strichartz ratio, alpha={config.alpha:g}", "xlabel": "N", "ylabel": "median ratio",
           "xscale": "log", "lines": []}
    for j, (q, r) in enumerate(pairs):
        growth = vals[:, 1:, j] / vals[:, :-1, j] - 1
        med = np.median(vals[:, :, j], axis=0)
        key = f"q={q:g},r={r:g}"
        report.fits[key] = {
            "loss_exponent": loss_exponent(config.alpha, q),
            "median_ratio_by_N": dict(zip([str(g.n) for g in grids], med)),
            "max_growth": float(growth.max()),
            "max_abs_change": float(np.abs(growth).max()),
        }
        report.verdicts[f"refinement[{key}]"] = PASS if growth.max() <= STRICHARTZ_GROWTH else FAIL
        fig["lines"].append({"label": key, "x": [g.n for g in grids], "y": med, "marker": "o"})
    dev = float(np.abs(vals[:, :, -1] - 1).max())
    report.fits["q=inf,r=2"] = {"max_deviation_from_one": dev}
    report.verdicts["unitarity[q=inf]"] = PASS if dev <= UNITARITY_TOL else FAIL
    report.series["strichartz"] = fig
    return report


# X^{s,b} transfer


def _smooth_field(grid: Grid, rng: np.random.Generator, width: float, kmax: float) -> Field:
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec = np.fft.fftn(noise) * np.exp(-((grid.xi_norm / kmax) ** 2))
    env = np.exp(-sum(c**2 for c in grid.x_components) / (2 * width**2))
    v = np.fft.ifftn(spec)
    return Field(grid, env * v / np.abs(v).max())


def transfer_draw(grid: Grid, alpha: float, T: float, n_time: int, seed: int, index: int, eps: float, width: float) -> SpaceTimeField:
    """``eta_T(t) [exp(-i w t) U(t) f + eps h(t, x)]`` on ``[-2T, 2T)``.

    The draw depends on ``(seed, index)`` only and is defined for every ``t``,
    so different ``n_time`` sample the same function.
    """
    rng = philox(seed, index)
    f = _smooth_field(grid, rng, width, 4.0)
    omega = rng.uniform(-3, 3)
    parts = [_smooth_field(grid, rng, width, 2.0) for _ in range(3)]
    nu = rng.uniform(0, 10, 3)
    theta = rng.uniform(0, 2 * np.pi, 3)
    g = grid.with_time(n_time, 4 * T / n_time)
    t = g.times(-2 * T)
    disp = dispersion(grid, alpha)
    fh = to_spectral(f.values, grid)
    eta = TimeWindow(T)(t)
    out = np.empty((n_time,) + grid.shape, dtype=np.complex128)
    for k, tk in enumerate(t):
        lin = np.exp(-1j * omega * tk) * to_physical(fh * np.exp(-1j * tk * disp), grid)
        pert = sum(np.cos(n * tk + th) * p.values for n, th, p in zip(nu, theta, parts))
        out[k] = eta[k] * (lin + eps * pert)
    return SpaceTimeField(g, out, t0=-2 * T)


def transfer_ratios(u: SpaceTimeField, alpha: float, q: float, r: float, b: float) -> tuple[float, float]:
    """``(||u||_{L^q L^r} / ||u||_{X^{(2-a)/q, b}}, ||u||_{L^q L^2} / ||u||_{X^{0, b(1-2/q)}})``."""
    strich = mixed_norm(u, q, r) / xsb_norm(u, loss_exponent(alpha, q), b, alpha)
    mass = mixed_norm(u, q, 2) / xsb_norm(u, 0.0, b * (1 - 2 / q), alpha)
    return strich, mass


def _transfer_job(ctx, i):
    out = []
    for n_time in ctx["n_times"]:
        u = transfer_draw(ctx["grid"], ctx["alpha"], ctx["T"], n_time, ctx["seed"], i, ctx["eps"], ctx["width"])
        out.append(transfer_ratios(u, ctx["alpha"], ctx["q"], ctx["r"], ctx["b"]))
    return out


def xsb_transfer_check(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Largest ratio of the Strichartz/mass norms to their X^{s,b} controls, under time refinement."""
    opts = config.options
    q, r, b = config.q, config.r, config.b
    if not 0.5 < b < 1:
        raise ParameterError("b must lie in (1/2, 1)")
    problem = pair_problem(config.grid.d, q, r)
    if problem:
        raise ParameterError(problem)
    n0 = opts["n_time"]
    ctx = {
        "grid": config.grid,
        "alpha": config.alpha,
        "T": config.T,
        "n_times": [n0, 2 * n0],
        "seed": derived_seed(config.seed, "xsb-transfer"),
        "eps": opts["perturbation"],
        "width": opts["width"],
        "q": q,
        "r": r,
        "b": b,
    }
    vals = np.array(run_indexed(_transfer_job, ctx, range(config.n_samples), jobs))  # (sample, level, 2)
    report = ExperimentReport("xsb-transfer", ["sample", "n_time", "strichartz_ratio", "mass_ratio"], provenance=provenance(config))
    for i in range(vals.shape[0]):
        for k, n in enumerate(ctx["n_times"]):
            report.records.append({"sample": i, "n_time": n, "strichartz_ratio": float(vals[i, k, 0]), "mass_ratio": float(vals[i, k, 1])})
    for j, name in enumerate(("strichartz", "mass")):
        mx = vals[:, :, j].max(axis=0)
        change = float(mx[1] / mx[0] - 1)
        report.fits[name] = {"max_ratio_by_n_time": dict(zip(map(str, ctx["n_times"]), mx)), "refinement_change": change}
        ok = np.all(np.isfinite(vals[:, :, j])) and abs(change) <= STRICHARTZ_GROWTH
        report.verdicts[f"{name}_transfer"] = PASS if ok else FAIL
    report.series["xsb_transfer"] = {
        "title": "ratio to the X^{s,b} control",
        "xlabel": "sample",
        "ylabel": "ratio",
        "lines": [
            {"label": f"L^{q:g}L^{r:g} / X^{{(2-a)/q,b}}", "x": np.arange(vals.shape[0]), "y": vals[:, -1, 0], "marker": "."},
            {"label": f"L^{q:g}L^2 / X^{{0,b(1-2/q)}}", "x": np.arange(vals.shape[0]), "y": vals[:, -1, 1], "marker": "."},
        ],
    }
    return report
