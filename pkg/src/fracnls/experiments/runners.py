"""Single-trajectory and single-draw runs: evolve a datum, or randomize one."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..fields import write_binary
from ..randomize import build_window, coefficients, randomize, wiener_project
from ..solver import evolve
from .config import ExperimentConfig
from .data import base_datum
from .evolution import _series
from .report import ExperimentReport
from .tails import derived_seed, provenance


def _datum(config: ExperimentConfig, tag: str):
    """Base datum, randomized when ``params.randomized`` is set; returns ``(field, provenance)``."""
    opts = config.options
    phi = base_datum(config.grid, opts)
    prov = {"kind": "plain", "datum": opts.get("datum", "gaussian")}
    if opts.get("randomized", False):
        seed = derived_seed(config.seed, tag)
        w = build_window(config.grid.d, config.grid)
        g = coefficients(config.distribution, seed, opts["sample_index"], w.lattice)
        phi = randomize(phi, g, w)
        prov = {**prov, "kind": "randomized", "seed": seed, "sample_index": opts["sample_index"],
                "distribution": config.distribution.kind}
    return phi, prov


def simulate(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Evolve the configured datum and record mass and energy at every snapshot."""
    opts = config.options
    phi, prov = _datum(config, "simulate")
    traj = evolve(phi, config.T, opts["n_time"], config.flow_params(), opts["method"], substeps=opts["substeps"], provenance=prov)
    m, e = _series(traj)
    report = ExperimentReport(
        "simulate", ["t", "mass", "kinetic", "potential", "energy", "max_abs"], provenance=provenance(config)
    )
    for k, t in enumerate(traj.times):
        report.records.append({
            "t": float(t), "mass": m[k], "kinetic": e[k, 0], "potential": e[k, 1], "energy": e[k, 2],
            "max_abs": float(np.abs(traj.snapshots.values[k]).max()),
        })
    report.fits.update({
        "method": traj.method,
        "picard_iterations": traj.picard_iterations,
        "mass_drift": float(np.abs(m / m[0] - 1).max()),
        "energy_drift": float(np.abs(e[:, 2] / e[0, 2] - 1).max()) if e[0, 2] != 0 else float(np.abs(e[:, 2]).max()),
    })

    def _save(path: Path):
        return [path, traj.save(path, seed=config.seed)]

    report.artifacts["trajectory.bin"] = _save
    report.series["invariants"] = {
        "title": "mass and energy along the trajectory",
        "xlabel": "t",
        "ylabel": "value",
        "lines": [
            {"label": "mass", "x": traj.times, "y": m},
            {"label": "energy", "x": traj.times, "y": e[:, 2]},
        ],
    }
    return report


def randomize_run(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """One draw ``f^omega``; the CSV lists every cube's coefficient and projected mass."""
    opts = config.options
    phi = base_datum(config.grid, opts)
    w = build_window(config.grid.d, config.grid)
    seed = derived_seed(config.seed, "randomize")
    g = coefficients(config.distribution, seed, opts["sample_index"], w.lattice)
    f = randomize(phi, g, w)
    d = config.grid.d
    cols = [f"n{i + 1}" for i in range(d)] + ["re", "im", "block_l2"]
    report = ExperimentReport("randomize", cols, provenance=provenance(config))
    for n, gn in zip(w.lattice, g):
        block = wiener_project(phi, n, w).l2_norm()
        report.records.append({**{f"n{i + 1}": int(c) for i, c in enumerate(n)}, "re": float(gn.real), "im": float(gn.imag), "block_l2": block})
    blocks = np.array([r["block_l2"] for r in report.records])
    report.fits.update({
        "seed": seed,
        "sample_index": opts["sample_index"],
        "base_l2": phi.l2_norm(),
        "randomized_l2": f.l2_norm(),
        "expected_l2_squared": float(np.sum(blocks**2)),
        "n_cubes": int(len(g)),
    })

    def _save(path: Path):
        write_binary(path, f)
        return [path]

    report.artifacts["field.bin"] = _save
    order = np.argsort(-blocks)
    report.series["coefficients"] = {
        "title": "cube masses and coefficient moduli",
        "xlabel": "cube (sorted by mass)",
        "ylabel": "value",
        "yscale": "log",
        "lines": [
            {"label": "||psi(D-n) f||", "x": np.arange(len(g)), "y": blocks[order] + 1e-300, "marker": "."},
            {"label": "|g_n| ||psi(D-n) f||", "x": np.arange(len(g)), "y": (np.abs(g) * blocks)[order] + 1e-300, "marker": "x"},
        ],
    }
    return report
