"""Nonlinear evolution: Strang split-step and Picard iteration of the Duhamel map.

The nonlinear substep ``i u_t = mu V[|u|^2] u`` leaves ``|u|`` invariant, so it
is solved exactly by the phase ``exp(-i dt mu V)``.  Snapshots are stored on a
uniform grid; when ``substeps > 1`` each snapshot interval is split further.

The Picard route iterates
``u = U(t) phi - i mu int_0^t U(t - t') F(u(t')) dt'`` on the stored snapshots
with the trapezoidal rule.  On ``[0, T]`` the cutoffs ``eta_T`` of the
contraction argument equal one, so they are omitted.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, PicardDivergenceError
from .fields import Field, SpaceTimeField, read_binary, to_physical, to_spectral, write_binary
from .hartree import HartreeParams, hartree_potential
from .propagator import check_alpha, dispersion

log = logging.getLogger(__name__)

__all__ = ["Trajectory", "strang_step", "evolve", "duhamel_part", "linear_params"]

PICARD_TOL = 1e-10
PICARD_MAX_ITER = 50
PICARD_GROWTH_WINDOW = 5


@dataclass(frozen=True)
class LinearParams:
    """Parameter set for the free flow (``mu = 0``), which HartreeParams forbids."""

    alpha: float
    d: int
    mu: float = 0.0

    def __post_init__(self):
        check_alpha(self.alpha)


def linear_params(alpha: float, d: int) -> LinearParams:
    return LinearParams(float(alpha), int(d))


@dataclass(eq=False)
class Trajectory:
    params: HartreeParams | LinearParams
    snapshots: SpaceTimeField
    method: str
    datum: Field = field(repr=False)
    datum_provenance: dict = field(default_factory=lambda: {"kind": "plain"})
    picard_iterations: int = 0

    @property
    def grid(self):
        return self.snapshots.grid

    @property
    def times(self) -> np.ndarray:
        return self.snapshots.times

    def __len__(self) -> int:
        return self.grid.n_time

    def __getitem__(self, k: int) -> Field:
        return self.snapshots.snapshot(k)

    @property
    def final(self) -> Field:
        return self[len(self) - 1]

    def save(self, path, seed: int | None = None) -> Path:
        """Binary container plus ``<path>.json`` sidecar manifest."""
        path = Path(path)
        write_binary(path, self.snapshots)
        manifest = {
            "alpha": self.params.alpha,
            "mu": self.params.mu,
            "d": self.params.d,
            "method": self.method,
            "picard_iterations": self.picard_iterations,
            "datum": self.datum_provenance,
            "seed": seed,
        }
        side = path.with_name(path.name + ".json")
        side.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return side

    @classmethod
    def load(cls, path) -> "Trajectory":
        path = Path(path)
        snaps = read_binary(path)
        meta = json.loads(path.with_name(path.name + ".json").read_text())
        if meta["mu"] == 0:
            params = linear_params(meta["alpha"], meta["d"])
        else:
            params = HartreeParams(meta["alpha"], meta["mu"], meta["d"])
        return cls(params, snaps, meta["method"], snaps.snapshot(0), meta["datum"], meta.get("picard_iterations", 0))


def _check_params(u: Field, p) -> None:
    if u.grid.d != p.d:
        raise ParameterError(f"field dimension {u.grid.d} != params dimension {p.d}")


def _strang_raw(v: np.ndarray, grid, half_phase: np.ndarray, dt: float, p) -> np.ndarray:
    v = to_physical(to_spectral(v, grid) * half_phase, grid)
    if p.mu != 0:
        v = v * np.exp(-1j * dt * p.mu * hartree_potential(v, grid, p.alpha))
    return to_physical(to_spectral(v, grid) * half_phase, grid)


def strang_step(u: Field, dt: float, p) -> Field:
    """One Strang step: ``U(dt/2)``, exact Hartree phase, ``U(dt/2)``."""
    if not dt > 0:
        raise ParameterError(f"dt={dt} must be positive")
    _check_params(u, p)
    half = np.exp(-0.5j * dt * dispersion(u.grid, p.alpha))
    return Field(u.grid, _strang_raw(u.values, u.grid, half, dt, p))


def _free_snapshots(phi: Field, times, alpha: float) -> np.ndarray:
    """``U(t_k) phi`` evaluated directly in spectral space."""
    g = phi.grid
    disp = dispersion(g, alpha)
    phat = to_spectral(phi.values, g)
    return to_physical(np.stack([phat * np.exp(-1j * t * disp) for t in times]), g)


def _strang_run(phi: Field, T: float, n_time: int, p, substeps: int) -> np.ndarray:
    g = phi.grid
    if p.mu == 0:
        # no nonlinear substep: the split step is the exact propagator
        return _free_snapshots(phi, g.with_time(n_time, T / (n_time - 1)).times(), p.alpha)
    h = T / (n_time - 1) / substeps
    half = np.exp(-0.5j * h * dispersion(g, p.alpha))
    out = np.empty((n_time,) + g.shape, dtype=np.complex128)
    v = phi.values.copy()
    out[0] = v
    for k in range(1, n_time):
        for _ in range(substeps):
            v = _strang_raw(v, g, half, h, p)
        out[k] = v
    return out


def _duhamel_integral(forces_hat: np.ndarray, times: np.ndarray, disp: np.ndarray) -> np.ndarray:
    """``int_0^{t_k} U(t_k - t') F(t') dt'`` in spectral space, trapezoidal rule."""
    n = len(times)
    g = np.empty_like(forces_hat)
    for j, t in enumerate(times):
        g[j] = np.exp(1j * t * disp) * forces_hat[j]
    acc = np.zeros_like(forces_hat)
    for k in range(1, n):
        acc[k] = acc[k - 1] + 0.5 * (times[k] - times[k - 1]) * (g[k - 1] + g[k])
    for k, t in enumerate(times):
        acc[k] *= np.exp(-1j * t * disp)
    return acc


def _picard_run(phi: Field, T: float, n_time: int, p, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    g = phi.grid
    times = np.linspace(0.0, T, n_time)
    disp = dispersion(g, p.alpha)
    phat = to_spectral(phi.values, g)
    free_hat = np.stack([phat * np.exp(-1j * t * disp) for t in times])
    free = to_physical(free_hat, g)
    if p.mu == 0:
        return free, 0
    u = free.copy()
    residuals = []
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            forces = np.stack([p.mu * hartree_potential(v, g, p.alpha) * v for v in u])
            new = to_physical(free_hat - 1j * _duhamel_integral(to_spectral(forces, g), times, disp), g)
            res = max(np.sqrt(g.cell_volume * np.sum(np.abs(a - b) ** 2)) for a, b in zip(new, u))
        u = new
        log.debug("picard iteration %d residual %.3e", it, res)
        residuals.append(res)
        if res < tol:
            return u, it
        recent = residuals[-(PICARD_GROWTH_WINDOW + 1):]
        grew = len(recent) == PICARD_GROWTH_WINDOW + 1 and all(b > a for a, b in zip(recent, recent[1:]))
        if grew or not np.isfinite(res):
            raise PicardDivergenceError(
                f"Duhamel iteration residual grew for {PICARD_GROWTH_WINDOW} consecutive iterations "
                f"(last {res:.3e}); the fixed point is only local in time, retry with a smaller T"
            )
    log.warning("picard iteration stopped at %d iterations, residual %.3e", max_iter, residuals[-1])
    return u, max_iter


def evolve(
    phi: Field,
    T: float,
    n_time: int,
    p,
    method: str = "strang",
    substeps: int = 1,
    provenance: dict | None = None,
    tol: float = PICARD_TOL,
    max_iter: int = PICARD_MAX_ITER,
) -> Trajectory:
    """Evolve ``phi`` to time ``T`` storing ``n_time`` equispaced snapshots on ``[0, T]``."""
    if not T > 0:
        raise ParameterError(f"T={T} must be positive")
    if n_time < 2:
        raise ParameterError("n_time must be >= 2")
    if substeps < 1:
        raise ParameterError("substeps must be >= 1")
    _check_params(phi, p)
    iters = 0
    if method == "strang":
        values = _strang_run(phi, T, n_time, p, substeps)
    elif method == "picard":
        values, iters = _picard_run(phi, T, n_time, p, tol, max_iter)
    else:
        raise ParameterError(f"unknown method {method!r}")
    grid = phi.grid.with_time(n_time, T / (n_time - 1))
    snaps = SpaceTimeField(grid, values)
    return Trajectory(p, snaps, method, phi, provenance or {"kind": "plain"}, iters)


def duhamel_part(traj: Trajectory, phi: Field) -> SpaceTimeField:
    """``v(t_k) = u(t_k) - U(t_k) phi``."""
    g = traj.grid
    if phi.grid.shape != g.shape or phi.grid.length != g.length or not np.array_equal(phi.values, traj.datum.values):
        raise ParameterError("datum does not match the one the trajectory was evolved from")
    v = traj.snapshots.values - _free_snapshots(phi, traj.times, traj.params.alpha)
    v[0] = 0.0
    return SpaceTimeField(g, v)
