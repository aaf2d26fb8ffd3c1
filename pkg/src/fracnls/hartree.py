"""Hartree nonlinearity ``mu (|x|^{-2 alpha} * |u|^2) u`` and the conserved functionals.

The Riesz kernel acts as the multiplier ``c_{d,2a} |xi|^{2a-d}`` with
``c_{d,b} = 2^{d-b} pi^{d/2} Gamma((d-b)/2) / Gamma(b/2)``.  On the periodic box
the zero mode of the multiplier is set to zero, i.e. the mean of ``|u|^2`` is
removed from the potential.  That shift is spatially constant, so it only adds
a global time-dependent phase to the flow; ``|u|``, mass and ``K`` are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gamma

from .errors import ParameterError
from .fields import Field, Grid, to_physical, to_spectral
from .propagator import check_alpha, dispersion

__all__ = [
    "HartreeParams",
    "Energy",
    "riesz_constant",
    "riesz_multiplier",
    "riesz_potential_convolve",
    "hartree_potential",
    "hartree_force",
    "mass",
    "energy",
    "lp_norm",
    "frac_bound_ratio",
]


@dataclass(frozen=True)
class HartreeParams:
    alpha: float
    mu: float
    d: int

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.mu == 0 or not np.isfinite(self.mu):
            raise ParameterError("coupling mu must be a nonzero real number")
        check_hls(self.d, self.alpha)


def check_hls(d: int, alpha: float) -> None:
    if not d > 2 * alpha:
        raise ParameterError(
            f"|x|^(-2 alpha) is not locally integrable for d={d}, alpha={alpha}: "
            f"the Hartree kernel needs d > 2 alpha (Hardy-Littlewood-Sobolev range)"
        )


def riesz_constant(d: int, beta: float) -> float:
    """Fourier transform constant of ``|x|^-beta`` in R^d, ``0 < beta < d``."""
    return float(2 ** (d - beta) * np.pi ** (d / 2) * gamma((d - beta) / 2) / gamma(beta / 2))


@lru_cache(maxsize=32)
def riesz_multiplier(grid: Grid, alpha: float) -> np.ndarray:
    """``c_{d,2a} |xi|^{2a-d}`` with the zero mode removed (read-only)."""
    check_hls(grid.d, alpha)
    xi = grid.xi_norm
    out = np.zeros(grid.shape)
    nz = xi > 0
    out[nz] = riesz_constant(grid.d, 2 * alpha) * xi[nz] ** (2 * alpha - grid.d)
    out.setflags(write=False)
    return out


def _potential(density: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    return to_physical(to_spectral(density, grid) * riesz_multiplier(grid, alpha), grid)


def riesz_potential_convolve(g: Field, alpha: float) -> Field:
    """``|x|^{-2 alpha} * g`` on the periodic box."""
    check_alpha(alpha)
    return Field(g.grid, _potential(g.values, g.grid, float(alpha)))


def hartree_potential(values: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    """Real potential ``|x|^{-2 alpha} * |u|^2`` from raw samples."""
    return _potential(np.abs(values) ** 2, grid, alpha).real


def hartree_force(u: Field, p: HartreeParams) -> Field:
    _match(u, p)
    return Field(u.grid, p.mu * hartree_potential(u.values, u.grid, p.alpha) * u.values)


def _match(u: Field, p: HartreeParams) -> None:
    if u.grid.d != p.d:
        raise ParameterError(f"field dimension {u.grid.d} != params dimension {p.d}")


def mass(u: Field) -> float:
    return float(u.grid.cell_volume * np.sum(np.abs(u.values) ** 2))


class Energy(NamedTuple):
    kinetic: float
    potential: float
    total: float


def kinetic_energy(u: Field, alpha: float) -> float:
    g = u.grid
    uhat = to_spectral(u.values, g)
    w = g.spectral_cell_volume / (2 * np.pi) ** g.d
    return float(0.5 * w * np.sum(dispersion(g, alpha) * np.abs(uhat) ** 2))


def potential_energy(u: Field, p: HartreeParams) -> float:
    dens = np.abs(u.values) ** 2
    pot = _potential(dens, u.grid, p.alpha)
    return float(0.25 * p.mu * u.grid.cell_volume * np.sum(pot * dens).real)


def energy(u: Field, p: HartreeParams) -> Energy:
    """``(K, P, K + P)``."""
    _match(u, p)
    k = kinetic_energy(u, p.alpha)
    pe = potential_energy(u, p)
    return Energy(k, pe, k + pe)


def lp_norm(values: np.ndarray, grid: Grid, r: float) -> float:
    """Spatial ``L^r`` norm of raw samples; ``r = inf`` is the grid maximum."""
    a = np.abs(values)
    if np.isinf(r):
        return float(a.max())
    return float((grid.cell_volume * np.sum(a**r)) ** (1.0 / r))


def frac_bound_ratio(u: Field, alpha: float, eps1: float) -> float:
    """``||K * |u|^2||_inf / (||u||_{p-} ||u||_{p+})`` with ``p+- = 2d/(d - 2 alpha -+ eps1)``."""
    d = u.grid.d
    check_hls(d, alpha)
    if not 0 < eps1 < d - 2 * alpha:
        raise ParameterError(f"eps1={eps1} must lie in (0, d - 2 alpha)")
    lhs = lp_norm(_potential(np.abs(u.values) ** 2, u.grid, alpha), u.grid, np.inf)
    p_hi = 2 * d / (d - 2 * alpha - eps1)
    p_lo = 2 * d / (d - 2 * alpha + eps1)
    return lhs / (lp_norm(u.values, u.grid, p_hi) * lp_norm(u.values, u.grid, p_lo))
