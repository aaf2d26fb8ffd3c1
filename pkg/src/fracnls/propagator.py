"""Linear fractional flow ``U(t) = F^-1 exp(-i t |xi|^alpha) F`` and derivative multipliers."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .fields import Field, Grid, SpaceTimeField, to_physical, to_spectral

__all__ = [
    "check_alpha",
    "dispersion",
    "apply_multiplier",
    "linear_propagate",
    "linear_evolution",
    "riesz_derivative",
    "bessel_derivative",
]


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"alpha={alpha} outside (1, 2]")
    return alpha


def dispersion(grid: Grid, alpha: float) -> np.ndarray:
    """``|xi|^alpha`` in storage order."""
    return grid.xi_norm**alpha


def apply_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    """Fourier multiplier applied to a physical-space field."""
    if f.spectral:
        return f.like(f.values * multiplier)
    return Field(f.grid, to_physical(to_spectral(f.values, f.grid) * multiplier, f.grid))


def linear_propagate(f: Field, t: float, alpha: float) -> Field:
    """Solve ``i u_t = |grad|^alpha u`` exactly for time ``t``."""
    alpha = check_alpha(alpha)
    if not np.isfinite(t):
        raise ParameterError(f"t={t} is not finite")
    return apply_multiplier(f, np.exp(-1j * t * dispersion(f.grid, alpha)))


def linear_evolution(f: Field, alpha: float, n_time: int, dt: float, t0: float = 0.0) -> SpaceTimeField:
    """``U(t_k) f`` for ``t_k = t0 + k dt``, one forward FFT and ``n_time`` inverses."""
    alpha = check_alpha(alpha)
    g = f.grid.with_time(n_time, dt)
    fhat = to_spectral(f.values, g)
    disp = dispersion(g, alpha)
    out = np.empty((n_time,) + g.shape, dtype=np.complex128)
    for k, t in enumerate(g.times(t0)):
        out[k] = to_physical(fhat * np.exp(-1j * t * disp), g)
    return SpaceTimeField(g, out, t0)


def riesz_multiplier(grid: Grid, s: float) -> np.ndarray:
    xi = grid.xi_norm
    out = np.zeros(grid.shape)
    nz = xi > 0
    out[nz] = xi[nz] ** s
    return out


def riesz_derivative(f: Field, s: float) -> Field:
    """``|grad|^s f``; the zero mode is dropped for every ``s``."""
    return apply_multiplier(f, riesz_multiplier(f.grid, float(s)))


def bessel_multiplier(grid: Grid, s: float) -> np.ndarray:
    # <xi> = 1 + |xi|, not the Japanese bracket
    return (1.0 + grid.xi_norm) ** s


def bessel_derivative(f: Field, s: float) -> Field:
    """``<grad>^s f`` with symbol ``(1 + |xi|)^s``."""
    return apply_multiplier(f, bessel_multiplier(f.grid, float(s)))
