"""Deterministic base data for the experiments."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..fields import Field, Grid, to_physical
from ..norms import sobolev_norm
from ..randomize import bump, philox

_PHASE_STREAM = 0x5EED  # substream of the master seed reserved for mode phases


def gaussian_datum(grid: Grid, width: float = 1.0, amplitude: float = 1.0, chirp: float = 0.0) -> Field:
    """``amplitude * exp(-|x|^2 / (2 width^2)) * (1 + i chirp x_1)``."""
    if not width > 0:
        raise ParameterError("width must be positive")
    r2 = sum(c**2 for c in grid.x_components)
    x1 = grid.x_components[0]
    return Field(grid, amplitude * np.exp(-r2 / (2 * width**2)) * (1 + 1j * chirp * x1))


def base_datum(grid: Grid, options: dict) -> Field:
    """Datum named by ``options['datum']``: ``gaussian`` or ``modulated`` (chirped gaussian)."""
    kind = options.get("datum", "gaussian")
    chirp = options.get("chirp", 0.0) if kind == "modulated" else 0.0
    f = gaussian_datum(grid, options.get("width", 1.0), options.get("amplitude", 1.0), chirp)
    if f.l2_norm() == 0:
        raise ParameterError("base datum is identically zero")
    return f


def mode_phases(grid: Grid, seed: int, table: int = 256) -> np.ndarray:
    """Unit phases keyed by integer mode index, identical on every grid sharing the box."""
    idx = grid.k_index_fft()
    if np.abs(idx).max() >= table // 2:
        raise ParameterError(f"phase table of size {table} is too small for n={grid.n}")
    rng = philox(seed, _PHASE_STREAM)
    ph = np.exp(2j * np.pi * rng.random((table,) * grid.d))
    return ph[np.ix_(*[idx % table] * grid.d)]


def power_law_datum(
    grid: Grid, s: float, extra: float, seed: int, normalize_on: Grid | None = None
) -> Field:
    """Spectrum ``C <xi>^{-s - d/2 - extra}`` with mode-keyed random phases.

    ``C`` makes ``||phi||_{H^s} = 1`` on ``normalize_on`` (default: ``grid``); a
    finer grid with the same box then carries the consistent extension of the
    coarse datum rather than a renormalized one.
    """
    ref = normalize_on or grid
    if ref.length != grid.length or ref.d != grid.d:
        raise ParameterError("normalization grid must share the box")

    def raw(g):
        return (1 + g.xi_norm) ** (-s - g.d / 2 - extra) * mode_phases(g, seed)

    c = 1.0 / sobolev_norm(Field(ref, raw(ref), spectral=True), s)
    return Field(grid, to_physical(c * raw(grid), grid))


def annulus_noise(grid: Grid, N: float, envelope: float, rng: np.random.Generator) -> Field:
    """Localized random datum with spectrum smoothly confined to ``N/2 < |xi| < N``.

    Complex white noise under a gaussian envelope of width ``envelope / N``,
    then multiplied by the radial taper ``bump((|xi| - 3N/4) / (N/4))``.
    """
    from ..fields import to_spectral

    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    r2 = sum(c**2 for c in grid.x_components)
    f = noise * np.exp(-r2 / (2 * (envelope / N) ** 2))
    taper = bump((grid.xi_norm - 0.75 * N) / (0.25 * N))
    return Field(grid, to_physical(to_spectral(f, grid) * taper, grid))


def ball_noise(grid: Grid, center, rho: float, envelope: float, rng: np.random.Generator) -> Field:
    """Localized random datum with spectrum smoothly confined to ``|xi - center| < rho``."""
    from ..fields import to_spectral

    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    r2 = sum(c**2 for c in grid.x_components)
    f = noise * np.exp(-r2 / (2 * (envelope / rho) ** 2))
    dist = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(grid.xi_components, center)))
    return Field(grid, to_physical(to_spectral(f, grid) * bump(dist / rho), grid))
