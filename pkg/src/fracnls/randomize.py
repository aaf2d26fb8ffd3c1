"""Wiener decomposition on unit frequency cubes and randomization of data.

``f^omega = sum_n g_n psi(D - n) f`` is assembled in one spectral pass: the
spectrum of ``f`` is multiplied by ``sum_n g_n psi(xi - n)``.  Because ``psi``
is a tensor product, that symbol is a sequence of per-axis contractions.

Coefficients are counter based: ``g_n`` for sample ``index`` is drawn from a
Philox stream keyed by ``(seed, index)`` whose counter encodes ``n``.  A draw
therefore depends only on ``(seed, index, n)`` and not on lattice enumeration
order, grid resolution or worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ParameterError
from .fields import Field, Grid, to_physical, to_spectral

__all__ = [
    "bump",
    "WindowSystem",
    "build_window",
    "wiener_project",
    "RandomDistribution",
    "RandomizedDatum",
    "coefficients",
    "randomize",
    "sample",
    "certify_subgaussian",
    "philox",
]

_MASK64 = (1 << 64) - 1
_OFFSET = 1 << 23  # lattice coordinates are packed as 24-bit fields


def bump(t):
    """C-infinity bump ``exp(-1/(1-t^2))`` supported in ``(-1, 1)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def window_1d(xi):
    """Normalized 1-D window ``bump(xi) / sum_m bump(xi - m)``."""
    xi = np.asarray(xi, dtype=float)
    base = np.floor(xi)
    total = sum(bump(xi - (base + j)) for j in (-1, 0, 1, 2))
    return bump(xi) / total


@dataclass(frozen=True)
class WindowSystem:
    """Tensor-product window ``psi`` and the lattice of cubes meeting a grid's spectrum."""

    d: int
    lattice_1d: tuple[int, ...] = ()
    grid: Grid | None = field(default=None, compare=False)

    def psi(self, *xi) -> np.ndarray:
        out = 1.0
        for c in xi:
            out = out * window_1d(c)
        return out

    @property
    def lattice(self) -> np.ndarray:
        """All lattice points ``n`` as an ``(count, d)`` integer array."""
        axes = [np.asarray(self.lattice_1d)] * self.d
        return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.d)

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        return (len(self.lattice_1d),) * self.d

    def axis_matrix(self) -> np.ndarray:
        """``W[i, k] = psi_1(xi_k - n_i)`` for the grid axis in storage order."""
        if self.grid is None:
            raise ValueError("window system is not bound to a grid")
        return _axis_matrix(self.grid, self.lattice_1d)

    def symbol(self, n) -> np.ndarray:
        """``psi(xi - n)`` on the bound grid (storage order)."""
        g = self.grid
        return self.psi(*(c - ni for c, ni in zip(g.xi_components, n))) * np.ones(g.shape)

    def combined_symbol(self, coeffs: np.ndarray) -> np.ndarray:
        """``sum_n coeffs[n] psi(xi - n)`` for coefficients shaped :attr:`lattice_shape`."""
        w = self.axis_matrix()
        out = np.asarray(coeffs, dtype=np.complex128)
        # contract lattice axis i against W on that axis; each step rotates axes
        for _ in range(self.d):
            out = np.tensordot(out, w, axes=([0], [0]))
        return out


@lru_cache(maxsize=64)
def _axis_matrix(grid: Grid, lattice_1d: tuple[int, ...]) -> np.ndarray:
    k = grid.k_axis_fft()
    m = window_1d(k[None, :] - np.asarray(lattice_1d, dtype=float)[:, None])
    m.setflags(write=False)
    return m


def build_window(d: int, grid: Grid | None = None) -> WindowSystem:
    """Window system for dimension ``d``; binding a grid fixes the cube lattice."""
    if d < 1:
        raise ParameterError(f"d={d} must be >= 1")
    if grid is None:
        return WindowSystem(d)
    if grid.d != d:
        raise ParameterError(f"grid dimension {grid.d} != {d}")
    k = grid.k_axis()
    lo, hi = int(np.floor(k.min())), int(np.ceil(k.max()))
    lattice = tuple(n for n in range(lo - 1, hi + 2) if np.any(np.abs(k - n) < 1))
    return WindowSystem(d, lattice, grid)


def wiener_project(f: Field, n, w: WindowSystem) -> Field:
    """``psi(D - n) f``."""
    if w.grid is None or w.grid.shape != f.grid.shape or w.grid.length != f.grid.length:
        w = build_window(f.grid.d, f.grid)
    n = tuple(int(c) for c in n)
    if len(n) != f.grid.d:
        raise ParameterError(f"lattice point {n} has wrong dimension")
    k = f.grid.k_axis()
    if any(c < np.floor(k.min()) - 1 or c > np.ceil(k.max()) + 1 for c in n):
        raise ParameterError(f"lattice point {n} outside the padded frequency box")
    return Field(f.grid, to_physical(to_spectral(f.values, f.grid) * w.symbol(n), f.grid))


# coefficient laws


_KINDS = ("complex_gaussian", "rademacher", "uniform_symmetric")


@dataclass(frozen=True)
class RandomDistribution:
    """Mean-zero law with unit variance per real component.

    Real and imaginary parts are drawn independently from the same 1-D law.
    """

    kind: str = "complex_gaussian"

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown distribution {self.kind!r}; choose from {_KINDS}")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        """Real samples of the component law."""
        if self.kind == "complex_gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size) - 1.0
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)

    def mgf(self, gamma) -> np.ndarray:
        """Moment generating function of the component law."""
        g = np.asarray(gamma, dtype=float)
        if self.kind == "complex_gaussian":
            return np.exp(g**2 / 2)
        if self.kind == "rademacher":
            return np.cosh(g)
        a = np.sqrt(3.0) * g
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.sinh(a) / a
        return np.where(a == 0, 1.0, out)

    def moment(self, p: float) -> float:
        """``E|X|^p`` of the component law."""
        from scipy.special import gamma

        if self.kind == "complex_gaussian":
            return float(2 ** (p / 2) * gamma((p + 1) / 2) / np.sqrt(np.pi))
        if self.kind == "rademacher":
            return 1.0
        return float(3 ** (p / 2) / (p + 1))


def philox(seed: int, stream: int, counter_hi: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``; ``counter_hi`` selects a substream."""
    # explicit uint64: plain int lists above 2**63 are coerced through float64 and lose bits
    counter = np.array([0, 0, counter_hi & _MASK64, (counter_hi >> 64) & _MASK64], dtype=np.uint64)
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _encode(n) -> int:
    code = 0
    for i, c in enumerate(n):
        code |= (int(c) + _OFFSET) << (24 * i)
    return code


def coefficients(dist: RandomDistribution, seed: int, index: int, lattice: np.ndarray) -> np.ndarray:
    """``g_n`` for each row ``n`` of ``lattice``.

    ``g_n = (X + iY) / sqrt(2)`` with ``X, Y`` independent draws of the
    component law, so ``E|g_n|^2 = 1``.
    """
    out = np.empty(len(lattice), dtype=np.complex128)
    for j, n in enumerate(lattice):
        re, im = dist.draw(philox(seed, index, _encode(n)), 2)
        out[j] = complex(re, im)
    return out * np.sqrt(0.5)


def randomize(f: Field, coeffs: np.ndarray, w: WindowSystem) -> Field:
    """``sum_n coeffs[n] psi(D - n) f`` for explicit coefficients (lattice-shaped)."""
    sym = w.combined_symbol(np.reshape(coeffs, w.lattice_shape))
    return Field(f.grid, to_physical(to_spectral(f.values, f.grid) * sym, f.grid))


@dataclass(frozen=True)
class RandomizedDatum:
    """Recipe for ``f^omega``; the realized field is regenerated, never stored."""

    base: Field = field(compare=False, repr=False)
    seed: int
    distribution: RandomDistribution
    sample_index: int
    base_ref: str = ""

    def realize(self, w: WindowSystem | None = None) -> Field:
        if w is None:
            w = build_window(self.base.grid.d, self.base.grid)
        g = coefficients(self.distribution, self.seed, self.sample_index, w.lattice)
        return randomize(self.base, g, w)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "sample_index": int(self.sample_index),
            "distribution": self.distribution.kind,
            "base": self.base_ref,
        }


def sample(
    f: Field,
    dist: RandomDistribution,
    seed: int,
    index: int,
    w: WindowSystem | None = None,
) -> tuple[RandomizedDatum, Field]:
    datum = RandomizedDatum(f, int(seed), dist, int(index))
    return datum, datum.realize(w)


def certify_subgaussian(dist, gamma_grid, c_max: float = 10.0) -> float:
    """Smallest ``c`` with ``MGF(gamma) <= exp(c gamma^2)`` on ``gamma_grid``.

    ``dist`` is a :class:`RandomDistribution` or any callable returning the
    component MGF.
    """
    gam = np.asarray(gamma_grid, dtype=float)
    if gam.min() > -4 or gam.max() < 4:
        raise ParameterError("gamma grid must span at least [-4, 4]")
    gam = gam[gam != 0]
    mgf = dist.mgf(gam) if isinstance(dist, RandomDistribution) else np.asarray(dist(gam), float)
    if np.any(mgf <= 0) or not np.all(np.isfinite(mgf)):
        raise ParameterError("moment generating function is not finite and positive on the grid")
    c = float(np.max(np.log(mgf) / gam**2))
    if c > c_max:
        raise ParameterError(f"law is not subgaussian on the grid: needs c={c:.3g} > {c_max}")
    return max(c, 0.0)


def quadrature_mgf(density, support: tuple[float, float]):
    """MGF of a 1-D density by adaptive quadrature (used for user laws)."""

    def mgf(gam):
        return np.array(
            [integrate.quad(lambda x: np.exp(g * x) * density(x), *support)[0] for g in np.atleast_1d(gam)]
        )

    return mgf
