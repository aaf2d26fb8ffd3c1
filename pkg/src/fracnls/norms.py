"""Sobolev, mixed Lebesgue and X^{s,b} norms; time cutoffs; sharp frequency projections."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .fields import Field, Grid, SpaceTimeField, to_physical, to_spectral
from .hartree import lp_norm
from .propagator import check_alpha

__all__ = [
    "smooth_step",
    "TimeWindow",
    "NormSpec",
    "sobolev_norm",
    "homogeneous_sobolev_norm",
    "mixed_norm",
    "xsb_norm",
    "spacetime_l2",
    "characteristic_mass_fraction",
    "annulus_project",
    "dyadic_project",
    "dyadic_levels",
    "ball_project",
    "evaluate",
]


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    a, b = _h(x), _h(1 - np.asarray(x, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class TimeWindow:
    """``eta_T(t) = eta(t / T)`` with ``eta = 1`` on [-1, 1] and support in [-2, 2]."""

    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f"window half-width T={self.T} must be positive")

    def __call__(self, t):
        return smooth_step(2.0 - np.abs(np.asarray(t, dtype=float) / self.T))

    @property
    def support(self) -> tuple[float, float]:
        return (-2 * self.T, 2 * self.T)


# norm specs

_SPEC_RE = re.compile(r"^\s*(sobolev|mixed|xsb)\s*:\s*(.*)$")
_KEYS = {"sobolev": ("s",), "mixed": ("q", "r"), "xsb": ("s", "b", "alpha")}


@dataclass(frozen=True)
class NormSpec:
    """Canonical text form ``sobolev:s=0.75``, ``mixed:q=4,r=4``, ``xsb:s=0,b=0.6,alpha=1.5``."""

    kind: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.kind not in _KEYS:
            raise ParameterError(f"unknown norm kind {self.kind!r}")
        names = tuple(k for k, _ in self.params)
        if sorted(names) != sorted(_KEYS[self.kind]):
            raise ParameterError(f"{self.kind} needs parameters {_KEYS[self.kind]}, got {names}")
        p = dict(self.params)
        if self.kind == "mixed":
            for k in ("q", "r"):
                if not p[k] >= 2:
                    raise ParameterError(f"{k}={p[k]} must lie in [2, inf]")
        if self.kind == "xsb":
            check_alpha(p["alpha"])

    def __getitem__(self, key):
        return dict(self.params)[key]

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        m = _SPEC_RE.match(text)
        if not m:
            raise ParameterError(f"cannot parse norm spec {text!r}")
        kind, body = m.groups()
        params = []
        for part in filter(None, (p.strip() for p in body.split(","))):
            key, _, val = part.partition("=")
            key = key.strip()
            if not val:
                raise ParameterError(f"missing value for {key!r} in {text!r}")
            params.append((key, float(val.strip())))
        order = _KEYS.get(kind, ())
        params.sort(key=lambda kv: order.index(kv[0]) if kv[0] in order else len(order))
        return cls(kind, tuple(params))

    def __str__(self) -> str:
        body = ",".join(f"{k}={_fmt(v)}" for k, v in self.params)
        return f"{self.kind}:{body}"


def _fmt(v: float) -> str:
    if np.isinf(v):
        return "inf"
    return repr(float(v)).removesuffix(".0") if float(v).is_integer() else repr(float(v))


# norms on fields


def sobolev_norm(f: Field, s: float) -> float:
    """``||<grad>^s f||_{L^2}`` with ``<xi> = 1 + |xi|``."""
    g = f.grid
    fhat = f.values if f.spectral else to_spectral(f.values, g)
    w = g.spectral_cell_volume / (2 * np.pi) ** g.d
    return float(np.sqrt(w * np.sum((1 + g.xi_norm) ** (2 * s) * np.abs(fhat) ** 2)))


def homogeneous_sobolev_norm(f: Field, s: float) -> float:
    """``|| |grad|^s f ||_{L^2}``."""
    g = f.grid
    fhat = f.values if f.spectral else to_spectral(f.values, g)
    w = g.spectral_cell_volume / (2 * np.pi) ** g.d
    return float(np.sqrt(w * np.sum(g.xi_norm ** (2 * s) * np.abs(fhat) ** 2)))


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    w = np.full(n, dt)
    w[0] = w[-1] = dt / 2
    return w


def mixed_norm(u: SpaceTimeField, q: float, r: float) -> float:
    """``L^q_t L^r_x`` over the sampled interval: trapezoid in t, Riemann sum in x."""
    if not (q >= 2 and r >= 2):
        raise ParameterError(f"(q, r)=({q}, {r}) must lie in [2, inf]")
    g = u.grid
    inner = np.array([lp_norm(v, g, r) for v in u.values])
    if np.isinf(q):
        return float(inner.max())
    return float(np.sum(_trapezoid_weights(g.n_time, g.dt) * inner**q) ** (1.0 / q))


def spacetime_l2(u: SpaceTimeField) -> float:
    """Plain Riemann-sum ``L^2_{t,x}`` norm (weights ``dt (L/N)^d``)."""
    g = u.grid
    return float(np.sqrt(g.dt * g.cell_volume * np.sum(np.abs(u.values) ** 2)))


def _windowed(u: SpaceTimeField, window: TimeWindow | None) -> np.ndarray:
    if window is None:
        return u.values
    # the time transform treats the samples as one period [t0, t0 + n_time dt)
    g = u.grid
    start, end = u.t0, u.t0 + g.n_time * g.dt
    lo, hi = window.support
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if start > lo + slack or end < hi - slack:
        raise ParameterError(
            f"window support [{lo:g}, {hi:g}] is wider than the sampled period [{start:g}, {end:g})"
        )
    t = u.times
    return u.values * window(t).reshape((-1,) + (1,) * u.grid.d)


def _xsb_spectrum(u: SpaceTimeField, window: TimeWindow | None) -> np.ndarray:
    g = u.grid
    v = _windowed(u, window)
    vt = np.fft.ifft(v, axis=0) * (g.n_time * g.dt)
    return to_spectral(vt, g)


def _modulation(g: Grid, alpha: float) -> np.ndarray:
    tau = g.tau_axis_fft().reshape((-1,) + (1,) * g.d)
    return np.abs(tau - g.xi_norm**alpha)


def xsb_norm(u: SpaceTimeField, s: float, b: float, alpha: float, window: TimeWindow | None = None) -> float:
    """``||<xi>^s <tau - |xi|^alpha>^b (eta_T u)~||_{L^2_{tau,xi}}``.

    With ``window=None`` the samples are taken to be already compactly
    supported inside the sampled interval.
    """
    alpha = check_alpha(alpha)
    g = u.grid
    uh = _xsb_spectrum(u, window)
    weight = (1 + g.xi_norm) ** (2 * s) * (1 + _modulation(g, alpha)) ** (2 * b)
    dtau = 2 * np.pi / (g.n_time * g.dt)
    meas = dtau * g.spectral_cell_volume / (2 * np.pi) ** (g.d + 1)
    return float(np.sqrt(meas * np.sum(weight * np.abs(uh) ** 2)))


def characteristic_mass_fraction(
    u: SpaceTimeField, s: float, b: float, alpha: float, window: TimeWindow | None, n_bins: float
) -> float:
    """Share of the weighted ``X^{s,b}`` mass within ``n_bins`` tau-bins of ``tau = |xi|^alpha``."""
    g = u.grid
    uh = _xsb_spectrum(u, window)
    mod = _modulation(g, alpha)
    weight = (1 + g.xi_norm) ** (2 * s) * (1 + mod) ** (2 * b) * np.abs(uh) ** 2
    dtau = 2 * np.pi / (g.n_time * g.dt)
    return float(weight[mod <= n_bins * dtau].sum() / weight.sum())


# projections


def annulus_project(f: Field, lo: float, hi: float) -> Field:
    """Sharp projection onto ``{lo <= |xi| < hi}``."""
    g = f.grid
    mask = (g.xi_norm >= lo) & (g.xi_norm < hi)
    return Field(g, to_physical(to_spectral(f.values, g) * mask, g))


def dyadic_levels(grid: Grid) -> list[int]:
    """Dyadic ``N = 1, 2, 4, ...`` whose annuli tile the whole frequency box."""
    top = grid.xi_norm.max()
    levels = [1]
    while levels[-1] <= top:
        levels.append(2 * levels[-1])
    return levels


def dyadic_project(f: Field, N: int) -> Field:
    """``P_N f``: spectrum restricted to ``N/2 <= |xi| < N`` (``|xi| < 1`` for ``N = 1``)."""
    if N < 1 or int(N) != N or int(N) & (int(N) - 1):
        raise ParameterError(f"N={N} is not a dyadic integer >= 1")
    lo = 0.0 if N == 1 else N / 2
    if lo > f.grid.xi_norm.max():
        warnings.warn(f"annulus A({N}) lies beyond the grid's frequency box; projection is empty", stacklevel=2)
    return annulus_project(f, lo, float(N))


def ball_project(f: Field, center, radius: float) -> Field:
    """Sharp projection onto the open ball ``|xi - center| < radius``."""
    g = f.grid
    center = np.broadcast_to(np.asarray(center, dtype=float), (g.d,))
    dist2 = sum((c - x0) ** 2 for c, x0 in zip(g.xi_components, center))
    mask = np.broadcast_to(dist2 < radius**2, g.shape)
    return Field(g, to_physical(to_spectral(f.values, g) * mask, g))


def evaluate(spec: NormSpec, obj, window: TimeWindow | None = None) -> float:
    """Evaluate a :class:`NormSpec` on a Field or SpaceTimeField."""
    if spec.kind == "sobolev":
        if isinstance(obj, SpaceTimeField):
            raise ParameterError("sobolev norm needs a single-time field")
        return sobolev_norm(obj, spec["s"])
    if not isinstance(obj, SpaceTimeField):
        raise ParameterError(f"{spec.kind} norm needs a space-time field")
    if spec.kind == "mixed":
        return mixed_norm(obj, spec["q"], spec["r"])
    return xsb_norm(obj, spec["s"], spec["b"], spec["alpha"], window)
