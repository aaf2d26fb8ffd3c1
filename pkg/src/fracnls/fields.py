"""Periodic-box discretization of R^d and continuum-normalized Fourier transforms.

Conventions
-----------
Space: ``x_j = -L/2 + j L/N`` per axis.  Frequencies: ``xi_k = 2 pi k / L``
with ``k`` in ``[-N/2, N/2)``.

Forward transform is the quadrature of ``fhat(xi) = int exp(-i x.xi) f(x) dx``
with weight ``(L/N)^d``; the inverse carries ``(2 pi)^-d`` and weight
``(2 pi / L)^d``.  Spectral arrays are stored in FFT order internally; use
:meth:`Grid.k_axis` / :meth:`Field.centered` for monotone ``-N/2..N/2-1``
indexing.  Every multiplier in the package is built from
:attr:`Grid.xi_norm`, which is stored in the same order as the spectral data,
so index bookkeeping never leaks out of this module.

The space-time transform uses ``u~(tau, xi) = int int exp(-i x.xi + i t tau) u dx dt``
so that a linear solution ``exp(-i t |xi|^alpha)`` concentrates on
``tau = |xi|^alpha``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import NonFiniteError, ParameterError

__all__ = [
    "Grid",
    "Field",
    "SpaceTimeField",
    "forward_transform",
    "inverse_transform",
    "spacetime_transform",
    "inverse_spacetime_transform",
    "write_binary",
    "read_binary",
    "write_csv",
]

_HEADER = struct.Struct("<qqdqd")  # d, N, L, n_time, dt
CSV_MAX_POINTS = 1 << 16


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)^d`` with a uniform time axis."""

    d: int
    n: int
    length: float
    n_time: int = 1
    dt: float = 1.0

    def __post_init__(self):
        if not 1 <= self.d <= 5:
            raise ParameterError(f"dimension d={self.d} outside 1..5")
        if self.n < 8 or self.n & (self.n - 1):
            raise ParameterError(f"n_per_dim={self.n} must be a power of two >= 8")
        if not self.length > 0:
            raise ParameterError(f"box_length={self.length} must be positive")
        if self.n_time < 1:
            raise ParameterError(f"n_time={self.n_time} must be >= 1")
        if not self.dt > 0:
            raise ParameterError(f"dt={self.dt} must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.length

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def spectral_cell_volume(self) -> float:
        return self.dk**self.d

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.length

    def x_axis(self) -> np.ndarray:
        return -self.length / 2 + self.dx * np.arange(self.n)

    def k_axis(self) -> np.ndarray:
        """Monotone frequency axis ``2 pi k / L`` for ``k = -N/2 .. N/2-1``."""
        return self.dk * np.arange(-self.n // 2, self.n // 2)

    def k_axis_fft(self) -> np.ndarray:
        """Frequency axis in storage (FFT) order."""
        return self.dk * np.fft.fftfreq(self.n, d=1.0 / self.n)

    def k_index_fft(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    def times(self, t0: float = 0.0) -> np.ndarray:
        return t0 + self.dt * np.arange(self.n_time)

    def tau_axis_fft(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_time, d=self.dt)

    @cached_property
    def x_components(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x_axis()] * self.d), indexing="ij", sparse=True))

    @cached_property
    def xi_components(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k_axis_fft()] * self.d), indexing="ij", sparse=True))

    @cached_property
    def xi_norm(self) -> np.ndarray:
        sq = sum(c**2 for c in self.xi_components)
        return np.sqrt(np.broadcast_to(sq, self.shape))

    @cached_property
    def x_norm(self) -> np.ndarray:
        sq = sum(c**2 for c in self.x_components)
        return np.sqrt(np.broadcast_to(sq, self.shape))

    @cached_property
    def _shift_sign(self) -> np.ndarray:
        # exp(-i x_0 xi_k) with x_0 = -L/2 is (-1)^k on every axis
        s = 1 - 2 * (np.arange(self.n) % 2)
        out = np.ones(self.shape)
        for ax in range(self.d):
            idx = [None] * self.d
            idx[ax] = slice(None)
            out = out * s[tuple(idx)]
        return out

    def with_time(self, n_time: int, dt: float) -> "Grid":
        return Grid(self.d, self.n, self.length, n_time, dt)

    def refined(self, factor: int = 2) -> "Grid":
        """Same box, ``factor`` times more points per dimension."""
        return Grid(self.d, self.n * factor, self.length, self.n_time, self.dt)


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise NonFiniteError(f"{what} has {bad} non-finite samples")


@dataclass(eq=False)
class Field:
    """Complex samples of a function on ``grid`` (or its spectrum when ``spectral``)."""

    grid: Grid
    values: np.ndarray
    spectral: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.size != self.grid.size:
            raise ParameterError(
                f"value count {v.size} != n_per_dim^d = {self.grid.size}"
            )
        self.values = v.reshape(self.grid.shape)
        _check_finite(self.values, "field")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.spectral)

    def like(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.spectral)

    def centered(self) -> np.ndarray:
        """Spectral values re-indexed monotonically, matching :meth:`Grid.k_axis`."""
        if not self.spectral:
            raise ValueError("centered() applies to spectral fields")
        return np.fft.fftshift(self.values)

    def l2_norm(self) -> float:
        if self.spectral:
            w = self.grid.spectral_cell_volume / (2 * np.pi) ** self.grid.d
        else:
            w = self.grid.cell_volume
        return float(np.sqrt(w * np.sum(np.abs(self.values) ** 2)))

    def __add__(self, other: "Field") -> "Field":
        _same_space(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_space(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, scalar) -> "Field":
        return self.like(self.values * scalar)

    __rmul__ = __mul__

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Sample ``func(*x_components)`` on the grid."""
        return cls(grid, np.broadcast_to(func(*grid.x_components), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


def _same_space(a, b) -> None:
    if a.grid != b.grid or a.spectral != b.spectral:
        raise ParameterError("fields live on different grids or representations")


@dataclass(eq=False)
class SpaceTimeField:
    """Samples ``u(t_k, x)`` with ``t_k = t0 + k dt`` on ``grid.n_time`` slices."""

    grid: Grid
    values: np.ndarray
    t0: float = 0.0
    spectral: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        expected = self.grid.n_time * self.grid.size
        if v.size != expected:
            raise ParameterError(f"value count {v.size} != n_time * n^d = {expected}")
        self.values = v.reshape((self.grid.n_time,) + self.grid.shape)
        _check_finite(self.values, "space-time field")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times(self.t0)

    def snapshot(self, k: int) -> Field:
        if self.spectral:
            raise ValueError("snapshot() applies to physical-space fields")
        return Field(self.grid, self.values[k])

    def like(self, values: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, values, self.t0, self.spectral)

    @classmethod
    def from_snapshots(cls, fields, dt: float, t0: float = 0.0) -> "SpaceTimeField":
        fields = list(fields)
        g = fields[0].grid.with_time(len(fields), dt)
        return cls(g, np.stack([f.values for f in fields]), t0)


# raw-array kernels, shared by the solver and experiment loops


def to_spectral(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(values.ndim - grid.d, values.ndim))
    return np.fft.fftn(values, axes=axes) * (grid._shift_sign * grid.cell_volume)


def to_physical(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(values.ndim - grid.d, values.ndim))
    return np.fft.ifftn(values * (grid._shift_sign / grid.cell_volume), axes=axes)


def forward_transform(f: Field) -> Field:
    """Continuum-normalized spatial Fourier transform."""
    if f.spectral:
        raise ValueError("field is already spectral")
    _check_finite(f.values, "input field")
    return Field(f.grid, to_spectral(f.values, f.grid), spectral=True)


def inverse_transform(fhat: Field) -> Field:
    """Inverse of :func:`forward_transform`."""
    if not fhat.spectral:
        raise ValueError("field is not spectral")
    _check_finite(fhat.values, "input spectrum")
    return Field(fhat.grid, to_physical(fhat.values, fhat.grid))


def _time_phase(grid: Grid, t0: float) -> np.ndarray:
    tau = grid.tau_axis_fft()
    return np.exp(1j * tau * t0).reshape((-1,) + (1,) * grid.d)


def spacetime_transform(u: SpaceTimeField) -> SpaceTimeField:
    """Quadrature of the time-space Fourier transform (weights ``dt (L/N)^d``)."""
    if u.spectral:
        raise ValueError("field is already spectral")
    g = u.grid
    _check_finite(u.values, "input field")
    # sum_k exp(+i tau_m k dt) u_k = n_time * ifft(u)_m
    vt = np.fft.ifft(u.values, axis=0) * (g.n_time * g.dt)
    vt *= _time_phase(g, u.t0)
    return SpaceTimeField(g, to_spectral(vt, g), u.t0, spectral=True)


def inverse_spacetime_transform(uhat: SpaceTimeField) -> SpaceTimeField:
    if not uhat.spectral:
        raise ValueError("field is not spectral")
    g = uhat.grid
    _check_finite(uhat.values, "input spectrum")
    vx = to_physical(uhat.values, g) / _time_phase(g, uhat.t0)
    return SpaceTimeField(g, np.fft.fft(vx, axis=0) / (g.n_time * g.dt), uhat.t0)


# serialization


def write_binary(path, obj: Field | SpaceTimeField) -> None:
    """Write the flat container: 40-byte header then interleaved re/im float64."""
    if obj.spectral:
        raise ValueError("only physical-space fields are serialized")
    g = obj.grid
    data = np.ascontiguousarray(obj.values, dtype="<c16").view("<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.d, g.n, g.length, g.n_time, g.dt))
        fh.write(data.tobytes())


def read_binary(path, t0: float = 0.0) -> Field | SpaceTimeField:
    """Read a container; payload length decides Field vs SpaceTimeField."""
    raw = Path(path).read_bytes()
    d, n, length, n_time, dt = _HEADER.unpack_from(raw)
    grid = Grid(int(d), int(n), float(length), int(n_time), float(dt))
    payload = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    values = payload[0::2] + 1j * payload[1::2]
    if values.size == grid.size:
        return Field(grid, values)
    return SpaceTimeField(grid, values, t0)


def write_csv(path, obj: Field | SpaceTimeField) -> None:
    """Write one row per sample: [t,] x_1..x_d, re, im.  Small grids only."""
    g = obj.grid
    is_st = isinstance(obj, SpaceTimeField)
    n_rows = obj.values.size
    if n_rows > CSV_MAX_POINTS:
        raise ParameterError(f"{n_rows} samples exceed the CSV limit {CSV_MAX_POINTS}")
    coords = np.stack(np.meshgrid(*([g.x_axis()] * g.d), indexing="ij"), -1).reshape(-1, g.d)
    header = (["t"] if is_st else []) + [f"x{i + 1}" for i in range(g.d)] + ["re", "im"]
    slices = obj.values.reshape(-1, g.size) if is_st else obj.values.reshape(1, -1)
    times = obj.times if is_st else [None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, row in zip(times, slices):
            for xc, v in zip(coords, row):
                prefix = [repr(float(t))] if is_st else []
                w.writerow(prefix + [repr(float(c)) for c in xc] + [repr(float(v.real)), repr(float(v.imag))])
