import numpy as np
import pytest
from scipy import integrate

from fracnls.errors import ParameterError
from fracnls.fields import Field, Grid, to_spectral
from fracnls.hartree import (
    HartreeParams,
    energy,
    frac_bound_ratio,
    hartree_force,
    kinetic_energy,
    mass,
    potential_energy,
    riesz_constant,
    riesz_potential_convolve,
)
from fracnls.propagator import linear_propagate

from conftest import gaussian, random_field, smooth_random

P3 = HartreeParams(1.25, 1.0, 3)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.parametrize("kw", [dict(mu=0.0), dict(d=2), dict(alpha=2.0, d=4), dict(alpha=0.9)])
def test_params_rejected(kw):
    base = dict(alpha=1.25, mu=1.0, d=3)
    base.update(kw)
    with pytest.raises(ParameterError):
        HartreeParams(**base)


def test_convolve_rejects_hls():
    with pytest.raises(ParameterError, match="d > 2 alpha"):
        riesz_potential_convolve(Field.zeros(Grid(2, 8, 1.0)), 1.25)


def radial_transform(d, beta, k):
    """int_{R^3} |x|^-beta e^{-i x.xi} dx = 4 pi / k int_0^inf r^{1-beta} sin(k r) dr."""
    assert d == 3
    head = integrate.quad(lambda r: r ** (1 - beta) * np.sin(k * r), 0, 1, limit=200)[0]
    tail = integrate.quad(lambda r: r ** (1 - beta), 1, np.inf, weight="sin", wvar=k)[0]
    return 4 * np.pi / k * (head + tail)


@pytest.mark.parametrize("k", [0.7, 2.0])
def test_riesz_constant_quadrature(k):
    beta = 2 * 1.25
    direct = radial_transform(3, beta, k)
    assert direct == pytest.approx(riesz_constant(3, beta) * k ** (beta - 3), rel=1e-2)


def test_single_mode_convolution():
    g = Grid(3, 8, 2 * np.pi)
    f = Field.from_function(g, lambda x, y, z: np.exp(1j * (2 * x + y)))
    out = riesz_potential_convolve(f, 1.25)
    assert rel(out.values, riesz_constant(3, 2.5) * 5 ** (-0.25) * f.values) <= 1e-12


def test_zero_and_real_even(rng):
    g = Grid(3, 16, 6.0)
    assert np.all(riesz_potential_convolve(Field.zeros(g), 1.25).values == 0)
    even = gaussian(g, 0.8)
    out = riesz_potential_convolve(even, 1.25).values
    assert np.abs(out.imag).max() <= 1e-10 * np.abs(out).max()
    flipped = np.roll(np.flip(out), 1, axis=(0, 1, 2))  # x -> -x on the grid
    assert rel(flipped, out) <= 1e-10


def test_force_symmetries(rng):
    g = Grid(3, 8, 5.0)
    u = random_field(g, rng)
    assert np.all(hartree_force(Field.zeros(g), P3).values == 0)
    base = hartree_force(u, P3).values
    theta = rng.uniform(0, 2 * np.pi)
    assert rel(hartree_force(u * np.exp(1j * theta), P3).values, np.exp(1j * theta) * base) <= 1e-12
    assert rel(hartree_force(u * -1.7, P3).values, (-1.7) ** 3 * base) <= 1e-12


class TestMass:
    def test_constant(self):
        g = Grid(3, 8, 2.5)
        assert mass(Field(g, np.full(g.shape, 1 - 2j))) == pytest.approx(5 * 2.5**3, rel=1e-14)

    def test_zero(self):
        assert mass(Field.zeros(Grid(1, 8, 1.0))) == 0

    def test_parseval(self, rng):
        g = Grid(2, 32, 3.3)
        u = random_field(g, rng)
        spec = g.spectral_cell_volume * np.sum(np.abs(to_spectral(u.values, g)) ** 2) / (2 * np.pi) ** 2
        assert mass(u) == pytest.approx(spec, rel=1e-10)


class TestEnergy:
    def test_zero(self):
        assert tuple(energy(Field.zeros(Grid(3, 8, 1.0)), P3)) == (0.0, 0.0, 0.0)

    def test_plane_wave_kinetic(self):
        g = Grid(3, 8, 2 * np.pi)
        a = 0.5 + 1j
        u = Field.from_function(g, lambda x, y, z: a * np.exp(1j * (x + y)))
        expected = 0.5 * np.sqrt(2) ** 1.25 * abs(a) ** 2 * (2 * np.pi) ** 3
        assert kinetic_energy(u, 1.25) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("mu", [1.0, -2.0])
    def test_potential_sign(self, mu, rng):
        p = HartreeParams(1.25, mu, 3)
        for _ in range(10):
            u = smooth_random(Grid(3, 16, 8.0), rng)
            assert np.sign(potential_energy(u, p)) == np.sign(mu)

    def test_invariants(self, rng):
        g = Grid(3, 16, 7.0)
        u = random_field(g, rng)
        k = kinetic_energy(u, 1.25)
        assert k >= 0
        assert kinetic_energy(linear_propagate(u, 0.8, 1.25), 1.25) == pytest.approx(k, rel=1e-12)
        lam = 1.9
        assert mass(u * lam) == pytest.approx(lam**2 * mass(u), rel=1e-12)
        assert kinetic_energy(u * lam, 1.25) == pytest.approx(lam**2 * k, rel=1e-12)
        assert potential_energy(u * lam, P3) == pytest.approx(lam**4 * potential_energy(u, P3), rel=1e-12)


def test_potential_real(rng):
    g = Grid(3, 8, 4.0)
    u = random_field(g, rng)
    dens = np.abs(u.values) ** 2
    pot = riesz_potential_convolve(Field(g, dens), 1.25).values
    val = g.cell_volume * np.sum(pot * dens)
    assert abs(val.imag) <= 1e-12 * abs(val)


def test_frac_bound_uniform(rng):
    g = Grid(3, 16, 10.0)
    ratios = [frac_bound_ratio(smooth_random(g, rng, width=rng.uniform(0.5, 2.0)), 1.25, 0.2) for _ in range(200)]
    assert np.all(np.isfinite(ratios))
    assert max(ratios) / min(ratios) < 50
    with pytest.raises(ParameterError):
        frac_bound_ratio(smooth_random(g, rng), 1.25, 0.6)
