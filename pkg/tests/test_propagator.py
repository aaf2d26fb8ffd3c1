import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnls.errors import ParameterError
from fracnls.fields import Field, Grid
from fracnls.propagator import bessel_derivative, linear_evolution, linear_propagate, riesz_derivative

from conftest import SUPPORTED_GRIDS, random_field


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def mean_zero(f: Field) -> Field:
    return f.like(f.values - f.values.mean())


def free_gaussian(x, t, k0=0.0):
    """Closed-form alpha=2 evolution of exp(-x^2/2) exp(i k0 x)."""
    z = 1 + 2j * t
    return z**-0.5 * np.exp(-((x - 2 * k0 * t) ** 2) / (2 * z) + 1j * k0 * x - 1j * k0**2 * t)


def test_alpha_range():
    f = Field.zeros(Grid(1, 8, 1.0))
    for a in (1.0, 2.5, np.nan):
        with pytest.raises(ParameterError):
            linear_propagate(f, 0.1, a)


def test_identity_at_zero(rng):
    f = random_field(Grid(2, 16, 3.0), rng)
    assert rel(linear_propagate(f, 0.0, 1.5).values, f.values) <= 1e-12


def test_plane_wave():
    g = Grid(2, 16, 2 * np.pi)
    f = Field.from_function(g, lambda x, y: np.exp(1j * (3 * x + y)))
    t, a = 0.37, 1.3
    expected = np.exp(-1j * t * np.sqrt(10) ** a) * f.values
    assert rel(linear_propagate(f, t, a).values, expected) <= 1e-12


@pytest.mark.parametrize("k0", [0.0, 1.5])
def test_gaussian_wavepacket(k0):
    g = Grid(1, 512, 40.0)
    f = Field.from_function(g, lambda x: free_gaussian(x, 0.0, k0))
    u = linear_propagate(f, 0.5, 2.0)
    assert np.abs(u.values - free_gaussian(g.x_axis(), 0.5, k0)).max() <= 1e-8


@pytest.mark.parametrize("d,n", SUPPORTED_GRIDS)
def test_unitarity_group_commutation(d, n, rng):
    g = Grid(d, n, 5.0)
    alpha = 1.6
    for _ in range(100):
        f = random_field(g, rng)
        t, s = rng.uniform(-3, 3, 2)
        ut = linear_propagate(f, t, alpha)
        assert abs(ut.l2_norm() / f.l2_norm() - 1) <= 1e-12
        two = linear_propagate(linear_propagate(f, s, alpha), t, alpha)
        assert rel(two.values, linear_propagate(f, t + s, alpha).values) <= 1e-12
    a = linear_propagate(riesz_derivative(f, 0.7), t, alpha)
    b = riesz_derivative(linear_propagate(f, t, alpha), 0.7)
    assert rel(a.values, b.values) <= 1e-12
    a = linear_propagate(bessel_derivative(f, -0.4), t, alpha)
    b = bessel_derivative(linear_propagate(f, t, alpha), -0.4)
    assert rel(a.values, b.values) <= 1e-12


def test_scaling_consistency(rng):
    # u_2(t, x) = u(2^a t, 2x) solves the free equation on the half-size box
    alpha, lam, t = 1.4, 2.0, 0.21
    coarse = Grid(2, 32, 6.0)
    fine = Grid(2, 32, 6.0 / lam)
    f = random_field(coarse, rng)
    lhs = linear_propagate(Field(fine, f.values), t, alpha).values
    rhs = linear_propagate(f, lam**alpha * t, alpha).values
    assert rel(lhs, rhs) <= 1e-8


def test_linear_evolution_snapshots(rng):
    f = random_field(Grid(1, 32, 4.0), rng)
    u = linear_evolution(f, 1.8, 5, 0.1, t0=-0.2)
    for k, t in enumerate(u.times):
        assert rel(u.values[k], linear_propagate(f, t, 1.8).values) <= 1e-12


class TestRiesz:
    def test_s_zero(self, rng):
        f = mean_zero(random_field(Grid(2, 16, 3.0), rng))
        assert rel(riesz_derivative(f, 0.0).values, f.values) <= 1e-12

    def test_s_zero_drops_mean(self):
        g = Grid(1, 8, 1.0)
        assert np.abs(riesz_derivative(Field(g, np.ones(8)), 0.0).values).max() <= 1e-14

    def test_plane_wave(self):
        g = Grid(3, 8, 2 * np.pi)
        f = Field.from_function(g, lambda x, y, z: np.exp(1j * (x - 2 * z)))
        out = riesz_derivative(f, -0.6)
        assert rel(out.values, 5 ** (-0.3) * f.values) <= 1e-12

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(-2, 2), b=st.floats(-2, 2), seed=st.integers(0, 2**31))
    def test_composition(self, a, b, seed):
        f = mean_zero(random_field(Grid(2, 16, 4.0), np.random.default_rng(seed)))
        lhs = riesz_derivative(riesz_derivative(f, a), b)
        assert rel(lhs.values, riesz_derivative(f, a + b).values) <= 1e-10


class TestBessel:
    def test_identity(self, rng):
        f = random_field(Grid(2, 16, 3.0), rng)
        assert rel(bessel_derivative(f, 0.0).values, f.values) <= 1e-12

    def test_zero_mode(self):
        g = Grid(2, 8, 1.0)
        f = Field(g, np.full(g.shape, 2.0 + 1j))
        assert rel(bessel_derivative(f, 3.0).values, f.values) <= 1e-12

    def test_plane_wave(self):
        g = Grid(1, 16, 2 * np.pi)
        f = Field.from_function(g, lambda x: np.exp(-3j * x))
        assert rel(bessel_derivative(f, 1.5).values, 4**1.5 * f.values) <= 1e-12
