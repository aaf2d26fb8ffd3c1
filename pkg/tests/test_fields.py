import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnls.errors import NonFiniteError, ParameterError
from fracnls.fields import (
    Field,
    Grid,
    SpaceTimeField,
    forward_transform,
    inverse_spacetime_transform,
    inverse_transform,
    read_binary,
    spacetime_transform,
    write_binary,
    write_csv,
)

from conftest import SUPPORTED_GRIDS, random_field


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestGrid:
    def test_axes(self):
        g = Grid(1, 8, 4.0)
        np.testing.assert_allclose(g.x_axis(), -2 + 0.5 * np.arange(8))
        np.testing.assert_allclose(g.k_axis(), 2 * np.pi / 4 * np.arange(-4, 4))
        assert np.all(np.diff(g.k_axis()) > 0)
        assert sorted(g.k_axis_fft()) == pytest.approx(g.k_axis())

    @pytest.mark.parametrize("kw", [dict(n=12), dict(n=4), dict(length=0.0), dict(n_time=0), dict(dt=-1.0), dict(d=6)])
    def test_invalid(self, kw):
        base = dict(d=2, n=16, length=1.0)
        base.update(kw)
        with pytest.raises(ParameterError):
            Grid(**base)

    def test_immutable_and_hashable(self):
        g = Grid(2, 16, 1.0)
        with pytest.raises(Exception):
            g.n = 32
        assert {g: 1}[Grid(2, 16, 1.0)] == 1


class TestField:
    def test_rejects_nonfinite(self):
        g = Grid(1, 8, 1.0)
        v = np.zeros(8)
        v[3] = np.nan
        with pytest.raises(NonFiniteError):
            Field(g, v)

    def test_rejects_wrong_count(self):
        with pytest.raises(ParameterError):
            Field(Grid(2, 8, 1.0), np.zeros(60))

    def test_flat_row_major(self):
        g = Grid(2, 8, 1.0)
        f = Field(g, np.arange(64))
        assert f.values[1, 0] == 8


class TestForwardTransform:
    def test_constant(self):
        g = Grid(2, 16, 3.0)
        fh = forward_transform(Field(g, np.full(g.shape, 2.5 - 1j)))
        expected = np.zeros(g.shape, complex)
        expected[0, 0] = (2.5 - 1j) * 3.0**2
        np.testing.assert_allclose(fh.values, expected, atol=1e-12)

    def test_plane_wave_single_bin(self):
        g = Grid(2, 16, 2 * np.pi)
        f = Field.from_function(g, lambda x, y: np.exp(1j * (3 * x - 2 * y)))
        c = forward_transform(f).centered()
        k = g.k_axis()
        i, j = np.argwhere(np.abs(c) > 1e-9).T
        assert len(i) == 1
        assert (k[i[0]], k[j[0]]) == (3.0, -2.0)
        assert abs(c[i[0], j[0]]) == pytest.approx((2 * np.pi) ** 2)

    def test_gaussian_closed_form(self):
        g = Grid(1, 256, 40.0)
        fh = forward_transform(Field.from_function(g, lambda x: np.exp(-(x**2) / 2)))
        exact = np.sqrt(2 * np.pi) * np.exp(-(g.k_axis() ** 2) / 2)
        assert np.abs(fh.centered() - exact).max() <= 1e-8

    def test_nonfinite_rejected(self):
        g = Grid(1, 8, 1.0)
        f = Field(g, np.zeros(8))
        f.values[2] = np.inf
        with pytest.raises(NonFiniteError):
            forward_transform(f)

    def test_translation(self, rng):
        g = Grid(2, 16, 5.0)
        f = random_field(g, rng)
        shift = (3, -5)
        a = np.array(shift) * g.dx
        shifted = Field(g, np.roll(f.values, shift, axis=(0, 1)))
        phase = np.exp(-1j * sum(c * s for c, s in zip(g.xi_components, a)))
        lhs = forward_transform(shifted).values
        rhs = phase * forward_transform(f).values
        assert rel(lhs, rhs) <= 1e-10


class TestInverse:
    def test_zero(self):
        g = Grid(3, 8, 1.0)
        assert np.all(inverse_transform(Field(g, np.zeros(g.shape), spectral=True)).values == 0)

    def test_single_bin_round_trip(self):
        g = Grid(1, 16, 2 * np.pi)
        spec = np.zeros(16, complex)
        spec[3] = 2 * np.pi  # (2 pi)^d / (2 pi / L)^d
        f = inverse_transform(Field(g, spec, spectral=True))
        np.testing.assert_allclose(np.abs(f.values), 1.0, atol=1e-12)
        assert rel(forward_transform(f).values, spec) <= 1e-12

    @pytest.mark.parametrize("d,n", SUPPORTED_GRIDS)
    def test_round_trip_and_plancherel(self, d, n, rng):
        g = Grid(d, n, 7.3)
        for _ in range(100):
            f = random_field(g, rng)
            fh = forward_transform(f)
            assert rel(inverse_transform(fh).values, f.values) <= 1e-12
            lhs = g.cell_volume * np.sum(np.abs(f.values) ** 2)
            rhs = g.spectral_cell_volume * np.sum(np.abs(fh.values) ** 2) / (2 * np.pi) ** d
            assert abs(lhs - rhs) / lhs <= 1e-10


@settings(max_examples=40, deadline=None)
@given(
    d=st.integers(1, 3),
    log_n=st.integers(3, 5),
    length=st.floats(0.5, 100.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(d, log_n, length, seed):
    g = Grid(d, 2**log_n, length)
    f = random_field(g, np.random.default_rng(seed))
    assert rel(inverse_transform(forward_transform(f)).values, f.values) <= 1e-12


class TestSpacetime:
    def grid(self):
        return Grid(2, 8, 2 * np.pi, n_time=16, dt=2 * np.pi / 16)

    def test_time_constant(self, rng):
        g = self.grid()
        f = random_field(g, rng)
        u = SpaceTimeField(g, np.broadcast_to(f.values, (16,) + g.shape))
        uh = spacetime_transform(u).values
        assert np.abs(uh[1:]).max() <= 1e-10 * np.abs(uh[0]).max()

    def test_plane_wave(self):
        g = self.grid()
        t = g.times()[:, None, None]
        x, y = g.x_components
        u = SpaceTimeField(g, np.exp(1j * (2 * x + 1 * y - 3 * t)))
        uh = spacetime_transform(u)
        idx = np.argwhere(np.abs(uh.values) > 1e-8)
        assert len(idx) == 1
        m, i, j = idx[0]
        assert g.tau_axis_fft()[m] == pytest.approx(3.0)
        assert (g.k_axis_fft()[i], g.k_axis_fft()[j]) == (2.0, 1.0)

    @pytest.mark.parametrize("t0", [0.0, -1.7])
    def test_round_trip(self, t0, rng):
        g = self.grid()
        u = SpaceTimeField(g, rng.standard_normal((16,) + g.shape) + 0j, t0=t0)
        back = inverse_spacetime_transform(spacetime_transform(u))
        assert rel(back.values, u.values) <= 1e-12


class TestSerialization:
    def test_binary_field(self, tmp_path, rng):
        g = Grid(2, 8, 3.5, n_time=4, dt=0.25)
        f = random_field(g, rng)
        write_binary(tmp_path / "f.bin", f)
        raw = (tmp_path / "f.bin").read_bytes()
        assert len(raw) == 40 + 16 * 64
        assert np.frombuffer(raw[:8], "<i8")[0] == 2
        back = read_binary(tmp_path / "f.bin")
        assert isinstance(back, Field)
        assert back.grid == g
        assert np.array_equal(back.values, f.values)

    def test_binary_spacetime(self, tmp_path, rng):
        g = Grid(1, 8, 1.0, n_time=3, dt=0.1)
        u = SpaceTimeField(g, rng.standard_normal((3, 8)) + 1j)
        write_binary(tmp_path / "u.bin", u)
        back = read_binary(tmp_path / "u.bin")
        assert isinstance(back, SpaceTimeField)
        assert np.array_equal(back.values, u.values)

    def test_csv(self, tmp_path, rng):
        g = Grid(2, 8, 1.0)
        f = random_field(g, rng)
        write_csv(tmp_path / "f.csv", f)
        rows = (tmp_path / "f.csv").read_text().splitlines()
        assert rows[0] == "x1,x2,re,im"
        assert len(rows) == 65
        x1, x2, re, im = map(float, rows[10].split(","))
        assert complex(re, im) == f.values.reshape(-1)[9]

    def test_csv_refuses_large(self, tmp_path):
        g = Grid(3, 64, 1.0)
        with pytest.raises(ParameterError):
            write_csv(tmp_path / "big.csv", Field.zeros(g))
