import numpy as np
import pytest

from fracnls.errors import ParameterError, PicardDivergenceError
from fracnls.fields import Field, Grid
from fracnls.hartree import HartreeParams, energy, mass
from fracnls.norms import homogeneous_sobolev_norm
from fracnls.propagator import linear_propagate
from fracnls.solver import Trajectory, duhamel_part, evolve, linear_params, strang_step

from conftest import gaussian

P = HartreeParams(1.25, 1.0, 3)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def datum(grid=None, amp=1.0):
    g = grid or Grid(3, 16, 4 * np.pi)
    return Field(g, amp * gaussian(g, 1.0).values * (1 + 0.3j * g.x_components[0]))


def test_strang_linear_limit():
    u = datum()
    out = strang_step(u, 0.01, linear_params(1.25, 3))
    assert rel(out.values, linear_propagate(u, 0.01, 1.25).values) <= 1e-12


def test_strang_mass_per_step():
    u = datum()
    v = strang_step(u, 0.01, P)
    assert abs(mass(v) / mass(u) - 1) <= 1e-13


def test_strang_self_convergence():
    u = datum(amp=2.0)
    T = 0.1

    def run(n):
        return evolve(u, T, 2, P, substeps=n).final.values

    a, b, c = run(4), run(8), run(16)
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    assert ratio == pytest.approx(4.0, rel=0.15)


def test_invalid_arguments():
    u = datum()
    with pytest.raises(ParameterError):
        strang_step(u, 0.0, P)
    with pytest.raises(ParameterError):
        evolve(u, 0.1, 1, P)
    with pytest.raises(ParameterError):
        evolve(u, 0.1, 3, P, method="rk4")
    with pytest.raises(ParameterError):
        evolve(u, 0.1, 3, HartreeParams(1.25, 1.0, 5))


@pytest.mark.parametrize("method", ["strang", "picard"])
def test_free_flow(method):
    u = datum()
    traj = evolve(u, 0.2, 5, linear_params(1.25, 3), method=method)
    for k, t in enumerate(traj.times):
        assert rel(traj[k].values, linear_propagate(u, t, 1.25).values) <= 1e-10
    assert np.abs(duhamel_part(traj, u).values).max() <= 1e-10


@pytest.mark.parametrize("mu", [1.0, -1.0])
def test_strang_conservation(mu):
    p = HartreeParams(1.25, mu, 3)
    u = datum()
    drifts = []
    for n in (21, 41, 81):
        traj = evolve(u, 0.1, n, p)
        m = np.array([mass(traj[k]) for k in range(n)])
        assert np.abs(m / m[0] - 1).max() <= 1e-10
        e = np.array([energy(traj[k], p).total for k in range(n)])
        drifts.append(np.abs(e / e[0] - 1).max())
    assert 3 <= drifts[0] / drifts[1] <= 5
    assert 3 <= drifts[1] / drifts[2] <= 5


def test_strang_vs_picard():
    u = datum()
    a = evolve(u, 0.05, 101, P, method="strang", substeps=2)
    b = evolve(u, 0.05, 101, P, method="picard")
    assert b.picard_iterations > 1
    assert rel(a.final.values, b.final.values) <= 1e-5


def test_picard_divergence_reported():
    u = datum(amp=40.0)
    with pytest.raises(PicardDivergenceError, match="smaller T"):
        evolve(u, 1.0, 11, P, method="picard")


def test_gauge_covariance():
    u = datum()
    th = 0.83
    a = evolve(u * np.exp(1j * th), 0.05, 6, P).final.values
    b = evolve(u, 0.05, 6, P).final.values
    assert rel(a, np.exp(1j * th) * b) <= 1e-10


def test_scaling_symmetry():
    # lam^{(d-alpha)/2} u(lam^alpha t, lam x) solves the equation on the box L/lam
    lam, d, alpha = 2.0, 3, 1.25
    coarse = Grid(d, 16, 4 * np.pi)
    fine = Grid(d, 16, 4 * np.pi / lam)
    u = datum(coarse)
    amp = lam ** ((d - alpha) / 2)
    T = 0.02
    ref = evolve(u, lam**alpha * T, 5, P).final.values
    scaled = evolve(Field(fine, amp * u.values), T, 5, P).final.values
    assert rel(scaled, amp * ref) <= 1e-3


def test_critical_norm_scale_invariant():
    lam, d, alpha = 2.0, 3, 1.25
    u = datum()
    scaled = Field(Grid(d, 16, 4 * np.pi / lam), lam ** ((d - alpha) / 2) * u.values)
    h = alpha / 2
    assert homogeneous_sobolev_norm(scaled, h) == pytest.approx(homogeneous_sobolev_norm(u, h), rel=1e-8)


class TestDuhamel:
    def test_zero_at_start(self):
        u = datum()
        traj = evolve(u, 0.05, 6, P)
        v = duhamel_part(traj, u)
        assert np.all(v.values[0] == 0)

    def test_first_order(self):
        u = datum()
        sizes = []
        for T in (0.02, 0.01):
            traj = evolve(u, T, 11, P)
            v = duhamel_part(traj, u)
            sizes.append(Field(v.grid, v.values[-1]).l2_norm())
        assert sizes[0] / sizes[1] == pytest.approx(2.0, rel=0.25)

    def test_mismatched_datum(self):
        u = datum()
        traj = evolve(u, 0.05, 3, P)
        with pytest.raises(ParameterError):
            duhamel_part(traj, u * 2)


def test_save_load(tmp_path):
    u = datum(Grid(3, 8, 4 * np.pi))
    traj = evolve(u, 0.05, 4, P)
    side = traj.save(tmp_path / "traj.bin", seed=17)
    assert side.exists()
    back = Trajectory.load(tmp_path / "traj.bin")
    assert np.array_equal(back.snapshots.values, traj.snapshots.values)
    assert back.params == P
    assert back.grid.dt == pytest.approx(traj.grid.dt)
