import numpy as np
import pytest

from fracnls.fields import Field, Grid

# (d, N) pairs exercised by the invariant checks
SUPPORTED_GRIDS = [(1, 8), (1, 64), (2, 16), (3, 8), (3, 16), (4, 8), (5, 8)]


def random_field(grid: Grid, rng: np.random.Generator) -> Field:
    return Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def gaussian(grid: Grid, width: float = 1.0, shift=0.0) -> Field:
    return Field.from_function(
        grid, lambda *x: np.exp(-sum((c - shift) ** 2 for c in x) / (2 * width**2)) + 0j
    )


def smooth_random(grid: Grid, rng: np.random.Generator, width: float = 1.0, kmax: float = 2.0) -> Field:
    """Random smooth, localized field: Gaussian envelope times a band-limited random phase field."""
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec = np.fft.fftn(noise) * np.exp(-(grid.xi_norm / kmax) ** 2)
    smooth = np.fft.ifftn(spec)
    smooth /= np.abs(smooth).max()
    return Field(grid, smooth * gaussian(grid, width).values)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)
