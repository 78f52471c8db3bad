import numpy as np
import pytest

from kfprop import Field, PhaseGrid


def smooth_random_field(grid: PhaseGrid, seed: int, n_bumps: int = 4, signed: bool = True) -> Field:
    """Superposition of random Gaussian bumps, decaying well inside the box."""
    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    n = grid.n
    out = np.zeros(grid.shape)
    for _ in range(n_bumps):
        amp = rng.uniform(-1.0, 1.0) if signed else rng.uniform(0.2, 1.0)
        expo = 0.0
        for j in range(n):
            c = rng.uniform(-1.5, 1.5)
            w = rng.uniform(0.8, 1.6)
            expo = expo - ((mesh[j] - c) / w) ** 2
        for j in range(n):
            c = rng.uniform(-1.0, 1.0)
            w = rng.uniform(1.0, 1.8)
            expo = expo - ((mesh[n + j] - c) / w) ** 2
        out = out + amp * np.exp(expo)
    return Field(grid, out)


@pytest.fixture
def grid_1d() -> PhaseGrid:
    return PhaseGrid.box(1, 8.0, 128, 8.0, 64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
