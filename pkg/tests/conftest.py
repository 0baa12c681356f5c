import numpy as np
import pytest

from slabwave.grid import BulkField, SurfaceField, hermitize, make_grid
from slabwave.params import Params


@pytest.fixture(scope="session")
def grid_small():
    return make_grid(L=4.0, Nx=16, Ny=12, b=1.0)


@pytest.fixture(scope="session")
def grid_medium():
    return make_grid(L=8.0, Nx=32, Ny=16, b=1.0)


@pytest.fixture(scope="session")
def params():
    return Params()


def random_surface(grid, rng, kmax=3, mean_zero=False, scale=1.0):
    c = np.zeros((1, grid.Nx, grid.Nx), complex)
    sel = (np.abs(grid.kx)[:, None] <= kmax) & (np.abs(grid.kx)[None, :] <= kmax)
    c[0][sel] = (rng.standard_normal(sel.sum())
                 + 1j * rng.standard_normal(sel.sum())) * scale
    if mean_zero:
        c[0, 0, 0] = 0.0
    return SurfaceField(grid, hermitize(c))


def random_bulk(grid, rng, ncomp=1, kmax=3, deg=4, bottom_zero=False, scale=1.0):
    c = np.zeros((ncomp, grid.Nx, grid.Nx, grid.Ny), complex)
    y = grid.y
    p0 = 2 if bottom_zero else 0
    basis = np.stack([y ** p for p in range(p0, p0 + deg)])
    sel = (np.abs(grid.kx)[:, None] <= kmax) & (np.abs(grid.kx)[None, :] <= kmax)
    idx = np.argwhere(sel)
    for i in range(ncomp):
        amp = (rng.standard_normal((len(idx), deg))
               + 1j * rng.standard_normal((len(idx), deg))) * scale
        c[i][idx[:, 0], idx[:, 1]] = amp @ basis
    return BulkField(grid, hermitize(c))
