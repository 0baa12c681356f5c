import numpy as np
import pytest

from slabwave.grid import BulkField, SurfaceField, make_grid, transform_forward
from slabwave.spaces import (SobolevIndex, bump, freq_split, norm_Lr2,
                             norm_Hs_r2, norm_bessel, norm_tilde,
                             seminorm_Hdot_minus1)
from slabwave.geometry import trace_sigma

from conftest import random_bulk, random_surface


@pytest.fixture(scope="module")
def grid2():
    return make_grid(L=2.0, Nx=16, Ny=12, b=1.0)


def const_bulk(grid, value=1.0):
    c = np.zeros((1, grid.Nx, grid.Nx, grid.Ny), complex)
    c[0, 0, 0, :] = value
    return BulkField(grid, c)


def test_norm_Lr2_examples(grid2):
    zero = BulkField(grid2, np.zeros((1, 16, 16, 12), complex))
    assert norm_Lr2(zero, 2.0) == 0.0
    one = const_bulk(grid2)
    assert norm_Lr2(one, 2.0) == pytest.approx(2.0, rel=1e-13)
    assert norm_Lr2(one, 1.5) == pytest.approx(4.0 ** (2.0 / 3.0), rel=1e-13)


def test_norm_Hs_examples(grid2):
    one = const_bulk(grid2)
    assert norm_Hs_r2(one, SobolevIndex(1, 2.0)) == pytest.approx(2.0, rel=1e-13)
    zero = BulkField(grid2, np.zeros((1, 16, 16, 12), complex))
    assert norm_Hs_r2(zero, SobolevIndex(3, 1.5)) == 0.0


def test_sobolev_index_validation():
    with pytest.raises(ValueError):
        SobolevIndex(-1, 1.5)
    with pytest.raises(ValueError):
        SobolevIndex(2, 1.0)


def test_norm_bessel_single_mode():
    g = make_grid(L=1.0, Nx=16, Ny=8, b=1.0)
    c = np.zeros((1, 16, 16), complex)
    c[0, 1, 0] = 1.0
    f = SurfaceField(g, c)
    assert norm_bessel(f, 2.0, 2.0) == pytest.approx(2.0, rel=1e-12)
    # s = 0 reduces to the plain L^r norm
    r = 1.7
    n0 = norm_bessel(f, 0.0, r)
    phys = np.abs(f.values())
    plain = ((phys[0] ** r).sum() * g.cell_area()) ** (1 / r)
    assert n0 == pytest.approx(plain, rel=1e-13)


def test_norm_tilde_single_mode():
    g = make_grid(L=1.0, Nx=16, Ny=8, b=1.0)
    c = np.zeros((1, 16, 16), complex)
    c[0, 1, 0] = 1.0
    f = SurfaceField(g, c)
    assert norm_tilde(f, 1.0, 2.0) == pytest.approx(2 * np.pi, rel=1e-12)


def test_seminorm_zero_mode_errors():
    g = make_grid(L=1.0, Nx=16, Ny=8, b=1.0)
    c = np.zeros((1, 16, 16), complex)
    c[0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="zero-mode obstruction"):
        seminorm_Hdot_minus1(SurfaceField(g, c), 1.5)
    zero = SurfaceField(g, np.zeros((1, 16, 16), complex))
    assert seminorm_Hdot_minus1(zero, 1.5) == 0.0


def test_bump_properties():
    t = np.linspace(-3, 3, 101)
    X1, X2 = np.meshgrid(t, t)
    phi = bump(X1, X2)
    r = np.hypot(X1, X2)
    assert np.all(phi >= 0) and np.all(phi <= 1)
    assert np.all(phi[r <= 1.0] == 1.0)
    assert np.all(phi[r >= 2.0] == 0.0)
    assert np.abs(phi - bump(-X1, -X2)).max() == 0.0


def test_freq_split_modes():
    g = make_grid(L=2.0, Nx=16, Ny=8, b=1.0)   # xi lattice k/2
    # |xi| = 0.5: low only
    c = np.zeros((1, 16, 16), complex)
    c[0, 1, 0] = 1.0
    lo, hi = freq_split(SurfaceField(g, c))
    assert abs(lo.coeffs[0, 1, 0] - 1.0) < 1e-15 and np.abs(hi.coeffs).max() < 1e-15
    # |xi| = 3: high only
    c = np.zeros((1, 16, 16), complex)
    c[0, 6, 0] = 1.0
    lo, hi = freq_split(SurfaceField(g, c))
    assert np.abs(lo.coeffs).max() < 1e-15 and abs(hi.coeffs[0, 6, 0] - 1.0) < 1e-15
    # |xi| = 1.5: partition reconstructs
    c = np.zeros((1, 16, 16), complex)
    c[0, 3, 0] = 1.0
    f = SurfaceField(g, c)
    lo, hi = freq_split(f)
    assert np.abs(lo.coeffs + hi.coeffs - f.coeffs).max() <= 1e-15


def test_freq_split_partition_random(grid2):
    rng = np.random.default_rng(0)
    f = random_surface(grid2, rng, kmax=6)
    lo, hi = freq_split(f)
    ax = grid2.xi_abs
    outside = (ax <= 1.0) | (ax >= 2.0)
    delta = lo.coeffs + hi.coeffs - f.coeffs
    assert np.abs(delta[0][outside]).max() == 0.0
    assert np.abs(delta).max() <= 1e-15 * max(np.abs(f.coeffs).max(), 1)


def test_norm_homogeneity(grid2):
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = random_bulk(grid2, rng)
        s = random_surface(grid2, rng, mean_zero=True)
        lam = float(rng.uniform(0.1, 10.0))
        assert norm_Lr2(lam * f, 1.5) == pytest.approx(lam * norm_Lr2(f, 1.5), rel=1e-12)
        assert norm_Hs_r2(lam * f, SobolevIndex(2, 1.5)) == pytest.approx(
            lam * norm_Hs_r2(f, SobolevIndex(2, 1.5)), rel=1e-12)
        assert norm_bessel(lam * s, 1.5, 1.5) == pytest.approx(
            lam * norm_bessel(s, 1.5, 1.5), rel=1e-12)
        assert seminorm_Hdot_minus1(lam * s, 1.5) == pytest.approx(
            lam * seminorm_Hdot_minus1(s, 1.5), rel=1e-12)


def test_triangle_inequality(grid2):
    rng = np.random.default_rng(2)
    for _ in range(50):
        f1 = random_bulk(grid2, rng)
        f2 = random_bulk(grid2, rng)
        assert norm_Lr2(f1 + f2, 1.5) <= norm_Lr2(f1, 1.5) + norm_Lr2(f2, 1.5) + 1e-12
        s1 = random_surface(grid2, rng)
        s2 = random_surface(grid2, rng)
        assert norm_bessel(s1 + s2, 1.0, 1.5) <= (norm_bessel(s1, 1.0, 1.5)
                                                  + norm_bessel(s2, 1.0, 1.5) + 1e-12)


def test_factorized_norm_equivalence(grid2):
    """Mixed norm vs the factorized L^r H^s + H^{s,r} L^2 combination.

    At s = 1; each derivative order contributes a factor 2 pi against the
    Bessel weight (the D = grad/2 pi i convention), so higher s leaves the
    stated [1/10, 10] window.
    """
    rng = np.random.default_rng(3)
    g = grid2
    s, r = 1, 1.5
    for _ in range(50):
        f = random_bulk(g, rng)
        full = norm_Hs_r2(f, SobolevIndex(s, r))
        # L^r_x H^s_y
        v = f.values()
        prof_sq = np.zeros((g.Nx, g.Nx))
        cur = f
        from slabwave.grid import cheb_diff
        for k in range(s + 1):
            prof_sq += np.einsum("cxyj,j->xy", np.abs(cur.values()) ** 2, g.wy)
            if k < s:
                cur = cheb_diff(cur, 1)
        lrhs = float(((prof_sq ** (r / 2)).sum() * g.cell_area()) ** (1 / r))
        # H^{s,r}_x L^2_y
        from slabwave.grid import apply_multiplier
        bs = apply_multiplier(lambda x1, x2: (1 + x1 ** 2 + x2 ** 2) ** (s / 2), f)
        inner = np.einsum("cxyj,j->xy", np.abs(bs.values()) ** 2, g.wy)
        hsr = float(((inner ** (r / 2)).sum() * g.cell_area()) ** (1 / r))
        ratio = full / (lrhs + hsr)
        assert 0.1 <= ratio <= 10.0


def test_trace_norm_sanity():
    """Fitted trace constant is stable across two resolutions (20% window)."""
    s, r = 2, 1.5

    def fitted_C(grid):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(50):
            f = random_bulk(grid, rng, kmax=2, deg=3)
            tr = trace_sigma(f)
            num = norm_bessel(tr, s - 0.5, r)
            den = norm_Hs_r2(f, SobolevIndex(s, r))
            worst = max(worst, num / den)
        return worst

    c1 = fitted_C(make_grid(L=4.0, Nx=16, Ny=12, b=1.0))
    c2 = fitted_C(make_grid(L=4.0, Nx=32, Ny=18, b=1.0))
    assert np.isfinite(c1) and np.isfinite(c2)
    assert abs(c1 / c2 - 1.0) <= 0.2
