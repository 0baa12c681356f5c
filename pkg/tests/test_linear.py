import numpy as np
import pytest

from slabwave.grid import (BulkField, SurfaceField, TWO_PI, hermitize,
                           make_grid)
from slabwave.frequency import VerticalOperator
from slabwave.linear import (FrozenLinearOperator, LinearData, SolutionTriple,
                             apply_Pgamma, apply_gammaR1Pgamma,
                             apply_linear_operator, marcinkiewicz_check,
                             pgamma_symbol, solve_linear)
from slabwave.spaces import norm_tilde
from slabwave.params import Params

from conftest import random_bulk, random_surface


def zero_data(grid):
    return LinearData(
        f=BulkField(grid, np.zeros((3, grid.Nx, grid.Nx, grid.Ny), complex)),
        k=SurfaceField(grid, np.zeros((3, grid.Nx, grid.Nx), complex)),
        h=SurfaceField(grid, np.zeros((1, grid.Nx, grid.Nx), complex)))


def manufactured(grid, params, rng, kmax=3):
    p = random_bulk(grid, rng, 1, kmax)
    u = random_bulk(grid, rng, 3, kmax, bottom_zero=True)
    eta = random_surface(grid, rng, kmax, mean_zero=True)
    f, k, h = apply_linear_operator(p, u, eta, params)
    m1 = (TWO_PI * 1j * grid.xi1)[None, :, :, None]
    m2 = (TWO_PI * 1j * grid.xi2)[None, :, :, None]
    g = BulkField(grid, u.coeffs[0:1] * m1 + u.coeffs[1:2] * m2
                  + u.coeffs[2:3] @ grid.D.T)
    return (p, u, eta), LinearData(f=f, k=k, h=h, g=g)


def test_zero_data_zero_solution(grid_small, params):
    sol = solve_linear(zero_data(grid_small), params, grid_small)
    assert sol.p.coeffs.max() == 0.0 and sol.u.coeffs.max() == 0.0
    assert sol.eta.coeffs.max() == 0.0


def test_manufactured_recovery(grid_small, params):
    rng = np.random.default_rng(0)
    (p, u, eta), data = manufactured(grid_small, params, rng)
    sol = solve_linear(data, params, grid_small)
    for got, want in ((sol.p, p), (sol.u, u), (sol.eta, eta)):
        rel = np.abs(got.coeffs - want.coeffs).max() / np.abs(want.coeffs).max()
        assert rel <= 1e-9


def test_solver_linearity(grid_small, params):
    rng = np.random.default_rng(1)
    op = FrozenLinearOperator(grid_small, params)
    _, d1 = manufactured(grid_small, params, rng)
    _, d2 = manufactured(grid_small, params, rng)
    s1 = op.solve(d1)
    s2 = op.solve(d2)
    lam = 1.3
    d3 = LinearData(f=BulkField(grid_small, lam * d1.f.coeffs + d2.f.coeffs),
                    k=SurfaceField(grid_small, lam * d1.k.coeffs + d2.k.coeffs),
                    h=SurfaceField(grid_small, lam * d1.h.coeffs + d2.h.coeffs),
                    g=BulkField(grid_small, lam * d1.g.coeffs + d2.g.coeffs))
    s3 = op.solve(d3)
    for a, b1, b2 in ((s3.p, s1.p, s2.p), (s3.u, s1.u, s2.u), (s3.eta, s1.eta, s2.eta)):
        want = lam * b1.coeffs + b2.coeffs
        assert np.abs(a.coeffs - want).max() <= 1e-12 * max(np.abs(want).max(), 1e-300)


def test_single_mode_data_single_mode_solution(grid_small, params):
    g = grid_small
    c = np.zeros((3, g.Nx, g.Nx), complex)
    c[2, 1, 0] = 1.0
    data = LinearData(
        f=BulkField(g, np.zeros((3, g.Nx, g.Nx, g.Ny), complex)),
        k=SurfaceField(g, c),
        h=SurfaceField(g, np.zeros((1, g.Nx, g.Nx), complex)))
    sol = solve_linear(data, params, g)
    mask = np.ones((g.Nx, g.Nx), bool)
    mask[1, 0] = False
    mask[-1, 0] = False   # conjugate partner appears only through hermitization
    assert np.abs(sol.u.coeffs[:, mask, :]).max() == 0.0
    assert np.abs(sol.u.coeffs[:, 1, 0, :]).max() > 0.0


def test_reality_preserved(grid_small, params):
    rng = np.random.default_rng(2)
    _, data = manufactured(grid_small, params, rng)
    sol = solve_linear(data, params, grid_small)
    assert sol.p.reality_defect() <= 1e-12
    assert sol.u.reality_defect() <= 1e-12
    assert sol.eta.reality_defect() <= 1e-12


def test_zero_mode_compatibility_rejected(grid_small, params):
    g = grid_small
    data = zero_data(g)
    hc = np.zeros((1, g.Nx, g.Nx), complex)
    hc[0, 0, 0] = 1.0
    bad = LinearData(f=data.f, k=data.k, h=SurfaceField(g, hc))
    with pytest.raises(ValueError, match="compatibility"):
        solve_linear(bad, params, g)


def test_dense_operator_oracle(params):
    """Block assembly of the direct eta-formulation over all modes, solved
    by one dense LU, against the per-mode curl path (tiny grid)."""
    g = make_grid(L=2.0, Nx=8, Ny=8, b=1.0)
    rng = np.random.default_rng(3)
    _, data = manufactured(g, params, rng, kmax=2)
    sol = solve_linear(data, params, g)

    ny = g.Ny
    nblk = 4 * ny + 1
    nmodes = g.Nx * g.Nx
    A = np.zeros((nmodes * nblk, nmodes * nblk), complex)
    rhs = np.zeros(nmodes * nblk, complex)
    f_flat = data.f.coeffs.reshape(3, nmodes, ny)
    g_flat = data.g.coeffs.reshape(1, nmodes, ny)
    k_flat = data.k.coeffs.reshape(3, nmodes)
    h_flat = data.h.coeffs.reshape(1, nmodes)
    xi1 = g.xi1.ravel()
    xi2 = g.xi2.ravel()
    for m in range(nmodes):
        op = VerticalOperator((xi1[m], xi2[m]), params, ny, g.b,
                              formulation="eta")
        sl = slice(m * nblk, (m + 1) * nblk)
        A[sl, sl] = op.A
        from slabwave.frequency import FrequencyData
        fd = FrequencyData(g_flat[0, m], f_flat[:, m], k_flat[:, m],
                           complex(h_flat[0, m]), 0.0j)
        rhs[sl] = op._rhs(fd)
    x = np.linalg.solve(A, rhs).reshape(nmodes, nblk)
    p2 = x[:, :ny].reshape(g.Nx, g.Nx, ny)
    u2 = x[:, ny:4 * ny].reshape(g.Nx, g.Nx, 3, ny).transpose(2, 0, 1, 3)
    eta2 = x[:, 4 * ny].reshape(g.Nx, g.Nx)
    scale = max(np.abs(sol.u.coeffs).max(), np.abs(sol.p.coeffs).max())
    assert np.abs(sol.p.coeffs[0] - p2).max() <= 1e-10 * scale
    assert np.abs(sol.u.coeffs - u2).max() <= 1e-10 * scale
    assert np.abs(sol.eta.coeffs[0] - eta2).max() <= 1e-10 * max(np.abs(eta2).max(), 1e-300)


def test_strong_estimate_constant_stability(params):
    """Fitted constant of ||solution|| <= C ||data|| stable across
    resolutions (norms at s = 0, r = 3/2)."""
    from slabwave.spaces import SobolevIndex, norm_Hs_r2, norm_bessel

    def fitted(grid):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(30):
            f = random_bulk(grid, rng, 3, kmax=2, deg=3)
            k = random_surface(grid, rng, kmax=2)
            kc = np.concatenate([k.coeffs,
                                 random_surface(grid, rng, 2).coeffs,
                                 random_surface(grid, rng, 2).coeffs])
            k3 = SurfaceField(grid, kc)
            h = random_surface(grid, rng, kmax=2, mean_zero=True)
            data = LinearData(f=f, k=k3, h=h)
            sol = solve_linear(data, params, grid)
            r = 1.5
            num = (norm_Hs_r2(sol.p, SobolevIndex(1, r))
                   + norm_Hs_r2(sol.u, SobolevIndex(2, r))
                   + norm_bessel(sol.eta, 1.5, r))
            den = (norm_Hs_r2(f, SobolevIndex(0, r))
                   + norm_bessel(k3, 0.5, r) + norm_bessel(h, 1.5, r))
            worst = max(worst, num / den)
        return worst

    c1 = fitted(make_grid(L=4.0, Nx=16, Ny=12, b=1.0))
    c2 = fitted(make_grid(L=4.0, Nx=32, Ny=18, b=1.0))
    assert abs(c1 / c2 - 1.0) <= 0.2


# ---------------------------------------------------------------------------
# anisotropic multipliers


def test_pgamma_identity_at_zero(grid_small):
    rng = np.random.default_rng(5)
    f = random_surface(grid_small, rng)
    out = apply_Pgamma(f, 0.0)
    assert np.abs(out.coeffs - f.coeffs).max() == 0.0


def test_pgamma_printed_value():
    g = make_grid(L=1.0, Nx=16, Ny=8, b=1.0)
    c = np.zeros((1, 16, 16), complex)
    c[0, 1, 0] = 1.0
    out = apply_Pgamma(SurfaceField(g, c), 2 * np.pi)
    assert abs(out.coeffs[0, 1, 0] - (0.5 - 0.5j)) <= 1e-14


def test_pgamma_contraction(grid_small):
    rng = np.random.default_rng(6)
    f = random_surface(grid_small, rng)
    for gamma in (0.3, 2.0, 50.0):
        out = apply_Pgamma(f, gamma)
        assert np.all(np.abs(out.coeffs) <= np.abs(f.coeffs) + 1e-15)


def test_gammaR1Pgamma(grid_small):
    g = grid_small
    rng = np.random.default_rng(7)
    f = random_surface(g, rng, mean_zero=True)
    # gamma = 0 annihilates
    assert np.abs(apply_gammaR1Pgamma(f, 0.0).coeffs).max() == 0.0
    # zero-mode obstruction
    bad = random_surface(g, rng, mean_zero=False)
    bad = SurfaceField(g, bad.coeffs + 1.0 * (np.arange(g.Nx * g.Nx).reshape(g.Nx, g.Nx) == 0)[None])
    with pytest.raises(ValueError, match="zero-mode"):
        apply_gammaR1Pgamma(bad, 1.0)
    # key identity gamma R1 P_gamma = (1 - P_gamma) 2 pi |D| per mode
    for gamma in (0.1, 1.0, 10.0):
        lhs = apply_gammaR1Pgamma(f, gamma)
        pg = pgamma_symbol(g.xi1, g.xi2, gamma)
        rhs = f.coeffs * ((1.0 - pg) * 2 * np.pi * g.xi_abs)[None]
        assert np.abs(lhs.coeffs - rhs).max() <= 1e-13 * max(np.abs(rhs).max(), 1e-300)


def test_gammaR1Pgamma_printed_value():
    g = make_grid(L=1.0, Nx=16, Ny=8, b=1.0)
    c = np.zeros((1, 16, 16), complex)
    c[0, 1, 0] = 1.0
    out = apply_gammaR1Pgamma(SurfaceField(g, c), 2 * np.pi)
    assert abs(out.coeffs[0, 1, 0] - np.pi * (1 + 1j)) <= 1e-12


def test_marcinkiewicz_bounds():
    radii = np.logspace(-3, 3, 41)
    angles = np.linspace(0, 2 * np.pi, 32, endpoint=False) + 0.01
    sups = marcinkiewicz_check([0.1, 1.0, 10.0, 100.0], radii, angles)
    assert sups["p"] <= 1.0 + 1e-12
    assert sups["xi1_d1p"] <= 0.5 + 1e-9
    assert sups["xi2_d2p"] <= 1.0 + 1e-9
    assert sups["xi1xi2_d1d2p"] <= 3.0 + 1e-9


def test_pgamma_derivative_formulas_vs_finite_difference():
    from slabwave.linear import _pgamma_derivatives
    rng = np.random.default_rng(8)
    h = 1e-6
    for _ in range(20):
        x1, x2 = rng.uniform(0.2, 3.0, size=2)
        gamma = rng.uniform(0.1, 5.0)
        d1, d2, d12 = _pgamma_derivatives(np.array([x1]), np.array([x2]), gamma)
        p = lambda a, b: complex(pgamma_symbol(np.array([a]), np.array([b]), gamma)[0])
        fd1 = (p(x1 + h, x2) - p(x1 - h, x2)) / (2 * h)
        fd2 = (p(x1, x2 + h) - p(x1, x2 - h)) / (2 * h)
        fd12 = (p(x1 + h, x2 + h) - p(x1 + h, x2 - h)
                - p(x1 - h, x2 + h) + p(x1 - h, x2 - h)) / (4 * h * h)
        assert abs(d1[0] - fd1) <= 2e-5 * max(1, abs(fd1))
        assert abs(d2[0] - fd2) <= 2e-5 * max(1, abs(fd2))
        assert abs(d12[0] - fd12) <= 2e-4 * max(1, abs(fd12))


def test_pgamma_strong_continuity(grid_small):
    """||P_gamma eta - P_gamma0 eta|| <= C |gamma - gamma0| on [0, 1]."""
    rng = np.random.default_rng(9)
    eta = random_surface(grid_small, rng, mean_zero=True)
    gammas = np.linspace(0.0, 1.0, 6)
    base = norm_tilde(eta, 1.0, 1.5)
    worst = 0.0
    for g1 in gammas:
        for g2 in gammas:
            if g1 == g2:
                continue
            diff = SurfaceField(grid_small,
                                apply_Pgamma(eta, g1).coeffs
                                - apply_Pgamma(eta, g2).coeffs)
            worst = max(worst, norm_tilde(diff, 1.0, 1.5) / abs(g1 - g2))
    assert np.isfinite(worst)
    assert worst <= 10.0 * base   # Lipschitz with a modest constant
