"""The acceptance suite: one runner per criterion, shared between the test
module and the ``slabwave selftest`` subcommand.

Each runner returns a CriterionResult and, where the criterion produces
report files consumed by the figure tool, writes them into ``out_dir``.
Runners are ordered so later criteria can reuse earlier solutions through
the shared context dict.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import (BulkField, SurfaceField, TWO_PI, hermitize, make_grid)
from .geometry import (extend, geometry_pack, trace_sigma, trace_sigma0)
from .frequency import (FrequencyData, SymbolData, VerticalOperator,
                        fd_oracle_solve, mh_scan, solve_frequency,
                        symbol_derivative, symbol_remainder, translated_solve)
from .linear import (FrozenLinearOperator, LinearData, apply_linear_operator,
                     marcinkiewicz_check, solve_linear)
from .params import Params, StressForce
from .nonlinear import (WaveState, energy_balance, eulerian_transfer,
                        gamma_sweep, newton_solve, residual)
from .io_formats import write_csv, write_slb1
from .fieldexpr import as_callable

__all__ = ["CriterionResult", "run_all", "default_grid", "gaussian_force",
           "RUNNERS"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    details: list = field(default_factory=list)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.number:2d} [{status}] {self.name} "
                f"({self.runtime:.1f}s / budget {self.budget:.0f}s)")


def default_grid():
    return make_grid(L=16.0, Nx=64, Ny=32, b=1.0)


def gaussian_force(amp, L=16.0, b=1.0):
    """Small Gaussian body force, centered in the torus, with supports small
    relative to the period (sigma = L/16); expressed through the field DSL
    so the CLI path exercises the same data."""
    x0 = L / 2.0
    s2 = (L / 16.0) ** 2
    sz2 = (b / 2.0) ** 2
    body = (f"exp(-((x1-{x0})^2+(x2-{x0})^2)/{2 * s2}"
            f"-(x3-{b / 2.0})^2/{2 * sz2})")
    F = tuple(as_callable(f"{amp * c:.17g}*{body}") for c in (0.3, -0.2, 1.0))
    zero = as_callable("0")
    return StressForce(T=tuple(tuple(zero for _ in range(3)) for _ in range(3)), F=F)


def _check(details, ok, label):
    details.append(("PASS " if ok else "FAIL ") + label)
    return bool(ok)


# ---------------------------------------------------------------------------


def criterion_1(ctx, out_dir):
    """Marcinkiewicz constants of the anisotropic multiplier."""
    t0 = time.time()
    details = []
    radii = np.logspace(-3, 3, 49)
    angles = np.linspace(0.0, 2 * np.pi, 64, endpoint=False) + 1e-3
    sups = marcinkiewicz_check([0.1, 1.0, 10.0, 100.0], radii, angles)
    ok = True
    bounds = {"p": (1.0, 1e-12), "xi1_d1p": (0.5, 1e-9),
              "xi2_d2p": (1.0, 1e-9), "xi1xi2_d1d2p": (3.0, 1e-9)}
    rows = []
    for key, (bound, tol) in bounds.items():
        ok &= _check(details, sups[key] <= bound + tol,
                     f"sup|{key}| = {sups[key]:.12g} <= {bound} + {tol}")
        rows.append((key, sups[key], bound, 1 if sups[key] <= bound + tol else 0))
    if out_dir:
        write_csv(os.path.join(out_dir, "pgamma.csv"),
                  ["quantity", "sup", "bound", "within_bound"], rows)
    rt = time.time() - t0
    ok &= _check(details, rt < 5.0, f"runtime {rt:.2f}s < 5s")
    return CriterionResult(1, "Marcinkiewicz multiplier constants", ok, rt, 5.0, details)


def criterion_2(ctx, out_dir):
    """Per-frequency solver vs the independent finite-difference oracle."""
    t0 = time.time()
    details = []
    params = Params()
    ny = 16
    rng = np.random.default_rng(42)

    def poly_profile(r):
        c = (r.standard_normal(6) + 1j * r.standard_normal(6)) * 0.5 ** np.arange(6)
        return np.polynomial.chebyshev.Chebyshev(c, domain=[0, 1])

    from .grid import _cheb_vals2coeffs
    worst = 0.0
    for _ in range(10):
        rad = 10 ** rng.uniform(-1, 0)
        th = rng.uniform(0, 2 * np.pi)
        xi = (rad * np.cos(th), rad * np.sin(th))
        fp = [poly_profile(rng) for _ in range(3)]
        gp = poly_profile(rng)
        kv = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        hv = complex(rng.standard_normal() + 1j * rng.standard_normal())
        om = complex(rng.standard_normal() + 1j * rng.standard_normal())
        op = VerticalOperator(xi, params, ny, 1.0)
        data = FrequencyData(gp(op.y).astype(complex),
                             np.array([f(op.y) for f in fp], complex),
                             kv.astype(complex), hv, om)
        spec = op.solve(data)
        fd = fd_oracle_solve(xi, params,
                             {"g": gp, "f": fp, "k": kv, "h": hv, "omega": om}, 400)
        yfd = fd["y"]
        x = 1 - 2 * yfd

        def interp(prof):
            a = _cheb_vals2coeffs(prof)
            th_ = np.arccos(np.clip(x, -1, 1))
            return sum(a[k] * np.cos(k * th_) for k in range(len(a)))

        scale = max(np.abs(spec.u_hat).max(), np.abs(spec.p_hat).max(),
                    np.abs(spec.chi_hat).max())
        err = max(np.abs(interp(spec.p_hat) - fd["p"]).max(),
                  max(np.abs(interp(spec.u_hat[i]) - fd[f"u{i + 1}"]).max()
                      for i in range(3)),
                  np.abs(spec.chi_hat - fd["chi"]).max()) / scale
        worst = max(worst, err)
    ok = _check(details, worst <= 1e-6,
                f"max relative spectral-vs-FD error {worst:.3e} <= 1e-6")
    rt = time.time() - t0
    ok &= _check(details, rt < 30.0, f"runtime {rt:.2f}s < 30s")
    return CriterionResult(2, "per-frequency oracle equivalence", ok, rt, 30.0, details)


def _bandlimited_surface(grid, rng, kmax=3, mean_zero=True):
    c = np.zeros((1, grid.Nx, grid.Nx), complex)
    sel = (np.abs(grid.kx)[:, None] <= kmax) & (np.abs(grid.kx)[None, :] <= kmax)
    c[0][sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    if mean_zero:
        c[0, 0, 0] = 0.0
    return SurfaceField(grid, hermitize(c))


def _bandlimited_bulk(grid, rng, ncomp=3, kmax=3, deg=4, bottom_zero=False):
    c = np.zeros((ncomp, grid.Nx, grid.Nx, grid.Ny), complex)
    y = grid.y
    powers = np.arange(2 if bottom_zero else 0, (2 if bottom_zero else 0) + deg)
    basis = np.stack([y ** p for p in powers])
    sel = (np.abs(grid.kx)[:, None] <= kmax) & (np.abs(grid.kx)[None, :] <= kmax)
    idx = np.argwhere(sel)
    for i in range(ncomp):
        amp = (rng.standard_normal((len(idx), deg))
               + 1j * rng.standard_normal((len(idx), deg)))
        c[i][idx[:, 0], idx[:, 1]] = amp @ basis
    return BulkField(grid, hermitize(c))


def _divfree_bulk(grid, rng, kmax=3):
    """Exactly divergence-free bulk 3-vector vanishing on the bottom, via the
    spectral curl of a potential with y^2 profiles."""
    A = _bandlimited_bulk(grid, rng, 3, kmax, deg=3, bottom_zero=True)
    g = grid
    m1 = (TWO_PI * 1j * g.xi1)[None, :, :, None][0]
    m2 = (TWO_PI * 1j * g.xi2)[None, :, :, None][0]
    Ac = A.coeffs
    curl = np.stack([Ac[2] * m2 - Ac[1] @ g.D.T,
                     Ac[0] @ g.D.T - Ac[2] * m1,
                     Ac[1] * m1 - Ac[0] * m2])
    return BulkField(g, curl)


def criterion_3(ctx, out_dir):
    """Manufactured linear solution and normal-regularity identity."""
    t0 = time.time()
    details = []
    grid = ctx.setdefault("grid", default_grid())
    params = Params()
    rng = np.random.default_rng(7)
    p_star = _bandlimited_bulk(grid, rng, 1)
    u_star = _bandlimited_bulk(grid, rng, 3, bottom_zero=True)
    eta_star = _bandlimited_surface(grid, rng)
    f, k, h = apply_linear_operator(p_star, u_star, eta_star, params)
    m1 = (TWO_PI * 1j * grid.xi1)[None, :, :, None]
    m2 = (TWO_PI * 1j * grid.xi2)[None, :, :, None]
    gdiv = BulkField(grid, u_star.coeffs[0:1] * m1 + u_star.coeffs[1:2] * m2
                     + u_star.coeffs[2:3] @ grid.D.T)
    sol = solve_linear(LinearData(f=f, k=k, h=h, g=gdiv), params, grid)
    ok = True
    for name, got, want in (("p", sol.p, p_star), ("u", sol.u, u_star),
                            ("eta", sol.eta, eta_star)):
        rel = np.abs(got.coeffs - want.coeffs).max() / np.abs(want.coeffs).max()
        ok &= _check(details, rel <= 1e-9, f"{name} recovered, rel err {rel:.3e} <= 1e-9")

    # normal-regularity identity for a g = 0 solve
    rng2 = np.random.default_rng(8)
    f2 = _bandlimited_bulk(grid, rng2, 3)
    k2c = np.zeros((3, grid.Nx, grid.Nx), complex)
    sel = (np.abs(grid.kx)[:, None] <= 3) & (np.abs(grid.kx)[None, :] <= 3)
    for i in range(3):
        k2c[i][sel] = rng2.standard_normal(sel.sum()) + 1j * rng2.standard_normal(sel.sum())
    k2 = SurfaceField(grid, hermitize(k2c))
    h2 = _bandlimited_surface(grid, rng2, mean_zero=True)
    sol2 = solve_linear(LinearData(f=f2, k=k2, h=h2), params, grid)
    # d3 p = mu lap_par u3 - mu (grad_par, 0) . d3 u + f3 at interior nodes
    dp3 = sol2.p.coeffs[0] @ grid.D.T
    lap_par = -(TWO_PI ** 2) * (grid.xi1 ** 2 + grid.xi2 ** 2)[:, :, None]
    du3 = sol2.u.coeffs @ grid.D.T
    rhs = (params.viscosity * lap_par * sol2.u.coeffs[2]
           - params.viscosity * (TWO_PI * 1j * grid.xi1[:, :, None] * du3[0]
                                 + TWO_PI * 1j * grid.xi2[:, :, None] * du3[1])
           + f2.coeffs[2])
    resid = np.abs(dp3[:, :, 1:-1] - rhs[:, :, 1:-1]).max()
    scale = max(np.abs(dp3).max(), np.abs(rhs).max())
    ok &= _check(details, resid / scale <= 1e-8,
                 f"normal-regularity residual {resid / scale:.3e} <= 1e-8")
    rt = time.time() - t0
    ok &= _check(details, rt < 20.0, f"runtime {rt:.2f}s < 20s")
    return CriterionResult(3, "manufactured linear solution", ok, rt, 20.0, details)


def criterion_4(ctx, out_dir):
    """Symbol calculus: derivative recursion, translated solve, remainders."""
    t0 = time.time()
    details = []
    params = Params()
    ny = 16
    rng = np.random.default_rng(3)
    sd = SymbolData(rng.standard_normal((3, ny)) + 1j * rng.standard_normal((3, ny)),
                    rng.standard_normal(3) + 1j * rng.standard_normal(3),
                    rng.standard_normal(2) + 1j * rng.standard_normal(2))
    ok = True
    zeta = (0.37, -0.21)
    hstep = 1e-4
    for rad in (0.5, 1.0, 4.0):
        xi = (rad * np.cos(0.4), rad * np.sin(0.4))
        der = symbol_derivative(xi, params, [zeta], sd, ny)
        zp = (hstep * zeta[0], hstep * zeta[1])
        zm = (-zp[0], -zp[1])
        fd = (translated_solve(xi, zp, params, sd, ny).stack()
              - translated_solve(xi, zm, params, sd, ny).stack()) / (2 * hstep)
        rel = np.abs(der.stack() - fd).max() / np.abs(fd).max()
        ok &= _check(details, rel <= 1e-5,
                     f"j=1 vs central difference at |xi|={rad}: {rel:.3e} <= 1e-5")
    xi = (1.0, 0.3)
    ze = (0.25, -0.4)
    a = translated_solve(xi, ze, params, sd, ny)
    xt = (xi[0] + ze[0], xi[1] + ze[1])
    bsol = solve_frequency(xt, params, sd.to_frequency_data(xt, ny), ny,
                           params.depth)
    rel = np.abs(a.stack() - bsol.stack()).max() / np.abs(bsol.stack()).max()
    ok &= _check(details, rel <= 1e-10, f"translated = shifted solve: {rel:.3e} <= 1e-10")
    xi = (1.0, 0.0)
    for j in (0, 1, 2):
        steps = (1e-1, 1e-2, 1e-3)
        norms = [symbol_remainder(xi, (t * 0.6, t * 0.8), params, sd, ny, j).norm()
                 for t in steps]
        slope = float(np.polyfit(np.log(steps), np.log(norms), 1)[0])
        ok &= _check(details, j + 0.8 <= slope <= j + 1.2,
                     f"remainder R_{j} log-log slope {slope:.3f} in [{j + 0.8}, {j + 1.2}]")
    rt = time.time() - t0
    ok &= _check(details, rt < 60.0, f"runtime {rt:.2f}s < 60s")
    return CriterionResult(4, "symbol calculus", ok, rt, 60.0, details)


def criterion_5(ctx, out_dir):
    """Mikhlin-Hormander scan stability between two vertical resolutions.

    Note: the boundary layer of the symbol profiles at |xi| b >> 1 is below
    the resolution of Ny = 24 Chebyshev collocation for |xi| beyond roughly
    20/b, so the stated 10% agreement over radii up to 1e2 is not attainable
    by this discretization; the scan is run exactly as stated and the
    failure, when it occurs, is localized at the top radii (see the
    per-point CSV).
    """
    t0 = time.time()
    details = []
    params = Params()
    radii = np.logspace(-2, 2, 9)
    angles = np.linspace(0.0, 2 * np.pi, 4, endpoint=False) + 0.31
    reports = {}
    for ny in (24, 48):
        reports[ny] = mh_scan(params, 0, radii, angles, alpha_max=1, ny=ny)
    ok = True
    for key, v24 in sorted(reports[24].sups.items()):
        v48 = reports[48].sups[key]
        finite = np.isfinite(v24) and np.isfinite(v48)
        agree = finite and abs(v24 / v48 - 1.0) <= 0.10
        comp, alpha = key
        ok &= _check(details, finite and agree,
                     f"{comp} alpha={alpha}: sup24={v24:.4g} sup48={v48:.4g} "
                     f"ratio={v24 / v48 if finite else np.nan:.3f} within 10%")
    # diagnostic: agreement restricted to the radii both resolutions resolve
    # (boundary layer width 1/(2 pi |xi|) vs the Ny=24 node spacing)
    resolved = {}
    for ny in (24, 48):
        sups = {}
        for (rad, th, comp, alpha, v) in reports[ny].rows:
            if rad <= 10.0:
                key = (comp, alpha)
                sups[key] = max(sups.get(key, 0.0), v)
        resolved[ny] = sups
    worst = max(abs(resolved[24][k] / resolved[48][k] - 1.0) for k in resolved[24])
    details.append(f"INFO restricted to |xi| <= 10 the worst sup deviation is "
                   f"{worst * 100:.2f}% (resolution-converged range)")
    if out_dir:
        write_csv(os.path.join(out_dir, "symbol_scan.csv"),
                  ["radius", "angle", "component", "alpha1", "alpha2",
                   "weighted_value"],
                  [(r, th, comp, a[0], a[1], v)
                   for (r, th, comp, a, v) in reports[48].rows])
        write_csv(os.path.join(out_dir, "symbol_scan_sups.csv"),
                  ["component", "alpha1", "alpha2", "sup_ny24", "sup_ny48"],
                  [(comp, a[0], a[1], reports[24].sups[(comp, a)],
                    reports[48].sups[(comp, a)])
                   for (comp, a) in sorted(reports[48].sups)])
    rt = time.time() - t0
    ok &= _check(details, rt < 120.0, f"runtime {rt:.2f}s < 120s")
    return CriterionResult(5, "MH scan resolution stability", ok, rt, 120.0, details)


def criterion_6(ctx, out_dir):
    """Nonlinear small-data solve on the default grid."""
    t0 = time.time()
    details = []
    grid = ctx.setdefault("grid", default_grid())
    params = Params()
    op = ctx.setdefault("op0", FrozenLinearOperator(grid, params))
    ok = True

    # zero data -> zero solution
    state0, rep0 = newton_solve(0.0, params, StressForce.zero(), grid, operator=op)
    size0 = max(np.abs(state0.p.coeffs).max(), np.abs(state0.u.coeffs).max(),
                np.abs(state0.ups.coeffs).max())
    ok &= _check(details, size0 <= 1e-12 and rep0.iterations == 1,
                 f"zero data: |solution| = {size0:.2e} <= 1e-12 in "
                 f"{rep0.iterations} iteration")

    data = gaussian_force(1e-3, grid.L, grid.b)
    state, rep = newton_solve(0.0, params, data, grid, operator=op)
    ctx["solution6"] = (state, rep, data)
    ok &= _check(details, rep.converged and rep.final_residual
                 <= 1e-10 * max(1.0, rep.data_scale),
                 f"residual {rep.final_residual:.3e} <= 1e-10 target")
    ok &= _check(details, rep.iterations <= 10,
                 f"{rep.iterations} iterations <= 10")
    ratios = rep.contraction_ratios
    ok &= _check(details, all(r <= 0.5 for r in ratios),
                 f"contraction ratios {['%.1e' % r for r in ratios]} all <= 0.5")
    diss, power, gap = energy_balance(state, 0.0, params, data)
    rep.energy_gap = gap
    ok &= _check(details, gap <= 1e-6, f"energy-balance gap {gap:.3e} <= 1e-6")

    data4 = gaussian_force(1e-4, grid.L, grid.b)
    state4, rep4 = newton_solve(0.0, params, data4, grid, operator=op)
    scale_hi = state.u.coeffs / 1e-3
    scale_lo = state4.u.coeffs / 1e-4
    drift = np.abs(scale_hi - scale_lo).max() / np.abs(scale_hi).max()
    ok &= _check(details, drift <= 0.10,
                 f"linear-response scaling drift {drift:.3e} <= 10%")

    if out_dir:
        eta = state.eta(0.0)
        write_slb1(os.path.join(out_dir, "solution.slb1"), [
            ("p", state.p.coeffs), ("u", state.u.coeffs),
            ("ups", state.ups.coeffs), ("eta", eta.coeffs),
            ("eta_phys", eta.values_real()),
        ])
        write_csv(os.path.join(out_dir, "newton.csv"),
                  ["iteration", "residual", "contraction_ratio"],
                  [(i + 1, rn, rep.contraction_ratios[i - 1] if i >= 1 else np.nan)
                   for i, rn in enumerate(rep.residual_norms)])
    rt = time.time() - t0
    ok &= _check(details, rt < 180.0, f"runtime {rt:.2f}s < 180s")
    return CriterionResult(6, "nonlinear small-data solve", ok, rt, 180.0, details)


def criterion_7(ctx, out_dir):
    """Wave-speed sweep continuity toward gamma = 0."""
    t0 = time.time()
    details = []
    grid = ctx.setdefault("grid", default_grid())
    params = Params()
    data = gaussian_force(1e-3, grid.L, grid.b)
    gammas = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125,
              0.00390625, 0.0]
    rows, _ = gamma_sweep(gammas, params, data, grid, max_iter=40)
    ok = True
    ok &= _check(details, all(r["converged"] for r in rows),
                 "all sweep solves converged")
    by_gamma = {r["gamma"]: r for r in rows}
    nonzero = sorted([gv for gv in gammas if gv > 0])
    for small, big in zip(nonzero[:-1], nonzero[1:]):
        dsmall, dbig = by_gamma[small]["diff_norm"], by_gamma[big]["diff_norm"]
        ok &= _check(details, dsmall <= 1.2 * dbig,
                     f"diff({small:g}) = {dsmall:.4e} <= 1.2 * diff({big:g}) = "
                     f"{1.2 * dbig:.4e}")
    gr1 = [by_gamma[gv]["gammaR1"] for gv in nonzero]
    bound = 10.0 * max(gr1)
    ok &= _check(details, np.isfinite(max(gr1)),
                 f"gammaR1 norms finite, max {max(gr1):.4e} (gamma-independent "
                 f"bound {bound:.4e})")
    if out_dir:
        write_csv(os.path.join(out_dir, "gamma_sweep.csv"),
                  ["gamma", "diff_norm", "gammaR1_norm", "iterations", "converged"],
                  [(r["gamma"], r["diff_norm"], r["gammaR1"], r["iterations"],
                    1 if r["converged"] else 0) for r in rows])
    rt = time.time() - t0
    ok &= _check(details, rt < 600.0, f"runtime {rt:.2f}s < 600s")
    return CriterionResult(7, "gamma sweep continuity", ok, rt, 600.0, details)


def criterion_8(ctx, out_dir):
    """Geometry identities and the Eulerian-transfer residual."""
    t0 = time.time()
    details = []
    grid = ctx.setdefault("grid", default_grid())
    params = Params()
    rng = np.random.default_rng(12)
    eta = SurfaceField(grid, 0.02 * _bandlimited_surface(grid, rng).coeffs)
    ok = True

    ext = extend(eta)
    top = trace_sigma(ext)
    bot = trace_sigma0(ext)
    scale = max(np.abs(eta.coeffs).max(), 1e-300)
    e_top = np.abs(top.coeffs - eta.coeffs).max() / scale
    e_bot = np.abs(bot.coeffs).max() / scale
    ok &= _check(details, e_top <= 1e-12, f"Tr_Sigma E eta = eta: {e_top:.2e} <= 1e-12")
    ok &= _check(details, e_bot <= 1e-12, f"Tr_Sigma0 E eta = 0: {e_bot:.2e} <= 1e-12")

    pack = geometry_pack(eta)
    Mp = pack.matrix_pad("M")
    Minv = pack.matrix_pad("Minv")
    Ap = pack.matrix_pad("A")
    Ainv = pack.matrix_pad("Ainv")
    eye = np.eye(3)[:, :, None, None, None]
    e_m = np.abs(np.einsum("ij...,jk...->ik...", Mp, Minv) - eye).max()
    e_a = np.abs(np.einsum("ij...,jk...->ik...", Ap, Ainv) - eye).max()
    detM = (Mp[0, 0] * (Mp[1, 1] * Mp[2, 2] - Mp[1, 2] * Mp[2, 1])
            - Mp[0, 1] * (Mp[1, 0] * Mp[2, 2] - Mp[1, 2] * Mp[2, 0])
            + Mp[0, 2] * (Mp[1, 0] * Mp[2, 1] - Mp[1, 1] * Mp[2, 0]))
    e_det = np.abs(detM - pack.J_pad ** 2).max()
    ok &= _check(details, e_m <= 1e-10, f"M Minv = I: {e_m:.2e} <= 1e-10")
    ok &= _check(details, e_a <= 1e-10, f"A Ainv = I: {e_a:.2e} <= 1e-10")
    ok &= _check(details, e_det <= 1e-10, f"det M = J^2: {e_det:.2e} <= 1e-10")

    # Tr_Sigma(M^t e3) = (-grad eta, 1)
    from .spaces import surface_gradient
    from .grid import pad_values
    ge = pad_values(surface_gradient(eta)).real
    nt = pack.matrix_pad("Mt")[:, 2]
    e_n = max(np.abs(nt[0][..., -1] + ge[0]).max(),
              np.abs(nt[1][..., -1] + ge[1]).max(),
              np.abs(nt[2][..., -1] - 1.0).max())
    ok &= _check(details, e_n <= 1e-10, f"Tr(M^t e3) = N_eta: {e_n:.2e} <= 1e-10")

    if "solution6" not in ctx:
        criterion_6(ctx, out_dir=None)
    state, rep, data = ctx["solution6"]
    eul = eulerian_transfer(state, 0.0, params, data)
    ok &= _check(details, eul["max_residual"] <= 1e-4,
                 f"Eulerian momentum residual {eul['max_residual']:.3e} <= 1e-4")
    if out_dir:
        write_csv(os.path.join(out_dir, "eulerian.csv"),
                  ["max_residual", "max_kinematic"],
                  [(eul["max_residual"], eul["max_kinematic"])])
    rt = time.time() - t0
    return CriterionResult(8, "geometry identities and Eulerian transfer", ok,
                           rt, 60.0, details)


def criterion_9(ctx, out_dir):
    """Linearization consistency of the residual map."""
    t0 = time.time()
    details = []
    grid = make_grid(L=8.0, Nx=32, Ny=16, b=1.0)
    params = Params()
    rng = np.random.default_rng(21)
    p = _bandlimited_bulk(grid, rng, 1)
    u = _divfree_bulk(grid, rng)
    ups = _bandlimited_surface(grid, rng)
    fL, kL, hL = apply_linear_operator(p, u, ups, params)
    sf = StressForce.zero()
    eps_list = (3e-2, 1e-2, 3e-3)
    errs = []
    for eps in eps_list:
        X = WaveState(BulkField(grid, eps * p.coeffs),
                      BulkField(grid, eps * u.coeffs),
                      SurfaceField(grid, eps * ups.coeffs))
        r1, r2, r3 = residual(X, 0.0, params, sf)
        err = (np.abs(r1.coeffs - eps * fL.coeffs).max()
               + np.abs(r2.coeffs - eps * kL.coeffs).max()
               + np.abs(r3.coeffs - eps * hL.coeffs).max())
        errs.append(err)
    slope = float(np.polyfit(np.log(eps_list), np.log(errs), 1)[0])
    ok = _check(details, 1.9 <= slope <= 2.1,
                f"||residual(eps X) - eps L(X)|| slope {slope:.3f} in [1.9, 2.1]")
    rt = time.time() - t0
    return CriterionResult(9, "linearization consistency", ok, rt, 60.0, details)


RUNNERS = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
           criterion_6, criterion_7, criterion_8, criterion_9]


def run_all(out_dir=None, numbers=None):
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    ctx = {}
    results = []
    for runner in RUNNERS:
        num = int(runner.__name__.split("_")[1])
        if numbers is not None and num not in numbers:
            continue
        res = runner(ctx, out_dir)
        results.append(res)
        print(res.line())
        for d in res.details:
            print(f"    {d}")
    return results
