"""The flattened nonlinear system: residual maps, quasi-Newton iteration
with the frozen equilibrium linearization, and the energy / wave-speed /
physical-domain diagnostics.

The surface unknown is the pre-image ups with eta = P_gamma ups, which keeps
the gamma -> 0 limit in a fixed space; corrections come from the
constant-coefficient solve, so every iterate is exactly divergence-free and
zero on the bottom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (BulkField, Grid, SurfaceField, TWO_PI, pad_values,
                   unpad_transform)
from .geometry import (GeometryPack, compose_padded, geometry_pack,
                       mean_curvature, trace_sigma)
from .linear import (FrozenLinearOperator, LinearData, SolutionTriple,
                     apply_Pgamma, apply_gamma_d1_Pgamma)
from .params import Params, StressForce
from .spaces import SobolevIndex, norm_Hs_r2, norm_bessel, surface_gradient

__all__ = [
    "WaveState", "NewtonReport", "Xi1", "Xi2", "Upsilon1", "Upsilon2",
    "residual", "newton_solve", "energy_balance", "gamma_sweep",
    "eulerian_transfer", "Params", "StressForce",
]


@dataclass(frozen=True)
class WaveState:
    """Iteration state (p, u, ups); the physical surface is eta = P_gamma ups."""

    p: BulkField
    u: BulkField
    ups: SurfaceField

    @staticmethod
    def zero(grid: Grid):
        z = np.zeros((1, grid.Nx, grid.Nx, grid.Ny), complex)
        z3 = np.zeros((3, grid.Nx, grid.Nx, grid.Ny), complex)
        zs = np.zeros((1, grid.Nx, grid.Nx), complex)
        return WaveState(BulkField(grid, z), BulkField(grid, z3),
                         SurfaceField(grid, zs))

    def eta(self, gamma):
        return apply_Pgamma(self.ups, gamma)

    def minus(self, d: SolutionTriple, damping=1.0):
        return WaveState(self.p - damping * d.p, self.u - damping * d.u,
                         self.ups - damping * d.eta)


@dataclass
class NewtonReport:
    residual_norms: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    final_residual: float = np.nan
    iterations: int = 0
    converged: bool = False
    energy_gap: float = np.nan
    min_J: float = np.inf
    data_scale: float = 0.0


# ---------------------------------------------------------------------------
# residual assembly on the dealiased grid


def _gradients_padded(f: BulkField):
    """(d_j f_i) as padded physical samples, shape (3, ncomp, M, M, Ny)."""
    g = f.grid
    m1 = (TWO_PI * 1j * g.xi1)[None, :, :, None]
    m2 = (TWO_PI * 1j * g.xi2)[None, :, :, None]
    d1 = BulkField(g, f.coeffs * m1)
    d2 = BulkField(g, f.coeffs * m2)
    d3 = BulkField(g, f.coeffs @ g.D.T)
    return np.stack([pad_values(d1).real, pad_values(d2).real, pad_values(d3).real])


def _state_pads(p: BulkField, u: BulkField, pack: GeometryPack):
    """Shared padded-physical quantities for the Xi maps."""
    g = p.grid
    u_pad = pad_values(u).real
    p_pad = pad_values(p).real[0]
    Minv = pack.matrix_pad("Minv")
    w_pad = np.einsum("ij...,j...->i...", Minv, u_pad)
    w_field = unpad_transform(g, w_pad)
    dw_pad = _gradients_padded(w_field)          # dw[m, i] = d_m w_i
    A = pack.matrix_pad("A")
    # (D_A w)_{il} = sum_m (d_m w_i) A_{lm} + A_{im} (d_m w_l)
    DwA = (np.einsum("mi...,lm...->il...", dw_pad, A)
           + np.einsum("im...,ml...->il...", A, dw_pad))
    return u_pad, p_pad, w_pad, w_field, dw_pad, DwA


def Xi1(p: BulkField, u: BulkField, eta: SurfaceField, gamma: float,
        gravity: float, viscosity: float, pack: GeometryPack | None = None,
        shared=None) -> BulkField:
    """Momentum residual of the flattened system:
    M^{-t}((u - gamma M e1).grad(M^{-1} u)) + grad(p + g eta)
    - mu M^{-t} div((D_A(M^{-1}u)) M^t)."""
    g = p.grid
    pack = pack if pack is not None else geometry_pack(eta)
    u_pad, p_pad, w_pad, w_field, dw_pad, DwA = (
        shared if shared is not None else _state_pads(p, u, pack))
    M = pack.matrix_pad("M")
    Mmt = pack.matrix_pad("Mmt")

    # transport: a = u - gamma M e1; conv_i = sum_m a_m d_m w_i
    a = u_pad - gamma * M[:, 0]
    conv = np.einsum("m...,mi...->i...", a, dw_pad)

    # stress divergence: S = (D_A w) M^t; div S computed spectrally
    S = np.einsum("il...,jl...->ij...", DwA, M)
    S_field = unpad_transform(g, S.reshape(9, *S.shape[2:]))
    m1 = (TWO_PI * 1j * g.xi1)[None, :, :, None]
    m2 = (TWO_PI * 1j * g.xi2)[None, :, :, None]
    Sc = S_field.coeffs.reshape(3, 3, g.Nx, g.Nx, g.Ny)
    divS = (Sc[:, 0] * m1 + Sc[:, 1] * m2 + Sc[:, 2] @ g.D.T)
    divS_pad = pad_values(BulkField(g, divS)).real

    t = np.einsum("ij...,j...->i...", Mmt, conv - viscosity * divS_pad)
    out = unpad_transform(g, t)

    # exact linear part: grad(p + g eta)
    peta = p.coeffs + gravity * np.repeat(eta.coeffs[:, :, :, None], g.Ny, axis=3)
    gradp = np.concatenate([peta * m1, peta * m2, p.coeffs @ g.D.T])
    return BulkField(g, out.coeffs + gradp)


def Xi2(p: BulkField, u: BulkField, eta: SurfaceField, viscosity: float,
        surface_tension: float, pack: GeometryPack | None = None,
        shared=None) -> SurfaceField:
    """Dynamic-condition residual:
    Tr_Sigma[-(p I - mu D_A(M^{-1}u)) M^t e3 - kappa H(eta) M^t e3]."""
    g = p.grid
    pack = pack if pack is not None else geometry_pack(eta)
    u_pad, p_pad, w_pad, w_field, dw_pad, DwA = (
        shared if shared is not None else _state_pads(p, u, pack))
    # M^t e3 at the top plane: (-d1 eta, -d2 eta, 1)
    n1 = -pack.dext_pad[0][..., -1]
    n2 = -pack.dext_pad[1][..., -1]
    S2 = p_pad[..., -1][None, None] * np.eye(3)[:, :, None, None] \
        - viscosity * DwA[..., -1]
    H = mean_curvature(eta)
    H_pad = pad_values(H).real[0]
    out = np.empty((3,) + n1.shape)
    for i in range(3):
        flux = S2[i, 0] * n1 + S2[i, 1] * n2 + S2[i, 2]
        ncomp = (n1 if i == 0 else n2 if i == 1 else np.ones_like(n1))
        out[i] = -flux - surface_tension * H_pad * ncomp
    return unpad_transform(g, out)


def Upsilon1(F, eta: SurfaceField, pack: GeometryPack | None = None) -> BulkField:
    """-J M^{-t}(F o flattening) for a force given by three callables."""
    g = eta.grid
    pack = pack if pack is not None else geometry_pack(eta)
    Fp = np.stack([compose_padded(F[i], eta) for i in range(3)])
    Mmt = pack.matrix_pad("Mmt")
    t = -pack.J_pad[None] * np.einsum("ij...,j...->i...", Mmt, Fp)
    return unpad_transform(g, t)


def Upsilon2(T, eta: SurfaceField, pack: GeometryPack | None = None) -> SurfaceField:
    """-Tr_Sigma[(T o flattening) M^t e3] for a 3x3 nest of callables."""
    g = eta.grid
    pack = pack if pack is not None else geometry_pack(eta)
    M = g.pad_size()
    x = np.arange(M) * (g.L / M)
    X1 = np.broadcast_to(x[:, None], (M, M))
    X2 = np.broadcast_to(x[None, :], (M, M))
    eta_pad = pad_values(eta).real[0]
    X3 = g.b + eta_pad
    n1 = -pack.dext_pad[0][..., -1]
    n2 = -pack.dext_pad[1][..., -1]
    out = np.empty((3, M, M))
    for i in range(3):
        row = [np.asarray(T[i][j](X1, X2, X3), dtype=float) for j in range(3)]
        out[i] = -(row[0] * n1 + row[1] * n2 + row[2])
    return unpad_transform(g, out)


def residual(state: WaveState, gamma: float, params: Params,
             data: StressForce):
    """The three components of the combined residual map at eta = P_gamma ups:
    momentum, dynamic trace, and kinematic Tr u.e3 + gamma d1 P_gamma ups."""
    r1, r2, r3, _ = _residual_with_pack(state, gamma, params, data)
    return r1, r2, r3


def _residual_with_pack(state: WaveState, gamma: float, params: Params,
                        data: StressForce):
    eta = state.eta(gamma)
    pack = geometry_pack(eta)
    shared = _state_pads(state.p, state.u, pack)
    r1 = Xi1(state.p, state.u, eta, gamma, params.gravity, params.viscosity,
             pack, shared)
    r1 = BulkField(state.p.grid, r1.coeffs
                   + Upsilon1(data.F, eta, pack).coeffs)
    r2 = Xi2(state.p, state.u, eta, params.viscosity, params.surface_tension,
             pack, shared)
    r2 = SurfaceField(state.p.grid, r2.coeffs + Upsilon2(data.T, eta, pack).coeffs)
    kin = trace_sigma(BulkField(state.u.grid, state.u.coeffs[2:3]))
    r3 = SurfaceField(state.p.grid,
                      kin.coeffs + apply_gamma_d1_Pgamma(state.ups, gamma).coeffs)
    return r1, r2, r3, pack


def _residual_norm(r1, r2, r3):
    g = r1.grid
    w = g.wy
    bulk = np.sqrt(float(np.einsum("cxyj,j->", np.abs(r1.coeffs) ** 2, w)))
    return bulk + float(np.linalg.norm(r2.coeffs)) + float(np.linalg.norm(r3.coeffs))


def newton_solve(gamma: float, params: Params, data: StressForce, grid: Grid,
                 tol: float = 1e-10, max_iter: int = 25, damping: float = 1.0,
                 operator: FrozenLinearOperator | None = None,
                 krylov: bool = False):
    """Quasi-Newton (Picard) iteration X -> X - Psi_lin[residual(X)] with the
    frozen equilibrium linearization as Psi_lin.

    Corrections are produced by the constant-coefficient solve, so the
    divergence constraint and the bottom condition hold exactly along the
    iteration; contraction is monitored, not assumed.  At gamma = 0 the
    frozen operator is exactly the constant-coefficient solve; away from 0
    it is the equilibrium derivative at the given wave speed (the plain
    gamma = 0 freeze stops contracting near |gamma| ~ 0.3).

    ``krylov`` switches each correction to a finite-difference
    Jacobian-vector GMRES solve, right-preconditioned by the frozen
    operator, for experiments outside the quasi-Newton regime.
    """
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    op = operator if operator is not None else FrozenLinearOperator(
        grid, params, gamma=gamma)
    if op.gamma != gamma:
        raise ValueError("operator was frozen at a different wave speed")
    state = WaveState.zero(grid)
    report = NewtonReport()
    report.data_scale = _data_scale(data, grid)
    target = tol * max(1.0, report.data_scale)
    for it in range(1, max_iter + 1):
        r1, r2, r3, pack = _residual_with_pack(state, gamma, params, data)
        report.min_J = min(report.min_J, float(pack.J_pad.min()))
        rn = _residual_norm(r1, r2, r3)
        report.residual_norms.append(rn)
        report.iterations = it
        if len(report.residual_norms) > 1:
            prev = report.residual_norms[-2]
            report.contraction_ratios.append(rn / max(prev, 1e-300))
        if rn <= target:
            report.converged = True
            report.final_residual = rn
            break
        if not krylov and len(report.contraction_ratios) >= 3 and all(
                r >= 1.0 for r in report.contraction_ratios[-3:]):
            raise RuntimeError(
                "outside small-data regime: residual not contracting "
                f"(last ratios {report.contraction_ratios[-3:]})")
        if krylov:
            corr = _krylov_correction(state, (r1, r2, r3), gamma, params,
                                      data, op)
        else:
            corr = op.solve(LinearData(f=r1, k=r2, h=r3))
        state = state.minus(corr, damping)
    else:
        report.final_residual = report.residual_norms[-1]
        raise RuntimeError(
            f"no convergence in {max_iter} iterations "
            f"(residual {report.final_residual:.3e}, target {target:.3e})")
    return state, report


def _krylov_correction(state: WaveState, rs, gamma, params, data,
                       op: FrozenLinearOperator, gmres_tol=1e-4, maxiter=30):
    """Solve J(X) dX = residual(X) by GMRES on the residual space with
    finite-difference Jacobian-vector products, right-preconditioned by the
    frozen inverse: the iterated operator is w -> J(X) Psi0 w, which is a
    compact perturbation of the identity near the equilibrium."""
    import scipy.sparse.linalg as spla

    g = state.p.grid
    r1, r2, r3 = rs
    nb = g.Nx * g.Nx * g.Ny
    ns = g.Nx * g.Nx

    def pack_resid(a, b, c):
        return np.concatenate([a.coeffs.ravel(), b.coeffs.ravel(),
                               c.coeffs.ravel()])

    def unpack_resid(vec):
        f = BulkField(g, vec[:3 * nb].reshape(3, g.Nx, g.Nx, g.Ny))
        k = SurfaceField(g, vec[3 * nb:3 * nb + 3 * ns].reshape(3, g.Nx, g.Nx))
        h = SurfaceField(g, vec[3 * nb + 3 * ns:].reshape(1, g.Nx, g.Nx))
        return f, k, h

    base = pack_resid(r1, r2, r3)
    state_scale = max(np.abs(state.p.coeffs).max(), np.abs(state.u.coeffs).max(),
                      np.abs(state.ups.coeffs).max(), 1e-6)

    def preconditioned(w):
        f, k, h = unpack_resid(w)
        return op.solve(LinearData(f=f, k=k, h=h))

    def matvec(w):
        delta = preconditioned(w)
        dmax = max(np.abs(delta.p.coeffs).max(), np.abs(delta.u.coeffs).max(),
                   np.abs(delta.eta.coeffs).max(), 1e-300)
        eps = 1e-7 * state_scale / dmax
        shifted = WaveState(
            BulkField(g, state.p.coeffs + eps * delta.p.coeffs),
            BulkField(g, state.u.coeffs + eps * delta.u.coeffs),
            SurfaceField(g, state.ups.coeffs + eps * delta.eta.coeffs))
        s1, s2, s3 = residual(shifted, gamma, params, data)
        return (pack_resid(s1, s2, s3) - base) / eps

    n = 3 * nb + 4 * ns
    A = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    w, info = spla.gmres(A, base, rtol=gmres_tol, atol=0.0,
                         maxiter=maxiter, restart=maxiter)
    if info != 0:
        # fall back to the plain frozen correction
        return op.solve(LinearData(f=r1, k=r2, h=r3))
    return preconditioned(w)


def _data_scale(data: StressForce, grid: Grid):
    """Norm of the equilibrium forcing (Upsilon at eta = 0)."""
    zs = SurfaceField(grid, np.zeros((1, grid.Nx, grid.Nx), complex))
    u1 = Upsilon1(data.F, zs)
    u2 = Upsilon2(data.T, zs)
    w = grid.wy
    return float(np.sqrt(np.einsum("cxyj,j->", np.abs(u1.coeffs) ** 2, w))
                 + np.linalg.norm(u2.coeffs))


# ---------------------------------------------------------------------------
# diagnostics


def energy_balance(state: WaveState, gamma: float, params: Params,
                   data: StressForce):
    """Dissipation vs power input, both evaluated in flattened coordinates
    with the Jacobian weights; returns (dissipation, power, relative gap)."""
    g = state.p.grid
    eta = state.eta(gamma)
    pack = geometry_pack(eta)
    u_pad, p_pad, w_pad, w_field, dw_pad, DwA = _state_pads(state.p, state.u, pack)
    M = g.pad_size()
    cell = (g.L / M) ** 2
    mu = params.viscosity

    diss_density = 0.5 * mu * np.einsum("il...,il...->...", DwA, DwA) * pack.J_pad
    dissipation = float(np.einsum("xyj,j->", diss_density, g.wy) * cell)

    Fp = np.stack([compose_padded(data.F[i], eta) for i in range(3)])
    bulk_density = np.einsum("i...,i...->...", Fp, w_pad) * pack.J_pad
    power_bulk = float(np.einsum("xyj,j->", bulk_density, g.wy) * cell)

    x = np.arange(M) * (g.L / M)
    X1 = np.broadcast_to(x[:, None], (M, M))
    X2 = np.broadcast_to(x[None, :], (M, M))
    X3 = g.b + pad_values(eta).real[0]
    n1 = -pack.dext_pad[0][..., -1]
    n2 = -pack.dext_pad[1][..., -1]
    w_top = w_pad[..., -1]
    surf_density = np.zeros_like(X1)
    for i in range(3):
        row = [np.asarray(data.T[i][j](X1, X2, X3), dtype=float) for j in range(3)]
        stress_i = row[0] * n1 + row[1] * n2 + row[2]
        surf_density += stress_i * w_top[i]
    power_surf = float(surf_density.sum() * cell)

    power = power_bulk + power_surf
    gap = abs(dissipation - power) / max(dissipation, abs(power), 1e-300)
    return dissipation, power, gap


def solution_norm_X(a: WaveState, bstate: WaveState, gamma_a, gamma_b,
                    params: Params):
    """X-norm surrogate of the difference of two solutions: mixed norms of
    (p, u) at the diagnostic indices plus the gradient norm of eta."""
    s, r = params.sobolev.s, params.sobolev.r
    dp = a.p - bstate.p
    du = a.u - bstate.u
    de = a.eta(gamma_a) - bstate.eta(gamma_b)
    np_ = norm_Hs_r2(dp, SobolevIndex(1 + s, r))
    nu = norm_Hs_r2(du, SobolevIndex(2 + s, r))
    ne = norm_bessel(surface_gradient(de), 1.5 + s, r)
    return np_ + nu + ne


def gamma_sweep(gammas, params: Params, data: StressForce, grid: Grid,
                tol: float = 1e-10, max_iter: int = 40,
                operator: FrozenLinearOperator | None = None):
    """Solve across wave speeds and report continuity diagnostics.

    Returns rows sorted by |gamma|: (gamma, ||sol(gamma) - sol(0)||_X,
    ||gamma R_1 eta||_{L^r}, iterations, converged); per-gamma failures are
    recorded, not fatal.
    """
    if not any(gv == 0 for gv in gammas):
        raise ValueError("sweep must include gamma = 0")
    sols = {}
    reports = {}
    for gv in gammas:
        try:
            op = (operator if operator is not None and operator.gamma == gv
                  else FrozenLinearOperator(grid, params, gamma=gv))
            sols[gv], reports[gv] = newton_solve(gv, params, data, grid,
                                                 tol=tol, max_iter=max_iter,
                                                 operator=op)
        except RuntimeError as exc:
            sols[gv] = None
            reports[gv] = exc
    zero_key = next(gv for gv in gammas if gv == 0)
    base = sols[zero_key]
    rows = []
    r = params.sobolev.r
    for gv in sorted(gammas, key=abs):
        if sols[gv] is None:
            rows.append({"gamma": gv, "diff_norm": np.nan, "gammaR1": np.nan,
                         "iterations": 0, "converged": False,
                         "error": str(reports[gv])})
            continue
        eta = sols[gv].eta(gv)
        gr1 = _gammaR1_norm(eta, gv, r)
        diff = (solution_norm_X(sols[gv], base, gv, 0.0, params)
                if base is not None else np.nan)
        rows.append({"gamma": gv, "diff_norm": diff, "gammaR1": gr1,
                     "iterations": reports[gv].iterations, "converged": True})
    return rows, sols


def _gammaR1_norm(eta: SurfaceField, gamma, r):
    """||gamma R_1 eta||_{L^r} with the Riesz symbol i xi_1/|xi|."""
    g = eta.grid
    ax = g.xi_abs
    m = np.zeros((g.Nx, g.Nx), complex)
    nz = ax > 0
    m[nz] = gamma * 1j * g.xi1[nz] / ax[nz]
    f = SurfaceField(g, eta.coeffs * m[None])
    return norm_bessel(f, 0.0, r)


# ---------------------------------------------------------------------------
# transfer to the physical (Eulerian) domain


def _eval_bulk_at(f: BulkField, x, y, chunk=512):
    """Evaluate a spectral bulk field at arbitrary points (x: (n,2), y: (n,))
    by mode summation and barycentric vertical interpolation."""
    g = f.grid
    n = len(y)
    ncomp = f.ncomp
    out = np.zeros((ncomp, n), complex)
    yn = g.y
    # barycentric weights of the CGL nodes
    wbar = np.ones(g.Ny)
    wbar[0] = 0.5
    wbar[-1] = 0.5
    wbar *= (-1.0) ** np.arange(g.Ny)
    for lo in range(0, n, chunk):
        sl = slice(lo, min(lo + chunk, n))
        xs = x[sl]
        ys = y[sl]
        ph = np.exp(TWO_PI * 1j * (xs[:, 0:1, None] * g.xi1[None]
                                   + xs[:, 1:2, None] * g.xi2[None]))
        diff = ys[:, None] - yn[None, :]
        exact = np.abs(diff) < 1e-13
        wb = wbar[None, :] / np.where(exact, 1.0, diff)
        bary = wb / wb.sum(axis=1)[:, None]
        hit = exact.any(axis=1)
        bary[hit] = exact[hit].astype(float)
        for c in range(ncomp):
            prof = np.einsum("pj,xyj->pxy", bary, f.coeffs[c])
            out[c, sl] = (prof * ph).sum(axis=(1, 2))
    return out


def _interp_columns(phys, bary):
    """Barycentric vertical interpolation of collocation columns.

    phys: (..., Nx, Nx, Ny) physical samples; bary: (Nx, Nx, n_v, Ny)
    weights; returns (..., Nx, Nx, n_v)."""
    return np.einsum("...xym,xykm->...xyk", phys, bary)


def _bary_weights(y_nodes, y_query):
    """CGL barycentric weights for query points, shape (..., Ny); exact at
    the nodes (one-hot rows)."""
    ny = len(y_nodes)
    wbar = np.ones(ny)
    wbar[0] = 0.5
    wbar[-1] = 0.5
    wbar *= (-1.0) ** np.arange(ny)
    diff = y_query[..., None] - y_nodes
    exact = np.abs(diff) < 1e-14
    wb = wbar / np.where(exact, 1.0, diff)
    bary = wb / wb.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    bary[hit] = exact[hit].astype(float)
    return bary


def eulerian_transfer(state: WaveState, gamma: float, params: Params,
                      data: StressForce, n_v: int = 20, oversample: int = 2):
    """Sample (q, v) = (p, M^{-1} u) o inverse flattening on a probe cloud
    inside the physical fluid domain and evaluate the residual of the
    traveling Eulerian momentum equation there by fourth-order finite
    differences; also checks the kinematic condition at surface probes.

    The probes sit on the collocation x-grid times uniform z-levels, so the
    flattening inversion and the field evaluation reduce to vertical
    interpolation of collocation columns (exact for the polynomial vertical
    representation).  Returns a dict with the probe arrays and the residual
    and kinematic reports (max values normalized by the local term scale).
    """
    if n_v < 12:
        raise ValueError("n_v must be >= 12 (two nested fourth-order vertical "
                         "stencils consume eight margin levels)")
    g = state.p.grid
    eta = state.eta(gamma)
    pack = geometry_pack(eta)
    u_pad, p_pad, w_pad, w_field, dw_pad, DwA = _state_pads(state.p, state.u, pack)

    from .geometry import extend, extend_derivative

    def upsample(coeffs, os=2):
        """Exact spectral refinement of the horizontal sampling."""
        M = os * g.Nx
        h = g.Nx // 2
        shape = coeffs.shape[:-3] + (M, M) + coeffs.shape[-1:] \
            if coeffs.ndim >= 3 and coeffs.shape[-1] == g.Ny else \
            coeffs.shape[:-2] + (M, M)
        big = np.zeros(shape, complex)
        if shape[-1] == M:      # surface field
            big[..., :h, :h] = coeffs[..., :h, :h]
            big[..., :h, -h:] = coeffs[..., :h, -h:]
            big[..., -h:, :h] = coeffs[..., -h:, :h]
            big[..., -h:, -h:] = coeffs[..., -h:, -h:]
            return (np.fft.ifft2(big, axes=(-2, -1)) * M ** 2).real
        big[..., :h, :h, :] = coeffs[..., :h, :h, :]
        big[..., :h, -h:, :] = coeffs[..., :h, -h:, :]
        big[..., -h:, :h, :] = coeffs[..., -h:, :h, :]
        big[..., -h:, -h:, :] = coeffs[..., -h:, -h:, :]
        return (np.fft.ifft2(big, axes=(-3, -2)) * M ** 2).real

    os = oversample
    ext_phys = upsample(extend(eta).coeffs[0], os)
    dext_phys = upsample(extend_derivative(eta).coeffs[0], os)
    w_phys = upsample(w_field.coeffs, os)
    p_phys = upsample(state.p.coeffs[0], os)
    eta_vals = upsample(eta.coeffs[0], os)

    eta_min = float(eta_vals.min())
    n_h = os * g.Nx
    z_lo = 0.12 * g.b
    z_hi = (g.b + eta_min) * 0.88
    xs = np.arange(n_h) * (g.L / n_h)
    zs = np.linspace(z_lo, z_hi, n_v)
    X1, X2, Z = np.meshgrid(xs, xs, zs, indexing="ij")

    # invert y + E eta(x, y) = z columnwise (monotone vertical map)
    y = np.clip(Z.copy(), 0.0, g.b)
    for _ in range(60):
        bary = _bary_weights(g.y, y)
        e = _interp_columns(ext_phys, bary)
        de = _interp_columns(dext_phys, bary)
        res_y = y + e - Z
        if np.abs(res_y).max() <= 1e-13 * g.b:
            break
        y = np.clip(y - res_y / (1.0 + de), 0.0, g.b)

    bary = _bary_weights(g.y, y)
    q = _interp_columns(p_phys, bary)
    v = _interp_columns(w_phys, bary)
    pts = np.column_stack([X1.ravel(), X2.ravel(), Z.ravel()])

    hx = g.L / n_h
    hz = zs[1] - zs[0]

    def dx(a, ax):
        # fourth-order central, periodic in the horizontal directions
        return (-np.roll(a, -2, ax) + 8 * np.roll(a, -1, ax)
                - 8 * np.roll(a, 1, ax) + np.roll(a, 2, ax)) / (12 * hx)

    def d2x(a, ax):
        return (-np.roll(a, -2, ax) + 16 * np.roll(a, -1, ax) - 30 * a
                + 16 * np.roll(a, 1, ax) - np.roll(a, 2, ax)) / (12 * hx ** 2)

    def dz(a):
        out = np.full_like(a, np.nan)
        out[..., 2:-2] = (-a[..., 4:] + 8 * a[..., 3:-1]
                          - 8 * a[..., 1:-3] + a[..., :-4]) / (12 * hz)
        return out

    def d2z(a):
        out = np.full_like(a, np.nan)
        out[..., 2:-2] = (-a[..., 4:] + 16 * a[..., 3:-1] - 30 * a[..., 2:-2]
                          + 16 * a[..., 1:-3] - a[..., :-4]) / (12 * hz ** 2)
        return out

    grad = lambda a: np.stack([dx(a, 0), dx(a, 1), dz(a)])
    lap = lambda a: d2x(a, 0) + d2x(a, 1) + d2z(a)

    dv = np.stack([grad(v[i]) for i in range(3)])    # dv[i, j] = d_j v_i
    divv = dv[0, 0] + dv[1, 1] + dv[2, 2]
    ddiv = grad(divv)
    gq = grad(q)
    eta_x = np.broadcast_to(eta_vals[:, :, None], (n_h, n_h, n_v))
    geta = np.stack([dx(eta_x, 0), dx(eta_x, 1), np.zeros_like(eta_x)])

    Fp = np.stack([np.asarray(data.F[i](X1, X2, Z), dtype=float) for i in range(3)])
    res = np.empty((3, n_h, n_h, n_v))
    scale = 0.0
    for i in range(3):
        conv = ((v[0] - gamma) * dv[i, 0] + v[1] * dv[i, 1] + v[2] * dv[i, 2])
        visc = params.viscosity * (lap(v[i]) + ddiv[i])
        res[i] = conv + gq[i] + params.gravity * geta[i] - visc - Fp[i]
        scale = max(scale, np.nanmax(np.abs(gq[i])), np.nanmax(np.abs(visc)),
                    np.nanmax(np.abs(Fp[i])))
    # two nested vertical stencils consume four margin levels
    interior = res[:, :, :, 4:-4]
    max_residual = float(np.abs(interior).max() / max(scale, 1e-300))

    # kinematic check at the free surface (collocation top plane, exact trace)
    w_top_field = unpad_transform(g, w_pad[..., -1])
    wt = w_top_field.values_real()
    e1 = surface_gradient(eta).values_real()
    kin = gamma * _d1_eta_vals(eta) + (-wt[0] * e1[0] - wt[1] * e1[1] + wt[2])
    kin_scale = max(np.abs(wt).max(), abs(gamma) * max(np.abs(e1).max(), 1e-300), 1e-300)
    max_kinematic = float(np.abs(kin).max() / kin_scale)

    return {
        "points": pts, "y": y.ravel(), "q": q, "v": v,
        "max_residual": max_residual, "max_kinematic": max_kinematic,
    }


def _d1_eta_vals(eta: SurfaceField):
    g = eta.grid
    c = eta.coeffs[0] * (TWO_PI * 1j * g.xi1)
    return (np.fft.ifft2(c) * g.Nx ** 2).real
