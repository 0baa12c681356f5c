"""Per-frequency realization of the linear theory.

For each horizontal frequency xi the curl-formulated linearized system
reduces to a boundary-value problem in the vertical variable for
(p, u, chi):

    g*(chi, 0) + grad p - mu div(Du)      = f      in (0, b)
    div u                                 = g_div  in (0, b)
    -(p I - mu Du) e3 - kappa (div chi) e3 = k     at y = b
    curl_par chi                          = omega  (scalar)
    u . e3                                = h      at y = b
    u                                     = 0      at y = 0

with grad = (2 pi i xi_1, 2 pi i xi_2, d/dy).  It is discretized by
Chebyshev collocation with boundary bordering: the y=0 and y=b momentum
rows are replaced by the no-slip and dynamic conditions, the divergence
rows keep all collocation points, and the curl/kinematic conditions are
appended, giving a square (4 Ny + 2) system.

At the zero frequency the continuous problem determines chi only modulo
constants and couples u3 to the compatibility h = int_0^b g_div; the
assembly pins chi = 0, keeps the third momentum row at y = 0 (which
restores the pressure count), and trades the two endpoint divergence rows
for the endpoint conditions on u3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.linalg as sla

from .grid import TWO_PI, _cheb_nodes_and_matrix, _clenshaw_curtis_weights

__all__ = [
    "FrequencyData", "FrequencySolution", "SymbolData", "SymbolBlock",
    "VerticalOperator", "solve_frequency", "translated_solve",
    "symbol_matrix", "symbol_derivative", "mh_scan", "ScanReport",
    "fd_oracle_solve",
]


@dataclass(frozen=True)
class FrequencyData:
    """Data tuple (g, f, k, h, omega) of the per-frequency problem.

    g_hat: divergence datum, complex profile of length Ny.
    f_hat: bulk force, complex (3, Ny).
    k_hat: stress datum at the top, complex (3,).
    h_hat: kinematic datum, complex scalar.
    omega_hat: curl datum, complex scalar.
    """

    g_hat: np.ndarray
    f_hat: np.ndarray
    k_hat: np.ndarray
    h_hat: complex
    omega_hat: complex

    @staticmethod
    def zero(ny):
        return FrequencyData(np.zeros(ny, complex), np.zeros((3, ny), complex),
                             np.zeros(3, complex), 0.0j, 0.0j)

    def scale(self):
        return max(np.abs(self.g_hat).max(), np.abs(self.f_hat).max(),
                   np.abs(self.k_hat).max(), abs(self.h_hat), abs(self.omega_hat))


@dataclass(frozen=True)
class SymbolData:
    """Data (f, k, H) of the reduced solution map Psi(f, k, H) =
    Phi(0, f, k, div_par H, 0); H is the 2-vector whose tangential
    divergence supplies the kinematic datum."""

    f_hat: np.ndarray
    k_hat: np.ndarray
    H_hat: np.ndarray

    def to_frequency_data(self, xi, ny):
        h = TWO_PI * 1j * (xi[0] * self.H_hat[0] + xi[1] * self.H_hat[1])
        return FrequencyData(np.zeros(ny, complex), self.f_hat, self.k_hat, h, 0.0j)


@dataclass(frozen=True)
class FrequencySolution:
    p_hat: np.ndarray        # (Ny,)
    u_hat: np.ndarray        # (3, Ny)
    chi_hat: np.ndarray      # (2,)
    eta_hat: complex | None  # (xi . chi)/(2 pi i |xi|^2), None at xi = 0

    def stack(self):
        return np.concatenate([self.p_hat, self.u_hat.ravel(), self.chi_hat])

    def norm(self):
        return float(np.linalg.norm(self.stack()))


def _eta_from_chi(xi, chi):
    n2 = xi[0] ** 2 + xi[1] ** 2
    if n2 == 0:
        return None
    return (xi[0] * chi[0] + xi[1] * chi[1]) / (TWO_PI * 1j * n2)


def _pgamma_value(xi, gamma):
    n2 = xi[0] ** 2 + xi[1] ** 2
    if n2 == 0:
        return 1.0 + 0.0j
    num = 4.0 * np.pi ** 2 * n2
    return num / (num + TWO_PI * 1j * gamma * xi[0])


class VerticalOperator:
    """Dense boundary-bordered collocation operator at one frequency.

    Holds the LU factorization so that the many right-hand sides of the
    symbol machinery (canonical columns, derivative recursions) reuse one
    factorization.  ``zeta`` builds the translated operator realizing
    m(. + zeta) rows; ``formulation`` selects the curl unknowns (p, u, chi)
    or the direct surface unknown (p, u, eta).
    """

    def __init__(self, xi, params, ny, b, zeta=(0.0, 0.0), formulation="curl",
                 gamma=0.0, _raw_eta_column=False):
        self.xi = (float(xi[0]), float(xi[1]))
        self.zeta = (float(zeta[0]), float(zeta[1]))
        self.ny = int(ny)
        self.b = float(b)
        self.params = params
        self.formulation = formulation
        self.gamma = float(gamma)
        self._raw_eta_column = _raw_eta_column
        self.y, self.D = _cheb_nodes_and_matrix(self.ny, self.b)
        self.D2 = self.D @ self.D
        self.wy = _clenshaw_curtis_weights(self.ny, self.b)
        self.is_zero = (self.xi[0] + self.zeta[0] == 0.0) and (self.xi[1] + self.zeta[1] == 0.0)
        self.A = self._assemble()
        self.lu = sla.lu_factor(self.A)

    # -- assembly ----------------------------------------------------------
    def _assemble(self):
        ny = self.ny
        gg, mu, ka = self.params.gravity, self.params.viscosity, self.params.surface_tension
        D, D2, I = self.D, self.D2, np.eye(ny)
        xi = self.xi
        ze = self.zeta
        d = (TWO_PI * 1j * xi[0], TWO_PI * 1j * xi[1])
        dz = (TWO_PI * 1j * ze[0], TWO_PI * 1j * ze[1])
        nsurf = 2 if self.formulation == "curl" else 1
        n = 4 * ny + nsurf
        A = np.zeros((n, n), complex)
        sp = slice(0, ny)
        su = [slice((1 + i) * ny, (2 + i) * ny) for i in range(3)]
        ic = 4 * ny

        xin2 = xi[0] ** 2 + xi[1] ** 2
        lap = D2 - TWO_PI ** 2 * xin2 * I
        zeta2 = ze[0] ** 2 + ze[1] ** 2
        zdotxi = ze[0] * xi[0] + ze[1] * xi[1]
        # translated corrections acting on each velocity component:
        #   - mu 4 pi i zeta.grad u + mu 4 pi^2 |zeta|^2 u
        #     = (8 pi^2 mu zeta.xi + 4 pi^2 mu |zeta|^2) u
        visc0 = 4.0 * np.pi ** 2 * mu * (2.0 * zdotxi + zeta2)

        grad = [lambda q, a=d[0] + dz[0]: a * q, lambda q, a=d[1] + dz[1]: a * q, None]
        # momentum rows
        for i in range(3):
            r = slice(i * ny, (i + 1) * ny)
            # pressure gradient (+ 2 pi i zeta_i p for the translated rows)
            if i < 2:
                A[r, sp] += (d[i] + dz[i]) * I
            else:
                A[r, sp] += D
            # -mu (lap + grad_i div) u  with div u = d1 u1 + d2 u2 + D u3
            A[r, su[i]] += -mu * lap + visc0 * I
            divcols = (d[0] * I, d[1] * I, D)
            for j in range(3):
                if i < 2:
                    A[r, su[j]] += -mu * d[i] * divcols[j]
                else:
                    A[r, su[j]] += -mu * (D @ divcols[j])
            # -mu 2 pi i grad(zeta . u), with the PLAIN gradient: the
            # remaining second-order zeta terms are absorbed by the
            # translated divergence constraint and do not appear.
            for j in range(2):
                if i < 2:
                    A[r, su[j]] += -mu * d[i] * dz[j] * I
                else:
                    A[r, su[j]] += -mu * dz[j] * D
            # frozen transport at the solve's wave speed: -gamma d1 u_i
            if self.gamma != 0.0:
                A[r, su[i]] += -self.gamma * d[0] * I
            # gravity through the surface unknown
            if i < 2:
                if self.formulation == "curl":
                    A[r, ic + i] += gg
                else:
                    A[r, ic] += gg * (d[i] + dz[i])
        # bordering
        for i in range(3):
            r0 = i * ny
            rb = i * ny + ny - 1
            A[r0, :] = 0.0
            A[r0, su[i].start] = 1.0
            A[rb, :] = 0.0
            if i < 2:
                # mu (u_i' + (d_i + dz_i) u3) = k_i  at y=b
                A[rb, su[i]] = mu * D[ny - 1, :]
                A[rb, su[2].start + ny - 1] = mu * (d[i] + dz[i])
            else:
                A[rb, sp.start + ny - 1] = -1.0
                A[rb, su[2]] = 2.0 * mu * D[ny - 1, :]
                if self.formulation == "curl":
                    A[rb, ic] = -ka * (d[0] + dz[0])
                    A[rb, ic + 1] = -ka * (d[1] + dz[1])
                else:
                    # -kappa Lap_par eta with the translated pattern
                    xt = (xi[0] + ze[0], xi[1] + ze[1])
                    A[rb, ic] = ka * TWO_PI ** 2 * (xt[0] ** 2 + xt[1] ** 2)
        if self.is_zero:
            # restore the pressure count: keep the third momentum row at y=0
            r0 = 2 * ny
            A[r0, :] = 0.0
            A[r0, sp] = D[0, :]
            A[r0, su[2]] = -2.0 * mu * D2[0, :]
        # divergence rows (translated: + 2 pi i zeta . u)
        rdiv = slice(3 * ny, 4 * ny)
        A[rdiv, su[0]] = (d[0] + dz[0]) * I
        A[rdiv, su[1]] = (d[1] + dz[1]) * I
        A[rdiv, su[2]] = D
        if self.is_zero:
            A[3 * ny, :] = 0.0
            A[3 * ny, su[2].start] = 1.0            # u3(0) = 0
            A[4 * ny - 1, :] = 0.0
            A[4 * ny - 1, su[2].start + ny - 1] = 1.0  # u3(b) = h
        # appended rows
        if self.formulation == "curl":
            if self.is_zero:
                A[ic, ic] = 1.0
                A[ic + 1, ic + 1] = 1.0
            else:
                xt = (xi[0] + ze[0], xi[1] + ze[1])
                A[ic, ic] = -TWO_PI * 1j * xt[1]
                A[ic, ic + 1] = TWO_PI * 1j * xt[0]
                A[ic + 1, su[2].start + ny - 1] = 1.0
        else:
            if self.is_zero:
                A[ic, ic] = 1.0
            else:
                A[ic, su[2].start + ny - 1] = 1.0
        if (self.formulation == "eta" and self.gamma != 0.0
                and not self._raw_eta_column and not self.is_zero):
            # frozen derivative in the P_gamma-parameterized surface unknown:
            # the eta column acts through eta = p_gamma(xi) ups, and the
            # kinematic row carries gamma d1 P_gamma ups
            pg = _pgamma_value(xi, self.gamma)
            A[:, ic] *= pg
            A[ic, ic] = self.gamma * d[0] * pg
        return A

    def _rhs(self, data: FrequencyData):
        ny = self.ny
        nsurf = 2 if self.formulation == "curl" else 1
        bvec = np.zeros(4 * ny + nsurf, complex)
        for i in range(3):
            bvec[i * ny:(i + 1) * ny] = data.f_hat[i]
            bvec[i * ny] = 0.0
            bvec[i * ny + ny - 1] = data.k_hat[i]
        if self.is_zero:
            bvec[2 * ny] = data.f_hat[2][0]
        bvec[3 * ny:4 * ny] = data.g_hat
        if self.is_zero:
            bvec[3 * ny] = 0.0
            bvec[4 * ny - 1] = data.h_hat
            bvec[4 * ny:] = 0.0
        elif self.formulation == "curl":
            bvec[4 * ny] = data.omega_hat
            bvec[4 * ny + 1] = data.h_hat
        else:
            bvec[4 * ny] = data.h_hat
        return bvec

    def solve(self, data: FrequencyData) -> FrequencySolution:
        if self.is_zero:
            self._check_zero_compat(data)
        return self._unpack(self.solve_many(self._rhs(data)))

    def solve_many(self, rhs_matrix):
        """LU-solve for a vector or (n, m) block of right-hand sides, with
        one step of iterative refinement to shed the collocation-matrix
        conditioning."""
        x = sla.lu_solve(self.lu, rhs_matrix)
        x += sla.lu_solve(self.lu, rhs_matrix - self.A @ x)
        return x

    def _unpack(self, x):
        ny = self.ny
        p = x[:ny]
        u = x[ny:4 * ny].reshape(3, ny)
        xt = (self.xi[0] + self.zeta[0], self.xi[1] + self.zeta[1])
        if self.formulation == "curl":
            chi = x[4 * ny:4 * ny + 2]
            eta = _eta_from_chi(xt, chi)
        else:
            eta = complex(x[4 * ny])
            chi = TWO_PI * 1j * np.array(xt) * eta
        return FrequencySolution(p, u, chi, eta)

    def _check_zero_compat(self, data, tol=1e-10):
        scale = max(data.scale(), 1e-300)
        gap = abs(data.h_hat - self.wy @ data.g_hat)
        if gap > tol * scale * max(1.0, self.b):
            raise ValueError(
                f"zero-frequency compatibility violated: |h - int g| = {gap:.3e}")
        if abs(data.omega_hat) > tol * scale:
            raise ValueError("zero-frequency curl datum must vanish")

    def residual(self, data: FrequencyData, sol: FrequencySolution):
        """Relative discrete residual of the bordered system."""
        x = np.concatenate([sol.p_hat, sol.u_hat.ravel(),
                            sol.chi_hat if self.formulation == "curl"
                            else np.array([0.0 if sol.eta_hat is None else sol.eta_hat])])
        r = self.A @ x - self._rhs(data)
        scale = max(np.abs(self.A).max() * max(np.abs(x).max(), 1e-300),
                    np.abs(self._rhs(data)).max(), 1e-300)
        return float(np.abs(r).max() / scale)


def solve_frequency(xi, params, data: FrequencyData, ny=None, b=None,
                    formulation="curl") -> FrequencySolution:
    """Solve the per-frequency boundary value problem by dense LU on the
    boundary-bordered collocation system."""
    ny = ny if ny is not None else len(data.g_hat)
    b = b if b is not None else params.depth
    op = VerticalOperator(xi, params, ny, b, formulation=formulation)
    return op.solve(data)


def translated_solve(xi, zeta, params, data: SymbolData, ny, b=None) -> FrequencySolution:
    """Realize m(D + zeta) at frequency xi: the operator rows carry the
    translated pattern (all gradients shifted by 2 pi i zeta) and the
    kinematic datum becomes 2 pi i (xi + zeta) . H.  The output equals the
    plain solve at xi + zeta."""
    b = b if b is not None else params.depth
    op = VerticalOperator(xi, params, ny, b, zeta=zeta)
    xt = (xi[0] + zeta[0], xi[1] + zeta[1])
    fd = data.to_frequency_data(xt, ny)
    return op.solve(fd)


# ---------------------------------------------------------------------------
# symbol assembly and the derivative recursion


@dataclass(frozen=True)
class SymbolBlock:
    """Dense matrix realization of the operator-valued symbol m(xi).

    Maps stacked data [f (3 Ny nodal values); k (3); H (2)] to the stacked
    solution [p (Ny); u (3 Ny); chi (2)].  The nine blocks of the admissible
    class are slices of ``matrix``.
    """

    xi: tuple
    s: int
    ny: int
    matrix: np.ndarray  # (4 Ny + 2, 3 Ny + 5)

    def blocks(self):
        ny = self.ny
        nf = 3 * ny
        rows = {"1": slice(0, ny), "2": slice(ny, 4 * ny), "3": slice(4 * ny, 4 * ny + 2)}
        cols = {"1": slice(0, nf), "2": slice(nf, nf + 3), "3": slice(nf + 3, nf + 5)}
        return {f"m{i}{j}": self.matrix[rows[i], cols[j]]
                for i in "123" for j in "123"}

    def apply(self, data: SymbolData) -> FrequencySolution:
        vec = np.concatenate([data.f_hat.ravel(), data.k_hat, data.H_hat])
        out = self.matrix @ vec
        ny = self.ny
        chi = out[4 * ny:]
        return FrequencySolution(out[:ny], out[ny:4 * ny].reshape(3, ny), chi,
                                 _eta_from_chi(self.xi, chi))


def _canonical_rhs_columns(op: VerticalOperator):
    """Right-hand sides for the canonical basis data: vertical delta
    profiles for f (collocation unit vectors), unit k, unit H."""
    ny = op.ny
    cols = []
    for i in range(3):
        for j in range(ny):
            d = FrequencyData.zero(ny)
            f = np.zeros((3, ny), complex)
            f[i, j] = 1.0
            cols.append(op._rhs(FrequencyData(d.g_hat, f, d.k_hat, 0.0j, 0.0j)))
    for i in range(3):
        k = np.zeros(3, complex)
        k[i] = 1.0
        cols.append(op._rhs(FrequencyData(np.zeros(ny, complex),
                                          np.zeros((3, ny), complex), k, 0.0j, 0.0j)))
    xt = (op.xi[0] + op.zeta[0], op.xi[1] + op.zeta[1])
    for i in range(2):
        H = np.zeros(2, complex)
        H[i] = 1.0
        h = TWO_PI * 1j * (xt[0] * H[0] + xt[1] * H[1])
        cols.append(op._rhs(FrequencyData(np.zeros(ny, complex),
                                          np.zeros((3, ny), complex),
                                          np.zeros(3, complex), h, 0.0j)))
    return np.stack(cols, axis=1)


def symbol_matrix(xi, params, s, ny, b=None) -> SymbolBlock:
    """Assemble m(xi) column-by-column from canonical basis data."""
    b = b if b is not None else params.depth
    op = VerticalOperator(xi, params, ny, b)
    X = op.solve_many(_canonical_rhs_columns(op))
    return SymbolBlock(xi=tuple(xi), s=int(s), ny=ny, matrix=X)


def _derivative_data(zeta, p, u, chi, H, params, D, xi, include_h=True):
    """One level of the derivative recursion: the data tuple fed to the
    solver, built from the previous level's (p, u, chi) and direction zeta.

    Matches the iterative construction with
      g     = -2 pi i zeta . u
      f     = -2 pi i zeta p + mu 2 pi i grad(zeta . u) + mu 4 pi i zeta.grad u
      k     = kappa 2 pi i (zeta . chi) e3 - mu 2 pi i zeta (u . e3)|_b
      h     = 2 pi i zeta . H        (only at the first level)
      omega = -2 pi i zeta^perp . chi
    All horizontal derivatives act at the fixed base frequency xi.
    """
    mu, ka = params.viscosity, params.surface_tension
    d = (TWO_PI * 1j * xi[0], TWO_PI * 1j * xi[1])
    zu = zeta[0] * u[0] + zeta[1] * u[1]
    g = -TWO_PI * 1j * zu
    f = np.zeros_like(u)
    # -2 pi i zeta p (zeta in C^2 x {0})
    f[0] += -TWO_PI * 1j * zeta[0] * p
    f[1] += -TWO_PI * 1j * zeta[1] * p
    # + mu 2 pi i grad(zeta . u)
    f[0] += mu * TWO_PI * 1j * d[0] * zu
    f[1] += mu * TWO_PI * 1j * d[1] * zu
    f[2] += mu * TWO_PI * 1j * (D @ zu)
    # + mu 4 pi i zeta . grad u  (tangential: zeta.grad -> 2 pi i zeta.xi)
    zdotxi = zeta[0] * xi[0] + zeta[1] * xi[1]
    f += mu * 4.0 * np.pi * 1j * (TWO_PI * 1j * zdotxi) * u
    k = np.zeros(3, complex)
    k[2] = ka * TWO_PI * 1j * (zeta[0] * chi[0] + zeta[1] * chi[1])
    k[0] = -mu * TWO_PI * 1j * zeta[0] * u[2][-1]
    k[1] = -mu * TWO_PI * 1j * zeta[1] * u[2][-1]
    h = TWO_PI * 1j * (zeta[0] * H[0] + zeta[1] * H[1]) if include_h else 0.0j
    om = -TWO_PI * 1j * (-zeta[1] * chi[0] + zeta[0] * chi[1])
    return FrequencyData(g, f, k, h, om)


def symbol_derivative(xi, params, directions, base_data: SymbolData,
                      ny, b=None) -> FrequencySolution:
    """The j-th symbol derivative applied to base data, j = len(directions),
    via the literal recursion: every level is a solve at the SAME xi with
    right-hand sides assembled from the previous level, symmetrized over the
    direction orderings; the Laplacian-type -mu 4 pi^2 (zeta_a . zeta_b) u
    corrections enter for j >= 2.  Supports j <= 3."""
    j = len(directions)
    if j < 1 or j > 3:
        raise ValueError("derivative order must be 1, 2, or 3")
    if xi[0] == 0 and xi[1] == 0:
        raise ValueError("symbol derivative requires xi != 0")
    b = b if b is not None else params.depth
    op = VerticalOperator(xi, params, ny, b)
    xi = (float(xi[0]), float(xi[1]))

    base = op.solve(base_data.to_frequency_data(xi, ny))
    solve = op.solve

    def level1(z):
        d = _derivative_data(z, base.p_hat, base.u_hat, base.chi_hat,
                             base_data.H_hat, params, op.D, xi, include_h=True)
        return solve(d)

    if j == 1:
        return level1(directions[0])

    mu = params.viscosity
    zeroH = np.zeros(2, complex)

    def level2_term(za, prev_zb, zz):
        """One S_2 term: Phi of the level-1 data built at za from prev,
        with the -mu 4 pi^2 (za . zb) u correction on the base velocity."""
        d = _derivative_data(za, prev_zb.p_hat, prev_zb.u_hat, prev_zb.chi_hat,
                             zeroH, params, op.D, xi, include_h=False)
        f = d.f_hat - mu * 4.0 * np.pi ** 2 * zz * base.u_hat
        return solve(FrequencyData(d.g_hat, f, d.k_hat, d.h_hat, d.omega_hat))

    if j == 2:
        out = None
        for sig in permutations(range(2)):
            za, zb = directions[sig[0]], directions[sig[1]]
            zz = za[0] * zb[0] + za[1] * zb[1]
            term = level2_term(za, level1(zb), zz)
            out = term if out is None else _add(out, term, xi)
        return out

    # j == 3
    level1_cache = {i: level1(z) for i, z in enumerate(directions)}
    level2_cache = {}
    for a in range(3):
        for c in range(3):
            if a == c:
                continue
            za, zc = directions[a], directions[c]
            zz = za[0] * zc[0] + za[1] * zc[1]
            level2_cache[(a, c)] = level2_term(za, level1_cache[c], zz)
    out = None
    for sig in permutations(range(3)):
        a, c, e = sig
        # the full symmetric level-2 object at [zeta_c, zeta_e]
        prev = _add(level2_cache[(c, e)], level2_cache[(e, c)], xi)
        za = directions[a]
        d = _derivative_data(za, prev.p_hat, prev.u_hat, prev.chi_hat,
                             zeroH, params, op.D, xi, include_h=False)
        t1 = solve(d)
        out = t1 if out is None else _add(out, t1, xi)
    out = _scale(out, 1.0 / 2.0, xi)  # 1/(j-1)!
    for sig in permutations(range(3)):
        a, c, e = sig
        za, zc = directions[a], directions[c]
        zz = za[0] * zc[0] + za[1] * zc[1]
        prev = level1_cache[e]
        f = -mu * 4.0 * np.pi ** 2 * zz * prev.u_hat
        t2 = solve(FrequencyData(np.zeros(ny, complex), f, np.zeros(3, complex), 0.0j, 0.0j))
        out = _add(out, t2, xi)
    return out


def _add(a: FrequencySolution, b: FrequencySolution, xi):
    chi = a.chi_hat + b.chi_hat
    return FrequencySolution(a.p_hat + b.p_hat, a.u_hat + b.u_hat, chi,
                             _eta_from_chi(xi, chi))


def _scale(a: FrequencySolution, c, xi):
    chi = c * a.chi_hat
    return FrequencySolution(c * a.p_hat, c * a.u_hat, chi, _eta_from_chi(xi, chi))


# ---------------------------------------------------------------------------
# remainder terms of the symbol Taylor expansion


def symbol_remainder(xi, zeta, params, data: SymbolData, ny, order, b=None):
    """R_j(data)[zeta] = m(xi+zeta)(data) - sum_{i<=j} (1/i!) m^(i)[zeta^i](data),
    with the translated solve supplying m(xi + zeta)."""
    b = b if b is not None else params.depth
    shifted = translated_solve(xi, zeta, params, data, ny, b)
    base = solve_frequency(xi, params, data.to_frequency_data(xi, ny), ny, b)
    acc = _add(shifted, _scale(base, -1.0, xi), xi)
    fact = 1.0
    for i in range(1, order + 1):
        fact *= i
        term = symbol_derivative(xi, params, [zeta] * i, data, ny, b)
        acc = _add(acc, _scale(term, -1.0 / fact, xi), xi)
    return acc


# ---------------------------------------------------------------------------
# Mikhlin-Hormander bound scan


@dataclass
class ScanReport:
    """Per-point weighted operator norms and their suprema.

    rows: list of (|xi|, angle, component, alpha, weighted value)
    sups: dict[(component, alpha)] -> supremum over the scan set
    """

    s: int
    ny: int
    rows: list = field(default_factory=list)
    sups: dict = field(default_factory=dict)

    def sup_table(self):
        return sorted(self.sups.items())


_ALPHAS = {0: [(0, 0)], 1: [(1, 0), (0, 1)], 2: [(2, 0), (1, 1), (0, 2)]}


def _cheb_basis_values(ny, b, K):
    y, _ = _cheb_nodes_and_matrix(ny, b)
    x = np.clip(1.0 - 2.0 * y / b, -1.0, 1.0)
    return np.cos(np.arange(K)[None, :] * np.arccos(x)[:, None])


def _vertical_grams(ny, b, kmax):
    """H^k Gram matrices on nodal values, k = 0..kmax, via Clenshaw-Curtis
    weights and nodal differentiation (adequate for the low orders used in
    the scan; the smooth input basis keeps the quadrature honest)."""
    y, D = _cheb_nodes_and_matrix(ny, b)
    W = np.diag(_clenshaw_curtis_weights(ny, b))
    grams = [W]
    M = np.eye(ny)
    for k in range(1, kmax + 1):
        M = D @ M
        grams.append(grams[-1] + M.T @ W @ M)
    return grams


def _block_diag(G, m):
    r0, c0 = G.shape
    Z = np.zeros((m * r0, m * c0), dtype=G.dtype)
    for i in range(m):
        Z[i * r0:(i + 1) * r0, i * c0:(i + 1) * c0] = G
    return Z


def _sqrt_and_invsqrt(G):
    w, v = np.linalg.eigh(0.5 * (G + G.conj().T))
    w = np.maximum(w, 1e-300)
    half = v @ np.diag(np.sqrt(w)) @ v.conj().T
    inv = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    return half, inv


def _weighted_norms(matrix, xi, s, ny, b, K, grams):
    """The nine admissible-class weighted operator norms of one symbol
    matrix; f inputs run over the first K Chebyshev vertical modes."""
    T = _cheb_basis_values(ny, b, K)
    br = np.sqrt(1.0 + xi[0] ** 2 + xi[1] ** 2)
    G_in1 = grams[s] + br ** (2 * s) * grams[0]
    GinK = T.T @ G_in1 @ T
    Gin_h, Gin_hi = _sqrt_and_invsqrt(_block_diag(GinK, 3))
    Gp, _ = _sqrt_and_invsqrt(grams[1 + s] + br ** (2 * (1 + s)) * grams[0])
    Gu, _ = _sqrt_and_invsqrt(_block_diag(grams[2 + s] + br ** (2 * (2 + s)) * grams[0], 3))
    nf = 3 * ny
    P = matrix[:ny]
    U = matrix[ny:4 * ny]
    C = matrix[4 * ny:]
    TB = _block_diag(T, 3)
    sv = lambda M: float(np.linalg.svd(M, compute_uv=False)[0]) if M.size else 0.0
    out = {}
    out["m11"] = sv(Gp @ P[:, :nf] @ TB @ Gin_hi)
    out["m12"] = sv(Gp @ P[:, nf:nf + 3]) / br ** (0.5 + s)
    out["m13"] = sv(Gp @ P[:, nf + 3:]) / br ** (2.5 + s)
    out["m21"] = sv(Gu @ U[:, :nf] @ TB @ Gin_hi)
    out["m22"] = sv(Gu @ U[:, nf:nf + 3]) / br ** (0.5 + s)
    out["m23"] = sv(Gu @ U[:, nf + 3:]) / br ** (2.5 + s)
    out["m31"] = sv(C[:, :nf] @ TB @ Gin_hi) * br ** (1.5 + s)
    out["m32"] = sv(C[:, nf:nf + 3]) * br
    out["m33"] = sv(C[:, nf + 3:]) / br
    return out


def _level_matrix(op: VerticalOperator, prev_matrix, params, z, H_cols=None,
                  corr=None):
    """One recursion level applied column-wise; ``corr`` adds the
    -mu 4 pi^2 (zeta_a . zeta_b) u correction f-term (a matrix of stacked
    velocity columns scaled by the caller)."""
    ny = op.ny
    ncol = prev_matrix.shape[1]
    rhs = np.zeros((4 * ny + 2, ncol), complex)
    for c in range(ncol):
        p = prev_matrix[:ny, c]
        u = prev_matrix[ny:4 * ny, c].reshape(3, ny)
        chi = prev_matrix[4 * ny:, c]
        H = H_cols[:, c] if H_cols is not None else np.zeros(2, complex)
        d = _derivative_data(z, p, u, chi, H, params, op.D, op.xi,
                             include_h=H_cols is not None)
        f = d.f_hat + (corr[:, :, c] if corr is not None else 0.0)
        fd = FrequencyData(d.g_hat, f, d.k_hat, d.h_hat, d.omega_hat)
        rhs[:, c] = op._rhs(fd)
    return op.solve_many(rhs)


def _derivative_matrix(op: VerticalOperator, base_matrix, params, directions, H_cols):
    """Matrix of the |alpha|-th derivative map over the canonical columns,
    reusing the base factorization (all solves are at the same xi).

    |alpha| = 1 is the plain first level; |alpha| = 2 symmetrizes over the
    two orderings and includes the base-velocity correction term.
    """
    ny = op.ny
    if len(directions) == 1:
        return _level_matrix(op, base_matrix, params, directions[0], H_cols)
    za, zb = directions
    mu = params.viscosity
    ncol = base_matrix.shape[1]
    base_u = base_matrix[ny:4 * ny].reshape(3, ny, ncol)
    out = None
    for (z1, z2) in ((za, zb), (zb, za)):
        lvl1 = _level_matrix(op, base_matrix, params, z2, H_cols)
        zz = z1[0] * z2[0] + z1[1] * z2[1]
        corr = -mu * 4.0 * np.pi ** 2 * zz * base_u
        term = _level_matrix(op, lvl1, params, z1, None, corr=corr)
        out = term if out is None else out + term
    return out


def mh_scan(params, s, radii, angles, alpha_max=1, ny=16, b=None, K=None) -> ScanReport:
    """Scan the weighted Mikhlin-Hormander quantities |xi|^{|alpha|} times
    the nine admissible-class norms of d^alpha m over a polar grid.

    alpha derivatives come from the coordinate-direction derivative
    recursion; mixed second derivatives are built as m^(2)[e1, e2].  f-type
    inputs are restricted to the first K smooth vertical modes so that the
    induced norms converge under vertical refinement (the full nodal sup
    grows with Ny and never converges).
    """
    if alpha_max > 2:
        raise ValueError("alpha_max <= 2")
    b = b if b is not None else params.depth
    K = K if K is not None else min(12, ny - 4)
    kmax = 2 + s
    grams = _vertical_grams(ny, b, kmax)
    report = ScanReport(s=s, ny=ny)
    e1, e2 = (1.0, 0.0), (0.0, 1.0)
    dirsets = {(0, 0): [], (1, 0): [e1], (0, 1): [e2],
               (2, 0): [e1, e1], (1, 1): [e1, e2], (0, 2): [e2, e2]}
    H_cols = np.zeros((2, 3 * ny + 5), complex)
    H_cols[0, 3 * ny + 3] = 1.0
    H_cols[1, 3 * ny + 4] = 1.0
    for rad in radii:
        for th in angles:
            xi = (rad * np.cos(th), rad * np.sin(th))
            op = VerticalOperator(xi, params, ny, b)
            base = op.solve_many(_canonical_rhs_columns(op))
            for order in range(alpha_max + 1):
                for alpha in _ALPHAS[order]:
                    if order == 0:
                        mat = base
                    else:
                        mat = _derivative_matrix(op, base, params,
                                                 dirsets[alpha], H_cols)
                    wn = _weighted_norms(mat, xi, s, ny, b, K, grams)
                    wfac = rad ** order
                    for comp, val in wn.items():
                        v = wfac * val
                        report.rows.append((rad, th, comp, alpha, v))
                        key = (comp, alpha)
                        if not np.isfinite(v):
                            report.sups[key] = np.inf
                        elif v > report.sups.get(key, 0.0):
                            report.sups[key] = v
    return report


# ---------------------------------------------------------------------------
# independent finite-difference oracle


def fd_oracle_solve(xi, params, data_fns, N, b=None, richardson=True):
    """Second-order uniform-grid finite-difference solve of the same
    per-frequency system, as an independent oracle.

    ``data_fns`` supplies (g(y), f_i(y), k, h, omega) with callables for the
    profiles.  With ``richardson`` the N, 2N-1, and 4N-3 grids are combined
    to cancel the h^2 and h^3 error terms (the one-sided closures leave an
    h^3 contribution); returned profiles live on the N-point grid.
    """
    b = b if b is not None else params.depth
    if not richardson:
        return _fd_solve_once(xi, params, data_fns, N, b)
    lvl = [_fd_solve_once(xi, params, data_fns, m, b)
           for m in (N, 2 * N - 1, 4 * N - 3)]
    out = {"y": lvl[0]["y"]}
    for key in ("p", "u1", "u2", "u3", "chi"):
        scalar = key == "chi"
        a0 = lvl[0][key]
        a1 = lvl[1][key] if scalar else lvl[1][key][::2]
        a2 = lvl[2][key] if scalar else lvl[2][key][::4]
        r1 = (4.0 * a1 - a0) / 3.0
        r2 = (4.0 * a2 - a1) / 3.0
        out[key] = (8.0 * r2 - r1) / 7.0
    return out


def _fd_rows(N, h):
    """Sparse second-order difference rows: D1[j] and D2[j] as (cols, vals),
    one-sided at the endpoints."""
    d1 = []
    d2 = []
    for j in range(N):
        if j == 0:
            d1.append(((0, 1, 2), np.array((-3.0, 4.0, -1.0)) / (2 * h)))
            d2.append(((0, 1, 2, 3), np.array((2.0, -5.0, 4.0, -1.0)) / h ** 2))
        elif j == N - 1:
            d1.append(((N - 3, N - 2, N - 1), np.array((1.0, -4.0, 3.0)) / (2 * h)))
            d2.append(((N - 4, N - 3, N - 2, N - 1),
                       np.array((-1.0, 4.0, -5.0, 2.0)) / h ** 2))
        else:
            d1.append(((j - 1, j + 1), np.array((-1.0, 1.0)) / (2 * h)))
            d2.append(((j - 1, j, j + 1), np.array((1.0, -2.0, 1.0)) / h ** 2))
    return d1, d2



def _fd_solve_once(xi, params, data_fns, N, b):
    """Sparse assembly in node-interleaved ordering (index 4j + var, with
    var 0..3 = p, u1, u2, u3; chi appended) so the LU stays banded apart
    from the two appended columns."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    gg, mu, ka = params.gravity, params.viscosity, params.surface_tension
    y = np.linspace(0.0, b, N)
    h = y[1] - y[0]
    d = (TWO_PI * 1j * xi[0], TWO_PI * 1j * xi[1])
    xin2 = xi[0] ** 2 + xi[1] ** 2
    n = 4 * N + 2
    ic = 4 * N
    d1rows, d2rows = _fd_rows(N, h)

    rows, cols, vals = [], [], []
    rhs = np.zeros(n, complex)

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    def put_deriv(r, var, drow, factor):
        for c, v in zip(*drow):
            put(r, 4 * c + var, factor * v)

    idx = lambda j, var: 4 * j + var
    # momentum rows at the equation slot (j, var=1+i), bordered below
    for i in range(3):
        var = 1 + i
        for j in range(1, N - 1):
            r = idx(j, var)
            rhs[r] = data_fns["f"][i](y[j])
            # pressure gradient
            if i < 2:
                put(r, idx(j, 0), d[i])
            else:
                put_deriv(r, 0, d1rows[j], 1.0)
            # -mu (D2 - 4 pi^2 |xi|^2) u_i
            put_deriv(r, var, d2rows[j], -mu)
            put(r, idx(j, var), mu * TWO_PI ** 2 * xin2)
            # -mu grad_i (div u)
            if i < 2:
                put(r, idx(j, 1), -mu * d[i] * d[0])
                put(r, idx(j, 2), -mu * d[i] * d[1])
                put_deriv(r, 3, d1rows[j], -mu * d[i])
            else:
                for c, v in zip(*d1rows[j]):
                    put(idx(j, var), idx(c, 1), -mu * v * d[0])
                    put(idx(j, var), idx(c, 2), -mu * v * d[1])
                    for c2, v2 in zip(*d1rows[c]):
                        put(idx(j, var), idx(c2, 3), -mu * v * v2)
            if i < 2:
                put(r, ic + i, gg)
        # bottom: u_i = 0
        put(idx(0, var), idx(0, var), 1.0)
        rhs[idx(0, var)] = 0.0
        # top: dynamic condition
        r = idx(N - 1, var)
        if i < 2:
            put_deriv(r, var, d1rows[N - 1], mu)
            put(r, idx(N - 1, 3), mu * d[i])
        else:
            put(r, idx(N - 1, 0), -1.0)
            put_deriv(r, 3, d1rows[N - 1], 2.0 * mu)
            put(r, ic, -ka * d[0])
            put(r, ic + 1, -ka * d[1])
        rhs[r] = data_fns["k"][i]
    # divergence rows in the pressure equation slot, with the h^2-scaled
    # pressure stabilization that suppresses the collocated-grid
    # checkerboard mode (second-order consistent)
    stab = h ** 2 / (4.0 * mu)
    for j in range(N):
        r = idx(j, 0)
        put(r, idx(j, 1), d[0])
        put(r, idx(j, 2), d[1])
        put_deriv(r, 3, d1rows[j], 1.0)
        put_deriv(r, 0, d2rows[j], -stab)
        rhs[r] = data_fns["g"](y[j])
    # curl and kinematic rows
    put(ic, ic, -TWO_PI * 1j * xi[1])
    put(ic, ic + 1, TWO_PI * 1j * xi[0])
    rhs[ic] = data_fns["omega"]
    put(ic + 1, idx(N - 1, 3), 1.0)
    rhs[ic + 1] = data_fns["h"]

    A = sp.csc_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
    x = spla.splu(A).solve(rhs)
    xs = x[:4 * N].reshape(N, 4)
    return {"y": y, "p": xs[:, 0], "u1": xs[:, 1], "u2": xs[:, 2],
            "u3": xs[:, 3], "chi": x[4 * N:]}
