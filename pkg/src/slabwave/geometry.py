"""Flattening tool-chain: harmonic-type lifting, the two-part extension
operator, Jacobian/geometry matrices, mean curvature, composition with the
flattening map, and its inverse for transfer back to the physical domain.

The flattening map is F_eta(x, y) = (x, y + E*eta(x, y)) where E = E0 + E1
extends a surface function into the slab with trace eta at the top and 0 at
the bottom: low horizontal frequencies ride a linear ramp (y/b), high
frequencies a vertically cut-off decaying lift exp(<xi>(y-b)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (BulkField, SurfaceField, TWO_PI, pad_values,
                   transform_forward, unpad_transform)
from .spaces import bump

__all__ = [
    "GeometryPack", "lift", "extend", "geometry_pack", "mean_curvature",
    "compose", "invert_flattening", "trace_sigma", "trace_sigma0",
]


def _bessel_bracket(grid):
    return np.sqrt(1.0 + grid.xi_abs ** 2)


def lift(h: SurfaceField) -> BulkField:
    """Per-mode vertical profile exp(<xi>(y-b)) * h_hat(xi); the trace at
    y = b reproduces h exactly at the collocation nodes."""
    g = h.grid
    br = _bessel_bracket(g)
    prof = np.exp(br[:, :, None] * (g.y[None, None, :] - g.b))
    return BulkField(g, h.coeffs[:, :, :, None] * prof[None])


def _phi_v(t, b):
    """Vertical cutoff: exp(1 - 1/(1-(2t/b)^2)) for |t| < b/2, else 0.

    phi_v(0) = 1 and supp phi_v is contained in (-b/2, b/2)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < b / 2.0
    u = (2.0 * t[inside] / b) ** 2
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u))
    return out


def _extension_profiles(grid):
    """Per-mode vertical profile e(xi, y) of the extension operator and its
    exact y-derivative, shapes (Nx, Nx, Ny)."""
    g = grid
    phi = bump(g.xi1, g.xi2)
    br = _bessel_bracket(g)
    y = g.y
    ramp = (y / g.b)[None, None, :]
    cut = _phi_v(g.b - y, g.b)[None, None, :]
    dcut = _phi_v_prime(g.b - y, g.b)[None, None, :] * (-1.0)
    ex = np.exp(br[:, :, None] * (y[None, None, :] - g.b))
    e = phi[:, :, None] * ramp + (1.0 - phi)[:, :, None] * cut * ex
    de = phi[:, :, None] / g.b + (1.0 - phi)[:, :, None] * (dcut + cut * br[:, :, None]) * ex
    return e, de


def _phi_v_prime(t, b):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < b / 2.0
    ti = t[inside]
    u = (2.0 * ti / b) ** 2
    # d/dt exp(1 - 1/(1-u)) = -exp(...) * (8 t / b^2) / (1-u)^2
    out[inside] = -np.exp(1.0 - 1.0 / (1.0 - u)) * (8.0 * ti / b ** 2) / (1.0 - u) ** 2
    return out


def extend(eta: SurfaceField) -> BulkField:
    """E eta = E0 eta + E1 eta; trace eta at the top, 0 at the bottom."""
    e, _ = _extension_profiles(eta.grid)
    return BulkField(eta.grid, eta.coeffs[:, :, :, None] * e[None])


def extend_derivative(eta: SurfaceField) -> BulkField:
    """d/dy of the extension, from the analytic profile derivative."""
    _, de = _extension_profiles(eta.grid)
    return BulkField(eta.grid, eta.coeffs[:, :, :, None] * de[None])


@dataclass(frozen=True)
class GeometryPack:
    """All geometry data derived from a surface function.

    Spectral fields live on the base grid; `*_pad` arrays are real physical
    samples on the 3/2 dealiasing grid (shape (M, M, Ny) or (3, 3, M, M, Ny)
    for the matrices), which is where nonlinear products are formed.
    """

    eta: SurfaceField
    ext: BulkField
    J: BulkField
    Jinv: BulkField
    A: np.ndarray          # object array (3,3) of BulkField
    Ainv: np.ndarray
    M: np.ndarray
    Minv: np.ndarray
    J_pad: np.ndarray
    Jinv_pad: np.ndarray
    dext_pad: np.ndarray   # (3, M, M, Ny): (d1 E eta, d2 E eta, d3 E eta)
    ext_pad: np.ndarray

    def matrix_pad(self, which: str):
        """Physical (3,3,M,M,Ny) samples of A, Ainv, M, Minv, or Mt."""
        J = self.J_pad
        Ji = self.Jinv_pad
        e1, e2 = self.dext_pad[0], self.dext_pad[1]
        z = np.zeros_like(J)
        o = np.ones_like(J)
        if which == "A":
            rows = [[o, z, -e1 * Ji], [z, o, -e2 * Ji], [z, z, Ji]]
        elif which == "Ainv":
            rows = [[o, z, e1], [z, o, e2], [z, z, J]]
        elif which == "M":
            rows = [[J, z, z], [z, J, z], [-e1, -e2, o]]
        elif which == "Minv":
            rows = [[Ji, z, z], [z, Ji, z], [e1 * Ji, e2 * Ji, o]]
        elif which == "Mt":
            rows = [[J, z, -e1], [z, J, -e2], [z, z, o]]
        elif which == "Mmt":  # M^{-t}
            rows = [[Ji, z, e1 * Ji], [z, Ji, e2 * Ji], [z, z, o]]
        else:
            raise KeyError(which)
        return np.stack([np.stack(r) for r in rows])


def geometry_pack(eta: SurfaceField, jacobian_floor: float = 0.01) -> GeometryPack:
    """Assemble J, A, M and inverses from the explicit block formulas.

    The runtime check min(1 + d3 E eta) > jacobian_floor stands in for the
    smallness radius of the flattening theory; inverses come from the closed
    3x3 block inversion, not numerical matrix inversion.
    """
    g = eta.grid
    ext = extend(eta)
    d3 = extend_derivative(eta)
    d1 = BulkField(g, ext.coeffs * (TWO_PI * 1j * g.xi1)[None, :, :, None])
    d2 = BulkField(g, ext.coeffs * (TWO_PI * 1j * g.xi2)[None, :, :, None])

    dext_pad = np.concatenate([pad_values(d1).real, pad_values(d2).real,
                               pad_values(d3).real], axis=0)
    ext_pad = pad_values(ext).real[0]
    J_pad = 1.0 + dext_pad[2]
    minJ = float(J_pad.min())
    if minJ <= jacobian_floor:
        raise ValueError(f"flattening degenerate: min J = {minJ:.6g}")
    Jinv_pad = 1.0 / J_pad

    Jf = unpad_transform(g, J_pad[None].astype(complex))
    Jinvf = unpad_transform(g, Jinv_pad[None].astype(complex))

    def as_field(arr):
        return unpad_transform(g, arr[None].astype(complex))

    zero = BulkField(g, np.zeros((1, g.Nx, g.Nx, g.Ny), complex))
    one = as_field(np.ones_like(J_pad))
    e1f, e2f = as_field(dext_pad[0]), as_field(dext_pad[1])

    def mat(rows):
        out = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                out[i, j] = rows[i][j]
        return out

    A = mat([[one, zero, as_field(-dext_pad[0] * Jinv_pad)],
             [zero, one, as_field(-dext_pad[1] * Jinv_pad)],
             [zero, zero, Jinvf]])
    Ainv = mat([[one, zero, e1f], [zero, one, e2f], [zero, zero, Jf]])
    M = mat([[Jf, zero, zero], [zero, Jf, zero],
             [BulkField(g, -e1f.coeffs), BulkField(g, -e2f.coeffs), one]])
    Minv = mat([[Jinvf, zero, zero], [zero, Jinvf, zero],
                [as_field(dext_pad[0] * Jinv_pad), as_field(dext_pad[1] * Jinv_pad), one]])

    return GeometryPack(eta=eta, ext=ext, J=Jf, Jinv=Jinvf, A=A, Ainv=Ainv,
                        M=M, Minv=Minv, J_pad=J_pad, Jinv_pad=Jinv_pad,
                        dext_pad=dext_pad, ext_pad=ext_pad)


def mean_curvature(eta: SurfaceField) -> SurfaceField:
    """H(eta) = div_par((1 + |grad_par eta|^2)^{-1/2} grad_par eta),
    products dealiased."""
    g = eta.grid
    g1 = SurfaceField(g, eta.coeffs * (TWO_PI * 1j * g.xi1)[None])
    g2 = SurfaceField(g, eta.coeffs * (TWO_PI * 1j * g.xi2)[None])
    v1 = pad_values(g1).real[0]
    v2 = pad_values(g2).real[0]
    w = 1.0 / np.sqrt(1.0 + v1 ** 2 + v2 ** 2)
    n1 = unpad_transform(g, (w * v1)[None].astype(complex))
    n2 = unpad_transform(g, (w * v2)[None].astype(complex))
    c = n1.coeffs * (TWO_PI * 1j * g.xi1)[None] + n2.coeffs * (TWO_PI * 1j * g.xi2)[None]
    return SurfaceField(g, c)


def _displaced_nodes(grid, eta, padded):
    """Physical node coordinates (X1, X2, Y + E eta) on the base or padded
    horizontal grid; Y is the collocation coordinate."""
    ext = extend(eta)
    if padded:
        M = grid.pad_size()
        x = np.arange(M) * (grid.L / M)
        e = pad_values(ext).real[0]
    else:
        x = grid.x1
        e = ext.values_real()[0]
    X1 = np.broadcast_to(x[:, None, None], e.shape)
    X2 = np.broadcast_to(x[None, :, None], e.shape)
    Y = np.broadcast_to(grid.y[None, None, :], e.shape)
    return X1, X2, Y + e


def compose(F, eta: SurfaceField) -> BulkField:
    """Pointwise evaluation of a callable F(x1, x2, x3) at the displaced
    nodes of the flattening map, then forward transform."""
    g = eta.grid
    X1, X2, X3 = _displaced_nodes(g, eta, padded=False)
    vals = np.asarray(F(X1, X2, X3), dtype=float)
    return transform_forward(g, vals[None])


def compose_padded(F, eta: SurfaceField) -> np.ndarray:
    """Same as :func:`compose` but returns physical samples on the 3/2 grid,
    for use inside dealiased products."""
    X1, X2, X3 = _displaced_nodes(eta.grid, eta, padded=True)
    return np.asarray(F(X1, X2, X3), dtype=float)


def _ext_eval(eta: SurfaceField, x, y):
    """E eta and its y-derivative at arbitrary points (x: (n,2), y: (n,))
    by direct mode summation with the analytic vertical profile."""
    g = eta.grid
    phi = bump(g.xi1, g.xi2)
    br = _bessel_bracket(g)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    ph = np.exp(TWO_PI * 1j * (x[:, 0:1, None] * g.xi1[None] + x[:, 1:2, None] * g.xi2[None]))
    ex = np.exp(br[None] * (y[:, None, None] - g.b))
    cut = _phi_v(g.b - y, g.b)[:, None, None]
    dcut = -_phi_v_prime(g.b - y, g.b)[:, None, None]
    prof = phi[None] * (y[:, None, None] / g.b) + (1.0 - phi)[None] * cut * ex
    dprof = phi[None] / g.b + (1.0 - phi)[None] * (dcut + cut * br[None]) * ex
    c = eta.coeffs[0][None]
    val = (c * prof * ph).sum(axis=(1, 2)).real
    dval = (c * dprof * ph).sum(axis=(1, 2)).real
    return val, dval


def surface_height(eta: SurfaceField, x):
    """eta evaluated at arbitrary horizontal points x (n, 2)."""
    g = eta.grid
    x = np.asarray(x, dtype=float)
    ph = np.exp(TWO_PI * 1j * (x[:, 0:1, None] * g.xi1[None] + x[:, 1:2, None] * g.xi2[None]))
    return (eta.coeffs[0][None] * ph).sum(axis=(1, 2)).real


def invert_flattening(eta: SurfaceField, points, tol=1e-12, max_iter=100):
    """Solve y + E eta(x, y) = z for each (x, z) with 0 <= z <= b + eta(x).

    Safeguarded Newton with bisection fallback on [0, b]; the vertical map is
    monotone under the geometry_pack precondition.
    """
    g = eta.grid
    pts = np.asarray(points, dtype=float)
    x = pts[:, :2]
    z = pts[:, 2]
    top = g.b + surface_height(eta, x)
    if np.any(z < -1e-12) or np.any(z > top + 1e-12):
        bad = int(np.argmax((z < -1e-12) | (z > top + 1e-12)))
        raise ValueError(f"point {tuple(pts[bad])} outside the fluid domain")
    lo = np.zeros_like(z)
    hi = np.full_like(z, g.b)
    y = np.clip(z, 0.0, g.b)
    for _ in range(max_iter):
        e, de = _ext_eval(eta, x, y)
        res = y + e - z
        if np.abs(res).max() <= tol:
            break
        pos = res > 0
        hi = np.where(pos, np.minimum(hi, y), hi)
        lo = np.where(~pos, np.maximum(lo, y), lo)
        step = res / (1.0 + de)
        ynew = y - step
        outside = (ynew <= lo) | (ynew >= hi)
        y = np.where(outside, 0.5 * (lo + hi), ynew)
    else:
        raise RuntimeError("flattening inversion did not converge")
    return y


def trace_sigma(f: BulkField) -> SurfaceField:
    """Restriction to the top collocation plane y = b."""
    return SurfaceField(f.grid, f.coeffs[..., -1])


def trace_sigma0(f: BulkField) -> SurfaceField:
    """Restriction to the bottom collocation plane y = 0."""
    return SurfaceField(f.grid, f.coeffs[..., 0])
