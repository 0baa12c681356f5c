"""Discretization substrate: truncated Fourier lattice in the two horizontal
variables, Chebyshev-Gauss-Lobatto collocation in the vertical variable.

Conventions
-----------
A field is represented by complex coefficients of plane waves
``exp(2*pi*i*(k1*x1 + k2*x2)/L)`` with integer modes ``k_i`` in
``{-Nx/2, ..., Nx/2 - 1}`` stored in numpy FFT order.  The symbol variable is
``xi = k/L``, so horizontal differentiation acts as multiplication by
``2*pi*i*xi_i``.  Vertical collocation nodes ascend from the rigid bottom
``y_0 = 0`` to the free-surface plane ``y_{Ny-1} = b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "Grid",
    "BulkField",
    "SurfaceField",
    "make_grid",
    "transform_forward",
    "transform_inverse",
    "cheb_diff",
    "apply_multiplier",
]


def _cheb_nodes_and_matrix(ny: int, b: float):
    """CGL nodes y_j = (b/2)(1 - cos(pi j/(Ny-1))) and the first-derivative
    collocation matrix mapped to (0, b).

    Uses the classical closed form for the matrix on x = cos(pi j/(N-1))
    (descending) and the affine map y = (b/2)(1 - x), so d/dy = (-2/b) d/dx.
    """
    n = ny - 1
    j = np.arange(ny)
    x = np.cos(np.pi * j / n)
    c = np.ones(ny)
    c[0] = 2.0
    c[-1] = 2.0
    c = c * (-1.0) ** j
    xx = np.tile(x, (ny, 1)).T
    dx = xx - xx.T
    d = np.outer(c, 1.0 / c) / (dx + np.eye(ny))
    d = d - np.diag(d.sum(axis=1))
    y = (b / 2.0) * (1.0 - x)
    return y, (-2.0 / b) * d


def _clenshaw_curtis_weights(ny: int, b: float):
    """Clenshaw-Curtis weights on the CGL nodes for integration over (0, b).

    Exact for polynomials of degree <= Ny - 1.
    """
    n = ny - 1
    theta = np.pi * np.arange(ny) / n
    w = np.zeros(ny)
    v = np.ones(ny - 2)
    for k in range(1, n // 2 + 1):
        kk = 2 * k
        fac = 1.0 if kk == n else 2.0
        v -= fac * np.cos(kk * theta[1:-1]) / (kk * kk - 1)
    w[1:-1] = 2.0 * v / n
    w[0] = w[-1] = 1.0 / (n * n - 1 + (n % 2))
    return (b / 2.0) * w


def _cheb_vals2coeffs(vals):
    """Chebyshev expansion coefficients from values at the CGL nodes.

    ``vals`` has the node index on the LAST axis (our ascending-y ordering,
    i.e. x_j = cos(pi j/(N-1)) descending).  Returns coefficients a_k with
    f(y) = sum_k a_k T_k(x(y)).
    """
    n = vals.shape[-1] - 1
    # mirror-extend and FFT: standard DCT-I evaluation
    ext = np.concatenate([vals, vals[..., -2:0:-1]], axis=-1)
    a = np.fft.fft(ext, axis=-1)[..., : n + 1].real if np.isrealobj(vals) else np.fft.fft(ext, axis=-1)[..., : n + 1]
    a = a / n
    a[..., 0] *= 0.5
    a[..., -1] *= 0.5
    return a


def _cheb_coeffs2vals(a):
    """Inverse of :func:`_cheb_vals2coeffs`."""
    n = a.shape[-1] - 1
    aa = a.copy()
    aa[..., 0] *= 2.0
    aa[..., -1] *= 2.0
    ext = np.concatenate([aa, aa[..., -2:0:-1]], axis=-1) * 0.5
    vals = np.fft.fft(ext, axis=-1)[..., : n + 1]
    if np.isrealobj(a):
        vals = vals.real
    return vals


def _cheb_coeff_derivative(a, b: float):
    """Differentiate a Chebyshev series in coefficient space (d/dy on (0,b)).

    Stable alternative to powers of the nodal matrix; the recurrence is the
    usual a'_{k} = a'_{k+2} + 2(k+1) a_{k+1}, with the chain-rule factor
    (-2/b) for x = 1 - 2y/b.
    """
    n = a.shape[-1]
    out = np.zeros_like(a)
    if n >= 2:
        out[..., n - 2] = 2.0 * (n - 1) * a[..., n - 1]
        for k in range(n - 3, -1, -1):
            out[..., k] = out[..., k + 2] + 2.0 * (k + 1) * a[..., k + 1]
        out[..., 0] *= 0.5
    return (-2.0 / b) * out


@dataclass(frozen=True)
class Grid:
    """Torus [0,L)^2 x Chebyshev interval (0,b) discretization.

    Frequency lattice xi = (k1/L, k2/L), k_i in {-Nx/2,...,Nx/2-1} (FFT
    order); vertical CGL nodes with y[0] = 0 (bottom) and y[-1] = b (top).
    """

    L: float
    Nx: int
    Ny: int
    b: float
    y: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)       # d/dy collocation matrix
    D2: np.ndarray = field(repr=False)      # second derivative
    wy: np.ndarray = field(repr=False)      # Clenshaw-Curtis weights on (0,b)
    kx: np.ndarray = field(repr=False)      # integer modes, FFT order

    @property
    def xi1(self):
        """Meshgrid of xi_1 = k1/L over the lattice, shape (Nx, Nx)."""
        v = self.kx / self.L
        return np.broadcast_to(v[:, None], (self.Nx, self.Nx))

    @property
    def xi2(self):
        v = self.kx / self.L
        return np.broadcast_to(v[None, :], (self.Nx, self.Nx))

    @property
    def xi_abs(self):
        return np.hypot(self.xi1, self.xi2)

    @property
    def x1(self):
        """Physical sample coordinates along x1 (uniform, excludes L)."""
        return np.arange(self.Nx) * (self.L / self.Nx)

    def cell_area(self):
        return (self.L / self.Nx) ** 2

    def pad_size(self):
        """Horizontal grid size for 3/2-rule dealiased products."""
        return 3 * self.Nx // 2


def make_grid(L: float, Nx: int, Ny: int, b: float) -> Grid:
    """Build a grid; precomputes the Chebyshev differentiation matrix and
    Clenshaw-Curtis weights.
    """
    if Nx % 2 != 0 or Nx < 8:
        raise ValueError("Nx must be even and >= 8")
    if Ny < 8:
        raise ValueError("Ny must be >= 8")
    if L <= 0 or b <= 0:
        raise ValueError("L and b must be positive")
    y, D = _cheb_nodes_and_matrix(Ny, b)
    wy = _clenshaw_curtis_weights(Ny, b)
    kx = np.fft.fftfreq(Nx, d=1.0 / Nx).astype(int)
    g = Grid(L=float(L), Nx=int(Nx), Ny=int(Ny), b=float(b),
             y=y, D=D, D2=D @ D, wy=wy, kx=kx)
    for arr in (g.y, g.D, g.D2, g.wy, g.kx):
        arr.flags.writeable = False
    return g


def _freeze(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SurfaceField:
    """Complex spectral coefficients on the horizontal lattice.

    ``coeffs`` has shape (ncomp, Nx, Nx); ncomp is 1 for scalars, 2 or 3 for
    tangent / ambient vectors.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.shape[-2:] != (self.grid.Nx, self.grid.Nx) or c.ndim != 3:
            raise ValueError(f"bad surface coefficient shape {self.coeffs.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    def values(self):
        """Physical samples, complex, shape (ncomp, Nx, Nx)."""
        return np.fft.ifft2(self.coeffs, axes=(-2, -1)) * self.grid.Nx ** 2

    def values_real(self, tol=1e-10):
        v = self.values()
        scale = max(np.abs(v).max(), 1e-300)
        if np.abs(v.imag).max() > tol * scale:
            raise ValueError("field is not real-valued")
        return v.real

    def reality_defect(self):
        return _reality_defect(self.coeffs)

    def __add__(self, other):
        return SurfaceField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SurfaceField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return SurfaceField(self.grid, self.coeffs * a)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BulkField:
    """Complex spectral-horizontal, collocation-vertical coefficients.

    ``coeffs`` has shape (ncomp, Nx, Nx, Ny): for each horizontal mode the
    last axis holds the vertical profile at the CGL nodes.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        if c.ndim == 3:
            c = c[None]
        if c.shape[-3:] != (self.grid.Nx, self.grid.Nx, self.grid.Ny) or c.ndim != 4:
            raise ValueError(f"bad bulk coefficient shape {self.coeffs.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    def values(self):
        return np.fft.ifft2(self.coeffs, axes=(1, 2)) * self.grid.Nx ** 2

    def values_real(self, tol=1e-10):
        v = self.values()
        scale = max(np.abs(v).max(), 1e-300)
        if np.abs(v.imag).max() > tol * scale:
            raise ValueError("field is not real-valued")
        return v.real

    def reality_defect(self):
        return _reality_defect(self.coeffs)

    def __add__(self, other):
        return BulkField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return BulkField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return BulkField(self.grid, self.coeffs * a)

    __rmul__ = __mul__


def _reality_defect(c):
    """Max |coeffs(-k) - conj(coeffs(k))| relative to the field scale.

    For bulk coefficients the vertical axis is untouched; the horizontal axes
    are the two just after the component axis.
    """
    ax1, ax2 = 1, 2
    flipped = np.roll(np.flip(np.flip(c, axis=ax1), axis=ax2), shift=(1, 1), axis=(ax1, ax2))
    scale = max(np.abs(c).max(), 1e-300)
    return float(np.abs(flipped - np.conj(c)).max() / scale)


def hermitize(c):
    """Project coefficients onto the reality-symmetric subspace."""
    ax1, ax2 = 1, 2
    flipped = np.roll(np.flip(np.flip(c, axis=ax1), axis=ax2), shift=(1, 1), axis=(ax1, ax2))
    return 0.5 * (c + np.conj(flipped))


def transform_forward(grid: Grid, values):
    """Physical samples -> spectral field.

    Shape (..., Nx, Nx) yields a SurfaceField, (..., Nx, Nx, Ny) a BulkField.
    """
    v = np.asarray(values)
    if v.ndim in (2, 3) and v.shape[-2:] == (grid.Nx, grid.Nx):
        c = np.fft.fft2(v, axes=(-2, -1)) / grid.Nx ** 2
        return SurfaceField(grid, c)
    if v.ndim in (3, 4) and v.shape[-3:-1] == (grid.Nx, grid.Nx) and v.shape[-1] == grid.Ny:
        c = np.fft.fft2(v, axes=(-3, -2)) / grid.Nx ** 2
        return BulkField(grid, c)
    raise ValueError(f"sample array shape {v.shape} does not match grid "
                     f"(Nx={grid.Nx}, Ny={grid.Ny})")


def transform_inverse(f):
    """Spectral field -> physical samples (complex array)."""
    return f.values()


def cheb_diff(f: BulkField, order: int = 1) -> BulkField:
    """Vertical derivative via the collocation matrix; exact on polynomials
    of degree < Ny."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    D = f.grid.D if order == 1 else f.grid.D2
    return BulkField(f.grid, f.coeffs @ D.T)


def surface_diff(f: SurfaceField, axis: int) -> SurfaceField:
    """Horizontal derivative d/dx_axis (axis in {1,2}), spectral."""
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    return SurfaceField(f.grid, f.coeffs * (TWO_PI * 1j * xi))


def bulk_diff_h(f: BulkField, axis: int) -> BulkField:
    """Horizontal derivative of a bulk field."""
    xi = f.grid.xi1 if axis == 1 else f.grid.xi2
    return BulkField(f.grid, f.coeffs * (TWO_PI * 1j * xi)[None, :, :, None])


def apply_multiplier(symbol, f, zero_value=None):
    """Apply a scalar Fourier multiplier m(xi) to a field.

    ``symbol`` is called with the meshgrid arrays (xi1, xi2) and must return
    the multiplier values over the lattice.  If the formula is singular at
    the zero frequency the caller supplies ``zero_value``; any remaining
    non-finite lattice value is an error naming the offending point.
    """
    g = f.grid
    with np.errstate(all="ignore"):
        m = np.asarray(symbol(g.xi1, g.xi2), dtype=complex)
    if m.shape != (g.Nx, g.Nx):
        raise ValueError("symbol must evaluate on the full lattice")
    if zero_value is not None:
        m = m.copy()
        m[0, 0] = zero_value
    bad = ~np.isfinite(m)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"symbol is not finite at lattice point k=({g.kx[i]}, {g.kx[j]}), "
            f"xi=({g.kx[i] / g.L:g}, {g.kx[j] / g.L:g})")
    if isinstance(f, SurfaceField):
        return SurfaceField(g, f.coeffs * m[None])
    return BulkField(g, f.coeffs * m[None, :, :, None])


# ---------------------------------------------------------------------------
# dealiased products (3/2 zero padding in the horizontal transform)

def pad_values(f):
    """Physical samples on the 3/2 dealiasing grid (complex)."""
    g = f.grid
    M = g.pad_size()
    c = f.coeffs
    if isinstance(f, SurfaceField):
        big = np.zeros(c.shape[:-2] + (M, M), complex)
        _insert_modes(big, c, g.Nx)
        return np.fft.ifft2(big, axes=(-2, -1)) * M ** 2
    big = np.zeros((c.shape[0], M, M, c.shape[-1]), complex)
    _insert_modes_bulk(big, c, g.Nx)
    return np.fft.ifft2(big, axes=(1, 2)) * M ** 2


def _insert_modes(big, c, nx):
    h = nx // 2
    big[..., :h, :h] = c[..., :h, :h]
    big[..., :h, -h:] = c[..., :h, -h:]
    big[..., -h:, :h] = c[..., -h:, :h]
    big[..., -h:, -h:] = c[..., -h:, -h:]


def _insert_modes_bulk(big, c, nx):
    h = nx // 2
    big[:, :h, :h, :] = c[:, :h, :h, :]
    big[:, :h, -h:, :] = c[:, :h, -h:, :]
    big[:, -h:, :h, :] = c[:, -h:, :h, :]
    big[:, -h:, -h:, :] = c[:, -h:, -h:, :]


def unpad_transform(grid: Grid, values):
    """Samples on the 3/2 grid -> truncated spectral coefficients on ``grid``.

    Returns a SurfaceField or BulkField depending on the trailing shape.
    """
    v = np.asarray(values, dtype=complex)
    M = grid.pad_size()
    h = grid.Nx // 2
    if v.shape[-2:] == (M, M):
        big = np.fft.fft2(v, axes=(-2, -1)) / M ** 2
        c = np.zeros(v.shape[:-2] + (grid.Nx, grid.Nx), complex)
        c[..., :h, :h] = big[..., :h, :h]
        c[..., :h, -h:] = big[..., :h, -h:]
        c[..., -h:, :h] = big[..., -h:, :h]
        c[..., -h:, -h:] = big[..., -h:, -h:]
        return SurfaceField(grid, c if c.ndim == 3 else c[None])
    if v.shape[-3:-1] == (M, M) and v.shape[-1] == grid.Ny:
        big = np.fft.fft2(v, axes=(-3, -2)) / M ** 2
        if v.ndim == 3:
            v4 = big[None]
        else:
            v4 = big
        c = np.zeros((v4.shape[0], grid.Nx, grid.Nx, grid.Ny), complex)
        c[:, :h, :h, :] = v4[:, :h, :h, :]
        c[:, :h, -h:, :] = v4[:, :h, -h:, :]
        c[:, -h:, :h, :] = v4[:, -h:, :h, :]
        c[:, -h:, -h:, :] = v4[:, -h:, -h:, :]
        return BulkField(grid, c)
    raise ValueError(f"sample array shape {v.shape} does not match padded grid")


def vertical_derivative_coeffspace(profile_vals, b, order=1):
    """High-order-stable vertical derivative of nodal profiles (last axis)
    via the Chebyshev coefficient recurrence."""
    a = _cheb_vals2coeffs(np.asarray(profile_vals, dtype=complex))
    for _ in range(order):
        a = _cheb_coeff_derivative(a, b)
    return _cheb_coeffs2vals(a)
