"""Periodic second-order elliptic operators on the unit torus.

The operator class is

    P u = -sum_ij a_ij(x) d_i d_j u + sum_i b_i(x) d_i u + c(x) u

with real Z^n-periodic coefficients. ``assemble`` discretises the torus
operator P(x, D + k) by Fourier collocation, where D = -i d. Substituting
k = -i xi gives the conjugated operator exp(-xi.x) P exp(xi.x).
"""

import warnings
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from . import _fourier
from .errors import AdjointResolutionWarning, CoefficientError, GridError
from .expr import parse_expr

ADJOINT_TAIL_THRESHOLD = 1e-20


@dataclass(frozen=True)
class TorusGrid:
    n: int
    sizes: tuple

    @property
    def size(self):
        return int(np.prod(self.sizes))

    @property
    def shape(self):
        return tuple(self.sizes)

    @property
    def brillouin_zone(self):
        return [(-np.pi, np.pi)] * self.n

    def axis_nodes(self, axis):
        return np.arange(self.sizes[axis]) / self.sizes[axis]

    def mesh(self):
        """Coordinate arrays (one per axis), each of grid shape."""
        return np.meshgrid(*[self.axis_nodes(l) for l in range(self.n)], indexing="ij")

    @property
    def nodes(self):
        """All nodes as a (size, n) array in C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)


def build_grid(n, sizes):
    if n not in (1, 2):
        raise GridError(f"dimension unsupported: {n} (only 1 and 2)")
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != n:
        raise GridError(f"expected {n} grid sizes, got {len(sizes)}")
    for s in sizes:
        if s < 4 or s % 2:
            raise GridError(f"grid size {s} must be even and at least 4")
    return TorusGrid(n, sizes)


@dataclass(frozen=True, eq=False)
class PeriodicCoefficients:
    grid: TorusGrid
    a: np.ndarray  # (n, n, *grid.shape)
    b: np.ndarray  # (n, *grid.shape)
    c: np.ndarray  # grid.shape
    ellipticity_const: float

    @property
    def n(self):
        return self.grid.n

    def evaluate(self, points):
        """Trigonometric interpolation of (a, b, c) at arbitrary points in R^n."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        a = np.empty((n, n, len(points)))
        for i in range(n):
            for j in range(i, n):
                a[i, j] = a[j, i] = _fourier.interpolate(self.a[i, j], points)
        b = np.stack([_fourier.interpolate(self.b[i], points) for i in range(n)])
        c = _fourier.interpolate(self.c, points)
        return a, b, c

    def shifted(self, t):
        """Coefficients of P + t."""
        return _with_fields(self.grid, self.a, self.b, self.c + t)

    def scaled(self, s):
        """Coefficients of s * P."""
        return _with_fields(self.grid, s * self.a, s * self.b, s * self.c)

    def translated(self, shift):
        """Coefficients translated by an integer number of grid nodes per axis."""
        axes = tuple(range(self.n))
        a = np.roll(self.a, shift, axis=tuple(2 + ax for ax in axes))
        b = np.roll(self.b, shift, axis=tuple(1 + ax for ax in axes))
        c = np.roll(self.c, shift, axis=axes)
        return _with_fields(self.grid, a, b, c)


def _with_fields(grid, a, b, c):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    for name, arr in (("a", a), ("b", b), ("c", c)):
        if not np.all(np.isfinite(arr)):
            raise CoefficientError(f"coefficient {name} has non-finite samples")
    if not np.allclose(a, np.swapaxes(a, 0, 1), rtol=0.0, atol=1e-12):
        raise CoefficientError("a must be symmetric")
    n = grid.n
    amat = np.moveaxis(a.reshape(n, n, -1), -1, 0)
    ell = float(np.min(np.linalg.eigvalsh(amat)))
    if ell <= 0.0:
        raise CoefficientError(f"not uniformly elliptic (min eigenvalue of a = {ell:g})")
    return PeriodicCoefficients(grid, a, b, c, ell)


def sample_field(spec, grid):
    """Sample one coefficient spec (number, {"expr"}, {"fourier"}, array, callable)."""
    if isinstance(spec, Number) and not isinstance(spec, bool):
        if isinstance(spec, complex) and spec.imag != 0:
            raise CoefficientError("coefficients must be real")
        return np.full(grid.shape, float(np.real(spec)))
    if isinstance(spec, dict):
        if "expr" in spec:
            expr = parse_expr(spec["expr"])
            coords = grid.mesh()
            values = expr.evaluate(coords)
            shifted = expr.evaluate([x + 1.0 for x in coords])
            if not np.allclose(values, shifted, rtol=1e-9, atol=1e-12):
                raise CoefficientError(f"expression {spec['expr']!r} is not 1-periodic")
            return values
        if "fourier" in spec:
            return _sample_fourier(spec["fourier"], grid)
        raise CoefficientError(f"unknown coefficient spec keys: {sorted(spec)}")
    if callable(spec):
        return _real(np.broadcast_to(spec(*grid.mesh()), grid.shape))
    arr = np.asarray(spec)
    if arr.shape == grid.shape:
        return _real(arr)
    raise CoefficientError(f"cannot interpret coefficient spec {spec!r}")


def _real(values):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag), initial=0.0) > 1e-12 * (1 + np.max(np.abs(values))):
            raise CoefficientError("coefficients must be real")
        values = values.real
    return np.array(values, dtype=float)


def _sample_fourier(modes, grid):
    coords = grid.mesh()
    total = np.zeros(grid.shape, dtype=complex)
    for mode, coeff in modes:
        mode = np.atleast_1d(np.asarray(mode, dtype=float))
        if mode.size != grid.n:
            raise CoefficientError(f"Fourier mode {mode.tolist()} does not match dimension {grid.n}")
        if isinstance(coeff, (list, tuple)):
            coeff = complex(coeff[0], coeff[1])
        phase = sum(m * x for m, x in zip(mode, coords))
        total += coeff * np.exp(2j * np.pi * phase)
    return _real(total)


def make_coefficients(spec, grid):
    """Sample a coefficient spec ``{"a": [[..]], "b": [..], "c": ..}`` on ``grid``.

    ``b`` and ``c`` default to zero; a scalar ``b`` is broadcast to every axis.
    """
    n = grid.n
    if "a" not in spec:
        raise CoefficientError("coefficient spec needs 'a'")
    a_spec = spec["a"]
    if isinstance(a_spec, Number) or isinstance(a_spec, dict):
        a_spec = [[a_spec if i == j else 0.0 for j in range(n)] for i in range(n)]
    if len(a_spec) != n or any(len(row) != n for row in a_spec):
        raise CoefficientError(f"a must be {n}x{n}")
    for i in range(n):
        for j in range(i + 1, n):
            if a_spec[i][j] != a_spec[j][i]:
                raise CoefficientError("a must be symmetric")
    a = np.stack([np.stack([sample_field(a_spec[i][j], grid) for j in range(n)]) for i in range(n)])
    b_spec = spec.get("b", 0.0)
    if isinstance(b_spec, Number) or isinstance(b_spec, dict):
        b_spec = [b_spec] * n
    if len(b_spec) != n:
        raise CoefficientError(f"b must have {n} entries")
    b = np.stack([sample_field(s, grid) for s in b_spec])
    c = sample_field(spec.get("c", 0.0), grid)
    return _with_fields(grid, a, b, c)


def formal_adjoint(coeffs):
    """Coefficients of P* v = -d_i d_j(a_ij v) - d_i(b_i v) + c v in the same form."""
    grid = coeffs.grid
    n = grid.n
    worst = max(
        [_fourier.tail_fraction(coeffs.a[i, j]) for i in range(n) for j in range(n)]
        + [_fourier.tail_fraction(coeffs.b[i]) for i in range(n)]
    )
    if worst > ADJOINT_TAIL_THRESHOLD:
        warnings.warn(
            f"adjoint coefficients under-resolved (Fourier tail fraction {worst:.2e})",
            AdjointResolutionWarning,
            stacklevel=2,
        )
    b_star = np.empty_like(coeffs.b)
    c_star = coeffs.c.copy()
    for i in range(n):
        b_star[i] = -coeffs.b[i] - 2.0 * sum(
            _fourier.derivative(coeffs.a[i, j], axis=j) for j in range(n)
        )
        c_star -= _fourier.derivative(coeffs.b[i], axis=i)
        for j in range(n):
            c_star -= _fourier.derivative(_fourier.derivative(coeffs.a[i, j], axis=j), axis=i)
    return PeriodicCoefficients(grid, coeffs.a.copy(), b_star, c_star, coeffs.ellipticity_const)


# -- assembly -----------------------------------------------------------------


def _axis_matrices(size, k):
    """First and second derivative matrices for (d + i k) on one axis.

    The Nyquist mode is treated symmetrically (mean of the +N/2 and -N/2
    symbols) so the transpose relation with -k holds exactly.
    """
    m = 2.0 * np.pi * _fourier.wavenumbers(size)
    d1 = 1j * (m + k)
    d2 = -((m + k) ** 2)
    nyq = _fourier.nyquist_index(size)
    d1[nyq] = 1j * k
    d2[nyq] = -((np.pi * size) ** 2 + k**2)
    F = np.fft.fft(np.eye(size), axis=0)
    D1 = np.fft.ifft(d1[:, None] * F, axis=0)
    D2 = np.fft.ifft(d2[:, None] * F, axis=0)
    return D1, D2


def derivative_matrices(grid, k):
    """Full-grid matrices (D1[l], D2[l]) for d_l + i k_l and its square."""
    k = np.asarray(k, dtype=complex).reshape(grid.n)
    per_axis = [_axis_matrices(grid.sizes[l], k[l]) for l in range(grid.n)]
    if grid.n == 1:
        return [per_axis[0][0]], [per_axis[0][1]]
    I0 = np.eye(grid.sizes[0])
    I1 = np.eye(grid.sizes[1])
    D1 = [np.kron(per_axis[0][0], I1), np.kron(I0, per_axis[1][0])]
    D2 = [np.kron(per_axis[0][1], I1), np.kron(I0, per_axis[1][1])]
    return D1, D2


@dataclass(frozen=True, eq=False)
class AssembledOperator:
    k: np.ndarray
    matrix: np.ndarray
    coeffs: PeriodicCoefficients = field(repr=False)

    @property
    def xi(self):
        """Real conjugation parameter when k = -i xi."""
        return -np.imag(self.k) if np.allclose(np.real(self.k), 0.0) else None


def assemble_from(coeffs, D1, D2):
    n = coeffs.n
    size = coeffs.grid.size
    A = np.diag(coeffs.c.ravel().astype(complex))
    for i in range(n):
        A += coeffs.b[i].ravel()[:, None] * D1[i]
        A -= coeffs.a[i, i].ravel()[:, None] * D2[i]
        for j in range(n):
            if j != i:
                A -= coeffs.a[i, j].ravel()[:, None] * (D1[i] @ D1[j])
    assert A.shape == (size, size)
    return A


def assemble(coeffs, k):
    """Collocation matrix of P(x, D + k) on the torus grid."""
    k = np.asarray(k, dtype=complex).reshape(coeffs.n)
    D1, D2 = derivative_matrices(coeffs.grid, k)
    return AssembledOperator(k, assemble_from(coeffs, D1, D2), coeffs)


def xi_derivative_matrix(coeffs, D1, l):
    """d/dxi_l of the conjugated matrix: -2 sum_j a_lj (d_j + xi_j) + b_l."""
    A = coeffs.b[l].ravel()[:, None] * np.eye(coeffs.grid.size, dtype=complex)
    for j in range(coeffs.n):
        A = A - 2.0 * coeffs.a[l, j].ravel()[:, None] * D1[j]
    return A


def conjugation_k(xi):
    return -1j * np.asarray(xi, dtype=float)


# -- finite differences on boxes in R^n ---------------------------------------


def box_points(origin, spacing, shape):
    """Node coordinates of a box grid as an array of shape (*shape, n)."""
    axes = [origin[l] + spacing * np.arange(shape[l]) for l in range(len(shape))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def apply_on_box(coeffs, samples, origin, spacing):
    """Second-order central-difference application of P on a box grid.

    ``samples`` are values at ``origin + spacing * index``. Returns P_h u at
    the interior nodes (each axis shortened by two).
    """
    samples = np.asarray(samples)
    n = coeffs.n
    if samples.ndim != n:
        raise GridError(f"samples must be {n}-dimensional")
    if any(s < 3 for s in samples.shape):
        raise GridError("box too small for the 3-point stencil")
    if spacing > 0.25:
        raise GridError(f"spacing {spacing} does not resolve the coefficients (need <= 0.25)")
    h = float(spacing)
    interior = tuple(slice(1, -1) for _ in range(n))
    pts = box_points(origin, h, samples.shape)[interior].reshape(-1, n)
    a, b, c = coeffs.evaluate(pts)
    ishape = tuple(s - 2 for s in samples.shape)

    def sl(offsets):
        return samples[tuple(slice(1 + o, s - 1 + o) for o, s in zip(offsets, samples.shape))]

    def unit(l, sign):
        off = [0] * n
        off[l] = sign
        return off

    u0 = sl([0] * n)
    out = c.reshape(ishape) * u0
    for i in range(n):
        du = (sl(unit(i, 1)) - sl(unit(i, -1))) / (2 * h)
        d2u = (sl(unit(i, 1)) - 2 * u0 + sl(unit(i, -1))) / h**2
        out = out + b[i].reshape(ishape) * du - a[i, i].reshape(ishape) * d2u
        for j in range(n):
            if j == i:
                continue
            pp = [0] * n
            pp[i], pp[j] = 1, 1
            mm = [0] * n
            mm[i], mm[j] = -1, -1
            pm = [0] * n
            pm[i], pm[j] = 1, -1
            mp = [0] * n
            mp[i], mp[j] = -1, 1
            dij = (sl(pp) - sl(pm) - sl(mp) + sl(mm)) / (4 * h * h)
            out = out - a[i, j].reshape(ishape) * dij
    return out
