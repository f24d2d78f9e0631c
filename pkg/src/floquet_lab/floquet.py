"""Discrete Floquet (Gelfand) transform of finitely supported lattice fields.

A :class:`CellField` stores f restricted to the translated cells K + gamma:
``values[gamma](x) = f(x + gamma)`` for x in the unit cell K. The transform

    Uf(z, x) = sum_gamma f(x - gamma) z^gamma = sum_gamma values[gamma](x) z^(-gamma)

is sampled on the multiplier grid z_l = exp(2 pi i m / M_l), where it is a
discrete Fourier transform over gamma.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import FloquetError


@dataclass(frozen=True, eq=False)
class CellField:
    values: dict  # tuple(gamma) -> ndarray on the cell grid

    def __post_init__(self):
        shapes = {np.shape(v) for v in self.values.values()}
        if len(shapes) > 1:
            raise FloquetError(f"cell grids disagree: {sorted(shapes)}")
        dims = {len(g) for g in self.values}
        if len(dims) > 1:
            raise FloquetError("lattice points of mixed dimension")

    @property
    def support(self):
        return sorted(self.values)

    @property
    def n(self):
        return len(next(iter(self.values)))

    @property
    def cell_shape(self):
        return np.shape(next(iter(self.values.values())))

    def shifted(self, gamma0):
        """The field x -> f(x - gamma0)."""
        g0 = tuple(int(g) for g in gamma0)
        return CellField(
            {tuple(a + b for a, b in zip(g, g0)): v for g, v in self.values.items()}
        )

    def norm(self):
        return float(np.sqrt(sum(np.mean(np.abs(v) ** 2) for v in self.values.values())))

    def __add__(self, other):
        out = {g: np.array(v, dtype=complex) for g, v in self.values.items()}
        for g, v in other.values.items():
            out[g] = out.get(g, 0) + v
        return CellField(out)

    def scale(self, alpha):
        return CellField({g: alpha * v for g, v in self.values.items()})


@dataclass(frozen=True, eq=False)
class FloquetImage:
    zgrid: tuple  # multiplier counts M_l
    values: np.ndarray  # shape (*zgrid, *cell_shape)

    @property
    def n(self):
        return len(self.zgrid)

    def multipliers(self):
        """Sampled multipliers as an array of shape (*zgrid, n)."""
        axes = [np.exp(2j * np.pi * np.arange(M) / M) for M in self.zgrid]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def fiber_norms(self):
        cell_axes = tuple(range(self.n, self.values.ndim))
        return np.sqrt(np.mean(np.abs(self.values) ** 2, axis=cell_axes))

    def write_norms_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"m_{l + 1}" for l in range(self.n)] + ["norm_l2_cell"])
        norms = self.fiber_norms()
        for idx in np.ndindex(*self.zgrid):
            writer.writerow([str(i) for i in idx] + [f"{norms[idx]:.17g}"])


def minimal_counts(field):
    """Smallest multiplier counts that make the sampled transform invertible."""
    sup = np.array(field.support)
    return tuple(int(2 * np.max(np.abs(sup[:, l])) + 1) for l in range(field.n))


def floquet_forward(field, M=None):
    if M is None:
        M = minimal_counts(field)
    M = tuple(int(m) for m in np.atleast_1d(M))
    if len(M) != field.n:
        raise FloquetError(f"need {field.n} multiplier counts, got {len(M)}")
    need = minimal_counts(field)
    if any(m < r for m, r in zip(M, need)):
        raise FloquetError(f"aliasing: enlarge multiplier grid (need at least {need}, got {M})")
    stack = np.zeros(M + field.cell_shape, dtype=complex)
    for gamma, v in field.values.items():
        idx = tuple(g % m for g, m in zip(gamma, M))
        stack[idx] += v
    # sum_gamma v_gamma exp(-2 pi i m.gamma / M) is the forward DFT over gamma
    values = np.fft.fftn(stack, axes=tuple(range(len(M))))
    return FloquetImage(M, values)


def floquet_inverse(image, rtol=1e-13):
    """Recover the cell field; lattice points with negligible data are dropped."""
    M = image.zgrid
    stack = np.fft.ifftn(image.values, axes=tuple(range(len(M))))
    cell_axes = tuple(range(len(M), stack.ndim))
    norms = np.sqrt(np.mean(np.abs(stack) ** 2, axis=cell_axes))
    cutoff = rtol * max(float(np.max(norms)), np.finfo(float).tiny)
    out = {}
    for idx in np.ndindex(*M):
        if norms[idx] > cutoff:
            gamma = tuple(int(i if i <= m // 2 else i - m) for i, m in zip(idx, M))
            out[gamma] = stack[idx]
    if not out:
        out[(0,) * len(M)] = np.zeros(image.values.shape[len(M):], dtype=complex)
    return CellField(out)


def floquet_direct(field, z):
    """Direct summation of the defining series at an arbitrary multiplier z in (C*)^n."""
    z = np.asarray(z, dtype=complex).reshape(field.n)
    total = np.zeros(field.cell_shape, dtype=complex)
    for gamma, v in field.values.items():
        total += v * np.prod(z ** (-np.asarray(gamma)))
    return total


def plancherel_check(field, M=None):
    """Return ``(norm in space, norm of the transform)``; equal for an isometry."""
    image = floquet_forward(field, M)
    norm_image = float(np.sqrt(np.mean(image.fiber_norms() ** 2)))
    return field.norm(), norm_image
