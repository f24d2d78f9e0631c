"""Dense eigen-machinery: principal eigenpairs, band functions, Fermi tests."""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateEigenvalueError, FloquetError, PositivityError
from .operator import assemble, formal_adjoint

POSITIVITY_TOL = 1e-8
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PrincipalEigenpair:
    """Principal eigenvalue of a conjugated torus operator.

    ``p`` is normalised to unit mean (the integral over the unit cell) and
    ``psi`` to unit bilinear pairing with ``p``.
    """

    lam: float
    p: np.ndarray
    psi: np.ndarray
    right_residual: float
    left_residual: float
    gap: float
    spectrum: np.ndarray
    scale: float  # infinity norm of the matrix, for relative residual checks

    def pairing(self, f, g):
        return pairing(f, g)


def pairing(f, g):
    """Bilinear pairing <g, f> = integral over the unit cell of f g."""
    return np.mean(np.asarray(f) * np.asarray(g))


def _align(v):
    """Rotate ``v`` so its largest-modulus entry is real positive."""
    j = np.argmax(np.abs(v))
    return v * (np.abs(v[j]) / v[j])


def _positive_part(v, label):
    v = _align(v)
    vmax = np.max(np.abs(v))
    if np.min(v.real) <= -POSITIVITY_TOL * vmax or np.max(np.abs(v.imag)) > POSITIVITY_TOL * vmax:
        raise PositivityError(
            f"positivity violation in {label} eigenvector "
            f"(min {np.min(v.real) / vmax:.3e} relative); refine the grid"
        )
    if np.min(v.real) <= 0.0:
        raise PositivityError(f"positivity violation in {label} eigenvector (zero entry)")
    return v.real


def _inverse_iteration(A, lam, steps=3):
    """Right and left (bilinear, A^T psi = lam psi) eigenvectors for ``lam``."""
    size = A.shape[0]
    scale = np.max(np.abs(A))
    shift = lam + 1e-12 * scale * (1 + 1j)
    lu = scipy.linalg.lu_factor(A - shift * np.eye(size), check_finite=False)
    right = np.ones(size, dtype=complex)
    left = np.ones(size, dtype=complex)
    for _ in range(steps):
        right = scipy.linalg.lu_solve(lu, right, check_finite=False)
        right /= np.linalg.norm(right)
        left = scipy.linalg.lu_solve(lu, left, trans=1, check_finite=False)
        left /= np.linalg.norm(left)
    return right, left


def _principal_index(w):
    # smallest real part; ties by imaginary part
    order = np.lexsort((np.abs(w.imag), w.real))
    return order[0]


def principal_eigenpair(op):
    """Principal eigenpair of an operator assembled at k = -i xi with xi real."""
    if not np.allclose(np.real(op.k), 0.0, atol=0.0):
        raise FloquetError("principal_eigenpair needs a purely imaginary quasimomentum k = -i xi")
    A = op.matrix
    w = scipy.linalg.eigvals(A, check_finite=False)
    i0 = _principal_index(w)
    lam = w[i0]
    if abs(lam.imag) > 1e-8 * (1.0 + abs(lam)):
        raise PositivityError(f"principal eigenvalue is not real: {lam}")
    rest = np.delete(w.real, i0)
    gap = float(np.min(np.abs(rest - lam.real))) if rest.size else np.inf
    if gap < DEGENERACY_TOL:
        raise DegenerateEigenvalueError(f"near-degenerate principal eigenvalue (gap {gap:.3e})")
    right, left = _inverse_iteration(A, lam)
    p = _positive_part(right, "right")
    psi = _positive_part(left, "left")
    p = p / np.mean(p)
    psi = psi / pairing(p, psi)
    lam = float(lam.real)
    right_res = float(np.linalg.norm(A @ p - lam * p) / np.linalg.norm(p))
    left_res = float(np.linalg.norm(A.T @ psi - lam * psi) / np.linalg.norm(psi))
    scale = float(np.max(np.sum(np.abs(A), axis=1)))
    grid_shape = op.coeffs.grid.shape
    return PrincipalEigenpair(
        lam, p.reshape(grid_shape), psi.reshape(grid_shape), right_res, left_res, gap, w, scale
    )


@dataclass(frozen=True)
class BandStructure:
    path: np.ndarray  # (K, n) real quasimomenta
    bands: np.ndarray  # (K, m) complex eigenvalues sorted by real part

    def to_csv(self, fh):
        n = self.path.shape[1]
        m = self.bands.shape[1]
        writer = csv.writer(fh, lineterminator="\n")
        header = [f"k_{l + 1}" for l in range(n)]
        for j in range(m):
            header += [f"re_lambda_{j + 1}", f"im_lambda_{j + 1}"]
        writer.writerow(header)
        for k, row in zip(self.path, self.bands):
            line = [f"{v:.17g}" for v in k]
            for lam in row:
                line += [f"{lam.real:.17g}", f"{lam.imag:.17g}"]
            writer.writerow(line)


def sorted_spectrum(matrix):
    w = np.linalg.eigvals(matrix)
    return w[np.lexsort((w.imag, w.real))]


def band_functions(coeffs, path, m):
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[1] != coeffs.n:
        path = path.reshape(-1, coeffs.n)
    if m > coeffs.grid.size // 2:
        raise ValueError(f"m = {m} exceeds half the node count ({coeffs.grid.size // 2})")
    bands = np.array([sorted_spectrum(assemble(coeffs, k).matrix)[:m] for k in path])
    return BandStructure(path, bands)


def fermi_membership(coeffs, k, tol=1e-8):
    """Whether k lies (within ``tol``) on the Fermi surface at energy zero."""
    w = np.linalg.eigvals(assemble(coeffs, k).matrix)
    dist = float(np.min(np.abs(w)))
    return dist <= tol, dist


def match_spectra(w1, w2):
    """Max distance of the optimal one-to-one matching between two point sets."""
    cost = np.abs(np.subtract.outer(w1, w2))
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def dual_dispersion_check(coeffs, k, count=None):
    """Compare spectra of P* at k with spectra of P at -k.

    Only the ``count`` eigenvalues of smallest real part are matched: the top
    of a collocation spectrum is discretisation artefact and differs between
    the two assemblies.
    """
    k = np.asarray(k, dtype=complex).reshape(coeffs.n)
    size = coeffs.grid.size
    if count is None:
        count = max(1, min(8, size // 4))
    adj = formal_adjoint(coeffs)
    w_adj = sorted_spectrum(assemble(adj, k).matrix)[:count]
    w_neg = sorted_spectrum(assemble(coeffs, -k).matrix)
    # allow the matching to pick from a slightly longer window
    w_neg = w_neg[: min(size, 2 * count)]
    cost = np.abs(np.subtract.outer(w_adj, w_neg))
    rows, cols = linear_sum_assignment(cost)
    distance = float(np.max(cost[rows, cols]))
    return {
        "k": k,
        "count": count,
        "adjoint_at_k": w_adj,
        "original_at_minus_k": w_neg[np.sort(cols)],
        "max_distance": distance,
    }
