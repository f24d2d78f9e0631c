"""Lambda(xi), its maximiser, the zero surface Xi and its support function.

Lambda(xi) is the principal eigenvalue of the conjugated torus operator
exp(-xi.x) P exp(xi.x); it is strictly concave, so the zero level set Xi is
traced radially about the maximiser.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import ConvexHull

from . import _fourier
from .errors import ConvergenceError, DegenerateEigenvalueError, HypothesisError
from .operator import (
    AssembledOperator,
    assemble_from,
    conjugation_k,
    derivative_matrices,
    formal_adjoint,
    xi_derivative_matrix,
)
from .spectral import pairing, principal_eigenpair

TOL_POS = 1e-8
GRADIENT_TOL = 1e-10
HESSIAN_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class LambdaSample:
    xi: np.ndarray
    lam: float
    pair: object = field(repr=False)


def _conjugated(coeffs, xi):
    xi = np.asarray(xi, dtype=float).reshape(coeffs.n)
    k = conjugation_k(xi)
    D1, D2 = derivative_matrices(coeffs.grid, k)
    return xi, k, D1, D2


def lambda_at(coeffs, xi):
    xi, k, D1, D2 = _conjugated(coeffs, xi)
    op = AssembledOperator(k, assemble_from(coeffs, D1, D2), coeffs)
    pair = principal_eigenpair(op)
    return LambdaSample(xi, pair.lam, pair)


def lambda_value(coeffs, xi):
    return lambda_at(coeffs, xi).lam


def lambda_gradient(coeffs, xi, sample=None):
    """Gradient of Lambda by first-order eigenvalue perturbation."""
    xi, k, D1, D2 = _conjugated(coeffs, xi)
    if sample is None:
        op = AssembledOperator(k, assemble_from(coeffs, D1, D2), coeffs)
        pair = principal_eigenpair(op)
    else:
        pair = sample.pair
    if pair.gap <= 1e-8:
        raise DegenerateEigenvalueError(f"gradient undefined: spectral gap {pair.gap:.2e}")
    p = pair.p.ravel()
    psi = pair.psi.ravel()
    grad = np.empty(coeffs.n)
    for l in range(coeffs.n):
        dA = xi_derivative_matrix(coeffs, D1, l)
        grad[l] = (pairing(dA @ p, psi) / pairing(p, psi)).real
    return grad


def lambda_hessian(coeffs, xi, step=HESSIAN_STEP):
    """Symmetrised central differences of the analytic gradient.

    Returns ``(hessian, eigenvalues)``.
    """
    xi = np.asarray(xi, dtype=float).reshape(coeffs.n)
    n = coeffs.n
    H = np.empty((n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = step
        H[:, l] = (lambda_gradient(coeffs, xi + e) - lambda_gradient(coeffs, xi - e)) / (2 * step)
    H = 0.5 * (H + H.T)
    if not np.all(np.isfinite(H)):
        raise ConvergenceError("Hessian step collapsed; coefficients may be under-resolved")
    return H, np.linalg.eigvalsh(H)


def maximize_lambda(coeffs, start=None, tol=GRADIENT_TOL, max_iter=60):
    """Damped Newton ascent on the concave Lambda. Returns ``(lambda0, xi_star)``."""
    n = coeffs.n
    xi = np.zeros(n) if start is None else np.asarray(start, dtype=float).reshape(n)
    sample = lambda_at(coeffs, xi)
    for _ in range(max_iter):
        g = lambda_gradient(coeffs, xi, sample)
        if np.linalg.norm(g) <= tol:
            return sample.lam, xi
        H, evals = lambda_hessian(coeffs, xi)
        if np.max(evals) < 0:
            step = -np.linalg.solve(H, g)
        else:
            step = g / max(1.0, np.linalg.norm(g))
        t = 1.0
        while True:
            trial = lambda_at(coeffs, xi + t * step)
            if trial.lam >= sample.lam - 1e-14 * (1 + abs(sample.lam)):
                break
            t *= 0.5
            if t < 1e-10:
                raise ConvergenceError(
                    f"Lambda failed to increase along the Newton direction at xi={xi.tolist()} "
                    f"(gradient norm {np.linalg.norm(g):.3e}); concavity violated at resolved scale"
                )
        if np.linalg.norm(t * step) < 1e-15 * (1 + np.linalg.norm(xi)):
            # stagnation at roundoff level
            return trial.lam, xi + t * step
        xi = xi + t * step
        sample = trial
    g = lambda_gradient(coeffs, xi, sample)
    if np.linalg.norm(g) <= 1e3 * tol:
        return sample.lam, xi
    raise ConvergenceError(f"maximize_lambda did not converge (gradient norm {np.linalg.norm(g):.3e})")


# -- the zero surface ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class XiNode:
    param: float
    xi: np.ndarray
    radius: float
    pair: object = field(repr=False)


@dataclass(frozen=True, eq=False)
class XiSurface:
    center: np.ndarray
    lambda0: float
    nodes: tuple
    hull_vertices: np.ndarray
    coeffs: object = field(repr=False)

    @property
    def n(self):
        return len(self.center)

    @property
    def points(self):
        return np.array([node.xi for node in self.nodes])

    @property
    def params(self):
        return np.array([node.param for node in self.nodes])

    @property
    def radii(self):
        return np.array([node.radius for node in self.nodes])

    def residuals(self):
        return np.array([node.pair.lam for node in self.nodes])

    def is_convex(self):
        if self.n == 1:
            return True
        pts = self.points
        d = np.roll(pts, -1, axis=0) - pts
        cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
        return bool(np.all(cross > 0) or np.all(cross < 0))


def _direction(n, param):
    if n == 1:
        return np.array([float(np.sign(param))])
    return np.array([np.cos(param), np.sin(param)])


def ray_root(coeffs, center, direction, guess=None, xtol=1e-13):
    """Radius r > 0 with Lambda(center + r * direction) = 0."""
    direction = np.asarray(direction, dtype=float)
    limit = 10.0 * (1.0 + np.linalg.norm(center))

    def f(r):
        return lambda_value(coeffs, center + r * direction)

    lo, hi = 0.0, 0.5
    if guess:
        if f(0.8 * guess) > 0:
            lo, hi = 0.8 * guess, 1.2 * guess
        else:
            hi = 0.8 * guess
    f_hi = f(hi)
    while f_hi > 0:
        lo = hi
        hi *= 2.0
        if hi > limit:
            raise ConvergenceError(
                f"no sign change of Lambda within radius {limit:g} along {direction.tolist()}"
            )
        f_hi = f(hi)
    r = brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    # Newton polish with the analytic gradient
    sample = lambda_at(coeffs, center + r * direction)
    slope = lambda_gradient(coeffs, sample.xi, sample) @ direction
    if slope < 0:
        r_new = r - sample.lam / slope
        if abs(r_new - r) < 1e-8 and lo <= r_new <= hi:
            polished = lambda_at(coeffs, center + r_new * direction)
            if abs(polished.lam) < abs(sample.lam):
                return r_new, polished
    return r, sample


def trace_xi(coeffs, node_count=64, tol_pos=TOL_POS, start=None):
    """Trace the zero level set of Lambda.

    In 1D the surface is the pair of roots on either side of the maximiser
    (params -1 and +1); in 2D it is sampled at ``node_count`` equally spaced
    angles about the maximiser.
    """
    lambda0, center = maximize_lambda(coeffs, start)
    if lambda0 <= tol_pos:
        raise HypothesisError(
            f"theorem hypothesis violated: Λ₀ must be positive (Λ₀ = {lambda0:.6g})"
        )
    n = coeffs.n
    nodes = []
    if n == 1:
        params = [-1.0, 1.0]
    else:
        params = list(2 * np.pi * np.arange(node_count) / node_count)
    guess = None
    for s in params:
        d = _direction(n, s)
        r, sample = ray_root(coeffs, center, d, guess)
        nodes.append(XiNode(float(s), center + r * d, float(r), sample.pair))
        if n > 1:
            guess = r
    pts = np.array([node.xi for node in nodes])
    if n == 1:
        hull = np.array([int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))])
    else:
        hull = ConvexHull(pts).vertices
    return XiSurface(center, float(lambda0), tuple(nodes), np.asarray(hull), coeffs)


@dataclass(frozen=True, eq=False)
class IndicatorFn:
    """Support function h(omega) = max over the hull of omega . xi.

    With ``refine=True`` (2D only) the polygon value is polished by
    maximising omega . xi(theta) over the true curve between the neighbours
    of the best vertex, which removes the O(spacing^2) polygon bias.
    """

    surface: XiSurface
    refine: bool = False

    def __call__(self, omega):
        return indicator(self.surface, omega, refine=self.refine)


def indicator(surface, omega, refine=False):
    omega = np.asarray(omega, dtype=float).reshape(surface.n)
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise ValueError(f"omega must be a unit vector (norm {np.linalg.norm(omega)!r})")
    pts = surface.points
    verts = pts[surface.hull_vertices]
    values = verts @ omega
    best = float(np.max(values))
    if not refine or surface.n == 1:
        return best
    j = int(np.argmax(pts @ omega))
    M = len(pts)
    dtheta = 2 * np.pi / M
    theta0 = surface.nodes[j].param
    coeffs = surface.coeffs
    center = surface.center

    def neg_support(theta):
        d = _direction(2, theta)
        r, _ = ray_root(coeffs, center, d, surface.nodes[j].radius)
        return -float((center + r * d) @ omega)

    res = minimize_scalar(
        neg_support,
        bounds=(theta0 - dtheta, theta0 + dtheta),
        method="bounded",
        options={"xatol": 1e-9},
    )
    return max(best, -float(res.fun))


# -- sign criteria for lambda0 ------------------------------------------------


def _integral(f):
    return float(np.mean(f))


def lambda0_sign_report(coeffs, tol_pos=TOL_POS):
    """Numerical evaluation of the classical sign criteria for Lambda0."""
    lambda0, xi_star = maximize_lambda(coeffs)
    n = coeffs.n
    c_min = float(np.min(coeffs.c))
    report = {
        "lambda0": lambda0,
        "xi_star": xi_star.tolist(),
        "c_min": c_min,
        "c_nonnegative_implies_lambda0_nonnegative": c_min >= 0.0,
        "lambda0_nonnegative": lambda0 >= -tol_pos,
        "lambda0_positive": lambda0 > tol_pos,
    }
    adjoint = formal_adjoint(coeffs)
    c_zero = bool(np.max(np.abs(coeffs.c)) == 0.0)
    report["c_identically_zero"] = c_zero
    if c_zero:
        psi = lambda_at(adjoint, np.zeros(n)).pair.p
        psi = psi / np.mean(psi)
        drift_integral = [_integral(coeffs.b[i] * psi) for i in range(n)]
        report["drift_integral"] = drift_integral
        report["drift_integral_zero"] = bool(np.max(np.abs(drift_integral)) <= tol_pos)
        report["drift_criterion_consistent"] = report["drift_integral_zero"] == (abs(lambda0) <= tol_pos)
    # gamma vector: needs positive Bloch solutions of Pu = 0, i.e. xi on the zero level
    if lambda0 > tol_pos:
        e = np.zeros(n)
        e[0] = 1.0
        r, _ = ray_root(coeffs, xi_star, e)
        xi0 = xi_star + r * e
    elif lambda0 >= -tol_pos:
        xi0 = xi_star
    else:
        xi0 = None
    if xi0 is not None:
        gamma = gamma_vector(coeffs, adjoint, xi0)
        report["gamma_xi"] = xi0.tolist()
        report["gamma"] = gamma.tolist()
        report["gamma_zero"] = bool(np.max(np.abs(gamma)) <= tol_pos)
        report["gamma_criterion_consistent"] = report["gamma_zero"] == (abs(lambda0) <= tol_pos)
    return report


def gamma_vector(coeffs, adjoint, xi):
    """Integrals of b~_i psi with psi = p_xi * p*_{-xi} (unit mean)."""
    n = coeffs.n
    xi = np.asarray(xi, dtype=float)
    p = lambda_at(coeffs, xi).pair.p
    p_adj = lambda_at(adjoint, -xi).pair.p
    psi = p * p_adj
    psi = psi / np.mean(psi)
    log_grad = [_fourier.derivative(p, axis=j) / p for j in range(n)]
    gamma = np.empty(n)
    for i in range(n):
        b_tilde = coeffs.b[i] - 2.0 * sum(coeffs.a[i, j] * (xi[j] + log_grad[j]) for j in range(n))
        gamma[i] = _integral(b_tilde * psi)
    return gamma


# -- tube exclusivity ---------------------------------------------------------


def tube_margin(coeffs, beta, xi):
    """Smallest |eigenvalue| at k = beta - i xi and whether the point is exempt."""
    beta = np.asarray(beta, dtype=float).reshape(coeffs.n)
    xi = np.asarray(xi, dtype=float).reshape(coeffs.n)
    D1, D2 = derivative_matrices(coeffs.grid, beta - 1j * xi)
    w = np.linalg.eigvals(assemble_from(coeffs, D1, D2))
    margin = float(np.min(np.abs(w)))
    lattice_dist = np.max(np.abs(beta - 2 * np.pi * np.round(beta / (2 * np.pi))))
    exempt = False
    if lattice_dist <= 1e-3:
        exempt = abs(lambda_value(coeffs, xi)) <= 1e-6
    return margin, exempt


def _interior_point(surface, rng):
    if surface.n == 1:
        lo, hi = np.sort(surface.points[:, 0])
        return np.array([rng.uniform(lo, hi)])
    theta = rng.uniform(0, 2 * np.pi)
    params = surface.params
    radii = surface.radii
    r = np.interp(theta, np.append(params, 2 * np.pi), np.append(radii, radii[0]))
    t = 0.98 * np.sqrt(rng.uniform())
    return surface.center + t * r * _direction(2, theta)


def tube_exclusivity_check(coeffs, surface, samples=200, seed=0, threshold=1e-6):
    rng = np.random.default_rng(seed)
    n = coeffs.n
    margins = []
    violations = []
    exempt_count = 0
    for _ in range(samples):
        beta = rng.uniform(-np.pi, np.pi, size=n)
        xi = _interior_point(surface, rng)
        margin, exempt = tube_margin(coeffs, beta, xi)
        if exempt:
            exempt_count += 1
            continue
        margins.append(margin)
        if margin <= threshold:
            violations.append({"beta": beta.tolist(), "xi": xi.tolist(), "margin": margin})
    return {
        "samples": samples,
        "seed": seed,
        "exempt": exempt_count,
        "min_margin": float(min(margins)) if margins else float("inf"),
        "violations": violations,
        "passed": not violations,
    }
