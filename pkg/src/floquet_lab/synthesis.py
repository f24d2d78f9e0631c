"""Positive Bloch solutions on R^n and solutions synthesised from measures on Xi.

Every synthesised solution is a finite combination

    u(x) = sum_j c_j exp(xi_j . x) p_j(x)

of Bloch solutions: density measures contribute trapezoid weights at the
traced nodes, derivative atoms contribute finite-difference stencils over
nearby points of the family. Evaluation is done relative to the largest
exponent so that |x| up to ~50 stays in range.
"""

import csv
from dataclasses import dataclass, field
from math import factorial
from numbers import Number

import numpy as np
from scipy.integrate import solve_ivp

from . import _fourier
from .errors import FloquetError, MeasureError
from .geometry import _direction, ray_root, trace_xi
from .operator import apply_on_box, box_points

MAX_ORDER = 4
CONTINUITY_LIMIT = 0.5


# -- Bloch solutions ----------------------------------------------------------


def bloch_eval(node, points):
    """u_xi(x) = exp(xi . x) p_xi(x) for a traced node or a LambdaSample."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    xi = np.asarray(node.xi, dtype=float)
    p = _fourier.interpolate(node.pair.p, points)
    return np.exp(points @ xi) * p


@dataclass(frozen=True)
class BlochPoint:
    param: float
    xi: np.ndarray
    p: np.ndarray


class BlochFamily:
    """Positive Bloch solutions along the traced surface, addressable by parameter.

    Off-node parameters are resolved by a fresh ray solve, so the family is
    exact (to root-finding accuracy) rather than interpolated.
    """

    def __init__(self, surface):
        self.surface = surface
        self.coeffs = surface.coeffs
        self._cache = {}
        for node in surface.nodes:
            self._cache[float(node.param)] = BlochPoint(float(node.param), node.xi, node.pair.p)
        self.continuity = self._continuity()

    @property
    def n(self):
        return self.surface.n

    @property
    def spacing(self):
        return 2 * np.pi / len(self.surface.nodes) if self.n > 1 else 2.0

    def _continuity(self):
        nodes = self.surface.nodes
        if self.n == 1:
            return 0.0
        dists = [
            np.sqrt(np.mean((nodes[(j + 1) % len(nodes)].pair.p - nodes[j].pair.p) ** 2))
            for j in range(len(nodes))
        ]
        return float(max(dists) / self.spacing)

    def at(self, s):
        s = float(s)
        if s in self._cache:
            return self._cache[s]
        if self.n == 1:
            raise FloquetError(f"1D surface has only the parameters -1 and +1, got {s}")
        surface = self.surface
        params = surface.params
        radii = surface.radii
        guess = np.interp(s % (2 * np.pi), np.append(params, 2 * np.pi), np.append(radii, radii[0]))
        d = _direction(2, s)
        r, sample = ray_root(self.coeffs, surface.center, d, guess)
        point = BlochPoint(s, surface.center + r * d, sample.pair.p)
        self._cache[s] = point
        return point


def _fd_weights(order):
    """Central stencil (offsets, weights) of second-order accuracy for d^order/ds^order."""
    q = (order + 1) // 2
    offsets = np.arange(-q, q + 1, dtype=float)
    V = np.vander(offsets, increasing=True).T
    rhs = np.zeros(len(offsets))
    rhs[order] = factorial(order)
    return offsets, np.linalg.solve(V, rhs)


def atom_step(family, order):
    # 1e-3 of the node spacing for first derivatives, widened for higher orders
    # to keep the h^-order roundoff amplification bounded
    return family.spacing * 10.0 ** (-3.0 / order)


def atom_stencil(family, s0, order):
    """Points and weights whose combination is d^order/ds^order u_xi(s) at s0.

    Central differences at steps h and h/2 combined by Richardson extrapolation.
    """
    if order == 0:
        return [(1.0, family.at(s0))]
    if family.n == 1:
        raise FloquetError("1D surface admits no tangential derivatives; atoms must have order 0")
    if family.continuity * family.spacing > CONTINUITY_LIMIT:
        raise FloquetError(
            f"family under-resolved: continuity constant {family.continuity:.3g} too large"
        )
    h = atom_step(family, order)
    offsets, weights = _fd_weights(order)
    terms = {}
    for step, factor in ((h, -1.0 / 3.0), (h / 2, 4.0 / 3.0)):
        for o, w in zip(offsets, weights):
            if w == 0.0:
                continue
            s = s0 + o * step
            terms[s] = terms.get(s, 0.0) + factor * w / step**order
    return [(w, family.at(s)) for s, w in sorted(terms.items())]


def derivative_atom_eval(family, s0, order, points):
    if order > MAX_ORDER:
        raise MeasureError(f"unsupported distribution order {order}")
    if order == 0:
        pt = family.at(s0)
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.exp(points @ pt.xi) * _fourier.interpolate(pt.p, points)
    return _Combination.from_terms(atom_stencil(family, s0, order)).evaluate(points)


# -- measures -----------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    s: float
    weight: complex
    order: int


@dataclass(frozen=True, eq=False)
class MeasureOnXi:
    density: np.ndarray = None  # per-node density values, or None
    quad_weights: np.ndarray = None  # density times trapezoid weights
    atoms: tuple = ()

    @property
    def order(self):
        return max((a.order for a in self.atoms), default=0)

    @property
    def total_mass(self):
        mass = 0.0 if self.quad_weights is None else complex(np.sum(self.quad_weights))
        mass += sum(a.weight for a in self.atoms if a.order == 0)
        return mass

    def __add__(self, other):
        qw = _add_opt(self.quad_weights, other.quad_weights)
        dens = _add_opt(self.density, other.density)
        return MeasureOnXi(dens, qw, self.atoms + other.atoms)

    def __rmul__(self, alpha):
        return MeasureOnXi(
            None if self.density is None else alpha * self.density,
            None if self.quad_weights is None else alpha * self.quad_weights,
            tuple(Atom(a.s, alpha * a.weight, a.order) for a in self.atoms),
        )

    def is_positive(self):
        if any(a.order > 0 for a in self.atoms):
            return False
        vals = [a.weight for a in self.atoms]
        if self.quad_weights is not None:
            vals += list(self.quad_weights)
        vals = np.asarray(vals, dtype=complex)
        return bool(np.all(vals.imag == 0) and np.all(vals.real >= 0) and np.any(vals.real > 0))


def _add_opt(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return x + y


def _as_weight(w):
    if isinstance(w, (list, tuple)):
        if len(w) != 2:
            raise MeasureError(f"complex weight must be [re, im], got {w!r}")
        w = complex(w[0], w[1])
    if not isinstance(w, Number):
        raise MeasureError(f"weight must be numeric, got {w!r}")
    if not np.isfinite(w):
        raise MeasureError("measure weights must be finite (got NaN or inf)")
    return w


def trapezoid_weights(surface):
    M = len(surface.nodes)
    if surface.n == 1:
        return np.ones(M)
    return np.full(M, 2 * np.pi / M)


def make_measure(spec, surface=None):
    """Validated measure from ``{"density": ..., "atoms": [{"s", "weight", "order"}]}``.

    In 2D the density is integrated with the trapezoid rule in the angle
    parameter; in 1D the "density" is a weight per point of Xi.
    """
    density = spec.get("density")
    dens = qw = None
    if density is not None:
        if surface is None:
            raise MeasureError("a density needs the traced surface")
        M = len(surface.nodes)
        if isinstance(density, Number):
            dens = np.full(M, _as_weight(density))
        else:
            dens = np.array([_as_weight(d) for d in density])
            if dens.shape != (M,):
                raise MeasureError(f"density needs {M} node values, got {dens.shape}")
        qw = dens * trapezoid_weights(surface)
    atoms = []
    for raw in spec.get("atoms", []):
        order = int(raw.get("order", 0))
        if order < 0 or order > MAX_ORDER:
            raise MeasureError(f"unsupported distribution order {order}")
        s = float(raw["s"])
        if not np.isfinite(s):
            raise MeasureError("atom parameter must be finite")
        atoms.append(Atom(s, _as_weight(raw.get("weight", 1.0)), order))
    return MeasureOnXi(dens, qw, tuple(atoms))


# -- synthesis ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Combination:
    coef: np.ndarray  # (C,) complex
    xis: np.ndarray  # (C, n)
    ps: np.ndarray  # (C, *grid)

    @classmethod
    def from_terms(cls, terms):
        coef = np.array([w for w, _ in terms], dtype=complex)
        xis = np.array([pt.xi for _, pt in terms], dtype=float)
        ps = np.array([pt.p for _, pt in terms], dtype=float)
        return cls(coef, xis, ps)

    def scaled_parts(self, points):
        """(mantissa, log_scale) with u = mantissa * exp(log_scale)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(self.coef) == 0:
            return np.zeros(len(points), dtype=complex), np.zeros(len(points))
        X = points @ self.xis.T
        shift = np.max(X, axis=1)
        P = _fourier.interpolate_many(self.ps, points)
        mant = np.sum(self.coef[None, :] * np.exp(X - shift[:, None]) * P, axis=1)
        return mant, shift

    def evaluate(self, points):
        mant, shift = self.scaled_parts(points)
        return mant * np.exp(shift)


@dataclass(frozen=True, eq=False)
class SynthesizedSolution:
    family: BlochFamily = field(repr=False)
    measure: MeasureOnXi
    combination: _Combination = field(repr=False)

    @property
    def order(self):
        return self.measure.order

    def __call__(self, points):
        return self.combination.evaluate(points)

    def log_abs(self, points):
        mant, shift = self.combination.scaled_parts(points)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(mant)) + shift

    def write_csv(self, fh, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = self(points)
        logs = self.log_abs(points)
        writer = csv.writer(fh, lineterminator="\n")
        n = points.shape[1]
        writer.writerow([f"x_{l + 1}" for l in range(n)] + ["re_u", "im_u", "log_abs_u"])
        for x, v, lg in zip(points, values, logs):
            writer.writerow(
                [f"{t:.17g}" for t in x] + [f"{v.real:.17g}", f"{v.imag:.17g}", f"{lg:.17g}"]
            )


def synthesize(family, mu):
    terms = []
    if mu.quad_weights is not None:
        if len(mu.quad_weights) != len(family.surface.nodes):
            raise MeasureError("density does not match the family's node count")
        for w, node in zip(mu.quad_weights, family.surface.nodes):
            terms.append((w, family.at(node.param)))
    for atom in mu.atoms:
        for w, pt in atom_stencil(family, atom.s, atom.order):
            terms.append((atom.weight * w, pt))
    return SynthesizedSolution(family, mu, _Combination.from_terms(terms))


def residual_norm(coeffs, u, lower, upper, spacing):
    """Relative residual ||P_h u|| / ||u|| over the interior nodes of a box."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    shape = tuple(int(round(w / spacing)) + 1 for w in upper - lower)
    pts = box_points(lower, spacing, shape)
    values = u(pts.reshape(-1, len(shape))).reshape(shape)
    interior = tuple(slice(1, -1) for _ in shape)
    denom = np.linalg.norm(values[interior])
    if denom < 1e-300:
        raise FloquetError("solution vanishes on box")
    return float(np.linalg.norm(apply_on_box(coeffs, values, lower, spacing)) / denom)


def envelope_fit(u, h, rays, radii, calibration=None):
    """Fit log|u(r w)| against the growth envelope on each ray.

    The model is log|u| - h(w) r = (rate - h(w)) r + N log(1 + r) + const,
    fitted by least squares on ``radii``; ``rate`` is the asymptotic
    exponential rate. ``log_C`` is then the smallest constant with
    log|u| <= h r + N log(1 + r) + log_C on the ``calibration`` radii, which
    default to a 0.05-spaced grid on [0, max(radii)].
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    if radii[-1] > 50:
        raise ValueError("radii beyond 50 are not supported")
    if calibration is None:
        calibration = np.linspace(0.0, radii[-1], int(round(radii[-1] / 0.05)) + 1)
    calibration = np.union1d(np.asarray(calibration, dtype=float), radii)
    results = []
    for omega in rays:
        omega = np.asarray(omega, dtype=float)
        h_val = float(h(omega))
        logs = u.log_abs(radii[:, None] * omega[None, :])
        ok = np.isfinite(logs)
        if ok.sum() < 3:
            results.append({"omega": omega.tolist(), "h": h_val, "skipped": True})
            continue
        r = radii[ok]
        y = logs[ok] - h_val * r
        design = np.column_stack([r, np.log1p(r), np.ones_like(r)])
        (lin, N, _), *_ = np.linalg.lstsq(design, y, rcond=None)
        cal_logs = u.log_abs(calibration[:, None] * omega[None, :])
        excess = cal_logs - h_val * calibration - N * np.log1p(calibration)
        log_C = float(np.max(excess[np.isfinite(excess)]))
        results.append(
            {
                "omega": omega.tolist(),
                "h": h_val,
                "rate": float(lin + h_val),
                "N_fit": float(N),
                "log_C": log_C,
                "skipped": False,
            }
        )
    return results


def envelope_violation(u, fit, radii, slack=0.5):
    """Largest excess of log|u| over h r + (N + slack) log(1 + r) + log_C on a ray."""
    omega = np.asarray(fit["omega"], dtype=float)
    radii = np.asarray(radii, dtype=float)
    logs = u.log_abs(radii[:, None] * omega[None, :])
    bound = fit["h"] * radii + (fit["N_fit"] + slack) * np.log1p(radii) + fit["log_C"]
    excess = logs - bound
    return float(np.max(excess[np.isfinite(excess)]))


def positivity_check(u, points):
    """True iff Re u > 0 and Im u is negligible at every sample point.

    Guaranteed for nonnegative measures without derivative atoms; for other
    measures the check simply reports what the samples show.
    """
    values = u(points)
    return bool(np.all(values.real > 0) and np.all(np.abs(values.imag) <= 1e-10 * np.abs(values)))


# -- 1D completeness ----------------------------------------------------------


def integrate_ode(coeffs, u0, du0, x_eval, rtol=1e-12, atol=1e-14):
    """Solve -a u'' + b u' + c u = 0 on the line (1D) from data at x = 0."""
    if coeffs.n != 1:
        raise FloquetError("ODE integration is only available in 1D")

    def rhs(x, y):
        a, b, c = coeffs.evaluate([[x]])
        return [y[1], (b[0, 0] * y[1] + c[0] * y[0]) / a[0, 0, 0]]

    x_eval = np.asarray(x_eval, dtype=float)
    sol = solve_ivp(
        rhs, (0.0, float(x_eval.max())), [u0, du0], method="DOP853",
        t_eval=x_eval, rtol=rtol, atol=atol,
    )
    if not sol.success:
        raise FloquetError(f"ODE integration failed: {sol.message}")
    return sol.y[0]


def ode_completeness_1d(coeffs, u0, du0, surface=None):
    """Decompose an ODE solution over the two positive Bloch solutions.

    Returns ``(alpha, beta, max_mismatch)`` with u ~ alpha u_- + beta u_+.
    """
    if coeffs.n != 1:
        raise FloquetError("ode_completeness_1d needs a 1D operator")
    if surface is None:
        surface = trace_xi(coeffs)
    lo, hi = sorted(surface.nodes, key=lambda node: node.xi[0])
    if abs(hi.xi[0] - lo.xi[0]) < 1e-10:
        raise FloquetError("Xi is a single point")
    xs = np.arange(7.0)
    u = integrate_ode(coeffs, u0, du0, xs)
    basis = np.column_stack([bloch_eval(lo, xs[:, None]).real, bloch_eval(hi, xs[:, None]).real])
    G = basis[:2]
    if np.linalg.cond(G) > 1e8:
        raise FloquetError("Bloch solutions nearly dependent")
    alpha, beta = np.linalg.solve(G, u[:2])
    recon = basis @ np.array([alpha, beta])
    mismatch = np.abs(u[2:] - recon[2:]) / np.maximum(1.0, np.abs(u[2:]))
    return float(alpha), float(beta), float(np.max(mismatch))

