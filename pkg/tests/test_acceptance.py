"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test prints a single PASS/FAIL line; the lines are repeated in a
summary section at the end of the pytest run.
"""

import time

import numpy as np
import pytest

from floquet_lab import (
    BlochFamily,
    IndicatorFn,
    CellField,
    envelope_fit,
    floquet_forward,
    floquet_inverse,
    formal_adjoint,
    lambda0_sign_report,
    lambda_hessian,
    make_measure,
    ode_completeness_1d,
    plancherel_check,
    residual_norm,
    synthesize,
    trace_xi,
    tube_exclusivity_check,
)
from floquet_lab.geometry import lambda_value
from floquet_lab.synthesis import envelope_violation

from conftest import coeffs_1d, coeffs_2d, record

pytestmark = pytest.mark.acceptance


def bessel_i0(r, terms=80):
    total = np.zeros_like(r)
    term = np.ones_like(r)
    for m in range(terms):
        total += term
        term = term * (r / 2) ** 2 / (m + 1) ** 2
    return total


def test_criterion_01_constant_coefficient_closed_form():
    rng = np.random.default_rng(1)
    A = np.array([[1.3, 0.4], [0.4, 0.9]])
    b = np.array([0.6, -0.8])
    c = 0.45
    coeffs = coeffs_2d(a=A, b=b, c=c, size=16)
    xis = rng.uniform(-1.5, 1.5, size=(25, 2))
    start = time.perf_counter()
    errors = [abs(lambda_value(coeffs, xi) - (-xi @ A @ xi + b @ xi + c)) for xi in xis]
    elapsed = time.perf_counter() - start
    worst = max(errors)
    ok = worst <= 1e-10 and elapsed < 5.0
    record(1, "constant-coefficient Lambda closed form, 25 xi on 16x16", ok,
           f"max error {worst:.2e} <= 1e-10, runtime {elapsed:.2f} s < 5 s")
    assert ok


def test_criterion_02_duality(mathieu_drift):
    adjoint = formal_adjoint(mathieu_drift)
    xis = np.linspace(-2.0, 2.5, 10)
    worst = max(abs(lambda_value(adjoint, [x]) - lambda_value(mathieu_drift, [-x])) for x in xis)
    ok = worst <= 1e-8
    record(2, "Lambda_{P*}(xi) = Lambda_P(-xi), Mathieu with drift, 10 xi", ok,
           f"max defect {worst:.2e} <= 1e-8")
    assert ok


def test_criterion_03_concavity_and_hessian(mathieu_drift, periodic_2d, periodic_2d_surface):
    rng = np.random.default_rng(3)
    slack_worst = -np.inf
    for coeffs, n in ((mathieu_drift, 1), (periodic_2d, 2)):
        for _ in range(20):
            x, y = rng.uniform(-1.5, 1.5, size=(2, n))
            mid = lambda_value(coeffs, (x + y) / 2)
            chord = 0.5 * (lambda_value(coeffs, x) + lambda_value(coeffs, y))
            slack_worst = max(slack_worst, chord - mid)
    hess_worst = -np.inf
    surface_1d = trace_xi(mathieu_drift)
    for coeffs, surface in ((mathieu_drift, surface_1d), (periodic_2d, periodic_2d_surface)):
        for xi in [surface.center] + [node.xi for node in surface.nodes]:
            hess_worst = max(hess_worst, float(np.max(lambda_hessian(coeffs, xi)[1])))
    ok = slack_worst <= 1e-9 and hess_worst <= -1e-6
    record(3, "midpoint concavity (20 pairs, 1D and 2D) and Hessian at xi* and Xi nodes", ok,
           f"worst chord excess {slack_worst:.2e} <= 1e-9, max Hessian eigenvalue "
           f"{hess_worst:.3e} <= -1e-6")
    assert ok


def test_criterion_04_xi_geometry(circle, ellipse):
    radius_err = float(np.max(np.abs(circle.radii - 1.0)))
    h_err = 0.0
    h = IndicatorFn(ellipse, refine=True)
    for theta in 2 * np.pi * np.arange(32) / 32:
        w = np.array([np.cos(theta), np.sin(theta)])
        h_err = max(h_err, abs(h(w) - np.sqrt(w[0] ** 2 + w[1] ** 2 / 4)))
    drift = trace_xi(coeffs_1d(b=1.0, size=32))
    pts_err = float(np.max(np.abs(np.sort(drift.points[:, 0]) - [0.0, 1.0])))
    ok = radius_err <= 1e-6 and h_err <= 1e-6 and pts_err <= 1e-10
    record(4, "Xi geometry: circle radii, ellipse support function, 1D drift {0, 1}", ok,
           f"radius {radius_err:.1e} <= 1e-6, h {h_err:.1e} <= 1e-6, "
           f"drift points {pts_err:.1e} <= 1e-10")
    assert ok


def test_criterion_05_lambda0_sign(divergence_form):
    div = lambda0_sign_report(divergence_form)
    div_gamma = max(abs(g) for g in div["gamma"])
    div_ok = abs(div["lambda0"]) <= 1e-7 and div_gamma <= 1e-7
    drift_defects = []
    for b0 in (0.7, 1.0, -1.4):
        rep = lambda0_sign_report(coeffs_1d(b=b0, size=32))
        drift_defects.append(max(abs(rep["lambda0"] - b0**2 / 4), abs(rep["drift_integral"][0] - b0)))
    drift_worst = max(drift_defects)
    ok = div_ok and drift_worst <= 1e-8
    record(5, "Lambda0 sign: divergence form Lambda0 = 0, drift Lambda0 = b0^2/4", ok,
           f"divergence |Lambda0| {abs(div['lambda0']):.1e}, |int b~ psi| {div_gamma:.1e} "
           f"<= 1e-7; drift defect {drift_worst:.1e} <= 1e-8")
    assert ok


def test_criterion_06_plancherel_and_round_trip():
    rng = np.random.default_rng(6)
    iso_worst = trip_worst = 0.0
    for trial in range(20):
        n = 1 + trial % 2
        support = {tuple(rng.integers(-3, 4, size=n)) for _ in range(rng.integers(1, 8))}
        cell = (8,) * n
        field = CellField({g: rng.standard_normal(cell) + 1j * rng.standard_normal(cell) for g in support})
        norm_space, norm_image = plancherel_check(field)
        iso_worst = max(iso_worst, abs(norm_image - norm_space) / norm_space)
        back = floquet_inverse(floquet_forward(field))
        scale = max(np.max(np.abs(v)) for v in field.values.values())
        for g in set(back.values) | set(field.values):
            diff = back.values.get(g, 0) - field.values.get(g, 0)
            trip_worst = max(trip_worst, float(np.max(np.abs(diff))) / scale)
    ok = iso_worst <= 1e-12 and trip_worst <= 1e-12
    record(6, "Floquet transform isometry and round trip, 20 random fields", ok,
           f"isometry defect {iso_worst:.1e}, round trip {trip_worst:.1e} <= 1e-12")
    assert ok


def test_criterion_07_representation(helmholtz, circle):
    family = BlochFamily(circle)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-5, 5, size=(400, 2))
    pts = pts[np.linalg.norm(pts, axis=1) <= 5][:100]

    s0 = circle.nodes[9].param
    u_point = synthesize(family, make_measure({"atoms": [{"s": s0, "weight": 1.0}]}, circle))
    node = circle.nodes[9]
    exact = np.exp(pts @ node.xi) * 1.0
    point_err = float(np.max(np.abs(u_point(pts) - exact) / np.abs(exact)))

    u_uniform = synthesize(family, make_measure({"density": 1.0}, circle))
    r = np.linalg.norm(pts, axis=1)
    bessel = 2 * np.pi * bessel_i0(r)
    bessel_err = float(np.max(np.abs(u_uniform(pts) - bessel) / bessel))

    r1 = residual_norm(helmholtz, u_uniform, [-1, -1], [1, 1], 0.05)
    r2 = residual_norm(helmholtz, u_uniform, [-1, -1], [1, 1], 0.025)
    ratio = r1 / r2
    ok = point_err <= 1e-10 and bessel_err <= 1e-8 and 3.5 <= ratio <= 4.5
    record(7, "synthesis: point mass, Bessel identity at 64 nodes, residual halving", ok,
           f"point mass {point_err:.1e} <= 1e-10, Bessel {bessel_err:.1e} <= 1e-8, "
           f"residual ratio {ratio:.3f} in [3.5, 4.5]")
    assert ok


def test_criterion_08_growth_envelope(circle):
    family = BlochFamily(circle)
    rng = np.random.default_rng(8)
    cases = [
        ("point mass", {"atoms": [{"s": 0.3, "weight": 1.0}]}, (-0.3, 0.3)),
        ("order-1 atom", {"atoms": [{"s": 0.3, "weight": 1.0, "order": 1}]}, (0.7, 1.3)),
        ("uniform", {"density": 1.0}, (-1.0, 0.3)),
    ]
    h = IndicatorFn(circle)
    rays = [np.array([np.cos(t), np.sin(t)]) for t in 2 * np.pi * np.arange(8) / 8 + 0.1]
    radii = np.linspace(5, 50, 46)
    # verification radii are drawn independently of the calibration grid
    dense = np.sort(rng.uniform(0.0, 50.0, 2000))
    ok = True
    details = []
    for label, spec, (lo, hi) in cases:
        u = synthesize(family, make_measure(spec, circle))
        fits = envelope_fit(u, h, rays, radii)
        Ns = [f["N_fit"] for f in fits]
        excess = max(envelope_violation(u, f, dense) for f in fits)
        case_ok = all(lo <= N <= hi for N in Ns) and excess <= 0.0
        ok &= case_ok
        details.append(f"{label} N in [{min(Ns):.2f}, {max(Ns):.2f}] within [{lo}, {hi}], "
                       f"bound excess {excess:.1e} <= 0")
    record(8, "growth envelope bands and bound for r <= 50", ok, "; ".join(details))
    assert ok


def test_criterion_09_completeness_1d(mathieu_drift):
    rng = np.random.default_rng(9)
    surface = trace_xi(mathieu_drift)
    worst = 0.0
    for _ in range(10):
        u0, du0 = rng.standard_normal(2)
        worst = max(worst, ode_completeness_1d(mathieu_drift, u0, du0, surface)[2])
    ok = worst <= 1e-6
    record(9, "1D completeness over the two positive Bloch solutions, 10 initial data", ok,
           f"max mismatch {worst:.1e} <= 1e-6")
    assert ok


def test_criterion_10_tube_exclusivity(mathieu_drift, periodic_2d, periodic_2d_surface):
    one = tube_exclusivity_check(mathieu_drift, trace_xi(mathieu_drift), samples=200, seed=10)
    two = tube_exclusivity_check(periodic_2d, periodic_2d_surface, samples=200, seed=10)
    margin = min(one["min_margin"], two["min_margin"])
    ok = one["passed"] and two["passed"] and margin > 1e-6
    record(10, "tube exclusivity, 200 samples each in 1D and 2D", ok,
           f"min margin {margin:.3e} > 1e-6, exempt samples {one['exempt'] + two['exempt']}")
    assert ok
