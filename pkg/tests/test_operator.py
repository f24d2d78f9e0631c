import numpy as np
import pytest
import sympy as sp

from floquet_lab import apply_on_box, assemble, build_grid, formal_adjoint, make_coefficients
from floquet_lab.errors import AdjointResolutionWarning, CoefficientError, GridError

from conftest import coeffs_1d, coeffs_2d


@pytest.mark.parametrize("n, sizes", [(3, [4, 4, 4]), (1, [5]), (1, [2]), (2, [8])])
def test_grid_validation(n, sizes):
    with pytest.raises(GridError):
        build_grid(n, sizes)


def test_grid_nodes_c_order():
    grid = build_grid(2, [4, 6])
    assert grid.size == 24
    assert grid.nodes.shape == (24, 2)
    assert np.allclose(grid.nodes[1], [0.0, 1 / 6])


@pytest.mark.parametrize(
    "spec, message",
    [
        ({"a": [[1.0]], "c": 1j}, "real"),
        ({"a": [[-1.0]]}, "elliptic"),
        ({"a": [[1.0, 0.5], [0.4, 1.0]]}, "symmetric"),
        ({"a": [[1.0]], "c": {"expr": "x1"}}, "periodic"),
        ({"a": [[1.0]], "c": {"fourier": [[1, 0.5j]]}}, "real"),
    ],
)
def test_coefficient_validation(spec, message):
    n = len(spec["a"])
    with pytest.raises(CoefficientError, match=message):
        make_coefficients(spec, build_grid(n, [8] * n))


def test_fourier_spec_matches_expr():
    grid = build_grid(1, [16])
    via_modes = make_coefficients({"a": [[1.0]], "c": {"fourier": [[0, 1.0], [1, 0.25], [-1, 0.25]]}}, grid)
    via_expr = make_coefficients({"a": [[1.0]], "c": {"expr": "1 + 0.5*cos(2*pi*x1)"}}, grid)
    assert np.allclose(via_modes.c, via_expr.c, atol=1e-14)


def test_adjoint_matches_symbolic_derivatives():
    x = sp.symbols("x")
    a = 1 + sp.Rational(1, 5) * sp.cos(2 * sp.pi * x)
    b = sp.Rational(3, 10) * sp.sin(2 * sp.pi * x)
    c = 1 + sp.cos(2 * sp.pi * x) / 2
    # P* v = -(a v)'' - (b v)' + c v  =  -a v'' + (-2a' - b) v' + (c - a'' - b') v
    b_star = sp.lambdify(x, -2 * sp.diff(a, x) - b, "numpy")
    c_star = sp.lambdify(x, c - sp.diff(a, x, 2) - sp.diff(b, x), "numpy")
    coeffs = coeffs_1d(
        a={"expr": "1 + 0.2*cos(2*pi*x1)"},
        b={"expr": "0.3*sin(2*pi*x1)"},
        c={"expr": "1 + 0.5*cos(2*pi*x1)"},
        size=32,
    )
    adj = formal_adjoint(coeffs)
    nodes = coeffs.grid.axis_nodes(0)
    assert np.allclose(adj.a, coeffs.a)
    assert np.max(np.abs(adj.b[0] - b_star(nodes))) < 1e-12
    assert np.max(np.abs(adj.c - c_star(nodes))) < 1e-12


def test_adjoint_warns_when_under_resolved():
    coeffs = coeffs_1d(a={"expr": "exp(cos(2*pi*x1))"}, size=8)
    with pytest.warns(AdjointResolutionWarning):
        formal_adjoint(coeffs)


def test_adjoint_is_matrix_transpose_for_constant_coefficients():
    coeffs = coeffs_2d(a=((1.0, 0.3), (0.3, 2.0)), b=(0.4, -0.7), c=1.5, size=6)
    k = np.array([0.3 - 0.2j, -0.5 + 0.1j])
    lhs = assemble(formal_adjoint(coeffs), k).matrix
    rhs = assemble(coeffs, -k).matrix.T
    assert np.max(np.abs(lhs - rhs)) < 1e-10


@pytest.mark.parametrize("mode", [0, 1, -3])
def test_plane_wave_symbol_1d(mode):
    a, b, c, k = 1.3, 0.4, 0.7, 0.25 - 0.6j
    coeffs = coeffs_1d(a=a, b=b, c=c, size=16)
    x = coeffs.grid.axis_nodes(0)
    u = np.exp(2j * np.pi * mode * x)
    q = 2 * np.pi * mode + k
    # P(D + k) on e^{2 pi i m x}: a q^2 + i b q + c
    expected = a * q**2 + 1j * b * q + c
    got = assemble(coeffs, k).matrix @ u
    assert np.allclose(got, expected * u, atol=1e-10)


def test_translation_leaves_spectrum_invariant(mathieu_drift):
    k = 0.4
    w = np.sort_complex(np.linalg.eigvals(assemble(mathieu_drift, k).matrix))
    w_shift = np.sort_complex(np.linalg.eigvals(assemble(mathieu_drift.translated(5), k).matrix))
    assert np.max(np.abs(w - w_shift)[:16]) < 1e-9


def test_apply_on_box_second_order():
    coeffs = coeffs_2d(a=((1.0, 0.25), (0.25, 2.0)), b=(0.5, -1.0), c=0.7, size=4)

    def exact(h):
        axis = np.arange(-0.5, 0.5 + h / 2, h)
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        u = np.sin(X) * np.exp(0.5 * Y)
        # -u_xx - 2 a12 u_xy - 2 u_yy + 0.5 u_x - u_y + 0.7 u
        Pu = (
            np.sin(X) * np.exp(0.5 * Y) * (1 - 2.0 * 0.25 + 0.7 - 0.5)
            - 2 * 0.25 * np.cos(X) * 0.5 * np.exp(0.5 * Y)
            + 0.5 * np.cos(X) * np.exp(0.5 * Y)
        )
        got = apply_on_box(coeffs, u, [-0.5, -0.5], h)
        return np.max(np.abs(got - Pu[1:-1, 1:-1]))

    e1, e2 = exact(0.05), exact(0.025)
    assert e1 < 1e-3
    assert 3.5 < e1 / e2 < 4.5


def test_apply_on_box_rejects_coarse_spacing():
    coeffs = coeffs_1d(c=1.0, size=8)
    with pytest.raises(GridError, match="spacing"):
        apply_on_box(coeffs, np.zeros(5), [0.0], 0.5)


def test_grid_examples():
    grid = build_grid(2, [16, 16])
    assert grid.brillouin_zone == [(-np.pi, np.pi)] * 2
    assert np.allclose(build_grid(1, [4]).axis_nodes(0), [0, 0.25, 0.5, 0.75])
    with pytest.raises(GridError, match="dimension unsupported"):
        build_grid(3, [4, 4, 4])


def test_coefficient_examples():
    assert coeffs_1d(c=1.0, size=8).ellipticity_const == 1.0
    assert coeffs_2d(a=((1.0, 0.0), (0.0, 4.0)), c=1.0).ellipticity_const == 1.0
    mathieu = coeffs_1d(c={"expr": "1 + 0.5*cos(2*pi*x1)"}, size=16)
    assert np.min(mathieu.c) == pytest.approx(0.5)


def test_adjoint_examples():
    sym = formal_adjoint(coeffs_1d(c={"expr": "1 + 0.5*cos(2*pi*x1)"}, size=16))
    assert np.allclose(sym.b, 0.0) and np.allclose(sym.c, 1 + 0.5 * np.cos(2 * np.pi * np.arange(16) / 16))
    drift = formal_adjoint(coeffs_1d(b=0.7, size=16))
    assert np.allclose(drift.b, -0.7) and np.allclose(drift.c, 0.0)


def test_assembly_examples():
    coeffs = coeffs_1d(c=1.0, size=16)
    w = np.sort(np.linalg.eigvals(assemble(coeffs, 0.0).matrix).real)
    # all modes below the Nyquist one are exact
    expected = np.sort([(2 * np.pi * m) ** 2 + 1 for m in range(-7, 8)])
    assert np.allclose(w[:15], expected, rtol=1e-12)
    A = assemble(coeffs, -0.5j).matrix
    w = np.linalg.eigvals(A)
    assert np.min(w.real) == pytest.approx(0.75, abs=1e-12)
    assert np.allclose(A @ np.ones(16), 0.75, atol=1e-12)
    B = assemble(coeffs_2d(c=1.0, size=4), [np.pi, 0.0]).matrix
    assert np.allclose(B, B.conj().T, atol=1e-10)
    assert np.min(np.linalg.eigvalsh(B)) == pytest.approx(np.pi**2 + 1)


def test_hermitian_for_real_k(mathieu):
    A = assemble(mathieu, 0.3).matrix
    assert np.max(np.abs(A - A.conj().T)) <= 1e-10 * np.max(np.abs(A))


def test_quasimomentum_periodicity_low_spectrum(mathieu_drift):
    k = 0.3 - 0.2j
    w1 = np.sort_complex(np.linalg.eigvals(assemble(mathieu_drift, k).matrix))
    w2 = np.sort_complex(np.linalg.eigvals(assemble(mathieu_drift, k + 2 * np.pi).matrix))
    # the top of a collocation spectrum sits at the Nyquist cutoff, which
    # moves with k; compare the resolved part
    w1 = w1[np.argsort(w1.real)][:8]
    w2 = w2[np.argsort(w2.real)][:8]
    assert np.max(np.abs(w1 - w2)) < 1e-8


def test_ellipticity_stable_under_refinement():
    spec = {"a": [[{"expr": "1 + 0.2*cos(2*pi*x1)"}]]}
    coarse = make_coefficients(spec, build_grid(1, [8])).ellipticity_const
    fine = make_coefficients(spec, build_grid(1, [16])).ellipticity_const
    assert fine <= coarse + 1e-12
    assert fine == pytest.approx(0.8)


def test_apply_on_box_examples():
    h = 0.01
    x = np.arange(-1, 1 + h / 2, h)
    lap = coeffs_1d(size=8)
    assert np.max(np.abs(apply_on_box(lap, x, [-1.0], h))) < 1e-10
    helm = coeffs_1d(c=1.0, size=8)
    e1 = np.max(np.abs(apply_on_box(helm, np.exp(x), [-1.0], h)))
    x2 = np.arange(-1, 1 + h / 4, h / 2)
    e2 = np.max(np.abs(apply_on_box(helm, np.exp(x2), [-1.0], h / 2)))
    assert e1 < 1e-4 and 3.5 < e1 / e2 < 4.5
