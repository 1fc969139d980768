import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffkit.errors import ConfigurationError, RangeError
from wulffkit.functions import QuadraticNorm, Radial, sphere_moment
from wulffkit.sphere import (
    Chart,
    ScalarField,
    build_grid,
    chart_lift,
    hessian_plus_identity,
    integrate,
    sample_loop,
)

vectors = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def test_node_directions_are_unit(grid16):
    assert np.max(np.abs(np.linalg.norm(grid16.directions, axis=-1) - 1)) < 1e-12
    assert np.max(np.abs(np.linalg.norm(grid16.directions_ext, axis=-1) - 1)) < 1e-12


def test_owned_node_count(grid16):
    assert grid16.directions.reshape(-1, 3).shape[0] == 6 * 16**2


def test_nodes_are_distinct(grid16):
    from scipy.spatial import cKDTree

    pts = grid16.directions.reshape(-1, 3)
    assert not cKDTree(pts).query_pairs(1e-6)


def test_charts_are_right_handed(grid16):
    for c in grid16.charts:
        M = np.array([c.e1, c.e2, c.center])
        assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-12)


def test_small_grid_rejected():
    with pytest.raises(ConfigurationError):
        build_grid(4)


def test_total_solid_angle(grid32):
    assert abs(grid32.weights.sum() - 4 * np.pi) < 1e-8
    assert np.all(grid32.weights > 0)


def test_quadrature_moment_converges():
    exact = 4 * np.pi / 3
    errs = []
    for n in (16, 32):
        g = build_grid(n)
        errs.append(abs(integrate(g.directions[..., 2] ** 2, g) - exact))
    assert errs[1] < 1e-7
    assert errs[0] / errs[1] >= 4


def test_integrate_examples(grid32):
    one = ScalarField.constant(grid32)
    assert abs(integrate(one) - 4 * np.pi) < 1e-8
    assert abs(integrate(grid32.directions[..., 2], grid32)) < 1e-10
    assert abs(integrate(grid32.directions[..., 0] ** 4, grid32) - sphere_moment(4)) < 1e-7


def test_lift_of_constant(grid16):
    lifted = chart_lift(ScalarField.constant(grid16), 0)
    assert np.allclose(lifted, grid16.lift_ext, atol=1e-14)


def test_lift_of_linear_is_affine(grid16):
    a = np.array([0.3, -0.7, 1.1])
    for k, chart in enumerate(grid16.charts):
        lifted = chart_lift(ScalarField.linear(grid16, a).on_grid(), k)
        expect = a @ chart.center + grid16.Y1_ext * (a @ chart.e1) + grid16.Y2_ext * (a @ chart.e2)
        assert np.max(np.abs(lifted - expect)) < 1e-13


def test_lift_of_closure_matches_formula(grid16):
    Q = np.diag([1.0, 1.0, 4.0])
    f = ScalarField.from_closure(grid16, QuadraticNorm(Q))
    chart = grid16.charts[4]
    X = chart.center + grid16.Y1_ext[..., None] * chart.e1 + grid16.Y2_ext[..., None] * chart.e2
    expect = np.sqrt(np.einsum("...i,ij,...j->...", X, Q, X))
    assert np.max(np.abs(chart_lift(f, chart) - expect)) < 1e-13


def test_hessian_of_constant(grid16):
    exact = hessian_plus_identity(ScalarField.constant(grid16))
    assert np.allclose(exact.orthonormal(), np.eye(2), atol=1e-13)
    fd = hessian_plus_identity(ScalarField.constant(grid16).on_grid())
    assert np.max(np.abs(fd.orthonormal() - np.eye(2))) < grid16.h**2


@settings(max_examples=20, deadline=None)
@given(vectors)
def test_linear_kernel_is_exact(a):
    g = build_grid(8)
    A = hessian_plus_identity(ScalarField.linear(g, a).on_grid())
    assert np.max(np.abs(A.comps)) < 1e-12 * max(1.0, np.abs(a).max())


def test_linearity_on_grid_fields(grid16, rng):
    f = ScalarField(grid16, rng.normal(size=grid16.shape))
    g = ScalarField(grid16, rng.normal(size=grid16.shape))
    lhs = hessian_plus_identity(2.5 * f - g).comps
    rhs = 2.5 * hessian_plus_identity(f).comps - hessian_plus_identity(g).comps
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * np.max(np.abs(rhs))


def _ellipsoid_hessian_error(n):
    g = build_grid(n)
    f = ScalarField.from_closure(g, QuadraticNorm(np.diag([1.0, 1.0, 4.0])))
    ref = hessian_plus_identity(f).eigenvalues()
    return np.max(np.abs(hessian_plus_identity(f.on_grid()).eigenvalues() - ref)), ref


def test_hessian_matches_symbolic_oracle():
    import sympy

    x, y, z = sympy.symbols("x y z", real=True)
    F = sympy.sqrt(x**2 + y**2 + 4 * z**2)
    H = sympy.lambdify((x, y, z), sympy.hessian(F, (x, y, z)), "numpy")
    g = build_grid(64)
    f = ScalarField.from_closure(g, QuadraticNorm(np.diag([1.0, 1.0, 4.0])))
    ev = hessian_plus_identity(f).eigenvalues()
    assert np.all(ev > 0)
    nu = g.directions.reshape(-1, 3)[::97]
    oracle = np.array([np.linalg.eigvalsh(np.array(H(*v), dtype=float)) for v in nu])
    # the ambient Hessian kills nu; its other two eigenvalues are those of A_f
    assert np.max(np.abs(oracle[:, 0])) < 1e-12
    assert np.max(np.abs(oracle[:, 1:] - ev.reshape(-1, 2)[::97])) < 1e-6


def test_hessian_converges_second_order():
    e1, _ = _ellipsoid_hessian_error(16)
    e2, _ = _ellipsoid_hessian_error(32)
    assert np.log2(e1 / e2) >= 1.8


def test_ghost_values_agree_with_owner():
    closure = QuadraticNorm(np.diag([1.0, 2.0, 3.0]))
    errs = []
    for n in (16, 32):
        g = build_grid(n)
        ghost = g.extend(closure.value(g.directions))
        errs.append(np.max(np.abs(ghost - closure.value(g.directions_ext))))
    assert errs[1] < 1e-5
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_sample_loop_contract():
    c = np.array([0.2, -0.3, 0.9])
    c /= np.linalg.norm(c)
    loop = sample_loop(c, 0.1, m=256)
    assert loop.directions.shape == (256, 3)
    assert np.allclose(loop.directions[0], loop.directions[-1])
    assert loop.signed_area() > 0
    assert np.allclose(np.linalg.norm(loop.directions, axis=-1), 1, atol=1e-12)


def test_sample_loop_radius_check():
    with pytest.raises(RangeError):
        sample_loop(np.array([0.0, 0.0, 1.0]), 0.9)


def test_chart_round_trip():
    chart = Chart.at(np.array([1.0, 1.0, 1.0]) / np.sqrt(3))
    y1, y2 = np.array([0.1, -0.2]), np.array([0.3, 0.05])
    back = chart.from_sphere(chart.to_sphere(y1, y2))
    assert np.allclose(back[0], y1) and np.allclose(back[1], y2)


def test_constant_closure_field_values(grid16):
    f = ScalarField.from_closure(grid16, Radial(2.0))
    assert np.allclose(f.values, 2.0, rtol=0, atol=1e-15)
