import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulffkit.anisotropy import AnisotropyDensity
from wulffkit.corpus import random_perturbation
from wulffkit.errors import ConfigurationError, DomainError
from wulffkit.functions import harmonic_closure
from wulffkit.sphere import ScalarField, build_grid
from wulffkit.solver import (
    SolverConfig,
    constrained_flow,
    flow_energy,
    linearized_matrix,
    linearized_operator,
    newton_solve,
    residual,
    wulff_fit,
)
from wulffkit.surface import energy, volume

ONE = AnisotropyDensity.constant()
ELL = AnisotropyDensity.ellipsoidal(np.diag([1.0, 1.3, 0.8]))


def _perturbed(gamma, grid, r=1.0, eps=0.1):
    z = grid.directions[..., 2]
    return ScalarField(grid, r * gamma.field(grid).values + eps * z**3)


# -- residual and linearization ------------------------------------------------------


def test_residual_examples(grid16):
    q = ScalarField.constant(grid16)
    assert np.max(np.abs(residual(q, ONE, -2.0).values)) < 1e-13
    assert np.allclose(residual(q, ONE, -3.0).values, -1.0, atol=1e-13)
    for r in (0.5, 2.0):
        assert np.max(np.abs(residual(ELL.field(grid16) * r, ELL, -2 / r).values)) < 1e-9


def test_residual_requires_convexity(grid16):
    bad = ScalarField.from_closure(grid16, harmonic_closure(2, 0))
    with pytest.raises(DomainError):
        residual(bad, ONE, -2.0)


def test_linearization_kernel_is_exact(grid16):
    q = _perturbed(ELL, grid16)
    dq = ScalarField.linear(grid16, np.array([0.4, -1.2, 0.7])).on_grid()
    assert np.max(np.abs(linearized_operator(q, ELL, dq, exact=False).values)) < 1e-12


def test_linearization_along_q_is_lambda(grid16):
    q = _perturbed(ELL, grid16)
    out = linearized_operator(q, ELL, q, exact=False).values
    lam = residual(q, ELL, 0.0, exact=False).values * -1
    assert np.max(np.abs(out - lam)) < 1e-12


def test_linearization_matches_finite_differences(grid16):
    q = _perturbed(ELL, grid16)
    rng = np.random.default_rng(0xC0FFEE)
    t = 1e-4
    def fd_error(dq, t):
        fd = (residual(q + t * dq, ELL, 0.0, exact=False).values
              - residual(q - t * dq, ELL, 0.0, exact=False).values) / (2 * t)
        return np.max(np.abs(fd - linearized_operator(q, ELL, dq, exact=False).values))

    for _ in range(10):
        dq = random_perturbation(rng, grid16).on_grid()
        # sup |dq| is a quarter of min q; the difference error scales as t^2 |dq|^3
        dq = dq * (0.25 / np.max(np.abs(dq.values)))
        e1, e2 = fd_error(dq, 10 * t), fd_error(dq, t)
        assert e2 < 1e-6
        assert e1 / e2 > 50


def test_sparse_jacobian_matches_operator(grid16, rng):
    q = _perturbed(ELL, grid16)
    dq = ScalarField(grid16, rng.normal(size=grid16.shape))
    J = linearized_matrix(q, ELL)
    direct = linearized_operator(q, ELL, dq, exact=False).values.ravel()
    assert np.allclose(J @ dq.values.ravel(), direct, atol=1e-10)


# -- wulff fit ------------------------------------------------------------------------


def test_wulff_fit_exact_member(grid24):
    a = np.array([0.1, 0.0, -0.3])
    q = ELL.field(grid24) * 2.0 + ScalarField.linear(grid24, a)
    fit = wulff_fit(q, ELL)
    assert fit.c == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(fit.a, a, atol=1e-12)
    assert fit.rms < 1e-12


def test_wulff_fit_detects_non_wulff(grid24):
    z = grid24.directions[..., 2]
    q = ScalarField(grid24, ELL.field(grid24).values + 0.05 * (3 * z**2 - 1))
    assert wulff_fit(q, ELL).rms > 0.01


def test_wulff_fit_unit_sphere(grid16):
    fit = wulff_fit(ScalarField.constant(grid16), ONE)
    assert fit.c == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(fit.a, 0.0, atol=1e-13)


# -- config ---------------------------------------------------------------------------


@pytest.mark.parametrize("bad", [
    {"mode": "annealing"},
    {"residual_tolerance": 0.0},
    {"damping": 0.0},
    {"damping": 1.5},
    {"max_iterations": 0},
    {"flow_step": -1},
    {"tolerance": 1e-3},
])
def test_invalid_config(bad):
    with pytest.raises(ConfigurationError):
        SolverConfig.from_dict(bad)


def test_config_defaults_and_round_trip():
    assert SolverConfig().residual_tolerance == 1e-10
    flow = SolverConfig(mode="flow-fixed-volume")
    assert flow.residual_tolerance == 1e-7
    assert SolverConfig.from_dict(flow.to_dict()) == flow


# -- Newton ---------------------------------------------------------------------------


def test_newton_recovers_wulff_shape(grid48):
    res = newton_solve(ELL, -2.0, _perturbed(ELL, grid48), SolverConfig())
    assert res.converged
    assert res.residual_history[-1] < 1e-10
    assert abs(res.wulff_fit.c - 1) < 1e-7 and res.wulff_fit.rms < 1e-8


def test_newton_isotropic_sphere(grid32):
    z = grid32.directions[..., 2]
    q0 = ScalarField(grid32, 2.0 + 0.1 * z**3 + 0.05 * grid32.directions[..., 0])
    res = newton_solve(ONE, -1.0, q0)
    assert res.converged
    assert res.wulff_fit.c == pytest.approx(2.0, abs=1e-8) and res.wulff_fit.rms < 1e-8


def test_newton_exact_fixed_point(grid24):
    q0 = ELL.field(grid24) * 1.5
    res = newton_solve(ELL, -2 / 1.5, q0)
    assert res.converged and res.iterations <= 1
    assert np.max(np.abs(res.q_final.values - q0.values)) < 1e-12


def test_newton_gauge_invariance(grid24):
    q0 = _perturbed(ELL, grid24)
    a = np.array([0.2, -0.1, 0.3])
    r1 = newton_solve(ELL, -2.0, q0)
    r2 = newton_solve(ELL, -2.0, q0 + ScalarField(grid24, grid24.directions @ a))
    assert r1.converged and r2.converged
    assert r1.wulff_fit.c == pytest.approx(r2.wulff_fit.c, abs=1e-9)
    assert np.allclose(r2.wulff_fit.a - r1.wulff_fit.a, a, atol=1e-9)


def test_newton_residual_history_tail_decreases(grid24):
    res = newton_solve(ELL, -2.0, _perturbed(ELL, grid24))
    h = res.residual_history
    assert all(b < a for a, b in zip(h, h[1:]))


def test_newton_rejects_nonnegative_lambda(grid16):
    for lam in (0.0, 1.0):
        with pytest.raises(DomainError, match="Lambda = 0"):
            newton_solve(ONE, lam, ScalarField.constant(grid16))


def test_newton_rejects_non_convex_start(grid16):
    bad = ScalarField(grid16, harmonic_closure(2, 0).value(grid16.directions))
    with pytest.raises(DomainError):
        newton_solve(ONE, -2.0, bad)


def test_newton_non_convergence_is_reported(grid16):
    res = newton_solve(ELL, -2.0, _perturbed(ELL, grid16), SolverConfig(max_iterations=1))
    assert not res.converged and "no convergence" in res.message
    assert len(res.residual_history) == 2


# -- flow -----------------------------------------------------------------------------


def test_flow_recovers_wulff_shape(grid48):
    V0 = volume(ELL.field(grid48))
    res = constrained_flow(ELL, V0, ScalarField.constant(grid48))
    assert res.converged
    assert res.wulff_fit.rms < 1e-6 and abs(res.wulff_fit.c - 1) < 1e-5
    E = res.energy_history
    assert all(b <= a + 1e-12 for a, b in zip(E, E[1:]))
    assert volume(res.q_final, exact=False) == pytest.approx(V0, rel=1e-12)


def test_flow_isotropic_reaches_round_sphere(grid24):
    z = grid24.directions[..., 2]
    q0 = ScalarField(grid24, 1.0 + 0.3 * z**2 + 0.1 * grid24.directions[..., 1])
    V0 = 2.0
    res = constrained_flow(ONE, V0, q0)
    assert res.converged
    c = res.wulff_fit.c
    assert res.wulff_fit.rms < 1e-6
    # radius fixed by the discrete volume; the continuum radius differs by O(h^2)
    assert volume(ScalarField.constant(grid24, c), exact=False) == pytest.approx(V0, rel=1e-8)
    assert c == pytest.approx((V0 / (4 * np.pi / 3)) ** (1 / 3), rel=10 * grid24.h**2)


def test_flow_energy_consistent(grid32):
    q = _perturbed(ELL, grid32)
    F, V = flow_energy(q, ELL)
    assert V == pytest.approx(volume(q, exact=False), rel=1e-12)
    assert F == pytest.approx(energy(q, ELL), rel=1e-3)


def test_newton_and_flow_agree(grid24):
    r = 1.3
    newton = newton_solve(ELL, -2 / r, _perturbed(ELL, grid24, r))
    flow = constrained_flow(ELL, volume(ELL.field(grid24) * r), ScalarField.constant(grid24))
    assert newton.converged and flow.converged
    assert abs(newton.wulff_fit.c - flow.wulff_fit.c) < 1e-5
    assert abs(newton.wulff_fit.rms - flow.wulff_fit.rms) < 1e-5


def test_flow_rejects_bad_volume(grid16):
    with pytest.raises(DomainError):
        constrained_flow(ONE, -1.0, ScalarField.constant(grid16))


@settings(max_examples=5, deadline=None)
@given(st.floats(0.5, 3.0))
def test_solution_scale_follows_lambda(r):
    g = build_grid(12)
    res = newton_solve(ELL, -2.0 / r, ELL.field(g) * 1.0)
    assert res.converged
    assert res.wulff_fit.c == pytest.approx(r, rel=1e-8)
