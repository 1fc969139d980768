"""Solvers for the constant anisotropic mean curvature equation on S^2.

The equation for a support function ``q`` is ``R(q) = Trace(A_gamma A_q^-1) + Lambda = 0``.
Discretely both ``A_q`` and ``A_gamma`` use the same finite-difference operator,
so ``q = c gamma + a . nu`` solves the discrete equation exactly and the fit
against the Wulff family measures the solver rather than the discretization.

In chart form ``Trace(A_gamma A_q^-1 A_dq A_q^-1) = Trace(B_g B_q^-1 B_dq B_q^-1)``
for any basis, so the linearization is ``-sum_ab C_ab (B_dq)_ab`` with
``C = B_q^-1 B_g B_q^-1``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .anisotropy import AnisotropyDensity, gamma_tensor
from .errors import ConfigurationError, DomainError
from .sphere import ScalarField, hessian_plus_identity
from .surface import from_support

log = logging.getLogger(__name__)

MODES = ("newton-fixed-lambda", "flow-fixed-volume")
DEFAULT_TOLERANCE = {"newton-fixed-lambda": 1e-10, "flow-fixed-volume": 1e-7}
MIN_STEP = 1e-12


@dataclass
class SolverConfig:
    mode: str = "newton-fixed-lambda"
    max_iterations: int = 50
    residual_tolerance: float | None = None
    damping: float = 1.0
    gauge: bool = True
    flow_step: float = 0.05

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown solver mode {self.mode!r}; expected one of {MODES}")
        if self.residual_tolerance is None:
            self.residual_tolerance = DEFAULT_TOLERANCE[self.mode]
        if not self.residual_tolerance > 0:
            raise ConfigurationError("residual_tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise ConfigurationError("damping must lie in (0, 1]")
        if self.max_iterations < 1 or self.flow_step <= 0:
            raise ConfigurationError("max_iterations and flow_step must be positive")

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigurationError(f"unknown solver config keys: {unknown}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


@dataclass
class WulffFit:
    c: float
    a: np.ndarray
    rms: float

    def to_dict(self):
        return {"c": float(self.c), "a": [float(v) for v in self.a], "rms": float(self.rms)}


@dataclass
class SolverResult:
    q_final: ScalarField
    lambda_final: float
    residual_history: list
    iterations: int
    wulff_fit: WulffFit
    converged: bool
    message: str = ""
    energy_history: list = field(default_factory=list)

    def to_dict(self):
        return {
            "converged": bool(self.converged),
            "message": self.message,
            "iterations": int(self.iterations),
            "lambda_final": float(self.lambda_final),
            "residual_history": [float(r) for r in self.residual_history],
            "energy_history": [float(e) for e in self.energy_history],
            "wulff_fit": self.wulff_fit.to_dict(),
        }


# ---------------------------------------------------------------------------
# residual and linearization


def _gamma_values(gamma, grid):
    if isinstance(gamma, AnisotropyDensity):
        return gamma.value(grid.directions)
    return gamma.values


def _coefficients(Bq, Bg):
    """``C = B_q^-1 B_g B_q^-1`` as (c11, c12, c22)."""
    Q = np.linalg.inv(Bq.matrix())
    C = Q @ Bg.matrix() @ Q
    return C[..., 0, 0], C[..., 0, 1], C[..., 1, 1]


def residual(q, gamma, lam, exact=True):
    """``Trace(A_gamma A_q^-1) + Lambda`` per node; zero on CAMC surfaces."""
    S = from_support(q, exact=exact)
    Ag = gamma_tensor(gamma, S.grid, exact)
    return ScalarField(S.grid, Ag.ratio_trace(S.A_q) + float(lam))


def linearized_operator(q, gamma, dq, exact=True):
    """Directional derivative of ``residual`` at ``q`` along ``dq``."""
    S = from_support(q, exact=exact)
    Ag = gamma_tensor(gamma, S.grid, exact)
    c11, c12, c22 = _coefficients(S.A_q, Ag)
    B = hessian_plus_identity(dq, exact=exact).comps
    return ScalarField(S.grid, -(c11 * B[..., 0] + 2 * c12 * B[..., 1] + c22 * B[..., 2]))


def _jacobian(Aq, Ag):
    c11, c12, c22 = _coefficients(Aq, Ag)
    H11, H12, H22 = Aq.grid.hessian_operators
    return -(sp.diags(c11.ravel()) @ H11 + sp.diags(2 * c12.ravel()) @ H12 + sp.diags(c22.ravel()) @ H22)


def linearized_matrix(q, gamma):
    """Sparse Jacobian of the finite-difference residual with respect to node values."""
    S = from_support(q, exact=False)
    return _jacobian(S.A_q, gamma_tensor(gamma, S.grid, exact=False))


# ---------------------------------------------------------------------------
# Wulff-family fit


def wulff_fit(q, gamma):
    """Least-squares ``(c, a)`` minimizing ``int (q - c gamma - a . nu)^2 domega``."""
    grid = q.grid
    w = grid.weights.ravel()
    basis = np.column_stack([_gamma_values(gamma, grid).ravel(), grid.directions.reshape(-1, 3)])
    v = q.values.ravel()
    coef = np.linalg.solve(basis.T @ (w[:, None] * basis), basis.T @ (w * v))
    res = v - basis @ coef
    rms = float(np.sqrt(max(np.sum(w * res**2), 0.0) / np.sum(w)))
    return WulffFit(float(coef[0]), coef[1:].copy(), rms)


# ---------------------------------------------------------------------------
# helpers


def _grid_field(q):
    return ScalarField(q.grid, np.array(q.values, dtype=float))


def _state(values, grid, gamma_fd, lam=None):
    """Residual-type data for node values; ``None`` if not strictly convex."""
    qf = ScalarField(grid, values.reshape(grid.shape))
    Aq = hessian_plus_identity(qf, exact=False)
    if not np.all(Aq.is_positive_definite()):
        return None
    lam_field = -gamma_fd.ratio_trace(Aq)
    return qf, Aq, lam_field


def _check_start(q0):
    from_support(_grid_field(q0), exact=False)


# ---------------------------------------------------------------------------
# Newton iteration at fixed Lambda


def newton_solve(gamma, lam, q0, config=None):
    """Damped Newton iteration for ``R(q) = 0`` at fixed ``Lambda``.

    Translations ``a . nu`` form the kernel of the linearization; the update is
    kept orthogonal to them by pinning ``int q nu domega`` (a bordered sparse
    system). Steps that lose convexity or fail to reduce ``max |R|`` are halved.
    """
    config = config or SolverConfig()
    lam = float(lam)
    if lam >= 0:
        raise DomainError(
            f"Lambda = {lam} is infeasible: a closed surface cannot have Lambda = 0, and with the "
            "convention Lambda = -Trace(A_gamma A_q^-1) closed convex CAMC surfaces have Lambda < 0",
            value=lam,
        )
    _check_start(q0)
    grid = q0.grid
    gfd = gamma_tensor(gamma, grid, exact=False)
    x = np.array(q0.values, dtype=float).ravel()
    nu = grid.directions.reshape(-1, 3)
    W = grid.weights.ravel()
    border = sp.csr_matrix(nu * W[:, None])

    st = _state(x, grid, gfd)
    R = lam - st[2].ravel()
    history = [float(np.max(np.abs(R)))]
    converged = history[-1] < config.residual_tolerance
    message = "converged" if converged else ""
    it = 0
    while not converged and it < config.max_iterations:
        it += 1
        J = _jacobian(st[1], gfd)
        if config.gauge:
            K = sp.bmat([[J, sp.csr_matrix(nu)], [border.T, None]], format="csc")
            rhs = np.concatenate([-R, np.zeros(3)])
            dx = spla.spsolve(K, rhs)[: x.size]
        else:
            dx = spla.lsqr(J, -R, atol=1e-14, btol=1e-14)[0]
        step = config.damping
        while True:
            cand = x + step * dx
            st_new = _state(cand, grid, gfd)
            if st_new is not None:
                R_new = lam - st_new[2].ravel()
                r_new = float(np.max(np.abs(R_new)))
                if r_new < history[-1]:
                    break
            step *= 0.5
            if step < MIN_STEP:
                message = "damping underflow: step below 1e-12"
                log.warning(message)
                return _result(st[0], gamma, lam, history, it, False, message)
        x, st, R = cand, st_new, R_new
        history.append(r_new)
        log.info("newton %d: max|R| = %.3e (step %.3g)", it, r_new, step)
        converged = r_new < config.residual_tolerance
    if converged:
        message = "converged"
    else:
        message = f"no convergence in {config.max_iterations} iterations"
    return _result(st[0], gamma, lam, history, it, converged, message)


def _result(qf, gamma, lam, history, it, converged, message, energies=()):
    return SolverResult(qf, float(lam), list(history), it, wulff_fit(qf, gamma), converged, message, list(energies))


# ---------------------------------------------------------------------------
# volume-constrained flow
#
# Accepted steps must not increase the symmetrized mixed-volume energy
#   F_d(q) = (1/3) [D(gamma, q, q) + 2 D(q, gamma, q)],  V_d(q) = (1/3) D(q, q, q),
# with D(f, g, h) = sum_k w_k f_k m(B_g, B_h)_k / det G_k and m the mixed
# determinant. Both converge to F and V, and V_d is exactly ``volume``. At
# q = c gamma the discrete gradients satisfy grad F_d = (2/c) grad V_d for any
# weights, so the discrete Wulff shape is an exact constrained critical point
# of F_d and the monotone flow is not blocked by discretization mismatch.


def _mixed(B, C):
    return 0.5 * (B[..., 0] * C[..., 2] + B[..., 2] * C[..., 0] - 2.0 * B[..., 1] * C[..., 1])


def flow_energy(q, gamma):
    """Mixed-volume discretization of ``F`` used as the flow's Lyapunov function."""
    grid = q.grid
    Bq = hessian_plus_identity(_grid_field(q), exact=False).comps
    Bg = gamma_tensor(gamma, grid, exact=False).comps
    return _flow_energy(q.values, Bq, Bg, _gamma_values(gamma, grid), grid)


def _flow_energy(q, Bq, Bg, gvals, grid):
    G = grid.gram
    wg = grid.weights / (G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] ** 2)
    det_q = Bq[..., 0] * Bq[..., 2] - Bq[..., 1] ** 2
    F = float(np.sum(wg * (gvals * det_q + 2.0 * q * _mixed(Bg, Bq))) / 3.0)
    V = float(np.sum(wg * q * det_q) / 3.0)
    return F, V


@dataclass
class _FlowState:
    q: ScalarField
    A_q: object
    lam: np.ndarray
    lam_bar: float
    F: float
    V: float


def _flow_state(x, grid, gfd, gvals):
    st = _state(x, grid, gfd)
    if st is None:
        return None
    qf, Aq, lam = st
    F, V = _flow_energy(qf.values, Aq.comps, gfd.comps, gvals, grid)
    wd = Aq.det() * grid.weights
    return _FlowState(qf, Aq, lam, float(np.sum(lam * wd) / np.sum(wd)), F, V)


def constrained_flow(gamma, V0, q0, config=None):
    """Steepest descent of the energy at fixed enclosed volume.

    Each step moves ``q`` along ``Lambda - Lambda_w`` with ``Lambda_w`` the
    ``det A_q``-weighted mean of ``Lambda``, which keeps the volume stationary
    to first order; the volume is then restored exactly by rescaling. The step
    is linearly implicit, ``(I + tau J) dq = tau (Lambda - Lambda_w)`` with
    ``J`` the linearized operator, so ``tau`` is not bound by the explicit
    stability limit. A step is accepted only if it keeps ``q`` convex and does
    not increase the energy; otherwise ``tau`` is halved.
    """
    config = config or SolverConfig(mode="flow-fixed-volume", max_iterations=500)
    if V0 <= 0:
        raise DomainError("target volume must be positive", value=V0)
    _check_start(q0)
    grid = q0.grid
    gfd = gamma_tensor(gamma, grid, exact=False)
    gvals = _gamma_values(gamma, grid)

    def rescaled(x):
        st = _flow_state(x, grid, gfd, gvals)
        if st is None:
            return None, None
        x = x * (V0 / st.V) ** (1.0 / 3.0)
        return x, _flow_state(x, grid, gfd, gvals)

    x, st = rescaled(np.array(q0.values, dtype=float).ravel())
    history = [float(np.max(np.abs(st.lam - st.lam_bar)))]
    energies = [st.F]
    tau = config.flow_step
    I = sp.identity(x.size, format="csc")
    it = 0
    converged = history[-1] < config.residual_tolerance
    while not converged and it < config.max_iterations:
        it += 1
        J = _jacobian(st.A_q, gfd)
        force = (st.lam - st.lam_bar).ravel()
        while True:
            dx = spla.spsolve((I + tau * J).tocsc(), tau * force)
            cand, st_new = rescaled(x + dx)
            if st_new is not None and st_new.F <= st.F + 1e-12:
                break
            tau *= 0.5
            if tau < MIN_STEP:
                message = "flow step underflow: tau below 1e-12"
                log.warning(message)
                return _result(st.q, gamma, st.lam_bar, history, it, False, message, energies)
        x, st = cand, st_new
        history.append(float(np.max(np.abs(st.lam - st.lam_bar))))
        energies.append(st.F)
        log.info("flow %d: sup|Lambda - mean| = %.3e, F = %.15g, tau = %.3g", it, history[-1], st.F, tau)
        converged = history[-1] < config.residual_tolerance
        tau = min(4.0 * tau, 1e6)
    message = "converged" if converged else f"no convergence in {config.max_iterations} iterations"
    return _result(st.q, gamma, st.lam_bar, history, it, converged, message, energies)
