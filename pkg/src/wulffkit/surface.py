"""Convex surfaces given by support functions.

Sign convention: ``Lambda = -Trace(A_gamma A_q^-1)``, so the unit sphere with
``gamma = 1`` has ``Lambda = -2`` and the Wulff shape rescaled by ``r`` has
``Lambda = -2/r``. Much of the CMC literature uses the opposite sign.

All surface integrals use ``dSigma = det(A_q) domega``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anisotropy import AnisotropyDensity, gamma_tensor
from .errors import DomainError
from .sphere import (
    ScalarField,
    SymTensorField,
    hessian_plus_identity,
    integrate,
    support_points,
)


@dataclass(frozen=True, eq=False)
class SupportSurface:
    """Convex surface ``X = Dq + q nu`` with its radii-of-curvature tensor."""

    q: ScalarField
    A_q: SymTensorField
    positions: np.ndarray
    K_sigma: np.ndarray
    lam: ScalarField | None = None

    @property
    def grid(self):
        return self.q.grid

    @property
    def area_density(self):
        """``det A_q``: area element relative to the sphere."""
        return 1.0 / self.K_sigma


@dataclass(frozen=True)
class PrincipalFrameData:
    k1: np.ndarray
    k2: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray


def _worst(grid, mask_values):
    k = np.unravel_index(np.argmin(mask_values), mask_values.shape)
    return grid.directions[k].copy(), float(mask_values[k])


def _check_convex(A, what="support function"):
    lam_min = A.eigenvalues()[..., 0]
    if not np.all(lam_min > 0):
        d, v = _worst(A.grid, lam_min)
        raise DomainError(
            f"{what} is not strictly convex: min eigenvalue of D^2q+qI is {v:.3e} "
            f"at {np.round(d, 6).tolist()}",
            direction=d,
            value=v,
        )


def from_support(q, gamma=None, exact=True):
    """Derived geometry of the convex surface with support function ``q``."""
    if isinstance(q, SupportSurface):
        return q
    A = hessian_plus_identity(q, exact=exact)
    _check_convex(A)
    lam = None
    if gamma is not None:
        lam = ScalarField(q.grid, -gamma_tensor(gamma, q.grid, exact).ratio_trace(A))
    return SupportSurface(q, A, support_points(q, exact=exact), 1.0 / A.det(), lam)


def _surface(q, exact=True):
    return q if isinstance(q, SupportSurface) else from_support(q, exact=exact)


def _gamma_values(gamma, grid):
    if isinstance(gamma, AnisotropyDensity):
        return gamma.value(grid.directions)
    return gamma.values


def camc_lambda(q, gamma, exact=True):
    """Anisotropic mean curvature ``-Trace(A_gamma A_q^-1)`` at every node."""
    S = _surface(q, exact)
    Ag = gamma_tensor(gamma, S.grid, exact)
    return ScalarField(S.grid, -Ag.ratio_trace(S.A_q))


def _positions_ext(f, grid):
    """Support points on owned nodes plus one halo ring, (6, n+2, n+2, 3)."""
    dirs = grid.directions_ext[:, 1:-1, 1:-1]
    if isinstance(f, AnisotropyDensity):
        return f.wulff_point(dirs)
    if f.analytic is not None:
        return f.analytic.gradient(dirs)
    return grid.lifted_positions_ext(f.values, layers=1)


def lambda_via_gauss_map(q, gamma):
    """Anisotropic mean curvature as ``-Trace d chi`` on the surface.

    Differentiates the anisotropic Gauss map ``chi = chi~ o nu`` and the
    position ``X`` along the chart axes and takes the trace of ``d chi`` relative
    to ``dX``. Independent of the tensor route up to discretization error.
    """
    if isinstance(q, SupportSurface):
        q = q.q
    grid = q.grid
    X = _positions_ext(q, grid)
    C = _positions_ext(gamma, grid)
    h = grid.h

    def d(P, axis):
        if axis == 0:
            return (P[:, 2:, 1:-1] - P[:, :-2, 1:-1]) / (2 * h)
        return (P[:, 1:-1, 2:] - P[:, 1:-1, :-2]) / (2 * h)

    PX = np.stack([d(X, 0), d(X, 1)], axis=-1)
    PC = np.stack([d(C, 0), d(C, 1)], axis=-1)
    G = np.swapaxes(PX, -1, -2) @ PX
    R = np.swapaxes(PX, -1, -2) @ PC
    L = np.linalg.solve(G, R)
    return ScalarField(grid, -np.trace(L, axis1=-2, axis2=-1))


def principal_frame(q, gamma, exact=True):
    """Principal curvatures and ``A_gamma`` in the principal frame at every node.

    ``k_i = 1 / r_i`` with ``r_i`` the eigenvalues of ``A_q`` (radii of
    curvature, outward normal), so ``Lambda = -(k1 a11 + k2 a22)``.
    """
    S = _surface(q, exact)
    Aq = S.A_q.orthonormal()
    Ag = gamma_tensor(gamma, S.grid, exact).orthonormal()
    r, V = np.linalg.eigh(Aq)
    a = np.swapaxes(V, -1, -2) @ Ag @ V
    return PrincipalFrameData(1.0 / r[..., 0], 1.0 / r[..., 1], a[..., 0, 0], a[..., 0, 1], a[..., 1, 1])


def principal_frame_identity_check(q, gamma, exact=True):
    """Max over nodes of ``|Lambda + (k1 a11 + k2 a22)|``."""
    S = _surface(q, exact)
    pf = principal_frame(S, gamma, exact)
    lam = camc_lambda(S, gamma, exact).values
    return float(np.max(np.abs(lam + pf.k1 * pf.a11 + pf.k2 * pf.a22)))


def discriminant_field(q, gamma, exact=True):
    """``Lambda^2/4 - K_Sigma/K_W``; nonnegative, zero exactly at A-umbilics."""
    S = _surface(q, exact)
    Ag = gamma_tensor(gamma, S.grid, exact)
    lam = -Ag.ratio_trace(S.A_q)
    ratio = Ag.det() / S.A_q.det()
    return ScalarField(S.grid, 0.25 * lam**2 - ratio)


def energy(q, gamma, exact=True):
    """``F = int gamma(nu) dSigma``."""
    S = _surface(q, exact)
    return integrate(_gamma_values(gamma, S.grid) * S.area_density, S.grid)


def volume(q, exact=True):
    """Enclosed volume ``(1/3) int q dSigma``."""
    S = _surface(q, exact)
    return integrate(S.q.values * S.area_density, S.grid) / 3.0


def rescale_to_volume(q, target, exact=True):
    """Scale ``q`` about the origin so that the enclosed volume equals ``target``."""
    if isinstance(q, SupportSurface):
        q = q.q
    return q * float((target / volume(q, exact)) ** (1.0 / 3.0))


@dataclass(frozen=True)
class FirstVariation:
    difference_quotient: float
    formula: float
    residual: float


def first_variation_check(q, gamma, dq, t=1e-3, exact=True):
    """Compare a central difference of ``F`` with ``-int Lambda dq dSigma``."""
    if isinstance(q, SupportSurface):
        q = q.q
    try:
        Fp = energy(q + t * dq, gamma, exact)
        Fm = energy(q - t * dq, gamma, exact)
    except DomainError as exc:
        raise DomainError(f"perturbed surface left the convex class: {exc}") from exc
    S = from_support(q, exact=exact)
    lam = camc_lambda(S, gamma, exact).values
    formula = -integrate(lam * dq.values * S.area_density, S.grid)
    dF = (Fp - Fm) / (2 * t)
    return FirstVariation(dF, formula, abs(dF - formula))
