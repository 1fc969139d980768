"""Anisotropy densities, the convexity condition and Wulff shapes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .functions import (
    Closure,
    Linear,
    QuadraticNorm,
    Radial,
    harmonic_series,
    smoothed_pnorm_closure,
)
from .sphere import ScalarField, SymTensorField, hessian_plus_identity

KINDS = ("constant", "ellipsoidal", "harmonic", "pnorm")


def tangential_invariants(H):
    """Trace and determinant of a tangential tensor given as ambient 3x3 matrices.

    The ambient Hessian of a 1-homogeneous function kills the normal, so its
    nonzero eigenvalues are those of ``D^2 f + f I``.
    """
    tr = np.trace(H, axis1=-2, axis2=-1)
    tr2 = np.einsum("...ij,...ji->...", H, H)
    return tr, 0.5 * (tr**2 - tr2)


@dataclass(frozen=True, eq=False)
class AnisotropyDensity:
    """Positive density gamma on S^2 with an exact closure for its derivatives."""

    kind: str
    params: dict = field(default_factory=dict)
    closure: Closure = None

    # -- constructors ----------------------------------------------------------
    @classmethod
    def constant(cls, c=1.0):
        if c <= 0:
            raise ConfigurationError("constant density must be positive")
        return cls("constant", {"value": float(c)}, Radial(c))

    @classmethod
    def ellipsoidal(cls, A):
        """``gamma(nu) = |A nu|``; its Wulff shape is the ellipsoid ``{|A^-T x| = 1}``."""
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
        if A.shape != (3, 3) or abs(np.linalg.det(A)) < 1e-12:
            raise ConfigurationError("ellipsoidal density needs an invertible 3x3 matrix")
        return cls("ellipsoidal", {"A": A.tolist()}, QuadraticNorm(A.T @ A))

    @classmethod
    def harmonic(cls, coefficients, base=1.0):
        """``base + sum_{(l, m)} c_lm Y_lm`` with real orthonormal harmonics."""
        coeffs = {(int(l), int(m)): float(c) for (l, m), c in dict(coefficients).items()}
        for l, m in coeffs:
            if l < 0 or abs(m) > l:
                raise ConfigurationError(f"invalid harmonic index ({l}, {m})")
        params = {
            "base": float(base),
            "coefficients": [{"l": l, "m": m, "c": c} for (l, m), c in sorted(coeffs.items())],
        }
        return cls("harmonic", params, harmonic_series(coeffs, base))

    @classmethod
    def smoothed_pnorm(cls, p=4, eps=1e-2):
        """``(sum |nu_i|^p + eps)^(1/p)`` for even ``p <= 6``."""
        if p not in (2, 4, 6):
            raise ConfigurationError("smoothed p-norm supports p in {2, 4, 6}")
        if eps <= 0:
            raise ConfigurationError("smoothing eps must be positive")
        return cls("pnorm", {"p": int(p), "eps": float(eps)}, smoothed_pnorm_closure(int(p), float(eps)))

    @classmethod
    def from_spec(cls, spec):
        """Build from a JSON-style mapping ``{"kind": ..., parameters...}``."""
        spec = dict(spec)
        kind = spec.get("kind")
        if kind == "constant":
            return cls.constant(spec.get("value", 1.0))
        if kind == "ellipsoidal":
            return cls.ellipsoidal(spec["A"])
        if kind == "harmonic":
            coeffs = {(t["l"], t["m"]): t["c"] for t in spec.get("coefficients", [])}
            return cls.harmonic(coeffs, spec.get("base", 1.0))
        if kind == "pnorm":
            return cls.smoothed_pnorm(spec.get("p", 4), spec.get("eps", 1e-2))
        raise ConfigurationError(f"unknown density kind {kind!r}; expected one of {KINDS}")

    def to_spec(self):
        return {"kind": self.kind, **self.params}

    # -- evaluation ------------------------------------------------------------
    def value(self, nu):
        return self.closure.value(np.asarray(nu, dtype=float))

    def wulff_point(self, nu):
        """``chi~(nu) = D gamma + gamma nu``."""
        return self.closure.gradient(np.asarray(nu, dtype=float))

    def tensor(self, nu):
        """Ambient 3x3 form of ``A_gamma = D^2 gamma + gamma I`` at ``nu``."""
        return self.closure.hessian(np.asarray(nu, dtype=float))

    def field(self, grid):
        return ScalarField.from_closure(grid, self.closure)

    def scaled(self, c):
        return AnisotropyDensity(self.kind, {**self.params, "scale": float(c)}, float(c) * self.closure)

    def translated(self, a):
        """``gamma + a . nu``: same tensor, Wulff shape shifted by ``a``."""
        a = np.asarray(a, dtype=float)
        return AnisotropyDensity(
            self.kind, {**self.params, "translate": a.tolist()}, self.closure + Linear(a)
        )


@dataclass(frozen=True)
class ConvexityReport:
    is_convex: bool
    min_eigenvalue: float
    worst_direction: np.ndarray
    min_value: float


def convexity_check(gamma, grid):
    """Smallest eigenvalue of ``A_gamma`` over the grid; convex iff positive."""
    values = gamma.value(grid.directions)
    T = SymTensorField.from_ambient(grid, gamma.tensor(grid.directions))
    lam = T.eigenvalues()[..., 0]
    k = np.unravel_index(np.argmin(lam), lam.shape)
    min_eig = float(lam[k])
    return ConvexityReport(
        is_convex=bool(min_eig > 0 and values.min() > 0),
        min_eigenvalue=min_eig,
        worst_direction=grid.directions[k].copy(),
        min_value=float(values.min()),
    )


@dataclass(frozen=True)
class WulffSurface:
    """Wulff shape sampled at the grid normals."""

    grid: object
    points: np.ndarray
    gauss_curvature: np.ndarray

    def support_gap(self, sample=None):
        """Minimum of ``(chi(nu) - chi(nu')) . nu`` over node pairs (>= 0 if convex)."""
        P = self.points.reshape(-1, 3)
        N = self.grid.directions.reshape(-1, 3)
        if sample is not None:
            P, N = P[sample], N[sample]
        own = np.einsum("ij,ij->i", P, N)
        return float(np.min(own[:, None] - N @ P.T))


def wulff_map(gamma, grid):
    """Wulff shape ``nu -> D gamma + gamma nu`` with curvature ``1/det A_gamma``."""
    report = convexity_check(gamma, grid)
    if not report.is_convex:
        raise DomainError(
            f"density violates the convexity condition: min eigenvalue {report.min_eigenvalue:.3e} "
            f"at {np.round(report.worst_direction, 6).tolist()}",
            direction=report.worst_direction,
            value=report.min_eigenvalue,
        )
    points = gamma.wulff_point(grid.directions)
    _, det = tangential_invariants(gamma.tensor(grid.directions))
    return WulffSurface(grid, points, 1.0 / det)


def wulff_gauss_curvature(gamma, nu):
    """Gaussian curvature of the Wulff shape at ``chi~(nu)``."""
    _, det = tangential_invariants(gamma.tensor(nu))
    if np.any(det <= 0):
        raise DomainError("det A_gamma <= 0: convexity condition fails", value=float(np.min(det)))
    return 1.0 / det


def gamma_tensor(gamma, grid, exact=True):
    """``A_gamma`` as a chart-form tensor field (grid-borne densities use differences)."""
    if isinstance(gamma, AnisotropyDensity):
        if exact:
            return SymTensorField.from_ambient(grid, gamma.tensor(grid.directions))
        return hessian_plus_identity(gamma.field(grid).on_grid())
    return hessian_plus_identity(gamma, exact=exact)
