"""Seeded random convex surfaces and anisotropy densities for property tests."""

from __future__ import annotations

import numpy as np

from .anisotropy import AnisotropyDensity, convexity_check
from .functions import Linear, QuadraticNorm, harmonic_closure
from .sphere import ScalarField, hessian_plus_identity
from .umbilic import pointwise_w_field

DEFAULT_SEED = 0xC0FFEE


def _random_spd(rng, lo, hi):
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return Q @ np.diag(rng.uniform(lo, hi, 3)) @ Q.T


def _harmonic_perturbation(rng, lmax=4, amplitude=0.04):
    terms = []
    for l in range(2, lmax + 1):
        for m in range(-l, l + 1):
            terms.append((rng.normal() * amplitude / l, harmonic_closure(l, m)))
    return terms


def random_density(rng, grid):
    """Convex density: an ellipsoidal or perturbed-harmonic gamma, checked on ``grid``."""
    for _ in range(100):
        if rng.random() < 0.5:
            gamma = AnisotropyDensity.ellipsoidal(_random_spd(rng, 0.75, 1.35))
        else:
            coeffs = {}
            for l in range(2, 5):
                for m in range(-l, l + 1):
                    coeffs[(l, m)] = float(rng.normal() * 0.05 / l)
            gamma = AnisotropyDensity.harmonic(coeffs, base=1.0)
        if convexity_check(gamma, grid).min_eigenvalue > 0.2:
            return gamma
    raise RuntimeError("could not draw a convex density")


def random_support(rng, grid, min_eigenvalue=0.2):
    """Strictly convex support function with exact derivatives.

    ``q = |B nu| + sum c_lm Y_lm + a . nu``: an ellipsoid, a small harmonic
    perturbation and a translation.
    """
    for _ in range(100):
        B = _random_spd(rng, 0.6, 1.6)
        closure = QuadraticNorm(B @ B)
        for c, h in _harmonic_perturbation(rng):
            closure = closure + c * h
        closure = closure + Linear(rng.normal(scale=0.2, size=3))
        q = ScalarField.from_closure(grid, closure)
        if hessian_plus_identity(q).eigenvalues()[..., 0].min() > min_eigenvalue:
            return q
    raise RuntimeError("could not draw a convex support function")


def random_perturbation(rng, grid, amplitude=1.0):
    """Smooth field ``sum c_lm Y_lm`` (l <= 4) with exact derivatives."""
    closure = None
    for l in range(0, 5):
        for m in range(-l, l + 1):
            term = float(rng.normal() * amplitude / (1 + l)) * harmonic_closure(l, m)
            closure = term if closure is None else closure + term
    return ScalarField.from_closure(grid, closure)


def corpus(grid, count, seed=DEFAULT_SEED):
    """``count`` seeded ``(q, gamma)`` pairs."""
    rng = np.random.default_rng(seed)
    return [(random_support(rng, grid), random_density(rng, grid)) for _ in range(count)]


def triaxial_ellipsoid(grid, axes=(1.5, 1.0, 0.7)):
    """Support function of the ellipsoid ``sum x_i^2 / a_i^2 = 1``."""
    a = np.asarray(axes, dtype=float)
    return ScalarField.from_closure(grid, QuadraticNorm(np.diag(a**2)))


def ellipsoid_umbilics(axes=(1.5, 1.0, 0.7)):
    """Normals at the four umbilics of a triaxial ellipsoid with ``a > b > c``."""
    a, b, c = sorted(map(float, axes), reverse=True)
    x = np.sqrt(a * a * (a * a - b * b) / (a * a - c * c))
    z = np.sqrt(c * c * (b * b - c * c) / (a * a - c * c))
    out = []
    for sx in (1, -1):
        for sz in (1, -1):
            n = np.array([sx * x / a**2, 0.0, sz * z / c**2])
            out.append(n / np.linalg.norm(n))
    return np.array(out)


def four_singularity_field(grid, axes=(1.5, 1.0, 0.7)):
    """Manufactured line field with four simple isotropic points of index +1/2.

    ``A_w`` of a triaxial ellipsoid for the isotropic density, with the local
    value of ``Lambda``; its isotropic points are the classical umbilics.
    """
    return pointwise_w_field(triaxial_ellipsoid(grid, axes), AnisotropyDensity.constant())
