"""Built-in identity suite: each row checks one analytic identity numerically."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anisotropy import AnisotropyDensity, gamma_tensor
from .corpus import DEFAULT_SEED, corpus
from .sphere import build_grid
from .surface import camc_lambda, discriminant_field, from_support
from .umbilic import (
    appendix_integral,
    appendix_integrand,
    model_delta,
    model_eigenvalues,
    model_hessian,
    model_index,
    w_field,
)

Z_SWEEP = (0.2, 0.5, 1.0, 1.1, 1.5, 2.0, 5.0, 10.0)
FAULTS = ("negate-integrand",)


@dataclass(frozen=True)
class Row:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "value", float(self.value))

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "detail": self.detail,
        }


def wulff_families():
    """One density per family, used for the rescaled-Wulff identities."""
    return {
        "constant": AnisotropyDensity.constant(1.0),
        "ellipsoidal": AnisotropyDensity.ellipsoidal(np.diag([1.0, 1.3, 0.8])),
        "harmonic": AnisotropyDensity.harmonic({(0, 0): 0.3 * np.sqrt(4 * np.pi), (2, 0): 0.6 * np.sqrt(4 * np.pi / 5)}, base=1.0),
        "pnorm": AnisotropyDensity.smoothed_pnorm(4, 0.5),
    }


def appendix_row(fault=None):
    integrand = appendix_integrand
    if fault == "negate-integrand":
        def integrand(z, psi):
            return -appendix_integrand(z, psi)
    errs = [abs(appendix_integral(z, integrand=integrand) + np.pi) for z in Z_SWEEP]
    worst = max(errs)
    return Row("appendix integral = -pi over z sweep", worst < 1e-8, worst, 1e-8,
               f"z in {list(Z_SWEEP)}")


def model_index_row():
    worst = 0.0
    bad = []
    for N in (3, 4, 5, 6):
        for ratio in (1.0, 2.0, 5.0):
            J, raw = model_index(N, 1.0, ratio, return_raw=True)
            worst = max(worst, abs(raw - J))
            if J != -(N - 2) / 2:
                bad.append((N, ratio, J))
    return Row("model index = -(N-2)/2 for N = 3..6", not bad and worst < 0.05, worst, 0.05,
               f"mismatches: {bad}" if bad else "pre-rounding distance shown")


def delta_bound_row(pairs=100, seed=DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, 2 * np.pi, 10_000)
    worst = np.inf
    for _ in range(pairs):
        L1, L2 = rng.uniform(0.1, 10.0, 2)
        N = int(rng.integers(3, 7))
        worst = min(worst, float(np.min(model_delta(N, L1, L2, theta)) - 2.0 / (L1 * L2)))
    return Row("Delta(theta) >= 2/(Lambda1 Lambda2)", worst >= -1e-12, worst, 1e-12,
               f"{pairs} seeded pairs, 1e4 theta samples")


def model_eigen_row(seed=DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        N = int(rng.integers(3, 7))
        L1, L2 = rng.uniform(0.2, 5.0, 2)
        rho, theta = rng.uniform(0.1, 1.0), rng.uniform(0, 2 * np.pi)
        lp, lm, _ = model_eigenvalues(N, L1, L2, rho, theta)
        ev = np.linalg.eigvalsh(model_hessian(N, L1, L2, rho, theta))
        worst = max(worst, abs(lp - ev[1]) / max(1.0, abs(ev[1])), abs(lm - ev[0]) / max(1.0, abs(ev[0])))
    return Row("model eigenvalues match a direct eigen-solve", worst < 1e-12, worst, 1e-12)


def discriminant_row(n=48, count=20, seed=DEFAULT_SEED):
    grid = build_grid(n)
    worst = min(float(discriminant_field(q, g).values.min()) for q, g in corpus(grid, count, seed))
    return Row("discriminant Lambda^2/4 - K_S/K_W >= 0", worst >= -1e-10, worst, 1e-10,
               f"{count} seeded pairs at n={n}")


def curvature_relation_row(n=48, radii=(0.5, 1.0, 2.0)):
    grid = build_grid(n)
    worst = 0.0
    for gamma in wulff_families().values():
        KW = 1.0 / gamma_tensor(gamma, grid).det()
        for r in radii:
            S = from_support(gamma.field(grid) * r)
            lam = camc_lambda(S, gamma).values
            rel = np.abs(S.K_sigma - 0.25 * lam**2 * KW) / np.abs(S.K_sigma)
            worst = max(worst, float(rel.max()))
    return Row("K_Sigma = (Lambda^2/4) K_W on rescaled Wulff shapes", worst < 1e-8, worst, 1e-8,
               f"{len(wulff_families())} families, r in {list(radii)}")


def totally_umbilic_row(n=48, radii=(0.5, 1.0, 2.0)):
    grid = build_grid(n)
    worst = 0.0
    for gamma in wulff_families().values():
        for r in radii:
            wf = w_field(gamma.field(grid) * r, gamma)
            worst = max(worst, float(wf.deficiency.values.max()), abs(wf.lam + 2.0 / r))
    return Row("rescaled Wulff shapes are totally A-umbilic", worst < 1e-9, worst, 1e-9)


def run_suite(quick=False, fault=None, seed=DEFAULT_SEED):
    """Run every identity row; ``quick`` uses fewer samples and coarser grids."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    n = 24 if quick else 48
    rows = [
        appendix_row(fault),
        model_index_row(),
        delta_bound_row(20 if quick else 100, seed),
        model_eigen_row(seed),
        discriminant_row(n, 5 if quick else 20, seed),
        curvature_relation_row(n),
        totally_umbilic_row(n),
    ]
    return rows
