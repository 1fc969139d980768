"""Anisotropic umbilics, eigendirection line fields and their rotation indices.

In support coordinates ``dX = A_q`` and ``d chi = A_gamma``, so the A-umbilic
condition ``d chi + (Lambda/2) dX = 0`` reads ``A_w = 0`` with
``w = gamma + (Lambda/2) q`` and ``A_w = A_gamma + (Lambda/2) A_q``.

Line-field angles are taken mod pi and the rotation index is
``J = (total angle change) / (2 pi)``, a half-integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .anisotropy import AnisotropyDensity, gamma_tensor
from .errors import (
    ConfigurationError,
    DomainError,
    IndexResolutionError,
    ProbeError,
    UndersampledError,
)
from .sphere import Chart, ScalarField, SymTensorField, normalize, sample_loop
from .surface import camc_lambda, from_support

MIN_LOOP_SAMPLES = 64
MAX_LOOP_SAMPLES = 1 << 14


# ---------------------------------------------------------------------------
# tangent-plane helpers


def tangent_frame(nu, reference):
    """Orthonormal ``(u1, u2)`` at ``nu`` with ``u1`` along the projection of ``reference``."""
    nu = np.asarray(nu, dtype=float)
    reference = np.broadcast_to(reference, nu.shape)
    u1 = normalize(reference - np.einsum("...i,...i->...", nu, reference)[..., None] * nu)
    u2 = np.cross(nu, u1)
    return u1, u2


def frame_matrix(A, u1, u2):
    """2x2 components ``u_a^T A u_b`` of ambient tensors."""
    a11 = np.einsum("...i,...ij,...j->...", u1, A, u1)
    a12 = np.einsum("...i,...ij,...j->...", u1, A, u2)
    a22 = np.einsum("...i,...ij,...j->...", u2, A, u2)
    return a11, a12, a22


def _generic_reference(nu):
    nu = np.asarray(nu, dtype=float)
    ref = np.zeros(nu.shape)
    k = np.argmin(np.abs(nu), axis=-1)
    np.put_along_axis(ref, k[..., None], 1.0, axis=-1)
    return ref


def _frobenius(A):
    return np.sqrt(np.einsum("...ij,...ij->...", A, A))


def _traceless(A, nu):
    u1, u2 = tangent_frame(nu, _generic_reference(nu))
    a11, a12, a22 = frame_matrix(A, u1, u2)
    return np.sqrt(0.5 * (a11 - a22) ** 2 + 2 * a12**2)


def _pointwise_lambda(Hg, Hq, nu):
    u1, u2 = tangent_frame(nu, _generic_reference(nu))
    g11, g12, g22 = frame_matrix(Hg, u1, u2)
    q11, q12, q22 = frame_matrix(Hq, u1, u2)
    return -(g11 * q22 - 2 * g12 * q12 + g22 * q11) / (q11 * q22 - q12**2)


# ---------------------------------------------------------------------------
# the w field


@dataclass(frozen=True, eq=False)
class WField:
    """``A_w = A_gamma + (Lambda/2) A_q`` on a grid, with pointwise evaluation.

    ``sampler(directions)`` returns the ambient 3x3 tensor at arbitrary
    directions (exact for analytic data, interpolated otherwise). ``scale`` is
    the reference magnitude used for relative thresholds.
    """

    grid: object
    tensor: SymTensorField
    sampler: object
    lam: object
    scale: float
    w: ScalarField | None = None
    q: object = None
    gamma: object = None

    @property
    def deficiency(self):
        return ScalarField(self.grid, self.tensor.frobenius())

    @property
    def anisotropy(self):
        return ScalarField(self.grid, self.tensor.traceless_norm())

    def at(self, directions):
        return self.sampler(np.asarray(directions, dtype=float))

    def deficiency_at(self, directions):
        return _frobenius(self.at(directions))

    def anisotropy_at(self, directions):
        d = np.asarray(directions, dtype=float)
        return _traceless(self.at(d), d)


def _interp_sampler(grid, tensor):
    amb = tensor.ambient()

    def sample(d):
        A = grid.interpolate(amb, d)
        P = np.eye(3) - d[..., :, None] * d[..., None, :]
        return P @ A @ P

    return sample


def _closure_tensor(f):
    if isinstance(f, AnisotropyDensity):
        return f.tensor
    if isinstance(f, ScalarField) and f.analytic is not None:
        return f.analytic.hessian
    return None


def w_field(q, gamma, lam=None, *, camc_tol=1e-6, exact=True):
    """Build ``w = gamma + (Lambda/2) q`` and ``A_w`` for a CAMC surface.

    ``lam`` defaults to the mean of the computed Lambda. The Lambda field must be
    constant to ``camc_tol`` (relative), otherwise the surface is not CAMC.
    """
    S = from_support(q, exact=exact)
    grid = S.grid
    lam_field = camc_lambda(S, gamma, exact).values
    mean = float(np.mean(lam_field))
    spread = float(np.max(np.abs(lam_field - mean)))
    if spread > camc_tol * max(1.0, abs(mean)):
        raise DomainError(f"not a CAMC surface: Lambda varies by {spread:.3e} around {mean:.6g}", value=spread)
    lam = mean if lam is None else float(lam)
    Ag = gamma_tensor(gamma, grid, exact)
    tensor = Ag + (0.5 * lam) * S.A_q
    gq = gamma.field(grid) if isinstance(gamma, AnisotropyDensity) else gamma
    w = gq + (0.5 * lam) * S.q
    tg, tq = _closure_tensor(gamma), _closure_tensor(S.q)
    if exact and tg is not None and tq is not None:
        def sampler(d):
            return tg(d) + (0.5 * lam) * tq(d)
    else:
        sampler = _interp_sampler(grid, tensor)
    scale = float(np.median(Ag.frobenius()))
    return WField(grid, tensor, sampler, lam, scale, w, S.q, gamma)


def pointwise_w_field(q, gamma, exact=True):
    """``A_w`` with the local value ``Lambda(nu)``; zeros are A-umbilics of any surface."""
    S = from_support(q, exact=exact)
    grid = S.grid
    lam = camc_lambda(S, gamma, exact).values
    Ag = gamma_tensor(gamma, grid, exact)
    tensor = Ag + S.A_q * (0.5 * lam)
    tg, tq = _closure_tensor(gamma), _closure_tensor(S.q)
    if exact and tg is not None and tq is not None:
        def sampler(d):
            Hg, Hq = tg(d), tq(d)
            lam_d = _pointwise_lambda(Hg, Hq, d)
            return Hg + (0.5 * lam_d)[..., None, None] * Hq
    else:
        sampler = _interp_sampler(grid, tensor)
    scale = float(np.median(Ag.frobenius()))
    return WField(grid, tensor, sampler, lam, scale, None, S.q, gamma)


def synthetic_w_field(grid, sampler, scale=1.0):
    """Wrap an arbitrary ambient tensor sampler (manufactured test fields)."""
    A = sampler(grid.directions)
    return WField(grid, SymTensorField.from_ambient(grid, A), sampler, None, float(scale))


def umbilic_translation(wf, p):
    """Translation ``b`` making ``chi + (Lambda/2) X`` vanish at ``p`` once ``q -> q - b.nu``.

    After the shift ``w(p) = 0`` and ``Dw(p) = 0``; ``A_w`` is unchanged.
    """
    if wf.q is None or wf.gamma is None or np.ndim(wf.lam) != 0 or wf.lam == 0:
        raise ConfigurationError("translation needs a CAMC w field with nonzero Lambda")
    p = normalize(p)
    chi = wf.gamma.wulff_point(p) if isinstance(wf.gamma, AnisotropyDensity) else wf.gamma.analytic.gradient(p)
    X = wf.q.analytic.gradient(p)
    return X + (2.0 / wf.lam) * chi


# ---------------------------------------------------------------------------
# model Hessian of the leading harmonic polynomial


@dataclass(frozen=True)
class ModelHessianParams:
    N: int
    Lambda1: float
    Lambda2: float
    rho: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if self.N < 3:
            raise ConfigurationError(f"leading order N must be >= 3, got {self.N}")
        if self.Lambda1 <= 0 or self.Lambda2 <= 0:
            raise ConfigurationError("Lambda1 and Lambda2 must be positive")


def _params(args, kwargs):
    if args and isinstance(args[0], ModelHessianParams):
        p = args[0]
        return p.N, p.Lambda1, p.Lambda2, p.rho, p.theta
    names = ("N", "Lambda1", "Lambda2", "rho", "theta")
    vals = dict(zip(names, args))
    vals.update(kwargs)
    ModelHessianParams(vals["N"], vals["Lambda1"], vals["Lambda2"])
    return vals["N"], vals["Lambda1"], vals["Lambda2"], vals.get("rho", 1.0), vals.get("theta", 0.0)


def model_hessian(*args, **kwargs):
    """Hessian in the t-coordinates of the degree-N harmonic model at ``(rho, theta)``.

    Accepts a ``ModelHessianParams`` or ``(N, Lambda1, Lambda2, rho, theta)``;
    ``rho`` and ``theta`` may be arrays. Returns shape (..., 2, 2).
    """
    N, L1, L2, rho, theta = _params(args, kwargs)
    rho, theta = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(theta, dtype=float))
    amp = N * (N - 1) * rho ** (N - 2)
    c, s = np.cos((N - 2) * theta), np.sin((N - 2) * theta)
    P = np.empty(rho.shape + (2, 2))
    P[..., 0, 0] = amp * c / L1**2
    P[..., 0, 1] = P[..., 1, 0] = -amp * s / (L1 * L2)
    P[..., 1, 1] = -amp * c / L2**2
    return P


def model_delta(N, L1, L2, theta):
    c = np.cos((N - 2) * np.asarray(theta, dtype=float))
    return np.sqrt(c**2 * (1.0 / L2**2 - 1.0 / L1**2) ** 2 + 4.0 / (L1**2 * L2**2))


def model_eigenvalues(*args, **kwargs):
    """``(lambda_plus, lambda_minus, Delta)`` of the model Hessian in closed form."""
    N, L1, L2, rho, theta = _params(args, kwargs)
    theta = np.asarray(theta, dtype=float)
    delta = model_delta(N, L1, L2, theta)
    base = np.cos((N - 2) * theta) * (1.0 / L1**2 - 1.0 / L2**2)
    amp = 0.5 * N * (N - 1) * np.asarray(rho, dtype=float) ** (N - 2)
    return amp * (base + delta), amp * (base - delta), delta


def line_angle(a11, a12, a22):
    """Angle (mod pi) of the eigendirection of the larger eigenvalue."""
    return 0.5 * np.arctan2(2.0 * a12, a11 - a22)


def winding(angles):
    """Total change of a closed sequence of line-field angles, in units of 2 pi.

    Raises ``UndersampledError`` if two successive samples differ by more than
    pi/4 modulo pi.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.size < MIN_LOOP_SAMPLES:
        raise UndersampledError(f"need at least {MIN_LOOP_SAMPLES} loop samples, got {angles.size}")
    d = np.diff(angles)
    d = (d + 0.5 * np.pi) % np.pi - 0.5 * np.pi
    jump = float(np.max(np.abs(d)))
    if jump > 0.25 * np.pi:
        raise UndersampledError(f"line field jumps by {jump:.3f} rad between samples")
    return float(np.sum(d) / (2 * np.pi))


def rotation_index(angles, return_raw=False):
    """Half-integer rotation index of a line field sampled along a closed loop."""
    raw = winding(angles)
    J = round(2 * raw) / 2
    if abs(raw - J) >= 0.05:
        raise IndexResolutionError(f"winding {raw:.4f} is not within 0.05 of a half-integer")
    return (J, raw) if return_raw else J


def model_index(N, L1, L2, return_raw=False):
    """Rotation index of the lambda_plus eigendirection of the model Hessian around 0."""
    ModelHessianParams(N, L1, L2)
    m = 256
    while True:
        theta = np.linspace(0.0, 2 * np.pi, m)
        P = model_hessian(N, L1, L2, 1.0, theta)
        ang = line_angle(P[..., 0, 0], P[..., 0, 1], P[..., 1, 1])
        try:
            return rotation_index(ang, return_raw=return_raw)
        except UndersampledError:
            if m >= MAX_LOOP_SAMPLES:
                raise
            m *= 2


def model_sampler(center, N, L1, L2, amplitude=1.0):
    """Manufactured ``A_w`` whose chart form near ``center`` is the model Hessian.

    Chart coordinates ``y`` around ``center`` play the role of ``t``; the field
    is defined on the open hemisphere around ``center``.
    """
    ModelHessianParams(N, L1, L2)
    chart = Chart.at(center, extent=1.0)

    def sample(d):
        d = np.asarray(d, dtype=float)
        y1, y2 = chart.from_sphere(d)
        xi1, xi2 = y1 / L1, y2 / L2
        P = amplitude * model_hessian(N, L1, L2, np.hypot(xi1, xi2), np.arctan2(xi2, xi1))
        M = chart.tangent_basis(d)
        G = np.swapaxes(M, -1, -2) @ M
        K = M @ np.linalg.inv(G)
        A = K @ P @ np.swapaxes(K, -1, -2)
        A[(d @ chart.center) <= 0] = 0.0
        return A

    return sample


# ---------------------------------------------------------------------------
# the appendix integral


def appendix_phase(z, psi):
    """``arctan((1/2)((z + 1/z) cot psi - sqrt(4 + (z - 1/z)^2 cos^2 psi) / sin psi))``."""
    psi = np.asarray(psi, dtype=float)
    root = np.sqrt(4.0 + (z - 1.0 / z) ** 2 * np.cos(psi) ** 2)
    return np.arctan(0.5 * ((z + 1.0 / z) / np.tan(psi) - root / np.sin(psi)))


def appendix_integrand(z, psi):
    """Closed-form derivative of ``appendix_phase`` in ``psi``."""
    if np.any(np.asarray(z) <= 0):
        raise DomainError("z must be positive")
    psi = np.asarray(psi, dtype=float)
    return -z * (z**2 + 1.0) / ((z**2 - 1.0) ** 2 * np.cos(psi) ** 2 + 4.0 * z**2)


def appendix_integral(z, rtol=1e-14, integrand=appendix_integrand):
    """``int_0^{2 pi}`` of the integrand by the periodic trapezoid rule.

    The integrand is analytic and periodic, so the rule converges
    geometrically; the node count doubles until two estimates agree.
    """
    if z <= 0:
        raise DomainError("z must be positive")
    m = 64
    prev = None
    while m <= 1 << 22:
        psi = np.arange(m) * (2 * np.pi / m)
        val = float(np.sum(integrand(z, psi)) * (2 * np.pi / m))
        if prev is not None and abs(val - prev) <= rtol * max(1.0, abs(val)):
            return val
        prev, m = val, 2 * m
    return prev


# ---------------------------------------------------------------------------
# probing


@dataclass(frozen=True)
class LineFieldLoop:
    radius: float
    phi: np.ndarray
    directions: np.ndarray
    angles: np.ndarray
    unwrapped: np.ndarray


def eigendirection_loop(wf, p, radius, m=256, chart=None):
    """Angles (mod pi) of the lambda_plus eigendirection of ``A_w`` along a loop.

    Angles are measured in the orthonormal frame obtained by projecting the
    probe chart axes onto each tangent plane.
    """
    loop = sample_loop(p, radius, m, chart=chart)
    d = loop.directions
    A = wf.at(d)
    u1, u2 = tangent_frame(d, loop.chart.e1)
    a11, a12, a22 = frame_matrix(A, u1, u2)
    split = np.sqrt(0.25 * (a11 - a22) ** 2 + a12**2)
    floor = 1e-12 * max(wf.scale, float(np.max(np.abs(A))))
    if np.min(split) <= floor:
        raise ProbeError(f"eigenvalues of A_w coincide on the loop of radius {radius:.3g}")
    ang = line_angle(a11, a12, a22)
    d_ang = (np.diff(ang) + 0.5 * np.pi) % np.pi - 0.5 * np.pi
    unwrapped = np.concatenate([[ang[0]], ang[0] + np.cumsum(d_ang)])
    return LineFieldLoop(radius, loop.phi, d, ang, unwrapped)


def probe_index(wf, p, radius, m=256):
    """Rotation index on one loop, densifying the loop if undersampled."""
    while True:
        loop = eigendirection_loop(wf, p, radius, m)
        try:
            return rotation_index(loop.angles, return_raw=True)
        except UndersampledError:
            if m >= MAX_LOOP_SAMPLES:
                raise
            m *= 2


@dataclass(frozen=True)
class OrderEstimate:
    N: int | None
    slope: float
    resolved: bool


def default_radii(wf, count=6):
    h = wf.grid.h
    hi = min(10 * h, 0.4)
    return np.geomspace(min(2 * h, 0.2 * hi), hi, count)


def estimate_order(wf, p, radii=None, m=64):
    """Leading order ``N`` from the log-log slope of ``|A_w|`` around ``p``.

    ``|A_w| ~ rho^(N-2)``; unresolved when the slope is not within 0.2 of an
    integer or gives ``N < 3``.
    """
    radii = default_radii(wf) if radii is None else np.asarray(radii, dtype=float)
    means = []
    for r in radii:
        loop = sample_loop(p, float(r), m)
        means.append(float(np.mean(wf.deficiency_at(loop.directions[:-1]))))
    means = np.asarray(means)
    if np.any(means <= 0) or not np.all(np.isfinite(means)):
        return OrderEstimate(None, float("nan"), False)
    slope = float(np.polyfit(np.log(radii), np.log(means), 1)[0])
    k = round(slope)
    ok = abs(slope - k) < 0.2 and k + 2 >= 3
    return OrderEstimate(int(k + 2) if ok else None, slope, ok)


# ---------------------------------------------------------------------------
# detection


@dataclass(frozen=True)
class UmbilicPoint:
    direction: np.ndarray
    deficiency_min: float
    order_N: int | None
    index_J: float | None
    slope: float = float("nan")
    resolved: bool = True

    def to_dict(self):
        return {
            "direction": [float(v) for v in self.direction],
            "deficiency_min": float(self.deficiency_min),
            "order_N": self.order_N,
            "index_J": self.index_J,
            "resolved": bool(self.resolved),
        }


@dataclass(frozen=True)
class UmbilicScan:
    totally_umbilic: bool
    points: list = field(default_factory=list)
    tol: float = 0.0

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _local_minima(grid, values):
    dirs = grid.directions.reshape(-1, 3)
    v = values.ravel()
    tree = cKDTree(dirs)
    nbrs = tree.query_ball_point(dirs, r=1.6 * grid.h)
    out = []
    for i, nb in enumerate(nbrs):
        if v[i] <= v[nb].min():
            out.append(i)
    return dirs[out], v[out]


def refine_minimum(measure, start, step, iterations=80):
    """Minimize ``measure(direction)^2`` by repeated local quadratic fits."""
    c = normalize(start)
    s = float(step)
    offs = np.array([(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)], dtype=float)
    basis = np.stack([np.ones(9), offs[:, 0], offs[:, 1], offs[:, 0] ** 2, offs[:, 0] * offs[:, 1], offs[:, 1] ** 2], -1)
    for _ in range(iterations):
        chart = Chart.at(c, extent=1.0)
        y = s * offs
        vals = measure(chart.to_sphere(y[:, 0], y[:, 1])) ** 2
        coef = np.linalg.lstsq(basis, vals, rcond=None)[0]
        H = np.array([[2 * coef[3], coef[4]], [coef[4], 2 * coef[5]]])
        g = coef[1:3]
        try:
            ok = np.all(np.linalg.eigvalsh(H) > 0)
            t = -np.linalg.solve(H, g) if ok else None
        except np.linalg.LinAlgError:
            t = None
        if t is None or np.linalg.norm(t) > 2.0:
            t = offs[int(np.argmin(vals))]
        t = np.clip(t, -2.0, 2.0)
        moved = float(np.linalg.norm(t)) * s
        c = chart.to_sphere(s * t[0], s * t[1])
        s = max(min(s, 4 * moved), 0.25 * s)
        if s < 1e-12:
            break
    return c, float(measure(c[None])[0])


def _dedupe(points, radius):
    kept = []
    for d, v in sorted(points, key=lambda t: t[1]):
        if all(np.arccos(np.clip(d @ k, -1, 1)) > radius for k, _ in kept):
            kept.append((d, v))
    return kept


def _scan(wf, measure_grid, measure_at, tol):
    grid = wf.grid
    cand, vals = _local_minima(grid, measure_grid)
    screen = 0.5 * float(np.median(measure_grid))
    found = []
    for d, v in zip(cand, vals):
        if v > screen:
            continue
        d2, v2 = refine_minimum(measure_at, d, grid.h)
        if v2 < tol:
            found.append((d2, v2))
    return _dedupe(found, 2 * grid.h)


def _separations(points):
    """Angular distance from each point to its nearest neighbour."""
    if len(points) < 2:
        return [np.inf] * len(points)
    D = np.array([d for d, _ in points])
    ang = np.arccos(np.clip(D @ D.T, -1.0, 1.0))
    np.fill_diagonal(ang, np.inf)
    return list(ang.min(axis=1))


def _probe(wf, d, v, with_order=True, separation=np.inf):
    h = wf.grid.h
    est = estimate_order(wf, d) if with_order else OrderEstimate(None, float("nan"), True)
    J = None
    resolved = est.resolved
    try:
        # both loops must enclose this point only
        r2 = min(6 * h, 0.4, 0.45 * np.tan(min(separation, 1.0)))
        r1 = min(3 * h, 0.5 * r2)
        J1, _ = probe_index(wf, d, r1)
        J2, _ = probe_index(wf, d, r2)
        if J1 == J2:
            J = J1
        else:
            resolved = False
    except (ProbeError, IndexResolutionError, UndersampledError):
        resolved = False
    return UmbilicPoint(d, v, est.N, J, est.slope, resolved and J is not None)


def default_tol(wf):
    return 1e-6 * wf.scale


def detect_umbilics(wf, tol=None):
    """Isolated zeros of ``A_w``, each with its order and rotation index.

    Returns an ``UmbilicScan``; ``totally_umbilic`` is set (and no points are
    listed) when the deficiency is below ``tol`` at every node.
    """
    tol = default_tol(wf) if tol is None else float(tol)
    D = wf.deficiency.values
    if float(D.max()) < tol:
        return UmbilicScan(True, [], tol)
    found = _scan(wf, D, wf.deficiency_at, tol)
    pts = [_probe(wf, d, v, separation=s) for (d, v), s in zip(found, _separations(found))]
    return UmbilicScan(False, pts, tol)


@dataclass(frozen=True)
class PoincareHopf:
    total: float | None
    singularities: list
    partial: bool
    totally_umbilic: bool = False

    @property
    def contradiction(self):
        """All indices negative although a sphere's line-field indices sum to 2."""
        idx = [s.index_J for s in self.singularities if s.index_J is not None]
        return bool(idx) and all(j < 0 for j in idx)


def poincare_hopf_sum(wf, tol=None):
    """Sum of rotation indices over the isotropic points of ``A_w``."""
    tol = default_tol(wf) if tol is None else float(tol)
    if float(wf.deficiency.values.max()) < tol:
        return PoincareHopf(None, [], False, True)
    A = wf.anisotropy.values
    found = _scan(wf, A, wf.anisotropy_at, tol)
    pts = [_probe(wf, d, v, with_order=False, separation=s) for (d, v), s in zip(found, _separations(found))]
    partial = any(p.index_J is None or not p.resolved for p in pts)
    total = float(sum(p.index_J for p in pts if p.index_J is not None))
    return PoincareHopf(total, pts, partial)
