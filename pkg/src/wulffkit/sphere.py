"""Gnomonic cubed-sphere discretization of S^2.

Each cube face is a central-projection chart ``y -> (c + y1 e1 + y2 e2) / s``
with ``s = sqrt(1 + |y|^2)``. In such a chart the lifted function
``f_(y) = s f(pi^{-1} y)`` is the restriction of the 1-homogeneous extension
of ``f`` to the tangent plane, so ``s * Hess_y f_`` is ``D^2 f + f I`` written
as a bilinear form in the chart basis. Finite differences of the lift are
therefore all that is needed for the curvature tensors.

Array layout: owned nodes live in arrays of shape ``(6, n, n)`` indexed
``[face, i, j]`` with ``y1 = y[i]`` and ``y2 = y[j]`` (cell centres of an
``n x n`` partition of ``[-1, 1]^2``). Extended arrays carry ``GHOST`` halo
layers on each side, shape ``(6, n + 2*GHOST, n + 2*GHOST)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, RangeError
from .functions import Closure, Linear, Radial

FACE_NAMES = ("+x", "-x", "+y", "-y", "+z", "-z")
GHOST = 2
INTERP_POINTS = 4

_FRAMES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, -1, 0), (0, 0, 1)),
    ((0, 1, 0), (-1, 0, 0), (0, 0, 1)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
)


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def direction(x, y, z):
    """Unit vector along (x, y, z)."""
    return normalize([x, y, z])


@dataclass(frozen=True, eq=False)
class Chart:
    """Central projection onto the tangent plane at ``center``.

    ``(e1, e2, center)`` is a right-handed orthonormal triple and ``extent``
    bounds the usable chart radius (cube faces use the square ``|y_i| <= 1``).
    """

    center: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    extent: float = 1.0

    @classmethod
    def at(cls, center, extent=0.5, reference=None):
        """Chart centred at an arbitrary direction (probe chart)."""
        c = normalize(center)
        if reference is None:
            reference = np.eye(3)[int(np.argmin(np.abs(c)))]
        e1 = np.asarray(reference, dtype=float) - np.dot(reference, c) * c
        if np.linalg.norm(e1) < 1e-8:
            e1 = np.eye(3)[int(np.argmin(np.abs(c)))]
            e1 = e1 - np.dot(e1, c) * c
        e1 = normalize(e1)
        e2 = np.cross(c, e1)
        return cls(c, e1, e2, float(extent))

    def to_sphere(self, y1, y2):
        y1 = np.asarray(y1, dtype=float)[..., None]
        y2 = np.asarray(y2, dtype=float)[..., None]
        return normalize(self.center + y1 * self.e1 + y2 * self.e2)

    def from_sphere(self, nu):
        nu = np.asarray(nu, dtype=float)
        d = nu @ self.center
        return nu @ self.e1 / d, nu @ self.e2 / d

    def tangent_basis(self, nu):
        """Projections of ``e1, e2`` onto the tangent plane at ``nu``: shape (..., 3, 2)."""
        nu = np.asarray(nu, dtype=float)
        cols = []
        for e in (self.e1, self.e2):
            cols.append(e - (nu @ e)[..., None] * nu)
        return np.stack(cols, axis=-1)


def _face_charts():
    return tuple(Chart(*(np.array(v, dtype=float) for v in frame)) for frame in _FRAMES)


def _lagrange_stencil(t, n, npts=INTERP_POINTS):
    """Start indices and Lagrange weights for fractional node index ``t``."""
    start = np.clip(np.floor(t).astype(int) - (npts // 2 - 1), 0, n - npts)
    nodes = start[..., None] + np.arange(npts)
    w = np.ones(nodes.shape)
    for a in range(npts):
        for b in range(npts):
            if a != b:
                w[..., a] *= (t - nodes[..., b]) / (a - b)
    return start, w


def _face_weights_ext(n, gauss=10):
    """Quadrature weights on one extended face lattice against ``dy / (1 + |y|^2)^(3/2)``.

    Product integration with centred stencils: each owned cell integrates the
    5x5 tensor Lagrange interpolant through the nodes around its centre
    (reaching into the halo) against the exact gnomonic metric at Gauss points.
    Symmetric stencils keep the weights positive and close to the cell area.
    """
    h = 2.0 / n
    g = GHOST
    xg, wg = np.polynomial.legendre.leggauss(gauss)
    t = 0.5 * xg
    L = np.ones((gauss, 2 * g + 1))
    offs = np.arange(-g, g + 1)
    for a in range(offs.size):
        for b in range(offs.size):
            if a != b:
                L[:, a] *= (t - offs[b]) / (offs[a] - offs[b])
    centres = -1.0 + (np.arange(n) + 0.5) * h
    yq = (centres[:, None] + h * t[None, :]).ravel()
    w1 = np.tile(wg * 0.5 * h, n)
    mu = np.outer(w1, w1) / (1.0 + yq[:, None] ** 2 + yq[None, :] ** 2) ** 1.5
    mu = mu.reshape(n, gauss, n, gauss)
    cell = np.einsum("pa,ipjq,qb->ijab", L, mu, L)
    m = n + 2 * g
    W = np.zeros((m, m))
    for a in range(offs.size):
        for b in range(offs.size):
            W[a:a + n, b:b + n] += cell[:, :, a, b]
    return W


class SphericalGrid:
    """Six gnomonic charts with cell-centred lattices, halos and quadrature."""

    def __init__(self, n):
        if int(n) != n or n < 8:
            raise ConfigurationError(f"grid needs at least 8 nodes per chart edge, got {n}")
        self.n = n = int(n)
        self.h = 2.0 / n
        self.charts = _face_charts()
        g = GHOST
        self.y = -1.0 + (np.arange(-g, n + g) + 0.5) * self.h
        self.y_owned = self.y[g:-g]
        Y1, Y2 = np.meshgrid(self.y, self.y, indexing="ij")
        self.Y1_ext, self.Y2_ext = Y1, Y2
        self.lift_ext = np.sqrt(1.0 + Y1**2 + Y2**2)
        self.directions_ext = np.stack(
            [c.to_sphere(Y1, Y2) for c in self.charts], axis=0
        )
        sl = slice(g, n + g)
        self.Y1 = Y1[sl, sl]
        self.Y2 = Y2[sl, sl]
        self.lift = self.lift_ext[sl, sl]
        self.directions = np.ascontiguousarray(self.directions_ext[:, sl, sl])

    @cached_property
    def weights(self):
        """Quadrature weights at owned nodes; halo weights are folded back through the ghost map."""
        w_ext = np.broadcast_to(_face_weights_ext(self.n), self.ext_shape).ravel()
        w = (self.ghost_matrix.T @ w_ext).reshape(self.shape)
        # ghost interpolation reproduces constants only to O(h^4); restore the exact area
        return w * (4.0 * np.pi / w.sum())

    # -- basic geometry --------------------------------------------------------
    @property
    def shape(self):
        return (6, self.n, self.n)

    @property
    def size(self):
        return 6 * self.n * self.n

    @property
    def ext_shape(self):
        m = self.n + 2 * GHOST
        return (6, m, m)

    def owned(self, ext):
        """Owned slice of an extended array."""
        g = GHOST
        return ext[:, g:-g, g:-g]

    @cached_property
    def gram(self):
        """Gram matrix of the tangential chart basis at owned nodes, (6, n, n, 2, 2)."""
        y = np.stack([self.Y1, self.Y2], axis=-1)
        s2 = (1.0 + self.Y1**2 + self.Y2**2)[..., None, None]
        G = np.eye(2) - y[..., :, None] * y[..., None, :] / s2
        return np.broadcast_to(G, (6,) + G.shape).copy()

    @cached_property
    def tangent_basis(self):
        """Tangential projections of the chart axes at owned nodes, (6, n, n, 3, 2)."""
        return np.stack(
            [c.tangent_basis(self.directions[f]) for f, c in enumerate(self.charts)], axis=0
        )

    # -- ownership and interpolation -------------------------------------------
    def locate(self, directions):
        """Owning face and chart coordinates of arbitrary directions."""
        d = np.asarray(directions, dtype=float)
        axis = np.argmax(np.abs(d), axis=-1)
        sign = np.take_along_axis(d, axis[..., None], axis=-1)[..., 0]
        face = 2 * axis + (sign < 0)
        centers = np.array([c.center for c in self.charts])
        E1 = np.array([c.e1 for c in self.charts])
        E2 = np.array([c.e2 for c in self.charts])
        dc = np.einsum("...i,...i->...", d, centers[face])
        y1 = np.einsum("...i,...i->...", d, E1[face]) / dc
        y2 = np.einsum("...i,...i->...", d, E2[face]) / dc
        return face, y1, y2

    def interpolation_weights(self, directions):
        """Flat owned-node indices and weights reproducing values at ``directions``.

        Interpolates the lift in the owner chart with a tensor Lagrange stencil
        (4th order), so any restriction of a linear function is reproduced exactly.
        Returns arrays of shape (K, 16).
        """
        d = np.asarray(directions, dtype=float).reshape(-1, 3)
        face, y1, y2 = self.locate(d)
        n, h = self.n, self.h
        s1, w1 = _lagrange_stencil((y1 + 1.0) / h - 0.5, n)
        s2, w2 = _lagrange_stencil((y2 + 1.0) / h - 0.5, n)
        I = s1[:, None, None] + np.arange(INTERP_POINTS)[None, :, None]
        J = s2[:, None, None] + np.arange(INTERP_POINTS)[None, None, :]
        I, J = np.broadcast_arrays(I, J)
        lift_nodes = self.lift[I, J]
        lift_target = np.sqrt(1.0 + y1**2 + y2**2)
        W = w1[:, :, None] * w2[:, None, :] * lift_nodes / lift_target[:, None, None]
        idx = (face[:, None, None] * n + I) * n + J
        k = INTERP_POINTS**2
        return idx.reshape(-1, k), W.reshape(-1, k)

    def interpolate(self, values, directions):
        """Evaluate owned-node data (shape (6, n, n, ...)) at arbitrary directions."""
        directions = np.asarray(directions, dtype=float)
        idx, W = self.interpolation_weights(directions)
        flat = np.asarray(values).reshape((self.size,) + np.shape(values)[3:])
        out = np.einsum("kp,kp...->k...", W, flat[idx])
        return out.reshape(directions.shape[:-1] + out.shape[1:])

    @cached_property
    def ghost_matrix(self):
        """Sparse map from owned values (6n^2) to extended values (6(n+2G)^2)."""
        n, g = self.n, GHOST
        m = n + 2 * g
        ext_idx = np.arange(6 * m * m).reshape(6, m, m)
        owned_rows = ext_idx[:, g:-g, g:-g].ravel()
        owned_cols = np.arange(self.size)
        mask = np.ones((6, m, m), dtype=bool)
        mask[:, g:-g, g:-g] = False
        ghost_rows = ext_idx[mask]
        idx, W = self.interpolation_weights(self.directions_ext[mask])
        rows = np.concatenate([owned_rows, np.repeat(ghost_rows, idx.shape[1])])
        cols = np.concatenate([owned_cols, idx.ravel()])
        vals = np.concatenate([np.ones(self.size), W.ravel()])
        return sp.csr_matrix((vals, (rows, cols)), shape=(6 * m * m, self.size))

    def extend(self, values):
        """Fill halo layers of owned-node data by interpolation from owner charts."""
        values = np.asarray(values, dtype=float)
        tail = values.shape[3:]
        flat = values.reshape(self.size, -1)
        ext = self.ghost_matrix @ flat
        return ext.reshape(self.ext_shape + tail)

    # -- finite-difference operators ------------------------------------------
    def _stencil(self, offsets):
        """Sparse operator summing ``coef * ext[i+di, j+dj]`` at owned nodes."""
        n, g = self.n, GHOST
        m = n + 2 * g
        f, i, j = np.meshgrid(np.arange(6), np.arange(n), np.arange(n), indexing="ij")
        rows = ((f * n + i) * n + j).ravel()
        R, C, V = [], [], []
        for (di, dj), coef in offsets.items():
            cols = ((f * m + i + g + di) * m + j + g + dj).ravel()
            R.append(rows)
            C.append(cols)
            V.append(np.full(rows.size, float(coef)))
        return sp.csr_matrix(
            (np.concatenate(V), (np.concatenate(R), np.concatenate(C))),
            shape=(self.size, 6 * m * m),
        )

    @cached_property
    def hessian_operators(self):
        """Sparse ``(H11, H12, H22)`` with ``H_ab f = s * d_a d_b (s f)`` at owned nodes.

        Second-order centred differences of the lift; the result is the chart
        form of ``D^2 f + f I``.
        """
        h = self.h
        lift_ext = sp.diags(np.broadcast_to(self.lift_ext, self.ext_shape).ravel())
        lift_own = sp.diags(np.broadcast_to(self.lift, self.shape).ravel())
        E = self.ghost_matrix
        S11 = self._stencil({(1, 0): 1, (0, 0): -2, (-1, 0): 1}) / h**2
        S22 = self._stencil({(0, 1): 1, (0, 0): -2, (0, -1): 1}) / h**2
        S12 = self._stencil({(1, 1): 1, (1, -1): -1, (-1, 1): -1, (-1, -1): 1}) / (4 * h**2)
        base = lift_ext @ E
        return tuple((lift_own @ (S @ base)).tocsr() for S in (S11, S12, S22))

    def lifted_positions_ext(self, values, layers=1):
        """Support points ``X = Df + f nu`` from lift derivatives on extended nodes.

        Returns shape (6, n+2*layers, n+2*layers, 3), covering owned nodes plus
        ``layers`` halo rings (requires ``layers < GHOST``).
        """
        if not 0 <= layers < GHOST:
            raise ConfigurationError("layers must be smaller than the halo width")
        ext = self.extend(values) * self.lift_ext
        h = self.h
        lo, hi = GHOST - layers, self.n + GHOST + layers
        core = ext[:, lo:hi, lo:hi]
        d1 = (ext[:, lo + 1:hi + 1, lo:hi] - ext[:, lo - 1:hi - 1, lo:hi]) / (2 * h)
        d2 = (ext[:, lo:hi, lo + 1:hi + 1] - ext[:, lo:hi, lo - 1:hi - 1]) / (2 * h)
        Y1 = self.Y1_ext[lo:hi, lo:hi]
        Y2 = self.Y2_ext[lo:hi, lo:hi]
        normal = core - Y1 * d1 - Y2 * d2
        out = np.empty(core.shape + (3,))
        for f, c in enumerate(self.charts):
            out[f] = d1[f][..., None] * c.e1 + d2[f][..., None] * c.e2 + normal[f][..., None] * c.center
        return out


def build_grid(n):
    """Cubed-sphere grid with ``6 n^2`` owned nodes."""
    return SphericalGrid(n)


# ---------------------------------------------------------------------------
# fields


class ScalarField:
    """Node values on a grid, optionally backed by an exact analytic closure."""

    def __init__(self, grid, values, analytic=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ConfigurationError(f"values must have shape {grid.shape}, got {values.shape}")
        self.grid = grid
        self.values = values
        self.values.setflags(write=False)
        self.analytic = analytic

    @classmethod
    def from_closure(cls, grid, closure):
        return cls(grid, closure.value(grid.directions), analytic=closure)

    @classmethod
    def constant(cls, grid, c=1.0):
        return cls.from_closure(grid, Radial(c))

    @classmethod
    def linear(cls, grid, a):
        return cls.from_closure(grid, Linear(a))

    def on_grid(self):
        """Same values without the analytic closure (forces finite differences)."""
        return ScalarField(self.grid, self.values)

    def ext_values(self):
        if self.analytic is not None:
            return self.analytic.value(self.grid.directions_ext)
        return self.grid.extend(self.values)

    def at(self, directions):
        """Values at arbitrary directions (exact or interpolated)."""
        if self.analytic is not None:
            return self.analytic.value(np.asarray(directions, dtype=float))
        return self.grid.interpolate(self.values, directions)

    # arithmetic keeps closures whenever both operands have one
    def _combine(self, other, sign):
        if isinstance(other, (int, float)):
            other = ScalarField.constant(self.grid, other)
        if not isinstance(other, ScalarField):
            return NotImplemented
        if other.grid is not self.grid:
            raise ConfigurationError("fields live on different grids")
        closure = None
        if self.analytic is not None and other.analytic is not None:
            closure = self.analytic + sign * other.analytic
        return ScalarField(self.grid, self.values + sign * other.values, closure)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating)):
            return NotImplemented
        closure = None if self.analytic is None else float(c) * self.analytic
        return ScalarField(self.grid, float(c) * self.values, closure)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        kind = "analytic" if self.analytic is not None else "grid"
        return f"ScalarField(n={self.grid.n}, {kind})"


class SymTensorField:
    """Symmetric 2x2 bilinear forms per owned node, in chart coordinates.

    ``comps[..., 0:3] = (a11, a12, a22)`` is the form ``B_ab = A(P e_a, P e_b)``
    of a tangential symmetric tensor ``A``. Invariants of the endomorphism
    (trace, determinant, eigenvalues, Frobenius norm) account for the
    non-orthonormal chart basis through the Gram matrix.
    """

    def __init__(self, grid, comps):
        comps = np.asarray(comps, dtype=float)
        if comps.shape != grid.shape + (3,):
            raise ConfigurationError("tensor components must have shape (6, n, n, 3)")
        self.grid = grid
        self.comps = comps

    @classmethod
    def from_matrix(cls, grid, B):
        return cls(grid, np.stack([B[..., 0, 0], 0.5 * (B[..., 0, 1] + B[..., 1, 0]), B[..., 1, 1]], axis=-1))

    @classmethod
    def from_ambient(cls, grid, A):
        """Chart form of ambient 3x3 tangential tensors at owned nodes."""
        M = grid.tangent_basis
        B = np.einsum("...ia,...ij,...jb->...ab", M, A, M)
        return cls.from_matrix(grid, B)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape + (3,)))

    def matrix(self):
        a, b, c = self.comps[..., 0], self.comps[..., 1], self.comps[..., 2]
        return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)

    def _cholesky_inv(self):
        G = self.grid.gram
        l11 = np.sqrt(G[..., 0, 0])
        l21 = G[..., 1, 0] / l11
        l22 = np.sqrt(G[..., 1, 1] - l21**2)
        Li = np.zeros(G.shape)
        Li[..., 0, 0] = 1.0 / l11
        Li[..., 1, 1] = 1.0 / l22
        Li[..., 1, 0] = -l21 / (l11 * l22)
        return Li

    def orthonormal(self):
        """Matrix of the endomorphism in an orthonormal tangent frame (symmetric)."""
        Li = self._cholesky_inv()
        return Li @ self.matrix() @ np.swapaxes(Li, -1, -2)

    def trace(self):
        G = self.grid.gram
        a, b, c = self.comps[..., 0], self.comps[..., 1], self.comps[..., 2]
        detG = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] ** 2
        return (a * G[..., 1, 1] + c * G[..., 0, 0] - 2 * b * G[..., 0, 1]) / detG

    def det(self):
        G = self.grid.gram
        a, b, c = self.comps[..., 0], self.comps[..., 1], self.comps[..., 2]
        detG = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] ** 2
        return (a * c - b * b) / detG

    def eigenvalues(self):
        """Ascending eigenvalues of the endomorphism, shape (6, n, n, 2)."""
        return np.linalg.eigvalsh(self.orthonormal())

    def frobenius(self):
        T = self.orthonormal()
        return np.sqrt(np.einsum("...ab,...ab->...", T, T))

    def traceless_norm(self):
        """Frobenius norm of the trace-free part (zero exactly at isotropic points)."""
        T = self.orthonormal()
        return np.sqrt(0.25 * (T[..., 0, 0] - T[..., 1, 1]) ** 2 + T[..., 0, 1] ** 2) * np.sqrt(2.0)

    def ambient(self):
        """Ambient 3x3 tangential tensors ``M G^-1 B G^-1 M^T``."""
        M = self.grid.tangent_basis
        Gi = np.linalg.inv(self.grid.gram)
        K = M @ Gi
        return K @ self.matrix() @ np.swapaxes(K, -1, -2)

    def ratio_trace(self, other):
        """``Trace(self @ other^-1)``; invariant under the chart congruence."""
        a, b, c = self.comps[..., 0], self.comps[..., 1], self.comps[..., 2]
        p, r, s = other.comps[..., 0], other.comps[..., 1], other.comps[..., 2]
        return (a * s - 2 * b * r + c * p) / (p * s - r * r)

    def is_positive_definite(self):
        a, b, c = self.comps[..., 0], self.comps[..., 1], self.comps[..., 2]
        return (a > 0) & (a * c - b * b > 0)

    def __add__(self, other):
        if not isinstance(other, SymTensorField):
            return NotImplemented
        return SymTensorField(self.grid, self.comps + other.comps)

    def __sub__(self, other):
        return SymTensorField(self.grid, self.comps - other.comps)

    def __mul__(self, c):
        if isinstance(c, np.ndarray):
            return SymTensorField(self.grid, self.comps * c[..., None])
        return SymTensorField(self.grid, self.comps * float(c))

    __rmul__ = __mul__


def _field_of(grid, f):
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, Closure):
        return ScalarField.from_closure(grid, f)
    raise TypeError(f"cannot interpret {type(f).__name__} as a scalar field")


def chart_lift(f, chart):
    """Lift ``s * f o pi^{-1}`` on the chart lattice including halos.

    ``chart`` is a face index or one of ``grid.charts``.
    """
    grid = f.grid
    face = chart if isinstance(chart, (int, np.integer)) else grid.charts.index(chart)
    return f.ext_values()[face] * grid.lift_ext


def hessian_plus_identity(f, exact=True):
    """Chart form of ``D^2 f + f I`` at every owned node.

    Uses the analytic closure when present (and ``exact``); otherwise
    second-order finite differences of the lift with interpolated halos.
    """
    grid = f.grid
    if exact and f.analytic is not None:
        H = f.analytic.hessian(grid.directions)
        return SymTensorField.from_ambient(grid, H)
    H11, H12, H22 = grid.hessian_operators
    v = f.values.ravel()
    comps = np.stack([H11 @ v, H12 @ v, H22 @ v], axis=-1)
    return SymTensorField(grid, comps.reshape(grid.shape + (3,)))


def support_points(f, exact=True):
    """``Df + f nu`` at owned nodes (positions for a support function)."""
    grid = f.grid
    if exact and f.analytic is not None:
        return f.analytic.gradient(grid.directions)
    return grid.lifted_positions_ext(f.values, layers=0)


def integrate(f, grid=None):
    """Quadrature over S^2 of a field (or raw node array with ``grid``)."""
    if isinstance(f, ScalarField):
        return float(np.sum(f.values * f.grid.weights))
    return float(np.sum(np.asarray(f) * grid.weights))


@dataclass(frozen=True)
class Loop:
    """Closed loop in a probe chart; ``directions[0] == directions[-1]``."""

    chart: Chart
    phi: np.ndarray
    y: np.ndarray
    directions: np.ndarray

    def signed_area(self):
        y1, y2 = self.y[:, 0], self.y[:, 1]
        return 0.5 * float(np.sum(y1[:-1] * y2[1:] - y1[1:] * y2[:-1]))


def sample_loop(center, radius, m=256, chart=None):
    """Counterclockwise circle of chart radius ``radius`` around ``center``."""
    if chart is None:
        chart = Chart.at(center)
    if not 0 < radius <= chart.extent:
        raise RangeError(f"loop radius {radius} outside chart extent {chart.extent}")
    if m < 4:
        raise ConfigurationError("a loop needs at least 4 samples")
    phi = np.linspace(0.0, 2 * np.pi, m)
    y = radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    y[-1] = y[0]
    dirs = chart.to_sphere(y[:, 0], y[:, 1])
    return Loop(chart, phi, y, dirs)
