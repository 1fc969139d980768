"""Analytic closures for functions on the unit sphere.

A function ``f`` on S^2 is stored through its positively 1-homogeneous
extension ``F(x) = |x| f(x/|x|)`` to R^3. This extension carries every
derivative the rest of the package needs:

* ``F(nu) = f(nu)``,
* ``grad F(nu) = Df + f nu`` (support point of a support function, or the
  Wulff map for an anisotropy density),
* ``hess F(nu)`` restricted to the tangent plane is ``D^2 f + f I``, and it
  annihilates ``nu`` because ``grad F`` is 0-homogeneous.

Closures form a vector space under ``+`` and scalar ``*`` so that perturbed
fields keep exact derivatives.
"""

from __future__ import annotations

import functools
import math

import numpy as np
import sympy

X, Y, Z = sympy.symbols("x y z", real=True)
_R2 = X**2 + Y**2 + Z**2


def _broadcast(value, shape):
    out = np.empty(shape, dtype=float)
    out[...] = value
    return out


class Closure:
    """Base class: value, gradient and Hessian of a 1-homogeneous function."""

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def describe(self):
        return {"kind": type(self).__name__}

    # vector space structure -------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                return self
            return Combination([(1.0, self), (float(other), Radial())])
        if not isinstance(other, Closure):
            return NotImplemented
        return Combination([(1.0, self), (1.0, other)])

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating)):
            return NotImplemented
        return Combination([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


class Combination(Closure):
    """Finite linear combination of closures."""

    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, Combination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((float(c), f))
        self.terms = tuple(flat)

    def _sum(self, method, x):
        out = None
        for c, f in self.terms:
            v = c * getattr(f, method)(x)
            out = v if out is None else out + v
        return out

    def value(self, x):
        return self._sum("value", x)

    def gradient(self, x):
        return self._sum("gradient", x)

    def hessian(self, x):
        return self._sum("hessian", x)

    def describe(self):
        return {
            "kind": "combination",
            "terms": [{"coefficient": c, "function": f.describe()} for c, f in self.terms],
        }


class Radial(Closure):
    """``c |x|``: the constant function ``c`` on the sphere."""

    def __init__(self, c=1.0):
        self.c = float(c)

    def value(self, x):
        return self.c * np.linalg.norm(x, axis=-1)

    def gradient(self, x):
        r = np.linalg.norm(x, axis=-1)[..., None]
        return self.c * x / r

    def hessian(self, x):
        r = np.linalg.norm(x, axis=-1)[..., None, None]
        u = x[..., :, None] / r
        eye = np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3))
        return self.c * (eye - u * np.swapaxes(u, -1, -2)) / r

    def describe(self):
        return {"kind": "constant", "value": self.c}


class Linear(Closure):
    """``a . x``: restriction of a linear function; D^2 f + f I vanishes."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float).reshape(3)

    def value(self, x):
        return x @ self.a

    def gradient(self, x):
        return np.broadcast_to(self.a, x.shape).copy()

    def hessian(self, x):
        return np.zeros(x.shape[:-1] + (3, 3))

    def describe(self):
        return {"kind": "linear", "vector": self.a.tolist()}


class QuadraticNorm(Closure):
    """``sqrt(x^T S x)`` for symmetric positive definite ``S``.

    With ``S = A^T A`` this is ``|A x|``, whose Wulff shape is the ellipsoid
    ``{|A^{-1} y| = 1}``.
    """

    def __init__(self, S):
        S = np.asarray(S, dtype=float)
        self.S = 0.5 * (S + S.T)

    def value(self, x):
        return np.sqrt(np.einsum("...i,ij,...j->...", x, self.S, x))

    def gradient(self, x):
        q = self.value(x)[..., None]
        return (x @ self.S) / q

    def hessian(self, x):
        q = self.value(x)[..., None, None]
        g = (x @ self.S)[..., :, None]
        return self.S / q - g * np.swapaxes(g, -1, -2) / q**3

    def describe(self):
        return {"kind": "quadratic-norm", "S": self.S.tolist()}


class SympyClosure(Closure):
    """Closure generated from a homogeneous sympy expression in x, y, z."""

    def __init__(self, expr, label=None):
        self.expr = expr
        self.label = label
        args = (X, Y, Z)
        grad = [sympy.diff(expr, s) for s in args]
        hess = [[sympy.diff(g, s) for s in args] for g in grad]
        self._f = sympy.lambdify(args, expr, "numpy", cse=True)
        self._g = [sympy.lambdify(args, g, "numpy", cse=True) for g in grad]
        self._h = [[sympy.lambdify(args, h, "numpy", cse=True) for h in row] for row in hess]

    def value(self, x):
        return _broadcast(self._f(x[..., 0], x[..., 1], x[..., 2]), x.shape[:-1])

    def gradient(self, x):
        cols = [_broadcast(g(x[..., 0], x[..., 1], x[..., 2]), x.shape[:-1]) for g in self._g]
        return np.stack(cols, axis=-1)

    def hessian(self, x):
        a, b, c = x[..., 0], x[..., 1], x[..., 2]
        shape = x.shape[:-1]
        H = np.empty(shape + (3, 3))
        for i in range(3):
            for j in range(i, 3):
                H[..., i, j] = _broadcast(self._h[i][j](a, b, c), shape)
                H[..., j, i] = H[..., i, j]
        return H

    def describe(self):
        return {"kind": "expression", "label": self.label or str(self.expr)}


@functools.lru_cache(maxsize=None)
def solid_harmonic(l, m):
    """Real orthonormal spherical harmonic ``Y_lm`` as a homogeneous polynomial.

    Normalized so that the restriction to S^2 has unit L2 norm; ``m < 0``
    selects the sine branch.
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m})")
    am = abs(m)
    t = sympy.Symbol("t")
    dP = sympy.Poly(sympy.diff(sympy.legendre(l, t), t, am), t)
    radial = 0
    for (k,), coeff in dP.terms():
        radial += coeff * Z**k * _R2 ** ((l - am - k) // 2)
    w = sympy.expand((X + sympy.I * Y) ** am)
    angular = sympy.re(w) if m >= 0 else sympy.im(w)
    norm = sympy.sqrt(sympy.Rational(2 * l + 1, 4) / sympy.pi
                      * sympy.factorial(l - am) / sympy.factorial(l + am))
    if m != 0:
        norm *= sympy.sqrt(2)
    return sympy.expand(norm * angular * radial)


@functools.lru_cache(maxsize=None)
def harmonic_closure(l, m):
    """Closure of ``Y_lm`` extended 1-homogeneously: ``p_lm(x) |x|^(1-l)``."""
    p = solid_harmonic(l, m)
    if l == 1:
        expr = p
    else:
        expr = p * _R2 ** (sympy.Rational(1 - l, 2))
    return SympyClosure(expr, label=f"Y[{l},{m}]")


@functools.lru_cache(maxsize=None)
def smoothed_pnorm_closure(p, eps):
    """``(sum x_i^p + eps |x|^p)^(1/p)`` for even integer ``p``."""
    if p % 2 or p < 2:
        raise ValueError("smoothed p-norm requires an even integer p >= 2")
    eps_r = sympy.nsimplify(eps, rational=True)
    expr = (X**p + Y**p + Z**p + eps_r * _R2 ** (p // 2)) ** sympy.Rational(1, p)
    return SympyClosure(expr, label=f"pnorm(p={p}, eps={eps})")


def harmonic_series(coefficients, base=1.0):
    """``base + sum c_lm Y_lm`` as a closure; ``coefficients`` maps (l, m) -> c."""
    terms = [(float(base), Radial())] if base else []
    for (l, m), c in sorted(coefficients.items()):
        if c:
            terms.append((float(c), harmonic_closure(int(l), int(m))))
    return Combination(terms)


def sphere_moment(power):
    """Exact ``int_{S^2} z^power d omega`` (zero for odd powers)."""
    if power % 2:
        return 0.0
    return 4.0 * math.pi / (power + 1)
