"""Truncated multivariate Taylor (jet) arithmetic.

A jet of order K in d variables stores the Taylor coefficients
``c_I = (1/I!) d^I f(p)`` for every multi-index ``|I| <= K`` on the last axis
of an ndarray; leading axes are free (batch points, tensor components).
Arithmetic is exact on truncated polynomials: composing operations and then
truncating agrees with truncating and then composing, to total degree K.

The heavy numerical path works on raw coefficient arrays through a
:class:`JetContext`, which precomputes the multiplication table once per
(nvars, order) and realizes jet products as one outer product plus a matmul.
:class:`JetScalar` is a thin convenience wrapper used by the public API and
the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class JetDomainError(ValueError):
    """Division/sqrt/log/pow applied to a jet with an invalid constant term."""


def _multi_indices(nvars, order):
    """All exponent tuples with total degree <= order, graded-lex sorted."""
    out = []

    def rec(prefix, budget, slots):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for k in range(budget + 1):
            rec(prefix + [k], budget - k, slots - 1)

    rec([], order, nvars)
    out.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return out


@lru_cache(maxsize=None)
def jet_context(nvars: int, order: int) -> "JetContext":
    return JetContext(nvars, order)


class JetContext:
    """Coefficient tables for jets in ``nvars`` variables at order ``order``."""

    def __init__(self, nvars, order):
        if order < 0:
            raise ValueError("jet order must be >= 0")
        self.nvars = nvars
        self.order = order
        self.exps = _multi_indices(nvars, order)
        self.n = len(self.exps)
        self.pos = {e: i for i, e in enumerate(self.exps)}
        self.degrees = np.array([sum(e) for e in self.exps])

        # Product table: (a*b)_K = sum_{I+J=K} a_I b_J, as an (n*n, n) matrix so
        # a jet product is an outer product followed by one matmul.
        prod = np.zeros((self.n * self.n, self.n))
        for i, ei in enumerate(self.exps):
            for j, ej in enumerate(self.exps):
                k = self.pos.get(tuple(a + b for a, b in zip(ei, ej)))
                if k is not None:
                    prod[i * self.n + j, k] = 1.0
        self.prod = prod

        # d/dx_v gather tables: (d_v a)_J = (J_v + 1) a_{J + e_v}.  Top-degree
        # output coefficients are unknown after differentiation; the factor 0
        # leaves them zero and callers must not rely on them.
        didx = np.zeros((nvars, self.n), dtype=np.intp)
        dfac = np.zeros((nvars, self.n))
        for v in range(nvars):
            for j, e in enumerate(self.exps):
                up = list(e)
                up[v] += 1
                k = self.pos.get(tuple(up))
                if k is not None:
                    didx[v, j] = k
                    dfac[v, j] = e[v] + 1
        self.didx, self.dfac = didx, dfac

        # Gather table for the multiplication-operator matrix M(a)[k, i] = a_{K-I},
        # lower triangular in degree; inversion is a batched linear solve.
        gidx = np.zeros((self.n, self.n), dtype=np.intp)
        gmask = np.zeros((self.n, self.n))
        for k, ek in enumerate(self.exps):
            for i, ei in enumerate(self.exps):
                diff = tuple(a - b for a, b in zip(ek, ei))
                if min(diff) >= 0:
                    gidx[k, i] = self.pos[diff]
                    gmask[k, i] = 1.0
        self.gidx, self.gmask = gidx, gmask

        # Antiderivative table: coefficient K with |K| >= 1 is read off the
        # partial-derivative jet along the first variable K touches.
        anti = []
        for k, ek in enumerate(self.exps):
            if sum(ek) == 0:
                continue
            v = next(i for i, x in enumerate(ek) if x > 0)
            down = list(ek)
            down[v] -= 1
            anti.append((k, v, self.pos[tuple(down)], 1.0 / ek[v]))
        self.anti = anti

    # -- constructors ------------------------------------------------------

    def const(self, values):
        values = np.asarray(values, dtype=float)
        out = np.zeros(values.shape + (self.n,))
        out[..., 0] = values
        return out

    def lift(self, values):
        """Coordinate jets at a point: (..., nvars) -> (..., nvars, n)."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.nvars:
            raise ValueError("point dimension does not match context")
        out = np.zeros(values.shape + (self.n,))
        out[..., 0] = values
        if self.order >= 1:
            for v in range(self.nvars):
                unit = tuple(1 if i == v else 0 for i in range(self.nvars))
                out[..., v, self.pos[unit]] = 1.0
        return out

    # -- ring operations ---------------------------------------------------

    def mul(self, a, b):
        outer = a[..., :, None] * b[..., None, :]
        return outer.reshape(outer.shape[:-2] + (self.n * self.n,)) @ self.prod

    def einsum(self, spec, a, b):
        """einsum over component axes with jet multiplication on coefficients.

        ``spec`` uses lowercase letters for component axes only, e.g.
        ``"pad,pdbc->pabc"``; the coefficient axis is appended internally.
        Realized as batched matmuls (contraction, then the coefficient-pair
        product table) so BLAS does the heavy lifting.
        """
        ins, out = spec.split("->")
        sa, sb = ins.split(",")
        batch = [c for c in sa if c in sb and c in out]
        contracted = [c for c in sa if c in sb and c not in out]
        free_a = [c for c in sa if c not in sb]
        free_b = [c for c in sb if c not in sa]
        if (len(set(sa)) != len(sa) or len(set(sb)) != len(sb)
                or set(out) != set(batch + free_a + free_b)):
            t = np.einsum(f"{sa}X,{sb}Y->{out}XY", a, b)
            return t.reshape(t.shape[:-2] + (self.n * self.n,)) @ self.prod

        def axis_map(s):
            return {c: i for i, c in enumerate(s)}

        ma, mb = axis_map(sa), axis_map(sb)
        dims = {}
        for c, i in ma.items():
            dims[c] = a.shape[i]
        for c, i in mb.items():
            dims[c] = b.shape[i]

        def prep(x, sx, mx, lead, tail):
            orderd = [mx[c] for c in lead] + [mx[c] for c in tail] + [len(sx)]
            xt = np.transpose(x, orderd)
            b_sz = int(np.prod([dims[c] for c in lead])) if lead else 1
            t_sz = int(np.prod([dims[c] for c in tail])) if tail else 1
            return xt.reshape(b_sz, t_sz, self.n)

        A = prep(a, sa, ma, batch + contracted, free_a)      # (B*K, Fa, n)
        Bm = prep(b, sb, mb, batch + contracted, free_b)     # (B*K, Fb, n)
        Bsz = int(np.prod([dims[c] for c in batch])) if batch else 1
        Ksz = int(np.prod([dims[c] for c in contracted])) if contracted else 1
        A = A.reshape(Bsz, Ksz, -1, self.n)
        Bm = Bm.reshape(Bsz, Ksz, -1, self.n)
        Fa, Fb = A.shape[2], Bm.shape[2]
        # contract over K with coefficient axes folded into the free blocks
        A2 = A.transpose(0, 2, 3, 1).reshape(Bsz, Fa * self.n, Ksz)
        B2 = Bm.transpose(0, 1, 2, 3).reshape(Bsz, Ksz, Fb * self.n)
        C = A2 @ B2                                          # (B, Fa*n, Fb*n)
        C = C.reshape(Bsz, Fa, self.n, Fb, self.n).transpose(0, 1, 3, 2, 4)
        C = C.reshape(Bsz * Fa * Fb, self.n * self.n) @ self.prod
        C = C.reshape([dims[c] for c in batch] + [dims[c] for c in free_a]
                      + [dims[c] for c in free_b] + [self.n])
        cur = batch + free_a + free_b
        if list(out) != cur:
            perm = [cur.index(c) for c in out] + [len(cur)]
            C = np.transpose(C, perm)
        return np.ascontiguousarray(C)

    def inv(self, a):
        if np.any(np.abs(a[..., 0]) == 0.0):
            raise JetDomainError("jet inverse requires a nonzero constant term")
        mat = a[..., self.gidx] * self.gmask
        rhs = np.zeros(a.shape[:-1] + (self.n, 1))
        rhs[..., 0, 0] = 1.0
        return np.linalg.solve(mat, rhs)[..., 0]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def deriv(self, a, v):
        return a[..., self.didx[v]] * self.dfac[v]

    def integrate(self, partials, value0):
        """Scalar jet from the jets of its partial derivatives plus the value.

        ``partials`` has shape (..., nvars, n); consistency of mixed partials
        (closedness of the one-form) is the caller's responsibility.
        """
        out = self.const(value0)
        for k, v, src, fac in self.anti:
            out[..., k] = partials[..., v, src] * fac
        return out

    # -- analytic functions (univariate composition) -----------------------

    def _compose(self, a, coeffs):
        """sum_j coeffs[j] * (a - a0)^j via Horner; coeffs[j] has a's lead shape."""
        delta = a.copy()
        delta[..., 0] = 0.0
        res = self.const(coeffs[-1])
        for j in range(len(coeffs) - 2, -1, -1):
            res = self.mul(res, delta)
            res[..., 0] += coeffs[j]
        return res

    def powf(self, a, p):
        """a**p for real p; requires positive constant term."""
        x0 = a[..., 0]
        if np.any(x0 <= 0.0):
            raise JetDomainError("jet pow requires a positive constant term")
        coeffs = [np.power(x0, p)]
        for j in range(1, self.order + 1):
            coeffs.append(coeffs[-1] * (p - (j - 1)) / (j * x0))
        return self._compose(a, coeffs)

    def sqrt(self, a):
        return self.powf(a, 0.5)

    def log(self, a):
        x0 = a[..., 0]
        if np.any(x0 <= 0.0):
            raise JetDomainError("jet log requires a positive constant term")
        coeffs = [np.log(x0)]
        for j in range(1, self.order + 1):
            coeffs.append(((-1.0) ** (j - 1)) / (j * np.power(x0, j)))
        return self._compose(a, coeffs)

    def exp(self, a):
        x0 = a[..., 0]
        e0 = np.exp(x0)
        coeffs = [e0 / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(a, coeffs)

    def sin(self, a):
        x0 = a[..., 0]
        table = [np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0)]
        coeffs = [table[j % 4] / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(a, coeffs)

    def cos(self, a):
        x0 = a[..., 0]
        table = [np.cos(x0), -np.sin(x0), -np.cos(x0), np.sin(x0)]
        coeffs = [table[j % 4] / math.factorial(j) for j in range(self.order + 1)]
        return self._compose(a, coeffs)

    def atan(self, a):
        # Taylor coefficients of t -> atan(x0 + t) via the series of
        # 1/(1 + (x0+t)^2) followed by term-by-term integration.
        x0 = a[..., 0]
        K = self.order
        den = [1.0 + x0 * x0, 2.0 * x0, np.ones_like(x0)] + [np.zeros_like(x0)] * max(0, K - 2)
        rec = [1.0 / den[0]]
        for j in range(1, K):
            acc = np.zeros_like(x0)
            for i in range(1, j + 1):
                if i < len(den):
                    acc = acc + den[i] * rec[j - i]
            rec.append(-acc / den[0])
        coeffs = [np.arctan(x0)] + [rec[j - 1] / j for j in range(1, K + 1)]
        return self._compose(a, coeffs)

    # -- views -------------------------------------------------------------

    def value(self, a):
        return a[..., 0]

    def gradient(self, a):
        """Degree-1 coefficients, shape (..., nvars)."""
        out = np.empty(a.shape[:-1] + (self.nvars,))
        for v in range(self.nvars):
            unit = tuple(1 if i == v else 0 for i in range(self.nvars))
            out[..., v] = a[..., self.pos[unit]]
        return out


@dataclass
class JetScalar:
    """Truncated Taylor value of a scalar at a chart point (public wrapper)."""

    ctx: JetContext
    coeffs: np.ndarray

    @property
    def order(self):
        return self.ctx.order

    def value(self):
        return float(self.coeffs[0])

    def coefficient(self, exponents):
        return float(self.coeffs[self.ctx.pos[tuple(exponents)]])

    def _wrap(self, arr):
        return JetScalar(self.ctx, arr)

    def _coerce(self, other):
        if isinstance(other, JetScalar):
            return other.coeffs
        return self.ctx.const(float(other))

    def __add__(self, other):
        return self._wrap(self.coeffs + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.coeffs - self._coerce(other))

    def __rsub__(self, other):
        return self._wrap(self._coerce(other) - self.coeffs)

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        return self._wrap(self.ctx.mul(self.coeffs, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.ctx.div(self.coeffs, self._coerce(other)))

    def __rtruediv__(self, other):
        return self._wrap(self.ctx.div(self._coerce(other), self.coeffs))

    def sqrt(self):
        return self._wrap(self.ctx.sqrt(self.coeffs))

    def exp(self):
        return self._wrap(self.ctx.exp(self.coeffs))

    def log(self):
        return self._wrap(self.ctx.log(self.coeffs))

    def sin(self):
        return self._wrap(self.ctx.sin(self.coeffs))

    def cos(self):
        return self._wrap(self.ctx.cos(self.coeffs))

    def atan(self):
        return self._wrap(self.ctx.atan(self.coeffs))

    def deriv(self, var):
        return self._wrap(self.ctx.deriv(self.coeffs, var))


def jet_lift(chart_point, order: int):
    """Lift a 4-coordinate chart point to coordinate jets of the given order.

    Returns four JetScalars x^mu with degree-0 coefficient equal to the point
    and unit degree-1 coefficient along their own direction.
    """
    pt = tuple(float(x) for x in chart_point)
    if len(pt) != 4:
        raise ValueError("chart point must have 4 coordinates")
    ctx = jet_context(4, order)
    lifted = ctx.lift(np.asarray(pt))
    return tuple(JetScalar(ctx, lifted[v]) for v in range(4))
