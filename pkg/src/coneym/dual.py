"""Forward-mode dual numbers, used to cross-check hand-coded derivatives.

Duals nest, so ``Dual(Dual(x, 1), Dual(1, 0))`` carries second derivatives.
The value and derivative parts may be numpy arrays for pointwise evaluation.
"""
from __future__ import annotations

import numpy as np


class Dual:
    __slots__ = ("val", "eps")
    __array_priority__ = 100

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __add__(self, o):
        o = _lift(o)
        return Dual(self.val + o.val, self.eps + o.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __sub__(self, o):
        return self + (-_lift(o))

    def __rsub__(self, o):
        return _lift(o) - self

    def __mul__(self, o):
        o = _lift(o)
        return Dual(self.val * o.val, self.val * o.eps + self.eps * o.val)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _lift(o)
        return Dual(self.val / o.val, (self.eps * o.val - self.val * o.eps) / (o.val * o.val))

    def __rtruediv__(self, o):
        return _lift(o) / self

    def __pow__(self, p: int):
        if not isinstance(p, int):
            raise TypeError("only integer powers are supported")
        if p < 0:
            return 1.0 / (self ** -p)
        out = Dual(1.0, 0.0)
        for _ in range(p):
            out = out * self
        return out


def _lift(x) -> Dual:
    return x if isinstance(x, Dual) else Dual(x, 0.0)


def _unary(f, df):
    def op(x):
        if isinstance(x, Dual):
            return Dual(op(x.val), df(x.val) * x.eps)
        return f(x)

    return op


sin = _unary(np.sin, lambda v: cos(v))
cos = _unary(np.cos, lambda v: -sin(v))
exp = _unary(np.exp, lambda v: exp(v))
log = _unary(np.log, lambda v: 1.0 / v)
sqrt = _unary(np.sqrt, lambda v: 0.5 / sqrt(v))


def value(x):
    return x.val if isinstance(x, Dual) else x


def derivative(f, x: list, axis: int):
    """Partial derivative of ``f(*x)`` along argument ``axis``."""
    args = [Dual(v, 1.0 if a == axis else 0.0) for a, v in enumerate(x)]
    out = f(*args)
    return out.eps if isinstance(out, Dual) else 0.0 * x[0]


def second_derivative(f, x: list, i: int, j: int):
    """``d^2 f / dx_i dx_j`` via nested duals."""
    args = [Dual(Dual(v, 1.0 if a == i else 0.0), Dual(1.0 if a == j else 0.0, 0.0)) for a, v in enumerate(x)]
    out = f(*args)
    return out.eps.eps if isinstance(out, Dual) and isinstance(out.eps, Dual) else 0.0 * x[0]
