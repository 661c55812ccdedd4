"""Cone forms ``eta + theta xi`` and the operators of the mapping-cone complex.

The formal one-form theta (with d theta = zeta) is never stored; a cone
k-form is the pair ``(eta, xi)`` of degrees ``(k, k - 1)`` and every theta
rule is folded into the formulas below.

Sign table used throughout (``|eta| = k``):

* product:  ``(e1 + t x1) ^ (e2 + t x2) = e1 ^ e2 + t (x1 ^ e2 + (-1)^{|e1|} e1 ^ x2)``
* star:     ``*_C (eta + t xi) = *xi + t (-1)^k *eta``
* double star on degree k: ``(-1)^{k (m + 1 - k)}``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import AlgebraDescriptor
from .forms import (
    DegreeError,
    GValuedForm,
    RealTwoForm,
    codifferential,
    covariant_derivative,
    curvature,
    graded_bracket,
    integrate_top_form,
    pairing_wedge,
    wedge,
    zeta_adjoint,
    zeta_wedge,
)
from .geometry import Chart, MetricField, hodge_star, inner_product


@dataclass(frozen=True, eq=False)
class ConeForm:
    degree: int
    eta: GValuedForm | None
    xi: GValuedForm | None

    def __post_init__(self):
        if self.eta is None and self.xi is None:
            raise ValueError("a cone form needs at least one component")
        ref = self.eta if self.eta is not None else self.xi
        m = ref.dim
        if not 0 <= self.degree <= m + 1:
            raise DegreeError(f"cone degree {self.degree} outside 0..{m + 1}")
        if self.eta is not None and self.eta.degree != self.degree:
            raise DegreeError("eta must have the cone degree")
        if self.xi is not None and self.xi.degree != self.degree - 1:
            raise DegreeError("xi must have degree one less than the cone degree")
        if self.eta is not None and self.xi is not None:
            self.eta.chart.check_same(self.xi.chart)
            a, b = self.eta.algebra, self.xi.algebra
            if (a is None) != (b is None) or (a is not None and a.key != b.key):
                raise ValueError("eta and xi must share an algebra")

    @property
    def chart(self) -> Chart:
        return (self.eta if self.eta is not None else self.xi).chart

    @property
    def algebra(self) -> AlgebraDescriptor | None:
        return (self.eta if self.eta is not None else self.xi).algebra

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def make(cls, degree: int, eta: GValuedForm | None, xi: GValuedForm | None, like: GValuedForm) -> "ConeForm":
        """Build, filling a missing in-range component with zeros shaped like ``like``."""
        m = like.dim
        if eta is None and degree <= m:
            eta = GValuedForm.zeros(like.chart, degree, like.algebra)
        if xi is None and degree >= 1:
            xi = GValuedForm.zeros(like.chart, degree - 1, like.algebra)
        return cls(degree, eta, xi)

    def _map2(self, other: "ConeForm", op: Callable) -> "ConeForm":
        if self.degree != other.degree:
            raise DegreeError("cone degree mismatch")
        return ConeForm(self.degree, _combine(self.eta, other.eta, op), _combine(self.xi, other.xi, op))

    def __add__(self, other: "ConeForm") -> "ConeForm":
        return self._map2(other, lambda a, b: a + b)

    def __sub__(self, other: "ConeForm") -> "ConeForm":
        return self._map2(other, lambda a, b: a - b)

    def __neg__(self) -> "ConeForm":
        return self * -1.0

    def __mul__(self, s: float) -> "ConeForm":
        return ConeForm(self.degree, _scale(self.eta, s), _scale(self.xi, s))

    __rmul__ = __mul__


def _scale(f, s):
    return None if f is None else f * s


def _combine(a, b, op):
    if a is None:
        return None if b is None else op(b * 0.0, b)
    if b is None:
        return op(a, a * 0.0)
    return op(a, b)


def _sum(*terms):
    """Sum of forms, skipping ``None``; returns None if all are None."""
    out = None
    for t in terms:
        if t is None:
            continue
        out = t if out is None else out + t
    return out


@dataclass(frozen=True, eq=False)
class ConnectionPair:
    """A connection 1-form ``A`` and an adjoint-valued 0-form ``B``.

    ``background_F`` adds a prescribed curvature for abelian bundles whose
    potential is not globally defined: the curvature is then
    ``background_F + dA``.
    """

    A: GValuedForm
    B: GValuedForm
    background_F: GValuedForm | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.A.degree != 1 or self.B.degree != 0:
            raise DegreeError("need a 1-form A and a 0-form B")
        self.A.chart.check_same(self.B.chart)
        if self.A.algebra is None or self.A.algebra.key != self.B.algebra.key:
            raise ValueError("A and B must share an algebra")
        if self.background_F is not None:
            if self.background_F.degree != 2:
                raise DegreeError("background curvature must be a 2-form")
            if self.A.algebra.matrix_dim != 1:
                raise ValueError("a prescribed curvature is only supported for u(1)")

    @property
    def chart(self) -> Chart:
        return self.A.chart

    @property
    def algebra(self) -> AlgebraDescriptor:
        return self.A.algebra

    @property
    def curvature(self) -> GValuedForm:
        if "F" not in self._cache:
            F = curvature(self.A)
            if self.background_F is not None:
                F = F + self.background_F
            self._cache["F"] = F
        return self._cache["F"]

    def cov(self, s: GValuedForm) -> GValuedForm:
        return covariant_derivative(self.A, s)

    def codiff(self, alpha: GValuedForm, metric: MetricField) -> GValuedForm:
        return codifferential(self.A, alpha, metric)

    def shifted(self, eta: GValuedForm | None, xi: GValuedForm | None, t: float = 1.0) -> "ConnectionPair":
        A = self.A if eta is None else self.A + eta * t
        B = self.B if xi is None else self.B + xi * t
        return ConnectionPair(A, B, self.background_F)

    def conjugated(self, g: np.ndarray) -> "ConnectionPair":
        """Constant gauge transformation ``(g A g^-1, g B g^-1)``."""
        bg = None if self.background_F is None else self.background_F.conjugate_by(g)
        return ConnectionPair(self.A.conjugate_by(g), self.B.conjugate_by(g), bg)

    @classmethod
    def zero(cls, chart: Chart, algebra: AlgebraDescriptor) -> "ConnectionPair":
        return cls(GValuedForm.zeros(chart, 1, algebra), GValuedForm.zeros(chart, 0, algebra))


# ------------------------------------------------------------- pointwise ops


def cone_star(c: ConeForm, metric: MetricField) -> ConeForm:
    m, k = c.dim, c.degree
    eta = None if c.xi is None else hodge_star(c.xi, metric)
    xi = None if c.eta is None else hodge_star(c.eta, metric) * (-1.0 if k % 2 else 1.0)
    return ConeForm(m + 1 - k, eta, xi)


def cone_wedge(c1: ConeForm, c2: ConeForm, product: Callable = wedge) -> ConeForm:
    """Cone product with the theta sign rule; ``product`` combines components."""
    m = c1.dim
    deg = c1.degree + c2.degree
    if deg > m + 1:
        raise DegreeError("cone degree overflow")
    sign = -1.0 if c1.degree % 2 else 1.0

    def prod(a, b):
        if a is None or b is None or a.degree + b.degree > m:
            return None
        return product(a, b)

    eta = prod(c1.eta, c2.eta)
    t1 = prod(c1.xi, c2.eta)
    t2 = prod(c1.eta, c2.xi)
    xi = _sum(t1, None if t2 is None else t2 * sign)
    if eta is None and xi is None:
        raise DegreeError("cone product has no surviving component")
    return ConeForm(deg, eta if deg <= m else None, xi)


def cone_bracket(c1: ConeForm, c2: ConeForm) -> ConeForm:
    """Graded bracket ``c1 ^ c2 - (-1)^{|c1||c2|} c2 ^ c1``."""
    a, b = cone_wedge(c1, c2), cone_wedge(c2, c1)
    return a - b if (c1.degree * c2.degree) % 2 == 0 else a + b


def cone_inner(c1: ConeForm, c2: ConeForm, metric: MetricField) -> float:
    """``<eta1, eta2> + <xi1, xi2>``."""
    if c1.degree != c2.degree:
        raise DegreeError("cone degree mismatch")
    total = 0.0
    if c1.eta is not None and c2.eta is not None:
        total += inner_product(c1.eta, c2.eta, metric)
    if c1.xi is not None and c2.xi is not None:
        total += inner_product(c1.xi, c2.xi, metric)
    return total


def cone_inner_theta(c1: ConeForm, c2: ConeForm, metric: MetricField) -> float:
    """Same inner product, evaluated as the theta-coefficient of ``<c1 ^ *_C c2>``."""
    if c1.degree != c2.degree:
        raise DegreeError("cone degree mismatch")
    top = cone_wedge(c1, cone_star(c2, metric), product=pairing_wedge)
    return integrate_top_form(top.xi)


# ------------------------------------------------------- differential ops


def _bracket0(B: GValuedForm, s: GValuedForm | None) -> GValuedForm | None:
    return None if s is None else graded_bracket(B, s)


def cone_differential(pair: ConnectionPair, zeta: RealTwoForm, c: ConeForm) -> ConeForm:
    """``(eta, xi) -> (d_A eta + zeta ^ xi, [B, eta] - d_A xi)``."""
    m, k = c.dim, c.degree
    eta_new = None
    if k + 1 <= m:
        eta_new = _sum(
            None if c.eta is None else pair.cov(c.eta),
            None if c.xi is None else zeta_wedge(zeta, c.xi),
        )
    xi_new = _sum(_bracket0(pair.B, c.eta), None if c.xi is None else -pair.cov(c.xi))
    return ConeForm.make(k + 1, eta_new, xi_new, pair.B)


def cone_codifferential(pair: ConnectionPair, zeta: RealTwoForm, c: ConeForm, metric: MetricField) -> ConeForm:
    """``(eta, xi) -> (d_A^* eta - [B, xi], zeta^* eta - d_A^* xi)``."""
    k = c.degree
    if k == 0:
        raise DegreeError("cone codifferential of a degree-0 cone form")
    eta_new = _sum(
        None if c.eta is None else pair.codiff(c.eta, metric),
        None if c.xi is None else -graded_bracket(pair.B, c.xi),
    )
    xi_new = None
    if k >= 2:
        xi_new = _sum(
            None if c.eta is None else zeta_adjoint(zeta, c.eta, metric),
            None if c.xi is None else -pair.codiff(c.xi, metric),
        )
    return ConeForm.make(k - 1, eta_new, xi_new, pair.B)


def cone_curvature(pair: ConnectionPair, zeta: RealTwoForm) -> ConeForm:
    """``(F_A + zeta B, -d_A B)``."""
    return ConeForm(2, pair.curvature + zeta_wedge(zeta, pair.B), -pair.cov(pair.B))


def gauge_condition(pair: ConnectionPair, zeta: RealTwoForm, c: ConeForm, metric: MetricField) -> ConeForm:
    """Residual of the gauge-fixing condition ``D_C^* c = 0``; exposed, not enforced."""
    return cone_codifferential(pair, zeta, c, metric)


def linearized_el(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField, direction: ConeForm) -> ConeForm:
    """``D_C^* D_C c + (-1)^m *_C [c, *_C F_C]`` on cone 1-forms."""
    if direction.degree != 1:
        raise DegreeError("direction must be a cone 1-form")
    m = direction.dim
    main = cone_codifferential(pair, zeta, cone_differential(pair, zeta, direction), metric)
    F = cone_curvature(pair, zeta)
    extra = cone_star(cone_bracket(direction, cone_star(F, metric)), metric)
    return main + extra * (-1.0 if m % 2 else 1.0)
