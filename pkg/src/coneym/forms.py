"""Lie-algebra-valued differential forms on structured charts.

A k-form stores one coefficient per strictly increasing multi-index, in the
order of :func:`geometry.multi_indices`.  Algebra-valued coefficients are
matrices in the fundamental representation, so ``coeffs`` has shape
``(C(m, k), *sizes, n, n)``; real forms drop the matrix axes.

Derivatives are second-order central differences.  Each differencing step
invalidates one more layer next to a non-periodic boundary; ``margin`` counts
those layers, they are zero-filled, and every norm skips them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np

from .algebra import AlgebraDescriptor
from .geometry import (
    Chart,
    MetricField,
    hodge_star,
    index_position,
    inner_product,
    multi_indices,
    pairing_density,
    perm_sign,
)


class DegreeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GValuedForm:
    chart: Chart
    degree: int
    coeffs: np.ndarray
    algebra: AlgebraDescriptor | None = None
    margin: int = 0

    def __post_init__(self):
        m = self.chart.dim
        if not 0 <= self.degree <= m:
            raise DegreeError(f"degree {self.degree} outside 0..{m}")
        shape = (comb(m, self.degree),) + self.chart.sizes
        if self.algebra is not None:
            n = self.algebra.matrix_dim
            shape = shape + (n, n)
        c = np.asarray(self.coeffs)
        if c.shape != shape:
            raise ValueError(f"coefficient array has shape {c.shape}, expected {shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("form coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def descriptor(self) -> AlgebraDescriptor | None:
        return self.algebra

    @property
    def dim(self) -> int:
        return self.chart.dim

    # --------------------------------------------------------- construction
    @classmethod
    def zeros(cls, chart: Chart, degree: int, algebra: AlgebraDescriptor | None = None) -> "GValuedForm":
        shape = (comb(chart.dim, degree),) + chart.sizes
        dtype = float
        if algebra is not None:
            shape = shape + (algebra.matrix_dim,) * 2
            dtype = algebra.dtype
        return cls(chart, degree, np.zeros(shape, dtype=dtype), algebra)

    @classmethod
    def from_components(
        cls,
        chart: Chart,
        degree: int,
        components: dict,
        algebra: AlgebraDescriptor | None = None,
    ) -> "GValuedForm":
        """Build from ``{multi_index: values}``; unspecified components are zero.

        Values are per-point basis coefficients with a trailing axis of length
        ``algebra.dim`` (or real arrays broadcastable to the grid when
        ``algebra`` is None).  Unsorted multi-indices pick up the permutation
        sign; repeated indices are rejected.
        """
        out = cls.zeros(chart, degree, algebra).coeffs.copy()
        pos = index_position(chart.dim, degree)
        for I, vals in components.items():
            I = tuple(I)
            s = perm_sign(I)
            if s == 0 or len(I) != degree:
                raise ValueError(f"bad multi-index {I} for a {degree}-form")
            if algebra is None:
                out[pos[tuple(sorted(I))]] += s * np.broadcast_to(np.asarray(vals, dtype=float), chart.sizes)
            else:
                vals = np.asarray(vals, dtype=float)
                vals = np.broadcast_to(vals, np.broadcast_shapes(vals.shape[:-1], chart.sizes) + (algebra.dim,))
                out[pos[tuple(sorted(I))]] += s * algebra.to_matrix(vals)
        return cls(chart, degree, out, algebra)

    def rebuild(self, degree: int, coeffs: np.ndarray, margin: int | None = None) -> "GValuedForm":
        return GValuedForm(self.chart, degree, coeffs, self.algebra, self.margin if margin is None else margin)

    def component(self, I) -> np.ndarray:
        return self.coeffs[index_position(self.dim, self.degree)[tuple(I)]]

    def basis_coefficients(self) -> np.ndarray:
        """Real coefficients in the algebra basis, shape ``(C(m,k), *sizes, dim)``."""
        if self.algebra is None:
            return self.coeffs[..., None]
        return self.algebra.coefficients(self.coeffs, check=False)

    def as_real(self) -> "GValuedForm":
        """Drop a u(1) factor i: a u(1)-valued form ``i f`` becomes the real form ``f``."""
        if self.algebra is None or self.algebra.name != "u1":
            raise ValueError("only u(1)-valued forms have a real counterpart")
        return GValuedForm(self.chart, self.degree, np.imag(self.coeffs[..., 0, 0]), None, self.margin)

    # ----------------------------------------------------------- arithmetic
    def _check_compatible(self, other: "GValuedForm") -> None:
        self.chart.check_same(other.chart)
        if self.degree != other.degree:
            raise DegreeError(f"degree mismatch {self.degree} vs {other.degree}")
        if _key(self.algebra) != _key(other.algebra):
            raise ValueError("algebra mismatch")

    def __add__(self, other: "GValuedForm") -> "GValuedForm":
        self._check_compatible(other)
        return self.rebuild(self.degree, self.coeffs + other.coeffs, max(self.margin, other.margin))

    def __sub__(self, other: "GValuedForm") -> "GValuedForm":
        self._check_compatible(other)
        return self.rebuild(self.degree, self.coeffs - other.coeffs, max(self.margin, other.margin))

    def __neg__(self) -> "GValuedForm":
        return self.rebuild(self.degree, -self.coeffs)

    def __mul__(self, s) -> "GValuedForm":
        s = np.asarray(s)
        if s.ndim:
            # pointwise scalar field
            s = s.reshape(s.shape + (1, 1)) if self.algebra is not None else s
        return self.rebuild(self.degree, self.coeffs * s)

    __rmul__ = __mul__

    def conjugate_by(self, g: np.ndarray) -> "GValuedForm":
        """Pointwise ``g x g^-1`` for a constant group matrix ``g``."""
        if self.algebra is None:
            return self
        return self.rebuild(self.degree, g @ self.coeffs @ np.linalg.inv(g))


@dataclass(frozen=True, eq=False)
class RealTwoForm(GValuedForm):
    """A real two-form such as zeta.  Closedness is measured, never enforced."""

    def __post_init__(self):
        if self.algebra is not None or self.degree != 2:
            raise ValueError("RealTwoForm is a real-valued 2-form")
        super().__post_init__()

    @classmethod
    def from_components(cls, chart: Chart, components: dict) -> "RealTwoForm":
        base = GValuedForm.from_components(chart, 2, components, None)
        return cls(chart, 2, base.coeffs)

    @classmethod
    def wrap(cls, form: GValuedForm) -> "RealTwoForm":
        return cls(form.chart, 2, form.coeffs, None, form.margin)

    @cached_property
    def closedness(self) -> float:
        """Sup norm of d(zeta) over the interior (0 when m = 2)."""
        if self.dim == 2:
            return 0.0
        return sup_norm(exterior_derivative(self))


def _key(algebra):
    return None if algebra is None else algebra.key


# ------------------------------------------------------------------ helpers


def clear_margin(coeffs: np.ndarray, chart: Chart, width: int) -> np.ndarray:
    """Zero the outer ``width`` layers along every non-periodic axis, in place."""
    if width <= 0:
        return coeffs
    for a, p in enumerate(chart.periodic):
        if p:
            continue
        sl = [slice(None)] * coeffs.ndim
        sl[1 + a] = slice(0, width)
        coeffs[tuple(sl)] = 0
        sl[1 + a] = slice(chart.sizes[a] - width, None)
        coeffs[tuple(sl)] = 0
    return coeffs


def central_difference(x: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(x, -1, axis=axis) - np.roll(x, 1, axis=axis)) / (2.0 * h)


@lru_cache(maxsize=None)
def _wedge_table(m: int, j: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    pos = index_position(m, j + k)
    table = []
    for a, I in enumerate(multi_indices(m, j)):
        for b, J in enumerate(multi_indices(m, k)):
            s = perm_sign(I + J)
            if s:
                table.append((pos[tuple(sorted(I + J))], a, b, s))
    return tuple(sorted(table))


@lru_cache(maxsize=None)
def _d_table(m: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    """Rows ``(out_J, axis, in_I, sign)`` with ``d(f dx^I) = sum sign df/dx^axis dx^J``."""
    pos = index_position(m, k)
    rows = []
    for jo, J in enumerate(multi_indices(m, k + 1)):
        for p, a in enumerate(J):
            I = J[:p] + J[p + 1:]
            rows.append((jo, a, pos[I], -1 if p % 2 else 1))
    return tuple(rows)


def _product(x: np.ndarray, y: np.ndarray, ax, ay) -> np.ndarray:
    if ax is not None and ay is not None:
        if ax.matrix_dim == 1:
            return x * y
        return x @ y
    if ax is None and ay is not None:
        return x[..., None, None] * y
    if ay is None and ax is not None:
        return x * y[..., None, None]
    return x * y


# --------------------------------------------------------------- operations


def exterior_derivative(alpha: GValuedForm) -> GValuedForm:
    m, k = alpha.dim, alpha.degree
    if k >= m:
        raise DegreeError("exterior derivative of a top-degree form")
    ch = alpha.chart
    out = np.zeros((comb(m, k + 1),) + alpha.coeffs.shape[1:], dtype=alpha.coeffs.dtype)
    cache = {}
    for jo, a, i, s in _d_table(m, k):
        if (a, i) not in cache:
            cache[(a, i)] = central_difference(alpha.coeffs[i], a, ch.spacings[a])
        out[jo] += s * cache[(a, i)]
    margin = alpha.margin + 1
    return alpha.rebuild(k + 1, clear_margin(out, ch, margin), margin)


def wedge(alpha: GValuedForm, beta: GValuedForm) -> GValuedForm:
    """Pointwise wedge product; algebra values multiply as matrices."""
    alpha.chart.check_same(beta.chart)
    m, j, k = alpha.dim, alpha.degree, beta.degree
    if j + k > m:
        raise DegreeError(f"wedge of degrees {j} and {k} exceeds dimension {m}")
    if alpha.algebra is not None and beta.algebra is not None and alpha.algebra.key != beta.algebra.key:
        raise ValueError("algebra mismatch")
    algebra = alpha.algebra if alpha.algebra is not None else beta.algebra
    shape = (comb(m, j + k),) + alpha.chart.sizes
    dtype = float
    if algebra is not None:
        shape = shape + (algebra.matrix_dim,) * 2
        dtype = np.result_type(alpha.coeffs.dtype, beta.coeffs.dtype)
    out = np.zeros(shape, dtype=dtype)
    for K, a, b, s in _wedge_table(m, j, k):
        prod = _product(alpha.coeffs[a], beta.coeffs[b], alpha.algebra, beta.algebra)
        if s > 0:
            out[K] += prod
        else:
            out[K] -= prod
    return GValuedForm(alpha.chart, j + k, out, algebra, max(alpha.margin, beta.margin))


def graded_bracket(x: GValuedForm, y: GValuedForm) -> GValuedForm:
    """``[x ^ y] = x ^ y - (-1)^{|x||y|} y ^ x``."""
    if x.algebra is not None and x.algebra.matrix_dim == 1:
        return wedge(x, y) * 0.0
    sign = -1 if (x.degree * y.degree) % 2 else 1
    xy, yx = wedge(x, y), wedge(y, x)
    return xy - yx if sign > 0 else xy + yx


def curvature(A: GValuedForm) -> GValuedForm:
    """``F = dA + A ^ A`` with the matrix wedge."""
    if A.degree != 1:
        raise DegreeError("curvature needs a connection 1-form")
    dA = exterior_derivative(A)
    if A.algebra is not None and A.algebra.matrix_dim == 1:
        return dA
    return dA + wedge(A, A)


def covariant_derivative(A: GValuedForm | None, s: GValuedForm) -> GValuedForm:
    """``d_A s = ds + [A ^ s]``; ``A = None`` means the trivial connection."""
    ds = exterior_derivative(s)
    if A is None or (s.algebra is not None and s.algebra.matrix_dim == 1):
        return ds
    if A.degree != 1:
        raise DegreeError("connection must be a 1-form")
    return ds + graded_bracket(A, s)


def codifferential(A: GValuedForm | None, alpha: GValuedForm, metric: MetricField) -> GValuedForm:
    """``d_A^* = (-1)^{mk+m+1} * d_A *`` on k-forms."""
    m, k = alpha.dim, alpha.degree
    if k == 0:
        raise DegreeError("codifferential of a 0-form")
    out = hodge_star(covariant_derivative(A, hodge_star(alpha, metric)), metric)
    return -out if (m * k + m + 1) % 2 else out


def zeta_wedge(zeta: GValuedForm, alpha: GValuedForm) -> GValuedForm:
    if zeta.algebra is not None or zeta.degree != 2:
        raise ValueError("zeta must be a real 2-form")
    return wedge(zeta, alpha)


def zeta_adjoint(zeta: GValuedForm, alpha: GValuedForm, metric: MetricField) -> GValuedForm:
    """``zeta^* = (-1)^{(m-k)k} * zeta ^ *`` on k-forms; the adjoint of ``zeta ^``."""
    m, k = alpha.dim, alpha.degree
    if k < 2:
        raise DegreeError("zeta adjoint needs degree >= 2")
    out = hodge_star(zeta_wedge(zeta, hodge_star(alpha, metric)), metric)
    return -out if ((m - k) * k) % 2 else out


def pairing_wedge(alpha: GValuedForm, beta: GValuedForm) -> GValuedForm:
    """Real form ``<alpha ^ beta>``: wedge with the ad-invariant pairing as product."""
    alpha.chart.check_same(beta.chart)
    if _key(alpha.algebra) != _key(beta.algebra):
        raise ValueError("algebra mismatch")
    m, j, k = alpha.dim, alpha.degree, beta.degree
    if j + k > m:
        raise DegreeError("degree overflow")
    out = np.zeros((comb(m, j + k),) + alpha.chart.sizes)
    for K, a, b, s in _wedge_table(m, j, k):
        out[K] += s * pairing_density(alpha.coeffs[a], beta.coeffs[b], alpha.algebra)
    return GValuedForm(alpha.chart, j + k, out, None, max(alpha.margin, beta.margin))


def integrate_top_form(omega: GValuedForm) -> float:
    """Midpoint integral of a real m-form over the interior (orientation dx^1...dx^m)."""
    if omega.algebra is not None or omega.degree != omega.dim:
        raise ValueError("need a real top-degree form")
    mask = omega.chart.interior_mask(omega.margin)
    return float(np.sum(omega.coeffs[0][mask]) * omega.chart.cell_volume)


def norm(alpha: GValuedForm, metric: MetricField) -> float:
    return float(np.sqrt(max(inner_product(alpha, alpha, metric), 0.0)))


def sup_norm(alpha: GValuedForm) -> float:
    """Largest coefficient magnitude over interior points."""
    mask = alpha.chart.interior_mask(alpha.margin)
    c = np.abs(alpha.coeffs)
    if alpha.algebra is not None:
        c = c.max(axis=(-2, -1))
    return float(np.max(c[:, mask], initial=0.0))
