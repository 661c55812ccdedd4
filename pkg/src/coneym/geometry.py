"""Structured charts, Riemannian metrics, the pointwise Hodge star and quadrature.

Every field in the package lives on a :class:`Chart`: a rectangular grid with
per-axis spacing and periodicity.  Non-periodic axes carry ``halo`` layers of
points outside the physical box; differencing operators eat into the halo one
layer at a time, and all norms and integrals are taken over the interior only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np


class ChartMismatchError(ValueError):
    """Raised when two objects that must share a chart do not."""


# ---------------------------------------------------------------- multi-indices


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-multi-indices of range(m), lexicographic."""
    return tuple(itertools.combinations(range(m), k))


@lru_cache(maxsize=None)
def index_position(m: int, k: int) -> dict[tuple[int, ...], int]:
    return {I: n for n, I in enumerate(multi_indices(m, k))}


def perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def complement(m: int, I: Sequence[int]) -> tuple[int, ...]:
    return tuple(a for a in range(m) if a not in I)


# ------------------------------------------------------------------------ chart


@dataclass(frozen=True)
class Chart:
    """A structured grid.

    Point ``i`` on axis ``a`` sits at ``origin[a] + i * spacings[a]``.  On a
    non-periodic axis the first and last ``halo[a]`` layers lie outside the
    physical domain.
    """

    sizes: tuple[int, ...]
    spacings: tuple[float, ...]
    periodic: tuple[bool, ...]
    origin: tuple[float, ...]
    halo: tuple[int, ...] = ()

    def __post_init__(self):
        m = len(self.sizes)
        if not 2 <= m <= 4:
            raise ValueError(f"chart dimension must be 2..4, got {m}")
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "spacings", tuple(float(h) for h in self.spacings))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        halo = self.halo or tuple(0 if p else 1 for p in self.periodic)
        halo = tuple(0 if p else max(1, int(w)) for p, w in zip(self.periodic, halo))
        object.__setattr__(self, "halo", halo)
        if not (len(self.spacings) == len(self.periodic) == len(self.origin) == m == len(halo)):
            raise ValueError("per-axis chart fields must all have length dim")
        if any(h <= 0 for h in self.spacings):
            raise ValueError("spacings must be positive")
        if any(n < 3 for n in self.sizes):
            raise ValueError("need at least 3 points per axis")
        for n, w in zip(self.sizes, halo):
            if n <= 2 * w:
                raise ValueError("halo leaves no interior points")

    @classmethod
    def torus(cls, n: int | Sequence[int], length: float | Sequence[float] = 1.0, dim: int | None = None) -> "Chart":
        """Fully periodic chart ``[0, L)^m`` with ``n`` points per axis."""
        if dim is None:
            dim = len(n) if not np.isscalar(n) else len(length)
        ns = (n,) * dim if np.isscalar(n) else tuple(n)
        ls = (length,) * dim if np.isscalar(length) else tuple(length)
        return cls(ns, tuple(L / k for L, k in zip(ls, ns)), (True,) * dim, (0.0,) * dim)

    @classmethod
    def box(
        cls,
        lower: Sequence[float],
        upper: Sequence[float],
        n: int | Sequence[int],
        periodic: Sequence[bool] | None = None,
        halo: int = 2,
    ) -> "Chart":
        """Chart on ``prod [lower, upper]`` with ``n`` interior points per axis.

        Non-periodic axes are cell-centred, so refining ``n -> 2n`` halves the
        spacing exactly, and get ``halo`` extra layers on each side.
        """
        dim = len(lower)
        ns = (n,) * dim if np.isscalar(n) else tuple(n)
        periodic = tuple(periodic) if periodic is not None else (False,) * dim
        sizes, spacings, origin, halos = [], [], [], []
        for lo, hi, k, p in zip(lower, upper, ns, periodic):
            h = (hi - lo) / k
            spacings.append(h)
            if p:
                sizes.append(k)
                origin.append(lo)
                halos.append(0)
            else:
                sizes.append(k + 2 * halo)
                origin.append(lo + (0.5 - halo) * h)
                halos.append(halo)
        return cls(tuple(sizes), tuple(spacings), periodic, tuple(origin), tuple(halos))

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def max_spacing(self) -> float:
        return max(self.spacings)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Sparse coordinate arrays, each broadcastable to ``sizes``."""
        out = []
        for a in range(self.dim):
            shape = [1] * self.dim
            shape[a] = self.sizes[a]
            x = self.origin[a] + self.spacings[a] * np.arange(self.sizes[a])
            out.append(x.reshape(shape))
        return tuple(out)

    def interior_mask(self, width: int = 0) -> np.ndarray:
        """Boolean mask of interior points.

        Excludes ``max(halo, width)`` layers at both ends of every non-periodic
        axis.
        """
        mask = np.ones(self.sizes, dtype=bool)
        for a, (p, n) in enumerate(zip(self.periodic, self.sizes)):
            if p:
                continue
            w = max(self.halo[a], width)
            if 2 * w >= n:
                raise ValueError("interior is empty at this stencil depth")
            sl = [slice(None)] * self.dim
            sl[a] = slice(0, w)
            mask[tuple(sl)] = False
            sl[a] = slice(n - w, n)
            mask[tuple(sl)] = False
        return mask

    def check_same(self, other: "Chart") -> None:
        if self != other:
            raise ChartMismatchError("objects live on different charts")


# ----------------------------------------------------------------------- metric


@dataclass(frozen=True, eq=False)
class MetricField:
    """Pointwise symmetric positive-definite metric on a chart.

    ``g`` has shape ``(m, m, *b)`` where ``b`` broadcasts against
    ``chart.sizes``; a constant metric stores ``b = (1,) * m``.
    """

    chart: Chart
    g: np.ndarray
    g_inv: np.ndarray = field(init=False, repr=False)
    sqrt_det: np.ndarray = field(init=False, repr=False)
    diagonal: bool = field(init=False, repr=False)
    _star_cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        m = self.chart.dim
        g = np.asarray(self.g, dtype=float)
        if g.shape[:2] != (m, m) or g.ndim != m + 2:
            raise ValueError(f"metric must have shape (m, m, *b) with m={m}")
        np.broadcast_shapes(g.shape[2:], self.chart.sizes)
        gm = np.moveaxis(g, (0, 1), (-2, -1))
        if not np.allclose(gm, np.swapaxes(gm, -1, -2), rtol=0, atol=1e-14):
            raise ValueError("metric is not symmetric")
        if np.min(np.linalg.eigvalsh(gm)) <= 0:
            raise ValueError("metric is not positive definite")
        ginv = np.linalg.inv(gm)
        eye = np.eye(m)
        if np.max(np.abs(gm @ ginv - eye)) > 1e-12 * max(1.0, float(np.max(np.abs(gm)))):
            raise ValueError("metric inverse is inaccurate")
        off = g.copy()
        for a in range(m):
            off[a, a] = 0.0
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "g_inv", np.moveaxis(ginv, (-2, -1), (0, 1)))
        object.__setattr__(self, "sqrt_det", np.sqrt(np.linalg.det(gm)))
        object.__setattr__(self, "diagonal", not np.any(off))

    @classmethod
    def euclidean(cls, chart: Chart) -> "MetricField":
        m = chart.dim
        return cls(chart, np.eye(m).reshape((m, m) + (1,) * m))

    @classmethod
    def conformal(cls, chart: Chart, factor: np.ndarray) -> "MetricField":
        """``factor * identity``; ``factor`` broadcastable to the grid."""
        m = chart.dim
        factor = np.asarray(factor, dtype=float)
        factor = factor.reshape(factor.shape + (1,) * (m - factor.ndim)) if factor.ndim < m else factor
        return cls(chart, np.eye(m).reshape((m, m) + (1,) * m) * factor[None, None])

    @classmethod
    def diagonal_metric(cls, chart: Chart, entries: Sequence[np.ndarray | float]) -> "MetricField":
        m = chart.dim
        arrays = [np.broadcast_to(np.asarray(e, dtype=float), np.broadcast_shapes(*[np.shape(x) for x in entries], (1,) * m)) for e in entries]
        bshape = arrays[0].shape
        g = np.zeros((m, m) + bshape)
        for a, e in enumerate(arrays):
            g[a, a] = e
        return cls(chart, g)

    def star_terms(self, k: int) -> list[tuple[int, int, np.ndarray]]:
        """Sparse star matrix for k-forms as ``(out_index, in_index, weight)``.

        ``(*alpha)_J = sum_I weight_{J,I} alpha_I`` with
        ``weight = sqrt|g| * eps(L, J) * det(g_inv[L, I])`` and ``J`` the
        complement of ``L``.
        """
        if k in self._star_cache:
            return self._star_cache[k]
        m = self.chart.dim
        pos_out = index_position(m, m - k)
        terms = []
        for L in multi_indices(m, k):
            J = complement(m, L)
            eps = perm_sign(L + J)
            for i_in, I in enumerate(multi_indices(m, k)):
                if self.diagonal and I != L:
                    continue
                if k == 0:
                    minor = np.ones(self.sqrt_det.shape)
                else:
                    sub = self.g_inv[np.ix_(L, I)]
                    minor = np.linalg.det(np.moveaxis(sub, (0, 1), (-2, -1)))
                w = eps * self.sqrt_det * minor
                if not np.any(w):
                    continue
                terms.append((pos_out[J], i_in, w))
        self._star_cache[k] = terms
        return terms


@dataclass(frozen=True)
class ScalarDensityReport:
    value: float
    quadrature: str
    point_count: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("integral is not finite")


def _expand(w: np.ndarray, trailing: int) -> np.ndarray:
    return w.reshape(w.shape + (1,) * trailing)


# ------------------------------------------------------------ star and products


def hodge_star(alpha, metric: MetricField):
    """Hodge star of a (possibly algebra-valued) k-form, pointwise.

    Uses the orientation dx^1 ^ ... ^ dx^m, so ``*1 = sqrt|g| dx^1...dx^m``.
    """
    alpha.chart.check_same(metric.chart)
    m, k = alpha.chart.dim, alpha.degree
    trailing = alpha.coeffs.ndim - 1 - m
    out = np.zeros((len(multi_indices(m, m - k)),) + alpha.coeffs.shape[1:], dtype=alpha.coeffs.dtype)
    for j, i, w in metric.star_terms(k):
        out[j] += _expand(w, trailing) * alpha.coeffs[i]
    return alpha.rebuild(m - k, out)


def pairing_density(x: np.ndarray, y: np.ndarray, algebra) -> np.ndarray:
    """Pointwise ad-invariant pairing of coefficient arrays (real if no algebra)."""
    if algebra is None:
        return np.real(x * y)
    return algebra.pairing_matrices(x, y)


def inner_product(alpha, beta, metric: MetricField) -> float:
    """L2 inner product of two k-forms: integral of <alpha ^ *beta> over the interior."""
    alpha.chart.check_same(beta.chart)
    if alpha.degree != beta.degree:
        raise ValueError(f"degree mismatch {alpha.degree} vs {beta.degree}")
    if (alpha.algebra is None) != (beta.algebra is None) or (
        alpha.algebra is not None and alpha.algebra.key != beta.algebra.key
    ):
        raise ValueError("algebra mismatch")
    m, k = alpha.chart.dim, alpha.degree
    star_b = hodge_star(beta, metric)
    pos = index_position(m, m - k)
    dens = np.zeros(alpha.chart.sizes)
    for i, I in enumerate(multi_indices(m, k)):
        Ic = complement(m, I)
        dens = dens + perm_sign(I + Ic) * pairing_density(alpha.coeffs[i], star_b.coeffs[pos[Ic]], alpha.algebra)
    mask = alpha.chart.interior_mask(max(alpha.margin, beta.margin))
    return float(np.sum(dens[mask]) * alpha.chart.cell_volume)


def integrate_density(f: np.ndarray | float, chart: Chart, metric: MetricField, width: int = 0) -> ScalarDensityReport:
    """Midpoint-rule integral of ``f dvol`` over the interior points."""
    chart.check_same(metric.chart)
    vals = np.broadcast_to(np.asarray(f, dtype=float) * metric.sqrt_det, chart.sizes)
    mask = chart.interior_mask(width)
    return ScalarDensityReport(float(np.sum(vals[mask]) * chart.cell_volume), "midpoint", int(mask.sum()))
