"""Holonomy around lattice loops and the period-group classifier.

Parallel transport along an edge from ``p`` to ``p + dir e_a`` is
``exp(-dir h_a (A_a(p) + A_a(p'))/2)`` (trapezoidal rule); a loop's holonomy
is the ordered product with later edges on the left.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

import numpy as np
import scipy.linalg

from .cone import ConnectionPair
from .forms import GValuedForm, RealTwoForm, norm, zeta_wedge
from .functional import cone_flat_residual
from .geometry import Chart, MetricField, index_position


class OpenLoopError(ValueError):
    pass


@dataclass(frozen=True)
class GridLoop:
    """Axis-aligned lattice path: a base point and ``(axis, +-1)`` steps."""

    base: tuple[int, ...]
    steps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(int(i) for i in self.base))
        object.__setattr__(self, "steps", tuple((int(a), int(d)) for a, d in self.steps))
        for a, d in self.steps:
            if d not in (1, -1):
                raise ValueError("step direction must be +1 or -1")

    @classmethod
    def from_json(cls, text: str) -> "GridLoop":
        """``{"base": [i, j, ...], "steps": ["+0", "-1", ...]}`` with signed axes."""
        doc = json.loads(text) if isinstance(text, str) else text
        steps = []
        for s in doc.get("steps", []):
            s = str(s)
            steps.append((int(s[1:]), 1 if s[0] == "+" else -1))
        return cls(tuple(doc["base"]), tuple(steps))

    def points(self, chart: Chart) -> list[tuple[int, ...]]:
        """Visited grid points, wrapped on periodic axes; checks bounds and closure."""
        p = list(self.base)
        pts = [tuple(p)]
        for a, d in self.steps:
            if not 0 <= a < chart.dim:
                raise ValueError(f"axis {a} out of range")
            p[a] += d
            if chart.periodic[a]:
                p[a] %= chart.sizes[a]
            elif not 0 <= p[a] < chart.sizes[a]:
                raise ValueError("loop leaves the chart")
            pts.append(tuple(p))
        if pts[-1] != pts[0]:
            raise OpenLoopError("loop does not return to its base point")
        return pts

    def concat(self, other: "GridLoop") -> "GridLoop":
        """``other`` after ``self``; both must share the base point."""
        if self.base != other.base:
            raise ValueError("loops must share a base point")
        return GridLoop(self.base, self.steps + other.steps)

    def reversed(self) -> "GridLoop":
        return GridLoop(self.base, tuple((a, -d) for a, d in reversed(self.steps)))

    def edge_chain(self, chart: Chart) -> dict:
        """Signed edges ``{(start_point, axis): multiplicity}`` of the loop."""
        pts = self.points(chart)
        chain: dict = {}
        for (a, d), p, q in zip(self.steps, pts, pts[1:]):
            key = (p if d > 0 else q, a)
            chain[key] = chain.get(key, 0) + d
        return {k: v for k, v in chain.items() if v}


def rectangle_loop(base: tuple[int, ...], a: int, b: int, na: int, nb: int) -> GridLoop:
    """Counter-clockwise boundary of an ``na x nb`` rectangle in the (a, b) plane."""
    steps = [(a, 1)] * na + [(b, 1)] * nb + [(a, -1)] * na + [(b, -1)] * nb
    return GridLoop(base, tuple(steps))


def rectangle_disk(base: tuple[int, ...], a: int, b: int, na: int, nb: int, chart: Chart) -> list:
    """Plaquettes ``(corner, a, b)`` filling the rectangle of :func:`rectangle_loop`."""
    out = []
    for i in range(na):
        for j in range(nb):
            q = list(base)
            q[a] += i
            q[b] += j
            out.append((_wrap(tuple(q), chart), a, b))
    return out


def _wrap(p: tuple[int, ...], chart: Chart) -> tuple[int, ...]:
    return tuple(x % n if per else x for x, n, per in zip(p, chart.sizes, chart.periodic))


def disk_boundary(disk: list, chart: Chart) -> dict:
    chain: dict = {}
    for q, a, b in disk:
        ea = [0] * chart.dim
        ea[a] = 1
        eb = [0] * chart.dim
        eb[b] = 1
        qa = _wrap(tuple(x + y for x, y in zip(q, ea)), chart)
        qb = _wrap(tuple(x + y for x, y in zip(q, eb)), chart)
        for key, s in (((q, a), 1), ((qa, b), 1), ((qb, a), -1), ((q, b), -1)):
            chain[key] = chain.get(key, 0) + s
    return {k: v for k, v in chain.items() if v}


def holonomy(A: GValuedForm, loop: GridLoop) -> np.ndarray:
    """Ordered product of trapezoidal edge transports around ``loop``."""
    if A.degree != 1 or A.algebra is None:
        raise ValueError("holonomy needs an algebra-valued 1-form")
    chart = A.chart
    pts = loop.points(chart)
    n = A.algebra.matrix_dim
    out = np.eye(n, dtype=complex if np.iscomplexobj(A.coeffs) else float)
    for (a, d), p, q in zip(loop.steps, pts, pts[1:]):
        avg = 0.5 * (A.coeffs[a][p] + A.coeffs[a][q])
        out = scipy.linalg.expm(-d * chart.spacings[a] * avg) @ out
    return out


def disk_flux(zeta: RealTwoForm, disk: list) -> float:
    """Sum over plaquettes of the corner-averaged zeta component times the area."""
    chart = zeta.chart
    pos = index_position(chart.dim, 2)
    total = 0.0
    for q, a, b in disk:
        lo, hi, sgn = (a, b, 1.0) if a < b else (b, a, -1.0)
        comp = zeta.coeffs[pos[(lo, hi)]]
        corners = []
        for da in (0, 1):
            for db in (0, 1):
                p = list(q)
                p[a] += da
                p[b] += db
                corners.append(comp[_wrap(tuple(p), chart)])
        total += sgn * float(np.mean(corners)) * chart.spacings[a] * chart.spacings[b]
    return total


def cone_flat_tolerance(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> float:
    h = pair.chart.max_spacing
    scale = norm(pair.curvature, metric) + norm(zeta_wedge(zeta, pair.B), metric)
    return 10.0 * h * h * max(scale, 1.0)


def verify_holonomy_lemma(
    pair: ConnectionPair,
    zeta: RealTwoForm,
    metric: MetricField,
    loop: GridLoop,
    disk: list,
) -> float:
    """``||hol(loop) - exp((flux of zeta through disk) B(base))||``.

    The lemma's hypothesis (cone flatness) and ``boundary(disk) == loop`` are
    checked first.
    """
    eta, xi = cone_flat_residual(pair, zeta, metric)
    tol = cone_flat_tolerance(pair, zeta, metric)
    if max(eta, xi) > tol:
        raise ValueError(f"pair is not cone-flat at tolerance {tol:.3e} (residuals {eta:.3e}, {xi:.3e})")
    chart = pair.chart
    if disk_boundary(disk, chart) != loop.edge_chain(chart):
        raise ValueError("disk boundary does not match the loop")
    hol = holonomy(pair.A, loop)
    xi0 = pair.B.coeffs[0][loop.base]
    expected = scipy.linalg.expm(disk_flux(zeta, disk) * xi0)
    return float(np.linalg.norm(hol - expected))


# ============================================================ period groups


@dataclass(frozen=True)
class Period:
    """``coeff * unit`` where ``unit`` is 1 (None) or a declared irrational."""

    coeff: Fraction
    unit: str | None = None

    def __str__(self) -> str:
        if self.unit is None:
            return str(self.coeff)
        return f"irr:{self.unit}" if self.coeff == 1 else f"{self.coeff}*irr:{self.unit}"


def parse_period(x) -> Period:
    """Accepts ints, Fractions, ``"p/q"``, ``"irr:name"`` and ``"p/q*irr:name"``."""
    if isinstance(x, Period):
        return x
    if isinstance(x, bool) or isinstance(x, float) or isinstance(x, np.floating):
        raise TypeError("floating-point periods are rejected: density cannot be decided from floats")
    if isinstance(x, (int, Fraction, np.integer)):
        return Period(Fraction(x))
    if not isinstance(x, str):
        raise TypeError(f"unsupported period {x!r}")
    s = x.strip()
    if "irr:" in s:
        head, _, name = s.partition("irr:")
        head = head.rstrip("*")
        if not name:
            raise ValueError("irrational marker needs a name")
        return Period(_exact(head) if head else Fraction(1), name)
    return Period(_exact(s))


def _exact(s: str) -> Fraction:
    if "." in s or "e" in s.lower():
        raise TypeError(f"floating-point period {s!r} rejected; give p/q")
    return Fraction(s)


def fraction_gcd(values) -> Fraction:
    values = [abs(v) for v in values if v != 0]
    den = reduce(lcm, (v.denominator for v in values), 1)
    num = reduce(gcd, (int(v * den) for v in values), 0)
    return Fraction(num, den)


@dataclass(frozen=True)
class PeriodGroupReport:
    generators: tuple[str, ...]
    classification: str
    minimal: str | None = None
    rational_certificate: tuple[int, int] | None = None

    def __post_init__(self):
        if self.classification not in ("trivial", "discrete", "dense"):
            raise ValueError(f"bad classification {self.classification!r}")

    def to_dict(self) -> dict:
        out = {"classification": self.classification, "generators": list(self.generators)}
        if self.minimal is not None:
            out["minimal"] = self.minimal
        if self.rational_certificate is not None:
            out["rational_certificate"] = list(self.rational_certificate)
        return out


def classify_period_group(periods) -> PeriodGroupReport:
    """Trivial, discrete (with minimal generator) or dense subgroup of R.

    Distinct irrational names are treated as rationally independent of each
    other and of 1; that is what declaring them irrational means here.
    """
    ps = [parse_period(p) for p in periods]
    gens = tuple(str(p) for p in ps)
    nonzero = [p for p in ps if p.coeff != 0]
    if not nonzero:
        return PeriodGroupReport(gens, "trivial")
    units = {p.unit for p in nonzero}
    if len(units) > 1:
        return PeriodGroupReport(gens, "dense")
    unit = units.pop()
    g = fraction_gcd([p.coeff for p in nonzero])
    return PeriodGroupReport(gens, "discrete", str(Period(g, unit)), (g.numerator, g.denominator))
