"""Closed-form field configurations and the verifiers that check them.

Each constructor returns a :class:`NamedConfiguration`; its ``expected``
records name a verifier from :data:`VERIFIERS` and a refinement law.
Derivatives of the closed-form inputs are hand-coded; :mod:`coneym.dual`
re-derives them in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .algebra import so, u1
from .cone import ConnectionPair
from .forms import (
    GValuedForm,
    RealTwoForm,
    exterior_derivative,
    graded_bracket,
    norm,
    zeta_wedge,
)
from .functional import (
    b_zero_solution_check,
    cone_flat_residual,
    curvature_terms,
    duality_residual,
    el_residual,
    el_term_scale,
)
from .geometry import Chart, MetricField

LAWS = ("converges", "bounded_below", "limit")


@dataclass(frozen=True)
class ExpectedRecord:
    verifier: str
    law: str
    target: float | None = None
    tolerance: float | None = None

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}")
        if self.law == "limit" and self.target is None:
            raise ValueError("a limit law needs a target")


@dataclass(frozen=True, eq=False)
class NamedConfiguration:
    name: str
    chart: Chart
    metric: MetricField
    zeta: RealTwoForm
    pair: ConnectionPair
    expected: tuple[ExpectedRecord, ...]
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for obj in (self.metric, self.zeta, self.pair):
            self.chart.check_same(obj.chart)
        if not self.expected:
            raise ValueError("a configuration needs at least one expected record")
        unknown = [r.verifier for r in self.expected if r.verifier not in VERIFIERS]
        if unknown:
            raise ValueError(f"unknown verifiers {unknown}")

    def evaluate(self, verifier: str) -> tuple[float, float]:
        """``(value, scale)`` of a named verifier on this configuration."""
        return VERIFIERS[verifier](self)


def _u1_form(chart: Chart, degree: int, components: dict) -> GValuedForm:
    """u(1)-valued form ``i * f`` from real component arrays."""
    return GValuedForm.from_components(
        chart, degree, {I: np.asarray(v)[..., None] for I, v in components.items()}, u1()
    )


# ================================================================ Taub-NUT


def _levi(i: int, j: int, k: int) -> int:
    return (i - j) * (j - k) * (k - i) // 2


def taub_nut_phi(x, y, z):
    """``phi`` with ``exp(2 phi) = 1 + 2/r``; accepts duals."""
    r = dual.sqrt(x * x + y * y + z * z)
    return 0.5 * dual.log(1.0 + 2.0 / r)


def taub_nut_phi_derivatives(coords) -> tuple[np.ndarray, list, list]:
    """Hand-coded ``exp(2 phi)``, ``d_i phi`` and ``d_i d_j phi``."""
    x = [np.asarray(c, dtype=float) for c in coords]
    r2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2
    r = np.sqrt(r2)
    e2 = 1.0 + 2.0 / r
    d = [-xi / (r2 * (r + 2.0)) for xi in x]
    dd = [
        [
            (-(1.0 if i == j else 0.0) / (r2 * (r + 2.0))) + x[i] * x[j] * (3.0 * r + 4.0) / (r2 * r2 * (r + 2.0) ** 2)
            for j in range(3)
        ]
        for i in range(3)
    ]
    return e2, d, dd


def taub_nut_fields(coords, sign: int):
    """Matrix fields ``(zeta_ij, A_mu, B)`` for duality sign ``sign``.

    With the lexicographic orientation, ``F + zeta B = sign * d_A B`` holds
    when zeta carries the opposite sign ``s = -sign``.
    """
    s = -sign
    e2, d, _ = taub_nut_phi_derivatives(coords)
    shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
    A = np.zeros((3,) + shape + (4, 4))
    B = np.zeros(shape + (4, 4))
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            # A^i_j = -d_i phi dx^j + d_j phi dx^i
            A[j, ..., i, j] += -d[i]
            A[i, ..., i, j] += d[j]
            B[..., i, j] = -s * sum(_levi(i, j, k) * d[k] for k in range(3)) / e2
        for mu in range(3):
            A[mu, ..., i, 3] = s * sum(_levi(i, j, mu) * d[j] for j in range(3))
            A[mu, ..., 3, i] = -A[mu, ..., i, 3]
        B[..., i, 3] = d[i] / e2
        B[..., 3, i] = -B[..., i, 3]
    zeta = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        zeta[(i, j)] = 2.0 * s * sum(_levi(i, j, k) * d[k] for k in range(3)) * e2
    return zeta, A, B


def taub_nut_closed_forms(coords, sign: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ``F_A`` (components 01, 02, 12) and ``d_A B`` as matrix fields."""
    s = -sign
    _, d, dd = taub_nut_phi_derivatives(coords)
    shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
    T = np.zeros((3, 3) + shape + (4, 4))  # T[l, q] multiplies dx^l ^ dx^q
    D = np.zeros((3,) + shape + (4, 4))
    R = range(3)
    for i in R:
        for j in R:
            if i == j:
                continue
            for k in R:
                T[k, j, ..., i, j] += -dd[i][k] + d[i] * d[k]
                T[k, i, ..., i, j] += dd[j][k] - d[j] * d[k]
                T[i, j, ..., i, j] += -d[k] ** 2
                for l in R:
                    for p in R:
                        for q in R:
                            e = _levi(i, k, l) * _levi(j, p, q)
                            if e:
                                T[l, q, ..., i, j] += -e * d[k] * d[p]
            for l in R:
                D[l, ..., i, j] = s * sum(
                    2 * _levi(i, j, k) * d[k] * d[l]
                    - _levi(i, j, k) * dd[k][l]
                    + 2 * (d[i] * _levi(j, k, l) - d[j] * _levi(i, k, l)) * d[k]
                    for k in R
                )
        for j in R:
            for k in R:
                for l in R:
                    T[k, l, ..., i, 3] += s * (d[i] * _levi(j, k, l) * d[j] - _levi(i, j, k) * dd[j][l])
        for j in R:
            D[j, ..., i, 3] += -4 * d[i] * d[j] + dd[i][j]
            D[i, ..., i, 3] += 2 * d[j] ** 2
    e2, _, _ = taub_nut_phi_derivatives(coords)
    D = D / e2[None, ..., None, None]
    for i in R:
        for j in R:
            if i == j:
                continue
            D[:, ..., j, i] = -D[:, ..., i, j]
        T[..., 3, i] = -T[..., i, 3]
        D[:, ..., 3, i] = -D[:, ..., i, 3]
    F = np.stack([T[a, b] - T[b, a] for a, b in ((0, 1), (0, 2), (1, 2))])
    return F, D


def taub_nut(sign: int = 1, resolution: int = 16, halo: int = 2) -> NamedConfiguration:
    """Dimensionally reduced Taub-NUT pair on the box ``[1, 2]^3``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if resolution < 8:
        raise ValueError("resolution must be at least 8 to observe a convergence order")
    chart = Chart.box((1.0, 1.0, 1.0), (2.0, 2.0, 2.0), resolution, halo=halo)
    coords = chart.coordinates()
    e2, _, _ = taub_nut_phi_derivatives(coords)
    metric = MetricField.conformal(chart, e2 * e2)
    zc, A, B = taub_nut_fields(coords, sign)
    alg = so(4)
    zeta = RealTwoForm.from_components(chart, zc)
    shape = chart.sizes
    A = np.broadcast_to(A, (3,) + shape + (4, 4)).copy()
    B = np.broadcast_to(B, (1,) + shape + (4, 4)).copy()
    pair = ConnectionPair(GValuedForm(chart, 1, A, alg), GValuedForm(chart, 0, B, alg))
    expected = (
        ExpectedRecord("duality", "converges"),
        ExpectedRecord("duality_wrong_sign", "bounded_below"),
        ExpectedRecord("el_rA", "converges"),
        ExpectedRecord("el_rB", "converges"),
        ExpectedRecord("bracket_B_dAB", "bounded_below"),
    )
    return NamedConfiguration("taub-nut", chart, metric, zeta, pair, expected, {"sign": sign, "resolution": resolution})


# ========================================================= T^4 counterexample


def t4_metric_factor(x2, x3):
    sc = np.sin(2 * x2) * np.cos(x3)
    return (3.0 + 2.0 * sc) / (1.0 - 0.5 * sc)


def t4_curvature_components(x2, x3) -> dict:
    """Real coefficients of the closed-form curvature (i times these in u(1))."""
    return {
        (0, 1): -np.cos(2 * x2) * np.sin(x3) / (2 * np.pi),
        (0, 2): (1.0 - 0.5 * np.sin(2 * x2) * np.cos(x3)) / (2 * np.pi),
    }


def t4_potential_term(x2, x3):
    """The smooth part ``(1/4pi) sin 2x2 sin x3`` of the potential's dx^1 coefficient."""
    return np.sin(2 * x2) * np.sin(x3) / (4 * np.pi)


def t4_candidate_B(x2, x3):
    return np.cos(2 * x2) * np.sin(x3) / (4 * np.pi)


def t4_counterexample(resolution: int = 16, patch: bool = True, halo: int = 2) -> NamedConfiguration:
    """Abelian Yang-Mills field on T^4 for which no B completes a cone solution.

    With ``patch`` (the default) the x2, x3 axes are the non-periodic chart
    patch ``[0, pi/2]^2`` and x1, x4 stay periodic; otherwise the full
    periodic torus of side 2 pi is used.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if patch:
        chart = Chart.box(
            (0.0, 0.0, 0.0, 0.0), (2 * np.pi, np.pi / 2, np.pi / 2, 2 * np.pi), resolution,
            periodic=(True, False, False, True), halo=halo,
        )
    else:
        chart = Chart.torus(resolution, 2 * np.pi, 4)
    _, x2, x3, _ = chart.coordinates()
    f = t4_metric_factor(x2, x3)
    metric = MetricField.diagonal_metric(chart, [1.0, 1.0, 1.0 / f, f])
    zeta = RealTwoForm.from_components(chart, {(0, 1): 1.0, (2, 3): 1.0})
    F = _u1_form(chart, 2, t4_curvature_components(x2, x3))
    B = _u1_form(chart, 0, {(): t4_candidate_B(x2, x3)})
    pair = ConnectionPair(GValuedForm.zeros(chart, 1, u1()), B, background_F=F)
    expected = (
        ExpectedRecord("yang_mills", "converges"),
        ExpectedRecord("dB", "bounded_below"),
        ExpectedRecord("zeta_wedge_dB", "bounded_below"),
        ExpectedRecord("el_total", "bounded_below"),
    )
    return NamedConfiguration("t4-counterexample", chart, metric, zeta, pair, expected, {"resolution": resolution, "patch": patch})


# ==================================================== circle bundle example


def heisenberg_cone_flat(c: float = 0.0, n: int = 1, resolution: int = 16, halo: int = 2) -> NamedConfiguration:
    """Cone-flat u(1) pair on a chart of the degree-n circle bundle over T^2.

    Coordinates ``(x, y, z)`` with ``theta = dz + n x dy``, ``zeta = d theta``,
    metric ``dx^2 + dy^2 + theta^2``, ``Phi = 2 pi n i``,
    ``A = Phi n x dy + c theta Phi`` and ``B = -(1 + c) Phi``.
    """
    if n == 0:
        raise ValueError("n = 0 is the flat, degenerate bundle")
    chart = Chart.box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), resolution, periodic=(False, True, True), halo=halo)
    x, _, _ = chart.coordinates()
    x = np.broadcast_to(x, chart.sizes)
    g = np.zeros((3, 3) + chart.sizes)
    g[0, 0] = 1.0
    g[1, 1] = 1.0 + (n * x) ** 2
    g[1, 2] = g[2, 1] = n * x
    g[2, 2] = 1.0
    metric = MetricField(chart, g)
    zeta = RealTwoForm.from_components(chart, {(0, 1): float(n)})
    phi = 2 * np.pi * n
    A = _u1_form(chart, 1, {(1,): phi * n * x * (1.0 + c), (2,): np.full(chart.sizes, c * phi)})
    B = _u1_form(chart, 0, {(): np.full(chart.sizes, -(1.0 + c) * phi)})
    pair = ConnectionPair(A, B)
    ym_target = abs(1.0 + c) * n * n * phi
    ym = ExpectedRecord("yang_mills", "converges") if c == -1 else ExpectedRecord("yang_mills", "limit", ym_target, 0.05)
    expected = (ExpectedRecord("cone_flat_eta", "converges"), ExpectedRecord("cone_flat_xi", "converges"), ym)
    return NamedConfiguration(
        "heisenberg", chart, metric, zeta, pair, expected, {"c": c, "n": n, "resolution": resolution},
        {"Phi": phi, "theta": (x, n)},
    )


# ======================================================= 2D abelian family


@dataclass(frozen=True)
class TrigPoly2D:
    """``sum amp * S(2 pi kx x) * T(2 pi ky y)`` with ``S, T`` in {sin, cos}."""

    terms: tuple[tuple[float, int, int, str, str], ...]

    @classmethod
    def parse(cls, text: str) -> "TrigPoly2D":
        """Parse ``"0.1*sin(1x)*cos(0y)+..."``-style strings; see README."""
        terms = []
        for part in text.replace(" ", "").split("+"):
            if not part:
                continue
            amp_s, fx, fy = part.split("*")
            kx, ky = int(fx[4:-2]), int(fy[4:-2])
            terms.append((float(amp_s), kx, ky, fx[:3], fy[:3]))
        return cls(tuple(terms))

    @staticmethod
    def _f(kind, k, x, lib=np):
        return lib.sin(2 * np.pi * k * x) if kind == "sin" else lib.cos(2 * np.pi * k * x)

    @staticmethod
    def _df(kind, k, x):
        w = 2 * np.pi * k
        return w * np.cos(w * x) if kind == "sin" else -w * np.sin(w * x)

    def value(self, x, y, lib=np):
        out = 0.0 * x + 0.0 * y
        for amp, kx, ky, sx, sy in self.terms:
            out = out + amp * self._f(sx, kx, x, lib) * self._f(sy, ky, y, lib)
        return out

    def grad(self, x, y):
        fx = 0.0 * x + 0.0 * y
        fy = 0.0 * x + 0.0 * y
        for amp, kx, ky, sx, sy in self.terms:
            fx = fx + amp * self._df(sx, kx, x) * self._f(sy, ky, y)
            fy = fy + amp * self._f(sx, kx, x) * self._df(sy, ky, y)
        return fx, fy

    def laplacian(self, x, y):
        return -sum(
            (amp * (2 * np.pi) ** 2 * (kx * kx + ky * ky)) * self._f(sx, kx, x) * self._f(sy, ky, y)
            for amp, kx, ky, sx, sy in self.terms
        ) + 0.0 * x + 0.0 * y


DEFAULT_F = TrigPoly2D(((0.1, 1, 0, "sin", "cos"), (0.1, 0, 1, "cos", "cos"), (0.1, 1, 1, "sin", "sin")))


def abelian_2d_family(
    c_prime: float = 0.0,
    c: float = 0.0,
    c_dprime: float = 1.0,
    f: TrigPoly2D | None = None,
    resolution: int = 16,
    with_potential: bool | None = None,
) -> NamedConfiguration:
    """Closed-form abelian critical points on the unit flat torus.

    ``zeta = (c' - lap f) w``, ``B = c'' - c f`` and ``F = c w - zeta B``.
    When ``c = c' = 0`` the curvature has the global potential
    ``A = c'' * df`` (times i) and the pair is built from it; otherwise ``F``
    is prescribed directly.
    """
    if c * c_prime != 0:
        raise ValueError("c * c' must vanish for a critical point")
    f = DEFAULT_F if f is None else f
    chart = Chart.torus(resolution, 1.0, 2)
    x, y = chart.coordinates()
    metric = MetricField.euclidean(chart)
    lap = f.laplacian(x, y)
    zeta_c = c_prime - lap
    zeta = RealTwoForm.from_components(chart, {(0, 1): zeta_c})
    b = c_dprime - c * f.value(x, y)
    B = _u1_form(chart, 0, {(): b})
    potential = (c == 0 and c_prime == 0) if with_potential is None else with_potential
    if potential:
        if c != 0 or c_prime != 0:
            raise ValueError("a global potential exists only when c = c' = 0")
        fx, fy = f.grad(x, y)
        A = _u1_form(chart, 1, {(0,): -c_dprime * fy, (1,): c_dprime * fx})
        pair = ConnectionPair(A, B)
    else:
        F = _u1_form(chart, 2, {(0, 1): c - zeta_c * b})
        pair = ConnectionPair(GValuedForm.zeros(chart, 1, u1()), B, background_F=F)
    expected = [ExpectedRecord("el_rA", "converges"), ExpectedRecord("el_rB", "converges")]
    if c == 0:
        expected += [ExpectedRecord("cone_flat_eta", "converges"), ExpectedRecord("cone_flat_xi", "converges")]
    return NamedConfiguration(
        "abelian-2d", chart, metric, zeta, pair, tuple(expected),
        {"c_prime": c_prime, "c": c, "c_dprime": c_dprime, "resolution": resolution, "potential": potential},
        {"f": f},
    )


# ================================================================ verifiers


def _el(cfg):
    if "el" not in cfg.extras:
        cfg.extras["el"] = el_residual(cfg.pair, cfg.zeta, cfg.metric)
    return cfg.extras["el"]


def _terms(cfg):
    if "terms" not in cfg.extras:
        cfg.extras["terms"] = curvature_terms(cfg.pair, cfg.zeta)
    return cfg.extras["terms"]


def _v_duality(cfg, flip=1):
    E, X = _terms(cfg)
    s = cfg.params.get("sign", 1) * flip
    return duality_residual(cfg.pair, cfg.zeta, cfg.metric, s), norm(E, cfg.metric) + norm(X, cfg.metric)


def _v_el(cfg, which):
    r = _el(cfg)
    if "el_scale" not in cfg.extras:
        cfg.extras["el_scale"] = el_term_scale(cfg.pair, cfg.zeta, cfg.metric)
    value = {"rA": r.norm_rA, "rB": r.norm_rB, "total": float(np.hypot(r.norm_rA, r.norm_rB))}[which]
    return value, cfg.extras["el_scale"]


def _v_bracket(cfg):
    _, X = _terms(cfg)
    return norm(graded_bracket(cfg.pair.B, X), cfg.metric), norm(X, cfg.metric)


def _v_cone_flat(cfg, which):
    eta, xi = cone_flat_residual(cfg.pair, cfg.zeta, cfg.metric)
    scale = norm(cfg.pair.curvature, cfg.metric) + norm(zeta_wedge(cfg.zeta, cfg.pair.B), cfg.metric)
    return (eta if which == "eta" else xi), max(scale, 1.0)


def _v_yang_mills(cfg):
    F = cfg.pair.curvature
    return norm(cfg.pair.codiff(F, cfg.metric), cfg.metric), max(norm(F, cfg.metric), 1.0)


def _v_dB(cfg):
    dB = exterior_derivative(cfg.pair.B)
    return norm(dB, cfg.metric), norm(cfg.pair.B, cfg.metric)


def _v_zeta_dB(cfg):
    w = zeta_wedge(cfg.zeta, exterior_derivative(cfg.pair.B))
    return norm(w, cfg.metric), norm(cfg.pair.B, cfg.metric)


VERIFIERS: dict[str, Callable[[NamedConfiguration], tuple[float, float]]] = {
    "duality": _v_duality,
    "duality_wrong_sign": lambda cfg: _v_duality(cfg, -1),
    "el_rA": lambda cfg: _v_el(cfg, "rA"),
    "el_rB": lambda cfg: _v_el(cfg, "rB"),
    "el_total": lambda cfg: _v_el(cfg, "total"),
    "bracket_B_dAB": _v_bracket,
    "cone_flat_eta": lambda cfg: _v_cone_flat(cfg, "eta"),
    "cone_flat_xi": lambda cfg: _v_cone_flat(cfg, "xi"),
    "yang_mills": _v_yang_mills,
    "dB": _v_dB,
    "zeta_wedge_dB": _v_zeta_dB,
}


def b_zero_check(cfg: NamedConfiguration) -> tuple[float, float]:
    """B = 0 residuals ``(||d_A^* F||, ||zeta^* F||)`` of a configuration's connection."""
    return b_zero_solution_check(cfg.pair.A, cfg.zeta, cfg.metric, cfg.pair.background_F)


# ================================================================= registry


def _parse_sign(v) -> int:
    if isinstance(v, str):
        v = v.strip()
        if v in ("+", "+1", "1"):
            return 1
        if v in ("-", "-1"):
            return -1
        raise ValueError(f"bad sign {v!r}")
    v = int(v)
    if v not in (1, -1):
        raise ValueError(f"bad sign {v!r}")
    return v


def build(name: str, resolution: int, params: dict | None = None) -> NamedConfiguration:
    """Registry lookup: construct example ``name`` at ``resolution``."""
    p = dict(params or {})
    if name == "taub-nut":
        return taub_nut(_parse_sign(p.get("sign", 1)), resolution)
    if name == "t4-counterexample":
        return t4_counterexample(resolution, bool(p.get("patch", True)))
    if name == "heisenberg":
        return heisenberg_cone_flat(float(p.get("c", 0.0)), int(p.get("n", 1)), resolution)
    if name == "abelian-2d":
        f = p.get("f")
        f = TrigPoly2D.parse(f) if isinstance(f, str) else f
        return abelian_2d_family(
            float(p.get("c_prime", 0.0)), float(p.get("c", 0.0)), float(p.get("c_dprime", 1.0)), f, resolution
        )
    raise KeyError(f"unknown example {name!r}; choose from {sorted(REGISTRY)}")


REGISTRY = ("taub-nut", "t4-counterexample", "heisenberg", "abelian-2d")
