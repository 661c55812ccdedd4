"""The cone Yang-Mills energy, its Euler-Lagrange residuals and a descent flow."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .cone import ConnectionPair, cone_curvature
from .forms import (
    DegreeError,
    GValuedForm,
    RealTwoForm,
    graded_bracket,
    integrate_top_form,
    norm,
    pairing_wedge,
    zeta_adjoint,
    zeta_wedge,
)
from .geometry import MetricField, hodge_star, inner_product


@dataclass(frozen=True, eq=False)
class ELResidual:
    rA: GValuedForm
    rB: GValuedForm
    norm_rA: float
    norm_rB: float

    def __post_init__(self):
        if self.norm_rA < 0 or self.norm_rB < 0:
            raise ValueError("residual norms must be non-negative")


@dataclass(frozen=True)
class FlowReport:
    iterations: int
    energy_trace: list[float]
    final_residual: ELResidual = field(repr=False)
    step_sizes: list[float]
    terminated_by: str
    norm_trace: list[tuple[float, float]] = field(default_factory=list)
    tol: float = 0.0
    final_pair: ConnectionPair | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.terminated_by not in ("tolerance", "max_iter", "stall"):
            raise ValueError(f"unknown termination reason {self.terminated_by!r}")
        e = self.energy_trace
        if any(b > a for a, b in zip(e, e[1:])):
            raise ValueError("energy trace must be non-increasing")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
            "tol": self.tol,
            "final_energy": self.energy_trace[-1],
            "final_norm_rA": self.final_residual.norm_rA,
            "final_norm_rB": self.final_residual.norm_rB,
            "energy_trace": self.energy_trace,
            "step_sizes": self.step_sizes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "energy", "norm_rA", "norm_rB", "step"])
        steps = [0.0] + list(self.step_sizes)
        for i, (e, (a, b)) in enumerate(zip(self.energy_trace, self.norm_trace)):
            w.writerow([i, repr(e), repr(a), repr(b), repr(steps[i])])
        return buf.getvalue()


# ------------------------------------------------------------------ energy


def curvature_terms(pair: ConnectionPair, zeta: RealTwoForm) -> tuple[GValuedForm, GValuedForm]:
    """``(F_A + zeta B, d_A B)``."""
    return pair.curvature + zeta_wedge(zeta, pair.B), pair.cov(pair.B)


def energy(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> float:
    """``||F_A + zeta B||^2 + ||d_A B||^2``."""
    E, X = curvature_terms(pair, zeta)
    return inner_product(E, E, metric) + inner_product(X, X, metric)


def el_residual(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> ELResidual:
    """``rA = d_A^*(F + zeta B) + [B, d_A B]``, ``rB = zeta^*(F + zeta B) + d_A^* d_A B``."""
    E, X = curvature_terms(pair, zeta)
    rA = pair.codiff(E, metric) + graded_bracket(pair.B, X)
    rB = zeta_adjoint(zeta, E, metric) + pair.codiff(X, metric)
    return ELResidual(rA, rB, norm(rA, metric), norm(rB, metric))


def el_term_scale(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> float:
    """Sum of the norms of the uncancelled pieces of the two residuals.

    ``F`` and ``zeta B`` enter separately, so the scale stays of field size at
    a solution, where the residuals themselves cancel down to O(h^2).
    """
    F, zB, X = pair.curvature, zeta_wedge(zeta, pair.B), pair.cov(pair.B)
    terms = [
        pair.codiff(F, metric),
        pair.codiff(zB, metric),
        graded_bracket(pair.B, X),
        zeta_adjoint(zeta, F, metric),
        zeta_adjoint(zeta, zB, metric),
        pair.codiff(X, metric),
    ]
    return float(sum(norm(t, metric) for t in terms))


def first_variation(
    pair: ConnectionPair,
    zeta: RealTwoForm,
    metric: MetricField,
    eta: GValuedForm,
    xi: GValuedForm,
    residual: ELResidual | None = None,
) -> float:
    """Directional derivative ``2<rA, eta> + 2<rB, xi>`` of the energy."""
    r = residual if residual is not None else el_residual(pair, zeta, metric)
    return 2.0 * inner_product(r.rA, eta, metric) + 2.0 * inner_product(r.rB, xi, metric)


def default_tolerance(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> float:
    """``10 h^2`` times the residual-term scale of the starting pair."""
    h = pair.chart.max_spacing
    return 10.0 * h * h * max(el_term_scale(pair, zeta, metric), 1e-300)


def gradient_flow(
    start: ConnectionPair,
    zeta: RealTwoForm,
    metric: MetricField,
    max_iter: int = 500,
    tol: float | None = None,
    step: float | None = None,
    shrink: float = 0.5,
    armijo: float = 1e-4,
    max_backtracks: int = 60,
) -> FlowReport:
    """Steepest descent on the energy along ``-(rA, rB)`` with Armijo backtracking.

    The trial step doubles after every accepted step and halves on rejection;
    a step that cannot decrease the energy within ``max_backtracks`` halvings
    ends the run with ``terminated_by="stall"``.
    """
    if tol is None:
        tol = default_tolerance(start, zeta, metric)
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = start.chart.max_spacing
    s = step if step is not None else 0.1 * h * h
    pair = start
    S = energy(pair, zeta, metric)
    r = el_residual(pair, zeta, metric)
    energies, steps, norms = [S], [], [(r.norm_rA, r.norm_rB)]
    reason = "max_iter"
    it = 0
    while True:
        if max(r.norm_rA, r.norm_rB) < tol:
            reason = "tolerance"
            break
        if it >= max_iter:
            break
        g2 = r.norm_rA ** 2 + r.norm_rB ** 2
        accepted = False
        for _ in range(max_backtracks):
            trial = pair.shifted(r.rA, r.rB, -s)
            S_new = energy(trial, zeta, metric)
            if S_new <= S - armijo * s * 2.0 * g2:
                accepted = True
                break
            s *= shrink
        if not accepted:
            reason = "stall"
            break
        pair, S = trial, S_new
        it += 1
        steps.append(s)
        energies.append(S)
        r = el_residual(pair, zeta, metric)
        norms.append((r.norm_rA, r.norm_rB))
        s *= 2.0
    return FlowReport(it, energies, r, steps, reason, norms, tol, pair)


# --------------------------------------------------------- 3D and 2D checks


def duality_residual(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField, sign: int) -> float:
    """``||F_A + zeta B - sign * d_A B||`` on a 3-manifold."""
    if pair.chart.dim != 3:
        raise DegreeError("duality residual is defined for m = 3")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    E, X = curvature_terms(pair, zeta)
    return norm(E - hodge_star(X, metric) * float(sign), metric)


def charge_Q(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField | None = None) -> float:
    """Integral of ``<(F_A + zeta B) ^ d_A B>`` with the ad-invariant pairing."""
    if pair.chart.dim != 3:
        raise DegreeError("charge is defined for m = 3")
    E, X = curvature_terms(pair, zeta)
    return integrate_top_form(pairing_wedge(E, X))


def hitchin_residual(
    A2: GValuedForm,
    b: GValuedForm,
    B: GValuedForm,
    zeta: RealTwoForm,
    dchi: RealTwoForm,
    metric: MetricField,
    sign: int = 1,
) -> tuple[float, float]:
    """``(||F + zeta B + dchi b - sign *[b, B]||, ||*d_A B - sign d_A b||)`` on a surface."""
    if A2.chart.dim != 2:
        raise DegreeError("the reduced equations live on a 2-manifold")
    pair = ConnectionPair(A2, B)
    E = pair.curvature + zeta_wedge(zeta, B) + zeta_wedge(dchi, b)
    r1 = E - hodge_star(graded_bracket(b, B), metric) * float(sign)
    r2 = hodge_star(pair.cov(B), metric) - pair.cov(b) * float(sign)
    return norm(r1, metric), norm(r2, metric)


def b_zero_solution_check(A: GValuedForm, zeta: RealTwoForm, metric: MetricField, background_F: GValuedForm | None = None) -> tuple[float, float]:
    """``(||d_A^* F_A||, ||zeta^* F_A||)``: the B = 0 specialization of the residuals."""
    pair = ConnectionPair(A, GValuedForm.zeros(A.chart, 0, A.algebra), background_F)
    F = pair.curvature
    return norm(pair.codiff(F, metric), metric), norm(zeta_adjoint(zeta, F, metric), metric)


def cone_flat_residual(pair: ConnectionPair, zeta: RealTwoForm, metric: MetricField) -> tuple[float, float]:
    """Norms of the two cone-curvature components."""
    c = cone_curvature(pair, zeta)
    return norm(c.eta, metric), norm(c.xi, metric)
