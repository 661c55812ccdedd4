"""Refinement studies: observed orders and the pass/fail laws applied to them."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

MIN_ORDER = 1.9
LOWER_FRACTION = 0.5
# values this far below their natural scale are exact up to roundoff
EXACT_FLOOR = 1e-10


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    name: str
    value: float
    observed_order: float | None
    scale: float = 1.0


@dataclass(frozen=True)
class LawResult:
    name: str
    law: str
    passed: bool
    detail: str


def observed_order(v_coarse: float, v_fine: float, h_coarse: float, h_fine: float) -> float | None:
    """``log(v_c / v_f) / log(h_c / h_f)``; None when either value is zero."""
    if v_coarse <= 0 or v_fine <= 0:
        return None
    return math.log(v_coarse / v_fine) / math.log(h_coarse / h_fine)


def is_exact(value: float, scale: float) -> bool:
    return value <= EXACT_FLOOR * max(scale, 1.0)


def table_rows(name: str, hs: Sequence[float], values: Sequence[float], scales: Sequence[float] | None = None) -> list[ConvergenceRow]:
    scales = list(scales) if scales is not None else [1.0] * len(values)
    rows = []
    for i, (h, v, s) in enumerate(zip(hs, values, scales)):
        p = None if i == 0 else observed_order(values[i - 1], v, hs[i - 1], h)
        rows.append(ConvergenceRow(h, name, v, p, s))
    return rows


def check_law(rows: Sequence[ConvergenceRow], law: str, target: float | None = None, tolerance: float | None = None) -> LawResult:
    """Apply a refinement law to one residual's rows (ordered coarse to fine).

    * ``converges``: every consecutive observed order is at least 1.9, unless
      the finer value is already exact to roundoff relative to its scale;
    * ``bounded_below``: every value stays at least half the coarsest value;
    * ``limit``: the finest value is within ``tolerance`` (relative) of ``target``.
    """
    name = rows[0].name
    if law == "converges":
        bad = []
        for prev, row in zip(rows, rows[1:]):
            if is_exact(row.value, row.scale):
                continue
            if row.observed_order is None or row.observed_order < MIN_ORDER:
                bad.append(f"h={row.h:.4g}: order {row.observed_order}")
        if len(rows) < 2 and not is_exact(rows[0].value, rows[0].scale):
            bad.append("need at least two resolutions")
        return LawResult(name, law, not bad, "; ".join(bad) or "ok")
    if law == "bounded_below":
        floor = LOWER_FRACTION * rows[0].value
        ok = rows[0].value > 0 and all(r.value >= floor for r in rows)
        return LawResult(name, law, ok, f"min {min(r.value for r in rows):.4g} vs floor {floor:.4g}")
    if law == "limit":
        tol = 0.05 if tolerance is None else tolerance
        err = abs(rows[-1].value - target) / abs(target)
        return LawResult(name, law, err <= tol, f"relative error {err:.3g} (tol {tol})")
    raise ValueError(f"unknown law {law!r}")


def map_ordered(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Evaluate ``fn`` on each item, returning results in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def refinement_study(build: Callable[[int], object], resolutions: Sequence[int], threads: int = 1):
    """Build a configuration at each resolution and evaluate its expected records.

    Returns ``(rows, results)``: convergence rows per verifier and one
    :class:`LawResult` per expected record.
    """
    if list(resolutions) != sorted(set(resolutions)):
        raise ValueError("resolutions must be strictly increasing")

    def evaluate(n):
        cfg = build(n)
        return cfg.chart.max_spacing, cfg.expected, {r.verifier: cfg.evaluate(r.verifier) for r in cfg.expected}

    runs = map_ordered(evaluate, list(resolutions), threads)
    hs = [h for h, _, _ in runs]
    expected = runs[0][1]
    rows, results = [], []
    for rec in expected:
        vals = [run[2][rec.verifier][0] for run in runs]
        scales = [run[2][rec.verifier][1] for run in runs]
        r = table_rows(rec.verifier, hs, vals, scales)
        rows.extend(r)
        results.append(check_law(r, rec.law, rec.target, rec.tolerance))
    return rows, results
