"""Command-line experiment runner.

    coneym <verify|flow|convergence|holonomy|classify> [--config path] [--key=value ...]

A JSON config document supplies defaults; ``--key=value`` flags override it.
Every run writes ``report.json`` (command, resolved config, build hash,
tables, pass flag) and, depending on ``--format``, CSV tables.
Exit codes: 0 pass, 1 a check failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import examples as ex
from .algebra import su2
from .cone import cone_bracket, cone_curvature, cone_differential, cone_inner
from .convergence import ConvergenceRow, check_law, map_ordered, refinement_study, table_rows
from .forms import (
    codifferential,
    covariant_derivative,
    curvature,
    exterior_derivative,
    norm,
    sup_norm,
    wedge,
    zeta_wedge,
)
from .functional import el_residual, gradient_flow
from .geometry import Chart, MetricField, inner_product
from .holonomy import classify_period_group, rectangle_disk, rectangle_loop, verify_holonomy_lemma
from .random_fields import random_closed_two_form, random_cone_form, random_form, random_pair

COMMANDS = ("verify", "flow", "convergence", "holonomy", "classify")
FORMATS = ("json", "csv", "both")


class ConfigError(ValueError):
    pass


def build_hash() -> str:
    """SHA-256 over the package's source files, in sorted path order."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


# ------------------------------------------------------------------ config


def _coerce(v: str):
    """Parse a flag value: JSON scalars/lists first, then comma lists, then text."""
    try:
        return json.loads(v)
    except (json.JSONDecodeError, ValueError):
        pass
    if "," in v:
        return [_coerce(x) for x in v.split(",")]
    return v


def parse_args(argv: list[str]) -> dict:
    ap = argparse.ArgumentParser(prog="coneym", description="cone Yang-Mills experiment runner", allow_abbrev=False)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("example", nargs="?", default=None)
    ap.add_argument("--config", default=None)
    ap.add_argument("--output", default=None)
    ap.add_argument("--format", default=None, choices=FORMATS)
    ap.add_argument("--threads", type=int, default=None)
    ns, extra = ap.parse_known_args(argv)
    doc: dict = {}
    if ns.config:
        try:
            doc = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {ns.config}: {e}")
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    params = dict(doc.get("parameters", {}))
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r}; use --key=value")
        k, v = item[2:].split("=", 1)
        params[k.replace("-", "_")] = v if k in ("periods", "sign", "f") else _coerce(v)
    example = ns.example or params.pop("example", None) or doc.get("example")
    params.pop("example", None)
    cfg = {
        "command": ns.command,
        "example": example,
        "parameters": params,
        "output": ns.output or doc.get("output", "coneym-out"),
        "format": ns.format or doc.get("format", "both"),
        "threads": ns.threads or doc.get("threads") or os.cpu_count() or 1,
    }
    if doc.get("command") not in (None, ns.command):
        raise ConfigError("config command disagrees with the command line")
    if cfg["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    return cfg


def _resolutions(params: dict, default: list[int]) -> list[int]:
    r = params.get("resolutions", default)
    r = [r] if isinstance(r, int) else list(r)
    try:
        r = [int(x) for x in r]
    except (TypeError, ValueError):
        raise ConfigError("resolutions must be integers")
    if r != sorted(set(r)):
        raise ConfigError("resolutions must be strictly increasing")
    params["resolutions"] = r
    return r


# --------------------------------------------------------------- commands


def _rows_table(rows: list[ConvergenceRow]) -> list[dict]:
    return [
        {"h": r.h, "residual": r.name, "value": r.value, "observed_order": r.observed_order, "scale": r.scale}
        for r in rows
    ]


def cmd_verify(cfg: dict) -> dict:
    name = cfg["example"]
    if name not in ex.REGISTRY:
        raise ConfigError(f"unknown example {name!r}; choose from {list(ex.REGISTRY)}")
    p = cfg["parameters"]
    defaults = {"taub-nut": [8, 16, 32], "t4-counterexample": [8, 16, 32], "heisenberg": [8, 16, 32], "abelian-2d": [16, 32, 64]}
    res = _resolutions(p, defaults[name])
    extra = {k: v for k, v in p.items() if k != "resolutions"}
    try:
        ex.build(name, res[0], extra)
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e))
    rows, results = refinement_study(lambda n: ex.build(name, n, extra), res, cfg["threads"])
    return {
        "tables": {"convergence": _rows_table(rows)},
        "results": [r.__dict__ for r in results],
        "pass": all(r.passed for r in results),
    }


def _flow_floor(cfg0) -> float:
    """``h^4 (||F||^2 + ||zeta B||^2)``: the squared O(h^2) residual scale."""
    h = cfg0.chart.max_spacing
    m = cfg0.metric
    return h ** 4 * (norm(cfg0.pair.curvature, m) ** 2 + norm(zeta_wedge(cfg0.zeta, cfg0.pair.B), m) ** 2)


def run_flow(example: str = "abelian-2d", resolution: int = 32, perturb: float = 1e-2, seed: int = 7, max_iter: int = 500, params: dict | None = None):
    if example != "abelian-2d":
        raise ConfigError("flow supports the abelian-2d example")
    base = ex.build(example, resolution, params or {})
    rng = np.random.default_rng(seed)
    alg = base.pair.algebra
    eta = random_form(base.chart, 1, alg, rng, scale=perturb)
    xi = random_form(base.chart, 0, alg, rng, scale=perturb)
    start = base.pair.shifted(eta, xi)
    # basin runs stop at 10 h^2 times the starting residual, not the field-scale default
    r0 = el_residual(start, base.zeta, base.metric)
    h = base.chart.max_spacing
    tol = 10.0 * h * h * max(r0.norm_rA, r0.norm_rB)
    report = gradient_flow(start, base.zeta, base.metric, max_iter=max_iter, tol=tol)
    return base, report, _flow_floor(base)


def cmd_flow(cfg: dict) -> dict:
    p = cfg["parameters"]
    try:
        extra = {k: v for k, v in p.items() if k not in ("resolution", "perturb", "seed", "max_iter")}
        base, rep, floor = run_flow(
            cfg["example"] or "abelian-2d", int(p.setdefault("resolution", 32)), float(p.setdefault("perturb", 1e-2)),
            int(p.setdefault("seed", 7)), int(p.setdefault("max_iter", 500)), extra,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))
    trace = [
        {"iter": i, "energy": e, "norm_rA": a, "norm_rB": b, "step": ([0.0] + rep.step_sizes)[i]}
        for i, (e, (a, b)) in enumerate(zip(rep.energy_trace, rep.norm_trace))
    ]
    final = rep.energy_trace[-1]
    ok = final <= 10.0 * floor and rep.iterations <= 500 and rep.terminated_by != "stall"
    return {
        "tables": {"trace": trace},
        "flow_report": rep.to_dict(),
        "results": [{"name": "energy_floor", "law": "below", "passed": ok, "detail": f"final {final:.6g} vs 10*floor {10 * floor:.6g}"}],
        "pass": ok,
    }


def identity_value(identity: str, n: int, seed: int) -> tuple[float, float]:
    """``(defect, scale)`` of an operator identity on a random field at resolution n."""
    rng = np.random.default_rng(seed)
    ch = Chart.torus(n, 2 * np.pi, 3)
    g = MetricField.euclidean(ch)
    alg = su2()
    if identity == "adjointness":
        A = random_form(ch, 1, alg, rng)
        eta, om = random_form(ch, 1, alg, rng), random_form(ch, 2, alg, rng)
        lhs = inner_product(covariant_derivative(A, eta), om, g)
        rhs = inner_product(eta, codifferential(A, om, g), g)
        return abs(lhs - rhs), norm(eta, g) * norm(om, g)
    if identity == "d2":
        a = random_form(ch, 1, alg, rng)
        return sup_norm(exterior_derivative(exterior_derivative(a))), sup_norm(a)
    if identity == "leibniz":
        a, b = random_form(ch, 1, alg, rng), random_form(ch, 1, alg, rng)
        lhs = exterior_derivative(wedge(a, b))
        rhs = wedge(exterior_derivative(a), b) - wedge(a, exterior_derivative(b))
        return norm(lhs - rhs, g), norm(lhs, g)
    if identity == "bianchi":
        A = random_form(ch, 1, alg, rng, scale=0.3)
        return norm(covariant_derivative(A, curvature(A)), g), norm(curvature(A), g)
    if identity == "cone-curvature":
        pair = random_pair(ch, alg, rng, scale=0.3)
        zeta = random_closed_two_form(ch, rng, scale=0.3)
        c = random_cone_form(ch, 1, alg, rng)
        d = cone_differential(pair, zeta, cone_differential(pair, zeta, c)) - cone_bracket(cone_curvature(pair, zeta), c)
        return cone_inner(d, d, g) ** 0.5, 1.0
    raise ConfigError(f"unknown identity {identity!r}")


IDENTITIES = ("adjointness", "d2", "leibniz", "bianchi", "cone-curvature")


def cmd_convergence(cfg: dict) -> dict:
    p = cfg["parameters"]
    ident = p.setdefault("identity", "leibniz")
    if ident not in IDENTITIES:
        raise ConfigError(f"identity must be one of {IDENTITIES}")
    res = _resolutions(p, [24, 48, 96])
    seed = int(p.setdefault("seed", 0))
    vals = map_ordered(lambda n: identity_value(ident, n, seed), res, cfg["threads"])
    hs = [2 * np.pi / n for n in res]
    rows = table_rows(ident, hs, [v for v, _ in vals], [s for _, s in vals])
    result = check_law(rows, "converges")
    return {"tables": {"convergence": _rows_table(rows)}, "results": [result.__dict__], "pass": result.passed}


def _parse_rects(value) -> list[tuple[Fraction, Fraction]]:
    items = value if isinstance(value, list) else str(value).split(",")
    out = []
    for it in items:
        a, _, b = str(it).partition("x")
        out.append((Fraction(a), Fraction(b)))
    return out


def holonomy_residuals(example: str, n: int, rects, params: dict) -> list[float]:
    cfg = ex.build(example, n, params)
    ch = cfg.chart
    base = tuple(ch.halo[a] for a in range(ch.dim))
    out = []
    for fa, fb in rects:
        na, nb = fa * n, fb * n
        if na.denominator != 1 or nb.denominator != 1:
            raise ConfigError(f"rectangle {fa}x{fb} does not fit the grid at resolution {n}")
        na, nb = int(na), int(nb)
        loop = rectangle_loop(base, 0, 1, na, nb)
        disk = rectangle_disk(base, 0, 1, na, nb, ch)
        out.append(verify_holonomy_lemma(cfg.pair, cfg.zeta, cfg.metric, loop, disk))
    return out


def cmd_holonomy(cfg: dict) -> dict:
    p = cfg["parameters"]
    example = cfg["example"] or "abelian-2d"
    if example not in ("abelian-2d", "heisenberg"):
        raise ConfigError("holonomy runs on the abelian-2d or heisenberg examples")
    res = _resolutions(p, [16, 32, 64])
    rects = _parse_rects(p.setdefault("rects", ["1/4x1/4", "1/2x1/2", "1/2x1"]))
    extra = {k: v for k, v in p.items() if k not in ("resolutions", "rects")}
    runs = map_ordered(lambda n: holonomy_residuals(example, n, rects, extra), res, cfg["threads"])
    hs = [1.0 / n for n in res]
    rows, results = [], []
    for i, (fa, fb) in enumerate(rects):
        r = table_rows(f"area {fa * fb}", hs, [run[i] for run in runs])
        rows += r
        results.append(check_law(r, "converges").__dict__)
    return {"tables": {"convergence": _rows_table(rows)}, "results": results, "pass": all(r["passed"] for r in results)}


def cmd_classify(cfg: dict) -> dict:
    periods = cfg["parameters"].get("periods")
    if periods is None:
        raise ConfigError("classify needs --periods")
    items = periods if isinstance(periods, list) else [x for x in str(periods).split(",") if x.strip()]
    try:
        rep = classify_period_group(items)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))
    out = rep.to_dict()
    body = {"tables": {}, "results": [], "pass": True, "period_report": out, "classification": out["classification"]}
    if "minimal" in out:
        body["minimal"] = out["minimal"]
    return body


HANDLERS = {
    "verify": cmd_verify,
    "flow": cmd_flow,
    "convergence": cmd_convergence,
    "holonomy": cmd_holonomy,
    "classify": cmd_classify,
}


# ----------------------------------------------------------------- output


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_outputs(cfg: dict, body: dict) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    echo = {k: v for k, v in cfg.items() if k not in ("threads", "output")}
    report = {"command": cfg["command"], "config": echo, "build_hash": build_hash(), **body}
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    if cfg["format"] in ("csv", "both"):
        for name, rows in body.get("tables", {}).items():
            if rows:
                (out / f"{name}.csv").write_text(_csv_text(rows))
    if cfg["command"] == "flow":
        (out / "flow_report.json").write_text(json.dumps(body["flow_report"], sort_keys=True, indent=2) + "\n")
    return out


def run(cfg: dict) -> int:
    body = HANDLERS[cfg["command"]](cfg)
    write_outputs(cfg, body)
    return 0 if body["pass"] else 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
        code = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    summary = json.loads((Path(cfg["output"]) / "report.json").read_text())
    print(json.dumps({k: summary[k] for k in ("command", "pass") + tuple(k for k in ("classification", "minimal") if k in summary)}, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
