"""Smooth random fields for property tests: truncated trigonometric polynomials."""
from __future__ import annotations

from math import comb

import numpy as np

from .algebra import AlgebraDescriptor
from .cone import ConeForm, ConnectionPair
from .forms import GValuedForm, RealTwoForm
from .geometry import Chart


def trig_field(chart: Chart, rng: np.random.Generator, modes: int = 3, max_freq: int = 2, scale: float = 0.1) -> np.ndarray:
    """Sum of ``modes`` random products of sines/cosines with integer frequencies.

    Frequencies are taken relative to the chart's physical period on every
    axis, so fields are smooth and periodic on tori.
    """
    coords = chart.coordinates()
    out = np.zeros(chart.sizes)
    for _ in range(modes):
        amp = rng.normal() * scale
        term = np.ones((1,) * chart.dim)
        for a, x in enumerate(coords):
            L = chart.sizes[a] * chart.spacings[a] if chart.periodic[a] else 2 * np.pi
            k = int(rng.integers(-max_freq, max_freq + 1))
            phase = rng.uniform(0, 2 * np.pi)
            term = term * np.cos(2 * np.pi * k * x / L + phase)
        out = out + amp * term
    return out


def random_form(chart: Chart, degree: int, algebra: AlgebraDescriptor | None, rng: np.random.Generator, **kw) -> GValuedForm:
    n_comp = comb(chart.dim, degree)
    if algebra is None:
        coeffs = np.stack([trig_field(chart, rng, **kw) for _ in range(n_comp)])
        return GValuedForm(chart, degree, coeffs)
    basis = np.stack(
        [np.stack([trig_field(chart, rng, **kw) for _ in range(algebra.dim)], axis=-1) for _ in range(n_comp)]
    )
    return GValuedForm(chart, degree, algebra.to_matrix(basis), algebra)


def random_pair(chart: Chart, algebra: AlgebraDescriptor, rng: np.random.Generator, **kw) -> ConnectionPair:
    return ConnectionPair(random_form(chart, 1, algebra, rng, **kw), random_form(chart, 0, algebra, rng, **kw))


def random_cone_form(chart: Chart, degree: int, algebra: AlgebraDescriptor | None, rng: np.random.Generator, **kw) -> ConeForm:
    m = chart.dim
    eta = random_form(chart, degree, algebra, rng, **kw) if degree <= m else None
    xi = random_form(chart, degree - 1, algebra, rng, **kw) if degree >= 1 else None
    return ConeForm(degree, eta, xi)


def random_closed_two_form(chart: Chart, rng: np.random.Generator, **kw) -> RealTwoForm:
    """A constant two-form plus d of a random 1-form, closed in the continuum.

    The exact part is built from analytic derivatives of the trig modes, so the
    result is smooth; its discrete closedness is O(h^2).
    """
    m = chart.dim
    coords = chart.coordinates()
    comps = {}
    for I in [(a, b) for a in range(m) for b in range(a + 1, m)]:
        comps[I] = np.full(chart.sizes, rng.normal() * kw.get("scale", 0.1))
    # exact part: d(u dx^a) = sum_c du/dx^c dx^c ^ dx^a with u a single mode
    for a in range(m):
        amp = rng.normal() * kw.get("scale", 0.1)
        ks, phases = [], []
        for c in range(m):
            L = chart.sizes[c] * chart.spacings[c] if chart.periodic[c] else 2 * np.pi
            ks.append(2 * np.pi * int(rng.integers(-2, 3)) / L)
            phases.append(rng.uniform(0, 2 * np.pi))
        for c in range(m):
            if c == a:
                continue
            deriv = amp * np.ones((1,) * m)
            for e in range(m):
                arg = ks[e] * coords[e] + phases[e]
                deriv = deriv * (-ks[e] * np.sin(arg) if e == c else np.cos(arg))
            key = (min(a, c), max(a, c))
            sign = 1.0 if c < a else -1.0
            comps[key] = comps[key] + sign * np.broadcast_to(deriv, chart.sizes)
    return RealTwoForm.from_components(chart, comps)
