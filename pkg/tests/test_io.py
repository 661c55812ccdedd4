from __future__ import annotations

import numpy as np
import pytest

from coneym.algebra import so, su2, u1
from coneym.geometry import Chart
from coneym.io import (
    cone_from_bytes,
    cone_to_bytes,
    form_from_bytes,
    form_from_json,
    form_to_bytes,
    form_to_json,
    load_form,
    save_form,
)
from coneym.random_fields import random_cone_form, random_form


def _same(a, b):
    assert a.chart == b.chart and a.degree == b.degree and a.margin == b.margin
    assert (a.algebra is None) == (b.algebra is None)
    if a.algebra is not None:
        assert a.algebra.name == b.algebra.name
    assert np.array_equal(a.coeffs, b.coeffs)


CHARTS = [
    Chart.torus(4, 2 * np.pi, 3),
    Chart.box((0.0, -1.0), (1.0, 1.0), 5, periodic=(False, True)),
]


@pytest.mark.parametrize("chart", CHARTS)
@pytest.mark.parametrize("alg", [None, u1, su2, lambda: so(4)])
def test_binary_round_trip(chart, alg, rng):
    for k in range(chart.dim + 1):
        f = random_form(chart, k, None if alg is None else alg(), rng)
        _same(f, form_from_bytes(form_to_bytes(f)))


@pytest.mark.parametrize("alg", [None, su2])
def test_json_round_trip(alg, rng):
    f = random_form(CHARTS[0], 2, None if alg is None else alg(), rng)
    _same(f, form_from_json(form_to_json(f)))


def test_point_major_layout(rng):
    f = random_form(CHARTS[0], 1, su2(), rng)
    blob = form_to_bytes(f)
    n = int.from_bytes(blob[8:12], "little")
    data = np.frombuffer(blob[12 + n:], dtype="<f8").reshape(CHARTS[0].sizes + (3, 3))
    assert np.allclose(data[1, 2, 3, 0], f.basis_coefficients()[0, 1, 2, 3])


def test_cone_round_trip(rng):
    for k in (0, 1, 3, 4):
        c = random_cone_form(CHARTS[0], k, su2(), rng)
        back = cone_from_bytes(cone_to_bytes(c))
        assert back.degree == k
        for x, y in ((c.eta, back.eta), (c.xi, back.xi)):
            assert (x is None) == (y is None)
            if x is not None:
                _same(x, y)


@pytest.mark.parametrize("suffix", [".bin", ".json"])
def test_save_and_load(tmp_path, suffix, rng):
    f = random_form(CHARTS[1], 1, su2(), rng)
    path = tmp_path / f"form{suffix}"
    save_form(f, path)
    _same(f, load_form(path))


def test_json_size_limit(rng):
    f = random_form(Chart.torus(20, 1.0, 3), 0, None, rng)
    with pytest.raises(ValueError):
        form_to_json(f)


def test_corrupt_input_rejected(rng):
    blob = form_to_bytes(random_form(CHARTS[0], 1, None, rng))
    with pytest.raises(ValueError):
        form_from_bytes(b"XXXXXXXX" + blob[8:])
    with pytest.raises(ValueError):
        form_from_bytes(blob[:-8])
    with pytest.raises(ValueError):
        cone_from_bytes(blob)
