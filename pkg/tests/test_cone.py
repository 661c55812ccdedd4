from __future__ import annotations

import numpy as np
import pytest

from coneym.algebra import su2, u1
from coneym.cone import (
    ConeForm,
    ConnectionPair,
    cone_bracket,
    cone_codifferential,
    cone_curvature,
    cone_differential,
    cone_inner,
    cone_inner_theta,
    cone_star,
    gauge_condition,
    linearized_el,
)
from coneym.convergence import check_law, table_rows
from coneym.examples import abelian_2d_family
from coneym.forms import (
    DegreeError,
    GValuedForm,
    RealTwoForm,
    codifferential,
    exterior_derivative,
    graded_bracket,
    norm,
)
from coneym.functional import el_residual
from coneym.geometry import Chart, MetricField, hodge_star
from coneym.random_fields import random_closed_two_form, random_cone_form, random_form, random_pair


def _setup(n=6, m=3, seed=0, conformal=False):
    ch = Chart.torus(n, 2 * np.pi, m)
    if conformal:
        x = ch.coordinates()[0]
        g = MetricField.conformal(ch, np.broadcast_to(1.5 + 0.4 * np.cos(x), ch.sizes))
    else:
        g = MetricField.euclidean(ch)
    rng = np.random.default_rng(seed)
    pair = random_pair(ch, su2(), rng, scale=0.3)
    zeta = random_closed_two_form(ch, rng, scale=0.3)
    return ch, g, pair, zeta, rng


def _cnorm(c, g):
    return cone_inner(c, c, g) ** 0.5


class TestConeForm:
    def test_component_degrees_checked(self, rng):
        ch = Chart.torus(4, 1.0, 3)
        with pytest.raises(DegreeError):
            ConeForm(1, random_form(ch, 1, su2(), rng), random_form(ch, 1, su2(), rng))

    def test_needs_a_component(self):
        with pytest.raises(ValueError):
            ConeForm(1, None, None)

    def test_make_fills_zeros(self, rng):
        ch = Chart.torus(4, 1.0, 3)
        like = random_form(ch, 0, su2(), rng)
        c = ConeForm.make(4, None, None, like)
        assert c.eta is None and c.xi.degree == 3

    def test_arithmetic(self, rng):
        ch = Chart.torus(4, 1.0, 3)
        a, b = random_cone_form(ch, 2, su2(), rng), random_cone_form(ch, 2, su2(), rng)
        d = (a + b) - b * 1.0
        assert np.allclose(d.eta.coeffs, a.eta.coeffs) and np.allclose(d.xi.coeffs, a.xi.coeffs)


class TestStar:
    def test_table(self, rng):
        # *_C (eta + theta xi) = *xi + theta (-1)^k *eta
        ch, g, *_ = _setup()
        for k in range(1, 4):
            c = random_cone_form(ch, k, su2(), rng)
            s = cone_star(c, g)
            assert s.degree == 4 - k
            assert np.allclose(s.eta.coeffs, hodge_star(c.xi, g).coeffs)
            assert np.allclose(s.xi.coeffs, (-1) ** k * hodge_star(c.eta, g).coeffs)

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_double_star_sign(self, m, rng):
        ch = Chart.torus(4, 2 * np.pi, m)
        g = MetricField.euclidean(ch)
        for k in range(m + 2):
            c = random_cone_form(ch, k, su2(), rng)
            back = cone_star(cone_star(c, g), g)
            sign = (-1) ** (k * (m + 1 - k))
            for x, y in ((back.eta, c.eta), (back.xi, c.xi)):
                if y is not None:
                    assert np.allclose(x.coeffs, sign * y.coeffs)

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
    def test_inner_product_two_routes_agree(self, k):
        ch, g, _, _, rng = _setup(conformal=True)
        a, b = random_cone_form(ch, k, su2(), rng), random_cone_form(ch, k, su2(), rng)
        assert cone_inner(a, b, g) == pytest.approx(cone_inner_theta(a, b, g), rel=1e-12, abs=1e-14)


class TestProduct:
    def test_theta_sign_rule(self, rng):
        ch = Chart.torus(4, 1.0, 3)
        a, b = random_cone_form(ch, 1, su2(), rng), random_cone_form(ch, 1, su2(), rng)
        p = cone_bracket(a, b)
        # [(e1 + t x1), (e2 + t x2)]: theta part [x1, e2] - [e1, x2] for |e1| = 1
        xi = graded_bracket(a.xi, b.eta) - graded_bracket(a.eta, b.xi)
        assert np.allclose(p.xi.coeffs, xi.coeffs)
        assert np.allclose(p.eta.coeffs, graded_bracket(a.eta, b.eta).coeffs)

    def test_graded_symmetry(self, rng):
        ch = Chart.torus(4, 1.0, 3)
        for j, k in ((1, 1), (1, 2), (0, 2)):
            a, b = random_cone_form(ch, j, su2(), rng), random_cone_form(ch, k, su2(), rng)
            lhs, rhs = cone_bracket(a, b), cone_bracket(b, a)
            sign = -((-1) ** (j * k))
            assert np.allclose(lhs.xi.coeffs, sign * rhs.xi.coeffs)


class TestDifferential:
    def test_trivial_pair_squares_to_zero(self, rng):
        ch, g, *_ = _setup()
        pair = ConnectionPair.zero(ch, su2())
        zeta = RealTwoForm.from_components(ch, {(0, 1): 0.7, (1, 2): -0.2})
        c = random_cone_form(ch, 1, su2(), rng)
        dd = cone_differential(pair, zeta, cone_differential(pair, zeta, c))
        assert _cnorm(dd, g) <= 1e-12

    def test_square_is_bracket_with_curvature(self):
        vals = []
        for n in (24, 48):
            ch, g, pair, zeta, rng = _setup(n, seed=4)
            c = random_cone_form(ch, 1, su2(), rng)
            dd = cone_differential(pair, zeta, cone_differential(pair, zeta, c))
            vals.append(_cnorm(dd - cone_bracket(cone_curvature(pair, zeta), c), g))
        rows = table_rows("D_C^2 - [F_C, c]", [2 * np.pi / 24, 2 * np.pi / 48], vals)
        assert check_law(rows, "converges").passed, rows

    def test_square_vanishes_on_cone_flat_pair(self):
        vals = []
        for n in (16, 32, 64):
            cfg = abelian_2d_family(resolution=n)
            c = random_cone_form(cfg.chart, 1, u1(), np.random.default_rng(0))
            dd = cone_differential(cfg.pair, cfg.zeta, cone_differential(cfg.pair, cfg.zeta, c))
            vals.append(_cnorm(dd, cfg.metric))
        rows = table_rows("D_C^2", [1 / 16, 1 / 32, 1 / 64], vals)
        assert check_law(rows, "converges").passed, rows

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_codifferential_is_exact_adjoint(self, k):
        ch, g, pair, zeta, rng = _setup(conformal=True)
        c1 = random_cone_form(ch, k - 1, su2(), rng)
        c2 = random_cone_form(ch, k, su2(), rng)
        lhs = cone_inner(cone_differential(pair, zeta, c1), c2, g)
        rhs = cone_inner(c1, cone_codifferential(pair, zeta, c2, g), g)
        assert lhs == pytest.approx(rhs, abs=1e-12 * _cnorm(c1, g) * _cnorm(c2, g))

    def test_curvature_components(self):
        ch, g, pair, zeta, _ = _setup()
        F = cone_curvature(pair, zeta)
        assert F.degree == 2
        assert np.allclose(F.xi.coeffs, -pair.cov(pair.B).coeffs)

    def test_gauge_condition_is_codifferential(self, rng):
        ch, g, pair, zeta, _ = _setup()
        c = random_cone_form(ch, 1, su2(), rng)
        a, b = gauge_condition(pair, zeta, c, g), cone_codifferential(pair, zeta, c, g)
        assert np.allclose(a.eta.coeffs, b.eta.coeffs)


class TestLinearization:
    def test_matches_difference_of_residuals(self):
        ch, g, pair, zeta, rng = _setup(8, seed=2)
        eta, xi = random_form(ch, 1, su2(), rng), random_form(ch, 0, su2(), rng)
        L = linearized_el(pair, zeta, g, ConeForm(1, eta, xi))
        errs = []
        for t in (1e-2, 5e-3):
            rp = el_residual(pair.shifted(eta, xi, t), zeta, g)
            rm = el_residual(pair.shifted(eta, xi, -t), zeta, g)
            dA = (rp.rA - rm.rA) * (0.5 / t) - L.eta
            dB = (rp.rB - rm.rB) * (0.5 / t) - L.xi
            errs.append(norm(dA, g) + norm(dB, g))
        # central differences: the error falls as t^2
        assert np.log2(errs[0] / errs[1]) >= 1.9
        assert errs[1] <= 1e-4 * (norm(L.eta, g) + norm(L.xi, g))

    def test_rejects_non_one_form(self, rng):
        ch, g, pair, zeta, _ = _setup()
        with pytest.raises(DegreeError):
            linearized_el(pair, zeta, g, random_cone_form(ch, 2, su2(), rng))

    def test_trivial_background_is_laplace_type(self):
        # at A = B = zeta = 0, D_C^* D_C (eta, 0) = (d^* d eta, 0) for a 1-form eta
        ch = Chart.torus(8, 2 * np.pi, 3)
        g = MetricField.euclidean(ch)
        pair = ConnectionPair.zero(ch, su2())
        zeta = RealTwoForm.from_components(ch, {})
        eta = random_form(ch, 1, su2(), np.random.default_rng(1))
        L = linearized_el(pair, zeta, g, ConeForm(1, eta, GValuedForm.zeros(ch, 0, su2())))
        expected = codifferential(None, exterior_derivative(eta), g)
        assert np.allclose(L.eta.coeffs, expected.coeffs, atol=1e-13)
        assert np.max(np.abs(L.xi.coeffs)) <= 1e-13
