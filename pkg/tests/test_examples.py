from __future__ import annotations

import numpy as np
import pytest

from coneym import dual
from coneym.algebra import so
from coneym.convergence import check_law, table_rows
from coneym.examples import (
    DEFAULT_F,
    REGISTRY,
    VERIFIERS,
    ExpectedRecord,
    NamedConfiguration,
    TrigPoly2D,
    abelian_2d_family,
    b_zero_check,
    build,
    heisenberg_cone_flat,
    t4_candidate_B,
    t4_counterexample,
    t4_curvature_components,
    t4_metric_factor,
    t4_potential_term,
    taub_nut,
    taub_nut_closed_forms,
    taub_nut_phi,
    taub_nut_phi_derivatives,
)
from coneym.forms import GValuedForm, exterior_derivative, norm, sup_norm
from coneym.functional import cone_flat_residual, el_residual

POINTS = [(1.0, 1.0, 1.0), (1.3, 1.9, 1.1), (2.0, 1.5, 1.7), (1.2, 1.2, 2.0)]


class TestTaubNutClosedForm:
    def test_exp_two_phi_at_radius_two(self):
        e2, _, _ = taub_nut_phi_derivatives((np.array(2.0), np.array(0.0), np.array(0.0)))
        assert e2 == 2.0
        assert np.exp(2 * taub_nut_phi(2.0, 0.0, 0.0)) == pytest.approx(2.0, rel=1e-15)

    @pytest.mark.parametrize("p", POINTS)
    def test_first_and_second_derivatives_match_duals(self, p):
        _, d, dd = taub_nut_phi_derivatives([np.array(v) for v in p])
        for i in range(3):
            assert d[i] == pytest.approx(dual.derivative(taub_nut_phi, list(p), i), rel=1e-13)
            for j in range(3):
                assert dd[i][j] == pytest.approx(dual.second_derivative(taub_nut_phi, list(p), i, j), rel=1e-12, abs=1e-14)

    def test_derivative_formula(self):
        x = np.array([1.2, 1.7, 1.4])
        r = np.linalg.norm(x)
        _, d, _ = taub_nut_phi_derivatives(list(x))
        assert np.allclose(d, -x / (r * r * (r + 2)))

    def test_phi_harmonicity_condition(self):
        cfg = taub_nut(1, 8)
        _, d, dd = taub_nut_phi_derivatives(cfg.chart.coordinates())
        res = sum(dd[i][i] + 2 * d[i] * d[i] for i in range(3))
        assert np.max(np.abs(res)) <= 1e-12

    @pytest.mark.parametrize("p", POINTS)
    def test_zeta_closed_pointwise(self, p):
        # zeta = s *_0 d(exp 2 phi), so d zeta is s times the flat Laplacian of exp(2 phi)
        def e2(x, y, z):
            return dual.exp(2.0 * taub_nut_phi(x, y, z))

        lap = sum(dual.second_derivative(e2, list(p), i, i) for i in range(3))
        assert abs(lap) <= 1e-12

    def test_configuration_shape(self):
        cfg = taub_nut(-1, 8)
        assert cfg.pair.algebra.name == "so4"
        assert cfg.zeta.closedness <= 1e-2
        assert [r.verifier for r in cfg.expected][:2] == ["duality", "duality_wrong_sign"]

    def test_fields_take_values_in_so4(self):
        cfg = taub_nut(1, 8)
        so(4).coefficients(cfg.pair.A.coeffs)
        so(4).coefficients(cfg.pair.B.coeffs)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            taub_nut(0, 8)
        with pytest.raises(ValueError):
            taub_nut(1, 4)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_closed_form_curvature_and_dAB_match_discrete(self, sign):
        errs = []
        for n in (8, 16, 32):
            cfg = taub_nut(sign, n)
            F, D = taub_nut_closed_forms(cfg.chart.coordinates(), sign)
            Fd = GValuedForm(cfg.chart, 2, F, cfg.pair.algebra, cfg.pair.curvature.margin)
            Dd = GValuedForm(cfg.chart, 1, D, cfg.pair.algebra, 1)
            errs.append(norm(cfg.pair.curvature - Fd, cfg.metric) + norm(cfg.pair.cov(cfg.pair.B) - Dd, cfg.metric))
        rows = table_rows("closed form", [1 / 8, 1 / 16, 1 / 32], errs)
        assert check_law(rows, "converges").passed, rows


class TestT4:
    def test_metric_factor_at_origin(self):
        assert t4_metric_factor(0.0, 0.0) == 3.0

    def test_candidate_value(self):
        assert t4_candidate_B(0.0, np.pi / 2) == pytest.approx(1 / (4 * np.pi), rel=1e-15)

    @pytest.mark.parametrize("p", [(0.3, 0.4), (1.1, 2.5), (0.0, 0.0)])
    def test_curvature_is_derivative_of_potential(self, p):
        # potential dx^1 coefficient: (1/4pi) sin 2x2 sin x3 - x3 / 2pi
        def a1(x2, x3):
            return dual.sin(2.0 * x2) * dual.sin(x3) / (4 * np.pi) - x3 / (2 * np.pi)

        F = t4_curvature_components(*p)
        assert F[(0, 1)] == pytest.approx(-dual.derivative(a1, list(p), 0), abs=1e-15)
        assert F[(0, 2)] == pytest.approx(-dual.derivative(a1, list(p), 1), abs=1e-15)
        assert t4_potential_term(*p) == pytest.approx(dual.value(a1(*p)) + p[1] / (2 * np.pi))

    def test_metric_factor_positive(self):
        x2, x3 = np.meshgrid(np.linspace(0, 2 * np.pi, 50), np.linspace(0, 2 * np.pi, 50))
        assert np.min(t4_metric_factor(x2, x3)) > 0

    def test_full_torus_variant_builds(self):
        cfg = t4_counterexample(8, patch=False)
        assert all(cfg.chart.periodic)

    def test_b_zero_check(self):
        ym, zf = b_zero_check(t4_counterexample(8))
        assert zf > 0.1


class TestHeisenberg:
    @pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
    def test_cone_flat_exactly(self, c):
        cfg = heisenberg_cone_flat(c, 1, 8)
        assert max(cone_flat_residual(cfg.pair, cfg.zeta, cfg.metric)) <= 1e-12

    @pytest.mark.parametrize("c", [0.0, 1.0, 0.5])
    def test_yang_mills_value(self, c):
        cfg = heisenberg_cone_flat(c, 1, 8)
        value, _ = cfg.evaluate("yang_mills")
        assert value == pytest.approx(abs(1 + c) * 2 * np.pi, rel=1e-10)

    def test_degree_two_bundle(self):
        cfg = heisenberg_cone_flat(0.0, 2, 8)
        value, _ = cfg.evaluate("yang_mills")
        assert value == pytest.approx(4 * 4 * np.pi, rel=1e-10)

    def test_yang_mills_at_c_minus_one(self):
        value, _ = heisenberg_cone_flat(-1.0, 1, 8).evaluate("yang_mills")
        assert value <= 1e-12

    def test_zeta_is_d_theta(self):
        cfg = heisenberg_cone_flat(0.0, 1, 8)
        x, n = cfg.extras["theta"]
        theta = GValuedForm.from_components(cfg.chart, 1, {(1,): n * x + 0 * cfg.chart.coordinates()[1], (2,): 1.0})
        assert np.allclose(exterior_derivative(theta).coeffs[:, 2:-2], cfg.zeta.coeffs[:, 2:-2])

    def test_trivial_bundle_rejected(self):
        with pytest.raises(ValueError):
            heisenberg_cone_flat(0.0, 0, 8)


class TestAbelianFamily:
    def test_rejects_product_of_constants(self):
        with pytest.raises(ValueError):
            abelian_2d_family(c_prime=1.0, c=1.0)

    def test_potential_branch_reproduces_prescribed_curvature(self):
        a = abelian_2d_family(resolution=32)
        b = abelian_2d_family(resolution=32, with_potential=False)
        assert a.params["potential"] and not b.params["potential"]
        diff = norm(a.pair.curvature - b.pair.curvature, a.metric)
        assert diff <= 1e-2 * norm(b.pair.curvature, b.metric)

    def test_flat_branch_exact(self):
        cfg = abelian_2d_family(c_prime=1.0, c=0.0, resolution=8)
        r = el_residual(cfg.pair, cfg.zeta, cfg.metric)
        assert max(r.norm_rA, r.norm_rB) <= 1e-12
        assert max(cone_flat_residual(cfg.pair, cfg.zeta, cfg.metric)) <= 1e-12

    def test_c_branch_is_not_cone_flat(self):
        cfg = abelian_2d_family(c=1.0, c_dprime=0.5, resolution=16)
        assert cone_flat_residual(cfg.pair, cfg.zeta, cfg.metric)[0] > 0.1
        assert "cone_flat_eta" not in [r.verifier for r in cfg.expected]

    @pytest.mark.parametrize("p", [(0.1, 0.2), (0.7, 0.35)])
    def test_trig_poly_derivatives_match_duals(self, p):
        fx, fy = DEFAULT_F.grad(*p)
        assert fx == pytest.approx(dual.derivative(lambda x, y: DEFAULT_F.value(x, y, dual), list(p), 0))
        assert fy == pytest.approx(dual.derivative(lambda x, y: DEFAULT_F.value(x, y, dual), list(p), 1))
        lap = sum(dual.second_derivative(lambda x, y: DEFAULT_F.value(x, y, dual), list(p), i, i) for i in range(2))
        assert DEFAULT_F.laplacian(*p) == pytest.approx(lap)

    def test_trig_poly_parse(self):
        f = TrigPoly2D.parse("0.1*sin(1x)*cos(0y)+0.1*cos(0x)*cos(1y)+0.1*sin(1x)*sin(1y)")
        assert f == DEFAULT_F


class TestRegistry:
    def test_names(self):
        assert set(REGISTRY) == {"taub-nut", "t4-counterexample", "heisenberg", "abelian-2d"}

    @pytest.mark.parametrize("name", ["taub-nut", "t4-counterexample", "heisenberg", "abelian-2d"])
    def test_build_and_evaluate_every_record(self, name):
        cfg = build(name, 8)
        assert cfg.expected
        for rec in cfg.expected:
            value, scale = cfg.evaluate(rec.verifier)
            assert np.isfinite(value) and value >= 0 and scale >= 0

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            build("nope", 8)

    def test_sign_parsing(self):
        assert build("taub-nut", 8, {"sign": "-"}).params["sign"] == -1
        with pytest.raises(ValueError):
            build("taub-nut", 8, {"sign": "x"})

    def test_expected_record_validation(self):
        with pytest.raises(ValueError):
            ExpectedRecord("duality", "sometimes")
        with pytest.raises(ValueError):
            ExpectedRecord("yang_mills", "limit")

    def test_configuration_invariants(self):
        cfg = abelian_2d_family(resolution=8)
        with pytest.raises(ValueError):
            NamedConfiguration("x", cfg.chart, cfg.metric, cfg.zeta, cfg.pair, ())
        with pytest.raises(ValueError):
            NamedConfiguration("x", cfg.chart, cfg.metric, cfg.zeta, cfg.pair, (ExpectedRecord("nope", "converges"),))
        other = abelian_2d_family(resolution=16)
        with pytest.raises(ValueError):
            NamedConfiguration("x", cfg.chart, other.metric, cfg.zeta, cfg.pair, cfg.expected)

    def test_verifier_names(self):
        assert {"duality", "el_rA", "el_rB", "cone_flat_eta", "cone_flat_xi", "yang_mills", "dB"} <= set(VERIFIERS)

    def test_sup_norm_of_random_closed_zeta(self):
        assert sup_norm(abelian_2d_family(resolution=8).zeta) > 0
