from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coneym.algebra import (
    PAULI,
    AlgebraElement,
    AlgebraMismatchError,
    bracket,
    by_name,
    exponential,
    pairing,
    so,
    so4_su2_basis,
    su2,
    u1,
)

ALGEBRAS = [u1, su2, lambda: so(3), lambda: so(4), lambda: so(5)]
coeff = st.floats(-2.0, 2.0, allow_nan=False)


def _element(alg, values):
    return AlgebraElement(alg, np.asarray(values[: alg.dim], dtype=float))


@pytest.mark.parametrize("make", ALGEBRAS)
@settings(max_examples=25, deadline=None)
@given(values=st.lists(coeff, min_size=30, max_size=30))
def test_jacobi_and_ad_invariance(make, values):
    alg = make()
    x, y, z = (_element(alg, values[i * 10:]) for i in range(3))
    jac = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
    assert np.max(np.abs(jac.coefficients)) <= 1e-10
    # <[x, y], z> = -<y, [x, z]>
    assert pairing(bracket(x, y), z) == pytest.approx(-pairing(y, bracket(x, z)), abs=1e-10)


@pytest.mark.parametrize("make", ALGEBRAS)
def test_pairing_positive_definite(make):
    assert np.all(np.linalg.eigvalsh(make().gram()) > 0)


def test_su2_structure_constants():
    e = [AlgebraElement(su2(), v) for v in np.eye(3)]
    # basis -i sigma_j: [e_1, e_2] = 2 e_3 cyclically
    assert np.allclose(bracket(e[0], e[1]).coefficients, [0, 0, 2])
    assert np.allclose(bracket(e[1], e[2]).coefficients, [2, 0, 0])
    assert pairing(e[0], e[0]) == pytest.approx(2.0)


def test_u1_is_abelian_and_su2_is_not():
    assert u1().abelian
    assert not su2().abelian
    x = AlgebraElement(u1(), [0.7])
    assert np.allclose(bracket(x, x * 3.0).coefficients, 0.0)


def test_so2_rejected():
    with pytest.raises(ValueError):
        so(2)


def test_mismatched_algebras_raise():
    with pytest.raises(AlgebraMismatchError):
        bracket(AlgebraElement(su2(), [1, 0, 0]), AlgebraElement(so(3), [1, 0, 0]))


def test_coefficients_reject_matrix_outside_algebra():
    with pytest.raises(ValueError):
        su2().coefficients(np.eye(2, dtype=complex))


def test_by_name_round_trip():
    for name in ("u1", "su2", "so3", "so4"):
        assert by_name(name).name == name


class TestExponential:
    def test_u1_phase(self):
        assert exponential(AlgebraElement(u1(), [0.3]))[0, 0] == pytest.approx(np.exp(0.3j))

    def test_su2_closed_form(self):
        # exp(-i theta n.sigma) = cos(theta) - i sin(theta) n.sigma for a unit vector n
        n = np.array([1.0, 2.0, 2.0]) / 3.0
        theta = 0.8
        g = exponential(AlgebraElement(su2(), theta * n))
        ns = np.einsum("a,aij->ij", n, PAULI)
        assert np.allclose(g, np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * ns, atol=1e-13)

    def test_su2_full_turn(self):
        assert np.allclose(exponential(AlgebraElement(su2(), [0, 0, np.pi])), -np.eye(2))
        assert np.allclose(exponential(AlgebraElement(su2(), [0, 0, 2 * np.pi])), np.eye(2))

    def test_so3_rodrigues(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=3)
        X = so(3).to_matrix(w)
        theta = np.sqrt(-0.5 * np.trace(X @ X))
        K = X / theta
        R = np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * K @ K
        assert np.allclose(exponential(AlgebraElement(so(3), w)), R, atol=1e-12)

    @pytest.mark.parametrize("make", ALGEBRAS)
    def test_group_valued(self, make):
        alg = make()
        rng = np.random.default_rng(alg.dim)
        g = exponential(AlgebraElement(alg, rng.normal(size=alg.dim)))
        assert np.allclose(g.conj().T @ g, np.eye(alg.matrix_dim), atol=1e-12)
        if alg.matrix_dim > 1:
            assert np.linalg.det(g) == pytest.approx(1.0)


def test_so4_splits_into_commuting_su2_ideals():
    alg = so(4)
    plus = [AlgebraElement.from_matrix(alg, X) for X in so4_su2_basis(1)]
    minus = [AlgebraElement.from_matrix(alg, X) for X in so4_su2_basis(-1)]
    for a in plus:
        for b in minus:
            assert np.allclose(bracket(a, b).coefficients, 0.0)
    span = np.array([p.coefficients for p in plus]).T
    for a in plus:
        for b in plus:
            c = bracket(a, b).coefficients
            sol, *_ = np.linalg.lstsq(span, c, rcond=None)
            assert np.allclose(span @ sol, c, atol=1e-12)
