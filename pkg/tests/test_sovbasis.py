import numpy as np
from pytest import approx, mark

from sov6v.sovbasis import (
    SovSystem,
    build_sov,
    diagonal_action_residual,
    identity_resolution_check,
    measured_b_sign,
    quasi_periodicity_residuals,
    reference_annihilation,
    sov_action_check,
    sov_gram,
)
from tests.conftest import ALLOWED

LAM = 0.37 - 0.06j


@mark.parametrize("r", [-1, 0, 1])
def test_gram_is_diagonal_with_closed_form(params2, system2, r):
    res = sov_gram(r, params2, system2)
    assert max(res.values()) < 1e-9


@mark.parametrize("N x y".split(), ALLOWED)
def test_identity_resolution(params_factory, N, x, y):
    p = params_factory(N, x, y)
    system = SovSystem(p)
    assert identity_resolution_check(0, p, system) < 1e-9


def test_reference_normalisation(system2):
    left, right = system2.left(0).vectors, system2.right(0).vectors
    assert left[0] @ right[0] == approx(1 / system2.theta_det(0, 0), rel=1e-10)
    assert left[0][0] == 1.0


@mark.parametrize("side", ["left", "right"])
@mark.parametrize("op", ["B", "C", "D", "A_static", "D_static"])
def test_operator_actions(system2, side, op):
    basis = build_sov(side, 0, system2.params, system2)
    assert sov_action_check(op, LAM, basis, system2) < 1e-9


@mark.parametrize("op", ["B", "C", "D"])
def test_operator_actions_odd_chain(system3, op):
    for side in ("left", "right"):
        assert sov_action_check(op, LAM, system3.basis(side, 0), system3) < 1e-9


def test_reference_states_and_diagonal_actions(system2):
    assert reference_annihilation(0, LAM, system2) < 1e-10
    for side in ("left", "right"):
        assert diagonal_action_residual(system2.basis(side, 0), system2) < 1e-9


def test_quasi_periodicity(params2, system2):
    assert max(quasi_periodicity_residuals(LAM, params2, system2).values()) < 1e-9


def test_b_action_sign_matches_model_sign(params_factory):
    for x, y in ((0, 1), (1, 0), (1, 1)):
        p = params_factory(2, x, y)
        system = SovSystem(p)
        # h = 0b11 has both sites down
        for n in (1, 2):
            assert measured_b_sign(0, 3, n, system) == approx(p.sign, abs=1e-8)


def test_theta_determinant_identity(system3):
    for h in range(8):
        assert system3.theta_det_identity_residual(0, h) < 1e-10


def test_bases_have_full_rank(system3):
    for side in ("left", "right"):
        vecs = system3.basis(side, 0).vectors
        assert np.linalg.matrix_rank(vecs) == 8
