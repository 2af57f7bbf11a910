import numpy as np
from pydantic import ValidationError
from pytest import approx, fixture, mark, raises

from sov6v.errors import InvalidHeight
from sov6v.formfactors import (
    LocalOperator,
    _relative,
    bc_matrix_element_det,
    completeness_residuals,
    ff_crosscheck_suite,
    ff_spin_det,
    height_index,
    height_matrix,
    height_reconstruction_residual,
    inverse_problem_check,
    local_operator_matrix,
    spin_matrix,
    trace_inverse_residual,
)
from sov6v.spectrum import eigenstate_from_values

SPINS = ["+", "-"]


@fixture(scope="module")
def crosscheck(params2, spectrum2):
    return ff_crosscheck_suite(params2, spectrum2, tol=1e-7)


@mark.parametrize("n", [1, 2])
@mark.parametrize("i", SPINS)
@mark.parametrize("j", SPINS)
def test_inverse_problem(params2, space2, n, i, j):
    assert inverse_problem_check(n, i, j, params2, space2) < 1e-8


def test_inverse_problem_other_twist(params2, space2):
    assert inverse_problem_check(2, "+", "-", params2, space2, kappa=0.7 + 0.2j) < 1e-8


def test_height_reconstruction(params2, space2):
    for k in range(params2.N + 1):
        s = params2.t00 + k * params2.eta
        for n in (1, 2):
            assert height_reconstruction_residual(n, s, params2, space2) < 1e-8


def test_trace_of_inverse_monodromy(params2, space2):
    for n in (1, 2):
        assert trace_inverse_residual(n, params2, space2) < 1e-8


def test_local_operators_partition_unity(params2, space2):
    sl = space2.sector(0)
    for n in (1, 2):
        spins = spin_matrix(n, "+", "+", space2) + spin_matrix(n, "-", "-", space2)
        heights = sum(height_matrix(n, params2.t00 + k * params2.eta, space2) for k in range(params2.N + 1))
        assert np.allclose(spins[sl, sl], np.eye(space2.n_spin))
        assert np.allclose(heights[sl, sl], np.eye(space2.n_spin))


@mark.parametrize("kind shift".split(), [("++", 0), ("--", 0), ("+-", 1), ("-+", -1)])
def test_local_operator_shifts(params2, space2, kind, shift):
    op = local_operator_matrix(LocalOperator(kind=kind, site=1), params2, space2)
    assert op.r_shift == shift
    cols = space2.sector(0)
    rows = np.flatnonzero(np.abs(op.matrix[:, cols]).max(axis=1) > 0)
    assert set(space2.r_of[rows]) == {shift}


def test_local_operator_validation(params2):
    with raises(ValidationError):
        LocalOperator(kind="height", site=1)
    with raises(ValueError):
        LocalOperator(kind="++", site=3).validate_for(params2)
    with raises(InvalidHeight):
        LocalOperator(kind="height", site=1, height=params2.t00 + 0.5 * params2.eta).validate_for(params2)


def test_height_index(params2):
    assert height_index(params2.t00 + 2 * params2.eta, params2) == 2
    with raises(InvalidHeight):
        height_index(params2.t00 + 3 * params2.eta, params2)


def test_crosscheck_covers_every_form_factor(crosscheck, params2):
    N = params2.N
    assert len(crosscheck) == 4 * 4 * N * (2 + N + 1)
    assert {r.formula for r in crosscheck} == {"ME1", "ME2", "ff-LH"}


def test_determinants_match_explicit_vectors(crosscheck):
    failed = [(r.formula, r.left, r.right, r.site, r.kind, r.residual) for r in crosscheck if not r.passed]
    assert failed == []


def test_both_spin_formulas_agree(crosscheck):
    for r in crosscheck:
        if r.formula != "ff-LH":
            assert r.branch_residual < 1e-7


def test_height_terms_are_recorded(crosscheck, params2):
    heights = [r for r in crosscheck if r.formula == "ff-LH"]
    assert all(len(r.terms) == params2.N + 1 for r in heights)


def test_completeness(params2, space2, spectrum2):
    for t in spectrum2[:2]:
        for tp in spectrum2[:2]:
            for n in (1, 2):
                res = completeness_residuals(t, tp, n, params2, space2)
                assert res["spin"] < 1e-8
                assert res["height"] < 1e-8


def test_no_determinant_for_off_diagonal_spin(params2, spectrum2):
    with raises(ValueError):
        ff_spin_det(spectrum2[0], spectrum2[1], 1, "+-", params=params2)


@mark.parametrize("which", ["B", "C"])
def test_b_and_c_matrix_elements(params2, space2, system2, spectrum2, which):
    left = [eigenstate_from_values(t, "left", params2, system2) for t in spectrum2]
    right = [eigenstate_from_values(t, "right", params2, system2) for t in spectrum2]
    norms = [abs(left[a] @ right[a]) for a in range(len(spectrum2))]
    for lam in (params2.xi[0], params2.xi[1] - params2.eta):
        block = space2.operator(which, lam).block(0)
        for a, t in enumerate(spectrum2):
            for b, tp in enumerate(spectrum2):
                direct = left[a] @ block @ right[b]
                value = bc_matrix_element_det(t, tp, which, lam, params2)
                scale = max(abs(direct), np.sqrt(norms[a] * norms[b]))
                assert abs(value - direct) < 1e-8 * scale


def test_vanishing_form_factor_is_measured_against_the_pair_scale():
    res = _relative(np.complex128(3e-17), np.complex128(-2e-17), 1.0)
    assert type(res) is float
    assert res == approx(5e-17)
    assert _relative(2.0, 1.0, 1e-3) == approx(0.5)
