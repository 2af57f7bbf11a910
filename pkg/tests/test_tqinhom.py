import numpy as np
from pytest import approx, fixture, raises

from sov6v.errors import PoleOnLattice
from sov6v.numerics import collinearity, null_vector
from sov6v.spectrum import eigenstate_from_values, match_spectra
from sov6v.tqinhom import (
    InhomGauge,
    alpha_derivative_at_zero,
    alpha_start,
    c_matrix,
    c_matrix_det,
    eigenstate_via_inhom,
    gauge_f,
    gauge_invariance_residual,
    q_inhom_solve,
    shift_branch,
    solve_alpha_branch,
    t_from_q_inhom,
)

BETA = 0.3


@fixture(scope="module")
def gauge(params2):
    return InhomGauge.default(params2, beta=BETA)


@fixture(scope="module")
def solved(params2, gauge, spectrum2):
    return [(t, *q_inhom_solve(t, BETA, gauge, params2)) for t in spectrum2]


def test_default_gauge_is_admissible(params2, gauge):
    assert not gauge.excluded(params2)
    assert gauge.M == params2.N
    assert gauge_invariance_residual(gauge, params2) < 1e-12
    assert gauge_invariance_residual(gauge, params2, lam=[0.3 + 0.1j, -0.2]) < 1e-12


def test_excluded_gauge(params2):
    bad = InhomGauge(beta=BETA, mu=params2.xi[0] + params2.t00, M=params2.N)
    assert bad.excluded(params2)
    with raises(PoleOnLattice):
        gauge_f(bad, params2.xi[0], params2)


def test_determinant_two_ways(params2, gauge, spectrum2):
    alpha = alpha_start(params2) + 0.21 - 0.13j
    for t in spectrum2:
        for beta in (0.0, 0.1 + 0.05j, BETA):
            res = c_matrix_det(t, beta, alpha, gauge, params2)
            assert res["relative"] < 1e-9


def test_branch_starts_at_a_simple_zero(params2, gauge, spectrum2):
    for t in spectrum2:
        _, s = null_vector(c_matrix(t, 0.0, alpha_start(params2), gauge, params2).entries)
        assert s[-1] / s[0] < 1e-10
        assert abs(alpha_derivative_at_zero(t, gauge, params2)) > 0


def test_branch_stays_on_det_zero(params2, gauge, spectrum2):
    t = spectrum2[0]
    path = np.linspace(0, BETA, 7)[1:]
    alphas = solve_alpha_branch(t, path, gauge, params2)
    assert len(alphas) == len(path)
    for beta, alpha in zip(path, alphas):
        res = c_matrix_det(t, beta, alpha, gauge, params2)
        assert abs(res["direct"]) < 1e-9 * res["scale"]


def test_shift_branch(params2):
    assert shift_branch(0.2, params2) == (0.2, 0)
    beta, n = shift_branch(5.0, params2, radius=0.5)
    assert n > 0
    assert abs(beta) <= 0.5
    assert beta == approx(5.0 * np.exp(2j * n * params2.eta))


def test_q_solves_the_inhomogeneous_equation(solved):
    for _, Q, report in solved:
        assert len(Q.roots) == 2
        assert report.sigma_ratio < 1e-8
        assert report.residual < 1e-8
        assert report.node_residual < 1e-9
        assert report.branch_shift == 0


def test_c_matrix_annihilates_q_values(params2, gauge, solved):
    for t, Q, report in solved:
        mat = c_matrix(t, BETA, report.alpha_q, gauge, params2).entries
        values = Q(params2.xi_array)
        assert np.linalg.norm(mat @ values) < 1e-8 * np.linalg.norm(mat) * np.linalg.norm(values)


def test_eigenvalue_recovered_from_q(params2, gauge, solved):
    for t, Q, _ in solved:
        back = t_from_q_inhom(Q, gauge, params2)
        assert match_spectra([t], [back]) < 1e-8


def test_bethe_form_eigenstates(params2, system2, gauge, solved):
    for t, Q, _ in solved:
        ref = eigenstate_from_values(t, "right", params2, system2)
        vec = eigenstate_via_inhom(Q.root_array, gauge, None, params2, system=system2)
        assert collinearity(vec, ref) < 1e-7


def test_eigenstate_needs_m_roots(params2, system2, gauge):
    with raises(ValueError):
        eigenstate_via_inhom([0.1], gauge, None, params2, system=system2)
