import numpy as np
from pytest import fixture, mark, raises

from sov6v.elliptic import ThetaVariant, lattice_distance, theta_variant, theta_variant_prime, variant_periods
from sov6v.errors import RootCountMismatch, UnknownVariant
from sov6v.numerics import collinearity
from sov6v.spectrum import brute_spectrum, eigenstate_from_values, match_spectra
from sov6v.sovbasis import SovSystem
from sov6v.tq import (
    admissible,
    bethe_residuals,
    dbeta_product_residual,
    dependent_partner,
    eigenstate_via_dbeta,
    hom_residual,
    locate_roots,
    odd_form_statistics,
    partner,
    q_forms,
    q_solve_homogeneous,
    q_values_at_nodes,
    quantum_wronskian,
    shifted_family,
    sum_rule_check,
    t_from_q,
    wronskian_checks,
)

PROVEN = [(0, 1), (1, 0), (1, 1)]


@fixture(scope="module", params=PROVEN, ids=lambda xy: f"xy{xy[0]}{xy[1]}")
def solved(request, params_factory):
    x, y = request.param
    p = params_factory(2, x, y)
    system = SovSystem(p)
    spectrum = [t for t, _ in brute_spectrum(p, system.space)]
    return p, system, [(t, *q_solve_homogeneous(t, p)) for t in spectrum]


def test_every_eigenvalue_has_a_q(solved):
    p, _, rows = solved
    assert len(rows) == 4
    for t, Q, report in rows:
        assert len(Q.roots) == p.N
        assert report.singular_values[-1] / report.singular_values[0] < 1e-8
        assert report.hom_residual < 1e-8
        assert hom_residual(Q, t, seed=99) < 1e-8
        assert np.max(bethe_residuals(Q)) < 1e-8
        assert sum_rule_check(Q)[0] < 1e-8
        assert admissible(Q)


def test_q_is_nonzero_at_the_nodes(solved):
    _, _, rows = solved
    for _, Q, _ in rows:
        table = np.abs(q_values_at_nodes(Q))
        assert np.all(table.max(axis=1) > 0)


def test_eigenvalue_recovered_from_q(solved):
    _, _, rows = solved
    for t, Q, _ in rows:
        back, report = t_from_q(Q)
        assert match_spectra([t], [back]) < 1e-8
        assert max(report.periodicity.values()) < 1e-8


def test_wronskian_relations(solved):
    _, _, rows = solved
    for _, Q, _ in rows:
        report = wronskian_checks(Q)
        assert report.w1_relation < 1e-8
        assert report.w2_relation < 1e-8


def test_partner_has_nonzero_quantum_wronskian(solved):
    _, _, rows = solved
    for t, Q, _ in rows:
        second = partner(Q)
        assert hom_residual(second, t) < 1e-8
        qw = quantum_wronskian(Q, second)
        assert qw.classification == "proportional-to-d"
        assert qw.relation_residual < 1e-8
        assert quantum_wronskian(Q, dependent_partner(Q)).classification == "identically-zero"


def test_shifted_family_solves_the_same_equation(solved):
    _, _, rows = solved
    t, Q, _ = rows[0]
    for name, member in shifted_family(Q).items():
        assert hom_residual(member, t) < 1e-8, name


def test_bethe_form_eigenstates(solved):
    p, system, rows = solved
    variant = q_forms(p)[0].variant
    beta = np.zeros(p.N, dtype=int)
    for t, Q, _ in rows:
        ref = eigenstate_from_values(t, "right", p, system)
        vec = eigenstate_via_dbeta(Q.root_array, beta, None, p, system=system, variant=variant, alpha=Q.alpha)
        assert collinearity(vec, ref) < 1e-7


def test_dbeta_eigenstate_carries_the_exponential(params_factory):
    p = params_factory(2, 1, 0)
    system = SovSystem(p)
    form = q_forms(p)[0]
    assert form.alphas == (0, -1j)
    beta = np.zeros(p.N, dtype=int)
    for t, _ in brute_spectrum(p, system.space):
        Q, _ = q_solve_homogeneous(t, p)
        ref = eigenstate_from_values(t, "right", p, system)
        vec = eigenstate_via_dbeta(Q.root_array, beta, None, p, system=system, alpha=Q.alpha)
        assert collinearity(vec, ref) < 1e-7
        if Q.alpha != 0:
            bare = eigenstate_via_dbeta(Q.root_array, beta, None, p, system=system)
            assert collinearity(bare, ref) > 1e-4


@mark.parametrize("xy", PROVEN)
def test_dbeta_product(params_factory, xy):
    p = params_factory(2, *xy)
    for beta in ([0, 0], [1, 0], [1, 1]):
        assert dbeta_product_residual(0.27 + 0.06j, beta, p) < 1e-10


def test_forms_by_model(params_factory):
    assert [f.name for f in q_forms(params_factory(2, 0, 1))] == ["01"]
    odd = q_forms(params_factory(3, 0, 0))
    assert len(odd) == 3
    assert all(f.experimental for f in odd)


def test_odd_chain_form_statistics(params_factory):
    p = params_factory(3, 0, 0)
    spectrum = [t for t, _ in brute_spectrum(p)]
    stats = odd_form_statistics(spectrum, p)
    assert len(stats) == 3
    for counts in stats.values():
        assert counts["solved"] + counts["failed"] == 8


def test_unknown_form(params_factory, spectrum2):
    with raises(UnknownVariant):
        q_solve_homogeneous(spectrum2[0], params_factory(2, 0, 1), form="11")


@mark.slow
def test_four_site_chain(params_factory):
    p = params_factory(4, 0, 1)
    system = SovSystem(p)
    beta = np.zeros(4, dtype=int)
    for t, _ in brute_spectrum(p, system.space):
        Q, report = q_solve_homogeneous(t, p)
        assert report.hom_residual < 1e-8
        assert np.max(bethe_residuals(Q)) < 1e-8
        ref = eigenstate_from_values(t, "right", p, system)
        assert collinearity(eigenstate_via_dbeta(Q.root_array, beta, None, p, system=system, alpha=Q.alpha), ref) < 1e-7


@mark.parametrize("variant", list(ThetaVariant))
def test_locate_roots_of_a_theta_product(params_factory, variant):
    p = params_factory(4, 0, 1)
    periods = variant_periods(variant, p.theta)
    # two roots close together, as in an N = 4 chain
    fractions = [(0.21, 0.33), (0.23, 0.35), (0.62, 0.71), (0.85, 0.12)]
    want = np.array([a * periods[0] + b * periods[1] for a, b in fractions])

    def func(z):
        return np.prod(theta_variant(variant, np.asarray(z)[..., None] - want, p.theta), axis=-1)

    def deriv(z):
        th = theta_variant(variant, z - want, p.theta)
        return complex(func(z) * np.sum(theta_variant_prime(variant, z - want, p.theta) / th))

    got = locate_roots(func, deriv, periods, 4, theta=p.theta, variant=variant)
    assert len(got) == 4
    for w in want:
        assert min(lattice_distance(g - w, periods) for g in got) < 1e-9


def test_locate_roots_reports_missing_roots(params_factory):
    p = params_factory(2, 0, 1)
    periods = variant_periods(ThetaVariant.STD, p.theta)
    root = 0.4 + 0.1 * periods[1]

    def func(z):
        return theta_variant(ThetaVariant.STD, np.asarray(z) - root, p.theta)

    def deriv(z):
        return complex(theta_variant_prime(ThetaVariant.STD, z - root, p.theta))

    with raises(RootCountMismatch):
        locate_roots(func, deriv, periods, 2, theta=p.theta, max_grid=64)
