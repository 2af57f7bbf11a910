import numpy as np
from pytest import approx, mark, raises

from sov6v.elliptic import theta1
from sov6v.errors import PoleAtHeight, WindowOverflow
from sov6v.repspace import (
    DynamicalSpace,
    DynSpinIndex,
    a_func,
    a_xy_func,
    build_antiperiodic_transfer,
    build_monodromy_entry,
    cancellation_residual,
    d_func,
    dybe_residual,
    exchange_residual,
    gauge_y1_check,
    grading_residual,
    inversion_at_inhomogeneity,
    monodromy_by_products,
    permutation4,
    quantum_det_check,
    quantum_det_residuals,
    r_matrix,
    rtt_residual,
    transfer_commutator,
    trig_limit_deviation,
    zero_weight_residual,
)
from tests.conftest import ALLOWED

RNG = np.random.default_rng(11)


def _lams(n):
    return RNG.uniform(-1.2, 1.2, n) + 1j * RNG.uniform(-0.3, 0.3, n)


@mark.parametrize("y", [0, 1])
def test_dynamical_yang_baxter(params2, y):
    for _ in range(10):
        l1, l2, l3 = _lams(3)
        t = complex(_lams(1)[0]) + 0.4
        assert dybe_residual(l1, l2, l3, t, params2, y=y) < 1e-11


def test_gauge_relates_both_families(params2):
    for _ in range(10):
        l1, l2 = _lams(2)
        assert gauge_y1_check(l1, l2, 0.53 + 0.12j, params2) < 1e-11


@mark.parametrize("y", [0, 1])
def test_trigonometric_limit(y):
    near = trig_limit_deviation(0.31 + 0.02j, 0.47 + 0.05j, 0.29 + 0.01j, y, omega=4j)
    nearer = trig_limit_deviation(0.31 + 0.02j, 0.47 + 0.05j, 0.29 + 0.01j, y, omega=6j)
    assert nearer < near < 1e-3


def test_zero_weight(params2):
    assert zero_weight_residual(0.3 + 0.1j, 0.7 - 0.05j, params2) < 1e-11


def test_r_matrix_pole(params2):
    with raises(PoleAtHeight):
        r_matrix(0.3, np.pi, params2)


def test_scalar_functions(params2):
    lam = 0.41 - 0.07j
    assert d_func(lam, params2) == approx(a_func(lam - params2.eta, params2))
    assert a_xy_func(lam, params2) == approx(params2.sign * a_func(lam, params2))
    for xi in params2.xi:
        assert abs(d_func(xi, params2)) < 1e-13
        assert abs(a_func(xi - params2.eta, params2)) < 1e-13


def test_window_labels(space2, params2):
    assert space2.dim == (2 * params2.R + 1) * 4
    assert space2.index(0, 3) == params2.R * 4 + 3
    with raises(WindowOverflow):
        space2.index(params2.R + 1, 0)
    label = DynSpinIndex.from_code(2, 2, r=1)
    assert label.h == (0, 1)
    assert label.code == 2
    assert label.s_value() == 0
    assert label.height(params2) == approx(params2.t00 + 2 * params2.eta)


def test_s_tau_is_constant_per_sector(space2, params2):
    for r in (-1, 0, 2):
        values = space2.s_tau[space2.sector(r)]
        assert np.allclose(values, values[0])
        expected = 2 * r * params2.eta + params2.x * np.pi + params2.y * np.pi * params2.omega
        assert values[0] == approx(expected)


@mark.parametrize("which shift".split(), [("A", -1), ("B", 0), ("C", 0), ("D", 1)])
def test_sector_shifts(space2, which, shift):
    op = space2.operator(which, 0.3 + 0.1j)
    assert op.r_shift == shift
    mat = op.matrix
    cols = space2.sector(0)
    rows = np.flatnonzero(np.abs(mat[:, cols]).max(axis=1) > 0)
    assert set(space2.r_of[rows]) == {shift}


def test_monodromy_matches_r_products(space2):
    lam = 0.27 + 0.08j
    products = monodromy_by_products(lam, space2)
    cols = space2.interior(2)
    for which in "ABCD":
        direct = space2.operator(which, lam).matrix[:, cols]
        assert np.max(np.abs(products[which][:, cols] - direct)) / np.max(np.abs(direct)) < 1e-11


def test_exchange_relations(params2, space2):
    l0, l1 = _lams(2)
    assert rtt_residual(l0, l1, params2, space2) < 1e-10
    assert exchange_residual(l0, l1, params2, space2) < 1e-10


@mark.parametrize("N x y".split(), ALLOWED + [(4, 0, 1)])
def test_transfer_matrices_commute(params_factory, N, x, y):
    p = params_factory(N, x, y)
    l1, l2 = _lams(2)
    assert transfer_commutator(l1, l2, p) < 1e-10


@mark.parametrize("N x y".split(), ALLOWED)
def test_quantum_determinant(params_factory, N, x, y):
    p = params_factory(N, x, y)
    space = DynamicalSpace(p)
    res = quantum_det_residuals(0.33 - 0.04j, p, space)
    assert max(res.values()) < 1e-10
    for n in range(1, N + 1):
        assert inversion_at_inhomogeneity(n, p, space) < 1e-10
        assert cancellation_residual(n, p, space) < 1e-10


def test_grading(params2, space2):
    assert grading_residual(0.19 + 0.03j, params2, space2) < 1e-10


def test_transfer_depends_on_kappa_only_by_similarity(params2, space2):
    lam = 0.21 + 0.05j
    ev1 = np.sort_complex(np.linalg.eigvals(space2.transfer_block(lam, 0, 1.0)))
    ev2 = np.sort_complex(np.linalg.eigvals(space2.transfer_block(lam, 0, 0.6 + 0.3j)))
    assert np.max(np.abs(ev1 - ev2)) / np.max(np.abs(ev1)) < 1e-10


def test_r_matrix_at_zero_is_a_permutation(params2):
    a0 = theta1(params2.eta, params2.theta)
    for t in (0.53 + 0.12j, -0.8 + 0.05j):
        assert np.allclose(r_matrix(0.0, t, params2), a0 * permutation4(), atol=1e-13)


def test_monodromy_entries_and_transfer(params2, space2):
    lam = 0.23 - 0.04j
    op = build_monodromy_entry("D", lam, params2)
    assert op.r_shift == 1
    assert np.allclose(op.matrix, space2.operator("D", lam).matrix)
    block = build_antiperiodic_transfer(lam, params2, space2)
    assert block.shape == (4, 4)
    assert np.allclose(block, space2.transfer_block(lam, 0))
    assert quantum_det_check(lam, params2, space2) < 1e-10
