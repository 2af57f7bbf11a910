import numpy as np
from hypothesis import given, settings
from hypothesis.strategies import floats
from pytest import approx, mark, raises

from sov6v.elliptic import (
    PI,
    ThetaParams,
    ThetaSpaceSpec,
    ThetaVariant,
    det_product_form,
    elliptic_poly_det,
    frobenius_det,
    frobenius_kernel_det,
    in_lattice,
    interpolate,
    interpolation_weights,
    lattice_distance,
    reduce_to_cell,
    theta1,
    theta1_prime,
    theta_aux,
    theta_char,
    theta_char_prime,
    theta_product,
    theta_variant,
    theta_variant_prime,
    variant_constant,
    variant_periods,
    variant_shift,
)
from sov6v.errors import IndependenceViolation, PoleOnLattice, UnknownVariant

TH = ThetaParams(omega=1j)
re_part = floats(min_value=-3.0, max_value=3.0)
im_part = floats(min_value=-0.4, max_value=0.4)


def _points(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.2, 1.2, n) + 1j * rng.uniform(-0.3, 0.3, n)


@settings(max_examples=100, deadline=None)
@given(re_part, im_part)
def test_theta_quasi_periodicity(a, b):
    z = complex(a, b)
    base = theta1(z, TH)
    scale = max(abs(base), 1e-1)
    assert abs(theta1(z + PI, TH) + base) / scale < 1e-12
    w = PI * TH.omega
    assert abs(theta1(z + w, TH) + np.exp(-1j * w - 2j * z) * base) / scale < 1e-12


@settings(max_examples=50, deadline=None)
@given(re_part, im_part)
def test_theta_is_odd(a, b):
    z = complex(a, b)
    assert abs(theta1(-z, TH) + theta1(z, TH)) < 1e-13


def test_series_matches_product():
    z = _points(40, 1)
    assert np.max(np.abs(theta1(z, TH) - theta_product(z, TH)) / np.abs(theta1(z, TH))) < 1e-12


@mark.parametrize("omega", [1j, 0.3 + 0.8j, 2j])
def test_derivative_matches_difference_quotient(omega):
    th = ThetaParams(omega=omega)
    z = 0.31 - 0.07j
    h = 1e-5
    fd = (theta1(z + h, th) - theta1(z - h, th)) / (2 * h)
    assert theta1_prime(z, th) == approx(fd, rel=1e-8)


@mark.parametrize("tag", [ThetaVariant.X0, ThetaVariant.Y0, ThetaVariant.XY])
def test_variant_splitting(tag):
    z = _points(30, 2)
    c = variant_constant(tag, TH)
    extra = np.exp(1j * z) if tag is ThetaVariant.Y0 else 1.0
    lhs = c * extra * theta_variant(tag, z, TH) * theta_variant(tag, z + variant_shift(tag, TH), TH)
    assert np.max(np.abs(lhs - theta1(z, TH)) / np.abs(theta1(z, TH))) < 1e-10


@mark.parametrize("tag", list(ThetaVariant))
def test_variant_zeros_follow_their_lattice(tag):
    p1, p2 = variant_periods(tag, TH)
    for zero in (0.0, p1, p2, p1 + p2):
        assert abs(theta_variant(tag, zero, TH)) < 1e-12


@mark.parametrize("tag", list(ThetaVariant))
def test_variant_derivatives(tag):
    z = 0.23 + 0.11j
    h = 1e-5
    fd = (theta_variant(tag, z + h, TH) - theta_variant(tag, z - h, TH)) / (2 * h)
    assert theta_variant_prime(tag, z, TH) == approx(fd, rel=1e-7)


def test_unknown_variant():
    with raises(UnknownVariant):
        theta_variant("Z9", 0.1, TH)
    with raises(UnknownVariant):
        variant_constant(ThetaVariant.STD, TH)


def test_lattice_helpers():
    periods = (complex(PI), PI * 1j)
    assert in_lattice(2 * PI - 3j * PI, periods, 1e-9)
    assert lattice_distance(0.1 + PI, periods) == approx(0.1)
    z0, m, n = reduce_to_cell(0.2 + 0.1j + 3 * PI - 2j * PI, periods)
    assert (m, n) == (3, -2)
    assert z0 == approx(0.2 + 0.1j)


@mark.parametrize("N", [1, 2, 3, 4])
def test_interpolation_reproduces_theta_functions(N):
    roots = _points(N, 10 + N)
    nodes = _points(N, 20 + N)
    sample = _points(6, 30 + N)
    spec = ThetaSpaceSpec(order=N, norm=complex(roots.sum()))

    def f(u):
        return np.prod(theta1(np.asarray(u)[..., None] - roots, TH), axis=-1)

    got = interpolate(nodes, f(nodes), spec, sample, TH)
    assert np.max(np.abs(got - f(sample)) / np.abs(f(sample))) < 1e-9


def test_interpolation_weights_are_identity_at_nodes():
    nodes = _points(3, 4)
    spec = ThetaSpaceSpec(order=3, norm=0.4 + 0.05j)
    w = interpolation_weights(nodes, spec, nodes, TH)
    assert np.max(np.abs(w - np.eye(3))) < 1e-12


def test_interpolation_rejects_dependent_points():
    spec = ThetaSpaceSpec(order=2, norm=0.4 + 0.05j)
    with raises(IndependenceViolation):
        interpolation_weights([0.1, 0.1 + PI], spec, 0.3, TH)
    with raises(IndependenceViolation):
        interpolation_weights([0.1], spec, 0.3, TH)
    # norm equal to the sum of the points
    with raises(IndependenceViolation):
        interpolation_weights([0.1, 0.3 + 0.05j], spec, 0.3, TH)


@mark.parametrize("N", [1, 2, 3, 4])
def test_theta_basis_determinant(N):
    pts = _points(N, 40 + N)
    det, const = elliptic_poly_det(pts, TH)
    assert det == approx(const * det_product_form(pts, TH), rel=1e-10)


@mark.parametrize("N", [2, 3])
def test_theta_basis_determinant_with_norm(N):
    pts = _points(N, 70 + N)
    norm = 0.31 - 0.17j
    det, const = elliptic_poly_det(pts, TH, norm=norm)
    assert const == elliptic_poly_det(pts, TH)[1]
    assert det == approx(const * det_product_form(pts, TH, norm=norm), rel=1e-10)
    # zero when the points sum to the norm
    pts[-1] += norm - sum(pts)
    assert abs(elliptic_poly_det(pts, TH, norm=norm)[0]) < 1e-8 * abs(det)


@mark.parametrize("N", [1, 2, 3])
def test_frobenius(N):
    x, y = _points(N, 50 + N), _points(N, 60 + N)
    t = 0.37 + 0.21j
    assert frobenius_det(x, y, t, TH) == approx(frobenius_kernel_det(x, y, t, TH), rel=1e-10)


def test_frobenius_poles():
    with raises(PoleOnLattice):
        frobenius_det([0.1], [0.2], PI, TH)
    with raises(PoleOnLattice):
        frobenius_det([0.1, 0.5], [0.1 + PI * 1j, 0.2], 0.3, TH)


def test_characteristic_series():
    z = _points(6, 21)
    assert np.allclose(theta_char(0.5, -PI / 2, z, TH), theta1(z, TH), rtol=1e-13)
    assert np.allclose(theta_aux(2, z, TH), theta1(z + PI / 2, TH), rtol=1e-12)
    assert np.allclose(theta_aux(4, z, TH), theta_aux(3, z + PI / 2, TH), rtol=1e-12)
    assert theta_aux(ThetaVariant.XY, 0.3 + 0.1j, TH) == theta_variant(ThetaVariant.XY, 0.3 + 0.1j, TH)
    h = 1e-6
    for a, b in ((0.0, 0.0), (0.5, 0.0), (0.25, 0.3)):
        fd = (theta_char(a, b, z + h, TH) - theta_char(a, b, z - h, TH)) / (2 * h)
        assert np.allclose(theta_char_prime(a, b, z, TH), fd, rtol=1e-7, atol=1e-8)
