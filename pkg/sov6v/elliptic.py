# sov6v/elliptic.py
"""
Theta functions and the identities built on them.

    theta(z) = -i sum_k (-1)^k exp(i pi omega (k+1/2)^2 + 2i (k+1/2) z)

with theta(z+pi) = -theta(z) and theta(z+pi*omega) = -exp(-i pi omega - 2iz) theta(z).
Everything is evaluated from the exponential series; the product formula is
only kept as an independent check.
"""

import enum
import logging
import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from sov6v.config import Complex
from sov6v.errors import (
    ConfigError,
    IndependenceViolation,
    PoleOnLattice,
    SingularCalibration,
    UnknownVariant,
)

logger = logging.getLogger(__name__)

PI = math.pi


class ThetaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega: Complex = 1j
    tol: float = 1e-16
    series_cutoff: int | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.omega.imag <= 0:
            raise ConfigError("theta series diverges for Im(omega) <= 0", path="omega", value=self.omega.imag)
        return self

    @property
    def width(self) -> int:
        """Half-width of the summation window around the dominant term."""
        derived = math.ceil(math.sqrt(math.log(100.0 / self.tol) / (PI * self.omega.imag))) + 2
        return max(derived, self.series_cutoff or 0)

    def rescaled(self, factor: float) -> "ThetaParams":
        return ThetaParams(omega=self.omega * factor, tol=self.tol, series_cutoff=self.series_cutoff)

    def refined(self) -> "ThetaParams":
        return ThetaParams(omega=self.omega, tol=self.tol, series_cutoff=2 * self.width)


class ThetaVariant(str, enum.Enum):
    STD = "STD"
    X0 = "X0"
    Y0 = "Y0"
    XY = "XY"


def _variant(tag) -> ThetaVariant:
    try:
        return ThetaVariant(tag.value if isinstance(tag, ThetaVariant) else str(tag).upper())
    except ValueError as exc:
        raise UnknownVariant(f"unknown theta variant {tag!r}") from exc


# -------- series kernel --------
def _series(a: float, b: complex, z, p: ThetaParams, derivative: bool = False):
    """sum_k exp(i pi omega (k+a)^2 + 2i (k+a)(z+b)), or its z-derivative."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel() + b
    omega = p.omega
    centre = -zf.imag / (PI * omega.imag) - a
    lo = math.floor(float(np.min(centre))) - p.width if zf.size else 0
    hi = math.ceil(float(np.max(centre))) + p.width if zf.size else 0
    k = np.arange(lo, hi + 1) + a
    expo = 1j * PI * omega * k[None, :] ** 2 + 2j * k[None, :] * zf[:, None]
    terms = np.exp(expo)
    if derivative:
        terms = terms * (2j * k[None, :])
    out = terms.sum(axis=1).reshape(shape)
    return out if shape else complex(out)


def theta_char(a: float, b: complex, z, p: ThetaParams):
    return _series(a, b, z, p)


def theta_char_prime(a: float, b: complex, z, p: ThetaParams):
    return _series(a, b, z, p, derivative=True)


def theta1(z, p: ThetaParams):
    return _series(0.5, -PI / 2, z, p)


def theta1_prime(z, p: ThetaParams):
    return _series(0.5, -PI / 2, z, p, derivative=True)


def theta2(z, p: ThetaParams):
    return _series(0.5, 0.0, z, p)


def theta3(z, p: ThetaParams):
    return _series(0.0, 0.0, z, p)


def theta4(z, p: ThetaParams):
    return _series(0.0, PI / 2, z, p)


def theta_product(z, p: ThetaParams, terms: int = 80):
    """Product formula, used as an independent oracle."""
    z = np.asarray(z, dtype=complex)
    q = np.exp(1j * PI * p.omega)
    n = np.arange(1, terms + 1)[:, None]
    zz = z.ravel()[None, :]
    q2n = q ** (2 * n)
    prod = np.prod((1 - q2n * np.exp(-2j * zz)) * (1 - q2n * np.exp(2j * zz)) * (1 - q2n), axis=0)
    out = (2 * np.exp(1j * PI * p.omega / 4) * np.sin(zz[0]) * prod).reshape(z.shape)
    return out if z.shape else complex(out)


# -------- variants --------
def theta_variant(tag, z, p: ThetaParams):
    tag = _variant(tag)
    z = np.asarray(z, dtype=complex)
    if tag is ThetaVariant.STD:
        out = theta1(z, p)
    elif tag is ThetaVariant.X0:
        out = theta1(z / 2, p.rescaled(0.5))
    elif tag is ThetaVariant.Y0:
        out = theta1(z, p.rescaled(2.0))
    else:
        out = np.exp(0.5j * z) * theta1(z / 2, p) * theta1((z + PI + PI * p.omega) / 2, p)
    return out if np.ndim(out) else complex(out)


def theta_variant_prime(tag, z, p: ThetaParams):
    tag = _variant(tag)
    z = np.asarray(z, dtype=complex)
    if tag is ThetaVariant.STD:
        out = theta1_prime(z, p)
    elif tag is ThetaVariant.X0:
        out = 0.5 * theta1_prime(z / 2, p.rescaled(0.5))
    elif tag is ThetaVariant.Y0:
        out = theta1_prime(z, p.rescaled(2.0))
    else:
        u, v = z / 2, (z + PI + PI * p.omega) / 2
        a, b = theta1(u, p), theta1(v, p)
        da, db = theta1_prime(u, p), theta1_prime(v, p)
        out = np.exp(0.5j * z) * (0.5j * a * b + 0.5 * da * b + 0.5 * a * db)
    return out if np.ndim(out) else complex(out)


def theta_aux(tag, z, p: ThetaParams):
    """theta_2/3/4 by integer tag, or one of the ThetaVariant functions."""
    if tag in (2, 3, 4):
        return {2: theta2, 3: theta3, 4: theta4}[tag](z, p)
    return theta_variant(tag, z, p)


def variant_periods(tag, p: ThetaParams) -> tuple[complex, complex]:
    """Lattice of zeros of the variant (real generator first)."""
    tag = _variant(tag)
    w = PI * p.omega
    return {
        ThetaVariant.STD: (complex(PI), w),
        ThetaVariant.X0: (complex(2 * PI), w),
        ThetaVariant.Y0: (complex(PI), 2 * w),
        ThetaVariant.XY: (complex(2 * PI), PI + w),
    }[tag]


def variant_shift(tag, p: ThetaParams) -> complex:
    """pi_X: pi, or pi*omega for the y=0 variant."""
    return PI * p.omega if _variant(tag) is ThetaVariant.Y0 else complex(PI)


def variant_constant(tag, p: ThetaParams) -> complex:
    """c_X with c_X e^{i delta_{y=0} z} theta_X(z) theta_X(z + pi_X) = theta(z)."""
    tag = _variant(tag)
    w = p.omega
    if tag is ThetaVariant.X0:
        inv = theta4(0.0, p)
    elif tag is ThetaVariant.Y0:
        inv = 0.5j * np.exp(-0.5j * PI * w) * theta2(0.0, p)
    elif tag is ThetaVariant.XY:
        inv = 0.5 * np.exp(-0.5j * PI * w) * theta2(0.0, p) * theta3(0.0, p) * theta4(0.0, p)
    else:
        raise UnknownVariant("the standard theta has no splitting constant")
    return complex(1.0 / inv)


# -------- lattices --------
def lattice_distance(z, periods: tuple[complex, complex]) -> float:
    """Distance from z to the lattice generated by the two periods."""
    p1, p2 = complex(periods[0]), complex(periods[1])
    mat = np.array([[p1.real, p2.real], [p1.imag, p2.imag]])
    z = complex(z)
    a, b = np.linalg.solve(mat, np.array([z.real, z.imag]))
    fa, fb = a - math.floor(a), b - math.floor(b)
    return min(abs((fa - da) * p1 + (fb - db) * p2) for da in (0, 1) for db in (0, 1))


def in_lattice(z, periods, band: float) -> bool:
    return lattice_distance(z, periods) < band


def reduce_to_cell(z: complex, periods: tuple[complex, complex]) -> tuple[complex, int, int]:
    """z = z0 + m*p1 + n*p2 with z0 in the fundamental cell; returns (z0, m, n)."""
    p1, p2 = complex(periods[0]), complex(periods[1])
    mat = np.array([[p1.real, p2.real], [p1.imag, p2.imag]])
    a, b = np.linalg.solve(mat, np.array([z.real, z.imag]))
    m, n = math.floor(a), math.floor(b)
    return z - m * p1 - n * p2, m, n


# -------- theta spaces and interpolation --------
class ThetaSpaceSpec(BaseModel):
    """Order-n theta functions of norm alpha, built on one variant."""

    model_config = ConfigDict(frozen=True)

    order: int
    norm: Complex
    variant: ThetaVariant = ThetaVariant.STD


def interpolation_weights(points, spec: ThetaSpaceSpec, z, p: ThetaParams, band: float = 1e-9):
    """Matrix W with f(z_i) = sum_j W[i, j] f(points_j) for f in the space."""
    x = np.asarray(points, dtype=complex).ravel()
    if len(x) != spec.order:
        raise IndependenceViolation(f"need {spec.order} points, got {len(x)}")
    periods = variant_periods(spec.variant, p)
    shift = spec.norm - x.sum()
    if in_lattice(shift, periods, band):
        raise IndependenceViolation("norm minus sum of points lies on the lattice", lattice_distance(shift, periods))
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            if in_lattice(x[i] - x[j], periods, band):
                raise IndependenceViolation(
                    f"points {i} and {j} coincide modulo the lattice", lattice_distance(x[i] - x[j], periods)
                )
    th = lambda u: theta_variant(spec.variant, u, p)  # noqa: E731
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    diff = zz[:, None] - x[None, :]
    vals = th(diff)
    n = len(x)
    weights = np.empty((len(zz), n), dtype=complex)
    for j in range(n):
        others = [k for k in range(n) if k != j]
        num = th(shift + x[j] - zz) * np.prod(vals[:, others], axis=1)
        den = th(shift) * np.prod(th(x[j] - x[others])) if others else th(shift)
        weights[:, j] = num / den
    return weights


def interpolation_weights_prime(points, spec: ThetaSpaceSpec, z, p: ThetaParams):
    """z-derivative of interpolation_weights (no independence checks)."""
    x = np.asarray(points, dtype=complex).ravel()
    shift = spec.norm - x.sum()
    th = lambda u: theta_variant(spec.variant, u, p)  # noqa: E731
    dth = lambda u: theta_variant_prime(spec.variant, u, p)  # noqa: E731
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    n = len(x)
    vals = th(zz[:, None] - x[None, :])
    dvals = dth(zz[:, None] - x[None, :])
    out = np.empty((len(zz), n), dtype=complex)
    for j in range(n):
        others = [k for k in range(n) if k != j]
        lead, dlead = th(shift + x[j] - zz), -dth(shift + x[j] - zz)
        prod = np.prod(vals[:, others], axis=1)
        dprod = np.zeros(len(zz), dtype=complex)
        for k in others:
            rest = [m for m in others if m != k]
            dprod += dvals[:, k] * np.prod(vals[:, rest], axis=1)
        den = th(shift) * (np.prod(th(x[j] - x[others])) if others else 1.0)
        out[:, j] = (dlead * prod + lead * dprod) / den
    return out


def interpolate(points, values, spec: ThetaSpaceSpec, z, p: ThetaParams, band: float = 1e-9):
    """Evaluate at z the unique member of the space through (points, values)."""
    w = interpolation_weights(points, spec, z, p, band)
    out = w @ np.asarray(values, dtype=complex)
    return out if np.ndim(z) else complex(out[0])


# -------- theta basis of order N, norm 0 --------
def vartheta_basis(j: int, N: int, z, p: ThetaParams):
    """vartheta_j(z), j = 0..N-1: basis of order-N norm-0 theta functions."""
    if not 0 <= j <= N - 1:
        raise ValueError(f"basis index {j} outside [0, {N - 1}]")
    z = np.asarray(z, dtype=complex)
    out = _series(0.5 - j / N, -N * PI / 2, N * z, p.rescaled(float(N)))
    return out


def theta_basis_matrix(points, N: int, p: ThetaParams) -> np.ndarray:
    x = np.asarray(points, dtype=complex).ravel()
    return np.stack([np.atleast_1d(vartheta_basis(j, N, x, p)) for j in range(N)], axis=1)


def theta_basis_det(points, N: int, p: ThetaParams) -> complex:
    return complex(np.linalg.det(theta_basis_matrix(points, N, p)))


def det_product_form(points, p: ThetaParams, norm: complex = 0j) -> complex:
    """theta(sum x - norm) * prod_{i<j} theta(x_i - x_j)."""
    x = np.asarray(points, dtype=complex).ravel()
    out = complex(theta1(x.sum() - norm, p))
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out *= theta1(x[i] - x[j], p)
    return out


@lru_cache(maxsize=64)
def det_constant(N: int, p: ThetaParams, seed: int = 20160601) -> complex:
    """C with det[vartheta_{j-1}(x_i)] = C theta(sum x) prod_{i<j} theta(x_i - x_j)."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, PI, N) + 1j * rng.uniform(-0.3, 0.3, N) * PI * p.omega.imag
    denom = det_product_form(pts, p)
    if abs(denom) < 1e-12:
        raise SingularCalibration("calibration points are degenerate", abs(denom))
    c = theta_basis_det(pts, N, p) / denom
    logger.debug("theta basis constant N=%d omega=%s: %s", N, p.omega, c)
    return c


def elliptic_poly_det(points, p: ThetaParams, norm: complex = 0j) -> tuple[complex, complex]:
    """(det[vartheta_{j-1}(x_i - norm / N)], calibrated constant).

    The shifted basis spans the order-N theta functions of the given norm, so
    det = C theta(sum x - norm) prod_{i<j} theta(x_i - x_j) with C independent of norm.
    """
    x = np.atleast_1d(np.asarray(points, dtype=complex))
    N = len(x)
    return theta_basis_det(x - norm / N, N, p), det_constant(N, p)


# -------- Frobenius --------
def frobenius_kernel_det(x, y, t: complex, p: ThetaParams) -> complex:
    """Direct determinant of theta(x_i - y_j + t) / (theta(x_i - y_j) theta(t))."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d = x[:, None] - y[None, :]
    kernel = theta1(d + t, p) / (theta1(d, p) * theta1(t, p))
    return complex(np.linalg.det(kernel))


def frobenius_det(x, y, t: complex, p: ThetaParams, band: float = 1e-9) -> complex:
    """Product form of the elliptic Cauchy determinant."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    periods = (complex(PI), PI * p.omega)
    if in_lattice(t, periods, band):
        raise PoleOnLattice("twist parameter on the lattice", lattice_distance(t, periods))
    for xi in x:
        for yj in y:
            if in_lattice(xi - yj, periods, band):
                raise PoleOnLattice("x_i - y_j on the lattice", lattice_distance(xi - yj, periods))
    n = len(x)
    out = theta1(np.sum(x - y) + t, p) / theta1(t, p)
    for i in range(n):
        for j in range(i + 1, n):
            out *= theta1(x[i] - x[j], p) * theta1(y[j] - y[i], p)
    out /= np.prod(theta1(x[:, None] - y[None, :], p))
    return complex(out)
