# sov6v/spectrum.py
"""
Spectrum of the twisted antiperiodic transfer matrix on the r = 0 sector.

An eigenvalue is stored through its N values at the inhomogeneities; any
other value follows from interpolation in the order-N theta space of norm
sum(xi) + t00, dressed by e^{-iy lam}.
"""

import logging
from typing import Literal

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from sov6v.config import Complex, ModelParams
from sov6v.elliptic import PI, ThetaSpaceSpec, interpolation_weights, theta1, theta_basis_matrix
from sov6v.errors import DegenerateSpectrum, IncompleteEnumeration, NewtonDiverged, ZeroQPair
from sov6v.numerics import damped_newton, dedupe, lu_det, max_norm, parallel_map
from sov6v.repspace import DynamicalSpace, a_func, a_xy_func, d_func
from sov6v.sovbasis import SovSystem

logger = logging.getLogger(__name__)


# -------- eigenvalue functions --------
def eigenvalue_weights(lam, params: ModelParams) -> np.ndarray:
    """Matrix W with t(lam_i) = sum_a W[i, a] t(xi_a) for every eigenvalue function."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    spec = ThetaSpaceSpec(order=params.N, norm=params.xi_array.sum() + params.t00)
    w = interpolation_weights(params.xi_array, spec, lam, params.theta, band=params.band)
    y = params.y
    return w * np.exp(1j * y * (params.xi_array[None, :] - lam[:, None]))


class EigenvalueFunction(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: tuple[Complex, ...]
    params: ModelParams

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=complex)

    @property
    def norm(self) -> complex:
        return complex(self.params.xi_array.sum() + self.params.t00)

    def __call__(self, lam):
        out = eigenvalue_weights(lam, self.params) @ self.array
        return out if np.ndim(lam) else complex(out[0])

    def shifted_values(self) -> np.ndarray:
        """t(xi_a - eta)."""
        return eigenvalue_weights(self.params.xi_array - self.params.eta, self.params) @ self.array


def discrete_rhs(params: ModelParams) -> np.ndarray:
    """(-1)^{x+y+xy} a(xi_a) d(xi_a - eta)."""
    xi = params.xi_array
    return params.sign * a_func(xi, params) * d_func(xi - params.eta, params)


def verify_discrete_system(t: EigenvalueFunction, params: ModelParams | None = None) -> float:
    params = params or t.params
    rhs = discrete_rhs(params)
    lhs = t.array * t.shifted_values()
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


def eigenvalue_periodicity_residuals(t: EigenvalueFunction, lam) -> dict[str, float]:
    """t(lam + pi) and t(lam + pi omega) against the quasi-periodicity factors."""
    p = t.params
    N, w = p.N, PI * p.omega
    at = t(lam)
    scale = max(abs(at), 1e-300)
    factor = (-np.exp(-2j * lam - 1j * w)) ** N * np.exp(
        2j * (p.xi_array.sum() - N * p.eta / 2 + p.x * PI / 2)
    )
    return {
        "pi": abs(t(lam + PI) - (-1) ** (N + p.y) * at) / scale,
        "pi*omega": abs(t(lam + w) - factor * at) / max(abs(factor * at), 1e-300),
    }


def closed_form_n1(params: ModelParams) -> tuple[complex, complex]:
    """The two eigenvalues t(xi_1) of the one-site chain."""
    th = lambda z: theta1(z, params.theta)  # noqa: E731
    eta, t00 = params.eta, params.t00
    sq = np.sqrt(-params.sign * th(eta) ** 2 * np.exp(-1j * params.y * eta) * th(t00) / th(t00 + eta))
    return complex(sq), complex(-sq)


# -------- brute force --------
def _canonical_order(values: list[np.ndarray]) -> list[int]:
    return sorted(range(len(values)), key=lambda k: tuple(np.round(np.r_[values[k].real, values[k].imag], 10)))


def spectral_gap(vals) -> float:
    """Smallest distance between two eigenvalues (inf for fewer than two)."""
    vals = np.asarray(vals, dtype=complex)
    if len(vals) < 2:
        return np.inf
    d = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def brute_spectrum(
    params: ModelParams, space: DynamicalSpace | None = None, gap_tol: float | None = None
) -> list[tuple[EigenvalueFunction, np.ndarray]]:
    """Eigen-decomposition of the transfer matrix on r = 0, read off at every xi_a."""
    space = space or DynamicalSpace(params)
    blocks = [space.transfer_block(x) for x in params.xi]
    scale = max(max_norm(b) for b in blocks)
    gap_tol = 1e3 * params.tol * scale if gap_tol is None else gap_tol

    vals, vecs = sla.eig(blocks[0])
    if spectral_gap(vals) <= gap_tol:
        logger.info("T(xi_1) spectrum gap %.3e too small, diagonalising a generic combination", spectral_gap(vals))
        rng = np.random.default_rng(11)
        weights = rng.normal(size=len(blocks)) + 1j * rng.normal(size=len(blocks))
        vals, vecs = sla.eig(sum(c * b for c, b in zip(weights, blocks)))
        if spectral_gap(vals) <= gap_tol:
            raise DegenerateSpectrum("transfer matrix spectrum is not simple", spectral_gap(vals))

    def read(k):
        v = vecs[:, k]
        return np.array([np.vdot(v, b @ v) / np.vdot(v, v) for b in blocks])

    values = parallel_map(read, range(len(vals)))
    order = _canonical_order(values)
    out = []
    for k in order:
        out.append((EigenvalueFunction(values=tuple(values[k]), params=params), vecs[:, k]))
    logger.info("brute spectrum: %d eigenvalues (N=%d, x=%d, y=%d)", len(out), params.N, params.x, params.y)
    return out


# -------- independent solver --------
def _system(params: ModelParams):
    shifted = eigenvalue_weights(params.xi_array - params.eta, params)
    rhs = discrete_rhs(params)

    def func(u):
        return u * (shifted @ u) - rhs

    def jac(u):
        return np.diag(shifted @ u) + u[:, None] * shifted

    return func, jac


def solve_discrete_system(
    params: ModelParams,
    strategy: Literal["exhaustive", "seeded"] = "exhaustive",
    seeds: list[np.ndarray] | None = None,
    n_starts: int | None = None,
    seed: int = 2016,
) -> list[EigenvalueFunction]:
    """Multistart damped Newton on the N values t(xi_a)."""
    if strategy == "exhaustive" and params.N > 3:
        raise ValueError("exhaustive enumeration is limited to N <= 3")
    func, jac = _system(params)
    rhs = discrete_rhs(params)
    scale = float(np.sqrt(np.max(np.abs(rhs))))
    rng = np.random.default_rng(seed)
    target = 1 << params.N
    if seeds is None:
        n_starts = n_starts or 48 * target
        seeds = [scale * (rng.normal(size=params.N) + 1j * rng.normal(size=params.N)) for _ in range(n_starts)]

    def run(start):
        x0 = np.asarray(start, dtype=complex)
        try:
            for attempt in Retrying(
                stop=stop_after_attempt(3), retry=retry_if_exception_type(NewtonDiverged), reraise=True
            ):
                with attempt:
                    x, ok, it = damped_newton(func, jac, x0, tol=params.tol * scale)
                    if not ok:
                        x0 = x0 * np.exp(0.3j * attempt.retry_state.attempt_number)
                        raise NewtonDiverged("multistart Newton did not converge", np.linalg.norm(func(x)))
                    logger.debug("start converged in %d steps", it)
                    return x
        except NewtonDiverged:
            return None

    found = [x for x in parallel_map(run, seeds) if x is not None]
    sols = dedupe(found, threshold=1e4 * params.tol * max(scale, 1.0))
    logger.info("discrete system: %d distinct solutions from %d starts", len(sols), len(seeds))
    if strategy == "exhaustive" and len(sols) < target:
        raise IncompleteEnumeration(f"found {len(sols)} of {target} solutions", len(sols))
    sols = [sols[k] for k in _canonical_order(sols)]
    return [EigenvalueFunction(values=tuple(s), params=params) for s in sols]


def match_spectra(first: list[EigenvalueFunction], second: list[EigenvalueFunction]) -> float:
    """Largest nearest-neighbour distance between two eigenvalue lists (value vectors)."""
    if len(first) != len(second):
        return float("inf")
    worst = 0.0
    for t in first:
        dist = min(np.max(np.abs(t.array - s.array)) / max(np.max(np.abs(t.array)), 1e-300) for s in second)
        worst = max(worst, dist)
    return float(worst)


# -------- separate states --------
def q_table(t: EigenvalueFunction, params: ModelParams | None = None) -> np.ndarray:
    """q^(0)_a = 1, q^(1)_a = t(xi_a) / a_xy(xi_a) (the second ratio when a_xy vanishes)."""
    params = params or t.params
    xi = params.xi_array
    axy = a_xy_func(xi, params)
    shifted = t.shifted_values()
    d_shift = d_func(xi - params.eta, params)
    q = np.empty((params.N, 2), dtype=complex)
    tiny = params.band
    for a in range(params.N):
        if abs(axy[a]) > tiny:
            q[a] = (1.0, t.array[a] / axy[a])
        elif abs(shifted[a]) > tiny:
            q[a] = (1.0, d_shift[a] / shifted[a])
        else:
            q[a] = (0.0, 1.0)
        if np.all(np.abs(q[a]) < tiny):
            raise ZeroQPair(f"q pair of site {a + 1} vanishes")
    return q


def q_relation_residual(t: EigenvalueFunction) -> float:
    """Gap between the two expressions of q^(1)/q^(0)."""
    p = t.params
    xi = p.xi_array
    first = d_func(xi - p.eta, p) / t.shifted_values()
    second = t.array / a_xy_func(xi, p)
    return float(np.max(np.abs(first - second) / np.abs(second)))


def rank_one_residual(t: EigenvalueFunction) -> float:
    """max_n |det D_n| / |D_n|^2 for the 2x2 matrices of the discrete system."""
    p = t.params
    xi = p.xi_array
    axy = a_xy_func(xi, p)
    dd = d_func(xi - p.eta, p)
    shifted = t.shifted_values()
    worst = 0.0
    for n in range(p.N):
        mat = np.array([[t.array[n], -axy[n]], [-dd[n], shifted[n]]])
        worst = max(worst, abs(np.linalg.det(mat)) / max_norm(mat) ** 2)
    return float(worst)


def separate_coefficients(q: np.ndarray, side: str, params: ModelParams, kappa: complex | None = None) -> np.ndarray:
    """Per-h weights prod_a (...)^{h_a} q^{(h_a)}, without the Theta determinant."""
    kappa = params.kappa if kappa is None else kappa
    xi = params.xi_array
    eta, y = params.eta, params.y
    if side == "right":
        step = np.exp(1j * y * eta) * a_xy_func(xi, params) / (kappa * d_func(xi - eta, params))
    else:
        step = np.full(params.N, kappa * np.exp(1j * y * eta))
    out = np.empty(1 << params.N, dtype=complex)
    for h in range(1 << params.N):
        bits = (h >> np.arange(params.N)) & 1
        out[h] = np.prod(np.where(bits == 1, step * q[:, 1], q[:, 0]))
    return out


def separate_state(q: np.ndarray, side: str, system: SovSystem, kappa: complex | None = None) -> np.ndarray:
    """Sector-0 components of the separate state built on the SOV basis."""
    p = system.params
    coeff = separate_coefficients(q, side, p, kappa)
    dets = np.array([system.theta_det(0, h) for h in range(system.n_spin)])
    basis = system.left(0) if side == "left" else system.right(0)
    return (coeff * dets) @ basis.vectors


def eigenstate_from_values(
    t: EigenvalueFunction, side: Literal["left", "right"], params: ModelParams | None = None, system: SovSystem | None = None
) -> np.ndarray:
    params = params or t.params
    system = system or SovSystem(params)
    return separate_state(q_table(t, params), side, system)


def f_matrix(q_left: np.ndarray, q_right: np.ndarray, params: ModelParams) -> np.ndarray:
    xi = params.xi_array
    eta, y, N = params.eta, params.y, params.N
    xbar = (xi.sum() + params.t00) / N
    step = np.exp(1j * y * eta) * a_xy_func(xi, params) / d_func(xi - eta, params)
    F = np.zeros((N, N), dtype=complex)
    for h in (0, 1):
        basis = theta_basis_matrix(xi - eta * h - xbar, N, params.theta)
        F += (step**h * q_left[:, h] * q_right[:, h])[:, None] * basis
    return F


def scalar_product_det(t: EigenvalueFunction, t_prime: EigenvalueFunction, params: ModelParams | None = None) -> complex:
    """<Psi_t | Psi_t'> as det F_{t,t'}."""
    params = params or t.params
    return lu_det(f_matrix(q_table(t, params), q_table(t_prime, params), params), label="F")
