# sov6v/tqinhom.py
"""
Inhomogeneous Baxter equation with an order-N elliptic polynomial Q:

    t Q = f a_xy Q(l - eta) + d / f(l + eta) Q(l + eta) - a d F

f = beta^{-1} e^{-iy l} theta(l - mu + (M - N) eta) / theta(l - mu + t00) and F
fixed by Q so that the right-hand side is entire. The norm alpha_Q of Q follows
the branch det C(beta, alpha_Q) = 0 continued from beta = 0.
"""

import logging
import math
from itertools import combinations

import numpy as np
from pydantic import BaseModel, ConfigDict
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from sov6v.config import Complex, ModelParams
from sov6v.elliptic import PI, ThetaSpaceSpec, ThetaVariant, in_lattice, interpolation_weights, interpolation_weights_prime, lattice_distance, theta1
from sov6v.errors import (
    AdmissibilityFailure,
    BranchLost,
    NewtonDiverged,
    NoNullVector,
    NotEntire,
    PoleOnLattice,
    RootCountMismatch,
)
from sov6v.numerics import complex_derivative, damped_newton, lu_det, max_norm, null_vector
from sov6v.repspace import DynamicalSpace, a_func, a_xy_func, d_func, t_height
from sov6v.sovbasis import SovSystem
from sov6v.spectrum import EigenvalueFunction, eigenvalue_weights, separate_coefficients
from sov6v.tq import QFunction, locate_roots

logger = logging.getLogger(__name__)


class InhomGauge(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: Complex
    mu: Complex
    M: int

    @classmethod
    def default(cls, params: ModelParams, beta: complex = 0.3, seed: int = 7) -> "InhomGauge":
        """mu = t00 + 0.3 + 0.21i, moved by seeded offsets until it clears the excluded lattice."""
        rng = np.random.default_rng(seed)
        mu = params.t00 + 0.3 + 0.21j
        for _ in range(16):
            g = cls(beta=beta, mu=mu, M=params.N)
            if not g.excluded(params):
                return g
            mu = mu + complex(rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1))
        raise PoleOnLattice("no admissible mu found", mu)

    def excluded(self, params: ModelParams) -> bool:
        """mu must keep f, 1/f and F regular and nonzero at xi_a and xi_a - eta."""
        shift = (params.N - self.M) * params.eta
        for xi in params.xi_array:
            for z in (
                self.mu + shift - xi,
                self.mu + shift - params.eta - xi,
                self.mu - params.t00 - xi,
                self.mu + params.eta - params.t00 - xi,
            ):
                if in_lattice(z, params.periods, 1e-6):
                    return True
        return False

    def with_beta(self, beta: complex) -> "InhomGauge":
        return self.model_copy(update={"beta": complex(beta)})


# -------- gauge and inhomogeneous term --------
def gauge_f(g: InhomGauge, lam, params: ModelParams):
    """beta^{-1} e^{-iy lam} theta(lam - mu + (M - N) eta) / theta(lam - mu + t00)."""
    lam = np.asarray(lam, dtype=complex)
    den_arg = lam - g.mu + params.t00
    for z in np.atleast_1d(den_arg):
        if in_lattice(z, params.periods, params.band):
            raise PoleOnLattice("gauge function evaluated on its pole", lattice_distance(z, params.periods))
    th = params.theta
    out = np.exp(-1j * params.y * lam) * theta1(lam - g.mu + (g.M - params.N) * params.eta, th) / theta1(den_arg, th) / g.beta
    return out if np.ndim(out) else complex(out)


def gauge_invariance_residual(g: InhomGauge, params: ModelParams, lam=None) -> float:
    """f(l) a(l) * d(l - eta) / f(l) against a(l) d(l - eta), at the inhomogeneities by default."""
    lam = params.xi_array if lam is None else np.asarray(lam, dtype=complex)
    a_bar = gauge_f(g, lam, params) * a_func(lam, params)
    d_bar = d_func(lam - params.eta, params) / gauge_f(g, lam, params)
    ref = a_func(lam, params) * d_func(lam - params.eta, params)
    return float(np.max(np.abs(a_bar * d_bar - ref) / np.abs(ref)))


def q_norm(Q: QFunction) -> complex:
    return complex(Q.root_array.sum())


def inhom_term_F(g: InhomGauge, Q, lam, params: ModelParams, alpha_q: complex | None = None):
    """F fixed by Q; Q may be a QFunction (norm read off its roots) or any callable with alpha_q given."""
    if alpha_q is None:
        alpha_q = q_norm(Q)
    lam = np.asarray(lam, dtype=complex)
    th = lambda z: theta1(z, params.theta)  # noqa: E731
    t00, eta, y, N = params.t00, params.eta, params.y, params.N
    gap = alpha_q - params.xi_array.sum() + N * eta
    w = PI * params.omega
    for z in (t00 + gap, y * w - t00 - gap):
        if in_lattice(z, params.periods, params.band):
            raise PoleOnLattice("inhomogeneous term is singular at this norm", lattice_distance(z, params.periods))
    first = (
        params.sign
        * np.exp(-1j * y * lam)
        * th(t00)
        / (g.beta * th(t00 + gap))
        * Q(g.mu - eta - t00)
        / d_func(g.mu - t00, params)
        * th(lam - g.mu - gap)
        / th(lam - g.mu + t00)
    )
    second = (
        g.beta
        * np.exp(1j * y * (lam + eta))
        * th(t00)
        / th(y * w - t00 - gap)
        * Q(g.mu)
        / a_func(g.mu - eta, params)
        * th(lam - g.mu + eta + y * w - t00 - gap)
        / th(lam - g.mu + eta)
    )
    out = first + second
    return out if np.ndim(out) else complex(out)


def inhom_terms(Q, t: EigenvalueFunction, g: InhomGauge, lam, params: ModelParams, alpha_q: complex | None = None):
    """The four terms t Q, f a_xy Q(l-eta), d Q(l+eta)/f(l+eta), a d F."""
    lam = np.asarray(lam, dtype=complex)
    eta = params.eta
    return (
        t(lam) * Q(lam),
        gauge_f(g, lam, params) * a_xy_func(lam, params) * Q(lam - eta),
        d_func(lam, params) / gauge_f(g, lam + eta, params) * Q(lam + eta),
        a_func(lam, params) * d_func(lam, params) * inhom_term_F(g, Q, lam, params, alpha_q),
    )


def inhom_residual(
    Q, t: EigenvalueFunction, g: InhomGauge, params: ModelParams, lam=None, alpha_q: complex | None = None, seed: int = 19
) -> float:
    if lam is None:
        rng = np.random.default_rng(seed)
        lam = rng.uniform(-1.5, 1.5, 20) + 1j * rng.uniform(-0.3, 0.3, 20) * params.omega.imag
    lhs, fa, dq, adf = inhom_terms(Q, t, g, lam, params, alpha_q)
    scale = np.abs(lhs) + np.abs(fa) + np.abs(dq) + np.abs(adf)
    return float(np.max(np.abs(lhs - fa - dq + adf) / scale))


# -------- C matrix --------
class CMatrix(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray
    diagonal: np.ndarray
    beta: Complex
    alpha_q: Complex


def _diagonal_factor(t: EigenvalueFunction, g: InhomGauge, params: ModelParams) -> np.ndarray:
    """e^{iy xi} t(xi) theta(xi - mu + t00) / (a_xy(xi) theta(xi - mu))."""
    xi = params.xi_array
    th = lambda z: theta1(z, params.theta)  # noqa: E731
    return np.exp(1j * params.y * xi) * t.array * th(xi - g.mu + params.t00) / (a_xy_func(xi, params) * th(xi - g.mu))


def c_matrix(t: EigenvalueFunction, beta: complex, alpha_q: complex, g: InhomGauge, params: ModelParams) -> CMatrix:
    xi = params.xi_array
    u = _diagonal_factor(t, g, params)
    spec = ThetaSpaceSpec(order=params.N, norm=alpha_q)
    w = interpolation_weights(xi, spec, xi - params.eta, params.theta, band=params.band)
    return CMatrix(entries=beta * np.diag(u) - w, diagonal=u, beta=beta, alpha_q=alpha_q)


def det_expansion(t: EigenvalueFunction, beta: complex, alpha_q: complex, g: InhomGauge, params: ModelParams) -> tuple[complex, float]:
    """Subset expansion of det C and the sum of the moduli of its terms."""
    xi = params.xi_array
    N = params.N
    th = lambda z: theta1(z, params.theta)  # noqa: E731
    u = _diagonal_factor(t, g, params)
    s = xi.sum() - alpha_q
    total, scale = 0j, 0.0
    for n in range(N + 1):
        lead = (-1) ** n * beta ** (N - n) * th(s - n * params.eta) / th(s)
        for P in combinations(range(N), n):
            prod = 1 + 0j
            for a in range(N):
                if a in P:
                    continue
                cross = np.prod([th(xi[a] - xi[b] + params.eta) / th(xi[a] - xi[b]) for b in P]) if P else 1.0
                prod *= u[a] * cross
            term = lead * prod
            total += term
            scale += abs(term)
    return complex(total), scale


def c_matrix_det(t: EigenvalueFunction, beta: complex, alpha_q: complex, g: InhomGauge, params: ModelParams) -> dict:
    """det C by LU and by the subset expansion."""
    direct = lu_det(c_matrix(t, beta, alpha_q, g, params).entries, label="C")
    expansion, scale = det_expansion(t, beta, alpha_q, g, params)
    diff = abs(direct - expansion) / max(abs(direct), abs(expansion), 1e-300)
    return {"direct": direct, "expansion": expansion, "relative": diff, "scale": scale}


def alpha_start(params: ModelParams, k1: int = 0, k2: int = 0) -> complex:
    return complex(params.xi_array.sum() - params.N * params.eta + PI * k1 + PI * params.omega * k2)


def _alpha_newton(t, beta, alpha0, g, params: ModelParams) -> complex:
    _, scale = det_expansion(t, beta, alpha0, g, params)
    scale = max(scale, 1e-300)

    def det(alpha):
        return lu_det(c_matrix(t, beta, alpha, g, params).entries) / scale

    x, ok, it = damped_newton(
        lambda v: np.array([det(v[0])]),
        lambda v: np.array([[complex_derivative(det, v[0])]]),
        np.array([alpha0]),
        tol=1e2 * params.tol,
    )
    if not ok:
        raise NewtonDiverged(f"alpha Newton failed at beta={beta}", abs(det(x[0])))
    logger.debug("beta=%s alpha=%s in %d steps", beta, x[0], it)
    return complex(x[0])


def solve_alpha_branch(
    t: EigenvalueFunction, beta_path, g: InhomGauge, params: ModelParams, alpha0: complex | None = None
) -> np.ndarray:
    """alpha_Q(beta) along beta_path by continuation from beta = 0."""
    path = np.asarray(beta_path, dtype=complex)
    prepended = path.size == 0 or path[0] != 0
    if prepended:
        path = np.concatenate([[0j], path])
    alpha = alpha_start(params) if alpha0 is None else alpha0
    out = [alpha]
    for b0, b1 in zip(path[:-1], path[1:]):
        try:
            for attempt in Retrying(
                stop=stop_after_attempt(5), retry=retry_if_exception_type(NewtonDiverged), reraise=True
            ):
                with attempt:
                    pieces = 2 ** (attempt.retry_state.attempt_number - 1)
                    a = alpha
                    for b in np.linspace(b0, b1, pieces + 1)[1:]:
                        a = _alpha_newton(t, b, a, g, params) if b != 0 else a
            alpha = a
        except NewtonDiverged as exc:
            raise BranchLost(f"lost the alpha branch between beta={b0} and beta={b1}", exc.value) from exc
        out.append(alpha)
    return np.array(out[1:] if prepended else out)


def alpha_derivative_at_zero(t: EigenvalueFunction, g: InhomGauge, params: ModelParams) -> complex:
    """d det C / d alpha at (beta, alpha) = (0, alpha_start)."""
    return complex_derivative(lambda a: lu_det(c_matrix(t, 0.0, a, g, params).entries), alpha_start(params))


def shift_branch(beta: complex, params: ModelParams, radius: float = 0.5) -> tuple[complex, int]:
    """(beta e^{2 i n eta}, n) with |beta e^{2 i n eta}| <= radius when Im eta allows it."""
    im = params.eta.imag
    if abs(beta) <= radius or abs(im) < 1e-12:
        return complex(beta), 0
    n = math.ceil(math.log(abs(beta) / radius) / (2 * abs(im)))
    n = n if im > 0 else -n
    return complex(beta * np.exp(2j * n * params.eta)), n


# -------- Q recovery --------
class InhomReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: Complex
    alpha_q: Complex
    branch_shift: int
    sigma_ratio: float
    residual: float
    node_residual: float


def q_inhom_solve(
    t: EigenvalueFunction,
    beta: complex,
    g: InhomGauge,
    params: ModelParams,
    steps: int = 8,
    radius: float = 0.5,
    null_tol: float = 1e-8,
) -> tuple[QFunction, InhomReport]:
    """Q of order N solving the inhomogeneous equation for the eigenvalue t."""
    g = g.with_beta(beta)
    beta_p, n = shift_branch(beta, params, radius)
    path = np.linspace(0, beta_p, steps + 1)[1:]
    alpha = solve_alpha_branch(t, path, g, params)[-1] + n * PI * params.omega
    mat = c_matrix(t, beta, alpha, g, params).entries
    vec, s = null_vector(mat)
    ratio = float(s[-1] / s[0])
    if ratio > null_tol:
        raise NoNullVector("C has no null vector on the solved branch", ratio)

    xi, eta = params.xi_array, params.eta
    spec = ThetaSpaceSpec(order=params.N, norm=alpha)

    def q_interp(z):
        z = np.asarray(z, dtype=complex)
        out = interpolation_weights(xi, spec, np.atleast_1d(z), params.theta, band=0.0) @ vec
        return out if np.ndim(z) else complex(out[0])

    at_nodes = np.abs(q_interp(xi)), np.abs(q_interp(xi - eta))
    ref = max_norm(vec)
    if np.any(np.maximum(*at_nodes) < params.band * ref):
        raise AdmissibilityFailure("Q vanishes at both xi_j and xi_j - eta", float(np.min(np.maximum(*at_nodes))))

    def dq(z):
        return complex((interpolation_weights_prime(xi, spec, np.atleast_1d(z), params.theta) @ vec)[0])

    roots = locate_roots(q_interp, dq, params.periods, params.N, theta=params.theta)
    gap = alpha - roots.sum()
    if lattice_distance(gap, params.periods) > 1e-6:
        raise RootCountMismatch("root sum differs from the norm off the lattice", lattice_distance(gap, params.periods))
    roots[-1] += gap
    Q = QFunction(variant=ThetaVariant.STD, roots=tuple(roots), params=params, form="inhom")
    sample = xi[int(np.argmax(np.abs(vec)))]
    Q = Q.model_copy(update={"scale": complex(q_interp(sample) / Q(sample))})

    nodes = np.concatenate([xi, xi - eta])
    report = InhomReport(
        beta=beta,
        alpha_q=alpha,
        branch_shift=n,
        sigma_ratio=ratio,
        residual=inhom_residual(Q, t, g, params),
        node_residual=inhom_residual(Q, t, g, params, lam=nodes),
    )
    logger.info("inhom Q: beta=%s alpha=%s residual %.2e", beta, alpha, report.residual)
    return Q, report


def t_from_q_inhom(Q: QFunction, g: InhomGauge, params: ModelParams, tol: float | None = None, seed: int = 23) -> EigenvalueFunction:
    """Eigenvalue read off the inhomogeneous equation, with the numerator checked at the roots of Q."""
    tol = 1e4 * params.tol if tol is None else tol
    zero = EigenvalueFunction(values=tuple([0j] * params.N), params=params)

    def numerator(z):
        _, fa, dq, adf = inhom_terms(Q, zero, g, z, params)
        return fa + dq - adf, np.abs(fa) + np.abs(dq) + np.abs(adf)

    num, scale = numerator(Q.root_array)
    bethe = np.abs(num) / scale
    if np.max(bethe) > tol:
        raise NotEntire("inhomogeneous Bethe equations fail", float(np.max(bethe)))
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-1.5, 1.5, 3 * params.N) + 1j * rng.uniform(-0.3, 0.3, 3 * params.N) * params.omega.imag
    rhs = numerator(lam)[0] / Q(lam)
    values, *_ = np.linalg.lstsq(eigenvalue_weights(lam, params), rhs, rcond=None)
    return EigenvalueFunction(values=tuple(values), params=params)


# -------- Bethe-form eigenstates --------
def _dressing(space: DynamicalSpace, r: int) -> np.ndarray:
    """e^{-iy tau} / theta(tau) on sector r."""
    p = space.params
    tau = t_height(r, space.weights, p)
    return np.exp(-1j * p.y * tau) / theta1(tau, p.theta)


def eigenstate_via_inhom(
    roots,
    g: InhomGauge,
    kappa: complex | None,
    params: ModelParams,
    *,
    system: SovSystem | None = None,
    side: str = "right",
) -> np.ndarray:
    """Dressed D(lambda_a) products on the shifted reference state, as a sector-0 vector."""
    system = system or SovSystem(params)
    space = system.space
    roots = np.asarray(roots, dtype=complex)
    M = len(roots)
    if M != g.M:
        raise ValueError(f"{M} roots for a gauge with M={g.M}")
    f_xi = gauge_f(g, params.xi_array, params)
    ones = np.ones((params.N, 2), dtype=complex)
    weights = np.empty(system.n_spin, dtype=complex)
    for h in range(system.n_spin):
        bits = (h >> np.arange(params.N)) & 1
        weights[h] = np.prod(np.where(bits == 1, f_xi, 1.0)) * system.theta_det(0, h)
    coeffs = separate_coefficients(ones, side, params, kappa) * weights
    if side == "right":
        vec = coeffs @ system.right(-M).vectors
        for k, lam in enumerate(roots):
            r = -M + k
            vec = _dressing(space, r + 1) * (space.operator("D", lam).block(r) @ vec)
    else:
        vec = coeffs @ system.left(M).vectors
        for k, lam in enumerate(roots):
            r = M - k - 1
            vec = (vec @ space.operator("D", lam).block(r)) * _dressing(space, r)
    return vec
