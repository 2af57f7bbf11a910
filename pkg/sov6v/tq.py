# sov6v/tq.py
"""
Homogeneous Baxter equation

    t(lam) Q(lam) = a_xy(lam) Q(lam - eta) + d(lam) Q(lam + eta)

for Q a product of shifted variant theta functions. Q is found as the null
vector of the equation imposed at xi_j and xi_j - eta, with Q parameterised
by its values at N interpolation points of the variant theta space fixed
by the sum rule.
"""

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from sov6v.config import Complex, ModelParams
from sov6v.elliptic import (
    PI,
    ThetaParams,
    ThetaSpaceSpec,
    ThetaVariant,
    in_lattice,
    interpolation_weights,
    interpolation_weights_prime,
    lattice_distance,
    reduce_to_cell,
    theta1,
    theta_variant,
    theta_variant_prime,
    variant_constant,
    variant_periods,
    variant_shift,
)
from sov6v.errors import (
    IndependenceViolation,
    NoNullVector,
    NotEntire,
    RootCountMismatch,
    Sov6vError,
    UnknownVariant,
    ZeroReference,
)
from sov6v.numerics import max_norm, newton_scalar, null_vector
from sov6v.repspace import a_func, a_xy_func, d_func
from sov6v.sovbasis import SovSystem
from sov6v.spectrum import EigenvalueFunction, eigenvalue_weights, separate_coefficients

logger = logging.getLogger(__name__)

_OFFSET_TRIALS = (0.173 + 0.091j, -0.261 + 0.137j, 0.319 - 0.083j)


# -------- Q functions --------
class QFunction(BaseModel):
    """scale * exp(alpha lam) * prod_j theta_X(lam - lambda_j)."""

    model_config = ConfigDict(frozen=True)

    variant: ThetaVariant
    roots: tuple[Complex, ...]
    alpha: Complex = 0j
    scale: Complex = 1 + 0j
    params: ModelParams
    form: str = ""

    @property
    def root_array(self) -> np.ndarray:
        return np.asarray(self.roots, dtype=complex)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        th = theta_variant(self.variant, lam[..., None] - self.root_array, self.params.theta)
        out = self.scale * np.exp(self.alpha * lam) * np.prod(np.atleast_1d(th), axis=-1)
        return out if np.ndim(out) else complex(out)

    def shifted(self, shift: complex, extra_alpha: complex = 0j) -> "QFunction":
        """exp(extra_alpha lam) Q(lam + shift)."""
        return self.model_copy(
            update={
                "roots": tuple(self.root_array - shift),
                "alpha": self.alpha + extra_alpha,
                "scale": self.scale * np.exp(self.alpha * shift),
            }
        )

    def with_roots(self, roots) -> "QFunction":
        return self.model_copy(update={"roots": tuple(complex(r) for r in roots)})


class QForm(BaseModel):
    """One admissible functional form: variant, sum-rule branches and partner."""

    model_config = ConfigDict(frozen=True)

    name: str
    variant: ThetaVariant
    offsets: tuple[Complex, ...]
    alphas: tuple[Complex, ...]
    partner_shift: Complex
    partner_alpha: Complex
    experimental: bool = False


def q_forms(params: ModelParams) -> list[QForm]:
    """Forms matching (x, y); the three (0, 0) forms are experimental."""
    w, eta, N = PI * params.omega, params.eta, params.N
    xy = (params.x, params.y)
    if xy == (0, 1):
        return [QForm(name="01", variant="X0", offsets=(0, PI), alphas=(0, 0), partner_shift=PI, partner_alpha=1j * PI / eta)]
    if xy == (1, 0):
        return [
            QForm(
                name="10",
                variant="Y0",
                offsets=(0, w),
                alphas=(0, -1j),
                partner_shift=w,
                partner_alpha=1j * (N + PI / eta),
            )
        ]
    if xy == (1, 1):
        return [QForm(name="11", variant="XY", offsets=(0, PI), alphas=(0, 0), partner_shift=PI, partner_alpha=1j * PI / eta)]
    half = -0.5j
    return [
        QForm(
            name="00-1",
            variant="X0",
            offsets=(w / 2, w / 2),
            alphas=(half, 1j * PI / eta + half),
            partner_shift=PI,
            partner_alpha=0,
            experimental=True,
        ),
        QForm(
            name="00-2",
            variant="Y0",
            offsets=(PI / 2, PI / 2),
            alphas=(0, 1j * PI / eta),
            partner_shift=w,
            partner_alpha=1j * N,
            experimental=True,
        ),
        QForm(
            name="00-3",
            variant="XY",
            offsets=((PI + w) / 2, (PI + w) / 2),
            alphas=(half, 1j * PI / eta + half),
            partner_shift=PI,
            partner_alpha=0,
            experimental=True,
        ),
    ]


def _form(name: str | None, params: ModelParams) -> QForm:
    forms = q_forms(params)
    if name is None:
        return forms[0]
    for f in forms:
        if f.name == name:
            return f
    raise UnknownVariant(f"form {name!r} does not apply to (x, y) = ({params.x}, {params.y})")


def sum_rule_base(params: ModelParams) -> complex:
    return complex(params.xi_array.sum() - params.N * params.eta / 2)


# -------- residuals --------
def hom_residual(Q: QFunction, t: EigenvalueFunction, lam=None, seed: int = 5) -> float:
    """Relative residual of the homogeneous equation at sample points."""
    p = Q.params
    if lam is None:
        rng = np.random.default_rng(seed)
        lam = rng.uniform(-1.5, 1.5, 12) + 1j * rng.uniform(-0.4, 0.4, 12) * p.omega.imag
    lam = np.asarray(lam, dtype=complex)
    lhs = t(lam) * Q(lam)
    first = a_xy_func(lam, p) * Q(lam - p.eta)
    second = d_func(lam, p) * Q(lam + p.eta)
    scale = np.abs(lhs) + np.abs(first) + np.abs(second)
    return float(np.max(np.abs(lhs - first - second) / scale))


def bethe_residuals(Q: QFunction, params: ModelParams | None = None) -> np.ndarray:
    """|a_xy Q(l - eta) + d Q(l + eta)| at each root, relative to the two terms."""
    p = params or Q.params
    lam = Q.root_array
    first = a_xy_func(lam, p) * Q(lam - p.eta)
    second = d_func(lam, p) * Q(lam + p.eta)
    return np.abs(first + second) / np.maximum(np.abs(first) + np.abs(second), 1e-300)


def sum_rule_check(Q: QFunction, params: ModelParams | None = None) -> tuple[float, int]:
    """(distance of the root sum to the closest sum-rule branch mod the lattice, branch index)."""
    p = params or Q.params
    form = _form(Q.form or None, p)
    periods = variant_periods(form.variant, p.theta)
    total = complex(Q.root_array.sum())
    dists = [lattice_distance(total - sum_rule_base(p) - off, periods) for off in form.offsets]
    k = int(np.argmin(dists))
    return float(dists[k]), k


# -------- linear system --------
def _weights(points, norm, variant, z, params: ModelParams) -> np.ndarray:
    spec = ThetaSpaceSpec(order=params.N, norm=norm, variant=variant)
    return interpolation_weights(points, spec, z, params.theta, band=params.band)


def hom_system(
    t: EigenvalueFunction, form: QForm, branch: int, points: np.ndarray, params: ModelParams
) -> np.ndarray:
    """2N x N matrix acting on the values of the theta part at the interpolation points."""
    xi, eta = params.xi_array, params.eta
    alpha = form.alphas[branch]
    norm = sum_rule_base(params) + form.offsets[branch]
    lam = np.concatenate([xi, xi - eta])
    w0 = _weights(points, norm, form.variant, lam, params)
    wm = _weights(points, norm, form.variant, lam - eta, params)
    wp = _weights(points, norm, form.variant, lam + eta, params)
    rows = (
        t(lam)[:, None] * w0
        - (a_xy_func(lam, params) * np.exp(-alpha * eta))[:, None] * wm
        - (d_func(lam, params) * np.exp(alpha * eta))[:, None] * wp
    )
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _points(form: QForm, branch: int, params: ModelParams) -> np.ndarray:
    norm = sum_rule_base(params) + form.offsets[branch]
    periods = variant_periods(form.variant, params.theta)
    for offset in _OFFSET_TRIALS:
        pts = params.xi_array + offset
        if not in_lattice(norm - pts.sum(), periods, 1e-3):
            return pts
    raise IndependenceViolation("no generic interpolation offset found", norm)


# -------- roots --------
def _grid_minima(vals: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Interior local minima of vals (8 neighbours), best first."""
    inner = vals[1:-1, 1:-1]
    is_min = np.isfinite(inner)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= inner <= vals[1 + di : vals.shape[0] - 1 + di, 1 + dj : vals.shape[1] - 1 + dj]
    order = np.argsort(inner[is_min])
    return z[1:-1, 1:-1][is_min][order]


def locate_roots(
    func,
    deriv,
    periods: tuple[complex, complex],
    count: int,
    *,
    theta: ThetaParams,
    variant=ThetaVariant.STD,
    grid: int = 64,
    max_grid: int = 256,
    tol: float = 1e-13,
) -> np.ndarray:
    """Zeros of an order-`count` variant theta function, reduced to the fundamental cell.

    Roots are found one at a time by Newton from the grid minima of log|f|,
    each found root divided out with theta_X(z - root) before the next
    search. The grid is doubled whenever no start converges.
    """
    p1, p2 = complex(periods[0]), complex(periods[1])
    cell_scale = max(abs(p1), abs(p2))
    roots: list[complex] = []

    def divided(z):
        """(prod_k theta_X(z - r_k), sum_k theta_X'/theta_X (z - r_k))."""
        z = np.asarray(z, dtype=complex)
        if not roots:
            return np.ones(z.shape, dtype=complex), np.zeros(z.shape, dtype=complex)
        u = z[..., None] - np.asarray(roots, dtype=complex)
        th = theta_variant(variant, u, theta)
        return np.prod(th, axis=-1), np.sum(theta_variant_prime(variant, u, theta) / th, axis=-1)

    def value(u):
        return complex(func(u))

    def slope(u):
        # derivative of f / prod, up to the common factor 1 / prod
        return complex(deriv(u)) - value(u) * complex(divided(u)[1])

    n = grid
    while len(roots) < count and n <= max_grid:
        ticks = (np.arange(-2, n + 2) + 0.5) / n
        a, b = np.meshgrid(ticks, ticks, indexing="ij")
        z = a * p1 + b * p2
        log_f = np.log(np.abs(func(z.ravel())).reshape(z.shape) + 1e-300)
        while len(roots) < count:
            vals = log_f - np.log(np.abs(divided(z)[0]) + 1e-300)
            for z0 in _grid_minima(vals, z)[: 8 * count]:
                root, ok = newton_scalar(value, slope, z0, tol=tol)
                if not ok or not np.isfinite(root):
                    continue
                root = reduce_to_cell(root, periods)[0]
                if any(in_lattice(root - r, periods, 1e-7 * cell_scale) for r in roots):
                    continue
                roots.append(root)
                break
            else:
                break
        if len(roots) < count:
            logger.debug("root search: %d of %d on a %d grid, refining", len(roots), count, n)
            n *= 2
    if len(roots) != count:
        raise RootCountMismatch(f"found {len(roots)} roots, expected {count}", len(roots))
    # polish against the undivided function
    polished = []
    for r in roots:
        root, ok = newton_scalar(value, lambda u: complex(deriv(u)), r, tol=tol, max_iter=8)
        polished.append(root if ok and abs(root - r) < 1e-6 * cell_scale else r)
    return np.array(polished)


class QSolveReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    form: str
    branch: int
    singular_values: tuple[float, ...]
    hom_residual: float
    bethe_max: float


def q_solve_homogeneous(
    t: EigenvalueFunction,
    params: ModelParams | None = None,
    form: str | None = None,
    null_tol: float = 1e-8,
) -> tuple[QFunction, QSolveReport]:
    """Q for the eigenvalue t in the form matching (x, y)."""
    p = params or t.params
    qf = _form(form, p)
    if qf.experimental or p.N % 2:
        logger.warning("Q-solve for N=%d, (x,y)=(%d,%d), form %s is outside the proven regime", p.N, p.x, p.y, qf.name)
    trials = []
    for branch in range(len(qf.offsets)):
        pts = _points(qf, branch, p)
        vec, s = null_vector(hom_system(t, qf, branch, pts, p))
        trials.append((s[-1] / s[0], branch, pts, vec, s))
        logger.debug("form %s branch %d: sigma_min/sigma_max = %.3e", qf.name, branch, s[-1] / s[0])
    ratio, branch, pts, vec, s = min(trials, key=lambda item: item[0])
    if ratio > null_tol:
        raise NoNullVector(f"no null vector for form {qf.name}", ratio)

    norm = sum_rule_base(p) + qf.offsets[branch]
    spec = ThetaSpaceSpec(order=p.N, norm=norm, variant=qf.variant)
    periods = variant_periods(qf.variant, p.theta)

    def g(z):
        return interpolation_weights(pts, spec, np.atleast_1d(z), p.theta, band=0.0) @ vec

    def dg(z):
        return interpolation_weights_prime(pts, spec, np.atleast_1d(z), p.theta) @ vec

    roots = locate_roots(
        lambda z: g(z) if np.ndim(z) else g(z)[0], lambda z: dg(z)[0], periods, p.N, theta=p.theta, variant=qf.variant
    )
    gap = norm - roots.sum()
    if lattice_distance(gap, periods) > 1e-6:
        raise RootCountMismatch("root sum is off the sum-rule lattice", lattice_distance(gap, periods))
    roots[-1] += gap
    Q = QFunction(variant=qf.variant, roots=tuple(roots), alpha=qf.alphas[branch], params=p, form=qf.name)
    report = QSolveReport(
        form=qf.name,
        branch=branch,
        singular_values=tuple(float(v) for v in s),
        hom_residual=hom_residual(Q, t),
        bethe_max=float(np.max(bethe_residuals(Q))),
    )
    logger.info("Q solved: form %s branch %d, hom residual %.2e", qf.name, branch, report.hom_residual)
    return Q, report


# -------- Q -> t --------
class TFromQReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    bethe_max: float
    fit_residual: float
    periodicity: dict[str, float]


def t_from_q(
    Q: QFunction, params: ModelParams | None = None, tol: float | None = None, seed: int = 9
) -> tuple[EigenvalueFunction, TFromQReport]:
    """Eigenvalue built from Q through the homogeneous equation, with an entireness check."""
    p = params or Q.params
    tol = 1e4 * p.tol if tol is None else tol
    bethe = bethe_residuals(Q, p)
    if np.max(bethe) > tol:
        raise NotEntire("Bethe equations fail at a root of Q", float(np.max(bethe)))
    rng = np.random.default_rng(seed)
    lam = rng.uniform(-1.5, 1.5, 3 * p.N) + 1j * rng.uniform(-0.3, 0.3, 3 * p.N) * p.omega.imag

    def direct(z):
        return (a_xy_func(z, p) * Q(z - p.eta) + d_func(z, p) * Q(z + p.eta)) / Q(z)

    rhs = direct(lam)
    w = eigenvalue_weights(lam, p)
    values, *_ = np.linalg.lstsq(w, rhs, rcond=None)
    t = EigenvalueFunction(values=tuple(values), params=p)
    fit = float(np.max(np.abs(w @ values - rhs)) / max_norm(rhs))
    sample = lam[: min(4, len(lam))]
    here = direct(sample)
    factor = (-np.exp(-2j * sample - 1j * PI * p.omega)) ** p.N * np.exp(
        2j * (p.xi_array.sum() - p.N * p.eta / 2 + p.x * PI / 2)
    )
    periodicity = {
        "pi": float(np.max(np.abs(direct(sample + PI) - (-1) ** (p.N + p.y) * here)) / max_norm(here)),
        "pi*omega": float(np.max(np.abs(direct(sample + PI * p.omega) - factor * here)) / max_norm(factor * here)),
    }
    if fit > tol:
        raise NotEntire("Q does not produce an eigenvalue-shaped function", fit)
    return t, TFromQReport(bethe_max=float(np.max(bethe)), fit_residual=fit, periodicity=periodicity)


# -------- Wronskians --------
def _sample(params: ModelParams, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.5, 1.5, count) + 1j * rng.uniform(-0.3, 0.3, count) * params.omega.imag


def w1(Q: QFunction, lam):
    p = Q.params
    return Q(lam + PI) * Q(lam - p.eta) - (-1) ** p.y * Q(lam + PI - p.eta) * Q(lam)


def w2(Q: QFunction, lam):
    p = Q.params
    w = PI * p.omega
    return Q(lam + w) * Q(lam - p.eta) - (-1) ** p.x * np.exp(-1j * p.N * p.eta) * Q(lam + w - p.eta) * Q(lam)


class WronskianReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    w1_relation: float
    w2_relation: float
    w1_zero: bool
    w2_zero: bool
    w1_spread: float | None = None
    w2_spread: float | None = None


def _spread(values: np.ndarray) -> float:
    ref = values[0]
    return float(np.max(np.abs(values - ref)) / max(abs(ref), 1e-300))


def wronskian_checks(Q: QFunction, params: ModelParams | None = None, seed: int = 13, zero_tol: float = 1e-9) -> WronskianReport:
    """Both W relations at random points, which W vanishes, and the constancy of W/(e^{a lam} d)."""
    p = params or Q.params
    lam = _sample(p, 20, seed)
    a, d = a_func(lam, p), d_func(lam, p)
    out = {}
    for key, fn, factor, expo in (
        ("w1", w1, (-1) ** (p.x + p.x * p.y), 0j),
        ("w2", w2, (-1) ** (p.y + p.x * p.y) * np.exp(-1j * p.N * p.eta), -1j * p.N),
    ):
        here, ahead = fn(Q, lam), fn(Q, lam + p.eta)
        ref = np.abs(Q(lam + PI) * Q(lam - p.eta)) + np.abs(Q(lam + PI * p.omega) * Q(lam - p.eta))
        zero = bool(np.max(np.abs(here) / ref) < zero_tol)
        scale = np.abs(d * ahead) + np.abs(factor * a * here) + 1e-300
        out[f"{key}_relation"] = 0.0 if zero else float(np.max(np.abs(d * ahead - factor * a * here) / scale))
        out[f"{key}_zero"] = zero
        out[f"{key}_spread"] = None if zero else _spread(here / (np.exp(expo * lam) * d))
    return WronskianReport(**out)


class QuantumWronskian(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    classification: Literal["identically-zero", "proportional-to-d"]
    relation_residual: float
    ratio_residual: float


def quantum_wronskian_value(Q1: QFunction, Q2: QFunction, lam):
    eta = Q1.params.eta
    return Q1(lam - eta) * Q2(lam) - Q1(lam) * Q2(lam - eta)


def quantum_wronskian(
    Q1: QFunction, Q2: QFunction, params: ModelParams | None = None, seed: int = 17, zero_tol: float = 1e-9
) -> QuantumWronskian:
    p = params or Q1.params
    lam = _sample(p, 16, seed)
    w = quantum_wronskian_value(Q1, Q2, lam)
    ahead = quantum_wronskian_value(Q1, Q2, lam + p.eta)
    ref = np.abs(Q1(lam - p.eta) * Q2(lam)) + np.abs(Q1(lam) * Q2(lam - p.eta))
    a, d = a_func(lam, p), d_func(lam, p)
    relation = np.abs(d * ahead - p.sign * a * w) / (np.abs(d * ahead) + np.abs(a * w) + 1e-300)
    if np.max(np.abs(w) / ref) < zero_tol:
        return QuantumWronskian(classification="identically-zero", relation_residual=float(np.max(relation)), ratio_residual=0.0)
    f12 = w / d
    f12_ahead = ahead / d_func(lam + p.eta, p)
    ratio = np.abs(f12_ahead - p.sign * f12) / (np.abs(f12) + 1e-300)
    return QuantumWronskian(
        classification="proportional-to-d", relation_residual=float(np.max(relation)), ratio_residual=float(np.max(ratio))
    )


# -------- related solutions --------
def partner(Q: QFunction) -> QFunction:
    """The independent second solution of the same form."""
    qf = _form(Q.form or None, Q.params)
    return Q.shifted(qf.partner_shift, qf.partner_alpha)


def dependent_partner(Q: QFunction, k: int = 1) -> QFunction:
    """exp(2 pi i k lam / eta) Q, with zero quantum Wronskian against Q."""
    return Q.shifted(0j, 2j * PI * k / Q.params.eta)


def shifted_family(Q: QFunction) -> dict[str, QFunction]:
    """Solutions obtained from Q by period shifts and exponential dressing."""
    p = Q.params
    w, N, eta = PI * p.omega, p.N, p.eta
    out = {}
    for sgn, tag in ((1, "+"), (-1, "-")):
        out[f"pi{tag}"] = Q.shifted(PI, sgn * 1j * PI * p.y / eta)
        out[f"pi*omega{tag}"] = Q.shifted(w, 1j * (N + sgn * PI * p.x / eta))
    if p.x == p.y == 1:
        for e1 in (1, -1):
            for e2 in (1, -1):
                out[f"pi+pi*omega{e1:+d}{e2:+d}"] = Q.shifted(PI + w, 1j * (N + (e1 + e2) * PI / eta))
    return out


# -------- Bethe-form eigenstates --------
def dbeta_eigenvalue(lam, h: int, beta: np.ndarray, variant, params: ModelParams) -> complex:
    """Eigenvalue of D_beta(lam) on the SOV state labelled h."""
    N = params.N
    bits = (h >> np.arange(N)) & 1
    xi_h = params.xi_array - params.eta * bits
    c = variant_constant(variant, params.theta)
    shift = variant_shift(variant, params.theta)
    y_zero = ThetaVariant(variant) is ThetaVariant.Y0
    phase = 1j * PI * (params.x + params.y - params.x * params.y) * bits / N
    if y_zero:
        phase = phase + 1j * (lam - xi_h)
    pref = np.where(beta == 1, c * np.exp(phase), 1.0)
    return complex(np.prod(pref * theta_variant(variant, lam - xi_h + beta * shift, params.theta)))


def dbeta_product_residual(lam, beta, params: ModelParams, variant=None) -> float:
    """D_beta(lam) D_{1-beta}(lam) against e^{i pi (x+y-xy) |h| / N} prod theta(lam - xi_n^(h_n))."""
    variant = variant or q_forms(params)[0].variant
    beta = np.asarray(beta, dtype=int)
    worst = 0.0
    for h in range(1 << params.N):
        bits = (h >> np.arange(params.N)) & 1
        lhs = dbeta_eigenvalue(lam, h, beta, variant, params) * dbeta_eigenvalue(lam, h, 1 - beta, variant, params)
        rhs = np.exp(1j * PI * (params.x + params.y - params.x * params.y) * bits.sum() / params.N) * np.prod(
            theta1(lam - params.xi_array + params.eta * bits, params.theta)
        )
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return float(worst)


def eigenstate_via_dbeta(
    roots,
    beta,
    kappa: complex | None,
    params: ModelParams,
    *,
    system: SovSystem | None = None,
    side: Literal["left", "right"] = "right",
    variant=None,
    alpha: complex = 0j,
) -> np.ndarray:
    """prod_j D_beta(lambda_j) applied to the reference state, in the canonical r = 0 basis."""
    system = system or SovSystem(params)
    variant = variant or q_forms(params)[0].variant
    beta = np.asarray(beta, dtype=int)
    roots = np.asarray(roots, dtype=complex)
    diag = np.array(
        [np.prod([dbeta_eigenvalue(r, h, beta, variant, params) for r in roots]) for h in range(system.n_spin)]
    )
    # largest factor over h_n for every (root, site) pair
    shift = variant_shift(variant, params.theta)
    typical = 1.0
    for r in roots:
        for n, xi in enumerate(params.xi_array):
            z = r - xi + beta[n] * shift
            typical *= max(abs(theta_variant(variant, z, params.theta)), abs(theta_variant(variant, z + params.eta, params.theta)))
    if max_norm(diag) < params.band * typical:
        raise ZeroReference("D_beta product annihilates the reference state", max_norm(diag) / typical)
    # exp(alpha lam) factor of Q, taken at every xi_n^(h_n)
    bits = (np.arange(system.n_spin)[:, None] >> np.arange(params.N)) & 1
    diag = diag * np.exp(alpha * (params.xi_array - params.eta * bits).sum(axis=1))
    ones = np.ones((params.N, 2), dtype=complex)
    dets = np.array([system.theta_det(0, h) for h in range(system.n_spin)])
    coeffs = separate_coefficients(ones, side, params, kappa) * dets * diag
    basis = system.left(0) if side == "left" else system.right(0)
    return coeffs @ basis.vectors


def odd_form_statistics(spectrum: list[EigenvalueFunction], params: ModelParams) -> dict[str, dict[str, int]]:
    """Success counts of the experimental (0, 0) forms over a spectrum."""
    stats: dict[str, dict[str, int]] = {}
    for qf in q_forms(params):
        ok = fail = 0
        for t in spectrum:
            try:
                q_solve_homogeneous(t, params, form=qf.name)
                ok += 1
            except Sov6vError as exc:
                logger.info("form %s failed: %s", qf.name, exc)
                fail += 1
        stats[qf.name] = {"solved": ok, "failed": fail}
    return stats


def q_values_at_nodes(Q: QFunction) -> np.ndarray:
    """(Q(xi_a), Q(xi_a - eta)) as an N x 2 table."""
    p = Q.params
    return np.stack([Q(p.xi_array), Q(p.xi_array - p.eta)], axis=1)


def admissible(Q: QFunction, tol: float | None = None) -> bool:
    """Some period shift keeps (Q(xi_n + s), Q(xi_n + s - eta)) away from (0, 0) at every n."""
    p = Q.params
    tol = p.band if tol is None else tol
    shifts = [0, PI, PI * p.omega, PI + PI * p.omega]
    ref = max(abs(Q(p.xi_array[0] + 0.37)), 1e-300)
    for xi in p.xi_array:
        if not any(max(abs(Q(xi + s)), abs(Q(xi + s - p.eta))) > tol * ref for s in shifts):
            return False
    return True

