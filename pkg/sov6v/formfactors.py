# sov6v/formfactors.py
"""
Reconstruction of local operators from the twisted antiperiodic monodromy and
determinant form factors between transfer-matrix eigenstates.

Spin labels: '+' is bit 0 of h, '-' is bit 1. The height shift T_tau^k maps
the canonical state (r, h) to (r - k, h).
"""

import logging
from typing import Literal

import numpy as np
import scipy.linalg as sla
from pydantic import BaseModel, ConfigDict, model_validator

from sov6v.config import Complex, ModelParams
from sov6v.elliptic import theta_basis_matrix
from sov6v.errors import InvalidHeight, SingularPropagator, Sov6vError, ZeroEigenvalueAtInhomogeneity
from sov6v.numerics import lu_det, max_norm, numerical_rank, parallel_map, scaled_residual
from sov6v.repspace import DynamicalSpace, SectorOperator, a_func, a_xy_func, d_func
from sov6v.sovbasis import SovSystem
from sov6v.spectrum import EigenvalueFunction, brute_spectrum, eigenstate_from_values, f_matrix, q_table

logger = logging.getLogger(__name__)

Kind = Literal["++", "--", "+-", "-+", "height"]
_BIT = {"+": 0, "-": 1}


class LocalOperator(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Kind
    site: int
    height: Complex | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "height" and self.height is None:
            raise ValueError("height operators need a height value")
        return self

    def validate_for(self, params: ModelParams) -> None:
        if not 1 <= self.site <= params.N:
            raise ValueError(f"site {self.site} outside [1, {params.N}]")
        if self.kind == "height":
            height_index(self.height, params)


class FormFactorReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    formula: str
    left: int
    right: int
    site: int
    kind: str
    value: Complex
    oracle: Complex
    residual: float
    alternative: Complex | None = None
    branch_residual: float | None = None
    terms: tuple[float, ...] = ()
    passed: bool = False


def height_index(s: complex, params: ModelParams) -> int:
    """k with s = t00 + k eta, 0 <= k <= N."""
    k = (s - params.t00) / params.eta
    kr = int(round(k.real))
    if abs(k - kr) > 1e-9 or not 0 <= kr <= params.N:
        raise InvalidHeight(f"height {s} is not t00 + k eta with 0 <= k <= {params.N}", abs(k - kr))
    return kr


# -------- local operators on the window --------
def spin_matrix(n: int, i: str, j: str, space: DynamicalSpace) -> np.ndarray:
    """E_n^{ij} = |i><j| on site n, keeping the height operator tau fixed."""
    bit_i, bit_j = _BIT[i], _BIT[j]
    mask = 1 << (n - 1)
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    for col in range(space.dim):
        r, h = int(space.r_of[col]), int(space.h_of[col])
        if bool(h & mask) != bool(bit_j):
            continue
        h_new = (h | mask) if bit_i else (h & ~mask)
        r_new = r + int(space.weights[h]) - int(space.weights[h_new])
        if abs(r_new) <= space.R:
            mat[space.index(r_new, h_new), col] = 1.0
    return mat


def site_heights(n: int, space: DynamicalSpace) -> np.ndarray:
    """Height at site n per canonical state: tau + eta * sum_{k<n} sigma_k."""
    bits = (space.h_of[:, None] >> np.arange(n - 1)) & 1
    sigma = (1 - 2 * bits).sum(axis=1)
    return space.tau + space.params.eta * sigma


def height_matrix(n: int, s: complex, space: DynamicalSpace) -> np.ndarray:
    """delta_s at site n, from the recursion over the spins left of n."""
    p = space.params
    k = (site_heights(n, space) - s) / p.eta
    return np.diag((np.abs(k) < 1e-9).astype(complex))


def height_shift(k: int, space: DynamicalSpace) -> np.ndarray:
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    for col in range(space.dim):
        r_new = int(space.r_of[col]) - k
        if abs(r_new) <= space.R:
            mat[space.index(r_new, int(space.h_of[col])), col] = 1.0
    return mat


def local_operator_matrix(op: LocalOperator, params: ModelParams, space: DynamicalSpace | None = None) -> SectorOperator:
    op.validate_for(params)
    space = space or DynamicalSpace(params)
    if op.kind == "height":
        mat, shift = height_matrix(op.site, op.height, space), 0
    else:
        i, j = op.kind
        mat = spin_matrix(op.site, i, j, space)
        shift = _BIT[j] - _BIT[i]
    return SectorOperator(name=f"{op.kind}@{op.site}", matrix=mat, r_shift=shift, R=space.R, n_spin=space.n_spin)


# -------- inverse problem --------
def _transfer_and_inverse(space: DynamicalSpace, lam, kappa) -> tuple[np.ndarray, np.ndarray]:
    t = space.transfer(lam, kappa).matrix
    inv = np.zeros_like(t)
    for r in range(-space.R, space.R + 1):
        sl = space.sector(r)
        block = t[sl, sl]
        if numerical_rank(block, rtol=1e-12) < space.n_spin:
            raise SingularPropagator(f"transfer matrix at {lam} is singular on sector {r}", r)
        inv[sl, sl] = sla.inv(block)
    return t, inv


def _chain(mats: list[np.ndarray], dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    for m in mats:
        out = out @ m
    return out


def qdet_scalar(n: int, params: ModelParams, space: DynamicalSpace | None = None) -> complex:
    """det_q M(xi_n) on the r = 0 sector, where it acts as a number."""
    space = space or DynamicalSpace(params)
    pref = space.qdet_prefactor()[space.sector(0)]
    spread = max_norm(pref - pref[0]) / abs(pref[0])
    if spread > 1e-9:
        logger.warning("quantum determinant prefactor varies on r = 0 by %.2e", spread)
    xi = params.xi[n - 1]
    return complex(a_func(xi, params) * d_func(xi - params.eta, params) / pref[0])


def inverse_problem_residuals(
    n: int, i: str, j: str, params: ModelParams, space: DynamicalSpace | None = None, kappa: complex | None = None
) -> dict[str, float]:
    """E_n^{ij} against its two transfer-matrix reconstructions, on kets of the r = 0 sector."""
    space = space or DynamicalSpace(params)
    kappa = params.kappa if kappa is None else kappa
    dim, eta = space.dim, params.eta
    pairs = [_transfer_and_inverse(space, params.xi[k], kappa) for k in range(n)]
    ts, invs = [p[0] for p in pairs], [p[1] for p in pairs]
    row, col = 1 - _BIT[i], 1 - _BIT[j]
    # (j - i) in units of sigma^z eigenvalues
    shift = height_shift(2 * (_BIT[i] - _BIT[j]), space)
    cols = space.sector(0)
    target = spin_matrix(n, i, j, space)[:, cols]

    mono = space.antiperiodic_monodromy(params.xi[n - 1], kappa)
    first = (
        _chain(ts[: n - 1], dim)
        @ mono[_BIT[j], _BIT[i]].matrix
        @ _chain(invs[::-1], dim)
        @ shift
    )[:, cols]

    below = space.antiperiodic_monodromy(params.xi[n - 1] - eta, kappa)
    sign = 1.0 if i == j else -1.0
    xi = params.xi[n - 1]
    norm = a_func(xi, params) * d_func(xi - eta, params)
    second = (
        -sign
        * _chain(ts, dim)
        @ (below[row, col].matrix * (space.qdet_prefactor() / norm)[None, :])
        @ _chain(invs[: n - 1][::-1], dim)
        @ shift
    )[:, cols]
    out = {"direct": scaled_residual(first, target), "shifted": scaled_residual(second, target)}
    logger.debug("inverse problem n=%d (%s%s): %s", n, i, j, out)
    return out


def inverse_problem_check(
    n: int, i: str, j: str, params: ModelParams, space: DynamicalSpace | None = None, kappa: complex | None = None
) -> float:
    return max(inverse_problem_residuals(n, i, j, params, space, kappa).values())


def height_reconstruction_residual(n: int, s: complex, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """delta_s^{(n)} against prod T(xi_k) delta_s(tau) prod T(xi_k)^{-1} on r = 0."""
    height_index(s, params)
    space = space or DynamicalSpace(params)
    sl = space.sector(0)
    ts, invs = [], []
    for k in range(n - 1):
        t, inv = _transfer_and_inverse(space, params.xi[k], params.kappa)
        ts.append(t[sl, sl])
        invs.append(inv[sl, sl])
    site1 = height_matrix(1, s, space)[sl, sl]
    rebuilt = _chain(ts, space.n_spin) @ site1 @ _chain(invs[::-1], space.n_spin)
    return scaled_residual(rebuilt, height_matrix(n, s, space)[sl, sl])


def trace_inverse_residual(n: int, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """T(xi_n) tr[Mbar(xi_n)^{-1}] = 1 on r = 0, the inverse taken from the adjugate at xi_n - eta."""
    space = space or DynamicalSpace(params)
    kappa, eta = params.kappa, params.eta
    xi = params.xi[n - 1]
    sl = space.sector(0)
    pref = space.qdet_prefactor()[sl]
    norm = a_func(xi, params) * d_func(xi - eta, params)
    b = space.operator("B", xi - eta).block(0)
    c = space.operator("C", xi - eta).block(0)
    trace = -(b / kappa + kappa * c) * (pref / norm)[None, :]
    return scaled_residual(space.transfer_block(xi, 0, kappa) @ trace, np.eye(space.n_spin))


# -------- determinant formulas --------
def _xbar(params: ModelParams) -> complex:
    return (params.xi_array.sum() + params.t00) / params.N


def s_matrix(t: EigenvalueFunction, t_prime: EigenvalueFunction, lam: complex, params: ModelParams | None = None) -> np.ndarray:
    """F_{t,t'} bordered by the a_xy q^(0) q'^(1) column and the -e^{-iy lam} vartheta(lam) row."""
    p = params or t.params
    q, qp = q_table(t, p), q_table(t_prime, p)
    xi, N = p.xi_array, p.N
    out = np.zeros((N + 1, N + 1), dtype=complex)
    out[:N, :N] = f_matrix(q, qp, p)
    out[:N, N] = np.exp(1j * p.y * xi) * a_xy_func(xi, p) * q[:, 0] * qp[:, 1]
    out[N, :N] = -np.exp(-1j * p.y * lam) * theta_basis_matrix([lam - _xbar(p)], N, p.theta)[0]
    return out


def bc_matrix_element_det(
    t: EigenvalueFunction, t_prime: EigenvalueFunction, which: Literal["B", "C"], lam, params: ModelParams | None = None
) -> complex:
    """<Psi_t| B(lam) |Psi_t'> = kappa det S_{t',t}; <Psi_t| C(lam) |Psi_t'> = det S_{t,t'} / kappa."""
    p = params or t.params
    if which == "B":
        return p.kappa * lu_det(s_matrix(t_prime, t, lam, p), label="S")
    return lu_det(s_matrix(t, t_prime, lam, p), label="S") / p.kappa


def _propagators(t: EigenvalueFunction, t_prime: EigenvalueFunction, n: int, params: ModelParams) -> tuple[complex, complex]:
    """prod_{b<n} t / prod_{b<=n} t' and prod_{b<=n} t / prod_{b<n} t'."""
    for f in (t, t_prime):
        small = np.abs(f.array[:n]) < params.band
        if small.any():
            raise ZeroEigenvalueAtInhomogeneity(f"eigenvalue vanishes at xi_{int(np.argmax(small)) + 1}", float(np.min(np.abs(f.array[:n]))))
    tl, tr = t.array[:n], t_prime.array[:n]
    return complex(np.prod(tl[:-1]) / np.prod(tr)), complex(np.prod(tl) / np.prod(tr[:-1]))


def ff_spin_det(
    t: EigenvalueFunction,
    t_prime: EigenvalueFunction,
    n: int,
    kind: Literal["++", "--"],
    which: Literal["first", "second"] = "first",
    params: ModelParams | None = None,
    space: DynamicalSpace | None = None,
) -> complex:
    p = params or t.params
    if kind not in ("++", "--"):
        raise ValueError(f"no determinant formula for E^{kind}")
    lower, upper = _propagators(t, t_prime, n, p)
    xi = p.xi[n - 1]
    if which == "first":
        pair = (t, t_prime) if kind == "++" else (t_prime, t)
        return lower * lu_det(s_matrix(*pair, xi, p), label="S")
    pair = (t_prime, t) if kind == "++" else (t, t_prime)
    return -upper * lu_det(s_matrix(*pair, xi - p.eta, p), label="S") / qdet_scalar(n, p, space)


def height_terms(t: EigenvalueFunction, t_prime: EigenvalueFunction, params: ModelParams | None = None) -> np.ndarray:
    """det Ftilde^{(j)}, j = 0..N."""
    p = params or t.params
    q, qp = q_table(t, p), q_table(t_prime, p)
    xi, eta, N = p.xi_array, p.eta, p.N
    step = np.exp(1j * p.y * eta) * a_xy_func(xi, p) / d_func(xi - eta, p)
    out = np.empty(N + 1, dtype=complex)
    for j in range(N + 1):
        mat = np.zeros((N, N), dtype=complex)
        for h in (0, 1):
            phase = np.exp(2j * np.pi * j * h / (N + 1))
            mat += (phase * step**h * q[:, h] * qp[:, h])[:, None] * theta_basis_matrix(xi - eta * h - _xbar(p), N, p.theta)
        out[j] = lu_det(mat, label=f"Ftilde j={j}")
    return out


def ff_height_det(
    t: EigenvalueFunction, t_prime: EigenvalueFunction, n: int, s: complex, params: ModelParams | None = None, terms=None
) -> complex:
    p = params or t.params
    k = height_index(s, p)
    N = p.N
    terms = height_terms(t, t_prime, p) if terms is None else terms
    phases = np.exp(-2j * np.pi * np.arange(N + 1) * k / (N + 1))
    if n > 1:
        _propagators(t, t_prime, n - 1, p)
    prop = complex(np.prod(t.array[: n - 1]) / np.prod(t_prime.array[: n - 1]))
    return prop * complex(phases @ terms) / (N + 1)


# -------- brute-force cross-check --------
class _Oracle:
    """Left/right eigenvectors and local operator blocks on r = 0."""

    def __init__(self, params: ModelParams, spectrum: list[EigenvalueFunction], system: SovSystem | None = None):
        self.params = params
        self.system = system or SovSystem(params)
        self.space = self.system.space
        self.left = [eigenstate_from_values(t, "left", params, self.system) for t in spectrum]
        self.right = [eigenstate_from_values(t, "right", params, self.system) for t in spectrum]
        self._blocks: dict = {}

    def block(self, op: LocalOperator) -> np.ndarray:
        key = (op.kind, op.site, op.height)
        if key not in self._blocks:
            self._blocks[key] = local_operator_matrix(op, self.params, self.space).block(0)
        return self._blocks[key]

    def element(self, a: int, b: int, op: LocalOperator) -> complex:
        return complex(self.left[a] @ self.block(op) @ self.right[b])


def _relative(value: complex, oracle: complex, scale: float) -> float:
    """Error relative to the larger of the two values, floored at the pair scale."""
    return float(abs(value - oracle) / max(abs(value), abs(oracle), scale, 1e-300))


def ff_crosscheck_suite(
    params: ModelParams, spectrum: list[EigenvalueFunction] | None = None, tol: float = 1e-7
) -> list[FormFactorReport]:
    """Every (t, t', site, kind) form factor against its explicit-vector matrix element."""
    if spectrum is None:
        spectrum = [t for t, _ in brute_spectrum(params)]
    oracle = _Oracle(params, spectrum)
    N = params.N
    heights = [params.t00 + k * params.eta for k in range(N + 1)]

    def pair_reports(ab):
        a, b = ab
        t, tp = spectrum[a], spectrum[b]
        # bound on <a| E |b> for a unit-norm local operator
        scale = float(np.linalg.norm(oracle.left[a]) * np.linalg.norm(oracle.right[b]))
        terms = height_terms(t, tp, params)
        out = []
        for n in range(1, N + 1):
            for kind in ("++", "--"):
                op = LocalOperator(kind=kind, site=n)
                try:
                    first = ff_spin_det(t, tp, n, kind, "first", params, oracle.space)
                    second = ff_spin_det(t, tp, n, kind, "second", params, oracle.space)
                except Sov6vError as exc:
                    logger.warning("form factor (%d,%d) E_%d^%s failed: %s", a, b, n, kind, exc)
                    continue
                ref = oracle.element(a, b, op)
                res = _relative(first, ref, scale)
                out.append(
                    FormFactorReport(
                        formula="ME1" if kind == "++" else "ME2",
                        left=a,
                        right=b,
                        site=n,
                        kind=kind,
                        value=first,
                        oracle=ref,
                        residual=res,
                        alternative=second,
                        branch_residual=_relative(first, second, scale),
                        passed=bool(res < tol),
                    )
                )
            for s in heights:
                op = LocalOperator(kind="height", site=n, height=s)
                value = ff_height_det(t, tp, n, s, params, terms)
                ref = oracle.element(a, b, op)
                res = _relative(value, ref, scale)
                out.append(
                    FormFactorReport(
                        formula="ff-LH",
                        left=a,
                        right=b,
                        site=n,
                        kind=f"height:{height_index(s, params)}",
                        value=value,
                        oracle=ref,
                        residual=res,
                        terms=tuple(float(abs(x)) for x in terms),
                        passed=bool(res < tol),
                    )
                )
        return out

    pairs = [(a, b) for a in range(len(spectrum)) for b in range(len(spectrum))]
    reports = [r for chunk in parallel_map(pair_reports, pairs) for r in chunk]
    failed = sum(not r.passed for r in reports)
    logger.info("form factors: %d checks, %d failed", len(reports), failed)
    return reports


def completeness_residuals(
    t: EigenvalueFunction, t_prime: EigenvalueFunction, n: int, params: ModelParams | None = None, space: DynamicalSpace | None = None
) -> dict[str, float]:
    """Spin and height sums at site n against the scalar-product determinant."""
    p = params or t.params
    terms = height_terms(t, t_prime, p)
    sp = terms[0]
    spin = ff_spin_det(t, t_prime, n, "++", "first", p, space) + ff_spin_det(t, t_prime, n, "--", "first", p, space)
    heights = sum(ff_height_det(t, t_prime, n, p.t00 + k * p.eta, p, terms) for k in range(p.N + 1))
    scale = max(max_norm(terms), 1e-300)
    return {"spin": abs(spin - sp) / scale, "height": abs(heights - sp) / scale}
