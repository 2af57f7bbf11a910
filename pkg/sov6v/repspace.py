# sov6v/repspace.py
"""
Dense construction of the dynamical 6-vertex algebra on a truncated height window.

Canonical states are labelled (r, h): h is an N-bit spin word (bit n-1 is site n,
0 = up) and the height is t_{r,h} = t00 + eta (r + |h|). The window keeps
r in [-R, R]; states are ordered sector-major, then by h. Operators are
dense matrices acting on column vectors (kets); bras use the same matrices
from the right.
"""

import logging
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict

from sov6v.config import ModelParams
from sov6v.elliptic import PI, ThetaParams, in_lattice, lattice_distance, theta1
from sov6v.errors import PoleAtHeight, WindowOverflow
from sov6v.numerics import max_norm, scaled_residual

logger = logging.getLogger(__name__)

# height offset applied before the static monodromy, and the resulting r shift
_OFFSETS = {
    "A": (-1, -1),
    "B": (1, 0),
    "C": (-1, 0),
    "D": (1, 1),
    "A_static": (0, 0),
    "B_static": (0, -1),
    "C_static": (0, 1),
    "D_static": (0, 0),
}
_BLOCKS = {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}


# -------- scalar functions --------
def a_func(lam, params: ModelParams):
    """prod_n theta(lam - xi_n + eta)."""
    lam = np.asarray(lam, dtype=complex)
    out = np.prod(theta1(lam[..., None] - params.xi_array + params.eta, params.theta), axis=-1)
    return out if np.ndim(out) else complex(out)


def d_func(lam, params: ModelParams):
    """prod_n theta(lam - xi_n)."""
    return a_func(np.asarray(lam, dtype=complex) - params.eta, params)


def a_xy_func(lam, params: ModelParams):
    return params.sign * a_func(lam, params)


def t_height(r, weight, params: ModelParams):
    """t_{r,h} for a spin word of weight |h|."""
    return params.t00 + params.eta * (np.asarray(r) + np.asarray(weight))


def popcounts(n_bits: int) -> np.ndarray:
    return np.array([bin(h).count("1") for h in range(1 << n_bits)], dtype=int)


class DynSpinIndex(BaseModel):
    """One canonical basis label (h, r)."""

    model_config = ConfigDict(frozen=True)

    h: tuple[int, ...]
    r: int

    @classmethod
    def from_code(cls, code: int, N: int, r: int) -> "DynSpinIndex":
        return cls(h=tuple((code >> n) & 1 for n in range(N)), r=r)

    @property
    def code(self) -> int:
        return sum(b << n for n, b in enumerate(self.h))

    @property
    def weight(self) -> int:
        return sum(self.h)

    def height(self, params: ModelParams) -> complex:
        return complex(t_height(self.r, self.weight, params))

    def s_value(self) -> int:
        return len(self.h) - 2 * self.weight


# -------- R-matrix --------
def _r_entries(lam, t, eta, y, theta: ThetaParams) -> np.ndarray:
    th = lambda z: theta1(z, theta)  # noqa: E731
    out = np.zeros((4, 4), dtype=complex)
    out[0, 0] = out[3, 3] = th(lam + eta)
    ttheta, mtheta = th(t), th(-t)
    out[1, 1] = np.exp(1j * y * eta) * th(lam) * th(t + eta) / ttheta
    out[1, 2] = np.exp(1j * y * lam) * th(eta) * th(t + lam) / ttheta
    out[2, 1] = np.exp(-1j * y * lam) * th(eta) * th(lam - t) / mtheta
    out[2, 2] = np.exp(-1j * y * eta) * th(lam) * th(eta - t) / mtheta
    return out


def r_matrix(lam, t, params: ModelParams, *, y: int | None = None, theta: ThetaParams | None = None) -> np.ndarray:
    """4x4 dynamical R-matrix, index 2*aux + spin."""
    t = complex(t)
    if in_lattice(t, params.periods, params.band):
        raise PoleAtHeight(f"theta(t) vanishes at t={t}", lattice_distance(t, params.periods))
    return _r_entries(
        complex(lam),
        t,
        params.eta,
        params.y if y is None else y,
        params.theta if theta is None else theta,
    )


def permutation4() -> np.ndarray:
    return np.eye(4)[[0, 2, 1, 3]]


def _embed3(lam, t, params, pair, shifted: bool, y=None) -> np.ndarray:
    """R_{ij} on V1 (x) V2 (x) V3, height shifted by eta*sigma^z of the third space."""
    i, j = pair
    k = ({0, 1, 2} - {i, j}).pop()
    mats = {}
    for hk in (0, 1):
        tt = t + params.eta * (1 - 2 * hk) if shifted else t
        mats[hk] = r_matrix(lam, tt, params, y=y)
    out = np.zeros((8, 8), dtype=complex)
    bits = lambda idx: ((idx >> 2) & 1, (idx >> 1) & 1, idx & 1)  # noqa: E731
    for row in range(8):
        rb = bits(row)
        for col in range(8):
            cb = bits(col)
            if rb[k] != cb[k]:
                continue
            out[row, col] = mats[cb[k]][2 * rb[i] + rb[j], 2 * cb[i] + cb[j]]
    return out


def dybe_residual(l1, l2, l3, t, params: ModelParams, *, y: int | None = None) -> float:
    """Relative max-norm of LHS - RHS of the dynamical Yang-Baxter equation."""
    l12, l13, l23 = l1 - l2, l1 - l3, l2 - l3
    lhs = (
        _embed3(l12, t, params, (0, 1), True, y)
        @ _embed3(l13, t, params, (0, 2), False, y)
        @ _embed3(l23, t, params, (1, 2), True, y)
    )
    rhs = (
        _embed3(l23, t, params, (1, 2), False, y)
        @ _embed3(l13, t, params, (0, 2), True, y)
        @ _embed3(l12, t, params, (0, 1), False, y)
    )
    return scaled_residual(lhs, rhs)


def _gauge(lam, t) -> np.ndarray:
    return np.exp(-0.5j * t) * np.array([np.exp(0.5j * lam), np.exp(-0.5j * lam)])


def gauge_y1_check(lam1, lam2, t, params: ModelParams) -> float:
    """Distance between R at y=1 and the diagonal gauge transform of R at y=0."""
    eta = params.eta
    lam = lam1 - lam2
    base = r_matrix(lam, t, params, y=0)
    target = r_matrix(lam, t, params, y=1)
    dressed = np.zeros((4, 4), dtype=complex)
    for row in range(4):
        ao, ho = row >> 1, row & 1
        left = _gauge(lam2, t)[ho] * _gauge(lam1, t + eta * (1 - 2 * ho))[ao]
        for col in range(4):
            ai, hi = col >> 1, col & 1
            right = _gauge(lam2, t + eta * (1 - 2 * ai))[hi] * _gauge(lam1, t)[ai]
            dressed[row, col] = left * base[row, col] / right
    return scaled_residual(target, dressed)


def trig_limit_deviation(lam, t_tilde, eta, y: int, omega: complex = 4j) -> float:
    """Largest gap between the elliptic weight ratios and their trigonometric limit."""
    theta = ThetaParams(omega=omega)
    t = t_tilde + y * PI * omega / 2
    R = _r_entries(lam, t, eta, y, theta)
    a = R[0, 0]
    s = np.sin
    if y == 1:
        expected = {
            (1, 1): s(lam) / s(lam + eta),
            (2, 2): s(lam) / s(lam + eta),
            (1, 2): s(eta) / s(lam + eta),
            (2, 1): s(eta) / s(lam + eta),
        }
    else:
        expected = {
            (1, 1): s(lam) * s(t + eta) / (s(t) * s(lam + eta)),
            (2, 2): s(lam) * s(eta - t) / (s(-t) * s(lam + eta)),
            (1, 2): s(eta) * s(t + lam) / (s(t) * s(lam + eta)),
            (2, 1): s(eta) * s(lam - t) / (s(-t) * s(lam + eta)),
        }
    gap = max(abs(R[key] / a - value) for key, value in expected.items())
    logger.debug("trig limit y=%d omega=%s gap=%.3e", y, omega, gap)
    return float(gap)


def zero_weight_residual(lam, t, params: ModelParams) -> float:
    """Conjugating R by the height shifts of both auxiliary spins leaves it invariant."""
    base = r_matrix(lam, t, params)
    sig = lambda idx: (1 - 2 * (idx >> 1)) + (1 - 2 * (idx & 1))  # noqa: E731
    conj = np.zeros((4, 4), dtype=complex)
    leak = 0.0
    for col in range(4):
        shifted = r_matrix(lam, t - params.eta * sig(col), params)
        for row in range(4):
            if sig(row) == sig(col):
                conj[row, col] = shifted[row, col]
            else:
                leak = max(leak, abs(shifted[row, col]))
    scale = max(max_norm(base), 1e-300)
    return max(scaled_residual(conj, base), leak / scale)


# -------- window operators --------
class SectorOperator(BaseModel):
    """Dense operator on the window, mapping sector r to r + r_shift."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    matrix: np.ndarray
    r_shift: int
    R: int
    n_spin: int

    def _sector(self, r: int) -> slice:
        if abs(r) > self.R:
            raise WindowOverflow(f"{self.name}: sector {r} outside [-{self.R}, {self.R}]", r)
        start = (r + self.R) * self.n_spin
        return slice(start, start + self.n_spin)

    def block(self, r: int) -> np.ndarray:
        """Map from sector r to sector r + r_shift."""
        return self.matrix[self._sector(r + self.r_shift), self._sector(r)]

    def scaled(self, factor: complex, name: str | None = None) -> "SectorOperator":
        return self.model_copy(update={"matrix": factor * self.matrix, "name": name or self.name})

    @property
    def valid_window(self) -> tuple[int, int]:
        lo, hi = -self.R, self.R
        return (max(lo, lo - self.r_shift), min(hi, hi - self.r_shift))


class DynamicalSpace:
    """The truncated space (spins x heights) of one chain, with cached monodromies."""

    def __init__(self, params: ModelParams, window: int | None = None, cache_size: int = 512):
        self.params = params
        self.N = params.N
        self.R = params.R if window is None else window
        self.n_spin = 1 << self.N
        self.n_sectors = 2 * self.R + 1
        self.dim = self.n_sectors * self.n_spin
        self.weights = popcounts(self.N)
        self.r_of = np.repeat(np.arange(-self.R, self.R + 1), self.n_spin)
        self.h_of = np.tile(np.arange(self.n_spin), self.n_sectors)
        self.w_of = self.weights[self.h_of]
        self._static = lru_cache(maxsize=cache_size)(self._build_static)

    # -------- labels --------
    def index(self, r: int, h: int) -> int:
        if abs(r) > self.R:
            raise WindowOverflow(f"sector {r} outside [-{self.R}, {self.R}]", r)
        return (r + self.R) * self.n_spin + h

    def sector(self, r: int) -> slice:
        start = self.index(r, 0)
        return slice(start, start + self.n_spin)

    def interior(self, margin: int) -> np.ndarray:
        return np.flatnonzero(np.abs(self.r_of) <= self.R - margin)

    @property
    def tau(self) -> np.ndarray:
        return t_height(self.r_of, self.w_of, self.params)

    @property
    def spin_total(self) -> np.ndarray:
        return self.N - 2 * self.w_of

    @property
    def s_tau(self) -> np.ndarray:
        """Eigenvalues of eta*S + 2*tau: 2 r eta + x pi + y pi omega."""
        return self.params.eta * self.spin_total + 2 * self.tau

    def qdet_prefactor(self) -> np.ndarray:
        """e^{i y eta S} theta(tau + eta S) / theta(tau), per state."""
        p = self.params
        tau, S = self.tau, self.spin_total
        return np.exp(1j * p.y * p.eta * S) * theta1(tau + p.eta * S, p.theta) / theta1(tau, p.theta)

    def reference_left(self, r: int) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index(r, 0)] = 1.0
        return vec

    def reference_right(self, r: int) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index(r, self.n_spin - 1)] = 1.0
        return vec

    # -------- static monodromy --------
    def static_monodromy(self, lam, m: int) -> np.ndarray:
        """M(lam | t00 + m eta) on aux (x) spins, aux most significant."""
        return self._static(complex(lam), int(m))

    def _build_static(self, lam: complex, m: int) -> np.ndarray:
        p = self.params
        t = p.t00 + p.eta * m
        n_h = self.n_spin
        hs = np.arange(n_h)
        total = np.eye(2 * n_h, dtype=complex)
        for n in range(1, self.N + 1):
            bit = 1 << (n - 1)
            partial = self.weights[hs & (bit - 1)]
            rs = np.stack([r_matrix(lam - p.xi[n - 1], t + p.eta * (n - 1 - 2 * k), p) for k in range(n)])
            hn = (hs >> (n - 1)) & 1
            base = hs & ~bit
            factor = np.zeros((2 * n_h, 2 * n_h), dtype=complex)
            for a in (0, 1):
                for ao in (0, 1):
                    for bo in (0, 1):
                        factor[ao * n_h + (base | (bo << (n - 1))), a * n_h + hs] = rs[
                            partial, 2 * ao + bo, 2 * a + hn
                        ]
            total = factor @ total
        logger.debug("static monodromy lam=%s m=%d", lam, m)
        return total

    def static_block(self, which: str, lam, m: int) -> np.ndarray:
        a, b = _BLOCKS[which[0]]
        n_h = self.n_spin
        return self.static_monodromy(lam, m)[a * n_h : (a + 1) * n_h, b * n_h : (b + 1) * n_h]

    # -------- calligraphic operators --------
    def operator(self, which: str, lam) -> SectorOperator:
        """A, B, C, D (with height shifts) or their static versions on the window."""
        if which not in _OFFSETS:
            raise ValueError(f"unknown monodromy entry {which!r}")
        offset, shift = _OFFSETS[which]
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        n_h = self.n_spin
        hs = np.arange(n_h)
        for r in range(-self.R, self.R + 1):
            for w in np.unique(self.weights):
                m = r + int(w) + offset
                block = self.static_block(which, lam, m)
                inputs = hs[self.weights == w]
                r_out = m - self.weights
                keep = np.abs(r_out) <= self.R
                rows = (r_out[keep] + self.R) * n_h + hs[keep]
                cols = (r + self.R) * n_h + inputs
                mat[np.ix_(rows, cols)] = block[np.ix_(hs[keep], inputs)]
        return SectorOperator(name=which, matrix=mat, r_shift=shift, R=self.R, n_spin=n_h)

    def monodromy(self, lam) -> dict[tuple[int, int], np.ndarray]:
        return {ij: self.operator(w, lam).matrix for w, ij in _BLOCKS.items()}

    def antiperiodic_monodromy(self, lam, kappa: complex | None = None) -> dict[tuple[int, int], SectorOperator]:
        """X^(kappa) sigma^x M(lam): [[k C, k D], [A/k, B/k]]."""
        kappa = self.params.kappa if kappa is None else kappa
        return {
            (0, 0): self.operator("C", lam).scaled(kappa, "kC"),
            (0, 1): self.operator("D", lam).scaled(kappa, "kD"),
            (1, 0): self.operator("A", lam).scaled(1 / kappa, "A/k"),
            (1, 1): self.operator("B", lam).scaled(1 / kappa, "B/k"),
        }

    def transfer(self, lam, kappa: complex | None = None) -> SectorOperator:
        kappa = self.params.kappa if kappa is None else kappa
        b = self.operator("B", lam)
        c = self.operator("C", lam)
        return b.model_copy(update={"matrix": b.matrix / kappa + kappa * c.matrix, "name": "T"})

    def transfer_block(self, lam, r: int = 0, kappa: complex | None = None) -> np.ndarray:
        return self.transfer(lam, kappa).block(r)

    def r_per_state(self, lam, heights: np.ndarray) -> np.ndarray:
        """R(lam | height_s) for each state s, shape (dim, 4, 4)."""
        heights = np.asarray(heights, dtype=complex)
        uniq, inverse = np.unique(heights, return_inverse=True)
        mats = np.stack([r_matrix(lam, h, self.params) for h in uniq])
        return mats[inverse.ravel()]


def build_monodromy_entry(which: str, lam, params: ModelParams, window: int | None = None) -> SectorOperator:
    return DynamicalSpace(params, window).operator(which, lam)


def build_antiperiodic_transfer(lam, params: ModelParams, space: DynamicalSpace | None = None) -> np.ndarray:
    """kappa^{-1} B(lam) + kappa C(lam) on the r = 0 sector."""
    space = space or DynamicalSpace(params)
    return space.transfer_block(lam, 0)


def antiperiodic_monodromy(lam, params: ModelParams, space: DynamicalSpace | None = None):
    space = space or DynamicalSpace(params)
    return space.antiperiodic_monodromy(lam)


def monodromy_by_products(lam, space: DynamicalSpace) -> dict[str, np.ndarray]:
    """A, B, C, D built as products of R-factors on spins (x) heights (x) aux.

    Heights are labelled by m (tau = t00 + m eta) instead of r, so this shares
    no bookkeeping with DynamicalSpace.operator.
    """
    p = space.params
    N, n_h, R = space.N, space.n_spin, space.R
    ms = np.arange(-R - 1, R + N + 2)
    dim = n_h * len(ms)
    tau = p.t00 + p.eta * np.repeat(ms, n_h)
    hs = np.tile(np.arange(n_h), len(ms))
    states = np.arange(dim)
    total = np.eye(2 * dim, dtype=complex)
    for n in range(N):
        arg = tau + p.eta * sum((1 - 2 * ((hs >> a) & 1) for a in range(n)), np.zeros(dim))
        rs = space.r_per_state(lam - p.xi[n], arg)
        bit = (hs >> n) & 1
        factor = np.zeros((2 * dim, 2 * dim), dtype=complex)
        for a in (0, 1):
            for ao in (0, 1):
                for bo in (0, 1):
                    target = states - (bit << n) + (bo << n)
                    factor[ao * dim + target, a * dim + states] = rs[states, 2 * ao + bo, 2 * a + bit]
        total = factor @ total
    # T^{sigma_0^z}: aux up lowers m by one, aux down raises it
    shift = np.zeros((2 * dim, 2 * dim))
    for a, step in ((0, -1), (1, 1)):
        src = states[(states // n_h + step >= 0) & (states // n_h + step < len(ms))]
        shift[a * dim + src + step * n_h, a * dim + src] = 1.0
    full = total @ shift
    # re-index (m, h) -> window (r, h)
    r_vals = np.repeat(ms, n_h) - space.weights[hs]
    inside = np.abs(r_vals) <= R
    window_idx = (r_vals[inside] + R) * n_h + hs[inside]
    out = {}
    for which, (a, b) in _BLOCKS.items():
        blk = full[a * dim : (a + 1) * dim, b * dim : (b + 1) * dim]
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        mat[np.ix_(window_idx, window_idx)] = blk[np.ix_(np.flatnonzero(inside), np.flatnonzero(inside))]
        out[which] = mat
    return out


# -------- algebra checks --------
def _exchange_residual(space: DynamicalSpace, first, second, lam_diff, left_heights, margin: int = 2) -> float:
    """R(lam|left) X0 X0' - X0' X0 R(lam|tau) on interior columns."""
    left_r = space.r_per_state(lam_diff, left_heights)
    right_r = space.r_per_state(lam_diff, space.tau)
    cols = space.interior(margin)
    lhs_all, rhs_all = [], []
    for a in (0, 1):
        for a2 in (0, 1):
            for b in (0, 1):
                for b2 in (0, 1):
                    lhs = np.zeros((space.dim, len(cols)), dtype=complex)
                    rhs = np.zeros((space.dim, len(cols)), dtype=complex)
                    for c in (0, 1):
                        for c2 in (0, 1):
                            lhs += left_r[:, 2 * a + a2, 2 * c + c2][:, None] * (
                                first[c, b] @ second[c2, b2][:, cols]
                            )
                            rhs += (second[a2, c2] @ first[a, c][:, cols]) * right_r[cols, 2 * c + c2, 2 * b + b2][
                                None, :
                            ]
                    lhs_all.append(lhs)
                    rhs_all.append(rhs)
    return scaled_residual(np.stack(lhs_all), np.stack(rhs_all))


def rtt_residual(lam0, lam1, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    space = space or DynamicalSpace(params)
    first, second = space.monodromy(lam0), space.monodromy(lam1)
    heights = space.tau + params.eta * space.spin_total
    return _exchange_residual(space, first, second, lam0 - lam1, heights)


def exchange_residual(lam0, lam1, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """Quadratic relation of the twisted antiperiodic monodromy."""
    space = space or DynamicalSpace(params)
    first = {k: v.matrix for k, v in space.antiperiodic_monodromy(lam0).items()}
    second = {k: v.matrix for k, v in space.antiperiodic_monodromy(lam1).items()}
    heights = -space.tau - params.eta * space.spin_total + params.y * PI * params.omega
    return _exchange_residual(space, first, second, lam0 - lam1, heights)


def quantum_det_residuals(lam, params: ModelParams, space: DynamicalSpace | None = None) -> dict[str, float]:
    """Both orderings of the quantum determinant and the inversion relation."""
    space = space or DynamicalSpace(params)
    eta = params.eta
    A, B, C, D = (space.operator(w, lam).matrix for w in "ABCD")
    cols = space.interior(2)
    Ap, Bp, Cp, Dp = (space.operator(w, lam - eta).matrix[:, cols] for w in "ABCD")
    pref = space.qdet_prefactor()
    target = a_func(lam, params) * d_func(lam - eta, params)
    ident = np.eye(space.dim)[:, cols]
    scale = max(abs(target), 1e-300)

    first = A @ Dp - B @ Cp
    second = D @ Ap - C @ Bp
    off_up = B @ Ap - A @ Bp
    off_down = C @ Dp - D @ Cp
    inv_target = (target / pref)[:, None] * ident
    out = {
        "AD-BC": max_norm(pref[:, None] * first - target * ident) / scale,
        "DA-CB": max_norm(pref[:, None] * second - target * ident) / scale,
        "inversion": max(
            max_norm(first - inv_target),
            max_norm(second - inv_target),
            max_norm(off_up),
            max_norm(off_down),
        )
        / max(max_norm(inv_target), 1e-300),
    }
    logger.debug("quantum determinant residuals at %s: %s", lam, out)
    return out


def quantum_det_check(lam, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    return max(quantum_det_residuals(lam, params, space).values())


def cancellation_residual(n: int, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """max over i, j, k of |M_ij(xi_n) M_ik(xi_n - eta)| relative to the factor norms."""
    space = space or DynamicalSpace(params)
    xi = params.xi[n - 1]
    at = space.monodromy(xi)
    below = space.monodromy(xi - params.eta)
    cols = space.interior(2)
    worst = 0.0
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                prod = at[i, j] @ below[i, k][:, cols]
                scale = max(max_norm(at[i, j]) * max_norm(below[i, k]), 1e-300)
                worst = max(worst, max_norm(prod) / scale)
    return worst


def grading_residual(lam, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """Commutators of S_tau with the sector-preserving entries."""
    space = space or DynamicalSpace(params)
    s_tau = space.s_tau
    worst = 0.0
    for which in ("A_static", "D_static", "B", "C"):
        mat = space.operator(which, lam).matrix
        comm = s_tau[:, None] * mat - mat * s_tau[None, :]
        worst = max(worst, max_norm(comm) / max(max_norm(mat) * max_norm(s_tau), 1e-300))
    return worst


def transfer_commutator(lam1, lam2, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    space = space or DynamicalSpace(params)
    t1 = space.transfer_block(lam1)
    t2 = space.transfer_block(lam2)
    scale = max(max_norm(t1) * max_norm(t2), 1e-300)
    return max_norm(t1 @ t2 - t2 @ t1) / scale


def inversion_at_inhomogeneity(n: int, params: ModelParams, space: DynamicalSpace | None = None) -> float:
    """T(xi_n) T(xi_n - eta) against -a d e^{-iy eta S} theta(tau)/theta(tau + eta S) on r = 0."""
    space = space or DynamicalSpace(params)
    xi = params.xi[n - 1]
    lhs = space.transfer_block(xi) @ space.transfer_block(xi - params.eta)
    diag = 1.0 / space.qdet_prefactor()[space.sector(0)]
    rhs = -a_func(xi, params) * d_func(xi - params.eta, params) * np.diag(diag)
    return scaled_residual(lhs, rhs)
