# sov6v/sovbasis.py
"""
Left and right SOV bases of one height sector, their operator actions and
scalar products.

Vectors are stored sector-locally: row h of ``SovBasis.vectors`` holds the
2^N components of <r,h| (left) or |h,r> (right) on the canonical states of
sector r. Left states keep the unit reference normalisation; right states
carry one constant fixed so that <0,0|0,0> = 1 / det Theta^(0,0).
"""

import logging
from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from sov6v.config import ModelParams
from sov6v.elliptic import PI, det_constant, det_product_form, theta1, theta_basis_matrix
from sov6v.errors import RankDeficient
from sov6v.numerics import lu_det, max_norm, numerical_rank, scaled_residual
from sov6v.repspace import DynamicalSpace, a_func, d_func, t_height

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]


class SovBasis(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Side
    r: int
    vectors: np.ndarray
    norm_constant: complex = 1.0 + 0j

    def embed(self, space: DynamicalSpace) -> np.ndarray:
        """Rows as full-window vectors."""
        out = np.zeros((len(self.vectors), space.dim), dtype=complex)
        out[:, space.sector(self.r)] = self.vectors
        return out


class SovSystem:
    """Bases, Gram data and closed-form actions for one model."""

    def __init__(self, params: ModelParams, space: DynamicalSpace | None = None):
        self.params = params
        self.space = space or DynamicalSpace(params)
        self.N = params.N
        self.n_spin = 1 << self.N
        self.weights = self.space.weights
        self._left: dict[int, SovBasis] = {}
        self._right: dict[int, SovBasis] = {}
        self._raw_right: dict[int, np.ndarray] = {}

    # -------- label helpers --------
    def bits(self, h: int) -> np.ndarray:
        return (h >> np.arange(self.N)) & 1

    def xi_h(self, h: int) -> np.ndarray:
        """xi_a^{(h_a)} = xi_a - eta h_a."""
        return self.params.xi_array - self.params.eta * self.bits(h)

    def t(self, r: int, h: int) -> complex:
        return complex(t_height(r, self.weights[h], self.params))

    def t_ones(self, r: int) -> complex:
        return complex(t_height(r, self.N, self.params))

    def th(self, z):
        return theta1(z, self.params.theta)

    # -------- construction --------
    def _raw(self, side: Side, r: int) -> np.ndarray:
        p, sp = self.params, self.space
        n_h = self.n_spin
        rows = np.zeros((n_h, n_h), dtype=complex)
        if side == "left":
            rows[0, 0] = 1.0
            blocks = [sp.operator("C", p.xi[n]).block(r) for n in range(self.N)]
            for h in range(1, n_h):
                n = h.bit_length() - 1
                rows[h] = rows[h & ~(1 << n)] @ blocks[n]
        else:
            full = n_h - 1
            rows[full, full] = 1.0
            blocks = [sp.operator("C", p.xi[n] - p.eta).block(r) for n in range(self.N)]
            for h in range(full - 1, -1, -1):
                zeros = full & ~h
                n = (zeros & -zeros).bit_length() - 1
                rows[h] = blocks[n] @ rows[h | (1 << n)]
        return rows

    def _scales(self, side: Side) -> np.ndarray:
        p = self.params
        dvals = np.array([d_func(p.xi[n] - p.eta, p) for n in range(self.N)])
        out = np.empty(self.n_spin, dtype=complex)
        for h in range(self.n_spin):
            mask = self.bits(h) == (1 if side == "left" else 0)
            out[h] = np.prod(dvals[mask])
        return out

    def _normalised(self, side: Side, r: int) -> np.ndarray:
        raw = self._raw(side, r)
        rank = numerical_rank(raw, rtol=1e-9)
        if rank < self.n_spin:
            raise RankDeficient(f"{side} SOV states of sector {r} have rank {rank} < {self.n_spin}", rank)
        return raw / self._scales(side)[:, None]

    def left(self, r: int) -> SovBasis:
        if r not in self._left:
            self._left[r] = SovBasis(side="left", r=r, vectors=self._normalised("left", r))
        return self._left[r]

    @cached_property
    def right_normalisation(self) -> complex:
        """Constant making <0,0|0,0> = 1 / det Theta^(0,0)."""
        raw00 = self.left(0).vectors[0] @ self._unscaled_right(0)[0]
        const = 1.0 / (raw00 * self.theta_det(0, 0))
        logger.debug("right SOV normalisation %s", const)
        return complex(const)

    def _unscaled_right(self, r: int) -> np.ndarray:
        if r not in self._raw_right:
            self._raw_right[r] = self._normalised("right", r)
        return self._raw_right[r]

    def right(self, r: int) -> SovBasis:
        if r not in self._right:
            k = self.right_normalisation
            self._right[r] = SovBasis(side="right", r=r, vectors=k * self._unscaled_right(r), norm_constant=k)
        return self._right[r]

    def basis(self, side: Side, r: int) -> SovBasis:
        return self.left(r) if side == "left" else self.right(r)

    # -------- closed forms --------
    def theta_matrix(self, r: int, h: int) -> np.ndarray:
        p = self.params
        xbar = (p.xi_array.sum() + self.t(r, 0)) / self.N
        return theta_basis_matrix(self.xi_h(h) - xbar, self.N, p.theta)

    def theta_det(self, r: int, h: int) -> complex:
        return lu_det(self.theta_matrix(r, h), label=f"Theta r={r} h={h}")

    def theta_det_identity_residual(self, r: int, h: int) -> float:
        """det Theta against c_N theta(sum of arguments) prod theta(differences)."""
        p = self.params
        xbar = (p.xi_array.sum() + self.t(r, 0)) / self.N
        points = self.xi_h(h) - xbar
        lhs = self.theta_det(r, h)
        rhs = det_constant(self.N, p.theta) * det_product_form(points, p.theta)
        return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)

    def predicted_norm(self, r: int, h: int) -> complex:
        p = self.params
        return complex(
            self.th(self.t_ones(r))
            / self.th(self.t_ones(0))
            * np.exp(-1j * p.y * p.eta * self.weights[h])
            / self.theta_det(r, h)
        )

    def d_coeff(self, r: int, h: int, lam) -> complex:
        """d_{r,h}(lam)."""
        p = self.params
        return complex(
            np.exp(-1j * p.y * p.eta * (self.N - self.weights[h]))
            * self.th(self.t(r, h))
            / self.th(self.t_ones(r))
            * np.prod(self.th(lam - self.xi_h(h)))
        )

    def a_pm(self, sign: int, r: int, h: int, lam) -> complex:
        """a^{(+/-)}_{x,y,r,h}(lam)."""
        p = self.params
        return complex(
            p.sign
            * np.exp(2j * p.y * r * p.eta)
            * self.th(self.t(r, h) + sign * p.eta)
            / self.th(self.t(-r, h) + sign * p.eta)
            * a_func(lam, p)
        )

    def _interp(self, lam, h: int, a: int, height: complex) -> complex:
        """Interpolation weight of node a for the B/C actions."""
        p = self.params
        x = self.xi_h(h)
        others = np.delete(np.arange(self.N), a)
        return complex(
            np.exp(1j * p.y * (x[a] - lam))
            * self.th(height - lam + x[a])
            / self.th(height)
            * np.prod(self.th(lam - x[others]) / self.th(x[a] - x[others]))
        )

    def c_action(self, side: Side, r: int, h: int, lam) -> dict[int, complex]:
        """Coefficients of <r,h|C(lam) (left) or C(lam)|h,r> (right) on neighbouring labels."""
        p = self.params
        out = {}
        bits = self.bits(h)
        for a in range(self.N):
            if side == "left" and bits[a] == 0:
                node = self.d_func_at(p.xi[a] - p.eta)
                out[h | (1 << a)] = self._interp(lam, h, a, self.t(r, h)) * node
            elif side == "right" and bits[a] == 1:
                node = self.d_func_at(p.xi[a] - p.eta)
                out[h & ~(1 << a)] = self._interp(lam, h, a, self.t(r, h)) * node
        return out

    def b_action(self, side: Side, r: int, h: int, lam) -> dict[int, complex]:
        p = self.params
        out = {}
        bits = self.bits(h)
        for a in range(self.N):
            if side == "left" and bits[a] == 1:
                node = self.a_pm(-1, r, h, p.xi[a])
                out[h & ~(1 << a)] = self._interp(lam, h, a, self.t(-r, h)) * node
            elif side == "right" and bits[a] == 0:
                node = self.a_pm(+1, r, h, p.xi[a])
                out[h | (1 << a)] = self._interp(lam, h, a, self.t(-r, h)) * node
        return out

    def d_func_at(self, lam) -> complex:
        return complex(d_func(lam, self.params))

    # -------- Gram data --------
    def gram(self, r: int, r_right: int | None = None) -> np.ndarray:
        """<r,h|h',r'> for all h, h'. Different sectors are orthogonal by support."""
        r_right = r if r_right is None else r_right
        if r_right != r:
            return np.zeros((self.n_spin, self.n_spin), dtype=complex)
        return self.left(r).vectors @ self.right(r).vectors.T

    def identity_resolution(self, r: int) -> np.ndarray:
        """sum_h |h,r><r,h| / <r,h|h,r> with the closed-form normalisation."""
        left, right = self.left(r).vectors, self.right(r).vectors
        norms = np.array([self.predicted_norm(r, h) for h in range(self.n_spin)])
        return right.T @ (left / norms[:, None])


# -------- operations --------
def build_sov(side: Side, r: int, params: ModelParams, system: SovSystem | None = None) -> SovBasis:
    system = system or SovSystem(params)
    return system.basis(side, r)


def _compare(lhs_rows, rhs_rows) -> float:
    return scaled_residual(np.asarray(lhs_rows), np.asarray(rhs_rows))


def sov_action_check(op: str, lam, basis: SovBasis, system: SovSystem) -> float:
    """Deviation between the matrix action of op and its closed form on the basis."""
    sp, p = system.space, system.params
    r, side = basis.r, basis.side
    vecs = basis.vectors
    n_h = system.n_spin
    lhs, rhs = [], []
    if op == "D":
        mat = sp.operator("D", lam)
        if side == "left":
            target = system.left(r - 1).vectors
            acted = vecs @ mat.block(r - 1)
            coeff = [system.d_coeff(r - 1, h, lam) for h in range(n_h)]
        else:
            target = system.right(r + 1).vectors
            acted = (mat.block(r) @ vecs.T).T
            coeff = [system.d_coeff(r + 1, h, lam) for h in range(n_h)]
        lhs, rhs = acted, np.array(coeff)[:, None] * target
    elif op in ("C", "B"):
        block = sp.operator(op, lam).block(r)
        acted = vecs @ block if side == "left" else (block @ vecs.T).T
        action = system.c_action if op == "C" else system.b_action
        expected = np.zeros_like(vecs)
        for h in range(n_h):
            for target_h, c in action(side, r, h, lam).items():
                expected[h] += c * vecs[target_h]
        lhs, rhs = acted, expected
    elif op in ("A", "A_static", "D_static"):
        which = "A_static" if op.startswith("A") else "D_static"
        block = sp.operator(which, lam).block(r)
        eta, y, N = p.eta, p.y, p.N
        th = system.th
        if side == "left":
            ref = vecs[0]
            acted = ref @ block
            if which == "A_static":
                c = a_func(lam, p)
            else:
                c = np.exp(-1j * N * y * eta) * th(system.t(r, 0) - eta) / th(system.t_ones(r) - eta) * d_func(lam, p)
        else:
            ref = vecs[n_h - 1]
            acted = block @ ref
            if which == "D_static":
                c = a_func(lam, p)
            else:
                c = np.exp(-1j * N * y * eta) * th(system.t(-r, 0) - eta) / th(system.t_ones(-r) - eta) * d_func(lam, p)
        lhs, rhs = acted[None, :], c * ref[None, :]
    else:
        raise ValueError(f"unknown operator {op!r}")
    res = _compare(lhs, rhs)
    logger.debug("action %s on %s basis r=%d: %.3e", op, side, r, res)
    return res


def reference_annihilation(r: int, lam, system: SovSystem) -> float:
    """|<r,0|B(lam)| and |B(lam)|1,r>| relative to |B(lam)|."""
    block = system.space.operator("B", lam).block(r)
    scale = max(max_norm(block), 1e-300)
    left = system.left(r).vectors[0] @ block
    right = block @ system.right(r).vectors[-1]
    return max(max_norm(left) / scale, max_norm(right) / (scale * abs(system.right_normalisation)))


def diagonal_action_residual(basis: SovBasis, system: SovSystem) -> float:
    """tau and S act on every SOV state by t_{r,h} and s_h."""
    sp = system.space
    sl = sp.sector(basis.r)
    tau, spin = sp.tau[sl], sp.spin_total[sl]
    worst = 0.0
    for h, vec in enumerate(basis.vectors):
        scale = max(max_norm(vec), 1e-300)
        t_exp = system.t(basis.r, h)
        s_exp = system.N - 2 * system.weights[h]
        worst = max(
            worst,
            max_norm(tau * vec - t_exp * vec) / (scale * max(abs(t_exp), 1.0)),
            max_norm(spin * vec - s_exp * vec) / (scale * system.N),
        )
    return worst


def sov_gram(r: int, params: ModelParams, system: SovSystem | None = None) -> dict[str, float]:
    """Diagonality, closed-form diagonal, ratio identities and the determinant identity."""
    system = system or SovSystem(params)
    p = params
    n_h = system.n_spin
    th = system.th
    gram = system.gram(r)
    diag = np.diag(gram)
    scale = max(np.max(np.abs(diag)), 1e-300)
    off = gram - np.diag(diag)
    predicted = np.array([system.predicted_norm(r, h) for h in range(n_h)])

    ratio1 = 0.0
    nxt = np.diag(system.gram(r + 1))
    for h in range(n_h):
        want = th(system.t(r, h)) * th(system.t_ones(r + 1)) / (th(system.t_ones(r)) * th(system.t(r + 1, h)))
        ratio1 = max(ratio1, abs(nxt[h] / diag[h] - want) / max(abs(want), 1e-300))

    ratio2 = 0.0
    for h in range(n_h):
        bits = system.bits(h)
        x = system.xi_h(h)
        for a in np.flatnonzero(bits == 0):
            up = h | (1 << int(a))
            others = np.delete(np.arange(system.N), a)
            want = (
                np.exp(-1j * p.y * p.eta)
                * th(system.t(r, h))
                / th(system.t(r, up))
                * np.prod(th(p.xi_array[a] - x[others]) / th(p.xi_array[a] - p.eta - x[others]))
            )
            ratio2 = max(ratio2, abs(diag[up] / diag[h] - want) / max(abs(want), 1e-300))

    out = {
        "off_diagonal": float(max_norm(off) / scale),
        "cross_sector": float(
            max_norm(system.left(r).embed(system.space) @ system.right(r + 1).embed(system.space).T) / scale
        ),
        "diagonal_formula": float(scaled_residual(diag, predicted)),
        "ratio1": float(ratio1),
        "ratio2": float(ratio2),
        "det_identity": max(system.theta_det_identity_residual(r, h) for h in range(n_h)),
    }
    logger.debug("gram r=%d: %s", r, out)
    return out


def identity_resolution_check(r: int, params: ModelParams, system: SovSystem | None = None) -> float:
    system = system or SovSystem(params)
    res = system.identity_resolution(r)
    return float(max_norm(res - np.eye(system.n_spin)))


def quasi_periodicity_residuals(lam, params: ModelParams, system: SovSystem | None = None) -> dict[str, float]:
    """D, e^{-iy lam} B and e^{iy lam} C under lam -> lam + pi and lam -> lam + pi omega."""
    system = system or SovSystem(params)
    sp, p = system.space, params
    N, eta, y = p.N, p.eta, p.y
    w = PI * p.omega
    cols = sp.interior(1)
    base = (-np.exp(-2j * lam - 1j * w)) ** N * np.exp(2j * np.sum(p.xi_array - eta / 2))
    dressing = {"D": lambda z: 1.0, "B": lambda z: np.exp(-1j * y * z), "C": lambda z: np.exp(1j * y * z)}
    diag = {
        "D": np.exp(1j * eta * sp.spin_total),
        "B": np.exp(-1j * sp.s_tau),
        "C": np.exp(1j * sp.s_tau),
    }
    out = {}
    for which in ("D", "B", "C"):
        op = lambda z: dressing[which](z) * sp.operator(which, z).matrix[:, cols]  # noqa: E731
        at = op(lam)
        out[f"{which}+pi"] = scaled_residual(op(lam + PI), (-1) ** N * at)
        out[f"{which}+pi*omega"] = scaled_residual(op(lam + w), base * diag[which][:, None] * at)
    return out


def measured_b_sign(r: int, h: int, n: int, system: SovSystem) -> complex:
    """Coefficient of <r,T_n^- h| in <r,h|B(xi_n^{(h_n)})| divided by everything but the sign."""
    p = system.params
    if not system.bits(h)[n - 1]:
        raise ValueError("site n must be down in h")
    lam = system.xi_h(h)[n - 1]
    row = system.left(r).vectors[h] @ system.space.operator("B", lam).block(r)
    target = system.left(r).vectors[h & ~(1 << (n - 1))]
    coef = np.vdot(target, row) / np.vdot(target, target)
    th = system.th
    rest = (
        a_func(p.xi[n - 1], p)
        * np.exp(2j * p.y * r * p.eta)
        * th(system.t(r, h) - p.eta)
        / th(system.t(-r, h) - p.eta)
    )
    return complex(coef / rest)
