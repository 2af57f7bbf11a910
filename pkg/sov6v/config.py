# sov6v/config.py
"""
Model parameters and run configuration.

Complex numbers travel as ``[re, im]`` pairs in JSON and as Python complex
inside the library. ``ModelParams`` enforces the genericity conditions the
whole construction relies on; ``RunConfig`` is the CLI document.
"""

import json
import logging
import math
import os
from functools import cached_property
from typing import Annotated, Literal

import numpy as np
from dotenv import load_dotenv
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    model_validator,
)

from sov6v.errors import ConfigError, InvalidModel

logger = logging.getLogger(__name__)

load_dotenv()

# -------- Complex field --------
def _as_complex(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex value must be a [re, im] pair")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, np.generic):
        return complex(value)
    return value


def _as_int(value):
    # numpy bools and integers must not reach pydantic as indices
    if isinstance(value, (np.bool_, np.integer)):
        return int(value)
    return value


def _complex_pair(value: complex) -> list[float]:
    return [float(value.real), float(value.imag)]


Complex = Annotated[
    complex,
    BeforeValidator(_as_complex),
    PlainSerializer(_complex_pair, return_type=list),
]
Flag = Annotated[Literal[0, 1], BeforeValidator(_as_int)]
ChainLength = Annotated[int, BeforeValidator(_as_int), Field(ge=1, le=8)]

SUITES = ("elliptic", "repspace", "sovbasis", "spectrum", "tq", "tqinhom", "formfactors")


def lattice_coordinates(z: complex, p1: complex, p2: complex) -> tuple[float, float]:
    """Real coordinates (a, b) with z = a*p1 + b*p2."""
    mat = np.array([[p1.real, p2.real], [p1.imag, p2.imag]])
    a, b = np.linalg.solve(mat, np.array([z.real, z.imag]))
    return float(a), float(b)


def _near_rational(value: float, max_den: int, band: float) -> bool:
    for q in range(1, max_den + 1):
        if bool(abs(value * q - round(value * q)) < band * q):
            return True
    return False


# -------- Model --------
class ModelParams(BaseModel):
    """Global parameters of one antiperiodic dynamical 6-vertex chain."""

    model_config = ConfigDict(frozen=True)

    omega: Complex = 1j
    eta: Complex
    x: Flag
    y: Flag
    N: ChainLength
    xi: tuple[Complex, ...]
    kappa: Complex = 1.0 + 0j
    tol: float = 1e-12
    rational_denominator: int = 64
    window: int | None = None

    @model_validator(mode="after")
    def _check_model(self):
        if self.omega.imag <= 0:
            raise ConfigError("Im(omega) must be positive", path="omega", value=self.omega.imag)
        if self.N % 2 == 0 and (self.x, self.y) == (0, 0):
            raise InvalidModel("(x, y) = (0, 0) is excluded for even N", path="x")
        if len(self.xi) != self.N:
            raise ConfigError(f"expected {self.N} inhomogeneities, got {len(self.xi)}", path="xi")
        if abs(self.kappa) == 0:
            raise ConfigError("kappa must be nonzero", path="kappa")
        self._check_eta()
        self._check_inhomogeneities()
        return self

    def _check_eta(self):
        a, b = lattice_coordinates(self.eta, math.pi, math.pi * self.omega)
        band = 1e3 * self.tol
        if _near_rational(a, self.rational_denominator, band) and _near_rational(
            b, self.rational_denominator, band
        ):
            raise ConfigError(
                f"eta is rational in the periods (denominator <= {self.rational_denominator})",
                path="eta",
                value=self.eta,
            )

    def _check_inhomogeneities(self):
        from sov6v.elliptic import lattice_distance

        band = 1e3 * self.tol
        for a in range(self.N):
            for b in range(self.N):
                if a == b:
                    continue
                for eps in (-1, 0, 1):
                    dist = lattice_distance(self.xi[a] - self.xi[b] + eps * self.eta, self.periods)
                    if dist < band:
                        raise ConfigError(
                            f"inhomogeneity pair (a={a + 1}, b={b + 1}, eps={eps}) sits on the lattice",
                            path="xi",
                            value=dist,
                        )

    # -------- derived quantities --------
    @property
    def periods(self) -> tuple[complex, complex]:
        return (complex(math.pi), math.pi * self.omega)

    @property
    def band(self) -> float:
        return 1e3 * self.tol

    @property
    def t00(self) -> complex:
        return -self.eta * self.N / 2 + self.x * math.pi / 2 + self.y * math.pi * self.omega / 2

    @property
    def sign(self) -> int:
        """(-1)^(x+y+xy)."""
        return -1 if (self.x + self.y + self.x * self.y) % 2 else 1

    @property
    def R(self) -> int:
        return self.window if self.window is not None else self.N + 2

    @cached_property
    def xi_array(self) -> np.ndarray:
        return np.asarray(self.xi, dtype=complex)

    @cached_property
    def theta(self):
        from sov6v.elliptic import ThetaParams

        return ThetaParams(omega=self.omega)

    def with_kappa(self, kappa: complex) -> "ModelParams":
        return self.model_copy(update={"kappa": complex(kappa)})

    def with_xy(self, x: int, y: int) -> "ModelParams":
        return ModelParams(**{**self.model_dump(), "x": x, "y": y})


# -------- Run configuration --------
class RunConfig(BaseModel):
    """CLI document. Model fields sit at the top level."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: ChainLength
    x: Flag
    y: Flag
    omega: Complex = 1j
    eta: Complex
    xi_mode: Literal["explicit", "seeded"] = "seeded"
    xi: tuple[Complex, ...] | None = None
    kappa: tuple[Complex, ...] = (1.0 + 0j,)
    suites: tuple[str, ...] = SUITES
    tol: dict[str, float] = Field(default_factory=dict)
    seed: int = Field(default=7, ge=0, lt=2**64)
    out: str = "out"
    mu: Complex | None = None
    beta_target: Complex = 0.3 + 0j
    window: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_run(self):
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suites {unknown}", path="suites")
        if self.xi_mode == "explicit" and self.xi is None:
            raise ConfigError("xi_mode=explicit needs an xi list", path="xi")
        if not self.kappa:
            raise ConfigError("at least one kappa is required", path="kappa")
        return self

    def model_params(self, kappa: complex | None = None) -> ModelParams:
        if self.xi_mode == "explicit":
            xi = self.xi
        else:
            from utils.synthetic import generic_inhomogeneities

            xi = generic_inhomogeneities(self.N, self.eta, self.omega, seed=self.seed)
        return ModelParams(
            omega=self.omega,
            eta=self.eta,
            x=self.x,
            y=self.y,
            N=self.N,
            xi=tuple(xi),
            kappa=self.kappa[0] if kappa is None else kappa,
            window=self.window,
        )

    def tolerance(self, name: str, default: float) -> float:
        """Per-check override, then the "*" override, then the default."""
        return float(self.tol.get(name, self.tol.get("*", default)))

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def parse_config(text: str) -> RunConfig:
    """Parse a JSON document into a RunConfig and validate the model eagerly."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg})", path=f"line {exc.lineno}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top-level document must be an object")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(p) for p in first["loc"])
        raise ConfigError(first["msg"], path=path) from exc
    cfg.model_params()
    logger.debug("parsed config %s", cfg.canonical_json())
    return cfg


def thread_count() -> int:
    """Worker cap from SOV6V_THREADS (default 1)."""
    raw = os.getenv("SOV6V_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring SOV6V_THREADS=%r", raw)
        return 1
