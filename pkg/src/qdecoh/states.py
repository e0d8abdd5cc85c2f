"""X-form two-qubit states and the named initial-state scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ValidationError
from .qmath import VALIDATION_TOL, validate_density

SCENARIOS = ("prod00", "prod01", "prod10", "prod11", "bell-phi", "bell-psi", "raw")
NAMED_SCENARIOS = SCENARIOS[:-1]

X_MASK = np.array(
    [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1]], dtype=bool
)


@dataclass(frozen=True)
class XState:
    """Density matrix with support on the diagonal and anti-diagonal only.

    ``w`` is the |00><11| coherence (rho_14) and ``z`` the |01><10|
    coherence (rho_23).
    """

    a: float
    b: float
    c: float
    d: float
    w: complex = 0j
    z: complex = 0j

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "w", complex(self.w))
        object.__setattr__(self, "z", complex(self.z))
        problems = []
        total = self.a + self.b + self.c + self.d
        if abs(total - 1.0) > 1e-12:
            problems.append(f"populations sum to {total:.12g}, not 1")
        for name in "abcd":
            if getattr(self, name) < -1e-12:
                problems.append(f"population {name} = {getattr(self, name):.6g} is negative")
        if abs(self.w) > math.sqrt(max(self.a * self.d, 0.0)) + 1e-12:
            problems.append(f"|w| = {abs(self.w):.6g} exceeds sqrt(a d)")
        if abs(self.z) > math.sqrt(max(self.b * self.c, 0.0)) + 1e-12:
            problems.append(f"|z| = {abs(self.z):.6g} exceeds sqrt(b c)")
        if problems:
            raise ValidationError(
                validate_density(_embed(self.a, self.b, self.c, self.d, self.w, self.z)),
                "invalid X state (" + "; ".join(problems) + ")",
            )

    def to_matrix(self) -> np.ndarray:
        return _embed(self.a, self.b, self.c, self.d, self.w, self.z)

    @property
    def has_real_coherences(self) -> bool:
        return abs(self.w.imag) <= 1e-12 and abs(self.z.imag) <= 1e-12

    @classmethod
    def from_matrix(cls, rho: np.ndarray, tol: float = 1e-12) -> "XState":
        rho = np.asarray(rho)
        stray = float(np.max(np.abs(np.where(X_MASK, 0, rho))))
        if stray > tol:
            raise DomainError(f"state is not of X form: off-X element magnitude {stray:.3e}")
        return cls(
            rho[0, 0].real, rho[1, 1].real, rho[2, 2].real, rho[3, 3].real, rho[0, 3], rho[1, 2]
        )


def _embed(a, b, c, d, w, z) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2], m[3, 3] = a, b, c, d
    m[0, 3], m[3, 0] = w, np.conj(w)
    m[1, 2], m[2, 1] = z, np.conj(z)
    return m


def xstate_to_matrix(s: XState) -> np.ndarray:
    return s.to_matrix()


def is_x_form(rho: np.ndarray, tol: float = 1e-12) -> bool:
    return float(np.max(np.abs(np.where(X_MASK, 0, rho)))) <= tol


def normalize_kind(kind: str) -> str:
    k = kind.strip().lower().replace("_", "-")
    if k not in SCENARIOS:
        raise ConfigError(f"unknown scenario {kind!r}; expected one of {', '.join(SCENARIOS)}")
    return k


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "bell-phi"
    p: float = 1.0
    raw_state: XState | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"mixing probability p must lie in [0, 1], got {self.p}")
        if self.kind == "raw" and self.raw_state is None:
            raise ConfigError("scenario 'raw' needs an explicit state (a, b, c, d, w, z)")


_PRODUCT_SLOT = {"prod00": 0, "prod01": 1, "prod10": 2, "prod11": 3}


def make_initial_state(spec: ScenarioSpec) -> XState:
    """p |Phi><Phi| + (1 - p) 1/4 written as an X state."""
    p = spec.p
    if spec.kind == "raw":
        s = spec.raw_state
        report = validate_density(s.to_matrix(), VALIDATION_TOL)
        if not report.ok:
            raise ValidationError(report, "raw initial state")
        return s
    lo, hi = (1 - p) / 4, (1 + p) / 4
    if spec.kind == "bell-phi":
        return XState(hi, lo, lo, hi, w=p / 2)
    if spec.kind == "bell-psi":
        return XState(lo, hi, hi, lo, z=p / 2)
    pops = [lo] * 4
    pops[_PRODUCT_SLOT[spec.kind]] = (1 + 3 * p) / 4
    return XState(*pops)
