"""Two-qubit anisotropic Heisenberg Hamiltonian with z-axis DM interaction.

In the |00>, |01>, |10>, |11> basis the Hamiltonian is block diagonal: an
outer block on {|00>, |11>} and an inner block on {|01>, |10>}::

    [ Jz/2 + B      0              0            J-       ]
    [ 0             lam - Jz/2     J+ + iD      0        ]
    [ 0             J+ - iD        -lam - Jz/2  0        ]
    [ J-            0              0            Jz/2 - B ]

with J+- = (Jx +- Jy)/2, D the DM strength, B the uniform field and lam the
field inhomogeneity. Units have hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .qmath import hermitian_eigendecompose

DEGENERACY_TOL = 1e-12

OUTER = (0, 3)
INNER = (1, 2)


@dataclass(frozen=True)
class ModelParams:
    j_plus: float = 0.0
    j_minus: float = 0.0
    j_z: float = 1.0
    dm: float = 0.0
    field: float = 0.0
    inhomogeneity: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"parameter {f.name} must be a finite real, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.gamma < 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")

    @classmethod
    def from_couplings(cls, jx, jy, jz, **kw) -> "ModelParams":
        return cls(j_plus=(jx + jy) / 2, j_minus=(jx - jy) / 2, j_z=jz, **kw)

    @property
    def eta(self) -> float:
        return math.sqrt(self.inhomogeneity**2 + self.dm**2 + self.j_plus**2)

    @property
    def mu(self) -> float:
        return math.hypot(self.field, self.j_minus)

    def replace(self, **changes) -> "ModelParams":
        return type(self)(**{**self.as_dict(), **changes})

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def build_hamiltonian(p: ModelParams) -> np.ndarray:
    jz2 = p.j_z / 2
    h = np.zeros((4, 4), dtype=complex)
    h[0, 0] = jz2 + p.field
    h[1, 1] = p.inhomogeneity - jz2
    h[2, 2] = -p.inhomogeneity - jz2
    h[3, 3] = jz2 - p.field
    h[0, 3] = h[3, 0] = p.j_minus
    h[1, 2] = p.j_plus + 1j * p.dm
    h[2, 1] = p.j_plus - 1j * p.dm
    return h


@dataclass(frozen=True)
class DegeneracyFlags:
    eta_zero: bool = False
    mu_zero: bool = False
    eta_abs_lambda: bool = False  # D = J+ = 0, inner block already diagonal
    j_minus_zero: bool = False  # outer block already diagonal

    @property
    def inner(self) -> bool:
        return self.eta_zero or self.eta_abs_lambda

    @property
    def outer(self) -> bool:
        return self.mu_zero or self.j_minus_zero

    @property
    def any(self) -> bool:
        return self.inner or self.outer


@dataclass(frozen=True)
class SpectralData:
    """Analytic spectrum.

    ``energies`` and the columns of ``vectors`` are ordered
    (-Jz/2 + eta, -Jz/2 - eta, Jz/2 + mu, Jz/2 - mu). ``normalizers`` are
    (N+, N-, M+, M-); they are NaN where the closed form is singular and
    the block was diagonalized numerically instead.
    """

    eta: float
    mu: float
    energies: np.ndarray
    vectors: np.ndarray
    normalizers: tuple[float, float, float, float]
    flags: DegeneracyFlags


def _ratio(num_a, den_a, num_b, den_b):
    # two algebraically equal forms; pick the one free of cancellation
    if abs(den_a) >= abs(den_b):
        return num_a / den_a
    return num_b / den_b


def _block_fallback(h: np.ndarray, idx: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Numerically diagonalize a 2x2 block; vectors embedded in C^4, larger eigenvalue first."""
    sub = h[np.ix_(idx, idx)]
    es = hermitian_eigendecompose(sub)
    vecs = np.zeros((4, 2), dtype=complex)
    vecs[list(idx), :] = es.eigenvectors
    return es.eigenvalues, vecs


def analytic_spectrum(p: ModelParams) -> SpectralData:
    """Closed-form eigensystem, with a numeric fallback on singular blocks.

    Inner block, E = -Jz/2 +- eta::

        |phi> = N+- ( (+-eta - lam)/(J+ + iD) |10> + |01> ),
        N+- = sqrt((D^2 + J+^2) / (2 eta (eta -+ lam)))

    Outer block, E = Jz/2 +- mu::

        |phi> = M+- ( (B +- mu)/J- |00> + |11> ),
        M+- = sqrt(J-^2 / (2 mu (mu +- B)))
    """
    eta, mu = p.eta, p.mu
    lam, d, jp, jm, b = p.inhomogeneity, p.dm, p.j_plus, p.j_minus, p.field
    energies = np.array([-p.j_z / 2 + eta, -p.j_z / 2 - eta, p.j_z / 2 + mu, p.j_z / 2 - mu])
    flags = DegeneracyFlags(
        eta_zero=eta < DEGENERACY_TOL,
        mu_zero=mu < DEGENERACY_TOL,
        eta_abs_lambda=math.hypot(d, jp) < DEGENERACY_TOL,
        j_minus_zero=abs(jm) < DEGENERACY_TOL,
    )
    vectors = np.zeros((4, 4), dtype=complex)
    h = None
    norms = [math.nan] * 4

    if flags.inner:
        h = build_hamiltonian(p)
        _, vectors[:, 0:2] = _block_fallback(h, INNER)
    else:
        g = complex(jp, d)
        for k, sgn in enumerate((1.0, -1.0)):
            alpha = _ratio(sgn * eta - lam, g, g.conjugate(), sgn * eta + lam)
            v = np.array([0.0, 1.0, alpha, 0.0], dtype=complex)
            n = 1.0 / np.linalg.norm(v)
            vectors[:, k] = n * v
            norms[k] = math.sqrt((d * d + jp * jp) / (2 * eta * (eta - sgn * lam)))

    if flags.outer:
        h = build_hamiltonian(p) if h is None else h
        _, vectors[:, 2:4] = _block_fallback(h, OUTER)
    else:
        for k, sgn in enumerate((1.0, -1.0)):
            beta = _ratio(b + sgn * mu, jm, -jm, b - sgn * mu)
            v = np.array([beta, 0.0, 0.0, 1.0], dtype=complex)
            vectors[:, 2 + k] = v / np.linalg.norm(v)
            norms[2 + k] = math.sqrt(jm * jm / (2 * mu * (mu + sgn * b)))

    return SpectralData(
        eta=eta,
        mu=mu,
        energies=energies,
        vectors=vectors,
        normalizers=tuple(norms),
        flags=flags,
    )
