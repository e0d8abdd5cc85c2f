"""Dense linear algebra for 2x2 and 4x4 two-qubit operators.

Basis order is fixed as |00>, |01>, |10>, |11> (row 0 is |00>). The first
tensor factor is subsystem ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-10
VALIDATION_TOL = 1e-9
JACOBI_OFF_TOL = 1e-14
JACOBI_MAX_SWEEPS = 64

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (m + m^H) / 2."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def hermiticity_defect(m: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest element-wise |m - m^H| and where it occurs."""
    diff = np.abs(m - m.conj().T)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return float(diff[idx]), (int(idx[0]), int(idx[1]))


class HermitianEigenSystem(NamedTuple):
    """Eigenvalues in descending order with eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi for a small complex Hermitian matrix.

    Each rotation first removes the phase of a[p, q] and then applies the
    real symmetric Jacobi rotation to the resulting real 2x2 pivot.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.sqrt(np.sum(np.abs(a) ** 2))), 1e-300)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_norm(a) <= JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # columns p, q of the unitary U = diag(1, conj(phase)) @ R
                up = np.array([c, -s * np.conj(phase)])
                uq = np.array([s, c * np.conj(phase)])
                cols = a[:, [p, q]]
                a[:, p] = cols @ up
                a[:, q] = cols @ uq
                rows = a[[p, q], :]
                a[p, :] = np.conj(up) @ rows
                a[q, :] = np.conj(uq) @ rows
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcols = v[:, [p, q]]
                v[:, p] = vcols @ up
                v[:, q] = vcols @ uq
    return np.diag(a).real.copy(), v


def _phase_fix(vec: np.ndarray) -> np.ndarray:
    for x in vec:
        if abs(x) > 1e-12:
            return vec * (abs(x) / x)
    return vec


def hermitian_eigendecompose(m: np.ndarray, tol: float = HERMITIAN_TOL) -> HermitianEigenSystem:
    """Eigendecomposition of a small Hermitian matrix.

    Eigenvalues are sorted descending. Each eigenvector has its first
    component of magnitude > 1e-12 made real and positive, and eigenvalues
    equal to within 1e-12 are ordered by lexicographic comparison of the
    phase-fixed vectors, so the output is fully deterministic.

    Raises
    ------
    DomainError
        If ``m`` deviates from Hermitian by more than ``tol``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    defect, where = hermiticity_defect(m)
    if defect > tol:
        raise DomainError(
            f"matrix is not Hermitian: |m - m^H| = {defect:.3e} at element {where}"
        )
    evals, evecs = _jacobi(hermitize(m))
    vecs = [_phase_fix(evecs[:, k]) for k in range(len(evals))]

    def vec_key(k):
        return tuple(x for z in vecs[k] for x in (-round(z.real, 12), -round(z.imag, 12)))

    order = sorted(range(len(evals)), key=lambda k: -evals[k])
    # tie groups get a secondary lexicographic ordering
    out: list[int] = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(evals[order[i]] - evals[order[j]]) <= 1e-12 * max(
            1.0, abs(evals[order[i]])
        ):
            j += 1
        out.extend(sorted(order[i:j], key=vec_key))
        i = j
    return HermitianEigenSystem(
        eigenvalues=np.array([evals[k] for k in out]),
        eigenvectors=np.column_stack([vecs[k] for k in out]),
    )


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values (descending) from the eigenvalues of m^H m."""
    m = np.asarray(m, dtype=complex)
    gram = m.conj().T @ m
    ev = hermitian_eigendecompose(hermitize(gram)).eigenvalues
    ev = np.where((ev < 0) & (ev > -1e-14), 0.0, ev)
    return np.sqrt(np.maximum(ev, 0.0))


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values of ``m``.

    Hermitian input takes the sum of |eigenvalues|, which avoids the square
    root of tiny Gram eigenvalues.
    """
    m = np.asarray(m, dtype=complex)
    defect, _ = hermiticity_defect(m)
    if defect <= 1e-14 * max(1.0, float(np.max(np.abs(m)))):
        ev = hermitian_eigendecompose(hermitize(m)).eigenvalues
        return float(np.sum(np.abs(ev)))
    return float(np.sum(singular_values(m)))


def marginal_a(rho: np.ndarray) -> np.ndarray:
    """Reduced state of subsystem a, Tr_b rho."""
    return np.einsum("ijkj->ik", np.asarray(rho).reshape(2, 2, 2, 2))


def marginal_b(rho: np.ndarray) -> np.ndarray:
    """Reduced state of subsystem b, Tr_a rho."""
    return np.einsum("ijil->jl", np.asarray(rho).reshape(2, 2, 2, 2))


def local_operator_a(op2: np.ndarray) -> np.ndarray:
    return np.kron(op2, I2)


@dataclass(frozen=True)
class BlochRep:
    """Pauli expansion rho = 1/4 (1 + x.s (x) 1 + 1 (x) y.s + sum T_ij s_i (x) s_j).

    ``c`` holds the signed canonical correlations: ``frame_a @ T @ frame_b.T``
    equals ``diag(c)`` with both frames proper rotations. ``x_canonical`` is
    the subsystem-a Bloch vector expressed in ``frame_a``.
    """

    x: np.ndarray
    y: np.ndarray
    T: np.ndarray
    c: np.ndarray
    frame_a: np.ndarray
    frame_b: np.ndarray

    @property
    def x_canonical(self) -> np.ndarray:
        return self.frame_a @ self.x

    def to_matrix(self) -> np.ndarray:
        rho = np.kron(I2, I2).astype(complex)
        for i, s in enumerate(PAULI):
            rho = rho + self.x[i] * np.kron(s, I2) + self.y[i] * np.kron(I2, s)
            for j, s2 in enumerate(PAULI):
                rho = rho + self.T[i, j] * np.kron(s, s2)
        return rho / 4.0


def bloch_decompose(rho: np.ndarray) -> BlochRep:
    rho = np.asarray(rho, dtype=complex)
    x = np.array([np.trace(rho @ np.kron(s, I2)).real for s in PAULI])
    y = np.array([np.trace(rho @ np.kron(I2, s)).real for s in PAULI])
    T = np.array([[np.trace(rho @ np.kron(si, sj)).real for sj in PAULI] for si in PAULI])
    u, s, wt = np.linalg.svd(T)
    w = wt.T
    c = s.copy()
    if np.linalg.det(u) < 0:
        u[:, 2] *= -1
        c[2] *= -1
    if np.linalg.det(w) < 0:
        w[:, 2] *= -1
        c[2] *= -1
    return BlochRep(x=x, y=y, T=T, c=c, frame_a=u.T, frame_b=w.T)


@dataclass(frozen=True)
class Violation:
    kind: str  # "trace" | "hermiticity" | "negativity" | "shape"
    magnitude: float
    message: str


@dataclass(frozen=True)
class DensityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_density(rho: np.ndarray, tol: float = VALIDATION_TOL) -> DensityReport:
    """Check unit trace, Hermiticity and positivity, each to within ``tol``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return DensityReport((Violation("shape", float("nan"), f"not square: {rho.shape}"),))
    found = []
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        mag = float(abs(tr - 1.0))
        found.append(Violation("trace", mag, f"trace {tr.real:.12g} deviates from 1 by {mag:.3e}"))
    defect, where = hermiticity_defect(rho)
    if defect > tol:
        found.append(
            Violation("hermiticity", defect, f"|rho - rho^H| = {defect:.3e} at element {where}")
        )
    lam_min = float(hermitian_eigendecompose(hermitize(rho), tol=np.inf).eigenvalues[-1])
    if lam_min < -tol:
        found.append(
            Violation("negativity", -lam_min, f"smallest eigenvalue {lam_min:.6g} is negative")
        )
    return DensityReport(tuple(found))
