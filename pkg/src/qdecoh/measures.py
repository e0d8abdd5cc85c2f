"""Concurrence and measurement-induced nonlocality (MIN) for two qubits.

``min_hs`` is the Hilbert-Schmidt MIN (max squared Frobenius distance) and
``min_trace`` the trace-distance MIN. Both maximize over von Neumann
measurements on subsystem a that leave its marginal unchanged. Closed forms
are paired with a brute-force maximizer (:func:`min_numeric`) for checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmath import (
    I2,
    PAULI,
    SY,
    bloch_decompose,
    hermitian_eigendecompose,
    hermitize,
)
from .states import XState, is_x_form

MARGINAL_GAP_TOL = 1e-9
SQRT_FLOOR = 1e-14  # eigenvalues of rho below this count as zero inside sqrt(rho)

_SYSY = np.kron(SY, SY)


@dataclass(frozen=True)
class CorrelationSample:
    t: float
    concurrence: float
    min_hs: float
    min_trace: float
    purity: float


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    es = hermitian_eigendecompose(hermitize(rho), tol=np.inf)
    lam = np.where(es.eigenvalues < SQRT_FLOOR, 0.0, es.eigenvalues)
    v = es.eigenvectors
    return (v * np.sqrt(lam)) @ v.conj().T


def concurrence_general(rho: np.ndarray) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l_i (square roots of the eigenvalues of rho S rho* S, S = sy (x) sy)
    are obtained directly as the singular values of sqrt(rho) S sqrt(rho)*,
    which is similar to the same product and avoids a square root of
    round-off-sized eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    root = _sqrt_psd(rho)
    lam = np.linalg.svd(root @ _SYSY @ root.conj(), compute_uv=False)
    return max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))


def _x_concurrence(r11, r22, r33, r44, r14, r23):
    g1 = np.abs(r14) - np.sqrt(np.clip(r22 * r33, 0.0, None))
    g2 = np.abs(r23) - np.sqrt(np.clip(r11 * r44, 0.0, None))
    return 2.0 * np.maximum(0.0, np.maximum(g1, g2))


def concurrence_xstate(s: XState) -> float:
    return float(_x_concurrence(s.a, s.b, s.c, s.d, s.w, s.z))


def min_hs_closed(rho: np.ndarray) -> float:
    """Closed-form Hilbert-Schmidt MIN.

    Nondegenerate marginal: the measurement axis is forced to x/|x| and
    N2 = (Tr TT^T - x^T TT^T x / |x|^2) / 4. Degenerate marginal: the axis is
    free and the smallest eigenvalue of TT^T is removed instead.
    """
    rep = bloch_decompose(rho)
    tt = rep.T @ rep.T.T
    nx = float(np.linalg.norm(rep.x))
    if nx > MARGINAL_GAP_TOL:
        val = np.trace(tt) - rep.x @ tt @ rep.x / nx**2
    else:
        val = np.trace(tt) - np.linalg.eigvalsh(tt)[0]
    return max(0.0, float(val) / 4.0)


def min_trace_closed(rho: np.ndarray) -> float:
    """Closed-form trace-distance MIN from the canonical correlations c and x.

    Vector norms are Euclidean. With x in the frame that diagonalizes T::

        alpha = |c|^2 |x|^2 - sum c_i^2 x_i^2
        beta  = sum over cyclic (i, j, k) of x_i^2 c_j^2 c_k^2
        chi+- = alpha +- 2 sqrt(beta) |x|
        N1    = (sqrt(chi+) + sqrt(chi-)) / (2 |x|)

    and N1 = max |c_i| when x = 0.
    """
    rep = bloch_decompose(rho)
    c = rep.c
    x = rep.x_canonical
    nx = float(np.linalg.norm(x))
    if nx <= MARGINAL_GAP_TOL:
        return float(np.max(np.abs(c)))
    c2, x2 = c**2, x**2
    alpha = float(c2.sum() * nx**2 - np.dot(c2, x2))
    beta = float(sum(x2[i] * c2[(i + 1) % 3] * c2[(i + 2) % 3] for i in range(3)))
    root = 2.0 * math.sqrt(max(beta, 0.0)) * nx
    chi_p = max(alpha + root, 0.0)
    chi_m = max(alpha - root, 0.0)
    return (math.sqrt(chi_p) + math.sqrt(chi_m)) / (2.0 * nx)


@dataclass(frozen=True)
class MinResult:
    min_hs: float
    min_trace: float
    routed: bool = False  # True when the marginal was degenerate

    def __iter__(self):
        return iter((self.min_hs, self.min_trace))


def min_xstate(s: XState) -> MinResult:
    """X-state shortcut N2 = 2(|r23|^2 + |r14|^2), N1 = 2(|r23| + |r14|).

    Valid only for a nondegenerate subsystem-a marginal; otherwise the
    general closed forms are used and ``routed`` is set.
    """
    if abs(s.a + s.b - s.c - s.d) > MARGINAL_GAP_TOL:
        aw, az = abs(s.w), abs(s.z)
        return MinResult(2.0 * (az**2 + aw**2), 2.0 * (az + aw))
    rho = s.to_matrix()
    return MinResult(min_hs_closed(rho), min_trace_closed(rho), routed=True)


# --- brute-force oracle -------------------------------------------------

def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    theta = np.arccos(1.0 - 2.0 * k / n)
    phi = math.pi * (1.0 + 5.0**0.5) * k
    return np.column_stack([theta, np.mod(phi, 2 * math.pi)])


def _directions(angles: np.ndarray) -> np.ndarray:
    th, ph = angles[..., 0], angles[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def _disturbance(rho: np.ndarray, n: np.ndarray, norm: str) -> np.ndarray:
    """||rho - Pi_n(rho)|| for a batch of unit vectors n, shape (k, 3)."""
    ns = np.einsum("ki,iab->kab", n, np.array(PAULI))
    plus = 0.5 * (I2 + ns)
    minus = 0.5 * (I2 - ns)
    out = np.zeros((len(n), 4, 4), dtype=complex)
    for proj in (plus, minus):
        big = np.einsum("kab,cd->kacbd", proj, I2).reshape(len(n), 4, 4)
        out += big @ rho @ big
    diff = rho[None] - out
    if norm == "hs":
        return np.sum(np.abs(diff) ** 2, axis=(1, 2))
    diff = 0.5 * (diff + np.conj(np.swapaxes(diff, 1, 2)))
    return np.sum(np.abs(np.linalg.eigvalsh(diff)), axis=1)


def min_numeric(rho: np.ndarray, norm: str = "hs", grid: int = 10000,
                step: float = 1e-6, starts: int = 4) -> float:
    """Maximize the measurement disturbance directly over projector axes.

    ``norm`` is ``"hs"`` (squared Frobenius) or ``"trace"``. A nondegenerate
    marginal fixes the axis to its Bloch vector and no search is done.
    Otherwise a Fibonacci sphere grid of ``grid`` points is scanned and the
    best ``starts`` points are refined by compass search in (theta, phi)
    down to ``step``. Ties on the grid resolve to the lowest index.
    """
    if norm not in ("hs", "trace"):
        raise ValueError(f"norm must be 'hs' or 'trace', got {norm!r}")
    rho = np.asarray(rho, dtype=complex)
    x = np.array([np.trace(rho @ np.kron(s, I2)).real for s in PAULI])
    nx = float(np.linalg.norm(x))
    if nx > MARGINAL_GAP_TOL:
        return float(_disturbance(rho, (x / nx)[None], norm)[0])

    angles = _fibonacci_sphere(grid)
    vals = _disturbance(rho, _directions(angles), norm)
    order = np.argsort(-vals, kind="stable")[:starts]
    best = float(vals[order[0]])
    moves = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    for idx in order:
        cur = angles[idx].copy()
        cur_val = float(vals[idx])
        h = 0.05
        while h >= step:
            trial = cur[None] + h * moves
            tv = _disturbance(rho, _directions(trial), norm)
            k = int(np.argmax(tv))
            if tv[k] > cur_val:
                cur, cur_val = trial[k], float(tv[k])
            else:
                h *= 0.5
        best = max(best, cur_val)
    return best


# --- per-sample evaluation ----------------------------------------------

def correlation_sample(t: float, rho: np.ndarray) -> CorrelationSample:
    rho = np.asarray(rho, dtype=complex)
    if is_x_form(rho):
        r = rho
        conc = float(_x_concurrence(r[0, 0].real, r[1, 1].real, r[2, 2].real, r[3, 3].real,
                                    r[0, 3], r[1, 2]))
        if abs(r[0, 0].real + r[1, 1].real - r[2, 2].real - r[3, 3].real) > MARGINAL_GAP_TOL:
            a14, a23 = abs(r[0, 3]), abs(r[1, 2])
            hs, tr = 2.0 * (a14**2 + a23**2), 2.0 * (a14 + a23)
        else:
            hs, tr = min_hs_closed(rho), min_trace_closed(rho)
    else:
        conc = concurrence_general(rho)
        hs, tr = min_hs_closed(rho), min_trace_closed(rho)
    return CorrelationSample(float(t), conc, hs, tr, purity(rho))


def correlation_series(times, states) -> list[CorrelationSample]:
    """Correlations along a trajectory, vectorized over X-form samples."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=complex)
    r11, r22 = states[:, 0, 0].real, states[:, 1, 1].real
    r33, r44 = states[:, 2, 2].real, states[:, 3, 3].real
    r14, r23 = states[:, 0, 3], states[:, 1, 2]
    conc = _x_concurrence(r11, r22, r33, r44, r14, r23)
    hs = 2.0 * (np.abs(r14) ** 2 + np.abs(r23) ** 2)
    tr = 2.0 * (np.abs(r14) + np.abs(r23))
    pur = np.real(np.einsum("kij,kji->k", states, states))
    gap = np.abs(r11 + r22 - r33 - r44)
    out = []
    for k, t in enumerate(times):
        if not is_x_form(states[k]) or gap[k] <= MARGINAL_GAP_TOL:
            out.append(correlation_sample(t, states[k]))
        else:
            out.append(CorrelationSample(float(t), float(conc[k]), float(hs[k]), float(tr[k]),
                                         float(pur[k])))
    return out
