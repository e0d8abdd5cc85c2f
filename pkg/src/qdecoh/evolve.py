"""Time evolution under the Milburn intrinsic-decoherence master equation

    d rho/dt = -i [H, rho] - (gamma/2) [H, [H, rho]]

Four engines are provided and are expected to agree:

* ``spectral``: closed-form solution in the energy eigenbasis, where the
  (m, n) element picks up exp(-gamma t (Em - En)^2 / 2 - i (Em - En) t).
* ``xclosed``: explicit element formulas for X-form initial states.
* ``kraus``: truncated operator-sum with M_l = sqrt((gamma t)^l / l!) H^l
  exp(-iHt) exp(-gamma t H^2 / 2).
* ``ode``: fixed-step classic RK4 on the master equation. This one uses no
  eigen-decomposition and serves as the independent check on the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StabilityError, TruncationError, ValidationError
from .model import DEGENERACY_TOL, ModelParams, analytic_spectrum, build_hamiltonian
from .qmath import VALIDATION_TOL, validate_density
from .states import ScenarioSpec, XState

ENGINES = ("spectral", "xclosed", "kraus", "ode")
KRAUS_MAX_TERMS = 10000
DEFAULT_ODE_DT = 1e-3
DEFAULT_KRAUS_TOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    params: ModelParams
    scenario: ScenarioSpec | None
    times: np.ndarray
    states: np.ndarray  # shape (n, 4, 4)
    method: str

    def element(self, i: int, j: int) -> np.ndarray:
        return self.states[:, i, j]


def _checked(rho0) -> np.ndarray:
    rho0 = rho0.to_matrix() if isinstance(rho0, XState) else np.asarray(rho0, dtype=complex)
    report = validate_density(rho0, VALIDATION_TOL)
    if not report.ok:
        raise ValidationError(report, "initial state")
    return rho0


def _as_times(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("times must be finite and non-negative")
    return arr, scalar


def evolve_spectral(rho0, p: ModelParams, t) -> np.ndarray:
    """rho(t) from the eigen-expansion; ``t`` may be a scalar or an array."""
    rho0 = _checked(rho0)
    times, scalar = _as_times(t)
    sd = analytic_spectrum(p)
    e, v = sd.energies, sd.vectors
    r = v.conj().T @ rho0 @ v
    de = e[:, None] - e[None, :]
    tt = times[:, None, None]
    kernel = np.exp(-0.5 * p.gamma * tt * de**2 - 1j * de * tt)
    out = v @ (kernel * r) @ v.conj().T
    out[times == 0] = rho0
    return out[0] if scalar else out


def _closed_preconditions(s0: XState, p: ModelParams):
    eta, mu = p.eta, p.mu
    if eta < DEGENERACY_TOL or mu < DEGENERACY_TOL:
        sector = "eta" if eta < DEGENERACY_TOL else "mu"
        raise DomainError(f"closed X-state formulas need {sector} != 0; use the spectral engine")
    if abs(eta**2 - p.inhomogeneity**2) < DEGENERACY_TOL:
        raise DomainError(
            "closed X-state formulas are singular when eta^2 = lambda^2 (D = J+ = 0); "
            "use the spectral engine"
        )
    if not s0.has_real_coherences:
        raise DomainError(
            "closed X-state formulas assume real coherences w, z; use the spectral engine"
        )


def closed_elements(s0: XState, p: ModelParams, t) -> dict[str, np.ndarray]:
    """Vectorized element formulas: keys r11, r22, r33, r44, r14, r23."""
    _closed_preconditions(s0, p)
    t = np.asarray(t, dtype=float)
    a, b, c, d = s0.a, s0.b, s0.c, s0.d
    w, z = s0.w.real, s0.z.real
    jp, jm, dm, bf, lam, g = p.j_plus, p.j_minus, p.dm, p.field, p.inhomogeneity, p.gamma
    eta, mu = p.eta, p.mu
    eta2, mu2 = eta * eta, mu * mu
    em = np.exp(-2 * g * t * mu2)
    ee = np.exp(-2 * g * t * eta2)
    c2m, s2m = np.cos(2 * mu * t), np.sin(2 * mu * t)
    c2e, s2e = np.cos(2 * eta * t), np.sin(2 * eta * t)
    dj = dm * dm + jp * jp

    outer_osc = (a - d) * jm**2 - 2 * bf * w * jm
    r11 = ((a * (bf**2 + mu2) + 2 * bf * w * jm + d * jm**2) + em * c2m * outer_osc) / (2 * mu2)
    r44 = ((a * jm**2 - 2 * bf * w * jm + d * (bf**2 + mu2)) - em * c2m * outer_osc) / (2 * mu2)

    inner_osc = 2 * dm * z * eta * s2e + c2e * ((b - c) * dj - 2 * z * lam * jp)
    r22 = ((c * dj + b * (eta2 + lam**2) + 2 * z * lam * jp) + ee * inner_osc) / (2 * eta2)
    r33 = ((c * (eta2 + lam**2) + b * (eta2 - lam**2) - 2 * z * lam * jp) - ee * inner_osc) / (
        2 * eta2
    )

    r14 = (
        ((a - d) * bf * jm + 2 * w * jm**2)
        - em * ((a - d) * jm - 2 * bf * w) * (bf * c2m - 1j * mu * s2m)
    ) / (2 * mu2)

    r23 = (
        1j * (dm - 1j * jp) * ((b - c) * lam + 2 * z * jp)
        + ee
        / (eta2 - lam**2)
        * (
            eta * s2e * (dm - 1j * jp) * (-(b - c) * dj - 2j * dm * z * lam + 2 * z * lam * jp)
            + c2e * (1j * dm + jp) * (-(b - c) * lam * dj - 2j * dm * z * eta2 + 2 * z * lam**2 * jp)
        )
    ) / (2 * eta2)
    return {"r11": r11, "r22": r22, "r33": r33, "r44": r44, "r14": r14, "r23": r23}


def evolve_xstate_closed(s0: XState, p: ModelParams, t: float) -> XState:
    """Evolve an X state with the explicit element formulas.

    Requires eta != 0, mu != 0, eta^2 != lambda^2 and real coherences.
    """
    if t < 0:
        raise DomainError("time must be non-negative")
    el = closed_elements(s0, p, float(t))
    return XState(
        float(el["r11"]), float(el["r22"]), float(el["r33"]), float(el["r44"]),
        complex(el["r14"]), complex(el["r23"]),
    )


def _closed_matrices(s0: XState, p: ModelParams, times: np.ndarray) -> np.ndarray:
    el = closed_elements(s0, p, times)
    out = np.zeros((len(times), 4, 4), dtype=complex)
    out[:, 0, 0], out[:, 1, 1] = el["r11"], el["r22"]
    out[:, 2, 2], out[:, 3, 3] = el["r33"], el["r44"]
    out[:, 0, 3], out[:, 3, 0] = el["r14"], np.conj(el["r14"])
    out[:, 1, 2], out[:, 2, 1] = el["r23"], np.conj(el["r23"])
    return out


def kraus_terms_needed(x: float, tol: float) -> int:
    """Smallest L with x^(L+1)/(L+1)! * e^x < tol (exponential-series tail bound)."""
    if x <= 0:
        return 0
    log_tol = math.log(tol)
    lx = math.log(x)
    for L in range(KRAUS_MAX_TERMS + 1):
        if (L + 1) * lx - math.lgamma(L + 2) + x < log_tol:
            return L
    bound = math.exp(min((KRAUS_MAX_TERMS + 1) * lx - math.lgamma(KRAUS_MAX_TERMS + 2) + x, 700))
    raise TruncationError(
        f"Kraus series needs more than {KRAUS_MAX_TERMS} terms for tol={tol:g}; "
        f"tail bound at the cap is {bound:.3e}"
    )


def evolve_kraus(rho0, p: ModelParams, t: float, tol: float = DEFAULT_KRAUS_TOL) -> np.ndarray:
    """Truncated operator-sum evolution, computed in the energy eigenbasis."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    rho0 = _checked(rho0)
    if t < 0:
        raise DomainError("time must be non-negative")
    sd = analytic_spectrum(p)
    e, v = sd.energies, sd.vectors
    gt = p.gamma * t
    n_terms = kraus_terms_needed(gt * float(np.max(np.abs(np.outer(e, e)))), tol)
    base = np.exp(-1j * e * t - 0.5 * gt * e**2)
    abs_e = np.abs(e)
    sign_e = np.sign(e)
    acc = np.zeros((4, 4), dtype=complex)
    for l in range(n_terms + 1):
        if l == 0:
            k = base
        else:
            with np.errstate(divide="ignore"):
                log_mag = 0.5 * l * math.log(gt) - 0.5 * math.lgamma(l + 1) + l * np.log(abs_e)
            k = np.where(abs_e > 0, sign_e**l * np.exp(log_mag), 0.0) * base
        acc += np.outer(k, np.conj(k))
    r = v.conj().T @ rho0 @ v
    return v @ (acc * r) @ v.conj().T


def _liouvillian(p: ModelParams) -> np.ndarray:
    """Superoperator acting on row-major vec(rho): vec(A X B) = (A kron B^T) vec(X)."""
    h = build_hamiltonian(p)
    eye = np.eye(4)
    h2 = h @ h
    comm = np.kron(h, eye) - np.kron(eye, h.T)
    double = np.kron(h2, eye) - 2 * np.kron(h, h.T) + np.kron(eye, h2.T)
    return -1j * comm - 0.5 * p.gamma * double


def evolve_ode(rho0, p: ModelParams, t_max: float, dt: float = DEFAULT_ODE_DT, times=None,
               scenario: ScenarioSpec | None = None) -> Trajectory:
    """Classic RK4 at fixed step ``dt``, re-Hermitized after every step.

    Samples are taken at ``times`` (default: every step up to ``t_max``);
    an interval between samples that is not a multiple of ``dt`` is split
    into equal sub-steps no longer than ``dt``.

    Raises
    ------
    StabilityError
        If the trace drifts by more than 1e-6 or the Frobenius norm grows
        past 1 + 1e-6 (the step is outside the RK4 stability region).
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if t_max < 0:
        raise DomainError("t_max must be non-negative")
    rho0 = _checked(rho0)
    if times is None:
        n = int(round(t_max / dt))
        times = np.arange(n + 1) * dt
    times, _ = _as_times(times)
    if np.any(np.diff(times) <= 0):
        raise DomainError("sample times must be strictly increasing")
    lv = _liouvillian(p)
    y = rho0.reshape(16).copy()
    t_cur = 0.0
    out = np.empty((len(times), 4, 4), dtype=complex)
    for k, t_next in enumerate(times):
        span = t_next - t_cur
        if span > 0:
            n_sub = max(1, math.ceil(span / dt - 1e-9))
            h = span / n_sub
            for _ in range(n_sub):
                k1 = lv @ y
                k2 = lv @ (y + 0.5 * h * k1)
                k3 = lv @ (y + 0.5 * h * k2)
                k4 = lv @ (y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                m = y.reshape(4, 4)
                y = (0.5 * (m + m.conj().T)).reshape(16)
            t_cur = t_next
        rho = y.reshape(4, 4)
        drift = abs(np.trace(rho) - 1.0)
        frob = float(np.linalg.norm(rho))
        if drift > 1e-6 or frob > 1.0 + 1e-6:
            raise StabilityError(
                f"RK4 step dt={dt:g} is unstable at t={t_next:g} "
                f"(trace drift {drift:.2e}, norm {frob:.6g}); use a smaller step"
            )
        out[k] = rho
    return Trajectory(params=p, scenario=scenario, times=times, states=out, method="ode")


def steady_state(s0: XState, p: ModelParams) -> XState:
    """t -> infinity limit: the element formulas with all damped terms dropped.

    Independent of gamma as long as gamma > 0.
    """
    if p.gamma <= 0:
        raise DomainError("gamma = 0: undamped dynamics has no steady state")
    if p.mu < DEGENERACY_TOL:
        raise DomainError("mu = 0: the |00>,|11> sector is undamped")
    if p.eta < DEGENERACY_TOL:
        raise DomainError("eta = 0: the |01>,|10> sector is undamped")
    if not s0.has_real_coherences:
        raise DomainError("steady-state formulas assume real coherences w, z")
    a, b, c, d = s0.a, s0.b, s0.c, s0.d
    w, z = s0.w.real, s0.z.real
    jp, jm, dm, bf, lam = p.j_plus, p.j_minus, p.dm, p.field, p.inhomogeneity
    eta2, mu2 = p.eta**2, p.mu**2
    dj = dm * dm + jp * jp
    r11 = (a * (bf**2 + mu2) + 2 * bf * w * jm + d * jm**2) / (2 * mu2)
    r44 = (a * jm**2 - 2 * bf * w * jm + d * (bf**2 + mu2)) / (2 * mu2)
    r22 = (c * dj + b * (eta2 + lam**2) + 2 * z * lam * jp) / (2 * eta2)
    r33 = (c * (eta2 + lam**2) + b * (eta2 - lam**2) - 2 * z * lam * jp) / (2 * eta2)
    r14 = ((a - d) * bf * jm + 2 * w * jm**2) / (2 * mu2)
    r23 = 1j * (dm - 1j * jp) * ((b - c) * lam + 2 * z * jp) / (2 * eta2)
    return XState(r11, r22, r33, r44, r14, r23)


def evolve(state, p: ModelParams, times, engine: str = "spectral", *,
           kraus_tol: float = DEFAULT_KRAUS_TOL, ode_dt: float = DEFAULT_ODE_DT,
           scenario: ScenarioSpec | None = None) -> Trajectory:
    """Sample the evolution of ``state`` at ``times`` with the named engine."""
    if engine not in ENGINES:
        raise DomainError(f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}")
    times, _ = _as_times(times)
    if np.any(np.diff(times) <= 0):
        raise DomainError("sample times must be strictly increasing")
    if engine == "spectral":
        states = evolve_spectral(state, p, times)
    elif engine == "xclosed":
        s0 = state if isinstance(state, XState) else XState.from_matrix(_checked(state))
        states = _closed_matrices(s0, p, times)
    elif engine == "kraus":
        rho0 = _checked(state)
        states = np.array([evolve_kraus(rho0, p, t, kraus_tol) for t in times])
    else:
        t_max = float(times[-1]) if len(times) else 0.0
        return evolve_ode(state, p, t_max, ode_dt, times=times, scenario=scenario)
    return Trajectory(params=p, scenario=scenario, times=times, states=states, method=engine)
