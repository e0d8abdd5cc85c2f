"""Scenario runs, event detection, parameter sweeps and series output."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError
from .evolve import (
    DEFAULT_KRAUS_TOL,
    DEFAULT_ODE_DT,
    ENGINES,
    Trajectory,
    evolve,
    steady_state,
)
from .measures import CorrelationSample, concurrence_xstate, correlation_series, min_xstate
from .model import ModelParams
from .states import ScenarioSpec, XState, make_initial_state

BASE_COLUMNS = ("t", "concurrence", "min_hs", "min_trace", "purity")
ELEMENT_COLUMNS = ("re_r14", "im_r14", "re_r23", "im_r23", "r11", "r22", "r33", "r44")
OUTPUT_KINDS = ("correlations", "elements", "purity")
FORMATS = ("csv", "json")
SUDDEN_DEATH_TOL = 1e-9


def default_period(p: ModelParams) -> float | None:
    slow = min(p.mu, p.eta)
    return math.pi / slow if slow > 1e-12 else None


def default_t_max(p: ModelParams) -> float:
    slow2 = min(p.mu, p.eta) ** 2
    if p.gamma > 0 and slow2 > 1e-24:
        return 25.0 / (2.0 * p.gamma * slow2)
    return 20.0


def default_dt_sample(p: ModelParams) -> float:
    period = default_period(p)
    return period / 64.0 if period is not None else 0.01


@dataclass(frozen=True)
class RunConfig:
    """One scenario run. ``t_max``/``dt_sample`` of None resolve from the parameters."""

    params: ModelParams = field(default_factory=ModelParams)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    engine: str = "spectral"
    t_max: float | None = None
    dt_sample: float | None = None
    ode_dt: float = DEFAULT_ODE_DT
    outputs: frozenset = frozenset({"correlations", "purity"})
    format: str = "csv"
    out_path: str | None = None
    kraus_tol: float = DEFAULT_KRAUS_TOL

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {', '.join(ENGINES)}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}; expected csv or json")
        outputs = frozenset(self.outputs)
        bad = outputs - set(OUTPUT_KINDS)
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}; expected a subset of {OUTPUT_KINDS}")
        object.__setattr__(self, "outputs", outputs)
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError("t_max must be positive")
        if self.dt_sample is not None and self.dt_sample <= 0:
            raise ConfigError("dt_sample must be positive")
        if self.ode_dt <= 0:
            raise ConfigError("ode_dt must be positive")

    def resolved(self) -> "RunConfig":
        """Fill in automatic t_max / dt_sample and check their invariants."""
        t_max = self.t_max if self.t_max is not None else default_t_max(self.params)
        dt = self.dt_sample if self.dt_sample is not None else default_dt_sample(self.params)
        dt = min(dt, t_max)
        ode_dt = self.ode_dt
        if ode_dt > dt:
            if self.engine == "ode" and self.ode_dt != DEFAULT_ODE_DT:
                raise ConfigError(f"ode_dt={ode_dt:g} must not exceed dt_sample={dt:g}")
            ode_dt = dt
        return replace(self, t_max=t_max, dt_sample=dt, ode_dt=ode_dt)

    def sample_times(self) -> np.ndarray:
        cfg = self.resolved()
        n = int(math.floor(cfg.t_max / cfg.dt_sample + 1e-9))
        return np.arange(n + 1) * cfg.dt_sample


@dataclass
class RunResult:
    config: RunConfig
    trajectory: Trajectory
    samples: list[CorrelationSample]


def run_scenario(cfg: RunConfig, write: bool = True) -> RunResult:
    """Sample the configured scenario and compute correlations at every time.

    When ``write`` is set and ``cfg.out_path`` is given the series is written
    there in ``cfg.format``.
    """
    cfg = cfg.resolved()
    s0 = make_initial_state(cfg.scenario)
    traj = evolve(
        s0, cfg.params, cfg.sample_times(), cfg.engine,
        kraus_tol=cfg.kraus_tol, ode_dt=cfg.ode_dt, scenario=cfg.scenario,
    )
    samples = correlation_series(traj.times, traj.states)
    if write and cfg.out_path:
        write_series(samples, cfg.out_path, cfg.format,
                     states=traj.states if "elements" in cfg.outputs else None)
    return RunResult(cfg, traj, samples)


# --- output -------------------------------------------------------------

def _fmt(v: float) -> str:
    s = f"{float(v) + 0.0:.12g}"
    return "0" if s == "-0" else s


def series_rows(samples, states=None) -> tuple[tuple[str, ...], list[list[float]]]:
    cols = BASE_COLUMNS + (ELEMENT_COLUMNS if states is not None else ())
    rows = []
    for k, s in enumerate(samples):
        row = [s.t, s.concurrence, s.min_hs, s.min_trace, s.purity]
        if states is not None:
            r = states[k]
            row += [r[0, 3].real, r[0, 3].imag, r[1, 2].real, r[1, 2].imag,
                    r[0, 0].real, r[1, 1].real, r[2, 2].real, r[3, 3].real]
        rows.append(row)
    return cols, rows


def render_series(samples, fmt: str = "csv", states=None) -> str:
    if not samples:
        raise ValueError("cannot write an empty series")
    cols, rows = series_rows(samples, states)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        records = [{c: float(_fmt(v)) for c, v in zip(cols, row)} for row in rows]
        return json.dumps({"fields": list(cols), "samples": records}, indent=1) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def write_series(samples, path, fmt: str = "csv", states=None) -> None:
    """Write a correlation series; 12 significant digits, fixed column order."""
    text = render_series(samples, fmt, states)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write series to {path}: {exc.strerror}") from exc


# --- event detection ----------------------------------------------------

@dataclass(frozen=True)
class EventReport:
    sudden_death_time: float | None
    revival_intervals: tuple[tuple[float, float], ...]
    period_estimate: float | None
    envelope_rate: float | None
    n_peaks: int = 0


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, stop) index runs where mask is True."""
    runs = []
    k, n = 0, len(mask)
    while k < n:
        if mask[k]:
            j = k
            while j < n and mask[j]:
                j += 1
            runs.append((k, j))
            k = j
        else:
            k += 1
    return runs


def _refined_maxima(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Interior local maxima with three-point parabolic refinement."""
    if len(y) < 3:
        return np.empty(0), np.empty(0)
    i = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    ym, y0, yp = y[i - 1], y[i], y[i + 1]
    denom = ym - 2 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(denom != 0, 0.5 * (ym - yp) / denom, 0.0)
    h = t[1] - t[0]
    return t[i] + delta * h, y0 - 0.25 * (ym - yp) * delta


def detect_events(samples, tol: float = SUDDEN_DEATH_TOL, signal=None, steady=None,
                  floor: float = 1e-8) -> EventReport:
    """Sudden death, revivals, oscillation period and envelope decay rate.

    ``signal`` defaults to the Hilbert-Schmidt MIN and ``steady`` to the last
    value of the signal. The period is the mean spacing of the signal's
    maxima; the envelope rate comes from a log-linear least-squares fit of
    the peak heights of |signal - steady|. Peaks smaller than ``floor``
    times the largest deviation are ignored. With fewer than 3 usable peaks
    the period or rate is reported as None.
    """
    t = np.array([s.t for s in samples], dtype=float)
    conc = np.array([s.concurrence for s in samples], dtype=float)
    sig = np.array([s.min_hs for s in samples] if signal is None else signal, dtype=float)
    if len(sig) != len(t):
        raise ValueError("signal length does not match the series")
    ref = float(sig[-1]) if steady is None else float(steady)

    zero = conc <= tol
    death = None
    if len(zero) and zero[-1] and np.any(~zero):
        start = _runs(zero)[-1][0]
        death = float(t[start])
    revivals = []
    for start, stop in _runs(~zero):
        if start > 0 and zero[start - 1]:
            revivals.append((float(t[start]), float(t[stop - 1])))

    dev = np.abs(sig - ref)
    cutoff = max(floor * float(dev.max(initial=0.0)), 1e-14)

    pt, _ = _refined_maxima(t, sig)
    keep = np.abs(np.interp(pt, t, sig) - ref) > cutoff if len(pt) else np.empty(0, bool)
    pt = pt[keep]
    period = float((pt[-1] - pt[0]) / (len(pt) - 1)) if len(pt) >= 3 else None

    et, eh = _refined_maxima(t, dev)
    mask = eh > cutoff
    et, eh = et[mask], eh[mask]
    rate = None
    if len(et) >= 3:
        slope = np.polyfit(et, np.log(eh), 1)[0]
        rate = float(-slope)
    return EventReport(death, tuple(revivals), period, rate, n_peaks=int(len(et)))


# --- sweeps -------------------------------------------------------------

PARAM_KEYS = ("j_plus", "j_minus", "j_z", "dm", "field", "inhomogeneity", "gamma")


@dataclass(frozen=True)
class SweepRow:
    values: tuple[tuple[str, float], ...]
    steady_concurrence: float | None = None
    steady_min_hs: float | None = None
    steady_min_trace: float | None = None
    sudden_death_time: float | None = None
    mean_concurrence: float | None = None
    skipped: str | None = None


SWEEP_COLUMNS = ("steady_concurrence", "steady_min_hs", "steady_min_trace",
                 "sudden_death_time", "mean_concurrence", "status")


def _cell_config(cfg: RunConfig, values: dict[str, float]) -> RunConfig:
    pchanges = {k: v for k, v in values.items() if k in PARAM_KEYS}
    params = cfg.params.replace(**pchanges)
    scenario = cfg.scenario
    if "p" in values:
        scenario = replace(scenario, p=values["p"])
    return replace(cfg, params=params, scenario=scenario, out_path=None)


def _sweep_cell(args) -> SweepRow:
    cfg, values = args
    key = tuple(values.items())
    try:
        cell = _cell_config(cfg, values)
        s0 = make_initial_state(cell.scenario)
        ss = steady_state(s0, cell.params)
        run = run_scenario(cell, write=False)
    except DomainError as exc:
        return SweepRow(key, skipped=str(exc))
    conc = np.array([s.concurrence for s in run.samples])
    hs, tr = min_xstate(ss)
    report = detect_events(run.samples)
    return SweepRow(
        key,
        steady_concurrence=concurrence_xstate(ss),
        steady_min_hs=hs,
        steady_min_trace=tr,
        sudden_death_time=report.sudden_death_time,
        mean_concurrence=float(conc.mean()),
    )


def sweep(grid: dict[str, list[float]], cfg: RunConfig, jobs: int = 1) -> list[SweepRow]:
    """Evaluate steady-state correlations over the Cartesian product of ``grid``.

    Rows come back in grid order (first key varies slowest) whatever the
    number of workers.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("sweep grid must be non-empty")
    for k in grid:
        if k not in PARAM_KEYS and k != "p":
            raise ConfigError(f"cannot sweep over {k!r}; expected one of {PARAM_KEYS + ('p',)}")
    keys = list(grid)
    cells = [(cfg, dict(zip(keys, combo))) for combo in itertools.product(*grid.values())]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(c) for c in cells]


def render_sweep(rows: list[SweepRow], fmt: str = "csv") -> str:
    keys = [k for k, _ in rows[0].values]

    def cell(v):
        return "" if v is None else _fmt(v)

    if fmt == "json":
        recs = []
        for r in rows:
            rec = dict(r.values)
            for col in SWEEP_COLUMNS[:-1]:
                rec[col] = getattr(r, col)
            rec["status"] = "ok" if r.skipped is None else f"skipped: {r.skipped}"
            recs.append(rec)
        return json.dumps({"rows": recs}, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys + list(SWEEP_COLUMNS))
    for r in rows:
        vals = [cell(v) for _, v in r.values]
        vals += [cell(getattr(r, col)) for col in SWEEP_COLUMNS[:-1]]
        vals.append("ok" if r.skipped is None else f"skipped: {r.skipped}")
        writer.writerow(vals)
    return buf.getvalue()


# --- figure parameter sets ----------------------------------------------

FIGURE_T_MAX = 20.0
FIGURE_DT = 0.05
_COMMON = dict(j_plus=1.0, j_minus=0.5, j_z=1.0, dm=1.0, field=1.0, inhomogeneity=0.5)


def figure_panels(number: int) -> list[tuple[str, RunConfig]]:
    """Named panels for the five figure parameter sets (Jz defaults to 1)."""
    def cfg(kind, p, gamma, **over):
        params = ModelParams(**{**_COMMON, **over, "gamma": gamma})
        return RunConfig(params=params, scenario=ScenarioSpec(kind, p),
                         t_max=FIGURE_T_MAX, dt_sample=FIGURE_DT)

    gammas = (0.05, 0.1, 0.3)
    if number == 1:
        return [("top", cfg("prod00", 1.0, 0.05, dm=0.0, field=0.0, inhomogeneity=0.0)),
                ("bottom", cfg("prod00", 1.0, 0.05, dm=3.0))]
    kinds = {2: ("bell-phi", 1.0), 3: ("bell-psi", 1.0), 4: ("bell-phi", 0.6), 5: ("prod00", 0.6)}
    if number not in kinds:
        raise ConfigError(f"figure must be 1..5, got {number}")
    kind, p = kinds[number]
    return [(f"gamma{g:g}", cfg(kind, p, g)) for g in gammas]


# --- reference steady-state values --------------------------------------

@dataclass(frozen=True)
class ReferenceValue:
    kind: str
    p: float
    params: dict
    quantity: str  # "concurrence" | "min_hs" | "min_trace" | "min_any"
    value: float
    note: str = ""


REFERENCE_STEADY = (
    ReferenceValue("bell-phi", 1.0, _COMMON, "concurrence", 0.2),
    ReferenceValue("bell-phi", 1.0, _COMMON, "min_hs", 0.025,
                   "reference N2 differs from 2|r14(inf)|^2; source of mismatch unknown"),
    ReferenceValue("prod00", 1.0, {**_COMMON, "dm": 3.0}, "concurrence", 0.236,
                   "not reproduced by the element formulas; source of mismatch unknown"),
    ReferenceValue("prod00", 1.0, {**_COMMON, "dm": 3.0}, "min_hs", 0.025,
                   "not reproduced by the element formulas; source of mismatch unknown"),
    ReferenceValue("bell-phi", 0.6, _COMMON, "min_any", 0.049,
                   "matches neither MIN; source of mismatch unknown"),
)


@dataclass(frozen=True)
class SteadyComparison:
    quantity: str
    reference: float
    computed: tuple[float, ...]
    agrees: bool
    note: str


def compare_reference(spec: ScenarioSpec, params: ModelParams, state: XState,
                      tol: float = 1e-6) -> list[SteadyComparison]:
    """Match a steady state against reference values for the same setup."""
    hs, tr = min_xstate(state)
    values = {"concurrence": (concurrence_xstate(state),), "min_hs": (hs,),
              "min_trace": (tr,), "min_any": (hs, tr)}
    out = []
    for ref in REFERENCE_STEADY:
        if ref.kind != spec.kind or abs(ref.p - spec.p) > 1e-12:
            continue
        if any(abs(getattr(params, k) - v) > 1e-12 for k, v in ref.params.items() if k != "j_z"):
            continue
        got = values[ref.quantity]
        agrees = any(abs(g - ref.value) <= tol for g in got)
        out.append(SteadyComparison(ref.quantity, ref.value, got, agrees, ref.note))
    return out


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
