"""Command-line interface.

Exit codes: 0 success, 1 failed validation checks, 2 configuration error,
3 physics-domain error (e.g. singular parameters), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .errors import ConfigError, DomainError, ValidationError
from .evolve import ENGINES, evolve, steady_state
from .lab import (
    FORMATS,
    OUTPUT_KINDS,
    RunConfig,
    compare_reference,
    default_jobs,
    detect_events,
    figure_panels,
    render_series,
    render_sweep,
    run_scenario,
    sweep,
    write_series,
)
from .measures import (
    concurrence_general,
    concurrence_xstate,
    min_hs_closed,
    min_numeric,
    min_trace_closed,
    min_xstate,
    purity,
)
from .model import ModelParams, analytic_spectrum, build_hamiltonian
from .states import SCENARIOS, ScenarioSpec, XState, make_initial_state

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3, 4

# config-file / flag key -> canonical key
_ALIASES = {
    "jp": "j_plus", "jm": "j_minus", "jz": "j_z", "lambda": "inhomogeneity",
    "out": "out_path", "t-max": "t_max", "dt-sample": "dt_sample", "ode-dt": "ode_dt",
    "kind": "scenario", "raw-state": "raw_state", "kraus-tol": "kraus_tol",
}
_PARAM_KEYS = ("j_plus", "j_minus", "j_z", "dm", "field", "inhomogeneity", "gamma")
_FLOAT_KEYS = _PARAM_KEYS + ("p", "t_max", "dt_sample", "ode_dt", "kraus_tol")


def _canon(key: str) -> str:
    key = key.strip().lower()
    key = _ALIASES.get(key, key)
    return key.replace("-", "_")


def load_config_file(path: str) -> dict:
    """Read flat ``key = value`` text or a JSON object into canonical keys."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read config {path}: {exc.strerror}") from exc
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        flat = {}
        for k, v in obj.items():
            if k == "params" and isinstance(v, dict):
                flat.update({_canon(pk): pv for pk, pv in v.items()})
            elif k == "scenario" and isinstance(v, dict):
                for sk, sv in v.items():
                    flat[{"kind": "scenario"}.get(sk, _canon(sk))] = sv
            else:
                flat[_canon(k)] = v
        return flat
    flat = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        flat[_canon(k)] = v.strip()
    return flat


def _parse_raw_state(v) -> XState:
    if isinstance(v, XState):
        return v
    if isinstance(v, dict):
        parts = [v.get(k, 0) for k in ("a", "b", "c", "d", "w", "z")]
    elif isinstance(v, (list, tuple)):
        parts = list(v)
    else:
        parts = [s.strip() for s in str(v).split(",")]
    if len(parts) != 6:
        raise ConfigError("raw_state needs six entries: a,b,c,d,w,z")
    try:
        a, b, c, d = (float(x) for x in parts[:4])
        w, z = (complex(str(x).replace(" ", "")) for x in parts[4:])
    except ValueError as exc:
        raise ConfigError(f"cannot parse raw_state: {exc}") from exc
    return XState(a, b, c, d, w, z)


def build_config(values: dict) -> RunConfig:
    """Assemble a RunConfig from canonical keys (file values already merged with flags)."""
    vals = dict(values)
    unknown = set(vals) - set(_FLOAT_KEYS) - {
        "scenario", "raw_state", "engine", "outputs", "format", "out_path"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for k in _FLOAT_KEYS:
        if k in vals and vals[k] is not None:
            try:
                vals[k] = float(vals[k])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{k} must be a number, got {vals[k]!r}") from exc
    params = ModelParams(**{k: vals[k] for k in _PARAM_KEYS if k in vals})
    raw = _parse_raw_state(vals["raw_state"]) if vals.get("raw_state") else None
    scenario = ScenarioSpec(vals.get("scenario", "bell-phi"), vals.get("p", 1.0), raw)
    outputs = vals.get("outputs", "correlations,purity")
    if isinstance(outputs, str):
        outputs = [o.strip() for o in outputs.split(",") if o.strip()]
    kw = {k: vals[k] for k in ("t_max", "dt_sample", "ode_dt", "kraus_tol", "engine", "format",
                               "out_path") if vals.get(k) is not None}
    return RunConfig(params=params, scenario=scenario, outputs=frozenset(outputs), **kw)


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", default=S, help="key=value or JSON file; flags override it")
    g.add_argument("--scenario", default=S, choices=SCENARIOS + ("bell_phi", "bell_psi"))
    g.add_argument("--p", type=float, default=S, help="mixing probability")
    g.add_argument("--raw-state", dest="raw_state", default=S, metavar="a,b,c,d,w,z")
    for flag, help_ in (("--jp", "J+ = (Jx + Jy)/2"), ("--jm", "J- = (Jx - Jy)/2"),
                        ("--jz", "Jz"), ("--dm", "DM strength D (z axis)"),
                        ("--field", "uniform field B"), ("--lambda", "field inhomogeneity"),
                        ("--gamma", "intrinsic decoherence rate")):
        g.add_argument(flag, type=float, default=S, help=help_)
    g.add_argument("--engine", default=S, choices=ENGINES)
    g.add_argument("--t-max", dest="t_max", type=float, default=S)
    g.add_argument("--dt-sample", dest="dt_sample", type=float, default=S)
    g.add_argument("--ode-dt", dest="ode_dt", type=float, default=S)
    g.add_argument("--kraus-tol", dest="kraus_tol", type=float, default=S)
    g.add_argument("--outputs", default=S, help=f"comma list from {','.join(OUTPUT_KINDS)}")
    g.add_argument("--format", default=S, choices=FORMATS)
    g.add_argument("--out", default=S, help="output file (directory for 'figure')")
    g.add_argument("--jobs", type=int, default=S, help="worker processes for sweeps")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdecoh",
        description="Two-qubit Heisenberg dynamics under intrinsic decoherence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("spectrum", "print the analytic eigensystem"),
        ("evolve", "sample a trajectory and its correlations"),
        ("steady", "steady-state elements and correlations"),
        ("sweep", "steady-state table over a parameter grid"),
        ("figure", "regenerate a figure's series (1..5)"),
        ("validate", "cross-check engines and measure formulas"),
    ):
        sp = sub.add_parser(name, help=help_)
        if name == "figure":
            sp.add_argument("number", type=int, choices=range(1, 6))
        if name == "sweep":
            sp.add_argument("--grid", action="append", required=True, metavar="KEY=v1,v2,...")
        _add_common(sp)
    return parser


def _merged(args: argparse.Namespace) -> dict:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    skip = {"command", "config", "number", "grid", "jobs"}
    for k, v in vars(args).items():
        if k not in skip:
            values[_canon(k)] = v
    return values


def _emit(text: str, path: str | None) -> None:
    if path:
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)


def cmd_spectrum(cfg: RunConfig) -> int:
    sd = analytic_spectrum(cfg.params)
    h = build_hamiltonian(cfg.params)
    residual = max(float(np.linalg.norm(h @ sd.vectors[:, k] - sd.energies[k] * sd.vectors[:, k]))
                   for k in range(4))
    out = {
        "eta": sd.eta, "mu": sd.mu,
        "energies": sd.energies.tolist(),
        "vectors": [[[v.real, v.imag] for v in sd.vectors[:, k]] for k in range(4)],
        "normalizers": [None if math.isnan(n) else n for n in sd.normalizers],
        "degenerate": {f: getattr(sd.flags, f) for f in
                       ("eta_zero", "mu_zero", "eta_abs_lambda", "j_minus_zero")},
        "max_residual": residual,
    }
    _emit(json.dumps(out, indent=1) + "\n", cfg.out_path)
    return EXIT_OK


def cmd_evolve(cfg: RunConfig) -> int:
    res = run_scenario(cfg, write=False)
    states = res.trajectory.states if "elements" in res.config.outputs else None
    if cfg.out_path:
        write_series(res.samples, cfg.out_path, cfg.format, states=states)
        rep = detect_events(res.samples)
        print(f"wrote {len(res.samples)} samples to {cfg.out_path}")
        print(f"sudden death time: {rep.sudden_death_time}")
        print(f"revival intervals: {len(rep.revival_intervals)}")
        print(f"period estimate:   {rep.period_estimate}")
        print(f"envelope rate:     {rep.envelope_rate}")
    else:
        sys.stdout.write(render_series(res.samples, cfg.format, states))
    return EXIT_OK


def cmd_steady(cfg: RunConfig) -> int:
    s0 = make_initial_state(cfg.scenario)
    ss = steady_state(s0, cfg.params)
    hs, tr = min_xstate(ss)
    conc = concurrence_xstate(ss)
    comparisons = compare_reference(cfg.scenario, cfg.params, ss)
    if cfg.format == "json":
        out = {
            "elements": {"r11": ss.a, "r22": ss.b, "r33": ss.c, "r44": ss.d,
                         "r14": [ss.w.real, ss.w.imag], "r23": [ss.z.real, ss.z.imag]},
            "concurrence": conc, "min_hs": hs, "min_trace": tr,
            "purity": purity(ss.to_matrix()),
            "reference": [{"quantity": c.quantity, "reference": c.reference,
                           "computed": list(c.computed), "agrees": c.agrees, "note": c.note}
                          for c in comparisons],
        }
        _emit(json.dumps(out, indent=1) + "\n", cfg.out_path)
        return EXIT_OK
    lines = [
        f"scenario {cfg.scenario.kind} p={cfg.scenario.p:g}",
        f"r11={ss.a:.12g} r22={ss.b:.12g} r33={ss.c:.12g} r44={ss.d:.12g}",
        f"r14={ss.w.real:.12g}{ss.w.imag:+.12g}j r23={ss.z.real:.12g}{ss.z.imag:+.12g}j",
        f"concurrence={conc:.12g} min_hs={hs:.12g} min_trace={tr:.12g}",
    ]
    for c in comparisons:
        got = " / ".join(f"{g:.6g}" for g in c.computed)
        status = "agrees" if c.agrees else "DISCREPANCY"
        line = f"reference {c.quantity}={c.reference:g} computed {got}: {status}"
        lines.append(line + (f" ({c.note})" if c.note and not c.agrees else ""))
    _emit("\n".join(lines) + "\n", cfg.out_path)
    return EXIT_OK


def _parse_grid(specs: list[str]) -> dict[str, list[float]]:
    grid = {}
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"grid spec {spec!r} must look like KEY=v1,v2")
        k, vs = spec.split("=", 1)
        try:
            grid[_canon(k)] = [float(v) for v in vs.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad grid values in {spec!r}") from exc
    return grid


def cmd_sweep(cfg: RunConfig, grid_specs: list[str], jobs: int) -> int:
    rows = sweep(_parse_grid(grid_specs), replace(cfg, out_path=None), jobs=jobs)
    _emit(render_sweep(rows, cfg.format), cfg.out_path)
    return EXIT_OK


def cmd_figure(number: int, out_dir: str | None, fmt: str) -> int:
    out_dir = out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    for label, panel in figure_panels(number):
        res = run_scenario(panel, write=False)
        path = os.path.join(out_dir, f"fig{number}_{label}.{fmt}")
        write_series(res.samples, path, fmt)
        print(path)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    cfg = cfg.resolved()
    t_max = min(cfg.t_max, 20.0)
    times = np.arange(int(math.floor(t_max / 0.05 + 1e-9)) + 1) * 0.05
    s0 = make_initial_state(cfg.scenario)
    ref = evolve(s0, cfg.params, times, "spectral").states
    ok = True
    gates = {"xclosed": 1e-10, "kraus": 1e-8, "ode": 1e-6}
    for engine, gate in gates.items():
        try:
            dev = float(np.max(np.abs(evolve(s0, cfg.params, times, engine).states - ref)))
        except DomainError as exc:
            print(f"SKIP {engine}: {exc}")
            continue
        passed = dev <= gate
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} spectral vs {engine}: max deviation {dev:.3e} "
              f"(gate {gate:g})")
    worst = {"concurrence": 0.0, "min_hs": 0.0, "min_trace": 0.0}
    for rho in ref[:: max(1, len(ref) // 20)]:
        worst["concurrence"] = max(worst["concurrence"], abs(
            concurrence_general(rho) - concurrence_xstate(XState.from_matrix(rho, 1e-10))))
        worst["min_hs"] = max(worst["min_hs"], abs(min_hs_closed(rho) - min_numeric(rho, "hs")))
        worst["min_trace"] = max(worst["min_trace"],
                                 abs(min_trace_closed(rho) - min_numeric(rho, "trace")))
    for name, gate in (("concurrence", 1e-10), ("min_hs", 1e-4), ("min_trace", 1e-3)):
        passed = worst[name] <= gate
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name} closed vs oracle: {worst[name]:.3e} "
              f"(gate {gate:g})")
    return EXIT_OK if ok else EXIT_CHECKS


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(_merged(args))
        jobs = getattr(args, "jobs", None) or default_jobs()
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "evolve":
            return cmd_evolve(cfg)
        if args.command == "steady":
            return cmd_steady(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.grid, jobs)
        if args.command == "figure":
            return cmd_figure(args.number, cfg.out_path, cfg.format)
        return cmd_validate(cfg)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
