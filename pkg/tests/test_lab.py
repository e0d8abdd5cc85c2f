import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import fig2_params
from qdecoh.errors import ConfigError
from qdecoh.evolve import evolve_spectral, steady_state
from qdecoh.lab import (
    BASE_COLUMNS,
    ELEMENT_COLUMNS,
    RunConfig,
    compare_reference,
    default_t_max,
    detect_events,
    figure_panels,
    render_series,
    render_sweep,
    run_scenario,
    sweep,
    write_series,
)
from qdecoh.measures import CorrelationSample, concurrence_xstate, min_xstate
from qdecoh.states import ScenarioSpec, make_initial_state

GOLDEN = Path(__file__).parent / "golden"


def cfg_for(kind="bell-phi", p=1.0, gamma=0.05, **kw):
    params = fig2_params(gamma, **{k: kw.pop(k) for k in list(kw) if k in
                                   ("j_plus", "j_minus", "dm", "field", "inhomogeneity")})
    return RunConfig(params=params, scenario=ScenarioSpec(kind, p), **kw)


def synthetic(t, y, conc=None):
    conc = np.zeros_like(t) if conc is None else conc
    return [CorrelationSample(float(a), float(c), float(v), 0.0, 1.0) for a, c, v in zip(t, conc, y)]


class TestSeriesOutput:
    def test_three_samples(self, tmp_path):
        res = run_scenario(cfg_for(t_max=0.1, dt_sample=0.05), write=False)
        path = tmp_path / "s.csv"
        write_series(res.samples, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert lines[0] == "t,concurrence,min_hs,min_trace,purity"
        assert lines[1] == "0,1,0.5,1,1"

    def test_elements_columns_and_repeatability(self, tmp_path):
        cfg = cfg_for(t_max=2.0, dt_sample=0.1, outputs={"correlations", "elements"},
                      out_path=str(tmp_path / "a.csv"))
        run_scenario(cfg)
        run_scenario(cfg.__class__(**{**cfg.__dict__, "out_path": str(tmp_path / "b.csv")}))
        a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
        assert a == b
        header = a.decode().splitlines()[0].split(",")
        assert tuple(header) == BASE_COLUMNS + ELEMENT_COLUMNS

    def test_json_mirrors_csv(self):
        res = run_scenario(cfg_for(t_max=1.0, dt_sample=0.25), write=False)
        doc = json.loads(render_series(res.samples, "json"))
        assert doc["fields"] == list(BASE_COLUMNS)
        csv_rows = render_series(res.samples, "csv").splitlines()[1:]
        for rec, line in zip(doc["samples"], csv_rows):
            assert [rec[c] for c in BASE_COLUMNS] == [float(x) for x in line.split(",")]

    def test_unwritable_path(self, tmp_path):
        res = run_scenario(cfg_for(t_max=0.1, dt_sample=0.05), write=False)
        bad = tmp_path / "missing" / "x.csv"
        with pytest.raises(OSError, match="missing"):
            write_series(res.samples, bad)

    def test_empty_series(self):
        with pytest.raises(ValueError):
            render_series([])


class TestRunScenario:
    def test_initial_and_long_time_bell(self):
        res = run_scenario(cfg_for(t_max=200.0, dt_sample=0.5), write=False)
        first, last = res.samples[0], res.samples[-1]
        assert (first.concurrence, first.min_trace, first.min_hs) == pytest.approx((1, 1, 0.5))
        assert last.concurrence == pytest.approx(0.2, abs=1e-4)
        assert last.min_hs == pytest.approx(0.02, abs=1e-4)

    def test_undamped_bell_psi_is_periodic(self):
        p = fig2_params(0.0)
        period = math.pi / p.eta
        res = run_scenario(RunConfig(params=p, scenario=ScenarioSpec("bell-psi", 1.0),
                                     t_max=10.0, dt_sample=0.1), write=False)
        shifted = evolve_spectral(make_initial_state(ScenarioSpec("bell-psi", 1.0)), p,
                                  res.trajectory.times + period)
        np.testing.assert_allclose(shifted, res.trajectory.states, atol=1e-12)

    def test_default_horizon(self):
        p = fig2_params(0.1)
        assert default_t_max(p) == pytest.approx(25 / (2 * 0.1 * 1.25))
        assert default_t_max(p.replace(gamma=0.0)) == 20.0
        cfg = RunConfig(params=p).resolved()
        assert cfg.t_max == pytest.approx(100.0)
        assert cfg.dt_sample == pytest.approx(math.pi / p.mu / 64)

    def test_engines_agree_through_runner(self):
        base = run_scenario(cfg_for("prod00", t_max=5.0, dt_sample=0.25), write=False)
        for engine in ("xclosed", "kraus"):
            other = run_scenario(cfg_for("prod00", t_max=5.0, dt_sample=0.25, engine=engine),
                                 write=False)
            np.testing.assert_allclose(other.trajectory.states, base.trajectory.states, atol=1e-9)

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            cfg_for(engine="euler")
        with pytest.raises(ConfigError):
            cfg_for(outputs={"spin"})
        with pytest.raises(ConfigError):
            cfg_for(t_max=-1.0)
        with pytest.raises(ConfigError, match="ode_dt"):
            cfg_for(engine="ode", t_max=1.0, dt_sample=0.01, ode_dt=0.05).resolved()


class TestDetectEvents:
    def test_synthetic_damped_cosine(self):
        t = np.arange(0, 40, 0.02)
        omega, rate = 2.3, 0.07
        y = 0.3 + np.exp(-rate * t) * np.cos(omega * t)
        rep = detect_events(synthetic(t, y), steady=0.3)
        assert rep.period_estimate == pytest.approx(2 * math.pi / omega, rel=0.005)
        assert rep.envelope_rate == pytest.approx(rate, rel=0.01)

    def test_too_few_peaks(self):
        t = np.linspace(0, 1, 50)
        rep = detect_events(synthetic(t, np.exp(-t)))
        assert rep.period_estimate is None and rep.envelope_rate is None

    def test_sudden_death_and_revivals(self):
        t = np.arange(10.0)
        conc = np.array([1, 0.5, 0, 0, 0.2, 0.1, 0, 0, 0, 0], float)
        rep = detect_events(synthetic(t, np.zeros(10), conc))
        assert rep.sudden_death_time == 6.0
        assert rep.revival_intervals == ((4.0, 5.0),)

    def test_never_entangled_has_no_death(self):
        t = np.arange(5.0)
        assert detect_events(synthetic(t, np.zeros(5))).sudden_death_time is None

    def test_werner_bell_phi_dies(self):
        res = run_scenario(cfg_for("bell-phi", 0.6, t_max=20.0, dt_sample=0.05), write=False)
        rep = detect_events(res.samples)
        assert rep.sudden_death_time is not None and 0 < rep.sudden_death_time < 20
        assert res.samples[-1].min_trace > 5e-3 and res.samples[-1].min_hs > 5e-3

    def test_bell_phi_period_from_default_signal(self):
        p = fig2_params(0.05)
        res = run_scenario(RunConfig(params=p, t_max=40.0, dt_sample=0.01), write=False)
        rep = detect_events(res.samples)
        assert rep.period_estimate == pytest.approx(math.pi / p.mu, rel=0.01)

    def test_bell_psi_rate_from_population(self):
        p = fig2_params(0.05)
        res = run_scenario(RunConfig(params=p, scenario=ScenarioSpec("bell-psi", 1.0),
                                     t_max=40.0, dt_sample=0.01), write=False)
        ss = steady_state(make_initial_state(ScenarioSpec("bell-psi", 1.0)), p)
        rep = detect_events(res.samples, signal=res.trajectory.states[:, 1, 1].real, steady=ss.b)
        assert rep.envelope_rate == pytest.approx(2 * 0.05 * p.eta**2, rel=0.02)
        assert rep.period_estimate == pytest.approx(math.pi / p.eta, rel=0.01)

    def test_signal_length_mismatch(self):
        t = np.arange(5.0)
        with pytest.raises(ValueError):
            detect_events(synthetic(t, np.zeros(5)), signal=np.zeros(4))


class TestSweep:
    def test_gamma_does_not_change_steady_columns(self):
        rows = sweep({"gamma": [0.05, 0.1, 0.3]}, cfg_for(t_max=5.0, dt_sample=0.1))
        cols = [(r.steady_concurrence, r.steady_min_hs, r.steady_min_trace) for r in rows]
        for c in cols[1:]:
            assert c == pytest.approx(cols[0], abs=1e-12)

    def test_dm_sweep_bell_psi_matches_long_time_evolution(self):
        rows = sweep({"dm": [0.0, 1.0, 3.0]}, cfg_for("bell-psi", t_max=5.0, dt_sample=0.1))
        hs = []
        for r in rows:
            p = fig2_params(0.05, dm=dict(r.values)["dm"])
            rho = evolve_spectral(make_initial_state(ScenarioSpec("bell-psi", 1.0)), p, 2000.0)
            assert r.steady_min_hs == pytest.approx(2 * abs(rho[1, 2]) ** 2, abs=1e-9)
            hs.append(r.steady_min_hs)
        # |r23(inf)| = J+ sqrt(D^2 + J+^2) / (2 eta^2) shrinks as D grows
        assert hs[0] > hs[1] > hs[2]
        expected = [2 * (math.hypot(d, 1.0) / (2 * (0.25 + d * d + 1.0))) ** 2 for d in (0, 1, 3)]
        assert hs == pytest.approx(expected, abs=1e-12)

    def test_field_sweep_reduces_mean_concurrence(self):
        rows = sweep({"field": [0.0, 1.0, 2.0]}, cfg_for("prod00", t_max=20.0, dt_sample=0.05))
        means = [r.mean_concurrence for r in rows]
        assert means[0] > means[1] > means[2]

    def test_parallel_keeps_order(self):
        grid = {"gamma": [0.3, 0.05], "p": [1.0, 0.6]}
        cfg = cfg_for(t_max=5.0, dt_sample=0.1)
        serial = sweep(grid, cfg, jobs=1)
        parallel = sweep(grid, cfg, jobs=2)
        assert serial == parallel
        assert [r.values for r in serial] == [
            (("gamma", 0.3), ("p", 1.0)), (("gamma", 0.3), ("p", 0.6)),
            (("gamma", 0.05), ("p", 1.0)), (("gamma", 0.05), ("p", 0.6))]

    def test_singular_cells_are_skipped(self):
        rows = sweep({"gamma": [0.0, 0.1]}, cfg_for(t_max=2.0, dt_sample=0.1))
        assert rows[0].skipped and "gamma" in rows[0].skipped
        assert rows[1].skipped is None
        text = render_sweep(rows)
        assert "skipped" in text.splitlines()[1] and text.splitlines()[2].endswith(",ok")

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            sweep({"spin": [1.0]}, cfg_for())
        with pytest.raises(ConfigError):
            sweep({}, cfg_for())


class TestReference:
    def test_bell_phi_flags_hs_only(self):
        p = fig2_params(0.05)
        spec = ScenarioSpec("bell-phi", 1.0)
        ss = steady_state(make_initial_state(spec), p)
        got = {c.quantity: c for c in compare_reference(spec, p, ss)}
        assert got["concurrence"].agrees
        assert not got["min_hs"].agrees and got["min_hs"].reference == 0.025

    def test_werner_value_unreconciled(self):
        p = fig2_params(0.1)
        spec = ScenarioSpec("bell-phi", 0.6)
        ss = steady_state(make_initial_state(spec), p)
        (c,) = compare_reference(spec, p, ss)
        assert not c.agrees
        assert c.computed == pytest.approx((0.0072, 0.12))
        assert concurrence_xstate(ss) == 0.0
        assert tuple(min_xstate(ss)) == pytest.approx((0.0072, 0.12))


class TestFigures:
    def test_panel_sets(self):
        assert [n for n, _ in figure_panels(1)] == ["top", "bottom"]
        for k in (2, 3, 4, 5):
            panels = figure_panels(k)
            assert [c.params.gamma for _, c in panels] == [0.05, 0.1, 0.3]
        with pytest.raises(ConfigError):
            figure_panels(6)

    @pytest.mark.parametrize("number", [1, 2, 3, 4, 5])
    def test_golden(self, number):
        for label, cfg in figure_panels(number):
            text = render_series(run_scenario(cfg, write=False).samples)
            golden = (GOLDEN / f"fig{number}_{label}.csv").read_text()
            assert text == golden, f"fig{number}_{label} drifted from golden output"

    def test_golden_anchors(self):
        # spot values of the frozen files checked against closed forms
        rows = (GOLDEN / "fig2_gamma0.05.csv").read_text().splitlines()
        assert rows[1] == "0,1,0.5,1,1"
        rows = (GOLDEN / "fig5_gamma0.1.csv").read_text().splitlines()
        assert rows[1] == "0,0,0,0,0.52"  # populations 0.7, 0.1, 0.1, 0.1
