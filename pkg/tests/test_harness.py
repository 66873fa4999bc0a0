import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from swarmstab import cli
from swarmstab.harness import (
    DEFAULT_BASELINE,
    RunConfig,
    comparison_row,
    compare,
    load_run_config,
    read_trace_csv,
    run_simulation,
    run_tuning,
    simulate_controller,
    trace_metrics,
    validate_file,
    write_trace_csv,
)
from swarmstab.lti import settling_time
from swarmstab.objective import Disturbance, Scenario, itae_from_channels
from swarmstab.optim import BfoConfig, PsoConfig
from swarmstab.plant import nominal_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


def tiny_run_config(**overrides):
    """Small optimizer budgets so harness tests stay quick."""
    base = RunConfig(
        scenario=Scenario(plant_config=nominal_config(), label="tiny"),
        optimizer="pso",
        pso=PsoConfig(n_particles=6, n_iters=8, seed=1),
        bfo=BfoConfig(s_pop=6, n_c=3, n_s=2, n_re=1, n_ed=1, seed=1,
                      step_size=(2.0, 2.0, 2.0, 2.0, 0.05, 0.05)),
    )
    return dataclasses.replace(base, **overrides)


class TestConfigLoading:
    def test_shipped_run_config(self):
        cfg = load_run_config(CONFIG_DIR / "run_a.json")
        assert cfg.scenario.label == "scenario_a"
        assert cfg.optimizer == "pso"
        assert cfg.scenario.plant_config.label == "nominal"
        assert cfg.baseline == DEFAULT_BASELINE

    def test_shipped_scenarios_differ_in_plant(self):
        a = load_run_config(CONFIG_DIR / "run_a.json")
        b = load_run_config(CONFIG_DIR / "run_b.json")
        assert a.scenario.plant_config.machine.k1 != b.scenario.plant_config.machine.k1
        assert a.scenario.plant_config.operating_point != b.scenario.plant_config.operating_point

    def test_missing_file_mentions_path(self, tmp_path):
        with pytest.raises(Exception, match="no_such"):
            load_run_config(tmp_path / "no_such.json")

    def test_validate_shipped_files(self):
        for name in ("run_a.json", "run_b.json", "scenario_a.json",
                     "scenario_b.json", "nominal.json", "heavy.json",
                     "compare.json"):
            assert validate_file(CONFIG_DIR / name) == [], name

    def test_optimizer_config_requires_algo(self, tmp_path):
        cfg = {"scenario": {"label": "x", "plant_config": nominal_config().to_dict()},
               "optimizer": "none", "optimizer_config": {"seed": 3}}
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(cfg))
        with pytest.raises(Exception, match="optimizer_config"):
            load_run_config(p)

    def test_baseline_fixed_constants_enforced(self, tmp_path):
        gains = {"pid": {"kp": 1.0, "ki": 1.0, "kd": 0.0, "n_filter": 100.0},
                 "stabilizer": {"kc": 1.0, "t1c": 0.1, "t3c": 0.1,
                                "tw": 5.0, "t2c": 0.05, "t4c": 0.05}}
        cfg = {"scenario": {"label": "x", "plant_config": nominal_config().to_dict()},
               "baseline_gains": gains}
        p = tmp_path / "run.json"
        p.write_text(json.dumps(cfg))
        with pytest.raises(Exception, match="tw"):
            load_run_config(p)


class TestRunSimulation:
    def test_outputs_and_row_count(self, tmp_path):
        cfg = tiny_run_config()
        trace, metrics = run_simulation(cfg, out_dir=tmp_path)
        data = read_trace_csv(tmp_path / "trace.csv")
        expected_rows = int(round(cfg.scenario.weights.t_sim / cfg.scenario.dt)) + 1
        assert len(data["t"]) == expected_rows
        assert (tmp_path / "metrics.json").exists()
        assert (tmp_path / "response.png").exists()

    def test_zero_disturbance_all_zero_columns(self, tmp_path):
        sc = Scenario(plant_config=nominal_config(), label="quiet",
                      disturbance=Disturbance("step", magnitude=0.0))
        run_simulation(tiny_run_config(scenario=sc), out_dir=tmp_path)
        data = read_trace_csv(tmp_path / "trace.csv")
        for col, series in data.items():
            if col != "t":
                assert np.all(series == 0.0), col

    def test_metrics_match_offline_recomputation(self, tmp_path):
        cfg = tiny_run_config()
        _, metrics = run_simulation(cfg, out_dir=tmp_path)
        data = read_trace_csv(tmp_path / "trace.csv")
        recomputed = settling_time(data["t"], data["delta_omega"], 0.0, band=0.02)
        assert recomputed == metrics["channels"]["delta_omega"]["settling_time"]

    def test_itae_round_trip(self, tmp_path):
        cfg = tiny_run_config()
        _, metrics = run_simulation(cfg, out_dir=tmp_path)
        data = read_trace_csv(tmp_path / "trace.csv")
        recomputed = itae_from_channels(data["t"], data["delta_omega"],
                                        data["delta_vm"], data["delta_vdc"],
                                        cfg.scenario.weights)
        assert recomputed == pytest.approx(metrics["itae"], rel=1e-9)


class TestRunTuning:
    def test_report_files_and_monotone_history(self, tmp_path):
        cfg = tiny_run_config()
        result, report = run_tuning(cfg, out_dir=tmp_path)
        for name in ("convergence.csv", "report.json", "report.txt",
                     "convergence.png", "response_comparison.png"):
            assert (tmp_path / name).exists(), name
        assert result.history[-1].best_cost_so_far <= result.history[0].best_cost_so_far
        # convergence rows mirror the history
        lines = (tmp_path / "convergence.csv").read_text().strip().splitlines()
        assert len(lines) - 1 == len(result.history)
        assert {r.label for r in report.rows} == {"baseline-pid", "pso-pid"}

    def test_report_embeds_resolved_config(self, tmp_path):
        run_tuning(tiny_run_config(), out_dir=tmp_path)
        report = json.loads((tmp_path / "report.json").read_text())
        cfg = report["config"]
        assert cfg["scenario"]["plant_config"]["machine"]["k1"] == pytest.approx(0.996483)
        assert cfg["pso"]["n_particles"] == 6
        assert "output_dir" not in cfg

    def test_seed_override_recorded(self, tmp_path):
        result, report = run_tuning(tiny_run_config(), seed=77, out_dir=tmp_path)
        assert result.seed == 77
        assert report.seed == 77

    def test_byte_identical_reports(self, tmp_path):
        cfg = tiny_run_config()
        run_tuning(cfg, seed=5, out_dir=tmp_path / "one")
        run_tuning(cfg, seed=5, out_dir=tmp_path / "two")
        run_tuning(cfg, seed=5, workers=3, out_dir=tmp_path / "three")
        ref = (tmp_path / "one" / "report.json").read_bytes()
        assert (tmp_path / "two" / "report.json").read_bytes() == ref
        assert (tmp_path / "three" / "report.json").read_bytes() == ref

    def test_requires_optimizer(self, tmp_path):
        with pytest.raises(Exception, match="optimizer"):
            run_tuning(tiny_run_config(optimizer="none"), out_dir=tmp_path)


class TestCompare:
    def test_two_scenarios_three_rows(self, tmp_path):
        cfg_a = tiny_run_config()
        sc_b = Scenario(plant_config=nominal_config(), label="tiny_b",
                        disturbance=Disturbance("step", magnitude=0.05))
        cfg_b = tiny_run_config(scenario=sc_b)
        reports = compare([cfg_a, cfg_b], out_dir=tmp_path)
        assert len(reports) == 2
        for report in reports:
            assert len(report.rows) == 3
            assert [r.label for r in report.rows] == ["baseline-pid", "pso-pid", "bfo-pid"]
            for row in report.rows:
                assert row.stable and row.max_re_eig < 0.0
        assert (tmp_path / "comparison_report.json").exists()
        assert (tmp_path / "tiny" / "response_comparison.png").exists()

    def test_stable_ordering_across_reruns(self, tmp_path):
        cfg = tiny_run_config()
        r1 = compare([cfg], out_dir=tmp_path / "x")
        r2 = compare([cfg], out_dir=tmp_path / "y")
        assert r1 == r2


class TestTraceCsv:
    def test_exact_round_trip(self, tmp_path):
        cfg = tiny_run_config()
        trace = simulate_controller(cfg.scenario, cfg.baseline)
        write_trace_csv(trace, tmp_path / "t.csv")
        data = read_trace_csv(tmp_path / "t.csv")
        assert np.array_equal(data["delta_omega"], trace.channel("delta_omega"))
        assert np.array_equal(data["delta_eq"], trace.channel("plant.delta_eq"))


class TestCli:
    def test_validate_shipped_scenario(self):
        assert cli.main(["validate", "--config", str(CONFIG_DIR / "scenario_a.json")]) == 0

    def test_missing_config_exit_1(self, capsys):
        rc = cli.main(["simulate", "--config", "/nonexistent/nope.json"])
        assert rc == 1
        assert "nope.json" in capsys.readouterr().err

    def test_unknown_flag_exit_1(self, capsys):
        assert cli.main(["simulate", "--config", "x.json", "--bogus"]) == 1

    def test_unknown_command_exit_1(self):
        assert cli.main(["frobnicate"]) == 1

    def test_simulate_roundtrip(self, tmp_path):
        rc = cli.main(["simulate", "--config", str(CONFIG_DIR / "run_a.json"),
                       "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "trace.csv").exists()

    def test_env_var_default_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SWARMSTAB_OUT", str(tmp_path / "envout"))
        rc = cli.main(["simulate", "--config", str(CONFIG_DIR / "run_a.json")])
        assert rc == 0
        assert (tmp_path / "envout" / "trace.csv").exists()

    def test_tune_help_lists_flags(self, capsys):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["tune", "--help"])
        out = capsys.readouterr().out
        for flag in ("--config", "--algo", "--seed", "--workers", "--out"):
            assert flag in out
