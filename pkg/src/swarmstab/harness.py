"""Scenario orchestration: runs, tuning, controller comparison, file output.

Every run writes delimited data (CSV), a machine-readable report (JSON with
the fully resolved configuration embedded), a human-readable table, and
rendered figures, all into one output directory. Reports are byte-stable:
the same config and seed produce identical report.json regardless of where
the output lands or how many evaluation workers are used.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import control, figures, lti, objective, optim
from .objective import DecisionVector, Scenario
from .optim import BfoConfig, OptResult, PsoConfig
from .plant import ConfigError, PlantConfig, build_plant, validate_config

OUT_ENV_VAR = "SWARMSTAB_OUT"

DEFAULT_BASELINE = DecisionVector(values=(5.0, 10.0, 0.5, 10.0, 0.2, 0.2))
DEFAULT_PSO = PsoConfig(n_particles=20, n_iters=99, w=(0.9, 0.4), c1=1.5, c2=1.5)
DEFAULT_BFO = BfoConfig(s_pop=20, n_c=12, n_s=3, n_re=2, n_ed=2, p_ed=0.25,
                        step_size=(2.0, 2.0, 2.0, 2.0, 0.05, 0.05))

TRACE_COLUMNS = ("t", "delta_delta", "delta_omega", "delta_eq", "delta_efd",
                 "delta_vdc", "delta_vm", "u_pid", "u_stab")
_TRACE_CHANNELS = {"delta_delta": "delta_delta", "delta_omega": "delta_omega",
                   "delta_eq": "plant.delta_eq", "delta_efd": "plant.delta_efd",
                   "delta_vdc": "delta_vdc", "delta_vm": "delta_vm",
                   "u_pid": "u_pid", "u_stab": "u_stab"}


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    optimizer: str = "none"           # "pso" | "bfo" | "none"
    pso: PsoConfig = DEFAULT_PSO
    bfo: BfoConfig = DEFAULT_BFO
    baseline: DecisionVector = DEFAULT_BASELINE
    output_dir: Path | None = None
    t_sim: float | None = None        # overrides scenario weights horizon
    dt: float | None = None

    def __post_init__(self):
        if self.optimizer not in ("pso", "bfo", "none"):
            raise ConfigError("optimizer", f"unknown optimizer {self.optimizer!r}")

    def effective_scenario(self) -> Scenario:
        sc = self.scenario
        if self.dt is not None:
            sc = dataclasses.replace(sc, dt=self.dt)
        if self.t_sim is not None:
            weights = dataclasses.replace(sc.weights, t_sim=self.t_sim)
            sc = dataclasses.replace(sc, weights=weights)
        return sc

    def resolved(self) -> dict:
        """Fully expanded configuration for embedding in reports.

        Output location and worker counts are execution details, not part
        of the experiment identity, so they are excluded on purpose.
        """
        return {
            "scenario": self.effective_scenario().to_dict(),
            "optimizer": self.optimizer,
            "pso": self.pso.to_dict(),
            "bfo": self.bfo.to_dict(),
            "baseline": self.baseline.to_dict(),
        }


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    kp: float
    ki: float
    kd: float
    kc: float
    t1c: float
    t3c: float
    itae: float
    settling_time_domega: float
    peak_overshoot_vm: float
    max_re_eig: float
    stable: bool

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass(frozen=True)
class ComparisonReport:
    scenario_label: str
    seed: int | None
    rows: tuple[ComparisonRow, ...]

    def to_dict(self) -> dict:
        return {"scenario_label": self.scenario_label, "seed": self.seed,
                "rows": [r.to_dict() for r in self.rows]}


# --------------------------------------------------------------------------
# config loading

def _load_json(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc


def _resolve_ref(value, base_dir: Path) -> dict:
    """A config value may be an inline dict or a path to another JSON file."""
    if isinstance(value, dict):
        return value
    return _load_json(Path(base_dir) / value)


def load_scenario(value, base_dir: Path) -> Scenario:
    data = _resolve_ref(value, base_dir)
    if "plant_config_ref" in data:
        plant_dict = _resolve_ref(data["plant_config_ref"], base_dir)
        data = {**data, "plant_config": plant_dict}
        data.pop("plant_config_ref")
    if "plant_config" not in data:
        raise ConfigError("scenario", "needs plant_config or plant_config_ref")
    try:
        return Scenario.from_dict(data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("scenario", str(exc)) from exc


def load_baseline(value, base_dir: Path) -> DecisionVector:
    """Baseline gains file: pid and stabilizer blocks with field names as in
    the controller types. The convention-fixed constants must match the
    package defaults so baseline and tuned rows share one realization."""
    data = _resolve_ref(value, base_dir)
    try:
        pid = control.PidGains(**data["pid"])
        stab = control.StabilizerParams(**data["stabilizer"])
    except (KeyError, TypeError) as exc:
        raise ConfigError("baseline_gains", f"malformed gains block: {exc}") from exc
    fixed = {"n_filter": (pid.n_filter, control.DEFAULT_N_FILTER),
             "tw": (stab.tw, control.DEFAULT_TW),
             "t2c": (stab.t2c, control.DEFAULT_T2C),
             "t4c": (stab.t4c, control.DEFAULT_T4C)}
    for name, (got, want) in fixed.items():
        if got != want:
            raise ConfigError(f"baseline_gains.{name}",
                              f"fixed-by-convention constant must be {want}, got {got}")
    return DecisionVector(values=(pid.kp, pid.ki, pid.kd, stab.kc, stab.t1c, stab.t3c))


def load_run_config(path: Path) -> RunConfig:
    path = Path(path)
    data = _load_json(path)
    base_dir = path.parent
    if "scenario" not in data:
        raise ConfigError("scenario", f"{path} has no scenario")
    scenario = load_scenario(data["scenario"], base_dir)
    optimizer = data.get("optimizer", "none")
    pso = DEFAULT_PSO
    bfo = DEFAULT_BFO
    try:
        if "pso" in data:
            pso = PsoConfig(**{**pso.to_dict(), **data["pso"]})
        if "bfo" in data:
            raw = {**bfo.to_dict(), **data["bfo"]}
            raw["swarming"] = optim.SwarmingParams(**raw["swarming"]) \
                if isinstance(raw.get("swarming"), dict) else raw.get("swarming")
            bfo = BfoConfig(**raw)
        if "optimizer_config" in data:
            if optimizer == "pso":
                pso = PsoConfig(**{**pso.to_dict(), **data["optimizer_config"]})
            elif optimizer == "bfo":
                raw = {**bfo.to_dict(), **data["optimizer_config"]}
                raw["swarming"] = optim.SwarmingParams(**raw["swarming"]) \
                    if isinstance(raw.get("swarming"), dict) else raw.get("swarming")
                bfo = BfoConfig(**raw)
            else:
                raise ConfigError("optimizer_config",
                                  "optimizer_config given but optimizer is 'none'")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("optimizer_config", str(exc)) from exc
    baseline = load_baseline(data["baseline_gains"], base_dir) \
        if "baseline_gains" in data else DEFAULT_BASELINE
    pso = dataclasses.replace(pso, v_max=_as_tuple(pso.v_max),
                              v_init=_as_tuple(pso.v_init))
    bfo = dataclasses.replace(bfo, step_size=_as_tuple(bfo.step_size))
    return RunConfig(scenario=scenario, optimizer=optimizer, pso=pso, bfo=bfo,
                     baseline=baseline,
                     output_dir=Path(data["output_dir"]) if data.get("output_dir") else None,
                     t_sim=data.get("t_sim"), dt=data.get("dt"))


def _as_tuple(value):
    if isinstance(value, list):
        return tuple(value)
    return value


def default_output_dir() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR, "out"))


# --------------------------------------------------------------------------
# simulation and metrics

def simulate_controller(scenario: Scenario, dv: DecisionVector) -> lti.SimTrace:
    """Reference-integrator closed-loop trace under the scenario disturbance."""
    pid, stab = dv.as_gains()
    cl = control.assemble_closed_loop(build_plant(scenario.plant_config), pid, stab)
    dist = scenario.disturbance
    switches = objective.disturbance_switches(dist, cl.input_names)
    x0 = objective.initial_state(dist, cl.state_names)

    def u(t):
        vec = np.zeros(cl.n_inputs)
        for ts, uv in switches:
            if t >= ts:
                vec = uv
        return vec

    return lti.integrate(cl, x0, u, scenario.weights.t_sim, scenario.dt,
                         abs_limit=objective.DIVERGENCE_LIMIT)


def trace_metrics(trace: lti.SimTrace, scenario: Scenario,
                  dv: DecisionVector) -> dict:
    pid, stab = dv.as_gains()
    cl = control.assemble_closed_loop(build_plant(scenario.plant_config), pid, stab)
    max_re = float(np.max(lti.eigenvalues(cl.a).real))
    itae = objective.itae_from_channels(trace.t, trace.channel("delta_omega"),
                                        trace.channel("delta_vm"),
                                        trace.channel("delta_vdc"),
                                        scenario.weights)
    channels = {}
    for name in ("delta_omega", "delta_vm", "delta_vdc"):
        m = lti.response_metrics(trace, name, final_value=0.0, band=0.02)
        channels[name] = dict(vars(m))
    return {"itae": itae, "max_re_eig": max_re, "channels": channels}


def comparison_row(label: str, scenario: Scenario, dv: DecisionVector,
                   trace: lti.SimTrace | None = None) -> ComparisonRow:
    if trace is None:
        trace = simulate_controller(scenario, dv)
    metrics = trace_metrics(trace, scenario, dv)
    kp, ki, kd, kc, t1c, t3c = dv.values
    omega = metrics["channels"]["delta_omega"]
    vm = metrics["channels"]["delta_vm"]
    return ComparisonRow(label=label, kp=kp, ki=ki, kd=kd, kc=kc, t1c=t1c,
                         t3c=t3c, itae=metrics["itae"],
                         settling_time_domega=omega["settling_time"],
                         peak_overshoot_vm=vm["peak_overshoot"],
                         max_re_eig=metrics["max_re_eig"],
                         stable=metrics["max_re_eig"] < 0.0)


# --------------------------------------------------------------------------
# file writers

def write_trace_csv(trace: lti.SimTrace, path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        cols = [trace.t] + [trace.channel(_TRACE_CHANNELS[c]) for c in TRACE_COLUMNS[1:]]
        for k in range(len(trace.t)):
            writer.writerow([str(float(col[k])) for col in cols])


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, j] for j, name in enumerate(header)}


def write_convergence_csv(history, path: Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "best_cost", "mean_cost",
                         "dispersal_probability_used"])
        for rec in history:
            prob = "" if rec.dispersal_probability_used is None \
                else str(float(rec.dispersal_probability_used))
            writer.writerow([rec.iteration, str(float(rec.best_cost_so_far)),
                             str(float(rec.mean_cost)), prob])


def write_json(data: dict, path: Path):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def format_report_table(report: ComparisonReport) -> str:
    head = (f"scenario: {report.scenario_label}    seed: {report.seed}\n"
            f"{'controller':<14}{'kp':>9}{'ki':>9}{'kd':>9}{'kc':>9}"
            f"{'t1c':>8}{'t3c':>8}{'itae':>12}{'ts_omega':>10}"
            f"{'peak_vm':>11}{'max_re':>9}  stable\n")
    lines = [head]
    for r in report.rows:
        lines.append(f"{r.label:<14}{r.kp:>9.3f}{r.ki:>9.3f}{r.kd:>9.3f}"
                     f"{r.kc:>9.3f}{r.t1c:>8.3f}{r.t3c:>8.3f}{r.itae:>12.6f}"
                     f"{r.settling_time_domega:>10.3f}"
                     f"{r.peak_overshoot_vm:>11.3e}{r.max_re_eig:>9.4f}"
                     f"  {'yes' if r.stable else 'NO'}\n")
    lines.append("\npeak_vm is the absolute terminal-voltage deviation peak (pu);\n"
                 "ts_omega is the 2% settling time of the speed deviation (s).\n")
    return "".join(lines)


# --------------------------------------------------------------------------
# top-level operations

def run_simulation(cfg: RunConfig, out_dir: Path | None = None):
    """Simulate the baseline closed loop; write trace.csv, metrics.json and
    the response figure. Returns (trace, metrics)."""
    out = Path(out_dir or cfg.output_dir or default_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    scenario = cfg.effective_scenario()
    trace = simulate_controller(scenario, cfg.baseline)
    metrics = trace_metrics(trace, scenario, cfg.baseline)
    write_trace_csv(trace, out / "trace.csv")
    write_json({"scenario_label": scenario.label, "metrics": metrics,
                "config": cfg.resolved()}, out / "metrics.json")
    figures.save_response_figure({"baseline-pid": trace}, out / "response.png",
                                 title=scenario.label)
    return trace, metrics


def run_tuning(cfg: RunConfig, seed: int | None = None, workers: int = 1,
               out_dir: Path | None = None):
    """Tune with the configured optimizer, compare against the baseline, and
    write convergence.csv, report.json, report.txt plus figures.

    Returns (OptResult, ComparisonReport).
    """
    if cfg.optimizer == "none":
        raise ConfigError("optimizer", "run_tuning needs optimizer 'pso' or 'bfo'")
    scenario = cfg.effective_scenario()
    out = Path(out_dir or cfg.output_dir or default_output_dir())
    out.mkdir(parents=True, exist_ok=True)

    if cfg.optimizer == "pso":
        opt_cfg = cfg.pso if seed is None else dataclasses.replace(cfg.pso, seed=seed)
        result = optim.pso_run(opt_cfg, lambda dv: objective.evaluate(dv, scenario),
                               bounds=cfg.baseline.bounds, workers=workers)
    else:
        opt_cfg = cfg.bfo if seed is None else dataclasses.replace(cfg.bfo, seed=seed)
        result = optim.bfo_run(opt_cfg, lambda dv: objective.evaluate(dv, scenario),
                               bounds=cfg.baseline.bounds, workers=workers)

    label = f"{cfg.optimizer}-pid"
    baseline_trace = simulate_controller(scenario, cfg.baseline)
    tuned_trace = simulate_controller(scenario, result.best)
    report = ComparisonReport(
        scenario_label=scenario.label, seed=opt_cfg.seed,
        rows=(comparison_row("baseline-pid", scenario, cfg.baseline, baseline_trace),
              comparison_row(label, scenario, result.best, tuned_trace)))

    write_convergence_csv(result.history, out / "convergence.csv")
    resolved = cfg.resolved()
    resolved[cfg.optimizer] = {**resolved[cfg.optimizer], "seed": opt_cfg.seed}
    write_json({"report": report.to_dict(), "config": resolved,
                "best": result.best.to_dict(), "best_cost": result.best_cost,
                "evaluations": result.evaluations, "seed": result.seed},
               out / "report.json")
    with open(out / "report.txt", "w") as fh:
        fh.write(format_report_table(report))
    figures.save_convergence_figure(result.history, out / "convergence.png",
                                    title=f"{scenario.label} {label}")
    figures.save_response_figure({"baseline-pid": baseline_trace, label: tuned_trace},
                                 out / "response_comparison.png",
                                 title=scenario.label)
    return result, report


def compare(cfgs: list[RunConfig], workers: int = 1,
            out_dir: Path | None = None) -> list[ComparisonReport]:
    """Side-by-side study: baseline, pso-pid and bfo-pid per scenario.

    Writes one subdirectory per scenario plus an aggregate comparison
    report; returns the per-scenario reports.
    """
    out = Path(out_dir or default_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for cfg in cfgs:
        scenario = cfg.effective_scenario()
        sub = out / (scenario.label or f"scenario_{len(reports)}")
        sub.mkdir(parents=True, exist_ok=True)
        traces = {"baseline-pid": simulate_controller(scenario, cfg.baseline)}
        rows = [comparison_row("baseline-pid", scenario, cfg.baseline,
                               traces["baseline-pid"])]
        for algo in ("pso", "bfo"):
            opt_cfg = getattr(cfg, algo)
            runner = optim.pso_run if algo == "pso" else optim.bfo_run
            result = runner(opt_cfg, lambda dv: objective.evaluate(dv, scenario),
                            bounds=cfg.baseline.bounds, workers=workers)
            label = f"{algo}-pid"
            traces[label] = simulate_controller(scenario, result.best)
            rows.append(comparison_row(label, scenario, result.best, traces[label]))
            write_convergence_csv(result.history, sub / f"convergence_{algo}.csv")
            figures.save_convergence_figure(result.history,
                                            sub / f"convergence_{algo}.png",
                                            title=f"{scenario.label} {label}")
        report = ComparisonReport(scenario_label=scenario.label,
                                  seed=cfg.pso.seed, rows=tuple(rows))
        reports.append(report)
        write_json({"report": report.to_dict(), "config": cfg.resolved()},
                   sub / "report.json")
        with open(sub / "report.txt", "w") as fh:
            fh.write(format_report_table(report))
        figures.save_response_figure(traces, sub / "response_comparison.png",
                                     title=scenario.label)
    write_json({"reports": [r.to_dict() for r in reports]},
               out / "comparison_report.json")
    with open(out / "comparison_report.txt", "w") as fh:
        for report in reports:
            fh.write(format_report_table(report))
            fh.write("\n")
    return reports


def validate_file(path: Path) -> list[str]:
    """Diagnostics for a run config, scenario, or plant config file."""
    path = Path(path)
    data = _load_json(path)
    diags: list[str] = []
    try:
        if "machine" in data:
            diags.extend(validate_config(PlantConfig.from_dict(data)))
        elif "scenario" in data:
            cfg = load_run_config(path)
            diags.extend(validate_config(cfg.effective_scenario().plant_config))
        elif "runs" in data:
            for ref in data["runs"]:
                sub = Path(path.parent) / ref
                diags.extend(f"{ref}: {d}" for d in validate_file(sub))
        else:
            scenario = load_scenario(data, path.parent)
            diags.extend(validate_config(scenario.plant_config))
    except ConfigError as exc:
        diags.append(str(exc))
    return diags
