"""Time-weighted absolute-error cost of a candidate controller.

A candidate is a six-dimensional decision vector [kp, ki, kd, kc, t1c, t3c].
Its cost is the time-weighted integral of the speed, terminal-voltage and
dc-voltage deviations of the closed loop under the scenario disturbance.
Unstable or diverging candidates receive a flat penalty so the optimizers
always see a total, finite landscape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import control, lti, plant

PENALTY_COST = 1.0e6
DIVERGENCE_LIMIT = 1.0e6

DEFAULT_BOUNDS = (
    (0.0, 100.0),   # kp
    (0.0, 100.0),   # ki
    (0.0, 100.0),   # kd
    (0.0, 100.0),   # kc
    (0.01, 1.0),    # t1c
    (0.01, 1.0),    # t3c
)

DIMENSION_NAMES = ("kp", "ki", "kd", "kc", "t1c", "t3c")


@dataclass(frozen=True)
class ObjectiveWeights:
    gamma1: float = 1.0
    gamma2: float = 0.5
    t_sim: float = 20.0

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("weights must be non-negative")
        if not self.t_sim > 0:
            raise ValueError("t_sim must be positive")


@dataclass(frozen=True)
class Disturbance:
    kind: str             # "step" | "pulse" | "initial_condition"
    channel: str = "delta_pm"
    magnitude: float = 0.1
    start: float = 1.0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in ("step", "pulse", "initial_condition"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind != "initial_condition" and self.channel not in ("delta_pm", "delta_vref"):
            raise ValueError(f"unknown disturbance channel {self.channel!r}")
        if self.kind == "pulse" and not self.duration > 0:
            raise ValueError("pulse disturbance needs a positive duration")
        if not math.isfinite(self.magnitude):
            raise ValueError("magnitude must be finite")


@dataclass(frozen=True)
class Scenario:
    plant_config: plant.PlantConfig
    disturbance: Disturbance = field(default_factory=lambda: Disturbance("step"))
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    label: str = ""
    dt: float = 0.001

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "plant_config": self.plant_config.to_dict(),
            "disturbance": dict(vars(self.disturbance)),
            "weights": dict(vars(self.weights)),
            "dt": self.dt,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            plant_config=plant.PlantConfig.from_dict(data["plant_config"]),
            disturbance=Disturbance(**data.get("disturbance", {"kind": "step"})),
            weights=ObjectiveWeights(**data.get("weights", {})),
            label=data.get("label", ""),
            dt=data.get("dt", 0.001),
        )


@dataclass(frozen=True)
class DecisionVector:
    values: tuple[float, ...]
    bounds: tuple[tuple[float, float], ...] = DEFAULT_BOUNDS

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(values) != len(bounds):
            raise ValueError("values and bounds must have the same dimension")
        for k, ((lo, hi), v) in enumerate(zip(bounds, values)):
            if not lo < hi:
                raise ValueError(f"dimension {k}: bounds must satisfy lo < hi")
            if not lo <= v <= hi:
                raise ValueError(f"dimension {k}: value {v} outside [{lo}, {hi}]")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", bounds)

    def as_gains(self) -> tuple[control.PidGains, control.StabilizerParams]:
        kp, ki, kd, kc, t1c, t3c = self.values
        return (control.PidGains(kp=kp, ki=ki, kd=kd),
                control.StabilizerParams(kc=kc, t1c=t1c, t3c=t3c))

    def to_dict(self) -> dict:
        return {"values": list(self.values),
                "bounds": [list(b) for b in self.bounds]}

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionVector":
        return cls(values=tuple(data["values"]),
                   bounds=tuple(tuple(b) for b in data.get("bounds", DEFAULT_BOUNDS)))


def clamp_to_bounds(values, bounds=DEFAULT_BOUNDS) -> DecisionVector:
    """Clip each coordinate into its box and wrap as a DecisionVector."""
    arr = np.asarray(values, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return DecisionVector(values=tuple(np.clip(arr, lo, hi)), bounds=tuple(bounds))


def disturbance_switches(dist: Disturbance, input_names) -> list:
    """Input switch points for the piecewise-constant response solver."""
    if dist.kind == "initial_condition":
        return []
    m = len(input_names)
    idx = input_names.index(dist.channel)
    on = np.zeros(m)
    on[idx] = dist.magnitude
    if dist.kind == "step":
        return [(dist.start, on)]
    return [(dist.start, on), (dist.start + dist.duration, np.zeros(m))]


def initial_state(dist: Disturbance, state_names) -> np.ndarray:
    """Initial deviation vector; an initial_condition disturbance perturbs
    the rotor-speed state, other kinds start from the origin."""
    x0 = np.zeros(len(state_names))
    if dist.kind == "initial_condition":
        for j, nm in enumerate(state_names):
            if nm.endswith("delta_omega"):
                x0[j] = dist.magnitude
                return x0
        raise ValueError("system has no rotor-speed state to perturb")
    return x0


def itae_from_channels(t, omega, vm, vdc, weights: ObjectiveWeights) -> float:
    """Trapezoidal time-weighted absolute-error integral on the trace grid."""
    integrand = np.asarray(t) * (np.abs(omega)
                                 + weights.gamma1 * np.abs(vm)
                                 + weights.gamma2 * np.abs(vdc))
    return float(np.trapezoid(integrand, np.asarray(t)))


def _closed_loop(dv: DecisionVector, scenario: Scenario) -> lti.StateSpace:
    pid, stab = dv.as_gains()
    return control.assemble_closed_loop(plant.build_plant(scenario.plant_config),
                                        pid, stab)


def evaluate(dv: DecisionVector, scenario: Scenario) -> float:
    """Cost of one candidate: simulate the closed loop, integrate the
    deviations; unstable or diverging loops get PENALTY_COST.

    Deterministic: identical (dv, scenario) values give bit-identical costs
    regardless of evaluation order or parallelism.
    """
    try:
        cl = _closed_loop(dv, scenario)
    except (ValueError, lti.InterconnectError):
        return PENALTY_COST
    eig = lti.eigenvalues(cl.a)
    if float(np.max(eig.real)) >= 0.0:
        return PENALTY_COST
    rows = [cl.output_names.index(nm)
            for nm in ("delta_omega", "delta_vm", "delta_vdc")]
    switches = disturbance_switches(scenario.disturbance, cl.input_names)
    x0 = initial_state(scenario.disturbance, cl.state_names)
    try:
        t, ys = lti.piecewise_response(cl, x0, switches, scenario.weights.t_sim,
                                       scenario.dt, output_rows=rows,
                                       abs_limit=DIVERGENCE_LIMIT)
    except lti.IntegrationDiverged:
        return PENALTY_COST
    return itae_from_channels(t, ys[:, 0], ys[:, 1], ys[:, 2], scenario.weights)
