"""swarmstab: closed-loop voltage/damping study for a compensated
single-machine power system, with swarm-based controller tuning."""

from .control import PidGains, StabilizerParams, assemble_closed_loop, \
    pid_realize, stabilizer_realize
from .harness import ComparisonReport, RunConfig, compare, load_run_config, \
    run_simulation, run_tuning
from .lti import ResponseMetrics, SimTrace, StateSpace, eigenvalues, \
    feedback_interconnect, integrate, peak_overshoot, series, settling_time
from .objective import DecisionVector, Disturbance, ObjectiveWeights, \
    Scenario, clamp_to_bounds, evaluate
from .optim import BfoConfig, OptResult, PsoConfig, bfo_run, pso_run
from .plant import OperatingPoint, Phasor, PlantConfig, build_plant, \
    dc_link_derivative, heavy_config, nominal_config, statcom_output_voltage, \
    validate_config

__version__ = "0.1.0"

__all__ = [
    "BfoConfig", "ComparisonReport", "DecisionVector", "Disturbance",
    "ObjectiveWeights", "OperatingPoint", "OptResult", "Phasor", "PidGains",
    "PlantConfig", "PsoConfig", "ResponseMetrics", "RunConfig", "Scenario",
    "SimTrace", "StabilizerParams", "StateSpace", "assemble_closed_loop",
    "bfo_run", "build_plant", "clamp_to_bounds", "compare",
    "dc_link_derivative", "eigenvalues", "evaluate", "feedback_interconnect",
    "heavy_config", "integrate", "load_run_config", "nominal_config",
    "peak_overshoot", "pid_realize", "pso_run", "run_simulation",
    "run_tuning", "series", "settling_time", "stabilizer_realize",
    "statcom_output_voltage", "validate_config",
]
