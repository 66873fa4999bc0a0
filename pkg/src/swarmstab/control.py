"""Controllers and closed-loop assembly.

Two controllers act on the plant's control channels: a PID regulating the
terminal-voltage deviation through the modulation-ratio input, and a
washout + double lead-lag stabilizer damping speed deviations through the
phase input (the channel mapping is configurable). The PID derivative is
filtered so every block stays a proper state-space system; the washout and
lag time constants are fixed by convention while the gain and lead time
constants are left for tuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lti import StateSpace, feedback_interconnect

DEFAULT_N_FILTER = 100.0
# Washout short enough that a step input is fully rejected well inside the
# 20 s evaluation horizon (residue ~ kc*exp(-t/tw)).
DEFAULT_TW = 1.0
DEFAULT_T2C = 0.05
DEFAULT_T4C = 0.05

CLOSED_LOOP_INPUTS = ("delta_pm", "delta_vref", "vm_ref")
CLOSED_LOOP_OUTPUTS = ("delta_omega", "delta_vm", "delta_vdc", "delta_delta",
                       "u_pid", "u_stab")


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float
    n_filter: float = DEFAULT_N_FILTER

    def __post_init__(self):
        if not self.n_filter > 0:
            raise ValueError("n_filter must be positive")
        for name in ("kp", "ki", "kd"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class StabilizerParams:
    kc: float
    t1c: float
    t3c: float
    tw: float = DEFAULT_TW
    t2c: float = DEFAULT_T2C
    t4c: float = DEFAULT_T4C

    def __post_init__(self):
        for name in ("tw", "t1c", "t2c", "t3c", "t4c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not math.isfinite(self.kc):
            raise ValueError("kc must be finite")


def pid_realize(g: PidGains, input_name: str = "pid_err",
                output_name: str = "u_pid") -> StateSpace:
    """Proper 2-state PID: kp + ki/s + kd s N/(s + N).

    Below the filter corner the frequency response tracks the ideal PID;
    the filter only rolls off the derivative channel at high frequency.
    """
    n = g.n_filter
    a = np.array([[0.0, 0.0], [0.0, -n]])
    b = np.array([[1.0], [1.0]])
    c = np.array([[g.ki, -g.kd * n * n]])
    d = np.array([[g.kp + g.kd * n]])
    return StateSpace(a, b, c, d,
                      state_names=("pid_int", "pid_filt"),
                      input_names=(input_name,), output_names=(output_name,),
                      name="pid")


def stabilizer_realize(s: StabilizerParams, input_name: str = "stab_in",
                       output_name: str = "u_stab") -> StateSpace:
    """3-state washout plus double lead-lag: kc * sTw/(1+sTw) * П (1+sTlead)/(1+sTlag).

    The washout zero at s = 0 guarantees zero steady-state output for any
    constant input, so the stabilizer acts on transients only.
    """
    # washout: y = kc*(u - xw), dxw/dt = (u - xw)/tw
    # lead-lag: y = (t_lead/t_lag)*u + (1 - t_lead/t_lag)*x, dx/dt = (u - x)/t_lag
    g1 = s.t1c / s.t2c
    g2 = s.t3c / s.t4c
    a = np.array([
        [-1.0 / s.tw, 0.0, 0.0],
        [-s.kc / s.t2c, -1.0 / s.t2c, 0.0],
        [-s.kc * g1 / s.t4c, (1.0 - g1) / s.t4c, -1.0 / s.t4c],
    ])
    b = np.array([[1.0 / s.tw], [s.kc / s.t2c], [s.kc * g1 / s.t4c]])
    c = np.array([[-s.kc * g1 * g2, (1.0 - g1) * g2, 1.0 - g2]])
    d = np.array([[s.kc * g1 * g2]])
    return StateSpace(a, b, c, d,
                      state_names=("stab_washout", "stab_ll1", "stab_ll2"),
                      input_names=(input_name,), output_names=(output_name,),
                      name="stab")


def _error_junction() -> StateSpace:
    return StateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((1, 0)),
                      np.array([[1.0, -1.0]]),
                      input_names=("vm_ref", "vm_meas"),
                      output_names=("pid_err",), name="verr")


def assemble_closed_loop(plant: StateSpace, pid: PidGains,
                         stab: StabilizerParams,
                         wiring: dict[str, str] | None = None) -> StateSpace:
    """Close both control loops around the plant.

    The PID drives the channel named by wiring["pid"] (default "delta_c")
    from the terminal-voltage error, the stabilizer drives wiring["stabilizer"]
    (default "delta_phi") from the speed deviation. The proportional path
    closes a static loop through the terminal-voltage feedthrough; the
    interconnection solves it exactly and raises if it is ill-posed.
    """
    channels = {"pid": "delta_c", "stabilizer": "delta_phi"}
    if wiring:
        channels.update(wiring)
    if channels["pid"] == channels["stabilizer"]:
        raise ValueError("pid and stabilizer cannot share a plant input")
    for role, chan in channels.items():
        if chan not in plant.input_names:
            raise ValueError(f"{role} channel {chan!r} is not a plant input")
    for needed in ("delta_omega", "delta_vm"):
        if needed not in plant.output_names:
            raise ValueError(f"plant must expose output {needed!r}")

    blocks = [plant, _error_junction(), pid_realize(pid), stabilizer_realize(stab)]
    wires = {
        "vm_meas": "delta_vm",
        "pid_err": "pid_err",
        "stab_in": "delta_omega",
        channels["pid"]: "u_pid",
        channels["stabilizer"]: "u_stab",
    }
    ext_outputs = [nm for nm in CLOSED_LOOP_OUTPUTS if nm in
                   [o for blk in blocks for o in blk.output_names]]
    return feedback_interconnect(blocks, wires, outputs=ext_outputs,
                                 solve_feedthrough=True, name="closed_loop")
