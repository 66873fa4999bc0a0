"""Linearized single-machine-infinite-bus model with a shunt VSC compensator.

The plant is the standard extended Heffron-Phillips linearization: a
synchronous machine with flux decay and a fast static exciter, augmented
with a dc-link state and coupling gains for the compensator's two control
channels (modulation ratio and phase). States are per-unit deviations from
the operating point.

The shipped parameter sets are derived offline from a recorded machine
dataset (see scripts/derive_plant_configs.py); k1..k6 are recomputed at
each operating point, the device-side couplings are fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lti import StateSpace, eigenvalues

STATE_NAMES = ("delta_delta", "delta_omega", "delta_eq", "delta_efd", "delta_vdc")
INPUT_NAMES = ("delta_pm", "delta_vref", "delta_c", "delta_phi")
OUTPUT_NAMES = ("delta_omega", "delta_vm", "delta_vdc", "delta_delta")


class ConfigError(ValueError):
    """A plant configuration field violates its invariant."""

    def __init__(self, fieldname: str, message: str):
        self.fieldname = fieldname
        super().__init__(f"{fieldname}: {message}")


@dataclass(frozen=True)
class OperatingPoint:
    """Steady-state loading: real power, reactive power, terminal voltage (pu)."""

    p: float
    q: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ConfigError("operating_point", "p and q must be finite")
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ConfigError("operating_point.v", "terminal voltage must be positive")


@dataclass(frozen=True)
class Phasor:
    magnitude: float
    angle: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("phasor magnitude must be non-negative")


@dataclass(frozen=True)
class MachineParams:
    m_inertia: float      # M = 2H, s^2
    d_damping: float      # pu torque per pu speed
    omega_b: float        # rad/s
    t_do_prime: float     # s
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    k6: float


@dataclass(frozen=True)
class ExciterParams:
    ka: float
    ta: float


@dataclass(frozen=True)
class StatcomParams:
    # dc-link row couplings
    k7: float
    k8: float
    k9: float
    # dc-voltage couplings into torque, flux, terminal-voltage equations
    kp_dc: float
    kq_dc: float
    kv_dc: float
    # modulation-ratio channel gains
    kp_c: float
    kq_c: float
    kv_c: float
    kd_c: float
    # phase channel gains
    kp_phi: float
    kq_phi: float
    kv_phi: float
    kd_phi: float
    c_dc: float           # dc capacitance, pu
    c_ratio: float        # C = m*k converter ratio at the operating point
    v_dc0: float          # nominal dc voltage, pu
    phi0: float           # rad


@dataclass(frozen=True)
class NetworkParams:
    """Circuit data kept for provenance and reporting only."""

    z1: complex
    z2: complex
    y_l: complex
    x_l: float


@dataclass(frozen=True)
class PlantConfig:
    machine: MachineParams
    exciter: ExciterParams
    statcom: StatcomParams
    network: NetworkParams
    operating_point: OperatingPoint
    label: str = ""

    def check(self):
        """Raise ConfigError on the first violated invariant."""
        m, e, s = self.machine, self.exciter, self.statcom
        positives = [
            ("machine.m_inertia", m.m_inertia),
            ("machine.t_do_prime", m.t_do_prime),
            ("machine.omega_b", m.omega_b),
            ("machine.k3", m.k3),
            ("exciter.ta", e.ta),
            ("statcom.c_dc", s.c_dc),
            ("statcom.v_dc0", s.v_dc0),
        ]
        for name, val in positives:
            if not (val > 0 and math.isfinite(val)):
                raise ConfigError(name, f"must be positive and finite, got {val!r}")
        for group in (m, e, s):
            for name, val in vars(group).items():
                if not math.isfinite(val):
                    raise ConfigError(name, f"must be finite, got {val!r}")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "machine": dict(vars(self.machine)),
            "exciter": dict(vars(self.exciter)),
            "statcom": dict(vars(self.statcom)),
            "network": {
                "z1": [self.network.z1.real, self.network.z1.imag],
                "z2": [self.network.z2.real, self.network.z2.imag],
                "y_l": [self.network.y_l.real, self.network.y_l.imag],
                "x_l": self.network.x_l,
            },
            "operating_point": dict(vars(self.operating_point)),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlantConfig":
        try:
            net = data["network"]
            return cls(
                machine=MachineParams(**data["machine"]),
                exciter=ExciterParams(**data["exciter"]),
                statcom=StatcomParams(**data["statcom"]),
                network=NetworkParams(
                    z1=complex(*net["z1"]), z2=complex(*net["z2"]),
                    y_l=complex(*net["y_l"]), x_l=net["x_l"]),
                operating_point=OperatingPoint(**data["operating_point"]),
                label=data.get("label", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError("plant_config", f"malformed config: {exc}") from exc


def statcom_output_voltage(c_ratio: float, v_dc: float, phi: float) -> Phasor:
    """Converter terminal voltage: magnitude c_ratio * v_dc at phase phi."""
    if c_ratio < 0:
        raise ValueError("c_ratio must be non-negative")
    if v_dc < 0:
        raise ValueError("v_dc must be non-negative")
    return Phasor(magnitude=c_ratio * v_dc, angle=phi)


def dc_link_derivative(i_sd: float, i_sq: float, phi: float, c_dc: float) -> float:
    """Averaged dc-link charging rate from the d/q converter currents."""
    if c_dc <= 0:
        raise ValueError("c_dc must be positive")
    return (i_sd * math.cos(phi) + i_sq * math.sin(phi)) / c_dc


def build_plant(cfg: PlantConfig) -> StateSpace:
    """Assemble the 5-state deviation model.

    States  [delta_delta, delta_omega, delta_eq, delta_efd, delta_vdc],
    inputs  [delta_pm, delta_vref, delta_c, delta_phi],
    outputs [delta_omega, delta_vm, delta_vdc, delta_delta].
    The terminal-voltage output has direct feedthrough only from the two
    control channels.
    """
    cfg.check()
    m, e, s = cfg.machine, cfg.exciter, cfg.statcom

    a = np.zeros((5, 5))
    a[0, 1] = m.omega_b
    a[1, :] = [-m.k1 / m.m_inertia, -m.d_damping / m.m_inertia,
               -m.k2 / m.m_inertia, 0.0, -s.kp_dc / m.m_inertia]
    a[2, :] = [-m.k4 / m.t_do_prime, 0.0, -1.0 / (m.k3 * m.t_do_prime),
               1.0 / m.t_do_prime, -s.kq_dc / m.t_do_prime]
    a[3, :] = [-e.ka * m.k5 / e.ta, 0.0, -e.ka * m.k6 / e.ta,
               -1.0 / e.ta, -e.ka * s.kv_dc / e.ta]
    a[4, :] = [s.k7, 0.0, s.k8, 0.0, -s.k9]

    b = np.zeros((5, 4))
    b[1, 0] = 1.0 / m.m_inertia
    b[1, 2] = -s.kp_c / m.m_inertia
    b[1, 3] = -s.kp_phi / m.m_inertia
    b[2, 2] = -s.kq_c / m.t_do_prime
    b[2, 3] = -s.kq_phi / m.t_do_prime
    b[3, 1] = e.ka / e.ta
    b[3, 2] = -e.ka * s.kv_c / e.ta
    b[3, 3] = -e.ka * s.kv_phi / e.ta
    b[4, 2] = s.kd_c
    b[4, 3] = s.kd_phi

    c = np.zeros((4, 5))
    c[0, 1] = 1.0
    c[1, :] = [m.k5, 0.0, m.k6, 0.0, s.kv_dc]
    c[2, 4] = 1.0
    c[3, 0] = 1.0

    d = np.zeros((4, 4))
    d[1, 2] = s.kv_c
    d[1, 3] = s.kv_phi

    return StateSpace(a, b, c, d, state_names=STATE_NAMES,
                      input_names=INPUT_NAMES, output_names=OUTPUT_NAMES,
                      name="plant")


def validate_config(cfg: PlantConfig) -> list[str]:
    """Human-readable diagnostics; empty list means the config looks sound."""
    diags: list[str] = []
    try:
        cfg.check()
    except ConfigError as exc:
        diags.append(str(exc))
        return diags
    if cfg.machine.k1 < 0:
        diags.append("machine.k1 < 0: negative synchronizing torque, expect instability")
    if cfg.machine.d_damping < 0:
        diags.append("machine.d_damping < 0: negative mechanical damping")
    eig = eigenvalues(build_plant(cfg).a)
    worst = float(np.max(eig.real))
    if worst >= 0:
        diags.append(f"open-loop unstable: max Re(eig) = {worst:+.4f}")
    return diags


# Shipped parameter sets. k1..k6 come from the recorded machine dataset
# (xd=1.6, xq=1.55, xd'=0.32, T'do=6 s, xe=0.4) linearized at each loading;
# the numbers are frozen here and regenerated by scripts/derive_plant_configs.py.

# dc link: self-regulating (k9) and charged through the phase channel only.
# The magnitude channel exchanges no average active power near phi0 = 0, so
# kd_c = 0 and the dc voltage carries no steady-state offset after a
# mechanical-power step.
_STATCOM = StatcomParams(
    k7=0.0, k8=0.0, k9=1.0,
    kp_dc=0.05, kq_dc=0.02, kv_dc=0.1,
    kp_c=0.3, kq_c=0.15, kv_c=0.4, kd_c=0.0,
    kp_phi=0.5, kq_phi=0.05, kv_phi=0.05, kd_phi=0.4,
    c_dc=1.0, c_ratio=0.5, v_dc0=2.0, phi0=0.0,
)

_NETWORK = NetworkParams(z1=0.15j, z2=0.15j, y_l=0.2 + 0.1j, x_l=0.1)


def nominal_config() -> PlantConfig:
    """Base loading (P, Q, V) = (0.7, 0.3, 1.0) pu."""
    return PlantConfig(
        machine=MachineParams(
            m_inertia=10.0, d_damping=4.0, omega_b=2.0 * math.pi * 60.0,
            t_do_prime=6.0,
            k1=0.996483, k2=1.039934, k3=0.36,
            k4=1.331115, k5=-0.011711, k6=0.446448),
        exciter=ExciterParams(ka=50.0, ta=0.05),
        statcom=_STATCOM,
        network=_NETWORK,
        operating_point=OperatingPoint(p=0.7, q=0.3, v=1.0),
        label="nominal",
    )


def heavy_config() -> PlantConfig:
    """Heavy loading (P, Q, V) = (1.2, 0.4, 1.15) pu; k-constants relinearized."""
    return PlantConfig(
        machine=MachineParams(
            m_inertia=10.0, d_damping=4.0, omega_b=2.0 * math.pi * 60.0,
            t_do_prime=6.0,
            k1=1.406546, k2=1.389712, k3=0.36,
            k4=1.778831, k5=-0.078516, k6=0.401266),
        exciter=ExciterParams(ka=50.0, ta=0.05),
        statcom=_STATCOM,
        network=_NETWORK,
        operating_point=OperatingPoint(p=1.2, q=0.4, v=1.15),
        label="heavy",
    )
