import dataclasses
import math

import numpy as np
import pytest

from swarmstab.lti import eigenvalues, integrate
from swarmstab.plant import (
    ConfigError,
    PlantConfig,
    build_plant,
    dc_link_derivative,
    heavy_config,
    nominal_config,
    statcom_output_voltage,
    validate_config,
)


def random_valid_config(rng):
    cfg = nominal_config()
    machine = dataclasses.replace(
        cfg.machine,
        m_inertia=rng.uniform(4.0, 16.0),
        d_damping=rng.uniform(0.0, 8.0),
        t_do_prime=rng.uniform(3.0, 10.0),
        k1=rng.uniform(0.5, 2.0), k2=rng.uniform(0.5, 2.0),
        k3=rng.uniform(0.2, 0.6), k4=rng.uniform(0.5, 2.0),
        k5=rng.uniform(-0.2, 0.2), k6=rng.uniform(0.2, 0.7),
    )
    exciter = dataclasses.replace(cfg.exciter, ka=rng.uniform(10.0, 100.0),
                                  ta=rng.uniform(0.01, 0.2))
    return dataclasses.replace(cfg, machine=machine, exciter=exciter)


class TestVscQuantities:
    def test_output_voltage_direct(self):
        ph = statcom_output_voltage(0.8, 2.0, 0.0)
        assert ph.magnitude == pytest.approx(1.6)
        assert ph.angle == 0.0

    def test_output_voltage_quadrature(self):
        ph = statcom_output_voltage(0.8, 2.0, math.pi / 2)
        assert ph.magnitude == pytest.approx(1.6)
        assert ph.angle == pytest.approx(math.pi / 2)

    def test_zero_modulation(self):
        for v, phi in ((2.0, 0.3), (0.5, -1.0)):
            ph = statcom_output_voltage(0.0, v, phi)
            assert ph.magnitude == 0.0
            assert ph.angle == phi

    def test_dc_link_d_axis(self):
        assert dc_link_derivative(1.0, 0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_dc_link_q_axis(self):
        assert dc_link_derivative(0.0, 1.0, math.pi / 2, 2.0) == pytest.approx(0.5)

    def test_dc_link_diagonal(self):
        assert dc_link_derivative(1.0, 1.0, math.pi / 4, 1.0) == pytest.approx(math.sqrt(2.0), abs=1e-10)

    def test_dc_link_bad_capacitance(self):
        with pytest.raises(ValueError):
            dc_link_derivative(1.0, 0.0, 0.0, 0.0)


class TestBuildPlant:
    def test_fixed_structure(self):
        ss = build_plant(nominal_config())
        assert ss.n_states == 5
        assert ss.n_inputs == 4
        assert ss.n_outputs == 4

    def test_zero_couplings_recover_classic_model(self):
        cfg = nominal_config()
        statcom = dataclasses.replace(
            cfg.statcom, k7=0.0, k8=0.0, kp_dc=0.0, kq_dc=0.0, kv_dc=0.0,
            kp_c=0.0, kq_c=0.0, kv_c=0.0, kd_c=0.0,
            kp_phi=0.0, kq_phi=0.0, kv_phi=0.0, kd_phi=0.0)
        ss = build_plant(dataclasses.replace(cfg, statcom=statcom))
        # dc-link row decouples except its own leak; control columns vanish
        assert np.all(ss.a[4, :4] == 0.0)
        assert np.all(ss.a[:4, 4] == 0.0)
        assert np.all(ss.b[:, 2:] == 0.0)
        # the remaining 4x4 block is the classic machine+exciter model
        eig4 = eigenvalues(ss.a[:4, :4])
        eig5 = eigenvalues(ss.a)
        assert np.allclose(sorted(eig5.real), sorted(list(eig4.real) + [-cfg.statcom.k9]), atol=1e-12)

    def test_shipped_defaults_are_stable(self):
        for cfg in (nominal_config(), heavy_config()):
            eig = eigenvalues(build_plant(cfg).a)
            assert np.max(eig.real) < 0.0, cfg.label

    def test_scenarios_differ_in_k_constants(self):
        a, b = nominal_config(), heavy_config()
        assert a.machine.k1 != b.machine.k1
        assert a.machine.k5 != b.machine.k5

    def test_vm_feedthrough_pattern(self):
        ss = build_plant(nominal_config())
        j = ss.output_names.index("delta_vm")
        assert ss.d[j, 0] == 0.0 and ss.d[j, 1] == 0.0
        assert ss.d[j, 2] != 0.0 and ss.d[j, 3] != 0.0
        # no other output has any feedthrough
        mask = np.ones(4, dtype=bool)
        mask[j] = False
        assert np.all(ss.d[mask] == 0.0)

    def test_invariant_violation_names_field(self):
        cfg = nominal_config()
        bad = dataclasses.replace(cfg, exciter=dataclasses.replace(cfg.exciter, ta=0.0))
        with pytest.raises(ConfigError, match="ta"):
            build_plant(bad)

    def test_dimension_invariants_random_configs(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            ss = build_plant(random_valid_config(rng))
            assert ss.a.shape == (5, 5)
            assert ss.b.shape == (5, 4)
            assert ss.c.shape == (4, 5)
            assert ss.d.shape == (4, 4)
            assert np.all(np.isfinite(ss.a))

    def test_linearity_of_response(self):
        ss = build_plant(nominal_config())
        x0 = np.zeros(5)

        def disturbance(scale):
            def u(t):
                return np.array([scale if t >= 0.5 else 0.0, 0.0, 0.0, 0.0])
            return u

        base = integrate(ss, x0, disturbance(0.05), 5.0, 0.001)
        scaled = integrate(ss, x0, disturbance(0.15), 5.0, 0.001)
        y1 = base.channel("delta_omega")
        y3 = scaled.channel("delta_omega")
        denom = np.max(np.abs(y3))
        assert np.max(np.abs(y3 - 3.0 * y1)) / denom < 1e-9


class TestValidateConfig:
    def test_default_is_clean(self):
        assert validate_config(nominal_config()) == []
        assert validate_config(heavy_config()) == []

    def test_zero_ta_named(self):
        cfg = nominal_config()
        bad = dataclasses.replace(cfg, exciter=dataclasses.replace(cfg.exciter, ta=0.0))
        diags = validate_config(bad)
        assert any("ta" in d for d in diags)

    def test_negative_k1_warns_unstable(self):
        cfg = nominal_config()
        machine = dataclasses.replace(cfg.machine, k1=-0.5)
        diags = validate_config(dataclasses.replace(cfg, machine=machine))
        assert any("k1" in d for d in diags)
        assert any("unstable" in d for d in diags)


class TestSerialization:
    def test_round_trip(self):
        cfg = nominal_config()
        again = PlantConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_malformed_dict(self):
        with pytest.raises(ConfigError):
            PlantConfig.from_dict({"machine": {}})
