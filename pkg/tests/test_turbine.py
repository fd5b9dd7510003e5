from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wecsim import turbine as tb
from wecsim.turbine import ControlCommand, PlantState, TurbineParams

# frozen oracle values (direct high-precision evaluation of the Cp formula)
CP_AT_RATED_TSR = 0.42574481029917105      # Cp(5.590, 0)
CP_AT_MID_TSR = 0.23274189203990286        # Cp(3.514, 0), 17.5 m/s trim tip-speed ratio
POWER_BOTTOM_VERTEX = 222974.63356656098   # W at (11 m/s, 4.3 rad/s, 0 deg)
POWER_TOP_VERTEX = 230215.81839084663      # W at (24 m/s, 4.3 rad/s, 24 deg)


def trim_state(p: TurbineParams, v: float = 11.0, pitch: float = 0.0) -> PlantState:
    torque = tb.aero_torque(v, p.rated_rotor_speed, pitch, p)
    return PlantState(torque / p.shaft_stiffness, p.rated_rotor_speed,
                      p.gearbox_ratio * p.rated_rotor_speed, pitch,
                      torque / p.gearbox_ratio)


def trim_command(p: TurbineParams, v: float = 11.0, pitch: float = 0.0) -> ControlCommand:
    torque = tb.aero_torque(v, p.rated_rotor_speed, pitch, p)
    return ControlCommand(pitch, torque / p.gearbox_ratio)


class TestParams:
    def test_defaults_are_consistent(self, params):
        assert params.rated_power == 225e3
        assert params.gearbox_ratio == pytest.approx(
            params.rated_generator_speed / params.rated_rotor_speed, rel=1e-12)

    @pytest.mark.parametrize("field,value", [
        ("rotor_inertia", -1.0),
        ("pitch_time_constant", 0.0),
        ("air_density", -0.1),
    ])
    def test_nonpositive_constants_rejected(self, params, field, value):
        with pytest.raises(tb.ParamFileError):
            dataclasses.replace(params, **{field: value})

    def test_pitch_and_wind_ordering(self, params):
        with pytest.raises(tb.ParamFileError):
            dataclasses.replace(params, pitch_min=25.0)
        with pytest.raises(tb.ParamFileError):
            dataclasses.replace(params, wind_min=24.0)

    def test_gearbox_speed_consistency(self, params):
        with pytest.raises(tb.ParamFileError):
            dataclasses.replace(params, gearbox_ratio=20.0)

    def test_load_params_roundtrip(self, tmp_path, params):
        path = tmp_path / "turbine.ini"
        path.write_text("[turbine]\nrotor_inertia = 95000\nblade_radius = 14.3\n")
        loaded = tb.load_params(path)
        assert loaded.rotor_inertia == 95000.0
        assert loaded.shaft_stiffness == params.shaft_stiffness

    def test_load_params_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "turbine.ini"
        path.write_text("[turbine]\nblade_count = 3\n")
        with pytest.raises(tb.ParamFileError):
            tb.load_params(path)

    def test_load_params_rejects_garbage(self, tmp_path):
        path = tmp_path / "turbine.ini"
        path.write_text("[turbine]\nrotor_inertia = lots\n")
        with pytest.raises(tb.ParamFileError):
            tb.load_params(path)


class TestPowerCoefficient:
    def test_rated_tip_speed_ratio(self):
        assert tb.power_coefficient(5.590, 0.0) == pytest.approx(0.4258, abs=1e-3)
        assert tb.power_coefficient(5.590, 0.0) == pytest.approx(CP_AT_RATED_TSR, rel=1e-12)

    def test_bracket_zero_is_exact(self):
        # 116 / lam_i = 5 makes the bracket vanish analytically
        lam = 1.0 / (1.0 / 23.2 + 0.035)
        assert tb.power_coefficient(lam, 0.0, clamp=False) == 0.0

    def test_mid_tsr_regression(self):
        assert tb.power_coefficient(3.514, 0.0) == pytest.approx(CP_AT_MID_TSR, rel=1e-12)

    def test_clamp_floors_negative_capture(self):
        raw = tb.power_coefficient(12.9, 0.0, clamp=False)
        assert raw < 0.0
        assert tb.power_coefficient(12.9, 0.0) == 0.0

    def test_surface_below_betz_with_single_peak(self):
        grid = np.linspace(2.0, 12.0, 401)
        cp = np.array([tb.power_coefficient(lam, 0.0) for lam in grid])
        assert cp.max() < 0.593
        rising = np.flatnonzero(np.diff(cp) > 0)
        falling = np.flatnonzero(np.diff(cp) < 0)
        assert rising.size and falling.size
        assert rising.max() < falling.min()  # one interior maximum

    def test_domain_errors(self):
        with pytest.raises(tb.CpDomainError):
            tb.power_coefficient(0.0, 0.0)
        with pytest.raises(tb.CpDomainError):
            tb.power_coefficient(30.0, 0.0)  # negative effective tip-speed ratio
        with pytest.raises(tb.CpDomainError):
            tb.power_coefficient(1.0 / 0.035, 0.0)  # singular inner expression


class TestAeroPower:
    def test_bottom_vertex_matches_rating(self, params):
        p_aero = tb.aero_power(11.0, 4.3, 0.0, params)
        assert p_aero == pytest.approx(POWER_BOTTOM_VERTEX, rel=1e-12)
        assert p_aero == pytest.approx(225e3, rel=0.02)

    def test_top_vertex_regression(self, params):
        assert tb.aero_power(24.0, 4.3, 24.0, params) == pytest.approx(
            POWER_TOP_VERTEX, rel=1e-12)

    def test_zero_capture_gives_zero_power(self, params):
        assert tb.power_coefficient(5.59, 24.0) == 0.0
        assert tb.aero_power(11.0, 4.3, 24.0, params) == 0.0

    def test_preconditions(self, params):
        with pytest.raises(tb.CpDomainError):
            tb.aero_power(0.0, 4.3, 0.0, params)
        with pytest.raises(tb.CpDomainError):
            tb.aero_torque(11.0, 0.0, 0.0, params)

    def test_torque_is_power_over_speed(self, params):
        power = tb.aero_power(13.0, 4.3, 4.0, params)
        assert tb.aero_torque(13.0, 4.3, 4.0, params) == pytest.approx(power / 4.3)

    def test_equilibrium_torque_matches_spring_torque(self, params):
        spring = params.shaft_stiffness * params.trim_twist  # 5.24e4 N m
        aero = tb.aero_torque(11.0, 4.3, 0.0, params)
        assert aero == pytest.approx(5.19e4, rel=1e-3)
        assert abs(spring - aero) / spring < 0.02


class TestDerivatives:
    def test_trim_point_is_stationary(self, params):
        dx = tb.derivatives(trim_state(params), trim_command(params), 11.0, params)
        scales = (params.trim_twist, 4.3, 105.78, 24.0, 2130.0)
        assert all(abs(d) / s < 1e-12 for d, s in zip(dx, scales))

    def test_rate_limiter_saturates_exactly(self, params):
        x = trim_state(params)
        fast = ControlCommand(x.pitch + 10.0, 2108.0)  # 10 deg / 0.15 s >> limit
        dx = tb.derivatives(x, fast, 11.0, params)
        assert dx[3] == params.pitch_rate_limit
        slow = ControlCommand(x.pitch - 10.0, 2108.0)
        assert tb.derivatives(x, slow, 11.0, params)[3] == -params.pitch_rate_limit

    def test_more_wind_accelerates_rotor(self, params):
        dx = tb.derivatives(trim_state(params), trim_command(params), 12.0, params)
        assert dx[1] > 0.0

    def test_command_saturated_before_actuator(self, params):
        x = trim_state(params)
        wild = ControlCommand(500.0, 2108.0)
        capped = ControlCommand(params.pitch_max, 2108.0)
        assert tb.derivatives(x, wild, 11.0, params) == tb.derivatives(x, capped, 11.0, params)

    def test_equilibrium_identities_across_envelope(self, params):
        # at any equilibrium: Tr = Ks delta, Tg = Ks delta / Ng, wg = Ng wr
        for v, pitch in ((11.0, 0.0), (17.5, 18.351), (24.0, 24.0)):
            torque = tb.aero_torque(v, 4.3, pitch, params)
            x = trim_state(params, v, pitch)
            assert torque == pytest.approx(params.shaft_stiffness * x.twist, rel=1e-12)
            assert x.generator_torque == pytest.approx(
                params.shaft_stiffness * x.twist / params.gearbox_ratio, rel=1e-12)
            assert x.generator_speed == params.gearbox_ratio * x.rotor_speed

    @given(tg=st.floats(500.0, 5000.0), tg2=st.floats(500.0, 5000.0))
    def test_derivatives_linear_in_generator_torque(self, tg, tg2):
        p = TurbineParams()
        base = trim_state(p)
        cmd = trim_command(p)
        x1 = dataclasses.replace(base, generator_torque=tg)
        x2 = dataclasses.replace(base, generator_torque=tg2)
        d1 = tb.derivatives(x1, cmd, 11.0, p)
        d2 = tb.derivatives(x2, cmd, 11.0, p)
        if tg == tg2:
            return
        slope_wg = (d2[2] - d1[2]) / (tg2 - tg)
        slope_tg = (d2[4] - d1[4]) / (tg2 - tg)
        assert slope_wg == pytest.approx(-1.0 / p.generator_inertia, rel=1e-6)
        assert slope_tg == pytest.approx(-1.0 / p.generator_time_constant, rel=1e-6)


class TestStep:
    def test_trim_is_a_fixed_point(self, params):
        x = trim_state(params)
        stepped = tb.step(x, trim_command(params), 11.0, 1e-3, params)
        for a, b in zip(stepped.as_tuple(), x.as_tuple()):
            assert a == pytest.approx(b, rel=1e-6, abs=1e-12)

    def test_integrator_order(self, params):
        x = trim_state(params)
        cmd = ControlCommand(2.0, 2200.0)
        full = tb.step(x, cmd, 12.0, 1e-3, params)
        half = tb.step(tb.step(x, cmd, 12.0, 5e-4, params), cmd, 12.0, 5e-4, params)
        for a, b in zip(full.as_tuple(), half.as_tuple()):
            assert abs(a - b) / max(1.0, abs(a)) < 1e-8

    def test_recovers_from_perturbation(self, params):
        x = dataclasses.replace(trim_state(params), rotor_speed=4.35)
        cmd = trim_command(params)
        for _ in range(40000):
            x = tb.step(x, cmd, 11.0, 1e-3, params)
        assert x.rotor_speed == pytest.approx(4.3, abs=2e-3)

    def test_deterministic(self, params):
        x = trim_state(params)
        cmd = ControlCommand(1.0, 2108.0)
        a = tb.step(x, cmd, 11.5, 1e-3, params)
        b = tb.step(x, cmd, 11.5, 1e-3, params)
        assert a == b

    def test_pitch_saturation_after_step(self, params):
        x = dataclasses.replace(trim_state(params, 24.0, 24.0), pitch=23.9999)
        cmd = ControlCommand(30.0, 2176.0)
        stepped = tb.step(x, cmd, 24.0, 1e-2, params)
        assert stepped.pitch == params.pitch_max

    def test_nonfinite_state_raises(self, params):
        x = dataclasses.replace(trim_state(params), generator_torque=1e308)
        with pytest.raises(tb.NonFiniteStateError):
            tb.step(x, trim_command(params), 11.0, 1e-3, params)

    def test_rate_limit_holds_along_trajectory(self, params):
        x = trim_state(params)
        rng = np.random.default_rng(7)
        prev = x.pitch
        dt = 1e-3
        for _ in range(3000):
            cmd = ControlCommand(rng.uniform(0.0, 24.0), 2108.0)
            x = tb.step(x, cmd, 11.0, dt, params)
            assert abs(x.pitch - prev) / dt <= params.pitch_rate_limit + 1e-9
            prev = x.pitch

    def test_dt_must_be_positive(self, params):
        with pytest.raises(ValueError):
            tb.step(trim_state(params), trim_command(params), 11.0, 0.0, params)
