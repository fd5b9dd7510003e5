"""Nonlinear two-mass WECS plant model.

Aerodynamic torque from a Cp(lambda, beta) surface, flexible low-speed shaft
through a gearbox, first-order generator torque lag, and a first-order pitch
actuator with a hard slew-rate limit.  Pitch angles are in degrees (the Cp
surface and the actuator limits are degree-based); shaft twist and speeds are
in rad and rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from wecsim.config import ConfigError, read_config


class CpDomainError(ValueError):
    """Power-coefficient surface evaluated outside its valid domain."""


class NonFiniteStateError(RuntimeError):
    """Plant state left the finite range during integration."""


class ParamFileError(ValueError):
    """Turbine parameter file is malformed or inconsistent."""


@dataclass(frozen=True)
class TurbineParams:
    """Physical and actuator constants of the 225 kW machine, plus the
    full-load operating envelope."""

    rated_power: float = 225e3            # W
    rated_rotor_speed: float = 4.3        # rad/s
    rated_generator_speed: float = 105.78  # rad/s
    trim_twist: float = 0.00655           # rad
    generator_inertia: float = 10.0       # kg m^2
    rotor_inertia: float = 90e3           # kg m^2
    gearbox_ratio: float = 24.6
    blade_radius: float = 14.3            # m
    shaft_damping: float = 80e3           # N m s/rad
    shaft_stiffness: float = 8e6          # N m/rad
    pitch_time_constant: float = 0.15     # s
    generator_time_constant: float = 0.10  # s
    air_density: float = 1.225            # kg/m^3
    pitch_min: float = 0.0                # deg
    pitch_max: float = 24.0               # deg
    pitch_rate_limit: float = 12.0        # deg/s
    wind_min: float = 11.0                # m/s
    wind_max: float = 24.0                # m/s

    def __post_init__(self) -> None:
        for name in (
            "rated_power",
            "rated_rotor_speed",
            "rated_generator_speed",
            "generator_inertia",
            "rotor_inertia",
            "gearbox_ratio",
            "blade_radius",
            "shaft_damping",
            "shaft_stiffness",
            "pitch_time_constant",
            "generator_time_constant",
            "air_density",
            "pitch_rate_limit",
        ):
            if not getattr(self, name) > 0.0:
                raise ParamFileError(f"{name} must be strictly positive")
        if not self.pitch_min < self.pitch_max:
            raise ParamFileError("pitch_min must be below pitch_max")
        if not self.wind_min < self.wind_max:
            raise ParamFileError("wind_min must be below wind_max")
        # gearbox ratio must be consistent with the rated speed pair
        err = abs(self.rated_generator_speed - self.gearbox_ratio * self.rated_rotor_speed)
        if err > 1e-9 * self.rated_generator_speed:
            raise ParamFileError(
                "rated_generator_speed / rated_rotor_speed must equal gearbox_ratio"
            )

    @property
    def rated_generator_torque(self) -> float:
        return self.rated_power / self.rated_generator_speed


@dataclass(frozen=True)
class PlantState:
    """State vector of the two-mass plant: shaft twist, the two shaft speeds,
    actual pitch, and actual generator torque."""

    twist: float            # rad
    rotor_speed: float      # rad/s
    generator_speed: float  # rad/s
    pitch: float            # deg
    generator_torque: float  # N m

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (
            self.twist,
            self.rotor_speed,
            self.generator_speed,
            self.pitch,
            self.generator_torque,
        )


@dataclass(frozen=True)
class ControlCommand:
    pitch_ref: float   # deg
    torque_ref: float  # N m


def power_coefficient(tip_speed_ratio: float, pitch_deg: float, clamp: bool = True) -> float:
    """Power coefficient Cp(lambda, beta) of the rotor.

    ``clamp`` floors the surface at zero: negative capture is unphysical for
    this rigid-rotor model.  Disable it when finite-differencing near the
    zero crossing.
    """
    lam = tip_speed_ratio
    if not lam > 0.0:
        raise CpDomainError(f"tip-speed ratio must be positive, got {lam}")
    shifted = lam + 0.12 * pitch_deg
    if shifted <= 0.0:
        raise CpDomainError("lambda + 0.12*beta must be positive")
    denom = 1.0 / shifted - 0.035 / ((1.5 * pitch_deg) ** 2 + 1.0)
    if abs(denom) < 1e-12:
        raise CpDomainError("Cp inner expression is singular at this (lambda, beta)")
    lam_i = 1.0 / denom
    if lam_i <= 0.0:
        raise CpDomainError(f"effective tip-speed ratio is non-positive: {lam_i}")
    cp = 0.22 * (116.0 / lam_i - 0.6 * pitch_deg - 5.0) * math.exp(-12.5 / lam_i)
    if clamp and cp < 0.0:
        return 0.0
    return cp


def aero_power(v: float, rotor_speed: float, pitch_deg: float, p: TurbineParams,
               clamp_cp: bool = True) -> float:
    """Aerodynamic power captured from wind at speed ``v`` (W)."""
    if not v > 0.0:
        raise CpDomainError(f"wind speed must be positive, got {v}")
    if not rotor_speed > 0.0:
        raise CpDomainError(f"rotor speed must be positive, got {rotor_speed}")
    lam = rotor_speed * p.blade_radius / v
    cp = power_coefficient(lam, pitch_deg, clamp=clamp_cp)
    return 0.5 * p.air_density * math.pi * p.blade_radius**2 * v**3 * cp


def aero_torque(v: float, rotor_speed: float, pitch_deg: float, p: TurbineParams,
                clamp_cp: bool = True) -> float:
    """Aerodynamic torque on the rotor shaft (N m)."""
    return aero_power(v, rotor_speed, pitch_deg, p, clamp_cp=clamp_cp) / rotor_speed


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@lru_cache(maxsize=16)
def _rhs(p: TurbineParams):
    """Bind the parameter constants into a scalar right-hand-side closure.

    Keeps the integrator hot loop free of dataclass attribute lookups; this
    is the single source of the plant equations.
    """
    jr = p.rotor_inertia
    jg = p.generator_inertia
    ng = p.gearbox_ratio
    ds = p.shaft_damping
    ks = p.shaft_stiffness
    inv_tau_b = 1.0 / p.pitch_time_constant
    inv_tau_t = 1.0 / p.generator_time_constant
    rate_max = p.pitch_rate_limit
    half_rho_area = 0.5 * p.air_density * math.pi * p.blade_radius**2
    radius = p.blade_radius
    exp = math.exp

    def rhs(delta, omega_r, omega_g, pitch, tg, pitch_cmd, torque_cmd, v):
        # Cp surface inlined for speed; must match power_coefficient()
        shifted = omega_r * radius / v + 0.12 * pitch
        denom = 1.0 / shifted - 0.035 / ((1.5 * pitch) ** 2 + 1.0)
        lam_i = 1.0 / denom
        if lam_i <= 0.0 or shifted <= 0.0:
            raise CpDomainError("Cp surface left its domain during integration")
        cp = 0.22 * (116.0 / lam_i - 0.6 * pitch - 5.0) * exp(-12.5 / lam_i)
        if cp < 0.0:
            cp = 0.0
        torque_aero = half_rho_area * v**3 * cp / omega_r

        d_twist = omega_r - omega_g / ng
        t_ls = ds * d_twist + ks * delta
        rate = (pitch_cmd - pitch) * inv_tau_b
        if rate > rate_max:
            rate = rate_max
        elif rate < -rate_max:
            rate = -rate_max
        return (
            d_twist,
            (torque_aero - t_ls) / jr,
            (t_ls / ng - tg) / jg,
            rate,
            (torque_cmd - tg) * inv_tau_t,
        )

    return rhs


def derivatives(x: PlantState, u: ControlCommand, v: float, p: TurbineParams
                ) -> tuple[float, float, float, float, float]:
    """Time derivatives of the five plant states.

    The pitch command is saturated to the pitch range before it enters the
    actuator model, and the pitch rate is clamped to the actuator slew limit.
    """
    pitch_cmd = _clip(u.pitch_ref, p.pitch_min, p.pitch_max)
    return _rhs(p)(*x.as_tuple(), pitch_cmd, u.torque_ref, v)


def step(x: PlantState, u: ControlCommand, v: float, dt: float, p: TurbineParams) -> PlantState:
    """Advance one fixed step with the classical 4th-order Runge-Kutta rule.

    Pitch-angle saturation is applied after the step.  Deterministic for
    identical inputs.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    f = _rhs(p)
    pitch_cmd = _clip(u.pitch_ref, p.pitch_min, p.pitch_max)
    tq = u.torque_ref

    s0 = x.as_tuple()
    k1 = f(*s0, pitch_cmd, tq, v)
    h2 = 0.5 * dt
    k2 = f(*(a + h2 * b for a, b in zip(s0, k1)), pitch_cmd, tq, v)
    k3 = f(*(a + h2 * b for a, b in zip(s0, k2)), pitch_cmd, tq, v)
    k4 = f(*(a + dt * b for a, b in zip(s0, k3)), pitch_cmd, tq, v)
    h6 = dt / 6.0
    out = [a + h6 * (b1 + 2.0 * (b2 + b3) + b4)
           for a, b1, b2, b3, b4 in zip(s0, k1, k2, k3, k4)]
    out[3] = _clip(out[3], p.pitch_min, p.pitch_max)
    if not all(math.isfinite(s) for s in out):
        raise NonFiniteStateError(f"state became non-finite: {out}")
    return PlantState(*out)


def load_params(path: str | Path) -> TurbineParams:
    """Read turbine parameters from the ``[turbine]`` section of an INI file.

    Keys must match the TurbineParams field names; unknown keys are rejected.
    Missing keys fall back to the built-in defaults.
    """
    try:
        sections = read_config(path)
    except ConfigError as exc:
        raise ParamFileError(str(exc)) from exc
    table = sections.get("turbine", {})
    fields = set(TurbineParams.__dataclass_fields__)
    for key in table:
        if key not in fields:
            raise ParamFileError(f"unknown turbine parameter {key!r}")
    return TurbineParams(**table)
