"""First-order Taylor linearization of the nonlinear plant at full-load
equilibria, producing the vertex state-space models and the aerodynamic
sensitivity coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wecsim import turbine
from wecsim.statespace import StateSpaceModel, write_labeled
from wecsim.turbine import ControlCommand, PlantState, TurbineParams


class TrimError(ValueError):
    """No equilibrium pitch reaches the rated aerodynamic power."""


@dataclass(frozen=True)
class OperatingPoint:
    """Full-load equilibrium at rated rotor speed."""

    wind: float              # m/s
    rotor_speed: float       # rad/s
    pitch: float             # deg
    twist: float             # rad
    generator_torque: float  # N m

    def plant_state(self, p: TurbineParams) -> PlantState:
        return PlantState(self.twist, self.rotor_speed,
                          p.gearbox_ratio * self.rotor_speed,
                          self.pitch, self.generator_torque)

    def command(self) -> ControlCommand:
        return ControlCommand(self.pitch, self.generator_torque)


@dataclass(frozen=True)
class LinearCoefficients:
    """Partial derivatives of the aerodynamic torque at an operating point.

    k_pitch is per degree of pitch, matching the degree-based pitch state.
    """

    k_omega: float  # N m s/rad
    k_wind: float   # N m s/m
    k_pitch: float  # N m / deg


def rated_aero_power(p: TurbineParams) -> float:
    """Aerodynamic power at the zero-pitch vertex; the trim target for the
    whole full-load envelope."""
    return turbine.aero_power(p.wind_min, p.rated_rotor_speed, p.pitch_min, p)


def trim_pitch(v: float, p: TurbineParams, rel_tol: float = 1e-9,
               boundary_tol: float = 0.05) -> float:
    """Equilibrium pitch holding rated aerodynamic power at rated rotor speed.

    Bisection on the monotone-decreasing branch of aero_power(beta).  When the
    root falls just past the pitch limit (the power surplus at full pitch is
    within ``boundary_tol`` relative), the saturated boundary pitch is
    returned; beyond that a TrimError is raised.
    """
    if not p.wind_min <= v <= p.wind_max:
        raise TrimError(f"wind {v} m/s outside the full-load envelope")
    target = rated_aero_power(p)
    omega = p.rated_rotor_speed

    def excess(beta: float) -> float:
        return turbine.aero_power(v, omega, beta, p) - target

    lo, hi = p.pitch_min, p.pitch_max
    f_lo, f_hi = excess(lo), excess(hi)
    if abs(f_lo) <= rel_tol * target:
        return lo
    if f_lo < 0.0:
        raise TrimError(f"rated power unreachable at v={v}: deficit even at minimum pitch")
    if f_hi > 0.0:
        if f_hi <= boundary_tol * target:
            return hi
        raise TrimError(f"rated power unreachable at v={v}: surplus {f_hi:.3g} W at full pitch")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = excess(mid)
        if abs(f_mid) <= rel_tol * target:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def operating_point(v: float, p: TurbineParams, pitch: float | None = None) -> OperatingPoint:
    """Consistent equilibrium at wind ``v``: twist and generator torque follow
    from the aerodynamic torque, so all five derivatives vanish exactly.

    ``pitch`` overrides the computed trim (used for the published vertex
    pairing at the top of the envelope).
    """
    beta = trim_pitch(v, p) if pitch is None else pitch
    t_aero = turbine.aero_torque(v, p.rated_rotor_speed, beta, p)
    twist = t_aero / p.shaft_stiffness
    tg = t_aero / p.gearbox_ratio
    return OperatingPoint(v, p.rated_rotor_speed, beta, twist, tg)


def equilibrium_residual(op: OperatingPoint, p: TurbineParams) -> float:
    """Largest derivative at the operating point, relative to per-channel
    characteristic scales."""
    dx = turbine.derivatives(op.plant_state(p), op.command(), op.wind, p)
    scales = (
        max(abs(op.twist), p.trim_twist),
        p.rated_rotor_speed,
        p.rated_generator_speed,
        p.pitch_max,
        max(abs(op.generator_torque), p.rated_generator_torque),
    )
    return max(abs(d) / s for d, s in zip(dx, scales))


def _richardson(f, x0: float, h: float) -> float:
    """Central difference with one Richardson extrapolation step."""
    d1 = (f(x0 + h) - f(x0 - h)) / (2.0 * h)
    d2 = (f(x0 + 0.5 * h) - f(x0 - 0.5 * h)) / h
    return (4.0 * d2 - d1) / 3.0


def linearize_coefficients(op: OperatingPoint, p: TurbineParams) -> LinearCoefficients:
    """Finite-difference aerodynamic torque sensitivities at ``op``.

    The Cp clamp is disabled so differencing near the surface's zero crossing
    sees the smooth formula.
    """
    if equilibrium_residual(op, p) > 1e-6:
        raise ValueError("operating point is not an equilibrium")
    v0, w0, b0 = op.wind, op.rotor_speed, op.pitch

    def torque(v=v0, w=w0, b=b0):
        return turbine.aero_torque(v, w, b, p, clamp_cp=False)

    k_omega = _richardson(lambda w: torque(w=w), w0, 1e-3 * w0)
    k_wind = _richardson(lambda v: torque(v=v), v0, 1e-3 * v0)
    k_pitch = _richardson(lambda b: torque(b=b), b0, 1e-3 * max(1.0, abs(b0)))
    return LinearCoefficients(k_omega, k_wind, k_pitch)


@dataclass(frozen=True)
class LinearModel:
    """Linearized five-state model around an operating point.

    States [twist, rotor speed, generator speed, pitch, generator torque];
    wind disturbance through b1, controls [pitch ref, torque ref] through b2,
    measured outputs [generator speed, generator torque].
    """

    a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c: np.ndarray
    coeffs: LinearCoefficients
    op: OperatingPoint

    def control_plant(self) -> StateSpaceModel:
        """The 2x2 control channel plant used for synthesis."""
        return StateSpaceModel(self.a, self.b2, self.c, np.zeros((2, 2)))

    def full(self) -> StateSpaceModel:
        """Inputs ordered [wind, pitch ref, torque ref]."""
        return StateSpaceModel(self.a, np.hstack([self.b1, self.b2]),
                               self.c, np.zeros((2, 3)))


def build_linear_model(op: OperatingPoint, p: TurbineParams) -> LinearModel:
    coeffs = linearize_coefficients(op, p)
    jr, jg, ng = p.rotor_inertia, p.generator_inertia, p.gearbox_ratio
    ds, ks = p.shaft_damping, p.shaft_stiffness
    a = np.array([
        [0.0, 1.0, -1.0 / ng, 0.0, 0.0],
        [-ks / jr, (coeffs.k_omega - ds) / jr, ds / (jr * ng), coeffs.k_pitch / jr, 0.0],
        [ks / (jg * ng), ds / (jg * ng), -ds / (jg * ng**2), 0.0, -1.0 / jg],
        [0.0, 0.0, 0.0, -1.0 / p.pitch_time_constant, 0.0],
        [0.0, 0.0, 0.0, 0.0, -1.0 / p.generator_time_constant],
    ])
    b1 = np.array([[0.0], [coeffs.k_wind / jr], [0.0], [0.0], [0.0]])
    b2 = np.array([
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0 / p.pitch_time_constant, 0.0],
        [0.0, 1.0 / p.generator_time_constant],
    ])
    c = np.array([
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    return LinearModel(a, b1, b2, c, coeffs, op)


def vertex_models(p: TurbineParams, paper_vertex_pitch: bool = True
                  ) -> tuple[LinearModel, LinearModel]:
    """Linear models at the two scheduling vertices (vmax first).

    With ``paper_vertex_pitch`` the top vertex is pinned at full pitch; the
    computed trim saturates there anyway for the default parameters.
    """
    pitch_top = p.pitch_max if paper_vertex_pitch else None
    top = operating_point(p.wind_max, p, pitch=pitch_top)
    bottom = operating_point(p.wind_min, p)
    return build_linear_model(top, p), build_linear_model(bottom, p)


def export_model(path: str | Path, model: LinearModel) -> None:
    """Plain-text labeled-matrix dump for external verification."""
    write_labeled(
        path,
        scalars={
            "wind": model.op.wind,
            "rotor_speed": model.op.rotor_speed,
            "pitch": model.op.pitch,
            "twist": model.op.twist,
            "generator_torque": model.op.generator_torque,
            "k_omega": model.coeffs.k_omega,
            "k_wind": model.coeffs.k_wind,
            "k_pitch": model.coeffs.k_pitch,
        },
        matrices={"A": model.a, "B1": model.b1, "B2": model.b2, "C": model.c},
        header="linearized WECS model; states [twist, rotor_speed, generator_speed, pitch, generator_torque]",
    )
