"""Gain-scheduled controller: mixed-sensitivity synthesis at the two wind
vertices and convex interpolation of the vertex realizations in between.

The scheduling signal is a low-pass filtered wind measurement clamped to the
full-load envelope.  Torque errors and commands pass through a fixed kN-scale
so both controller channels are comparably conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wecsim import linearize
from wecsim.hinf import GeneralizedPlant, hinf_synthesize
from wecsim.statespace import (StateSpaceModel, read_labeled, write_labeled,
                               zoh_discretize)
from wecsim.turbine import ControlCommand, TurbineParams
from wecsim.weights import WeightingSet, default_weights

TORQUE_SCALE = 1e-3      # N m -> kN m on the controller side
SCHED_FILTER_TAU = 1.0   # s, low-pass on the measured wind
ALPHA_QUANTUM = 1e-4     # re-discretize only when alpha moves this much


def scheduling_weights(v: float, vmin: float, vmax: float) -> tuple[float, float]:
    """Convex vertex weights (alpha_top, alpha_bottom) for wind ``v``.

    The wind is clamped into [vmin, vmax] first, so the weights always lie in
    [0, 1] and sum to one.
    """
    vc = min(max(v, vmin), vmax)
    a1 = (vc - vmin) / (vmax - vmin)
    return a1, 1.0 - a1


def build_generalized_plant(g: StateSpaceModel, w: WeightingSet) -> GeneralizedPlant:
    """Stack the weighted mixed-sensitivity plant around the 2x2 vertex model.

    Performance outputs z = [w1*e; w2*u; w3*y] with the tracking error
    e = w - G u doubling as the measurement.
    """
    ny, nu = g.n_outputs, g.n_inputs
    if (ny, nu) != (2, 2):
        raise ValueError("vertex plant must have two inputs and two outputs")
    a1 = w.w1.a[0, 0]
    b1w = w.w1.b[0, 0]
    c1w = w.w1.c[0, 0]
    d1w = w.w1.d[0, 0]
    a2 = np.diag([wi.a[0, 0] for wi in w.w2])
    c2w = np.diag([wi.c[0, 0] for wi in w.w2])
    d2w = np.diag([wi.d[0, 0] for wi in w.w2])
    w3 = w.w3_gain

    n = g.n_states
    eye2 = np.eye(2)
    a = np.block([
        [g.a, np.zeros((n, 2)), np.zeros((n, 2))],
        [-b1w * g.c, a1 * eye2, np.zeros((2, 2))],
        [np.zeros((2, n + 2)), a2],
    ])
    b_w = np.vstack([np.zeros((n, 2)), b1w * eye2, np.zeros((2, 2))])
    b_u = np.vstack([g.b, -b1w * g.d, eye2])
    c_z = np.block([
        [-d1w * g.c, c1w * eye2, np.zeros((2, 2))],
        [np.zeros((2, n + 2)), c2w],
        [w3 @ g.c, np.zeros((2, 4))],
    ])
    c_y = np.hstack([-g.c, np.zeros((2, 4))])
    d_zw = np.vstack([d1w * eye2, np.zeros((4, 2))])
    d_zu = np.vstack([-d1w * g.d, d2w, w3 @ g.d])
    d_yw = eye2
    d_yu = -g.d
    ss = StateSpaceModel(a, np.hstack([b_w, b_u]), np.vstack([c_z, c_y]),
                         np.block([[d_zw, d_zu], [d_yw, d_yu]]))
    return GeneralizedPlant(ss, nw=2, nu=2, nz=6, ny=2)


def _scaled_vertex_plant(model: linearize.LinearModel) -> StateSpaceModel:
    g = model.control_plant()
    b = g.b.copy()
    c = g.c.copy()
    b[:, 1] /= TORQUE_SCALE   # torque command arrives in kN m
    c[1, :] *= TORQUE_SCALE   # torque measurement leaves in kN m
    return StateSpaceModel(g.a, b, c, g.d)


@dataclass
class ControllerState:
    """Mutable per-simulation controller memory."""

    x: np.ndarray
    alpha_key: int | None = None
    dt: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class LpvController:
    """Two vertex controllers plus the convex scheduling rule.

    ``k_top`` acts at wind_max, ``k_bottom`` at wind_min; matrices are
    interpolated entrywise by the scheduling weights.  The trim table maps
    scheduled wind to feedforward pitch and generator torque commands.
    """

    k_top: StateSpaceModel
    k_bottom: StateSpaceModel
    vmin: float
    vmax: float
    gamma_top: float
    gamma_bottom: float
    pitch_min: float
    pitch_max: float
    trim_wind: np.ndarray
    trim_pitch: np.ndarray
    trim_torque: np.ndarray
    filter_tau: float = SCHED_FILTER_TAU
    torque_scale: float = TORQUE_SCALE

    def __post_init__(self) -> None:
        k1, k2 = self.k_top, self.k_bottom
        if (k1.n_states, k1.n_inputs, k1.n_outputs) != (k2.n_states, k2.n_inputs, k2.n_outputs):
            raise ValueError("vertex controllers must share dimensions")

    @property
    def n_states(self) -> int:
        return self.k_top.n_states

    def trim(self, v: float) -> tuple[float, float]:
        """Feedforward (pitch deg, generator torque N m) at scheduled wind."""
        vc = min(max(v, self.vmin), self.vmax)
        beta = float(np.interp(vc, self.trim_wind, self.trim_pitch))
        torque = float(np.interp(vc, self.trim_wind, self.trim_torque))
        return beta, torque

    def interpolate(self, alpha_top: float) -> StateSpaceModel:
        a2 = 1.0 - alpha_top
        return StateSpaceModel(
            alpha_top * self.k_top.a + a2 * self.k_bottom.a,
            alpha_top * self.k_top.b + a2 * self.k_bottom.b,
            alpha_top * self.k_top.c + a2 * self.k_bottom.c,
            alpha_top * self.k_top.d + a2 * self.k_bottom.d,
        )

    def new_state(self) -> ControllerState:
        return ControllerState(x=np.zeros(self.n_states))


def filter_wind(v_filtered: float, v_measured: float, dt: float,
                tau: float = SCHED_FILTER_TAU) -> float:
    """One exact step of the first-order scheduling filter."""
    return v_filtered + (1.0 - math.exp(-dt / tau)) * (v_measured - v_filtered)


def controller_step(ctrl: LpvController, state: ControllerState,
                    error: tuple[float, float], v_sched: float, dt: float
                    ) -> tuple[ControlCommand, ControllerState]:
    """Advance the interpolated controller one sample.

    ``error`` is (generator speed error rad/s, generator torque error N m);
    the command is the scheduled trim plus the controller correction, pitch
    saturated to its range.  The interpolated realization is re-discretized
    (exact ZOH) whenever the scheduling weight moves more than ALPHA_QUANTUM.
    """
    if state.dt is None:
        state.dt = dt
    elif state.dt != dt:
        raise ValueError("controller sample period changed mid-run")
    alpha, _ = scheduling_weights(v_sched, ctrl.vmin, ctrl.vmax)
    key = round(alpha / ALPHA_QUANTUM)
    disc = state._cache.get(key)
    if disc is None:
        k = ctrl.interpolate(key * ALPHA_QUANTUM)
        ad, bd = zoh_discretize(k.a, k.b, dt)
        disc = (ad, bd, k.c, k.d)
        state._cache[key] = disc
    state.alpha_key = key
    ad, bd, c, d = disc

    e = np.array([error[0], error[1] * ctrl.torque_scale])
    u = c @ state.x + d @ e
    if not np.all(np.isfinite(u)) or not np.all(np.isfinite(state.x)):
        raise FloatingPointError("controller state became non-finite")
    state.x = ad @ state.x + bd @ e

    beta_ff, torque_ff = ctrl.trim(v_sched)
    beta_cmd = beta_ff + float(u[0])
    beta_cmd = min(max(beta_cmd, ctrl.pitch_min), ctrl.pitch_max)
    torque_cmd = torque_ff + float(u[1]) / ctrl.torque_scale
    return ControlCommand(beta_cmd, torque_cmd), state


def _pad_states(sys: StateSpaceModel, n: int) -> StateSpaceModel:
    """Append unreachable/unobservable stable states up to dimension n."""
    extra = n - sys.n_states
    if extra <= 0:
        return sys
    a = np.block([
        [sys.a, np.zeros((sys.n_states, extra))],
        [np.zeros((extra, sys.n_states)), -np.eye(extra)],
    ])
    b = np.vstack([sys.b, np.zeros((extra, sys.n_inputs))])
    c = np.hstack([sys.c, np.zeros((sys.n_outputs, extra))])
    return StateSpaceModel(a, b, c, sys.d)


def vertex_synthesis(p: TurbineParams, w: WeightingSet | None = None,
                     gamma_range: tuple[float, float] = (1e-3, 1e4),
                     paper_vertex_pitch: bool = True):
    """Weighted-plant synthesis at both vertices.

    Returns [(name, vertex LinearModel, GeneralizedPlant, SynthesisResult)]
    with the vmax vertex first; synthesis failures are re-raised labeled with
    the vertex name.
    """
    w = w or default_weights()
    top, bottom = linearize.vertex_models(p, paper_vertex_pitch=paper_vertex_pitch)
    out = []
    for name, model in (("vmax vertex", top), ("vmin vertex", bottom)):
        plant = build_generalized_plant(_scaled_vertex_plant(model), w)
        try:
            result = hinf_synthesize(plant, gamma_range)
        except Exception as exc:
            raise type(exc)(f"{name}: {exc}") from exc
        out.append((name, model, plant, result))
    return out


def synthesize_lpv(p: TurbineParams, w: WeightingSet | None = None,
                   gamma_range: tuple[float, float] = (1e-3, 1e4),
                   trim_grid_step: float = 0.01,
                   paper_vertex_pitch: bool = True) -> LpvController:
    """Linearize at both vertices, synthesize the vertex controllers, and
    assemble the scheduled controller with its trim table."""
    vertex = vertex_synthesis(p, w, gamma_range, paper_vertex_pitch)
    results = [vertex[0][3], vertex[1][3]]
    k_top, k_bottom = results[0].controller, results[1].controller
    n = max(k_top.n_states, k_bottom.n_states)
    k_top, k_bottom = _pad_states(k_top, n), _pad_states(k_bottom, n)

    v_grid = np.arange(p.wind_min, p.wind_max + trim_grid_step / 2, trim_grid_step)
    v_grid[-1] = p.wind_max
    beta = np.empty_like(v_grid)
    torque = np.empty_like(v_grid)
    for i, v in enumerate(v_grid):
        op = linearize.operating_point(float(v), p)
        beta[i] = op.pitch
        torque[i] = op.generator_torque
    return LpvController(
        k_top=k_top, k_bottom=k_bottom,
        vmin=p.wind_min, vmax=p.wind_max,
        gamma_top=results[0].gamma_achieved, gamma_bottom=results[1].gamma_achieved,
        pitch_min=p.pitch_min, pitch_max=p.pitch_max,
        trim_wind=v_grid, trim_pitch=beta, trim_torque=torque,
    )


def save_controller(path: str | Path, ctrl: LpvController) -> None:
    write_labeled(
        path,
        scalars={
            "vmin": ctrl.vmin, "vmax": ctrl.vmax,
            "gamma_top": ctrl.gamma_top, "gamma_bottom": ctrl.gamma_bottom,
            "pitch_min": ctrl.pitch_min, "pitch_max": ctrl.pitch_max,
            "filter_tau": ctrl.filter_tau, "torque_scale": ctrl.torque_scale,
        },
        matrices={
            "K1_A": ctrl.k_top.a, "K1_B": ctrl.k_top.b,
            "K1_C": ctrl.k_top.c, "K1_D": ctrl.k_top.d,
            "K2_A": ctrl.k_bottom.a, "K2_B": ctrl.k_bottom.b,
            "K2_C": ctrl.k_bottom.c, "K2_D": ctrl.k_bottom.d,
            "trim": np.column_stack([ctrl.trim_wind, ctrl.trim_pitch, ctrl.trim_torque]),
        },
        header="scheduled controller; K1 acts at vmax, K2 at vmin",
    )


def load_controller(path: str | Path) -> LpvController:
    scalars, matrices = read_labeled(path)
    trim = matrices["trim"]
    return LpvController(
        k_top=StateSpaceModel(matrices["K1_A"], matrices["K1_B"],
                              matrices["K1_C"], matrices["K1_D"]),
        k_bottom=StateSpaceModel(matrices["K2_A"], matrices["K2_B"],
                                 matrices["K2_C"], matrices["K2_D"]),
        vmin=scalars["vmin"], vmax=scalars["vmax"],
        gamma_top=scalars["gamma_top"], gamma_bottom=scalars["gamma_bottom"],
        pitch_min=scalars["pitch_min"], pitch_max=scalars["pitch_max"],
        trim_wind=trim[:, 0], trim_pitch=trim[:, 1], trim_torque=trim[:, 2],
        filter_tau=scalars["filter_tau"], torque_scale=scalars["torque_scale"],
    )
