"""Scenario execution and metric extraction.

Fixed-step co-simulation: wind sample -> scheduling filter -> controller (at
its own rate, zero-order hold) -> saturated command -> plant RK4 step.  Runs
are deterministic per (scenario, seed) and records carry enough metadata to
reproduce them.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

import wecsim
from wecsim import fuzzy, linearize, lpv, turbine, wind
from wecsim.turbine import ControlCommand, TurbineParams

CHANNELS = ("t", "v", "delta", "omega_r", "omega_g", "beta", "beta_dot",
            "tg", "beta_r", "tg_r", "ps")


class ScenarioMismatchError(ValueError):
    """Records being compared come from different scenarios."""


@dataclass(frozen=True)
class Scenario:
    """One executable configuration: wind profile plus controller choice."""

    wind: wind.WindProfile
    controller: str = "open"         # open | lpv | piflc
    metric_window_start: float = 10.0
    open_loop_pitch: float | None = None  # defaults to the trim at the first sample
    initial_wind: float | None = None     # trim the initial state here instead
    name: str = ""

    def __post_init__(self) -> None:
        if self.controller not in ("open", "lpv", "piflc"):
            raise ValueError(f"unknown controller {self.controller!r}")
        if not self.metric_window_start < self.wind.duration:
            raise ValueError("metric window must start before the run ends")


def scenario_meta(scenario: Scenario, p: TurbineParams) -> dict[str, object]:
    profile = scenario.wind
    meta: dict[str, object] = {"controller": scenario.controller,
                               "scenario": scenario.name or profile.kind}
    for f in dc_fields(profile):
        meta[f"wind_{f.name}"] = getattr(profile, f.name)
    meta["dt"] = profile.dt
    meta["duration"] = profile.duration
    meta["code_version"] = wecsim.__version__
    key = ";".join(f"{k}={meta[k]}" for k in sorted(meta))
    key += f";params={p}"
    meta["scenario_hash"] = hashlib.sha256(key.encode()).hexdigest()[:16]
    return meta


@dataclass
class SimRecord:
    """Uniformly sampled trajectory of states, commands, wind and power."""

    data: dict[str, np.ndarray]
    meta: dict[str, object] = field(default_factory=dict)

    def __getattr__(self, name: str) -> np.ndarray:
        try:
            return self.__dict__["data"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def dt(self) -> float:
        return float(self.meta["dt"])

    def save_csv(self, path: str | Path, stride: int = 1) -> None:
        lines = ["# wecsim simulation record"]
        for key in sorted(self.meta):
            lines.append(f"# {key} = {self.meta[key]}")
        lines.append(",".join(CHANNELS))
        cols = np.column_stack([self.data[ch][::stride] for ch in CHANNELS])
        body = "\n".join(",".join("%.17g" % x for x in row) for row in cols)
        Path(path).write_text("\n".join(lines) + "\n" + body + "\n")

    @classmethod
    def load_csv(cls, path: str | Path) -> "SimRecord":
        meta: dict[str, object] = {}
        rows = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                text = line[1:].strip()
                if "=" in text:
                    key, _, value = text.partition("=")
                    meta[key.strip()] = _parse_meta(value.strip())
                continue
            if not line or line.startswith("t,"):
                continue
            rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows)
        data = {ch: arr[:, i].copy() for i, ch in enumerate(CHANNELS)}
        return cls(data=data, meta=meta)


def _parse_meta(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text in ("None", "True", "False"):
        return {"None": None, "True": True, "False": False}[text]
    return text


def run(scenario: Scenario, p: TurbineParams,
        controller: lpv.LpvController | None = None,
        fuzzy_cfg: fuzzy.FuzzyConfig | None = None) -> SimRecord:
    """Execute a scenario and log every sample.

    The plant starts at the equilibrium for the first wind sample (clamped
    into the envelope).  Aborts with a diagnostic if any state goes
    non-finite.
    """
    v_series = wind.generate(scenario.wind)
    dt = scenario.wind.dt
    n = len(v_series) - 1
    v_init = scenario.initial_wind if scenario.initial_wind is not None else float(v_series[0])
    v0 = min(max(v_init, p.wind_min), p.wind_max)
    op0 = linearize.operating_point(v0, p)
    x = op0.plant_state(p)

    mode = scenario.controller
    if mode == "lpv":
        if controller is None:
            raise ValueError("scenario needs a synthesized controller")
        ctrl_state = controller.new_state()
        v_filt = v0
        k_filt = 1.0 - math.exp(-dt / controller.filter_tau)
    elif mode == "piflc":
        cfg = fuzzy_cfg or fuzzy.FuzzyConfig(pitch_min=p.pitch_min, pitch_max=p.pitch_max)
        hold_steps = max(1, int(round(cfg.ts / dt)))
        if abs(hold_steps * dt - cfg.ts) > 1e-9 * cfg.ts:
            raise ValueError("dt must divide the fuzzy sampling period")
        pf_state = fuzzy.PiflcState(prev_error=0.0, command=op0.pitch)
        torque_cmd = p.rated_generator_torque
        cmd = ControlCommand(op0.pitch, torque_cmd)
    else:
        pitch = scenario.open_loop_pitch if scenario.open_loop_pitch is not None else op0.pitch
        cmd = ControlCommand(pitch, op0.generator_torque)

    log = {ch: np.empty(n + 1) for ch in CHANNELS}

    def record(k: int, state: turbine.PlantState, command: ControlCommand, v: float) -> None:
        log["t"][k] = k * dt
        log["v"][k] = v
        log["delta"][k] = state.twist
        log["omega_r"][k] = state.rotor_speed
        log["omega_g"][k] = state.generator_speed
        log["beta"][k] = state.pitch
        log["tg"][k] = state.generator_torque
        log["beta_r"][k] = command.pitch_ref
        log["tg_r"][k] = command.torque_ref
        log["ps"][k] = state.generator_torque * state.generator_speed

    rated_speed = p.rated_generator_speed
    for k in range(n + 1):
        v = float(v_series[k])
        if mode == "lpv":
            v_filt += k_filt * (v - v_filt)
            _, tg_ref = controller.trim(v_filt)
            error = (rated_speed - x.generator_speed, tg_ref - x.generator_torque)
            cmd, ctrl_state = lpv.controller_step(controller, ctrl_state, error, v_filt, dt)
        elif mode == "piflc" and k % hold_steps == 0:
            beta_cmd, pf_state = fuzzy.piflc_step(pf_state, x.generator_speed,
                                                  rated_speed, cfg)
            cmd = ControlCommand(beta_cmd, torque_cmd)
        record(k, x, cmd, v)
        if k == n:
            break
        try:
            x = turbine.step(x, cmd, v, dt, p)
        except turbine.NonFiniteStateError as exc:
            raise turbine.NonFiniteStateError(
                f"{scenario.name or scenario.wind.kind} diverged at t={k * dt:.3f}s: {exc}"
            ) from exc

    log["beta_dot"][1:] = np.diff(log["beta"]) / dt
    log["beta_dot"][0] = 0.0
    meta = scenario_meta(scenario, p)
    meta["metric_window_start"] = scenario.metric_window_start
    return SimRecord(data=log, meta=meta)


@dataclass(frozen=True)
class StepComparison:
    """Steady-state generator-speed shift after a wind step, nonlinear plant
    against the vertex linear model."""

    wind_target: float
    delta_wg_linear: float
    delta_wg_nonlinear: float

    @property
    def relative_discrepancy(self) -> float:
        return abs(self.delta_wg_nonlinear - self.delta_wg_linear) / abs(self.delta_wg_linear)


def open_loop_step_comparison(p: TurbineParams, wind_targets: tuple[float, ...],
                              settle_time: float = 120.0, dt: float = 1e-3
                              ) -> list[StepComparison]:
    """Hold the vmax-vertex trim inputs, step the wind to each target, and
    compare the settled generator speed with the linear-model prediction.

    The linear and nonlinear responses agree at small steps and drift apart
    as the target leaves the linearization point.
    """
    model = linearize.vertex_models(p)[0]
    op = model.op
    d_wg_lin = -np.linalg.solve(model.a, model.b1[:, 0])[2]
    out = []
    n = int(round(settle_time / dt))
    for v_target in wind_targets:
        x = op.plant_state(p)
        cmd = op.command()
        for _ in range(n):
            x = turbine.step(x, cmd, v_target, dt, p)
        tail = x.generator_speed
        x2 = turbine.step(x, cmd, v_target, dt, p)
        if abs(x2.generator_speed - tail) > 1e-6 * p.rated_generator_speed:
            raise RuntimeError(f"open-loop response at {v_target} m/s did not settle")
        out.append(StepComparison(
            wind_target=float(v_target),
            delta_wg_linear=float(d_wg_lin * (v_target - op.wind)),
            delta_wg_nonlinear=float(tail - p.gearbox_ratio * op.rotor_speed),
        ))
    return out


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    peak_fluctuation_pct: float  # max |x - mean| / |mean|, percent
    variance: float


@dataclass(frozen=True)
class MetricReport:
    """Window statistics matching the reported fluctuation figures."""

    window: tuple[float, float]
    channels: dict[str, ChannelStats]
    twist_amplitude: float        # rad, about the local trend
    beta_range_violations: int
    beta_rate_violations: int

    def as_text(self) -> str:
        lines = [f"window_start = {self.window[0]!r}", f"window_end = {self.window[1]!r}"]
        for name, st in self.channels.items():
            lines.append(f"{name}.mean = {st.mean!r}")
            lines.append(f"{name}.peak_fluctuation_pct = {st.peak_fluctuation_pct!r}")
            lines.append(f"{name}.variance = {st.variance!r}")
        lines.append(f"twist_amplitude = {self.twist_amplitude!r}")
        lines.append(f"beta_range_violations = {self.beta_range_violations}")
        lines.append(f"beta_rate_violations = {self.beta_rate_violations}")
        return "\n".join(lines) + "\n"


_TREND_WINDOW = 2.0  # s, moving average that defines the local trim of the twist


def metrics(rec: SimRecord, window_start: float | None = None,
            p: TurbineParams | None = None) -> MetricReport:
    """Per-channel fluctuation statistics over the metric window plus the
    constraint audit over the whole record."""
    p = p or TurbineParams()
    if window_start is None:
        window_start = float(rec.meta.get("metric_window_start", 0.0))
    t = rec.t
    mask = t >= window_start
    if not np.any(mask):
        raise ValueError(f"metric window starting at {window_start} s is empty")

    channels = {}
    for name in ("omega_g", "ps", "tg", "beta", "delta", "omega_r"):
        x = rec.data[name][mask]
        mean = float(x.mean())
        peak = float(np.abs(x - mean).max())
        denom = abs(mean) if mean != 0.0 else 1.0
        channels[name] = ChannelStats(mean, 100.0 * peak / denom, float(x.var()))

    delta = rec.delta[mask]
    n_avg = max(1, int(round(_TREND_WINDOW / rec.dt)))
    if len(delta) > 2 * n_avg:
        kernel = np.full(n_avg, 1.0 / n_avg)
        trend = np.convolve(delta, kernel, mode="valid")
        inner = delta[n_avg - 1:len(trend) + n_avg - 1]
        twist_amp = float(np.abs(inner - trend).max())
    else:
        twist_amp = float(np.abs(delta - delta.mean()).max())

    tol = 1e-9
    beta = rec.beta
    range_bad = int(np.sum((beta < p.pitch_min - tol) | (beta > p.pitch_max + tol)))
    rate_bad = int(np.sum(np.abs(rec.beta_dot[1:]) > p.pitch_rate_limit + tol))
    return MetricReport(
        window=(float(window_start), float(t[-1])),
        channels=channels,
        twist_amplitude=twist_amp,
        beta_range_violations=range_bad,
        beta_rate_violations=rate_bad,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side metrics and PIFLC/LPV degradation ratios."""

    lpv_metrics: MetricReport
    piflc_metrics: MetricReport
    speed_fluctuation_ratio: float
    power_fluctuation_ratio: float
    twist_variance_ratio: float

    def as_text(self) -> str:
        lines = ["[lpv]"]
        lines.append(self.lpv_metrics.as_text().rstrip())
        lines.append("[piflc]")
        lines.append(self.piflc_metrics.as_text().rstrip())
        lines.append("[ratios_piflc_over_lpv]")
        lines.append(f"speed_fluctuation = {self.speed_fluctuation_ratio!r}")
        lines.append(f"power_fluctuation = {self.power_fluctuation_ratio!r}")
        lines.append(f"twist_variance = {self.twist_variance_ratio!r}")
        return "\n".join(lines) + "\n"


def compare(rec_lpv: SimRecord, rec_piflc: SimRecord,
            p: TurbineParams | None = None) -> ComparisonReport:
    """Compare an LPV run against a PIFLC run of the same scenario."""
    for key in ("scenario", "dt", "duration", "wind_kind"):
        if rec_lpv.meta.get(key) != rec_piflc.meta.get(key):
            raise ScenarioMismatchError(f"records disagree on {key}")
    seed_a = rec_lpv.meta.get("wind_seed")
    seed_b = rec_piflc.meta.get("wind_seed")
    if seed_a != seed_b:
        raise ScenarioMismatchError("records used different wind seeds")
    m_lpv = metrics(rec_lpv, p=p)
    m_pf = metrics(rec_piflc, p=p)

    def ratio(a: float, b: float) -> float:
        return a / b if b > 0.0 else math.inf

    return ComparisonReport(
        lpv_metrics=m_lpv,
        piflc_metrics=m_pf,
        speed_fluctuation_ratio=ratio(m_pf.channels["omega_g"].peak_fluctuation_pct,
                                      m_lpv.channels["omega_g"].peak_fluctuation_pct),
        power_fluctuation_ratio=ratio(m_pf.channels["ps"].peak_fluctuation_pct,
                                      m_lpv.channels["ps"].peak_fluctuation_pct),
        twist_variance_ratio=ratio(m_pf.channels["delta"].variance,
                                   m_lpv.channels["delta"].variance),
    )
