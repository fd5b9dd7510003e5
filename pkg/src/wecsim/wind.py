"""Wind-speed signal generators for the simulation scenarios.

Every generator is deterministic for a fixed (parameters, seed) pair; series
can be exported and re-imported as two-column CSV so external traces can
drive the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import scipy.linalg as sla
import scipy.signal

from wecsim.statespace import StateSpaceModel, zoh_discretize


@dataclass(frozen=True)
class ConstantWind:
    speed: float
    duration: float
    dt: float = 1e-3
    kind: str = "constant"


@dataclass(frozen=True)
class SmoothSweep:
    """Half-cosine monotone ramp between two speeds."""

    v_start: float
    v_end: float
    duration: float
    dt: float = 1e-3
    kind: str = "smooth-sweep"


@dataclass(frozen=True)
class StepRampNoise:
    """Hold 24 m/s, ramp to 17.5 m/s over 25-35 s, hold, ramp to 11 m/s over
    60-70 s, hold; additive white Gaussian noise on every sample."""

    duration: float
    seed: int
    dt: float = 1e-3
    noise_variance: float = 0.0102
    clamp: tuple[float, float] | None = None
    kind: str = "step-ramp-with-noise"

    def __post_init__(self) -> None:
        if self.duration < 80.0:
            raise ValueError("step-ramp scenario needs at least 80 s to play out")


@dataclass(frozen=True)
class VonKarmanWind:
    """Longitudinal turbulence from the second-order rational spectrum
    approximation, started in its stationary state."""

    duration: float
    seed: int
    mean_speed: float = 17.5
    sigma: float = 2.0
    length_scale: float = 170.0
    dt: float = 1e-3
    clamp: tuple[float, float] | None = (11.0, 24.0)
    kind: str = "von-karman"

    def __post_init__(self) -> None:
        if min(self.mean_speed, self.sigma, self.length_scale) <= 0.0:
            raise ValueError("mean speed, sigma and length scale must be positive")


@dataclass(frozen=True)
class FileWind:
    """Externally supplied series from a two-column CSV, resampled onto the
    simulation grid by linear interpolation."""

    path: str
    dt: float = 1e-3
    duration: float | None = None  # defaults to the file's time span
    kind: str = "file"

    def __post_init__(self) -> None:
        if self.duration is None:
            t, _ = load_csv(self.path)
            object.__setattr__(self, "duration", float(t[-1] - t[0]))


WindProfile = Union[ConstantWind, SmoothSweep, StepRampNoise, VonKarmanWind, FileWind]

_RAMP_KNOTS_T = (0.0, 25.0, 35.0, 60.0, 70.0)
_RAMP_KNOTS_V = (24.0, 24.0, 17.5, 17.5, 11.0)


def step_ramp_mean(t: np.ndarray) -> np.ndarray:
    """Noise-free mean of the step-ramp profile (ends hold their value)."""
    return np.interp(t, _RAMP_KNOTS_T, _RAMP_KNOTS_V)


def von_karman_filter(mean_speed: float, sigma: float, length_scale: float
                      ) -> StateSpaceModel:
    """Shaping filter H(s) = K (1 + 0.25 T s) / (1 + 1.357 T s + 0.1987 T^2 s^2)
    with T = L/V and K = sigma sqrt(2L / (pi V)); unit-intensity white noise in,
    turbulence velocity out."""
    t_c = length_scale / mean_speed
    k = sigma * math.sqrt(2.0 * length_scale / (math.pi * mean_speed))
    a_num = 0.25 * t_c
    b_den = 1.357 * t_c
    c_den = 0.1987 * t_c**2
    a = np.array([[0.0, 1.0], [-1.0 / c_den, -b_den / c_den]])
    b = np.array([[0.0], [1.0]])
    c = np.array([[k / c_den, k * a_num / c_den]])
    return StateSpaceModel(a, b, c, np.zeros((1, 1)))


def von_karman_magnitude(mean_speed: float, sigma: float, length_scale: float,
                         omega: np.ndarray) -> np.ndarray:
    """Analytic |H(j omega)| of the shaping filter."""
    t_c = length_scale / mean_speed
    k = sigma * math.sqrt(2.0 * length_scale / (math.pi * mean_speed))
    s = 1j * np.asarray(omega)
    h = k * (1.0 + 0.25 * t_c * s) / (1.0 + 1.357 * t_c * s + 0.1987 * t_c**2 * s**2)
    return np.abs(h)


def _n_samples(duration: float, dt: float) -> int:
    return int(round(duration / dt)) + 1


def generate(profile: WindProfile) -> np.ndarray:
    """Sampled wind series v[k] at t = k dt, deterministic per seed."""
    n = _n_samples(profile.duration, profile.dt)
    t = np.arange(n) * profile.dt
    if isinstance(profile, ConstantWind):
        return np.full(n, float(profile.speed))
    if isinstance(profile, SmoothSweep):
        phase = np.clip(t / profile.duration, 0.0, 1.0)
        shape = 0.5 * (1.0 - np.cos(math.pi * phase))
        return profile.v_start + (profile.v_end - profile.v_start) * shape
    if isinstance(profile, StepRampNoise):
        rng = np.random.default_rng(profile.seed)
        v = step_ramp_mean(t) + math.sqrt(profile.noise_variance) * rng.standard_normal(n)
        if profile.clamp is not None:
            np.clip(v, *profile.clamp, out=v)
        return v
    if isinstance(profile, VonKarmanWind):
        return _generate_von_karman(profile, n)
    if isinstance(profile, FileWind):
        t_file, v_file = load_csv(profile.path)
        return np.interp(t_file[0] + t, t_file, v_file)
    raise TypeError(f"unknown wind profile {profile!r}")


_VK_WARMUP = 120.0  # s discarded so the filter reaches its stationary state


def _generate_von_karman(profile: VonKarmanWind, n: int) -> np.ndarray:
    filt = von_karman_filter(profile.mean_speed, profile.sigma, profile.length_scale)
    ad, bd = zoh_discretize(filt.a, filt.b, profile.dt)
    num, den = scipy.signal.ss2tf(ad, bd, filt.c, filt.d)
    # unit-intensity continuous white noise -> per-sample variance pi/dt
    noise_std = math.sqrt(math.pi / profile.dt)
    rng = np.random.default_rng(profile.seed)
    n_warm = int(round(_VK_WARMUP / profile.dt))
    e = noise_std * rng.standard_normal(n_warm + n)
    y = scipy.signal.lfilter(num[0], den, e)[n_warm:]
    v = profile.mean_speed + y
    if profile.clamp is not None:
        np.clip(v, *profile.clamp, out=v)
    return v


def save_csv(path: str | Path, t: np.ndarray, v: np.ndarray,
             meta: dict[str, object] | None = None) -> None:
    """Two-column (t, v) CSV with metadata comment lines."""
    lines = ["# wecsim wind series"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append("t,v")
    lines.extend(f"{ti!r},{vi!r}" for ti, vi in zip(t.tolist(), v.tolist()))
    lines.append("")
    Path(path).write_text("\n".join(lines))


def load_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("t,"):
            continue
        t_str, v_str = line.split(",")
        rows.append((float(t_str), float(v_str)))
    if not rows:
        raise ValueError(f"{path}: no samples found")
    data = np.array(rows)
    return data[:, 0], data[:, 1]
