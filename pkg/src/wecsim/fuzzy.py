"""Mamdani PI-type fuzzy pitch controller baseline.

Seven evenly spaced triangular sets on the normalized universe [-1, 1] for
the speed error, its change, and the pitch increment; the 49-rule
antisymmetric PI table; min activation, max aggregation, and centroid
defuzzification.  The increment is integrated onto the pitch command, so the
controller has proportional-integral structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from wecsim.config import ConfigError, read_config

LABELS = ("NB", "NM", "NS", "ZE", "PS", "PM", "PB")
N_SETS = 7
_CENTERS = tuple((k - 3) / 3.0 for k in range(N_SETS))
_GRID_POINTS = 1001


def standard_rule_table() -> np.ndarray:
    """Antisymmetric PI rule table: output index saturates the sum of the
    error and error-change indices."""
    idx = np.arange(N_SETS) - 3
    table = np.clip(idx[:, None] + idx[None, :], -3, 3) + 3
    return table.astype(np.intp)


@dataclass(frozen=True)
class FuzzyConfig:
    """Gains and sampling of the pitch-side fuzzy loop.

    ``output_fullscale_deg`` converts the normalized increment to degrees
    before the output gain is applied.
    """

    ke: float = 2.0
    kde: float = 2.0
    ku: float = -2.0
    ts: float = 0.01                 # s
    output_fullscale_deg: float = 24.0
    pitch_min: float = 0.0
    pitch_max: float = 24.0

    def __post_init__(self) -> None:
        if self.ts <= 0.0:
            raise ValueError("sampling period must be positive")
        if self.pitch_min >= self.pitch_max:
            raise ValueError("pitch_min must be below pitch_max")


@dataclass
class PiflcState:
    """One controller's memory: previous error and the accumulated command."""

    prev_error: float = 0.0
    command: float = 0.0


def fuzzify(x: float) -> np.ndarray:
    """Memberships of the seven triangles at saturated input ``x``.

    At most two sets are active and the memberships sum to one.
    """
    x = min(max(x, -1.0), 1.0)
    centers = np.array(_CENTERS)
    mu = 1.0 - np.abs(x - centers) * 3.0
    return np.maximum(mu, 0.0)


@lru_cache(maxsize=1)
def _output_triangles() -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(-1.0, 1.0, _GRID_POINTS)
    centers = np.array(_CENTERS)
    tri = np.maximum(1.0 - np.abs(grid[None, :] - centers[:, None]) * 3.0, 0.0)
    return grid, tri


def infer_and_defuzzify(mu_e: np.ndarray, mu_de: np.ndarray,
                        rule_table: np.ndarray | None = None) -> float:
    """Normalized increment from the two membership vectors.

    Rule activation is min(mu_e_i, mu_de_j); activations are max-aggregated
    per output set, the output sets are clipped and max-aggregated, and the
    centroid of the resulting area is returned.
    """
    table = standard_rule_table() if rule_table is None else rule_table
    act = np.minimum(mu_e[:, None], mu_de[None, :])
    set_level = np.zeros(N_SETS)
    np.maximum.at(set_level, table.ravel(), act.ravel())
    grid, tri = _output_triangles()
    aggregated = np.max(np.minimum(set_level[:, None], tri), axis=0)
    area = aggregated.sum()
    if area <= 0.0:
        raise ValueError("no rule fired: membership coverage violated")
    return float((aggregated * grid).sum() / area)


def piflc_step(state: PiflcState, omega_g: float, omega_ref: float,
               cfg: FuzzyConfig) -> tuple[float, PiflcState]:
    """One sample of the PI-fuzzy pitch loop.

    Per-unit speed error and its change are gain-scaled and saturated into
    the fuzzy universe; the defuzzified increment is scaled to degrees by
    ``ku`` times the full-scale and accumulated onto the saturated pitch
    command.  Call every ``cfg.ts`` seconds and hold the output in between.
    """
    error = (omega_ref - omega_g) / omega_ref
    delta_error = error - state.prev_error
    mu_e = fuzzify(cfg.ke * error)
    mu_de = fuzzify(cfg.kde * delta_error)
    du_norm = infer_and_defuzzify(mu_e, mu_de)
    command = state.command + cfg.ku * cfg.output_fullscale_deg * du_norm
    command = min(max(command, cfg.pitch_min), cfg.pitch_max)
    return command, PiflcState(prev_error=error, command=command)


def dump_rules(rule_table: np.ndarray | None = None) -> str:
    """Human-readable rule table (rows: error, columns: error change)."""
    table = standard_rule_table() if rule_table is None else rule_table
    width = max(len(s) for s in LABELS)
    head = " " * (width + 1) + " ".join(f"{s:>{width}}" for s in LABELS)
    rows = [head]
    for i, row in enumerate(table):
        cells = " ".join(f"{LABELS[j]:>{width}}" for j in row)
        rows.append(f"{LABELS[i]:>{width}} {cells}")
    return "\n".join(rows)


def load_piflc_config(path: str | Path, pitch_min: float = 0.0,
                      pitch_max: float = 24.0) -> FuzzyConfig:
    """Gains and sampling period from the ``[piflc]`` section of a parameter
    file; missing keys keep their defaults."""
    try:
        sections = read_config(path)
    except ConfigError:
        raise
    table = sections.get("piflc", {})
    known = {"ke", "kde", "ku", "ts", "output_fullscale_deg"}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown piflc keys: {sorted(unknown)}")
    return FuzzyConfig(pitch_min=pitch_min, pitch_max=pitch_max, **table)
