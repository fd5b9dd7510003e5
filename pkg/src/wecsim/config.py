"""Shared reader for the INI-style parameter files.

Sections map to subsystems ([turbine], [piflc], [lpv]); every value must be
a plain number.
"""

from __future__ import annotations

import configparser
from pathlib import Path


class ConfigError(ValueError):
    """Parameter file is missing, malformed, or holds a non-numeric value."""


def read_config(path: str | Path) -> dict[str, dict[str, float]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out: dict[str, dict[str, float]] = {}
    for section in parser.sections():
        values = {}
        for key, raw in parser.items(section):
            try:
                values[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: [{section}] {key} = {raw!r} is not a number"
                ) from exc
        out[section] = values
    return out


def write_config(path: str | Path, sections: dict[str, dict[str, float]]) -> None:
    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f"{key} = {value!r}")
        lines.append("")
    Path(path).write_text("\n".join(lines))
