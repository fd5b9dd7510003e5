#!/usr/bin/env python3
"""Reproduce the four headline experiments end to end.

Writes vertex models, the synthesized controller, and the CSV/metric/plot
artifacts for the step-response comparison, the open-loop sweep, the
step-ramp run, and the turbulent-wind controller comparison into out/.
"""

from __future__ import annotations

import sys
from pathlib import Path

from wecsim.cli import main

OUT = Path(__file__).resolve().parent.parent / "out"


def run() -> int:
    out = str(OUT)
    steps = [
        ["linearize", "--out", out],
        ["synthesize", "--out", out],
        ["simulate", "--scenario", "fig7", "--out", out],
        ["simulate", "--scenario", "fig8", "--controller", "open", "--out", out,
         "--stride", "10", "--plots"],
        ["simulate", "--scenario", "fig9", "--controller", "lpv", "--seed", "1",
         "--out", out, "--stride", "10", "--plots",
         "--controller-file", str(OUT / "controller.txt")],
        ["simulate", "--scenario", "fig10", "--controller", "both", "--seed", "5",
         "--out", out, "--stride", "10", "--plots",
         "--controller-file", str(OUT / "controller.txt")],
    ]
    for argv in steps:
        print(f"\n$ wecsim {' '.join(argv)}")
        code = main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
