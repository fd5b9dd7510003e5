"""Wind energy conversion system control workbench.

Two-mass variable-pitch turbine model, gain-scheduled mixed-sensitivity
H-infinity pitch/torque control, a PI-fuzzy baseline, and a deterministic
simulation harness for turbulent-wind scenarios.
"""

__version__ = "0.1.0"

from wecsim.turbine import TurbineParams, PlantState, ControlCommand

__all__ = ["TurbineParams", "PlantState", "ControlCommand", "__version__"]
