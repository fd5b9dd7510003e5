"""Frequency weights of the mixed-sensitivity design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wecsim.statespace import StateSpaceModel, first_order


@dataclass(frozen=True)
class WeightingSet:
    """Mixed-sensitivity weights: scalar w1 broadcast over both error
    channels, one w2 entry per control channel, static w3 on the outputs."""

    w1: StateSpaceModel
    w2: tuple[StateSpaceModel, StateSpaceModel]
    w3_gain: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self) -> None:
        object.__setattr__(self, "w3_gain", np.atleast_2d(np.asarray(self.w3_gain, float)))
        if self.w1.n_inputs != 1 or self.w1.n_outputs != 1:
            raise ValueError("w1 must be SISO")
        for w in (self.w1, *self.w2):
            if not w.is_stable():
                raise ValueError("weight realizations must be stable")
        dc = abs(self.w1.dc_gain()[0, 0])
        if dc < 10.0:  # 20 dB floor keeps the sensitivity shaping meaningful
            raise ValueError(f"w1 low-frequency gain {dc:.3g} is below 20 dB")


def default_weights() -> WeightingSet:
    """The shipped design set.

    w1 = (s+10)/(2s+0.1) pushes sensitivity down two decades at DC;
    the pitch-channel w2 = (s+60)/(2000s+1.2e7) and torque-channel
    w2 = (s+2.5)/(0.001s+25) limit actuator effort toward their bandwidth
    limits; w3 = I caps the complementary sensitivity.
    """
    return WeightingSet(
        w1=first_order(1.0, 10.0, 2.0, 0.1),
        w2=(first_order(1.0, 60.0, 2000.0, 1.2e7),
            first_order(1.0, 2.5, 0.001, 25.0)),
        w3_gain=np.eye(2),
    )
