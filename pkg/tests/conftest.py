from __future__ import annotations

import pytest

from wecsim import lpv
from wecsim.turbine import TurbineParams


@pytest.fixture(scope="session")
def params() -> TurbineParams:
    return TurbineParams()


@pytest.fixture(scope="session")
def controller(params) -> lpv.LpvController:
    return lpv.synthesize_lpv(params)
