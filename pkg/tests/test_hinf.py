from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla

from wecsim.hinf import (GeneralizedPlant, SynthesisError, UnstableSystemError,
                         close_loop, hinf_norm, hinf_norm_grid, hinf_synthesize)
from wecsim.statespace import StateSpaceModel, first_order, static_gain


def siso_mixed_sensitivity_plant() -> GeneralizedPlant:
    """G = 1/(s+1) with w1 = 1/(s+0.01) on the error and a 0.1 effort weight."""
    a = np.array([[-1.0, 0.0], [-1.0, -0.01]])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])   # inputs [w, u]
    c = np.array([[0.0, 1.0], [0.0, 0.0], [-1.0, 0.0]])  # outputs [z1, z2, e]
    d = np.array([[0.0, 0.0], [0.0, 0.1], [1.0, 0.0]])
    return GeneralizedPlant(StateSpaceModel(a, b, c, d), nw=1, nu=1, nz=2, ny=1)


class TestNorm:
    def test_first_order_lag(self):
        assert hinf_norm(first_order(0.0, 1.0, 1.0, 1.0)) == pytest.approx(1.0, abs=1e-4)

    def test_shaping_weight_peak(self):
        w1 = first_order(1.0, 10.0, 2.0, 0.1)
        assert hinf_norm(w1) == pytest.approx(100.0, rel=0.01)

    def test_static_gain_is_largest_singular_value(self):
        gain = static_gain([[3.0, 0.0], [4.0, 1.0]])
        want = sla.svdvals(np.array([[3.0, 0.0], [4.0, 1.0]]))[0]
        assert hinf_norm(gain) == pytest.approx(want, rel=1e-12)

    def test_unstable_system_rejected(self):
        with pytest.raises(UnstableSystemError):
            hinf_norm(StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]]))

    def test_bisection_agrees_with_grid_on_random_systems(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = rng.integers(2, 5)
            a = rng.standard_normal((n, n))
            a -= (np.max(np.linalg.eigvals(a).real) + 0.5) * np.eye(n)
            sys = StateSpaceModel(a, rng.standard_normal((n, 2)),
                                  rng.standard_normal((2, n)),
                                  0.1 * rng.standard_normal((2, 2)))
            got = hinf_norm(sys)
            grid = hinf_norm_grid(sys, 1e-3, 1e4, 2000)
            assert abs(got - grid) / got < 0.005


class TestGeneralizedPlant:
    def test_partition_must_sum(self):
        sys = StateSpaceModel(np.eye(2) * -1, np.ones((2, 3)), np.ones((4, 2)),
                              np.zeros((4, 3)))
        with pytest.raises(ValueError):
            GeneralizedPlant(sys, nw=1, nu=1, nz=2, ny=2)

    def test_regularize_lifts_deficient_feedthrough(self):
        plant = siso_mixed_sensitivity_plant()
        d = plant.ss.d.copy()
        d[1, 1] = 0.0  # kill the effort weight feedthrough -> D12 rank 0
        weak = GeneralizedPlant(StateSpaceModel(plant.ss.a, plant.ss.b, plant.ss.c, d),
                                1, 1, 2, 1)
        fixed, changed = weak.regularize()
        assert changed
        assert sla.svdvals(fixed.d12).min() >= 1e-6 * 0.99
        same, unchanged = plant.regularize()
        assert not unchanged and same is plant


class TestSynthesis:
    def test_siso_mixed_sensitivity(self):
        plant = siso_mixed_sensitivity_plant()
        result = hinf_synthesize(plant)
        closed = close_loop(plant, result.controller)
        assert closed.is_stable()
        assert hinf_norm(closed) <= result.gamma_achieved
        assert max(result.riccati_residuals) < 1e-8

    def test_closed_loop_matches_direct_formula(self):
        plant = siso_mixed_sensitivity_plant()
        result = hinf_synthesize(plant)
        k = result.controller
        closed = close_loop(plant, k)
        rng = np.random.default_rng(3)
        for w in rng.uniform(0.01, 20.0, 10):
            s = 1j * w
            g = 1.0 / (s + 1.0)
            w1 = 1.0 / (s + 0.01)
            ks = k.transfer_at(s)[0, 0]
            sens = 1.0 / (1.0 + g * ks)
            want = np.array([[w1 * sens], [0.1 * ks * sens]])
            assert np.abs(closed.transfer_at(s) - want).max() < 1e-8

    def test_tiny_gamma_range_is_infeasible_with_named_condition(self):
        plant = siso_mixed_sensitivity_plant()
        with pytest.raises(SynthesisError) as err:
            hinf_synthesize(plant, gamma_range=(1e-6, 2e-6))
        assert err.value.condition

    def test_gamma_range_validation(self):
        plant = siso_mixed_sensitivity_plant()
        with pytest.raises(ValueError):
            hinf_synthesize(plant, gamma_range=(1.0, 0.5))

    def test_achieved_gamma_carries_margin(self):
        plant = siso_mixed_sensitivity_plant()
        tight = hinf_synthesize(plant, margin=0.0, rtol=1e-5)
        slack = hinf_synthesize(plant, margin=0.05, rtol=1e-5)
        assert slack.gamma_achieved == pytest.approx(1.05 * tight.gamma_achieved, rel=1e-3)
