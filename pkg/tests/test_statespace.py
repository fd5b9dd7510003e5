from __future__ import annotations

import numpy as np
import pytest

from wecsim import statespace as ss


def random_system(rng: np.random.Generator, n: int, m: int = 2, p: int = 2,
                  stable: bool = True) -> ss.StateSpaceModel:
    a = rng.standard_normal((n, n))
    if stable:
        a -= (np.max(np.linalg.eigvals(a).real) + 0.4) * np.eye(n)
    return ss.StateSpaceModel(a, rng.standard_normal((n, m)),
                              rng.standard_normal((p, n)),
                              0.1 * rng.standard_normal((p, m)))


def freq_response_close(sys1, sys2, freqs, tol):
    for w in freqs:
        h1 = sys1.transfer_at(1j * w)
        h2 = sys2.transfer_at(1j * w)
        assert np.abs(h1 - h2).max() < tol


class TestModel:
    def test_dimension_checks(self):
        with pytest.raises(ss.DimensionError):
            ss.StateSpaceModel(np.zeros((2, 3)), np.zeros((2, 1)),
                               np.zeros((1, 2)), np.zeros((1, 1)))
        with pytest.raises(ss.DimensionError):
            ss.StateSpaceModel(np.zeros((2, 2)), np.zeros((3, 1)),
                               np.zeros((1, 2)), np.zeros((1, 1)))
        with pytest.raises(ValueError):
            ss.StateSpaceModel(np.array([[np.nan]]), np.zeros((1, 1)),
                               np.zeros((1, 1)), np.zeros((1, 1)))

    def test_transfer_at_singular_frequency(self):
        sys = ss.StateSpaceModel([[0.0]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(ss.SingularFrequencyError):
            sys.transfer_at(0.0)

    def test_first_order_realization_matches_rational_form(self):
        rng = np.random.default_rng(0)
        w1 = ss.first_order(1.0, 10.0, 2.0, 0.1)
        for s in rng.uniform(0.1, 50.0, 10) * 1j:
            want = (s + 10.0) / (2.0 * s + 0.1)
            assert abs(w1.transfer_at(s)[0, 0] - want) < 1e-12

    def test_static_gain(self):
        gain = ss.static_gain([[2.0, 0.0], [0.0, 3.0]])
        assert gain.n_states == 0
        assert np.allclose(gain.transfer_at(1j), np.diag([2.0, 3.0]))


class TestInterconnections:
    def test_series_with_identity(self):
        rng = np.random.default_rng(1)
        g = random_system(rng, 3)
        ident = ss.static_gain(np.eye(2))
        freq_response_close(ss.series(g, ident), g, rng.uniform(0.1, 20, 10), 1e-10)
        freq_response_close(ss.series(ident, g), g, rng.uniform(0.1, 20, 10), 1e-10)

    def test_series_oracle(self):
        rng = np.random.default_rng(2)
        g, h = random_system(rng, 2), random_system(rng, 3)
        cascade = ss.series(g, h)
        for w in rng.uniform(0.1, 20, 10):
            want = h.transfer_at(1j * w) @ g.transfer_at(1j * w)
            assert np.abs(cascade.transfer_at(1j * w) - want).max() < 1e-10

    def test_parallel_oracle(self):
        rng = np.random.default_rng(3)
        g, h = random_system(rng, 2), random_system(rng, 2)
        summed = ss.parallel(g, h)
        for w in rng.uniform(0.1, 20, 10):
            want = g.transfer_at(1j * w) + h.transfer_at(1j * w)
            assert np.abs(summed.transfer_at(1j * w) - want).max() < 1e-10

    def test_feedback_with_zero_gain_is_identity_loop(self):
        rng = np.random.default_rng(4)
        g = random_system(rng, 3)
        closed = ss.feedback(g, ss.static_gain(np.zeros((2, 2))))
        freq_response_close(closed, g, rng.uniform(0.1, 20, 10), 1e-10)

    def test_feedback_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            g1, g2 = random_system(rng, 2), random_system(rng, 2)
            closed = ss.feedback(g1, g2)
            for w in rng.uniform(0.05, 30, 10):
                h1 = g1.transfer_at(1j * w)
                h2 = g2.transfer_at(1j * w)
                want = h1 @ np.linalg.inv(np.eye(2) + h2 @ h1)
                assert np.abs(closed.transfer_at(1j * w) - want).max() < 1e-9

    def test_feedback_state_dimension_is_sum(self):
        rng = np.random.default_rng(6)
        g1, g2 = random_system(rng, 3), random_system(rng, 2)
        assert ss.feedback(g1, g2).n_states == 5

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(7)
        g = random_system(rng, 2, m=2, p=2)
        h = random_system(rng, 2, m=3, p=2)
        with pytest.raises(ss.DimensionError):
            ss.series(g, h)
        with pytest.raises(ss.DimensionError):
            ss.feedback(g, h)

    def test_algebraic_loop_detected(self):
        one = ss.static_gain([[1.0]])
        minus_one = ss.static_gain([[-1.0]])
        with pytest.raises(ss.AlgebraicLoopError):
            ss.feedback(one, minus_one)

    def test_block_diag(self):
        rng = np.random.default_rng(8)
        g, h = random_system(rng, 2, m=1, p=1), random_system(rng, 3, m=1, p=1)
        combined = ss.block_diag(g, h)
        assert combined.n_inputs == 2 and combined.n_outputs == 2
        resp = combined.transfer_at(2j)
        assert abs(resp[0, 0] - g.transfer_at(2j)[0, 0]) < 1e-12
        assert abs(resp[1, 1] - h.transfer_at(2j)[0, 0]) < 1e-12
        assert abs(resp[0, 1]) == 0.0 and abs(resp[1, 0]) == 0.0


class TestDiscretize:
    def test_scalar_zoh_exact(self):
        ad, bd = ss.zoh_discretize([[-2.0]], [[3.0]], 0.25)
        assert ad[0, 0] == pytest.approx(np.exp(-0.5), rel=1e-12)
        assert bd[0, 0] == pytest.approx((1.0 - np.exp(-0.5)) * 1.5, rel=1e-12)

    def test_static_system(self):
        ad, bd = ss.zoh_discretize(np.zeros((0, 0)), np.zeros((0, 2)), 0.1)
        assert ad.shape == (0, 0) and bd.shape == (0, 2)


class TestLabeledText:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "model.txt"
        mats = {"A": np.array([[1.0, -2.5e-7], [3.0, 4.0]]), "B": np.array([[1e17], [-2.0]])}
        ss.write_labeled(path, {"gamma": 1.25}, mats, header="two lines\nof header")
        scalars, loaded = ss.read_labeled(path)
        assert scalars == {"gamma": 1.25}
        for name in mats:
            assert np.array_equal(loaded[name], mats[name])

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("matrix A 2 2\n1.0 2.0\n")
        with pytest.raises(ss.MatrixFileError):
            ss.read_labeled(path)
        path.write_text("garbage line\n")
        with pytest.raises(ss.MatrixFileError):
            ss.read_labeled(path)
