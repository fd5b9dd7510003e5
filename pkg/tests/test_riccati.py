from __future__ import annotations

import numpy as np
import pytest

from wecsim.riccati import (RiccatiError, care_hamiltonian, care_residual, ric,
                            ric_residual, solve_care)


def test_scalar_closed_form():
    # x^2 + 2x - 1 = 0 -> stabilizing root sqrt(2) - 1
    x = solve_care([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert x[0, 0] == pytest.approx(np.sqrt(2.0) - 1.0, rel=1e-12)


def test_zero_state_cost_gives_zero_solution():
    a = np.array([[-1.0, 0.3], [0.0, -2.0]])
    b = np.eye(2)
    x = solve_care(a, b, np.zeros((2, 2)), np.eye(2))
    assert np.abs(x).max() < 1e-12


def test_random_instances_residual_and_stability():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = 4
        a = rng.standard_normal((n, n))
        b = rng.standard_normal((n, 2))
        m = rng.standard_normal((n, n))
        q = m @ m.T + 0.1 * np.eye(n)
        r = np.eye(2)
        x = solve_care(a, b, q, r)
        res = care_residual(a, b, q, r, x)
        assert res <= 1e-8 * (1.0 + np.linalg.norm(x))
        closed = a - b @ np.linalg.solve(r, b.T) @ x
        assert np.max(np.linalg.eigvals(closed).real) < 0.0
        assert np.allclose(x, x.T)


def test_imaginary_axis_hamiltonian_rejected():
    ham = np.array([[0.0, 1.0], [-1.0, 0.0]])  # eigenvalues +-1j
    with pytest.raises(RiccatiError):
        ric(ham)


def test_residual_helper_matches_definition():
    a = np.array([[-1.0, 0.5], [0.0, -0.5]])
    b = np.array([[1.0], [1.0]])
    q = np.eye(2)
    r = np.array([[2.0]])
    x = solve_care(a, b, q, r)
    ham = care_hamiltonian(a, b, q, r)
    direct = np.linalg.norm(a.T @ x + x @ a - x @ b @ np.linalg.solve(r, b.T) @ x + q)
    assert ric_residual(ham, x) == pytest.approx(direct, abs=1e-12)


def test_hamiltonian_must_be_even_sized():
    with pytest.raises(ValueError):
        ric(np.zeros((3, 3)))
