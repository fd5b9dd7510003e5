"""Continuous algebraic Riccati solves via ordered real Schur decomposition
of the associated Hamiltonian."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla


class RiccatiError(ValueError):
    """No stabilizing Riccati solution exists (or it is numerically lost)."""


def ric(hamiltonian: np.ndarray, axis_tol: float = 1e-9, refine: int = 2) -> np.ndarray:
    """Stabilizing solution of the Riccati equation encoded by a 2n x 2n
    Hamiltonian matrix H = [[A, R], [Q, -A^T]].

    Returns symmetric X with [I; X] spanning the stable invariant subspace.
    Raises RiccatiError when H has eigenvalues within ``axis_tol`` of the
    imaginary axis or when the subspace is not complementary to the image of
    [0; I].  ``refine`` Newton defect-correction steps polish the Schur
    solution, which matters for badly scaled Hamiltonians.
    """
    h = np.asarray(hamiltonian, dtype=float)
    n2 = h.shape[0]
    if h.shape != (n2, n2) or n2 % 2:
        raise ValueError(f"Hamiltonian must be square with even size, got {h.shape}")
    n = n2 // 2

    eigs = np.linalg.eigvals(h)
    closest = np.min(np.abs(eigs.real) / (1.0 + np.abs(eigs)))
    if closest < axis_tol:
        raise RiccatiError("Hamiltonian has eigenvalues on the imaginary axis")

    _, z, sdim = sla.schur(h, output="real", sort="lhp")
    if sdim != n:
        raise RiccatiError(f"stable subspace has dimension {sdim}, expected {n}")
    u11 = z[:n, :n]
    u21 = z[n:, :n]
    if np.linalg.cond(u11) > 1e13:
        raise RiccatiError("stable subspace is not complementary (singular U11)")
    x = np.linalg.solve(u11.T, u21.T).T
    asym = np.linalg.norm(x - x.T) / max(1.0, np.linalg.norm(x))
    if asym > 1e-6:
        raise RiccatiError(f"solution lost symmetry (relative asymmetry {asym:.2e})")
    x = 0.5 * (x + x.T)

    a = h[:n, :n]
    r = h[:n, n:]
    q = h[n:, :n]
    for _ in range(refine):
        res = a.T @ x + x @ a + x @ r @ x - q
        scale = np.linalg.norm(x) + 1.0
        if np.linalg.norm(res) <= 1e-14 * scale:
            break
        a_cl = a + r @ x
        try:
            dx = sla.solve_sylvester(a_cl.T, a_cl, -res)
        except (np.linalg.LinAlgError, ValueError):
            break
        if np.linalg.norm(dx) > 0.5 * scale:  # refuse divergent corrections
            break
        x = 0.5 * (x + dx + (x + dx).T)
    return x


def ric_residual(hamiltonian: np.ndarray, x: np.ndarray) -> float:
    """Frobenius norm of A^T X + X A + X R X - Q for H = [[A, R], [Q, -A^T]]."""
    h = np.asarray(hamiltonian, dtype=float)
    n = h.shape[0] // 2
    a = h[:n, :n]
    r = h[:n, n:]
    q = h[n:, :n]
    return float(np.linalg.norm(a.T @ x + x @ a + x @ r @ x - q))


def care_hamiltonian(a, b, q, r) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    rinv_bt = np.linalg.solve(r, b.T)
    return np.block([[a, -b @ rinv_bt], [-q, -a.T]])


def solve_care(a, b, q, r) -> np.ndarray:
    """Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0.

    Post-conditions enforced: residual below 1e-8 * (1 + ||X||) and
    A - B R^-1 B^T X Hurwitz.
    """
    h = care_hamiltonian(a, b, q, r)
    x = ric(h)
    res = ric_residual(h, x)
    if res > 1e-8 * (1.0 + np.linalg.norm(x)):
        raise RiccatiError(f"residual too large: {res:.3e}")
    a_m = np.atleast_2d(np.asarray(a, dtype=float))
    closed = a_m + h[: a_m.shape[0], a_m.shape[0]:] @ x  # A - B R^-1 B^T X
    if np.max(np.linalg.eigvals(closed).real) >= 0.0:
        raise RiccatiError("computed solution is not stabilizing")
    return x


def care_residual(a, b, q, r, x) -> float:
    return ric_residual(care_hamiltonian(a, b, q, r), np.asarray(x, dtype=float))
