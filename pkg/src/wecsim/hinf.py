"""H-infinity machinery: norm estimation and two-Riccati output-feedback
synthesis on a partitioned generalized plant.

The synthesis handles the general feedthrough case (nonzero D11, non-square
D12/D21) by orthogonal normalization of the performance and disturbance
channels, so biproper weights can be used directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from wecsim.riccati import RiccatiError, ric, ric_residual
from wecsim.statespace import AlgebraicLoopError, StateSpaceModel, feedback, static_gain


class UnstableSystemError(ValueError):
    """A stable realization is required here."""


class SynthesisError(RuntimeError):
    """Synthesis failed; ``condition`` names the first violated requirement."""

    def __init__(self, condition: str, message: str = ""):
        self.condition = condition
        super().__init__(message or condition)


def _smax(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(sla.svdvals(m)[0])


def hinf_norm_grid(sys: StateSpaceModel, w_lo: float = 1e-3, w_hi: float = 1e4,
                   n: int = 2000) -> float:
    """Peak gain over a dense logarithmic frequency grid (lower bound)."""
    peak = _smax(sys.d)
    for w in np.logspace(np.log10(w_lo), np.log10(w_hi), n):
        peak = max(peak, _smax(sys.transfer_at(1j * w)))
    return peak


def _has_imaginary_eigs(sys: StateSpaceModel, gamma: float) -> bool:
    """True when the bounded-real Hamiltonian at level ``gamma`` has
    eigenvalues on the imaginary axis, i.e. the norm is >= gamma."""
    d = sys.d
    r = gamma**2 * np.eye(sys.n_inputs) - d.T @ d
    if np.min(np.linalg.eigvalsh(r)) <= 0.0:
        return True
    rinv_dt_c = np.linalg.solve(r, d.T @ sys.c)
    rinv_bt = np.linalg.solve(r, sys.b.T)
    a_shift = sys.a + sys.b @ rinv_dt_c
    ham = np.block([
        [a_shift, sys.b @ rinv_bt],
        [-sys.c.T @ (np.eye(sys.n_outputs) + d @ np.linalg.solve(r, d.T)) @ sys.c,
         -a_shift.T],
    ])
    eigs = np.linalg.eigvals(ham)
    return bool(np.any(np.abs(eigs.real) <= 1e-8 * (1.0 + np.abs(eigs))))


def hinf_norm(sys: StateSpaceModel, rtol: float = 1e-4) -> float:
    """H-infinity norm of a stable system by gamma bisection on the
    bounded-real Hamiltonian imaginary-axis test."""
    if sys.n_states == 0:
        return _smax(sys.d)
    if not sys.is_stable():
        raise UnstableSystemError("H-infinity norm is defined for stable systems only")

    # Lower bound from the feedthrough and gains near the resonant frequencies.
    candidates = [0.0]
    for lam in sys.eigenvalues():
        if abs(lam.imag) > 1e-12:
            candidates.append(abs(lam.imag))
        candidates.append(abs(lam))
    candidates.extend(np.logspace(-3, 4, 40))
    lo = _smax(sys.d)
    for w in candidates:
        lo = max(lo, _smax(sys.transfer_at(1j * w)))
    if lo == 0.0:
        lo = 1e-14

    hi = 1.02 * lo
    for _ in range(200):
        if not _has_imaginary_eigs(sys, hi):
            break
        hi *= 2.0
    else:
        raise RuntimeError("upper bound search for the H-infinity norm diverged")
    lo = hi / 2.0 if hi > 1.02 * lo else lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _has_imaginary_eigs(sys, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GeneralizedPlant:
    """Partitioned plant [z; y] = P [w; u] with nw exogenous inputs, nu
    controls, nz performance outputs and ny measurements."""

    ss: StateSpaceModel
    nw: int
    nu: int
    nz: int
    ny: int

    def __post_init__(self) -> None:
        if self.nw + self.nu != self.ss.n_inputs:
            raise ValueError("input partition does not sum to the model inputs")
        if self.nz + self.ny != self.ss.n_outputs:
            raise ValueError("output partition does not sum to the model outputs")

    @property
    def a(self): return self.ss.a
    @property
    def b1(self): return self.ss.b[:, :self.nw]
    @property
    def b2(self): return self.ss.b[:, self.nw:]
    @property
    def c1(self): return self.ss.c[:self.nz, :]
    @property
    def c2(self): return self.ss.c[self.nz:, :]
    @property
    def d11(self): return self.ss.d[:self.nz, :self.nw]
    @property
    def d12(self): return self.ss.d[:self.nz, self.nw:]
    @property
    def d21(self): return self.ss.d[self.nz:, :self.nw]
    @property
    def d22(self): return self.ss.d[self.nz:, self.nw:]

    def regularize(self, eps: float = 1e-6) -> tuple["GeneralizedPlant", bool]:
        """Lift rank-deficient D12/D21 singular values to ``eps``."""
        d = self.ss.d.copy()
        changed = False
        d12 = self.d12
        if d12.size and (d12.shape[1] and _rank_deficient(d12.T @ d12, eps)):
            d[:self.nz, self.nw:] = _lift_singular_values(d12, eps)
            changed = True
        d21 = self.d21
        if d21.size and (d21.shape[0] and _rank_deficient(d21 @ d21.T, eps)):
            d[self.nz:, :self.nw] = _lift_singular_values(d21.T, eps).T
            changed = True
        if not changed:
            return self, False
        ss = StateSpaceModel(self.ss.a, self.ss.b, self.ss.c, d)
        return GeneralizedPlant(ss, self.nw, self.nu, self.nz, self.ny), True


def _rank_deficient(gram: np.ndarray, eps: float) -> bool:
    return bool(np.min(np.linalg.eigvalsh(gram)) < eps**2)


def _lift_singular_values(tall: np.ndarray, eps: float) -> np.ndarray:
    u, s, vt = np.linalg.svd(tall, full_matrices=False)
    return u @ np.diag(np.maximum(s, eps)) @ vt


def close_loop(plant: GeneralizedPlant, k: StateSpaceModel) -> StateSpaceModel:
    """Closed-loop map w -> z with the controller u = K y."""
    if k.n_inputs != plant.ny or k.n_outputs != plant.nu:
        raise ValueError("controller dimensions do not match the plant partition")
    a, b1, b2 = plant.a, plant.b1, plant.b2
    c1, c2 = plant.c1, plant.c2
    d11, d12, d21, d22 = plant.d11, plant.d12, plant.d21, plant.d22
    ak, bk, ck, dk = k.a, k.b, k.c, k.d
    loop = np.eye(plant.nu) - dk @ d22
    sv = sla.svdvals(loop)
    if sv.size and sv.min() < 1e-12 * max(1.0, sv.max()):
        raise AlgebraicLoopError("plant-controller loop is not well posed")
    e = np.linalg.inv(loop)
    edkc2 = e @ dk @ c2
    edkd21 = e @ dk @ d21
    eck = e @ ck
    a_cl = np.block([
        [a + b2 @ edkc2, b2 @ eck],
        [bk @ (c2 + d22 @ edkc2), ak + bk @ d22 @ eck],
    ])
    b_cl = np.vstack([b1 + b2 @ edkd21, bk @ (d21 + d22 @ edkd21)])
    c_cl = np.hstack([c1 + d12 @ edkc2, d12 @ eck])
    d_cl = d11 + d12 @ edkd21
    return StateSpaceModel(a_cl, b_cl, c_cl, d_cl)


@dataclass(frozen=True)
class SynthesisResult:
    controller: StateSpaceModel
    gamma_achieved: float
    riccati_residuals: tuple[float, float]
    regularized: bool = False


class _Normalized:
    """Plant transformed so that D12 = [0; I] and D21 = [0 I]."""

    def __init__(self, plant: GeneralizedPlant):
        nz, nu, ny, nw = plant.nz, plant.nu, plant.ny, plant.nw
        u12, s12, v12t = np.linalg.svd(plant.d12, full_matrices=True)
        s12 = s12[:nu]
        if s12.size == 0 or s12.min() <= 0.0:
            raise SynthesisError("D12 rank", "D12 is not full column rank")
        tz = np.vstack([u12[:, nu:].T, u12[:, :nu].T])        # orthogonal on z
        su = v12t.T @ np.diag(1.0 / s12)                      # u = su @ u_tilde
        u21, s21, v21t = np.linalg.svd(plant.d21, full_matrices=True)
        s21 = s21[:ny]
        if s21.size == 0 or s21.min() <= 0.0:
            raise SynthesisError("D21 rank", "D21 is not full row rank")
        tw = np.vstack([v21t[ny:, :], v21t[:ny, :]])          # orthogonal on w
        sy = np.diag(1.0 / s21) @ u21.T                       # y_tilde = sy @ y

        self.su, self.sy = su, sy
        self.a = plant.a
        self.b1 = plant.b1 @ tw.T
        self.b2 = plant.b2 @ su
        self.c1 = tz @ plant.c1
        self.c2 = sy @ plant.c2
        self.d11 = tz @ plant.d11 @ tw.T
        d12n = tz @ plant.d12 @ su
        d21n = sy @ plant.d21 @ tw.T
        want12 = np.vstack([np.zeros((nz - nu, nu)), np.eye(nu)])
        want21 = np.hstack([np.zeros((ny, nw - ny)), np.eye(ny)])
        if not (np.allclose(d12n, want12, atol=1e-9) and np.allclose(d21n, want21, atol=1e-9)):
            raise SynthesisError("feedthrough normalization",
                                 "could not normalize D12/D21")
        self.nw, self.nu, self.nz, self.ny = nw, nu, nz, ny
        # D11 blocks conformal with the normalized D12/D21 partitions
        r1, c1 = nz - nu, nw - ny
        self.d1111 = self.d11[:r1, :c1]
        self.d1112 = self.d11[:r1, c1:]
        self.d1121 = self.d11[r1:, :c1]
        self.d1122 = self.d11[r1:, c1:]

    def gamma_floor(self) -> float:
        return max(_smax(np.hstack([self.d1111, self.d1112])),
                   _smax(np.vstack([self.d1111, self.d1121])))

    def riccati_pair(self, gamma: float):
        """Hamiltonians of the two gamma-level Riccati equations."""
        nw, nu, nz, ny = self.nw, self.nu, self.nz, self.ny
        n = self.a.shape[0]
        b = np.hstack([self.b1, self.b2])
        c = np.vstack([self.c1, self.c2])
        d1dot = np.hstack([self.d11, np.vstack([np.zeros((nz - nu, nu)), np.eye(nu)])])
        ddot1 = np.vstack([self.d11, np.hstack([np.zeros((ny, nw - ny)), np.eye(ny)])])
        r = d1dot.T @ d1dot
        r[:nw, :nw] -= gamma**2 * np.eye(nw)
        rt = ddot1 @ ddot1.T
        rt[:nz, :nz] -= gamma**2 * np.eye(nz)
        left = np.vstack([b, -self.c1.T @ d1dot])
        right = np.hstack([d1dot.T @ self.c1, b.T])
        ham_x = np.block([
            [self.a, np.zeros((n, n))],
            [-self.c1.T @ self.c1, -self.a.T],
        ]) - left @ np.linalg.solve(r, right)
        left_j = np.vstack([c.T, -self.b1 @ ddot1.T])
        right_j = np.hstack([ddot1 @ self.b1.T, c])
        ham_y = np.block([
            [self.a.T, np.zeros((n, n))],
            [-self.b1 @ self.b1.T, -self.a],
        ]) - left_j @ np.linalg.solve(rt, right_j)
        return ham_x, ham_y, r, rt, b, c, d1dot, ddot1

    def central_controller(self, gamma: float, x: np.ndarray, y: np.ndarray,
                           r: np.ndarray, rt: np.ndarray, b: np.ndarray,
                           c: np.ndarray, d1dot: np.ndarray, ddot1: np.ndarray
                           ) -> StateSpaceModel:
        nw, nu, nz, ny = self.nw, self.nu, self.nz, self.ny
        r1, c1 = nz - nu, nw - ny
        g2 = gamma**2
        f = -np.linalg.solve(r, d1dot.T @ self.c1 + b.T @ x)
        h = -np.linalg.solve(rt.T, (self.b1 @ ddot1.T + y @ c.T).T).T
        f12 = f[c1:nw, :]
        f2 = f[nw:, :]
        h12 = h[:, r1:nz]
        h2 = h[:, nz:]
        z = np.linalg.inv(np.eye(len(x)) - y @ x / g2)

        gap_r = g2 * np.eye(r1) - self.d1111 @ self.d1111.T
        gap_c = g2 * np.eye(c1) - self.d1111.T @ self.d1111
        d11h = -self.d1121 @ self.d1111.T @ np.linalg.solve(gap_r, self.d1112) - self.d1122
        d12h = np.linalg.cholesky(
            np.eye(nu) - self.d1121 @ np.linalg.solve(gap_c, self.d1121.T))
        d21h = np.linalg.cholesky(
            np.eye(ny) - self.d1112.T @ np.linalg.solve(gap_r, self.d1112)).T
        b2h = z @ (self.b2 + h12) @ d12h
        c2h = -d21h @ (self.c2 + f12)
        b1h = -z @ h2 + b2h @ np.linalg.solve(d12h, d11h)
        c1h = f2 + d11h @ np.linalg.solve(d21h, c2h)
        ahat = self.a + b @ f + b1h @ np.linalg.solve(d21h, c2h)
        # undo the channel normalization
        return StateSpaceModel(ahat, b1h @ self.sy, self.su @ c1h,
                               self.su @ d11h @ self.sy)


def _check_feasible(norm: _Normalized, gamma: float):
    """Evaluate the gamma-level feasibility conditions.

    Returns (data tuple) on success, otherwise raises SynthesisError with
    the name of the first failed condition.
    """
    try:
        ham_x, ham_y, r, rt, b, c, d1dot, ddot1 = norm.riccati_pair(gamma)
    except np.linalg.LinAlgError as exc:
        raise SynthesisError("singular R matrix", str(exc)) from exc
    try:
        x = ric(ham_x)
    except RiccatiError as exc:
        raise SynthesisError("X Riccati has no stabilizing solution", str(exc)) from exc
    try:
        y = ric(ham_y)
    except RiccatiError as exc:
        raise SynthesisError("Y Riccati has no stabilizing solution", str(exc)) from exc
    ex = np.linalg.eigvalsh(x)
    if ex.size and ex.min() < -1e-8 * (1.0 + abs(ex.max())):
        raise SynthesisError("X not positive semidefinite")
    ey = np.linalg.eigvalsh(y)
    if ey.size and ey.min() < -1e-8 * (1.0 + abs(ey.max())):
        raise SynthesisError("Y not positive semidefinite")
    rho = max(np.abs(np.linalg.eigvals(x @ y))) if len(x) else 0.0
    if rho >= gamma**2:
        raise SynthesisError("spectral radius coupling rho(XY) >= gamma^2")
    return x, y, (ham_x, ham_y, r, rt, b, c, d1dot, ddot1)


def hinf_synthesize(plant: GeneralizedPlant,
                    gamma_range: tuple[float, float] = (1e-3, 1e4),
                    margin: float = 0.05, rtol: float = 1e-3) -> SynthesisResult:
    """Gamma-bisection output-feedback synthesis; returns the central
    controller at the smallest feasible gamma inflated by ``margin``.

    Raises SynthesisError naming the violated condition when no gamma in
    range is feasible.
    """
    plant, regularized = plant.regularize()
    norm = _Normalized(plant)
    lo, hi = gamma_range
    if not 0.0 < lo < hi:
        raise ValueError(f"invalid gamma range {gamma_range}")
    floor = norm.gamma_floor()
    if hi <= floor:
        raise SynthesisError(
            "gamma range below feedthrough bound",
            f"largest gamma {hi} is below the D11 feasibility floor {floor:.6g}",
        )
    lo = max(lo, floor * (1.0 + 1e-9))

    try:
        x, y, data = _check_feasible(norm, hi)
    except SynthesisError as exc:
        raise SynthesisError(exc.condition,
                             f"gamma range upper bound {hi} infeasible: {exc}") from exc
    best = (hi, x, y, data)
    g_lo, g_hi = lo, hi
    while g_hi - g_lo > rtol * g_hi:
        mid = (g_lo * g_hi) ** 0.5
        try:
            x, y, data = _check_feasible(norm, mid)
            best = (mid, x, y, data)
            g_hi = mid
        except SynthesisError:
            g_lo = mid

    gamma = best[0] * (1.0 + margin)
    try:
        x, y, data = _check_feasible(norm, gamma)
    except SynthesisError:  # fall back to the tightest verified level
        gamma, x, y, data = best
    ham_x, ham_y, r, rt, b, c, d1dot, ddot1 = data
    controller = norm.central_controller(gamma, x, y, r, rt, b, c, d1dot, ddot1)
    res_x = ric_residual(ham_x, x) / (1.0 + np.linalg.norm(x))
    res_y = ric_residual(ham_y, y) / (1.0 + np.linalg.norm(y))

    closed = close_loop(plant, controller)
    eig_max = float(np.max(closed.eigenvalues().real))
    if eig_max >= -1e-9:
        raise SynthesisError("closed loop not internally stable",
                             f"max closed-loop eigenvalue real part {eig_max:.3e}")
    achieved = hinf_norm(closed)
    if achieved > gamma:
        raise SynthesisError("norm bound violated",
                             f"measured {achieved:.6g} > gamma {gamma:.6g}")
    return SynthesisResult(controller, float(gamma), (float(res_x), float(res_y)),
                           regularized)
