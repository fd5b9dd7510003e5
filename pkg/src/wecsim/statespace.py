"""Dense state-space algebra: interconnections, frequency response, ZOH
discretisation, and the labeled-matrix text format used for model exchange."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla


class DimensionError(ValueError):
    """Operands have incompatible input/output/state dimensions."""


class AlgebraicLoopError(ValueError):
    """Feedback interconnection is not well posed (singular loop feedthrough)."""


class SingularFrequencyError(ValueError):
    """Frequency response requested at an eigenvalue of A."""


def _as_matrix(m, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    out = np.atleast_2d(np.asarray(m, dtype=float))
    if rows is not None and cols is not None and out.shape == (0, 0):
        out = out.reshape(rows, cols) if rows * cols == 0 else out
    return out


@dataclass(frozen=True)
class StateSpaceModel:
    """Real (A, B, C, D) realization; used for plants, weights, controllers
    and closed loops alike."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _as_matrix(self.a))
        object.__setattr__(self, "b", _as_matrix(self.b))
        object.__setattr__(self, "c", _as_matrix(self.c))
        object.__setattr__(self, "d", _as_matrix(self.d))
        n = self.a.shape[0]
        if self.a.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.a.shape}")
        if self.b.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {self.b.shape}")
        if self.c.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {self.c.shape}")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise DimensionError(
                f"D must be {(self.c.shape[0], self.b.shape[1])}, got {self.d.shape}"
            )
        for name in ("a", "b", "c", "d"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name.upper()} has non-finite entries")

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.a) if self.n_states else np.zeros(0, complex)

    def is_stable(self) -> bool:
        return self.n_states == 0 or bool(np.max(self.eigenvalues().real) < 0.0)

    def transfer_at(self, s: complex) -> np.ndarray:
        """Transfer matrix C (sI - A)^-1 B + D at one complex frequency."""
        if self.n_states == 0:
            return self.d.astype(complex)
        m = s * np.eye(self.n_states) - self.a
        try:
            x = np.linalg.solve(m, self.b.astype(complex))
        except np.linalg.LinAlgError as exc:
            raise SingularFrequencyError(f"s={s} is an eigenvalue of A") from exc
        return self.c @ x + self.d

    def dc_gain(self) -> np.ndarray:
        return self.transfer_at(0.0).real


def static_gain(matrix) -> StateSpaceModel:
    """Zero-state system realizing a constant gain matrix."""
    d = _as_matrix(matrix)
    p, m = d.shape
    return StateSpaceModel(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), d)


def first_order(b1: float, b0: float, a1: float, a0: float) -> StateSpaceModel:
    """SISO realization of (b1 s + b0) / (a1 s + a0)."""
    if a1 == 0.0:
        raise ValueError("a1 must be nonzero")
    pole = -a0 / a1
    d = b1 / a1
    c = (b0 - b1 * a0 / a1) / a1
    return StateSpaceModel([[pole]], [[1.0]], [[c]], [[d]])


def series(sys1: StateSpaceModel, sys2: StateSpaceModel) -> StateSpaceModel:
    """Cascade: y = sys2(sys1(u))."""
    if sys1.n_outputs != sys2.n_inputs:
        raise DimensionError(
            f"series: sys1 has {sys1.n_outputs} outputs, sys2 takes {sys2.n_inputs} inputs"
        )
    n1, n2 = sys1.n_states, sys2.n_states
    a = np.block([
        [sys1.a, np.zeros((n1, n2))],
        [sys2.b @ sys1.c, sys2.a],
    ])
    b = np.vstack([sys1.b, sys2.b @ sys1.d])
    c = np.hstack([sys2.d @ sys1.c, sys2.c])
    d = sys2.d @ sys1.d
    return StateSpaceModel(a, b, c, d)


def parallel(sys1: StateSpaceModel, sys2: StateSpaceModel) -> StateSpaceModel:
    """Summed outputs on a shared input: y = sys1(u) + sys2(u)."""
    if sys1.n_inputs != sys2.n_inputs or sys1.n_outputs != sys2.n_outputs:
        raise DimensionError("parallel: systems must share input and output dimensions")
    n1, n2 = sys1.n_states, sys2.n_states
    a = np.block([
        [sys1.a, np.zeros((n1, n2))],
        [np.zeros((n2, n1)), sys2.a],
    ])
    b = np.vstack([sys1.b, sys2.b])
    c = np.hstack([sys1.c, sys2.c])
    return StateSpaceModel(a, b, c, sys1.d + sys2.d)


def block_diag(sys1: StateSpaceModel, sys2: StateSpaceModel) -> StateSpaceModel:
    """Independent channels stacked: inputs and outputs concatenated."""
    n1, n2 = sys1.n_states, sys2.n_states
    a = np.block([
        [sys1.a, np.zeros((n1, n2))],
        [np.zeros((n2, n1)), sys2.a],
    ])
    b = np.block([
        [sys1.b, np.zeros((n1, sys2.n_inputs))],
        [np.zeros((n2, sys1.n_inputs)), sys2.b],
    ])
    c = np.block([
        [sys1.c, np.zeros((sys1.n_outputs, n2))],
        [np.zeros((sys2.n_outputs, n1)), sys2.c],
    ])
    d = np.block([
        [sys1.d, np.zeros((sys1.n_outputs, sys2.n_inputs))],
        [np.zeros((sys2.n_outputs, sys1.n_inputs)), sys2.d],
    ])
    return StateSpaceModel(a, b, c, d)


def feedback(sys1: StateSpaceModel, sys2: StateSpaceModel | None = None,
             sign: float = -1.0) -> StateSpaceModel:
    """Close the loop y = sys1(r + sign * sys2(y)); default negative feedback.

    With sys2 omitted the loop is closed through a unity gain.
    """
    if sys2 is None:
        sys2 = static_gain(np.eye(sys1.n_outputs))
    if sys1.n_outputs != sys2.n_inputs or sys2.n_outputs != sys1.n_inputs:
        raise DimensionError("feedback: loop dimensions do not match")
    d1, d2 = sys1.d, sys2.d
    loop = np.eye(sys1.n_outputs) - sign * (d1 @ d2)
    sv = sla.svdvals(loop)
    if sv.size and sv.min() < 1e-12 * max(1.0, sv.max()):
        raise AlgebraicLoopError("feedback loop feedthrough is singular")
    e = np.linalg.inv(loop)
    n1, n2 = sys1.n_states, sys2.n_states
    c1e = e @ sys1.c
    d1e = e @ d1
    # y1 = E C1 x1 + sign E D1 C2 x2 + E D1 r
    a = np.block([
        [sys1.a + sign * sys1.b @ d2 @ c1e,
         sign * sys1.b @ (sys2.c + sign * d2 @ d1e @ sys2.c)],
        [sys2.b @ c1e, sys2.a + sign * sys2.b @ d1e @ sys2.c],
    ])
    b = np.vstack([
        sys1.b @ (np.eye(sys1.n_inputs) + sign * d2 @ d1e),
        sys2.b @ d1e,
    ])
    c = np.hstack([c1e, sign * d1e @ sys2.c])
    return StateSpaceModel(a, b, c, d1e)


def zoh_discretize(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretisation via the augmented matrix exponential."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    n, m = a.shape[0], b.shape[1]
    if n == 0:
        return a.copy(), b.copy()
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a * dt
    block[:n, n:] = b * dt
    phi = sla.expm(block)
    return phi[:n, :n], phi[:n, n:]


# --- labeled-matrix text format ------------------------------------------

class MatrixFileError(ValueError):
    """Labeled-matrix file is malformed."""


def write_labeled(path: str | Path, scalars: dict[str, float],
                  matrices: dict[str, np.ndarray], header: str = "") -> None:
    """Write scalars and row-major labeled matrix blocks as plain text."""
    lines = []
    if header:
        for row in header.splitlines():
            lines.append(f"# {row}")
    for name, value in scalars.items():
        lines.append(f"scalar {name} {float(value)!r}")
    for name, mat in matrices.items():
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        lines.append(f"matrix {name} {mat.shape[0]} {mat.shape[1]}")
        for row in mat:
            lines.append(" ".join(repr(float(x)) for x in row))
    lines.append("")
    Path(path).write_text("\n".join(lines))


def read_labeled(path: str | Path) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    scalars: dict[str, float] = {}
    matrices: dict[str, np.ndarray] = {}
    lines = [ln for ln in Path(path).read_text().splitlines()]
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "scalar" and len(parts) == 3:
            scalars[parts[1]] = float(parts[2])
        elif parts[0] == "matrix" and len(parts) == 4:
            rows, cols = int(parts[2]), int(parts[3])
            data = []
            for _ in range(rows):
                if i >= len(lines):
                    raise MatrixFileError(f"{path}: truncated matrix {parts[1]}")
                entries = lines[i].split()
                if len(entries) != cols:
                    raise MatrixFileError(
                        f"{path}: matrix {parts[1]} row has {len(entries)} entries, expected {cols}"
                    )
                data.append([float(x) for x in entries])
                i += 1
            matrices[parts[1]] = np.array(data, dtype=float).reshape(rows, cols)
        else:
            raise MatrixFileError(f"{path}: unrecognized line {line!r}")
    return scalars, matrices
