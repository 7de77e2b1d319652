"""Dense real/complex matrices with labels, LU factorization and CSV output."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# relative pivot threshold: |pivot| < SINGULAR_RTOL * max|A| means singular
SINGULAR_RTOL = 1e-12


class SingularMatrixError(ArithmeticError):
    def __init__(self, column: int):
        super().__init__(f"singular matrix (pivot column {column})")
        self.column = column


@dataclass(frozen=True, eq=False)
class Matrix:
    """A 2-D array with optional row/column labels.

    The same class carries real and complex data (``CMatrix`` is an alias);
    the dtype of ``data`` tells them apart.
    """

    data: np.ndarray
    row_labels: Optional[tuple] = None
    col_labels: Optional[tuple] = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError("Matrix data must be 2-D")
        if not np.iscomplexobj(data):
            data = data.astype(float)
        object.__setattr__(self, "data", data)
        if self.row_labels is not None:
            object.__setattr__(self, "row_labels", tuple(self.row_labels))
            if len(self.row_labels) != data.shape[0]:
                raise ValueError("row label count does not match rows")
        if self.col_labels is not None:
            object.__setattr__(self, "col_labels", tuple(self.col_labels))
            if len(self.col_labels) != data.shape[1]:
                raise ValueError("column label count does not match columns")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def row_of(self, label) -> int:
        return self.row_labels.index(label)

    def col_of(self, label) -> int:
        return self.col_labels.index(label)

    def at(self, row_label, col_label):
        return self.data[self.row_of(row_label), self.col_of(col_label)]

    def to_csv(self) -> str:
        return matrix_to_csv(self)


CMatrix = Matrix


@dataclass(frozen=True, eq=False)
class LuFactors:
    """Packed L (unit lower, below diagonal) and U (upper) with row permutation.

    ``perm[k]`` is the original row placed at position ``k`` so that
    ``A[perm] == L @ U``.
    """

    lu: np.ndarray
    perm: np.ndarray
    parity: int

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n, dtype=self.lu.dtype)

    @property
    def upper(self) -> np.ndarray:
        return np.triu(self.lu)

    def permutation_matrix(self) -> np.ndarray:
        return np.eye(self.n)[self.perm]


def _as_array(a) -> np.ndarray:
    return a.data if isinstance(a, Matrix) else np.asarray(a)


def lu_factor(a) -> LuFactors:
    """Doolittle LU with partial (row) pivoting."""
    a = _as_array(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"lu_factor needs a square matrix, got shape {a.shape}")
    lu = np.array(a, dtype=complex if np.iscomplexobj(a) else float)
    n = lu.shape[0]
    perm = np.arange(n)
    parity = 1
    scale = np.max(np.abs(lu)) if n else 0.0
    threshold = SINGULAR_RTOL * scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if scale == 0.0 or abs(lu[p, k]) < threshold:
            raise SingularMatrixError(k)
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            parity = -parity
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return LuFactors(lu, perm, parity)


def lu_solve(f: LuFactors, b) -> np.ndarray:
    """Solve ``A x = b`` from factors; ``b`` may be a vector or an n-by-k block."""
    b = np.asarray(b)
    if b.shape[0] != f.n:
        raise ValueError(f"dimension mismatch: factors are {f.n}x{f.n}, rhs has {b.shape[0]} rows")
    dtype = np.result_type(f.lu.dtype, b.dtype, float)
    y = np.array(b[f.perm], dtype=dtype)
    n = f.n
    for k in range(n):
        y[k + 1:] -= np.multiply.outer(f.lu[k + 1:, k], y[k])
    for k in range(n - 1, -1, -1):
        y[k] /= f.lu[k, k]
        y[:k] -= np.multiply.outer(f.lu[:k, k], y[k])
    return y


def lu_solve_transpose(f: LuFactors, b) -> np.ndarray:
    """Solve ``A^T x = b`` from the factors of ``A``."""
    b = np.asarray(b)
    if b.shape[0] != f.n:
        raise ValueError("dimension mismatch")
    dtype = np.result_type(f.lu.dtype, b.dtype, float)
    n = f.n
    # A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w
    z = np.array(b, dtype=dtype)
    for k in range(n):
        z[k] = (z[k] - f.lu[:k, k] @ z[:k]) / f.lu[k, k]
    for k in range(n - 1, -1, -1):
        z[k] -= f.lu[k + 1:, k] @ z[k + 1:]
    x = np.empty_like(z)
    x[f.perm] = z
    return x


def determinant(f: LuFactors):
    return f.parity * np.prod(np.diag(f.lu))


def invert(a):
    """Inverse of a square nonsingular matrix; labels are swapped if present."""
    arr = _as_array(a)
    inv = lu_solve(lu_factor(arr), np.eye(arr.shape[0]))
    if isinstance(a, Matrix):
        return Matrix(inv, a.col_labels, a.row_labels)
    return inv


# ---------------------------------------------------------------- CSV

def format_number(v) -> str:
    """Six significant digits, '.' decimal separator, no negative zero."""
    if isinstance(v, (complex, np.complexfloating)):
        re, im = format_number(v.real), format_number(abs(v.imag))
        sign = "-" if v.imag < 0 and im != "0" else "+"
        return f"{re}{sign}{im}j"
    s = f"{float(v):.6g}"
    return "0" if s == "-0" else s


def matrix_to_csv(m: Matrix, corner: str = "") -> str:
    cols = m.col_labels if m.col_labels is not None else range(m.cols)
    rows = m.row_labels if m.row_labels is not None else range(m.rows)
    out = [",".join([corner, *map(str, cols)])]
    for label, row in zip(rows, m.data):
        out.append(",".join([str(label), *(format_number(v) for v in row)]))
    return "\n".join(out) + "\n"


def rows_to_csv(header: Sequence[str], rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else format_number(v) for v in row))
    return "\n".join(out) + "\n"
