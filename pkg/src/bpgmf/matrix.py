"""Dense and masked matrix containers and Frobenius-space primitives.

Dense matrices are plain C-ordered ``float64`` numpy arrays; :func:`dense`
validates them. Masked matrices hold an observed index set as a sorted triple
list and never materialize the full ``M x N`` array.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ShapeError(ValueError):
    """Operands have non-conformable shapes."""


def dense(data, copy: bool = False) -> np.ndarray:
    """Validate and return ``data`` as a finite, row-major 2-D float64 array.

    Raises:
        ValueError: if the input is not 2-D or contains NaN/Inf.
    """
    arr = np.array(data, dtype=np.float64, order="C", copy=copy or None)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    return arr


def fro_norm(m: np.ndarray) -> float:
    return float(np.sqrt(np.sum(m * m)))


def fro_inner(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ShapeError(f"inner product of {a.shape} and {b.shape}")
    return float(np.sum(a * b))


def gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@dataclass(frozen=True)
class FactorPair:
    """The iterate ``(U, Z)`` with ``U`` of shape ``M x K`` and ``Z`` of shape ``K x N``."""

    u: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if self.u.ndim != 2 or self.z.ndim != 2:
            raise ShapeError("factors must be 2-D")
        if self.u.shape[1] != self.z.shape[0]:
            raise ShapeError(f"inner dimensions differ: U {self.u.shape}, Z {self.z.shape}")

    @classmethod
    def zeros(cls, m: int, n: int, k: int) -> "FactorPair":
        return cls(np.zeros((m, k)), np.zeros((k, n)))

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def __add__(self, other: "FactorPair") -> "FactorPair":
        return FactorPair(self.u + other.u, self.z + other.z)

    def __sub__(self, other: "FactorPair") -> "FactorPair":
        return FactorPair(self.u - other.u, self.z - other.z)

    def __mul__(self, c: float) -> "FactorPair":
        return FactorPair(c * self.u, c * self.z)

    __rmul__ = __mul__

    def __neg__(self) -> "FactorPair":
        return FactorPair(-self.u, -self.z)

    def inner(self, other: "FactorPair") -> float:
        return fro_inner(self.u, other.u) + fro_inner(self.z, other.z)

    def norm_sq(self) -> float:
        return float(np.sum(self.u * self.u) + np.sum(self.z * self.z))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def same_as(self, other: "FactorPair") -> bool:
        return np.array_equal(self.u, other.u) and np.array_equal(self.z, other.z)


@dataclass(frozen=True)
class MaskedMatrix:
    """Observed entries of an ``M x N`` matrix as sorted ``(row, col, value)`` triples."""

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_triples(cls, shape, rows, cols, vals) -> "MaskedMatrix":
        """Build a masked matrix, sorting by ``(row, col)``.

        Raises:
            ValueError: on out-of-range or duplicate index pairs, or non-finite values.
        """
        m, n = int(shape[0]), int(shape[1])
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (rows.size == cols.size == vals.size):
            raise ValueError("rows, cols and vals must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError(f"index out of range for shape {(m, n)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("masked matrix contains non-finite values")
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        if key.size > 1 and np.any(key[1:] == key[:-1]):
            raise ValueError("duplicate index pair in masked matrix")
        return cls((m, n), rows[order], cols[order], vals[order])

    @classmethod
    def from_dense(cls, a: np.ndarray, mask: np.ndarray) -> "MaskedMatrix":
        rows, cols = np.nonzero(mask)
        return cls.from_triples(a.shape, rows, cols, a[rows, cols])

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def norm(self) -> float:
        """Frobenius norm of ``P_Omega(A)``."""
        return float(np.sqrt(np.sum(self.vals * self.vals)))

    def predict(self, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Entries of ``U @ Z`` at the observed positions, without forming ``U @ Z``."""
        return np.einsum("ij,ji->i", u[self.rows], z[:, self.cols])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.vals
        return out

    def mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out

    def subset(self, idx: np.ndarray) -> "MaskedMatrix":
        idx = np.sort(np.asarray(idx, dtype=np.int64))
        return MaskedMatrix(self.shape, self.rows[idx], self.cols[idx], self.vals[idx])

    def save(self, path) -> None:
        """Write as text: a ``shape,M,N`` line then ``row,col,value`` lines.

        Values use the shortest round-trip representation, so loading gives
        back identical bits.
        """
        buf = io.StringIO()
        buf.write(f"shape,{self.shape[0]},{self.shape[1]}\n")
        for r, c, v in zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()):
            buf.write(f"{r},{c},{v!r}\n")
        atomic_write_text(path, buf.getvalue())

    @classmethod
    def load(cls, path) -> "MaskedMatrix":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            head = next(reader, None)
            if not head or head[0] != "shape" or len(head) != 3:
                raise ValueError(f"{path}: missing 'shape,M,N' header")
            shape = (int(head[1]), int(head[2]))
            rows, cols, vals = [], [], []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(rec)}")
                rows.append(int(rec[0]))
                cols.append(int(rec[1]))
                vals.append(float(rec[2]))
        return cls.from_triples(shape, rows, cols, vals)


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_dense_csv(path) -> np.ndarray:
    """Read a headerless comma-separated dense matrix."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec:
                continue
            try:
                rows.append([float(x) for x in rec])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: ragged row ({len(rows[-1])} vs {len(rows[0])} fields)")
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return dense(rows)


def write_dense_csv(path, m: np.ndarray) -> None:
    lines = [",".join(repr(float(v)) for v in row) for row in np.asarray(m)]
    atomic_write_text(path, "\n".join(lines) + "\n")
