"""Dense linear algebra over GF(2).

Rows are stored as Python integers used as bit sets: bit ``j`` of a row is
the entry in column ``j``.  Problem sizes in parity compilation are tens of
columns, so a packed row fits in one or two machine words and XOR is the
only arithmetic needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class BitMatrix:
    """Immutable ``n_rows x n_cols`` matrix over GF(2).

    Attributes:
        n_cols: number of columns; every row uses only bits ``0..n_cols-1``.
        rows: packed rows, bit ``j`` of ``rows[i]`` is entry ``(i, j)``.
    """

    n_cols: int
    rows: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_cols < 0:
            raise ValueError("n_cols must be non-negative")
        limit = 1 << self.n_cols
        for r in self.rows:
            if r < 0 or r >= limit:
                raise ValueError(f"row {r:#x} does not fit in {self.n_cols} columns")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], n_cols: int | None = None) -> "BitMatrix":
        """Build from nested 0/1 sequences (entries are reduced mod 2)."""
        rows = [list(r) for r in rows]
        if n_cols is None:
            n_cols = len(rows[0]) if rows else 0
        packed = []
        for r in rows:
            if len(r) != n_cols:
                raise ValueError("ragged rows")
            packed.append(pack(r))
        return cls(n_cols, tuple(packed))

    @classmethod
    def from_array(cls, a) -> "BitMatrix":
        a = np.asarray(a, dtype=np.int64) % 2
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls.from_rows(a.tolist(), n_cols=a.shape[1])

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BitMatrix":
        return cls(n_cols, (0,) * n_rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, tuple(1 << i for i in range(n)))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not 0 <= j < self.n_cols:
            raise IndexError(j)
        return (self.rows[i] >> j) & 1

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i] = unpack(r, self.n_cols)
        return out

    def to_lists(self) -> list[list[int]]:
        return [unpack(r, self.n_cols) for r in self.rows]

    def transpose(self) -> "BitMatrix":
        cols = []
        for j in range(self.n_cols):
            c = 0
            for i, r in enumerate(self.rows):
                if (r >> j) & 1:
                    c |= 1 << i
            cols.append(c)
        return BitMatrix(self.n_rows, tuple(cols))

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        """Matrix product mod 2."""
        if self.n_cols != other.n_rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for r in self.rows:
            acc = 0
            j = 0
            while r:
                if r & 1:
                    acc ^= other.rows[j]
                r >>= 1
                j += 1
            out.append(acc)
        return BitMatrix(other.n_cols, tuple(out))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return self.matmul(other)

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.n_cols != other.n_cols:
            raise ValueError("column count mismatch")
        return BitMatrix(self.n_cols, self.rows + other.rows)

    def is_zero(self) -> bool:
        return not any(self.rows)

    def __str__(self) -> str:
        return "\n".join("".join(str(b) for b in unpack(r, self.n_cols)) for r in self.rows)


def pack(bits: Sequence[int]) -> int:
    """Pack a 0/1 sequence into an int (element ``j`` -> bit ``j``)."""
    v = 0
    for j, b in enumerate(bits):
        if int(b) % 2:
            v |= 1 << j
    return v


def unpack(v: int, n: int) -> list[int]:
    return [(v >> j) & 1 for j in range(n)]


def support(v: int) -> list[int]:
    """Indices of the set bits of ``v`` in increasing order."""
    out = []
    j = 0
    while v:
        if v & 1:
            out.append(j)
        v >>= 1
        j += 1
    return out


def weight(v: int) -> int:
    return bin(v).count("1")


def row_reduce(m: BitMatrix) -> tuple[BitMatrix, list[int]]:
    """Reduced row echelon form over GF(2).

    Columns are scanned left to right; the pivot for a column is the first
    row at or below the current pivot row with a one in that column.  Zero
    rows are kept at the bottom so the shape is unchanged.

    Returns:
        The RREF matrix and the strictly increasing list of pivot columns.
    """
    rows = list(m.rows)
    n = len(rows)
    pivots: list[int] = []
    r = 0
    for col in range(m.n_cols):
        if r == n:
            break
        bit = 1 << col
        found = next((i for i in range(r, n) if rows[i] & bit), None)
        if found is None:
            continue
        rows[r], rows[found] = rows[found], rows[r]
        for i in range(n):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    return BitMatrix(m.n_cols, tuple(rows)), pivots


def rank(m: BitMatrix) -> int:
    return len(row_reduce(m)[1])


def canonical(m: BitMatrix) -> BitMatrix:
    """Canonical form of the row space: RREF with zero rows dropped."""
    red, piv = row_reduce(m)
    return BitMatrix(m.n_cols, red.rows[: len(piv)])


def nullspace_basis(g: BitMatrix) -> BitMatrix:
    """Basis of ``{v : g @ v^T = 0}``, returned in canonical form.

    The basis has ``n_cols - rank(g)`` linearly independent rows.
    """
    red, pivots = row_reduce(g)
    pivot_set = set(pivots)
    basis = []
    for free in range(g.n_cols):
        if free in pivot_set:
            continue
        v = 1 << free
        for i, p in enumerate(pivots):
            if (red.rows[i] >> free) & 1:
                v |= 1 << p
        basis.append(v)
    return canonical(BitMatrix(g.n_cols, tuple(basis)))


def reduce_vector(v: int, echelon_rows: Sequence[int], pivots: Sequence[int]) -> int:
    """Reduce ``v`` against rows already in RREF with the given pivots."""
    for row, p in zip(echelon_rows, pivots):
        if (v >> p) & 1:
            v ^= row
    return v


def in_row_space(v, basis: BitMatrix) -> bool:
    """True iff ``v`` (packed int or 0/1 sequence) is a GF(2) combination of rows."""
    if not isinstance(v, int):
        if len(v) != basis.n_cols:
            raise ValueError(f"vector length {len(v)} != {basis.n_cols} columns")
        v = pack(v)
    elif v < 0 or v >> basis.n_cols:
        raise ValueError(f"vector {v:#x} does not fit in {basis.n_cols} columns")
    red, piv = row_reduce(basis)
    return reduce_vector(v, red.rows, piv) == 0


def same_row_space(a: BitMatrix, b: BitMatrix) -> bool:
    return a.n_cols == b.n_cols and canonical(a) == canonical(b)


class IncrementalBasis:
    """Growing set of independent vectors kept in reduced echelon form.

    Used for greedy basis growth where candidates arrive one at a time.
    """

    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self._rows: list[int] = []
        self._pivots: list[int] = []

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, v: int) -> int:
        for row, p in zip(self._rows, self._pivots):
            if (v >> p) & 1:
                v ^= row
        return v

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0

    def add(self, v: int) -> bool:
        """Insert ``v``; returns False (and does nothing) if it is dependent."""
        v = self.reduce(v)
        if v == 0:
            return False
        p = (v & -v).bit_length() - 1
        for i, row in enumerate(self._rows):
            if (row >> p) & 1:
                self._rows[i] = row ^ v
        self._rows.append(v)
        self._pivots.append(p)
        return True

    def matrix(self) -> BitMatrix:
        return canonical(BitMatrix(self.n_cols, tuple(self._rows)))
