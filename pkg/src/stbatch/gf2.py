"""Binary linear algebra on int bitsets.

A vector of length ``n`` over GF(2) is a Python ``int`` whose bit ``i`` holds
coordinate ``i`` (0-based).  The same encoding orders vectors everywhere in the
package, so "ascending integer value" is the canonical order.

Bit strings are written coordinate 0 first: ``"110"`` is ``0b011 == 3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product
from operator import xor
from typing import Iterable, Sequence


def from_bits(bits: str) -> int:
    """Parse a coordinate-0-first bit string such as ``"110"``."""
    value = 0
    for i, ch in enumerate(bits.strip()):
        if ch == "1":
            value |= 1 << i
        elif ch != "0":
            raise ValueError(f"bad bit character {ch!r} in {bits!r}")
    return value


def to_bits(vec: int, length: int) -> str:
    return "".join("1" if (vec >> i) & 1 else "0" for i in range(length))


def unit(i: int) -> int:
    return 1 << i


def weight(vec: int) -> int:
    return bin(vec).count("1")


def support(vec: int) -> list[int]:
    out = []
    i = 0
    while vec:
        if vec & 1:
            out.append(i)
        vec >>= 1
        i += 1
    return out


def echelon(vectors: Iterable[int]) -> list[int]:
    """Fully reduced echelon basis, keyed on the highest set bit.

    Every pivot bit occurs in exactly one basis vector.  Returned in
    descending pivot order.
    """
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            if v & _top(b):
                v ^= b
        if not v:
            continue
        top = _top(v)
        basis = [b ^ v if b & top else b for b in basis]
        basis.append(v)
        basis.sort(reverse=True)
    return basis


def _top(v: int) -> int:
    return 1 << (v.bit_length() - 1)


def reduce_vector(vec: int, basis: Sequence[int]) -> int:
    """Minimal-integer representative of ``vec + span(basis)``.

    ``basis`` must come from :func:`echelon`.
    """
    for b in basis:
        if vec & _top(b):
            vec ^= b
    return vec


def rank_of(vectors: Iterable[int]) -> int:
    return len(echelon(vectors))


def in_span(vec: int, vectors: Iterable[int]) -> bool:
    return reduce_vector(vec, echelon(vectors)) == 0


def span(vectors: Iterable[int]) -> list[int]:
    """All elements of the span, ascending."""
    basis = echelon(vectors)
    out = [0]
    for b in basis:
        out += [x ^ b for x in out]
    return sorted(out)


@dataclass(frozen=True)
class BitMatrix:
    """An ``n_rows x n_cols`` binary matrix stored column-wise.

    ``columns[j]`` is column ``j`` as an int over the row coordinates.
    """

    n_rows: int
    columns: tuple[int, ...]

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("matrix needs at least one row")
        object.__setattr__(self, "columns", tuple(int(c) for c in self.columns))
        limit = 1 << self.n_rows
        for c in self.columns:
            if c < 0 or c >= limit:
                raise ValueError(f"column {c} does not fit in {self.n_rows} rows")

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    def is_systematic(self) -> bool:
        n = self.n_rows
        return self.n_cols >= n and all(self.columns[i] == 1 << i for i in range(n))

    def rows(self) -> list[int]:
        """Rows as ints over column coordinates."""
        rows = [0] * self.n_rows
        for j, c in enumerate(self.columns):
            for i in support(c):
                rows[i] |= 1 << j
        return rows

    def apply(self, vec: int) -> int:
        """Matrix-vector product ``M @ vec`` (``vec`` over column coordinates)."""
        out = 0
        j = 0
        while vec:
            if vec & 1:
                out ^= self.columns[j]
            vec >>= 1
            j += 1
        return out

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        return BitMatrix(self.n_rows, tuple(self.apply(c) for c in other.columns))

    def to_array(self):
        import numpy as np

        arr = np.zeros(self.shape, dtype=np.uint8)
        for j, c in enumerate(self.columns):
            for i in support(c):
                arr[i, j] = 1
        return arr

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        rows, cols = len(arr), len(arr[0])
        columns = []
        for j in range(cols):
            columns.append(sum(1 << i for i in range(rows) if int(arr[i][j]) & 1))
        return cls(rows, tuple(columns))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, tuple(1 << i for i in range(n)))

    def to_text(self) -> str:
        lines = [f"{self.n_rows} {self.n_cols}"]
        for i in range(self.n_rows):
            lines.append("".join("1" if (c >> i) & 1 else "0" for c in self.columns))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix file")
        try:
            n, big_n = (int(x) for x in lines[0].split())
        except ValueError:
            raise ValueError(f"bad header line {lines[0]!r}, expected 'n N'") from None
        body = lines[1:]
        if len(body) != n:
            raise ValueError(f"expected {n} rows, found {len(body)}")
        columns = [0] * big_n
        for i, row in enumerate(body):
            if len(row) != big_n or set(row) - {"0", "1"}:
                raise ValueError(f"row {i} must be {big_n} characters of 0/1")
            for j, ch in enumerate(row):
                if ch == "1":
                    columns[j] |= 1 << i
        return cls(n, tuple(columns))


def xor_sum(matrix: BitMatrix, column_indices: Iterable[int]) -> int:
    """XOR of the selected columns; the empty selection gives 0."""
    cols = matrix.columns
    out = 0
    for j in column_indices:
        if not 0 <= j < len(cols):
            raise IndexError(f"column index {j} out of range [0, {len(cols)})")
        out ^= cols[j]
    return out


def rank(matrix: BitMatrix) -> int:
    return rank_of(matrix.columns)


def quotient_reps(ambient_dim: int, subspace_basis: Iterable[int]) -> list[int]:
    """Coset representatives of ``F_2^ambient_dim / span(subspace_basis)``.

    One minimal-integer representative per coset, ascending, so the first is 0.
    """
    basis = echelon(subspace_basis)
    limit = 1 << ambient_dim
    if any(b >= limit for b in basis):
        raise ValueError("basis vector longer than the ambient dimension")
    pivots = {b.bit_length() - 1 for b in basis}
    free = [i for i in range(ambient_dim) if i not in pivots]
    reps = [sum(1 << i for i, bit in zip(free, bits) if bit) for bits in product((0, 1), repeat=len(free))]
    return sorted(reps)


def inverse(matrix: BitMatrix) -> BitMatrix:
    """Inverse of a square invertible matrix (Gauss-Jordan on rows)."""
    n = matrix.n_rows
    if matrix.n_cols != n:
        raise ValueError("only square matrices are invertible")
    # augmented rows: low n bits = matrix row, high n bits = identity row
    rows = [r | (1 << (n + i)) for i, r in enumerate(matrix.rows())]
    for col in range(n):
        pivot = next((r for r in range(col, n) if (rows[r] >> col) & 1), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for r in range(n):
            if r != col and (rows[r] >> col) & 1:
                rows[r] ^= rows[col]
    inv_rows = [r >> n for r in rows]
    columns = [sum(1 << i for i in range(n) if (inv_rows[i] >> j) & 1) for j in range(n)]
    return BitMatrix(n, tuple(columns))


def change_of_basis(vectors: Sequence[int], n: int) -> BitMatrix:
    """Invertible ``T`` with ``T @ vectors[i] == e_i``.

    The basis is completed greedily with standard vectors in index order.
    """
    vectors = [int(v) for v in vectors]
    if len(vectors) > n:
        raise ValueError("more vectors than the dimension")
    if rank_of(vectors) != len(vectors):
        raise ValueError("vectors are linearly dependent")
    basis = list(vectors)
    for i in range(n):
        if len(basis) == n:
            break
        if rank_of(basis + [1 << i]) > len(basis):
            basis.append(1 << i)
    return inverse(BitMatrix(n, tuple(basis)))


def sum_vectors(vectors: Iterable[int]) -> int:
    return reduce(xor, vectors, 0)
