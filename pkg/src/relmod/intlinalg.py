"""Exact integer and rational linear algebra.

Everything here runs on Python's arbitrary-precision integers and
``fractions.Fraction``; no floating point enters this module.  The
central algorithm is a column-style Hermite normal form with modular
reduction of off-pivot entries, which yields integer bases of matrix
kernels via a unimodular transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class SaturatedKernelError(ValueError):
    """Raised when an integer kernel basis is requested but the kernel is trivial."""


def _validate_entries(entries) -> tuple[tuple[int, ...], ...]:
    rows = tuple(tuple(row) for row in entries)
    if not rows or not rows[0]:
        raise ValueError("matrix must have at least one row and one column")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {i} has length {len(row)}, expected {width}")
        for j, x in enumerate(row):
            # bool is an int subclass; reject it to avoid silent surprises
            if not isinstance(x, int) or isinstance(x, bool):
                raise ValueError(f"entry ({i},{j}) is not an integer: {x!r}")
    return rows


@dataclass(frozen=True)
class IntegerMatrix:
    """Immutable matrix of arbitrary-precision integers."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", _validate_entries(self.entries))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix(tuple(zip(*self.entries)))

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        cols = other.transpose().entries
        return IntegerMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries)
        )

    @staticmethod
    def identity(n: int) -> "IntegerMatrix":
        return IntegerMatrix(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.entries for x in row)


@dataclass(frozen=True)
class HnfResult:
    """Column-style Hermite normal form: A @ U == H with U unimodular.

    H has the block form [B, 0]; B occupies the first ``rank`` columns,
    is in column echelon form with positive pivots, and the entries left
    of each pivot in its row are reduced modulo the pivot.
    """

    H: IntegerMatrix
    U: IntegerMatrix
    rank: int


@dataclass(frozen=True)
class KernelBasis:
    """Integer matrix whose rows span the rational null space of some A."""

    D: IntegerMatrix

    @property
    def nrows(self) -> int:
        return self.D.rows

    @property
    def rows(self) -> tuple[tuple[int, ...], ...]:
        return self.D.entries


class _RationalRowBasis:
    """Incremental row-echelon basis over the rationals.

    Supports exact rank computation and membership tests for row spaces.
    """

    def __init__(self):
        # pivot column -> reduced row (list of Fraction)
        self._pivots: dict[int, list[Fraction]] = {}

    def _reduce(self, row: Sequence) -> list[Fraction]:
        work = [Fraction(x) for x in row]
        for col in sorted(self._pivots):
            if work[col] != 0:
                piv = self._pivots[col]
                factor = work[col] / piv[col]
                for j in range(len(work)):
                    work[j] -= factor * piv[j]
        return work

    def contains(self, row: Sequence) -> bool:
        return all(x == 0 for x in self._reduce(row))

    def add(self, row: Sequence) -> bool:
        """Add a row; returns True if it increased the rank."""
        work = self._reduce(row)
        for col, x in enumerate(work):
            if x != 0:
                self._pivots[col] = work
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self._pivots)


def rational_rank(A: IntegerMatrix) -> int:
    """Rank of A over the rationals, computed exactly."""
    basis = _RationalRowBasis()
    for row in A.entries:
        basis.add(row)
    return basis.rank


def row_space_contains(A: IntegerMatrix, v: Sequence) -> bool:
    """True iff v is a rational linear combination of the rows of A.

    ``v`` may hold ints or Fractions; floats are rejected because the
    test is exact.
    """
    if len(v) != A.cols:
        raise ValueError(f"vector length {len(v)} does not match {A.cols} columns")
    for x in v:
        if not isinstance(x, (int, Fraction)):
            raise ValueError(f"row-space membership is exact; got non-rational entry {x!r}")
    basis = _RationalRowBasis()
    for row in A.entries:
        basis.add(row)
    return basis.contains(v)


def independent_row_indices(rows: Sequence[Sequence[int]]) -> list[int]:
    """Greedy top-down selection of a maximal independent subset of rows."""
    basis = _RationalRowBasis()
    return [i for i, row in enumerate(rows) if basis.add(row)]


def hermite_normal_form(A: IntegerMatrix) -> HnfResult:
    """Compute H = A @ U in column-style Hermite form with unimodular U.

    Deterministic pivoting: for each row in order, the pivot is the
    candidate column whose entry has the smallest nonzero absolute
    value, ties broken by lowest column index.  Off-pivot entries to
    the left of each pivot are reduced modulo the pivot to control
    coefficient growth.
    """
    J, n = A.rows, A.cols
    # column-major working copies
    H = [[A.entries[i][j] for i in range(J)] for j in range(n)]
    U = [[1 if i == j else 0 for i in range(n)] for j in range(n)]

    def axpy(dst: int, src: int, q: int) -> None:
        # column_dst -= q * column_src
        hc, hs = H[dst], H[src]
        for i in range(J):
            hc[i] -= q * hs[i]
        uc, us = U[dst], U[src]
        for i in range(n):
            uc[i] -= q * us[i]

    cur = 0
    for i in range(J):
        if cur >= n:
            break
        # eliminate row i over columns cur..n-1 down to a single pivot
        while True:
            nonzero = [j for j in range(cur, n) if H[j][i] != 0]
            if not nonzero:
                break
            p = min(nonzero, key=lambda j: (abs(H[j][i]), j))
            if p != cur:
                H[cur], H[p] = H[p], H[cur]
                U[cur], U[p] = U[p], U[cur]
            others = [j for j in range(cur + 1, n) if H[j][i] != 0]
            if not others:
                break
            piv = H[cur][i]
            for j in others:
                axpy(j, cur, H[j][i] // piv)
        if H[cur][i] == 0:
            continue  # row dependent on the ones above; no pivot consumed
        if H[cur][i] < 0:
            for k in range(J):
                H[cur][k] = -H[cur][k]
            for k in range(n):
                U[cur][k] = -U[cur][k]
        piv = H[cur][i]
        for j in range(cur):
            if H[j][i] != 0:
                axpy(j, cur, H[j][i] // piv)  # leaves 0 <= H[j][i] < piv
        cur += 1

    H_rows = tuple(tuple(H[j][i] for j in range(n)) for i in range(J))
    U_rows = tuple(tuple(U[j][i] for j in range(n)) for i in range(n))
    return HnfResult(H=IntegerMatrix(H_rows), U=IntegerMatrix(U_rows), rank=cur)


def integer_kernel_basis(A: IntegerMatrix) -> KernelBasis:
    """Integer basis of Ker(A): rows D with A @ D.T == 0 exactly.

    The basis is read off the trailing columns of the unimodular
    transform of the Hermite normal form, so its rows are integer and
    linearly independent over the rationals.
    """
    hnf = hermite_normal_form(A)
    k0 = A.cols - hnf.rank
    if k0 == 0:
        raise SaturatedKernelError("model is saturated: the kernel is trivial")
    # columns rank..cols-1 of U, transposed into rows
    rows = tuple(
        tuple(hnf.U.entries[r][c] for r in range(A.cols)) for c in range(hnf.rank, A.cols)
    )
    D = IntegerMatrix(rows)
    product = A @ D.transpose()
    if not product.is_zero():
        raise AssertionError("internal error: kernel basis does not annihilate A")
    return KernelBasis(D=D)


def determinant(A: IntegerMatrix) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    if A.rows != A.cols:
        raise ValueError("determinant requires a square matrix")
    n = A.rows
    m = [list(row) for row in A.entries]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def rational_inverse(A: IntegerMatrix) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse of a square integer matrix as a Fraction matrix."""
    if A.rows != A.cols:
        raise ValueError("inverse requires a square matrix")
    n = A.rows
    work = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
            for i, row in enumerate(A.entries)]
    for col in range(n):
        piv_row = next((r for r in range(col, n) if work[r][col] != 0), None)
        if piv_row is None:
            raise ValueError("matrix is singular")
        if piv_row != col:
            work[col], work[piv_row] = work[piv_row], work[col]
        piv = work[col][col]
        work[col] = [x / piv for x in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [a - factor * b for a, b in zip(work[r], work[col])]
    return tuple(tuple(row[n:]) for row in work)
