"""Cells, tables, subset classes, and model matrices.

A table is an ordered set of cells.  Cells are either tuples of
category identifiers (one per classifying variable) or opaque labels
for unstructured cell sets.  Tuple-structured tables are kept in
lexicographic order, which fixes the column order of every matrix
built on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .intlinalg import independent_row_indices

Cell = Union[tuple, str, int]


def _sort_key(cell: tuple):
    # stable ordering even when a position mixes ints and strings
    return tuple((0, part) if isinstance(part, int) and not isinstance(part, bool)
                 else (1, str(part)) for part in cell)


def cell_id(cell: Cell) -> str:
    """Compact text identifier: tuple parts joined by ':', labels as-is."""
    if isinstance(cell, tuple):
        parts = [str(p) for p in cell]
        for p in parts:
            if ":" in p or "," in p:
                raise ValueError(f"cell component {p!r} may not contain ':' or ','")
        return ":".join(parts)
    return str(cell)


@dataclass(frozen=True)
class Table:
    """Ordered set of distinct cells; the order indexes matrix columns."""

    cells: tuple[Cell, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.cells) < 2:
            raise ValueError("a table needs at least two cells")
        tuple_like = [isinstance(c, tuple) for c in self.cells]
        if any(tuple_like) and not all(tuple_like):
            raise ValueError("cannot mix tuple-structured cells with opaque labels")
        if all(tuple_like):
            widths = {len(c) for c in self.cells}
            if len(widths) != 1:
                raise ValueError("tuple cells must all have the same number of components")
        index = {}
        for i, c in enumerate(self.cells):
            if c in index:
                raise ValueError(f"duplicate cell {c!r}")
            index[c] = i
        object.__setattr__(self, "_index", index)

    @property
    def ncells(self) -> int:
        return len(self.cells)

    @property
    def structured(self) -> bool:
        return isinstance(self.cells[0], tuple)

    @property
    def nvariables(self) -> int:
        return len(self.cells[0]) if self.structured else 1

    def index_of(self, cell: Cell) -> int:
        try:
            return self._index[cell]
        except KeyError:
            raise KeyError(f"cell {cell!r} is not in the table") from None

    def __contains__(self, cell: Cell) -> bool:
        return cell in self._index


def build_table(cells: Iterable[Cell]) -> Table:
    """Build a table; tuple-structured cells are sorted lexicographically.

    Opaque labels keep the order in which they were given.
    """
    cell_list = [tuple(c) if isinstance(c, (list, tuple)) else c for c in cells]
    if not cell_list:
        raise ValueError("cell list is empty")
    if all(isinstance(c, tuple) for c in cell_list):
        cell_list.sort(key=_sort_key)
    return Table(cells=tuple(cell_list))


def cartesian_table(levels: Sequence[Sequence] ) -> Table:
    """Full product of variable domains, e.g. ([0,1],[0,1],[0,1]) -> 8 cells."""
    cells = [()]
    for domain in levels:
        cells = [c + (lvl,) for c in cells for lvl in domain]
    return build_table(cells)


def levels(table: Table, variable: int) -> tuple:
    """Distinct levels of one variable of a tuple-structured table, in order."""
    if not table.structured:
        raise ValueError("table has opaque cells; there are no variables to index")
    seen = []
    for c in table.cells:
        if c[variable] not in seen:
            seen.append(c[variable])
    return tuple(seen)


def cylinder_members(table: Table, fixed: Mapping[int, object]) -> frozenset[int]:
    """Indices of cells agreeing with ``fixed`` on the given variable positions.

    An empty ``fixed`` yields all cells (the overall-effect subset).
    """
    if not table.structured and fixed:
        raise ValueError("cylinder subsets need tuple-structured cells")
    members = frozenset(
        i for i, c in enumerate(table.cells)
        if all(c[var] == level for var, level in fixed.items())
    )
    return members


@dataclass(frozen=True)
class SubsetClass:
    """Named, ordered class of non-empty cell subsets (by cell index)."""

    names: tuple[str, ...]
    members: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.names) != len(self.members):
            raise ValueError("names and member sets differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("subset names must be unique")
        for name, m in zip(self.names, self.members):
            if not m:
                raise ValueError(f"subset {name!r} is empty")

    @property
    def J(self) -> int:
        return len(self.members)

    @staticmethod
    def from_cells(table: Table, named_subsets: Sequence[tuple[str, Iterable[Cell]]]) -> "SubsetClass":
        """Resolve cell labels to indices, rejecting references to missing cells."""
        names = []
        members = []
        for name, cells in named_subsets:
            idx = set()
            for c in cells:
                c = tuple(c) if isinstance(c, (list, tuple)) else c
                if c not in table:
                    raise ValueError(f"subset {name!r} references missing cell {c!r}")
                idx.add(table.index_of(c))
            names.append(name)
            members.append(frozenset(idx))
        return SubsetClass(names=tuple(names), members=tuple(members))


@dataclass(frozen=True)
class ModelMatrix:
    """Non-negative integer matrix; rows are effects, columns follow table order."""

    entries: tuple[tuple[int, ...], ...]
    row_names: tuple[str, ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if not rows or not rows[0]:
            raise ValueError("model matrix must be non-empty")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"row {i} has length {len(row)}, expected {width}")
            for j, x in enumerate(row):
                if not isinstance(x, int) or isinstance(x, bool) or x < 0:
                    raise ValueError(f"entry ({i},{j}) must be a non-negative integer, got {x!r}")
        if len(self.row_names) != len(rows):
            raise ValueError("row_names length does not match the number of rows")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "row_names", tuple(self.row_names))

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def ncols(self) -> int:
        return len(self.entries[0])


def build_model_matrix(table: Table, subsets: SubsetClass) -> ModelMatrix:
    """Indicator matrix: entry (j, i) is 1 iff cell i belongs to subset j."""
    for name, m in zip(subsets.names, subsets.members):
        for i in m:
            if not 0 <= i < table.ncells:
                raise ValueError(f"subset {name!r} holds invalid cell index {i}")
    entries = tuple(
        tuple(1 if i in m else 0 for i in range(table.ncells)) for m in subsets.members
    )
    return ModelMatrix(entries=entries, row_names=subsets.names)


def find_zero_columns(A: ModelMatrix) -> list[int]:
    """Indices of all-zero columns (cells covered by no effect)."""
    return [j for j in range(A.ncols) if all(row[j] == 0 for row in A.entries)]


def reduce_to_full_row_rank(A: ModelMatrix) -> ModelMatrix:
    """Greedy top-down row selection preserving the rational row space.

    A row is kept iff it increases the rank over the exact rationals, so
    the result has full row rank and the row names of the kept rows.
    Returns A unchanged when it already has full row rank.
    """
    if all(x == 0 for row in A.entries for x in row):
        raise ValueError("model matrix is zero")
    keep = independent_row_indices(A.entries)
    if len(keep) == A.nrows:
        return A
    return ModelMatrix(
        entries=tuple(A.entries[i] for i in keep),
        row_names=tuple(A.row_names[i] for i in keep),
    )
