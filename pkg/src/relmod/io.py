"""Model-spec files, counts files, and their validation.

A model spec is a single YAML document:

.. code-block:: yaml

    table:            # cells: lists become tuple cells, scalars opaque labels
      - [0, 0]
      - [0, 1]
      - [1, 0]
    variant: intensities        # or probabilities
    subsets:                    # either this ...
      fish: [[0, 0], [0, 1]]
      sugarcane: [[0, 0], [1, 0]]
    # matrix:                   # ... or an explicit non-negative integer matrix
    #   - [1, 1, 0]
    #   - [1, 0, 1]
    # offset: [0.0, 0.0, 0.0]   # optional per-cell log offset
    # data:                     # optional inline counts
    #   - [[0, 0], 36]

Counts files hold one ``cell,count`` record per line; tuple cells are
written with ':' between components (``0:1,2``).  Lines starting with
'#' and blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import yaml

from .fitting import Observations
from .models import RelationalModel, Variant, build_model
from .tables import (
    Cell,
    ModelMatrix,
    SubsetClass,
    Table,
    build_model_matrix,
    build_table,
    cell_id,
)


class SpecError(ValueError):
    """Malformed or inconsistent model-spec document."""


class CountsError(ValueError):
    """Malformed or inconsistent counts input."""


_KNOWN_FIELDS = ("table", "variant", "subsets", "matrix", "offset", "data")


@dataclass(frozen=True)
class ModelSpec:
    """Parsed spec document; exactly one of subsets/matrix is present."""

    table: tuple[Cell, ...]
    variant: str
    subsets: tuple[tuple[str, tuple[Cell, ...]], ...] | None = None
    matrix: tuple[tuple[int, ...], ...] | None = None
    offset: tuple[float, ...] | None = None
    data: tuple[tuple[Cell, float], ...] | None = None


def _as_cell(raw) -> Cell:
    if isinstance(raw, (list, tuple)):
        return tuple(raw)
    if isinstance(raw, (str, int)) and not isinstance(raw, bool):
        return raw
    raise SpecError(f"invalid cell {raw!r}: expected a list of category ids or a label")


def _parse_table(raw) -> tuple[Cell, ...]:
    if not isinstance(raw, list) or not raw:
        raise SpecError("field 'table' must be a non-empty list of cells")
    return tuple(_as_cell(c) for c in raw)


def _parse_subsets(raw, table_cells: set) -> tuple[tuple[str, tuple[Cell, ...]], ...]:
    if not isinstance(raw, dict) or not raw:
        raise SpecError("field 'subsets' must be a mapping of name -> cell list")
    out = []
    for name, members in raw.items():
        if not isinstance(members, list) or not members:
            raise SpecError(f"subset {name!r} must be a non-empty list of cells")
        cells = tuple(_as_cell(c) for c in members)
        for c in cells:
            if c not in table_cells:
                raise SpecError(f"subset {name!r} references missing cell {cell_id(c)!r}")
        out.append((str(name), cells))
    return tuple(out)


def _parse_matrix(raw, ncells: int) -> tuple[tuple[int, ...], ...]:
    if not isinstance(raw, list) or not raw:
        raise SpecError("field 'matrix' must be a non-empty list of rows")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != ncells:
            raise SpecError(f"matrix row {i} must list {ncells} entries")
        for j, x in enumerate(row):
            if not isinstance(x, int) or isinstance(x, bool):
                raise SpecError(f"matrix entry ({i},{j}) is not an integer: {x!r}")
            if x < 0:
                raise SpecError(f"negative matrix entry {x} at ({i},{j})")
        rows.append(tuple(row))
    return tuple(rows)


def _parse_offset(raw, ncells: int) -> tuple[float, ...]:
    if not isinstance(raw, list) or len(raw) != ncells:
        raise SpecError(f"field 'offset' must list one number per cell ({ncells})")
    try:
        return tuple(float(x) for x in raw)
    except (TypeError, ValueError):
        raise SpecError("field 'offset' holds a non-numeric entry") from None


def _parse_data(raw, table_cells: set) -> tuple[tuple[Cell, float], ...]:
    if not isinstance(raw, list) or not raw:
        raise SpecError("field 'data' must be a list of [cell, count] pairs")
    out = []
    for k, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SpecError(f"data entry {k} must be a [cell, count] pair")
        cell = _as_cell(pair[0])
        if cell not in table_cells:
            raise SpecError(f"data entry {k} references missing cell {cell_id(cell)!r}")
        try:
            count = float(pair[1])
        except (TypeError, ValueError):
            raise SpecError(f"data entry {k} has non-numeric count {pair[1]!r}") from None
        out.append((cell, count))
    return tuple(out)


def parse_model_spec(text: str) -> ModelSpec:
    """Parse and validate a spec document; raises SpecError with the offending field."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("spec must be a YAML mapping")
    for key in doc:
        if key not in _KNOWN_FIELDS:
            raise SpecError(f"unknown field {key!r}")
    if "table" not in doc:
        raise SpecError("missing field 'table'")
    table = _parse_table(doc["table"])
    cells = set(table)
    if len(cells) != len(table):
        raise SpecError("field 'table' lists a duplicate cell")

    variant = doc.get("variant")
    if variant not in (Variant.PROBABILITIES.value, Variant.INTENSITIES.value):
        raise SpecError("field 'variant' must be 'probabilities' or 'intensities'")

    has_subsets = "subsets" in doc
    has_matrix = "matrix" in doc
    if has_subsets and has_matrix:
        raise SpecError("give either 'subsets' or 'matrix', not both")
    if not has_subsets and not has_matrix:
        raise SpecError("one of 'subsets' or 'matrix' is required")

    subsets = _parse_subsets(doc["subsets"], cells) if has_subsets else None
    matrix = _parse_matrix(doc["matrix"], len(table)) if has_matrix else None
    offset = _parse_offset(doc["offset"], len(table)) if "offset" in doc else None
    data = _parse_data(doc["data"], cells) if "data" in doc else None
    return ModelSpec(table=table, variant=variant, subsets=subsets,
                     matrix=matrix, offset=offset, data=data)


def _cell_doc(cell: Cell):
    return list(cell) if isinstance(cell, tuple) else cell


def render_model_spec(spec: ModelSpec) -> str:
    """Serialize a spec so that parse(render(s)) == s."""
    doc: dict = {"table": [_cell_doc(c) for c in spec.table], "variant": spec.variant}
    if spec.subsets is not None:
        doc["subsets"] = {name: [_cell_doc(c) for c in cells] for name, cells in spec.subsets}
    if spec.matrix is not None:
        doc["matrix"] = [list(row) for row in spec.matrix]
    if spec.offset is not None:
        doc["offset"] = list(spec.offset)
    if spec.data is not None:
        doc["data"] = [[_cell_doc(c), v] for c, v in spec.data]
    return yaml.safe_dump(doc, sort_keys=False)


def load_model_spec(path: Union[str, Path]) -> ModelSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    return parse_model_spec(text)


def spec_to_model(spec: ModelSpec) -> RelationalModel:
    """Build the model, canonicalizing the cell order.

    Tuple-structured tables are sorted lexicographically; matrix columns
    and offsets given in the spec's written order are permuted to match.
    """
    table = build_table(spec.table)
    # spec position -> canonical column
    perm = [table.index_of(tuple(c) if isinstance(c, (list, tuple)) else c) for c in spec.table]

    if spec.subsets is not None:
        subset_class = SubsetClass.from_cells(table, spec.subsets)
        A = build_model_matrix(table, subset_class)
    else:
        entries = []
        for row in spec.matrix:
            permuted = [0] * table.ncells
            for pos, value in enumerate(row):
                permuted[perm[pos]] = value
            entries.append(tuple(permuted))
        names = tuple(f"r{i + 1}" for i in range(len(entries)))
        A = ModelMatrix(entries=tuple(entries), row_names=names)

    offset = None
    if spec.offset is not None:
        offset = [0.0] * table.ncells
        for pos, value in enumerate(spec.offset):
            offset[perm[pos]] = value
    return build_model(table, A, Variant(spec.variant), offset)


def _id_map(table: Table) -> dict[str, int]:
    ids = {}
    for i, c in enumerate(table.cells):
        key = cell_id(c)
        if key in ids:
            raise CountsError(f"table cells produce the duplicate identifier {key!r}")
        ids[key] = i
    return ids


def parse_counts_text(text: str, table: Table) -> Observations:
    """Parse ``cell,count`` lines aligned to the table order."""
    ids = _id_map(table)
    values: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, sep, tail = line.rpartition(",")
        if not sep:
            raise CountsError(f"line {lineno}: expected 'cell,count', got {line!r}")
        key = head.strip()
        if key not in ids:
            raise CountsError(f"line {lineno}: unknown cell {key!r}")
        idx = ids[key]
        if idx in values:
            raise CountsError(f"line {lineno}: duplicate cell {key!r}")
        try:
            values[idx] = float(tail.strip())
        except ValueError:
            raise CountsError(f"line {lineno}: non-numeric count {tail.strip()!r}") from None
    missing = [cell_id(table.cells[i]) for i in range(table.ncells) if i not in values]
    if missing:
        raise CountsError(f"missing counts for cell(s): {', '.join(missing)}")
    try:
        return Observations(tuple(values[i] for i in range(table.ncells)))
    except ValueError as exc:
        raise CountsError(str(exc)) from exc


def load_counts(
    source: Union[str, Path, Sequence[tuple[Cell, float]], Mapping[Cell, float]],
    table: Table,
) -> Observations:
    """Counts from a file path, inline [cell, count] pairs, or a mapping."""
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise CountsError(f"cannot read counts file {source}: {exc}") from exc
        return parse_counts_text(text, table)

    pairs = list(source.items()) if isinstance(source, Mapping) else list(source)
    values: dict[int, float] = {}
    for cell, count in pairs:
        cell = tuple(cell) if isinstance(cell, (list, tuple)) else cell
        if cell not in table:
            raise CountsError(f"unknown cell {cell!r}")
        idx = table.index_of(cell)
        if idx in values:
            raise CountsError(f"duplicate cell {cell!r}")
        try:
            values[idx] = float(count)
        except (TypeError, ValueError):
            raise CountsError(f"non-numeric count {count!r} for cell {cell!r}") from None
    missing = [repr(table.cells[i]) for i in range(table.ncells) if i not in values]
    if missing:
        raise CountsError(f"missing counts for cell(s): {', '.join(missing)}")
    try:
        return Observations(tuple(values[i] for i in range(table.ncells)))
    except ValueError as exc:
        raise CountsError(str(exc)) from exc


def load_positive_vector(source: Union[str, Path], table: Table) -> Observations:
    """Counts that must be strictly positive (distributions, intensities)."""
    obs = load_counts(source, table)
    if any(v <= 0 for v in obs.y):
        raise CountsError("all entries must be strictly positive")
    return obs
