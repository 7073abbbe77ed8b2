"""Relational models: classification, degrees of freedom, dual representation.

A model pairs a table with a full-row-rank non-negative integer matrix A
and a sampling variant.  The primal form is log(delta) = A' beta (+ a
fixed per-cell log offset); the dual form constrains the integer kernel
basis D of A via D log(delta) = D offset, which reads as a finite list
of generalized odds ratios pinned to positive targets.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .intlinalg import (
    IntegerMatrix,
    KernelBasis,
    SaturatedKernelError,
    integer_kernel_basis,
    rational_rank,
    row_space_contains,
)
from .tables import ModelMatrix, Table, cell_id, find_zero_columns, reduce_to_full_row_rank


class Variant(str, enum.Enum):
    """Sampling variant: cell parameters are probabilities or intensities."""

    PROBABILITIES = "probabilities"
    INTENSITIES = "intensities"


class FamilyKind(str, enum.Enum):
    REGULAR_ORDER_J = "regular order J"
    REGULAR_ORDER_J_MINUS_1 = "regular order J-1"
    CURVED_ORDER_J_MINUS_1 = "curved order J-1"


@dataclass(frozen=True)
class ModelClass:
    kind: FamilyKind
    overall_effect: bool


@dataclass(frozen=True)
class GeneralizedOddsRatio:
    """Monomial ratio delta^u / delta^v constrained to equal ``target``.

    u and v are non-negative integer exponent vectors with disjoint
    supports (u[i] > 0 implies v[i] == 0).
    """

    u: tuple[int, ...]
    v: tuple[int, ...]
    target: float = 1.0

    def __post_init__(self):
        if len(self.u) != len(self.v):
            raise ValueError("exponent vectors differ in length")
        for i, (a, b) in enumerate(zip(self.u, self.v)):
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent at position {i}")
            if a and b:
                raise ValueError(f"overlapping supports at position {i}")
        if not self.target > 0:
            raise ValueError("target must be positive")


def is_homogeneous(ratio: GeneralizedOddsRatio) -> bool:
    """True iff numerator and denominator exponent sums agree."""
    return sum(ratio.u) == sum(ratio.v)


@dataclass(frozen=True)
class RelationalModel:
    """Immutable model: table + full-row-rank matrix + variant + offset."""

    table: Table
    matrix: ModelMatrix
    variant: Variant
    offset: tuple[float, ...]
    kernel: KernelBasis | None

    @property
    def ncells(self) -> int:
        return self.table.ncells

    @property
    def nparams(self) -> int:
        return self.matrix.nrows

    @property
    def saturated(self) -> bool:
        return self.kernel is None

    def matrix_array(self) -> np.ndarray:
        return np.asarray(self.matrix.entries, dtype=float)

    def kernel_array(self) -> np.ndarray:
        if self.kernel is None:
            return np.zeros((0, self.ncells))
        return np.asarray(self.kernel.rows, dtype=float)

    def offset_array(self) -> np.ndarray:
        return np.asarray(self.offset, dtype=float)


def build_model(
    table: Table,
    A: ModelMatrix,
    variant: Variant,
    offset: Sequence[float] | None = None,
) -> RelationalModel:
    """Validate and assemble a model; reduces A to full row rank if needed.

    Probability-variant models reject matrices with zero columns (a zero
    column pins one probability to 1, a trivial constraint).  Saturated
    models (rank equal to the number of cells) are allowed and carry an
    empty kernel.
    """
    variant = Variant(variant)
    if A.ncols != table.ncells:
        raise ValueError(f"matrix has {A.ncols} columns for {table.ncells} cells")
    if variant is Variant.PROBABILITIES:
        zeros = find_zero_columns(A)
        if zeros:
            bad = ", ".join(cell_id(table.cells[j]) for j in zeros)
            raise ValueError(
                f"trivial probability constraint: no effect touches cell(s) {bad}"
            )
    A = reduce_to_full_row_rank(A)
    if offset is None:
        off = (0.0,) * table.ncells
    else:
        off = tuple(float(x) for x in offset)
        if len(off) != table.ncells:
            raise ValueError(f"offset has length {len(off)}, expected {table.ncells}")
    try:
        kernel = integer_kernel_basis(IntegerMatrix(A.entries))
    except SaturatedKernelError:
        kernel = None
    return RelationalModel(table=table, matrix=A, variant=variant, offset=off, kernel=kernel)


def degrees_of_freedom(model: RelationalModel) -> int:
    """Number of cells minus the matrix rank (= number of dual constraints)."""
    return model.ncells - model.nparams


def has_overall_effect(model: RelationalModel) -> bool:
    """True iff the all-ones vector lies in the row space of the matrix."""
    return row_space_contains(IntegerMatrix(model.matrix.entries), (1,) * model.ncells)


def classify(model: RelationalModel) -> ModelClass:
    """Exponential-family class of the model.

    Intensity models are always regular of order J.  Probability models
    are regular of order J-1 when the overall effect is present and
    curved of order J-1 otherwise.
    """
    oe = has_overall_effect(model)
    if model.variant is Variant.INTENSITIES:
        kind = FamilyKind.REGULAR_ORDER_J
    elif oe:
        kind = FamilyKind.REGULAR_ORDER_J_MINUS_1
    else:
        kind = FamilyKind.CURVED_ORDER_J_MINUS_1
    return ModelClass(kind=kind, overall_effect=oe)


def _validated_kernel(model: RelationalModel, kernel: KernelBasis | None) -> KernelBasis:
    if model.kernel is None:
        raise ValueError("saturated model: there are no dual constraints")
    if kernel is None:
        return model.kernel
    D = kernel.D
    if D.cols != model.ncells:
        raise ValueError(f"kernel has {D.cols} columns for {model.ncells} cells")
    if D.rows != degrees_of_freedom(model):
        raise ValueError(
            f"kernel has {D.rows} rows; the model has {degrees_of_freedom(model)} dual constraints"
        )
    product = IntegerMatrix(model.matrix.entries) @ D.transpose()
    if not product.is_zero():
        raise ValueError("supplied kernel rows do not annihilate the model matrix")
    if rational_rank(D) != D.rows:
        raise ValueError("supplied kernel rows are linearly dependent")
    return kernel


def generalized_odds_ratios(
    model: RelationalModel, kernel: KernelBasis | None = None
) -> list[GeneralizedOddsRatio]:
    """One odds ratio per kernel row: numerator from the positive part,
    denominator from the negative part, target exp(row . offset).

    A caller-supplied kernel (validated against the model matrix) controls
    the presentation, since kernel bases are not unique.
    """
    D = _validated_kernel(model, kernel)
    off = model.offset_array()
    out = []
    for row in D.rows:
        u = tuple(x if x > 0 else 0 for x in row)
        v = tuple(-x if x < 0 else 0 for x in row)
        target = float(math.exp(float(np.dot(row, off))))
        out.append(GeneralizedOddsRatio(u=u, v=v, target=target))
    return out


def dual_residuals(model: RelationalModel, delta: Sequence[float]) -> np.ndarray:
    """D (log delta - offset); the zero vector iff delta satisfies the model."""
    d = np.asarray(delta, dtype=float)
    if d.shape != (model.ncells,):
        raise ValueError(f"delta has shape {d.shape}, expected ({model.ncells},)")
    if np.any(d <= 0):
        raise ValueError("delta must be strictly positive")
    return model.kernel_array() @ (np.log(d) - model.offset_array())


def offset_from_targets(kernel: KernelBasis, targets: Sequence[float]) -> np.ndarray:
    """Per-cell log offset realizing given odds-ratio targets.

    Solves for the minimum-norm offset with D offset = log(targets),
    i.e. D'(DD')^{-1} log(targets); with this offset the model's odds
    ratios equal the requested targets.
    """
    D = np.asarray(kernel.rows, dtype=float)
    t = np.asarray(targets, dtype=float)
    if t.shape != (D.shape[0],):
        raise ValueError(f"expected {D.shape[0]} targets, got {t.shape}")
    if np.any(t <= 0):
        raise ValueError("targets must be positive")
    return D.T @ np.linalg.solve(D @ D.T, np.log(t))


def odds_ratio_text(ratio: GeneralizedOddsRatio, table: Table) -> str:
    """Readable rendering such as ``d[0:0] / (d[0:1]*d[1:0]) = 1``."""

    def side(exponents: tuple[int, ...]) -> str:
        factors = []
        for i, e in enumerate(exponents):
            if e == 0:
                continue
            name = f"d[{cell_id(table.cells[i])}]"
            factors.append(name if e == 1 else f"{name}^{e}")
        if not factors:
            return "1"
        joined = "*".join(factors)
        return f"({joined})" if len(factors) > 1 else joined

    target = ratio.target
    target_text = f"{target:g}" if abs(target - round(target)) > 1e-12 else f"{round(target):d}"
    return f"{side(ratio.u)} / {side(ratio.v)} = {target_text}"
