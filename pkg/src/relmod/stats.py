"""Goodness of fit and mixed parameterizations.

The mixed parameterization splits a positive cell-parameter vector into
mean-value coordinates A delta and canonical coordinates derived from
D log delta, which are variation independent.  ``reconstruct_from_mixed``
inverts the split: given the two halves from different distributions it
rebuilds the unique vector carrying both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaincc

from .fitting import FitOptions, fit_curved_multinomial, fit_poisson_newton
from .intlinalg import IntegerMatrix, KernelBasis, rational_inverse, row_space_contains
from .models import Variant
from .tables import ModelMatrix


@dataclass(frozen=True)
class GofReport:
    x2: float
    g2: float
    df: int
    p_value_x2: float
    p_value_g2: float


@dataclass(frozen=True)
class MixedParams:
    """zeta1 = A delta; theta = (DD')^-1 D log delta; zeta2_tilde = D log delta."""

    zeta1: np.ndarray
    theta: np.ndarray
    zeta2_tilde: np.ndarray


def _positive(name: str, values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} must be finite and strictly positive")
    return arr


def pearson_x2(y: Sequence[float], delta_hat: Sequence[float]) -> float:
    """Sum of (observed - fitted)^2 / fitted."""
    mu = _positive("fitted values", delta_hat)
    obs = np.asarray(y, dtype=float)
    if obs.shape != mu.shape:
        raise ValueError("observed and fitted lengths differ")
    return float(np.sum((obs - mu) ** 2 / mu))


def deviance_g2(y: Sequence[float], delta_hat: Sequence[float]) -> float:
    """Poisson deviance 2 sum[y log(y/mu) - (y - mu)], with 0 log 0 = 0.

    The linear term vanishes when the fit preserves totals, so this
    equals the multinomial likelihood-ratio statistic there; kept in
    full so the statistic is valid for curved fits as well.
    """
    mu = _positive("fitted values", delta_hat)
    obs = np.asarray(y, dtype=float)
    if obs.shape != mu.shape:
        raise ValueError("observed and fitted lengths differ")
    terms = mu - obs  # contribution of cells with y == 0
    pos = obs > 0
    terms[pos] += obs[pos] * np.log(obs[pos] / mu[pos])
    return float(2.0 * np.sum(terms))


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail P(chi2_df > x) via the regularized incomplete gamma."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if df < 1:
        raise ValueError("df must be a positive integer")
    return float(gammaincc(df / 2.0, x / 2.0))


def goodness_of_fit(y: Sequence[float], delta_hat: Sequence[float], df: int) -> GofReport:
    x2 = pearson_x2(y, delta_hat)
    g2 = deviance_g2(y, delta_hat)
    if df > 0:
        p_x2 = chi_square_sf(x2, df)
        p_g2 = chi_square_sf(max(g2, 0.0), df)
    else:
        p_x2 = p_g2 = 1.0
    return GofReport(x2=x2, g2=g2, df=df, p_value_x2=p_x2, p_value_g2=p_g2)


def _kernel_for(A: ModelMatrix, D: KernelBasis) -> np.ndarray:
    product = IntegerMatrix(A.entries) @ D.D.transpose()
    if not product.is_zero():
        raise ValueError("kernel rows do not annihilate the matrix")
    return np.asarray(D.rows, dtype=float)


def mixed_parameters(delta: Sequence[float], A: ModelMatrix, D: KernelBasis) -> MixedParams:
    """Mixed coordinates of a positive vector for the pair (A, D).

    theta solves the normal equations (DD') theta = D log delta, which
    avoids inverting the square matrix [A; D].
    """
    d = _positive("delta", delta)
    Df = _kernel_for(A, D)
    if d.shape != (Df.shape[1],):
        raise ValueError(f"delta has length {d.shape[0]}, expected {Df.shape[1]}")
    Af = np.asarray(A.entries, dtype=float)
    zeta2_tilde = Df @ np.log(d)
    theta = np.linalg.solve(Df @ Df.T, zeta2_tilde)
    return MixedParams(zeta1=Af @ d, theta=theta, zeta2_tilde=zeta2_tilde)


def canonical_gamma(M: IntegerMatrix, delta: Sequence[float]) -> np.ndarray:
    """Solve M' gamma = log delta with the inverse taken over exact rationals.

    M is typically the square matrix stacking a model matrix on top of
    its kernel basis; the components of gamma paired with kernel rows
    vanish exactly on-model.
    """
    d = _positive("delta", delta)
    if M.rows != M.cols:
        raise ValueError("M must be square")
    if d.shape != (M.cols,):
        raise ValueError(f"delta has length {d.shape[0]}, expected {M.cols}")
    inv_t = rational_inverse(M.transpose())  # exact; floats enter only below
    log_d = np.log(d)
    return np.array([sum(float(f) * x for f, x in zip(row, log_d)) for row in inv_t])


def reconstruct_from_mixed(
    A: ModelMatrix,
    delta1: Sequence[float],
    D: KernelBasis,
    delta2: Sequence[float],
    variant: Variant,
    options: FitOptions | None = None,
) -> tuple[np.ndarray, float]:
    """Find delta with A delta = alpha * A delta1 and D log delta = D log delta2.

    The kernel half of log delta2 becomes a fixed offset and the mean
    half is matched by refitting against delta1 as data.  Intensity
    reconstructions preserve the subset sums exactly (alpha = 1).  For
    the probability variant delta1 is normalized to a distribution
    first; alpha = 1 then holds precisely when the all-ones vector lies
    in the row space of A.
    """
    variant = Variant(variant)
    d1 = _positive("delta1", delta1)
    d2 = _positive("delta2", delta2)
    Df = _kernel_for(A, D)
    Af = np.asarray(A.entries, dtype=float)
    if d1.shape != (Af.shape[1],) or d2.shape != (Af.shape[1],):
        raise ValueError("delta1/delta2 lengths do not match the matrix columns")
    # minimum-norm offset with D offset = D log delta2
    offset = Df.T @ np.linalg.solve(Df @ Df.T, Df @ np.log(d2))

    if variant is Variant.PROBABILITIES:
        d1 = d1 / d1.sum()
        ones = (1,) * Af.shape[1]
        if row_space_contains(IntegerMatrix(A.entries), ones):
            result = fit_poisson_newton(Af, d1, offset, options)
        else:
            result = fit_curved_multinomial(Af, d1, offset, options)
        delta = result.delta_hat
    else:
        result = fit_poisson_newton(Af, d1, offset, options)
        delta = result.delta_hat
    alpha = float(np.mean((Af @ delta) / (Af @ d1)))
    return delta, alpha
