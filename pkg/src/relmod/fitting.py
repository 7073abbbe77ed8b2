"""Maximum-likelihood fitting under Poisson and multinomial sampling.

Regular cases (intensity models, and probability models carrying the
overall effect) reduce to the unconstrained Poisson system
A exp(A'beta + offset) = A y, solved by damped Newton.  Probability
models without the overall effect are curved families: the fit solves
the (J+1)-dimensional Lagrangian system whose multiplier makes the
fitted subset sums proportional, rather than equal, to the observed
ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import RelationalModel, Variant, classify, degrees_of_freedom


@dataclass(frozen=True)
class Observations:
    """Non-negative cell counts (real-valued totals are fine)."""

    y: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.y)
        if not vals:
            raise ValueError("empty observation vector")
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("observations must be finite and non-negative")
        if sum(vals) <= 0:
            raise ValueError("total count must be positive")
        object.__setattr__(self, "y", vals)

    @property
    def N(self) -> float:
        return float(sum(self.y))

    def array(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)


@dataclass(frozen=True)
class FitOptions:
    tol_abs: float = 1e-10
    tol_rel: float = 1e-10
    max_iter: int = 200
    max_step_halvings: int = 30
    # fitted cells below boundary_floor * (N / ncells) signal a boundary MLE
    boundary_floor: float = 1e-8


@dataclass
class FitResult:
    """Fitted cell parameters plus solver diagnostics.

    ``delta_hat`` holds fitted intensities, or fitted expected counts
    N * p_hat for the probability variant.  ``alpha`` is the Lagrange
    multiplier of the multinomial fit (None for intensity fits).
    ``proportionality`` is the common ratio fitted_sums / observed_sums,
    1 for regular fits.
    """

    delta_hat: np.ndarray
    beta_hat: np.ndarray
    alpha: float | None
    fitted_sums: np.ndarray
    proportionality: float
    converged: bool
    iterations: int
    max_residual: float


class FitError(RuntimeError):
    """Base class for fitting failures."""


class NoConvergence(FitError):
    def __init__(self, iterations: int, max_residual: float):
        super().__init__(
            f"no convergence after {iterations} iterations (max residual {max_residual:.3e})"
        )
        self.iterations = iterations
        self.max_residual = max_residual


class BoundaryDivergence(FitError):
    """A fitted cell collapsed toward zero: the MLE does not exist for these data."""


def subset_sums(model: RelationalModel, obs: Observations) -> np.ndarray:
    """Observed subset sums T = A y, one per matrix row."""
    y = obs.array()
    if y.shape != (model.ncells,):
        raise ValueError(f"observations have shape {y.shape}, expected ({model.ncells},)")
    return model.matrix_array() @ y


def mle_exists(model: RelationalModel, obs: Observations) -> bool:
    """Positivity of every subset sum.

    For curved probability models this is exactly the existence and
    uniqueness condition.  For regular families it is a necessary
    screen; data on the boundary of the mean polytope are detected
    operationally during the fit (BoundaryDivergence).
    """
    return bool(np.all(subset_sums(model, obs) > 0))


def _predicted(A: np.ndarray, beta: np.ndarray, offset: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(A.T @ beta + offset)


def _check_boundary(mu: np.ndarray, total: float, options: FitOptions) -> None:
    floor = options.boundary_floor * total / mu.size
    if np.min(mu) < floor:
        raise BoundaryDivergence(
            f"fitted cell collapsed to {np.min(mu):.3e} (floor {floor:.3e}); "
            "the MLE lies on the boundary and does not exist for these data"
        )


def fit_poisson_newton(
    A: np.ndarray,
    y: np.ndarray,
    offset: np.ndarray | None = None,
    options: FitOptions | None = None,
) -> FitResult:
    """Solve A exp(A'beta + offset) = A y by damped Newton.

    A must have full row rank, making the Jacobian A diag(mu) A'
    symmetric positive definite.  Steps are halved until the residual
    norm decreases.
    """
    options = options or FitOptions()
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    J, n = A.shape
    offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    T = A @ y
    if np.any(T <= 0):
        raise BoundaryDivergence(f"zero subset sum (T = {T}); the MLE does not exist")
    thresholds = options.tol_abs + options.tol_rel * (1.0 + np.abs(T))

    beta = np.zeros(J)
    mu = _predicted(A, beta, offset)
    g = A @ mu - T
    iterations = 0
    converged = bool(np.all(np.abs(g) <= thresholds))
    for iterations in range(1, options.max_iter + 1):
        if converged:
            break
        H = (A * mu) @ A.T
        step = np.linalg.solve(H, g)
        norm0 = np.linalg.norm(g)
        scale = 1.0
        improved = False
        for _ in range(options.max_step_halvings):
            candidate = beta - scale * step
            mu2 = _predicted(A, candidate, offset)
            g2 = A @ mu2 - T
            if np.all(np.isfinite(g2)) and np.linalg.norm(g2) < norm0:
                improved = True
                break
            scale /= 2.0
        if not improved:
            break
        beta, mu, g = candidate, mu2, g2
        converged = bool(np.all(np.abs(g) <= thresholds))

    max_residual = float(np.max(np.abs(g)))
    _check_boundary(mu, float(np.sum(y)), options)
    if not converged:
        raise NoConvergence(iterations, max_residual)
    fitted_sums = A @ mu
    return FitResult(
        delta_hat=mu,
        beta_hat=beta,
        alpha=None,
        fitted_sums=fitted_sums,
        proportionality=float(np.mean(fitted_sums / T)),
        converged=True,
        iterations=iterations,
        max_residual=max_residual,
    )


def fit_curved_multinomial(
    A: np.ndarray,
    y: np.ndarray,
    offset: np.ndarray | None = None,
    options: FitOptions | None = None,
) -> FitResult:
    """Constrained multinomial fit for models without the overall effect.

    Solves F(beta, alpha) = (A y - alpha A p(beta), 1'p(beta) - 1) = 0
    with p(beta) = exp(A'beta + offset) by damped Newton, starting from
    beta = 0, alpha = N.  Returns expected counts N * p_hat; the fitted
    subset sums are proportional to the observed ones with ratio N/alpha.
    """
    options = options or FitOptions()
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    J, n = A.shape
    offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    N = float(np.sum(y))
    T = A @ y
    if np.any(T <= 0):
        raise BoundaryDivergence(f"zero subset sum (T = {T}); the MLE does not exist")
    thresholds = np.concatenate(
        [options.tol_abs + options.tol_rel * (1.0 + np.abs(T)),
         [options.tol_abs + options.tol_rel]]
    )

    def residual(beta: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        p = _predicted(A, beta, offset)
        return np.concatenate([T - alpha * (A @ p), [np.sum(p) - 1.0]]), p

    beta = np.zeros(J)
    alpha = N
    f, p = residual(beta, alpha)
    iterations = 0
    converged = bool(np.all(np.abs(f) <= thresholds))
    for iterations in range(1, options.max_iter + 1):
        if converged:
            break
        Ap = A @ p
        jac = np.zeros((J + 1, J + 1))
        jac[:J, :J] = -alpha * ((A * p) @ A.T)
        jac[:J, J] = -Ap
        jac[J, :J] = Ap
        step = np.linalg.solve(jac, -f)
        norm0 = np.linalg.norm(f)
        scale = 1.0
        improved = False
        for _ in range(options.max_step_halvings):
            b2 = beta + scale * step[:J]
            a2 = alpha + scale * step[J]
            f2, p2 = residual(b2, a2)
            if np.all(np.isfinite(f2)) and np.linalg.norm(f2) < norm0:
                improved = True
                break
            scale /= 2.0
        if not improved:
            break
        beta, alpha, f, p = b2, a2, f2, p2
        converged = bool(np.all(np.abs(f) <= thresholds))

    max_residual = float(np.max(np.abs(f)))
    delta = N * p
    _check_boundary(delta, N, options)
    if not converged:
        raise NoConvergence(iterations, max_residual)
    fitted_sums = A @ delta
    return FitResult(
        delta_hat=delta,
        beta_hat=beta,
        alpha=float(alpha),
        fitted_sums=fitted_sums,
        proportionality=float(np.mean(fitted_sums / T)),
        converged=True,
        iterations=iterations,
        max_residual=max_residual,
    )


def fit(
    model: RelationalModel,
    obs: Observations,
    options: FitOptions | None = None,
) -> FitResult:
    """Maximum-likelihood fit dispatched on the model class.

    Intensity models and probability models with the overall effect use
    the Poisson solver (their fitted cells coincide; probability fits
    are rescaled to total N and carry alpha = N).  Probability models
    without the overall effect use the curved multinomial solver.
    """
    options = options or FitOptions()
    y = obs.array()
    if y.shape != (model.ncells,):
        raise ValueError(f"observations have shape {y.shape}, expected ({model.ncells},)")
    if degrees_of_freedom(model) == 0 and np.any(y <= 0):
        # saturated fit reproduces y, which must stay strictly positive
        raise BoundaryDivergence("saturated model with a zero cell: the MLE is on the boundary")
    A = model.matrix_array()
    offset = model.offset_array()

    if model.variant is Variant.INTENSITIES:
        return fit_poisson_newton(A, y, offset, options)

    if classify(model).overall_effect:
        result = fit_poisson_newton(A, y, offset, options)
        delta = result.delta_hat * (obs.N / float(np.sum(result.delta_hat)))
        fitted_sums = A @ delta
        T = A @ y
        return FitResult(
            delta_hat=delta,
            beta_hat=result.beta_hat,
            alpha=obs.N,
            fitted_sums=fitted_sums,
            proportionality=float(np.mean(fitted_sums / T)),
            converged=result.converged,
            iterations=result.iterations,
            max_residual=result.max_residual,
        )
    return fit_curved_multinomial(A, y, offset, options)
