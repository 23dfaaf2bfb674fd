"""True-null proportion estimation by minimum deviance over density levels.

For each level lambda on a fine grid over [1, 3.5], the p-values whose
estimated comparison density sits below lambda form a candidate null set;
its deviance from uniformity is the sum of squared score coefficients of the
raw p-values in the set.  The level with minimum deviance defines pi0 as the
fraction of p-values it captures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import ComparisonDensityModel, eval_comparison_density_many
from .errors import DomainError, EstimationError, InsufficientDataError
from .legendre import M_MAX, basis_matrix

__all__ = ["DeviancePath", "estimate_pi0"]

_FLAT_TOL = 1e-12


@dataclass(frozen=True)
class DeviancePath:
    """Deviance profile over the lambda grid.

    Grid points whose candidate set is empty are recorded as missing
    (``deviances`` NaN, ``n_lambda`` 0) rather than raising.  ``flat`` marks
    paths whose valid deviances all agree within 1e-12, in which case
    ``lambda_star`` is the smallest valid grid point.
    """

    lambdas: np.ndarray
    deviances: np.ndarray
    n_lambda: np.ndarray
    lambda_star: float
    pi0_hat: float
    m: int
    flat: bool


def estimate_pi0(pvalues, model: ComparisonDensityModel, m: int = 10,
                 grid_step: float = 0.01, lambda_min: float = 1.0,
                 lambda_max: float = 3.5) -> DeviancePath:
    """Minimum-deviance estimate of the true-null proportion.

    The model must already be fitted on the same p-values.  Ties at the
    minimum break toward the smallest lambda (most conservative null set);
    the scan is performed in ascending lambda order, so the result is
    deterministic bit for bit.
    """
    if not 1 <= int(m) <= M_MAX:
        raise DomainError(f"m must lie in [1, {M_MAX}], got {m}")
    if not 0.0 < grid_step <= lambda_max - lambda_min:
        raise DomainError(f"invalid grid step {grid_step!r}")
    u = np.asarray(pvalues, dtype=float).ravel()
    if u.size == 0:
        raise InsufficientDataError("no p-values supplied")
    n = int(u.size)

    dens = eval_comparison_density_many(model, u)
    basis = basis_matrix(int(m), u)

    # Canonical (density, p-value) ordering makes the prefix sums, and hence
    # every deviance, invariant under permutation of the input.
    order = np.lexsort((u, dens))
    dens_sorted = dens[order]
    prefix = np.cumsum(basis[order], axis=0)

    n_grid = int(round((lambda_max - lambda_min) / grid_step)) + 1
    lambdas = lambda_min + grid_step * np.arange(n_grid)
    counts = np.searchsorted(dens_sorted, lambdas, side="left")
    deviances = np.full(n_grid, np.nan)
    n_lambda = counts.astype(int)
    valid = counts > 0
    if not np.any(valid):
        raise EstimationError("every lambda grid point produced an empty null set")
    idx = counts[valid] - 1
    theta = prefix[idx] / counts[valid, None]
    deviances[valid] = np.sum(theta ** 2, axis=1)

    valid_dev = deviances[valid]
    flat = bool(np.max(valid_dev) - np.min(valid_dev) <= _FLAT_TOL)
    if flat:
        star_idx = int(np.flatnonzero(valid)[0])
    else:
        star_idx = int(np.nanargmin(deviances))
    lambda_star = float(lambdas[star_idx])
    pi0_hat = float(counts[star_idx]) / n

    lambdas.setflags(write=False)
    deviances.setflags(write=False)
    n_lambda.setflags(write=False)
    return DeviancePath(
        lambdas=lambdas,
        deviances=deviances,
        n_lambda=n_lambda,
        lambda_star=lambda_star,
        pi0_hat=pi0_hat,
        m=int(m),
        flat=flat,
    )
