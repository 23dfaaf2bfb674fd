"""Comparison-density estimation on smooth p-values.

The density of smooth p-values is modeled as 1 + sum_j theta_j S_j(v) with
hard-thresholded score coefficients; composing with the fitted beta density
gives the assembled estimate on the original p-value scale.  The truncated
series can dip below zero, so evaluation clips at a small positive floor
(coefficients are never modified) and the measure of the clipped set is
reported as a diagnostic rather than renormalized away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .betafit import CLAMP, BetaFit
from .errors import DomainError, InsufficientDataError
from .legendre import M_MAX, basis_matrix
from .quadrature import integrate_unit
from .special import beta_cdf_many, beta_pdf_many

__all__ = [
    "CoefficientSet",
    "ComparisonDensityModel",
    "score_coefficients",
    "eval_smooth_density",
    "eval_smooth_density_many",
    "eval_comparison_density",
    "eval_comparison_density_many",
    "comparison_density_raw_many",
    "comparison_density_raw_reflected_many",
    "reconstruct_density",
    "integrate_comparison_density",
    "clipped_measure",
]

DEFAULT_FLOOR = 1e-3


@dataclass(frozen=True)
class CoefficientSet:
    """Raw and hard-thresholded score coefficients of the smooth series.

    ``theta_hat[j]`` keeps ``theta_tilde[j]`` exactly when its square exceeds
    the selection threshold ``2 ln(n) / n`` and is zero otherwise.
    """

    m: int
    theta_tilde: np.ndarray
    theta_hat: np.ndarray
    n: int
    threshold: float

    def selected(self) -> list[int]:
        """1-based indices of the surviving coefficients."""
        return [j + 1 for j in range(self.m) if self.theta_hat[j] != 0.0]


@dataclass(frozen=True)
class ComparisonDensityModel:
    """Assembled beta-preflattened comparison-density estimate.

    Immutable after construction; evaluation is pure.  ``floor`` is the
    positive clip applied at evaluation time only.
    """

    fit: BetaFit
    coeffs: CoefficientSet
    floor: float = DEFAULT_FLOOR


def score_coefficients(smooth_pvalues, m: int = 6) -> CoefficientSet:
    """Sample-mean score coefficients of S_1..S_m with hard thresholding.

    theta_tilde[j] is the exact mean of S_j over the input; coefficients with
    theta^2 <= 2 ln(n)/n are zeroed (natural logarithm).
    """
    if not 1 <= int(m) <= M_MAX:
        raise DomainError(f"m must lie in [1, {M_MAX}], got {m}")
    v = np.asarray(smooth_pvalues, dtype=float).ravel()
    if v.size == 0:
        raise InsufficientDataError("no smooth p-values supplied")
    if v.size < 10:
        raise InsufficientDataError(f"need at least 10 values, got {v.size}")
    n = int(v.size)
    theta_tilde = basis_matrix(int(m), v).mean(axis=0)
    threshold = 2.0 * math.log(n) / n
    theta_hat = np.where(theta_tilde ** 2 > threshold, theta_tilde, 0.0)
    theta_tilde.setflags(write=False)
    theta_hat.setflags(write=False)
    return CoefficientSet(
        m=int(m),
        theta_tilde=theta_tilde,
        theta_hat=theta_hat,
        n=n,
        threshold=threshold,
    )


def eval_smooth_density_many(coeffs: CoefficientSet, v) -> np.ndarray:
    """Series density 1 + sum_j theta_hat[j] S_j(v) at each point of v."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.all(coeffs.theta_hat == 0.0):
        return np.ones_like(v)
    return 1.0 + basis_matrix(coeffs.m, v) @ coeffs.theta_hat


def eval_smooth_density(coeffs: CoefficientSet, v: float) -> float:
    """Scalar series density; may be negative (floor applies downstream)."""
    return float(eval_smooth_density_many(coeffs, np.array([float(v)]))[0])


def comparison_density_raw_many(model: ComparisonDensityModel, u) -> np.ndarray:
    """Unclipped assembled density f_B(u) * d(F_B(u)) for u in the open (0,1).

    Used by normalization diagnostics; no clamp and no floor, so the exact
    integral over (0, 1) is 1 (the basis has zero mean and f_B has unit mass).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("raw evaluation requires u strictly inside (0, 1)")
    fb = beta_pdf_many(u, model.fit.alpha, model.fit.beta)
    v = beta_cdf_many(u, model.fit.alpha, model.fit.beta)
    return fb * eval_smooth_density_many(model.coeffs, v)


def comparison_density_raw_reflected_many(model: ComparisonDensityModel, w) -> np.ndarray:
    """Raw assembled density at u = 1 - w, computed without forming 1 - w.

    Swapping the beta shape parameters evaluates the density and CDF exactly
    at the reflected point, keeping the right-endpoint singularity resolvable
    below the 2**-53 spacing of doubles near 1.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        raise DomainError("raw evaluation requires w strictly inside (0, 1)")
    fb = beta_pdf_many(w, model.fit.beta, model.fit.alpha)
    v = 1.0 - beta_cdf_many(w, model.fit.beta, model.fit.alpha)
    return fb * eval_smooth_density_many(model.coeffs, v)


def eval_comparison_density_many(model: ComparisonDensityModel, u) -> np.ndarray:
    """Floored assembled density at each u; u is clamped to the fit's range."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("u must lie in [0, 1]")
    uc = np.clip(u, CLAMP, 1.0 - CLAMP)
    return np.maximum(model.floor, comparison_density_raw_many(model, uc))


def eval_comparison_density(model: ComparisonDensityModel, u: float) -> float:
    """Assembled comparison-density estimate at a single p-value.

    Endpoints evaluate at the clamped point (same 1e-10 clamp as the beta
    fit); the result is strictly positive by the floor policy.
    """
    return float(eval_comparison_density_many(model, np.array([float(u)]))[0])


def reconstruct_density(null_pdf, null_cdf, model: ComparisonDensityModel, x: float) -> float:
    """Density reconstruction f(x) = f0(x) * d(F0(x)) on the statistic scale.

    ``null_pdf``/``null_cdf`` are the scalar density and distribution function
    of the pre-whitening model; any distribution with a valid CDF works.
    """
    f0 = float(null_pdf(x))
    u = float(null_cdf(x))
    return f0 * eval_comparison_density(model, u)


def integrate_comparison_density(model: ComparisonDensityModel) -> float:
    """Integral over (0,1) of the raw assembled density (should be ~1)."""
    return integrate_unit(
        lambda u: comparison_density_raw_many(model, u),
        lambda w: comparison_density_raw_reflected_many(model, w),
    )


def clipped_measure(model: ComparisonDensityModel, grid_size: int = 4096) -> float:
    """Lebesgue measure of {u : raw density < floor}, on a midpoint grid.

    Diagnostic-grade accuracy (resolution 1/grid_size); deterministic.
    """
    u = (np.arange(grid_size) + 0.5) / grid_size
    raw = comparison_density_raw_many(model, u)
    return float(np.mean(raw < model.floor))
