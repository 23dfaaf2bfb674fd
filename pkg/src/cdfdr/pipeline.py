"""End-to-end local false discovery rate pipeline.

Fits the full model in five sequential steps: rank-null transform of the
statistics to p-values, beta fit, smooth p-values, thresholded series
density, and minimum-deviance pi0.  The fitted model is immutable and keeps
every intermediate artifact for audit; evaluation operations are pure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .betafit import BetaFit, fit_beta_mle, smooth_pvalues
from .density import (
    ComparisonDensityModel,
    DEFAULT_FLOOR,
    comparison_density_raw_many,
    comparison_density_raw_reflected_many,
    eval_comparison_density,
    eval_comparison_density_many,
    score_coefficients,
)
from .errors import (
    CdfdrError,
    ConfigError,
    EstimationError,
    InsufficientDataError,
    PipelineError,
)
from .pi0 import DeviancePath, estimate_pi0
from .quadrature import integrate_unit
from .special import (
    normal_cdf,
    normal_pdf,
    normal_quantile,
    student_t_cdf,
    student_t_cdf_many,
    student_t_pdf,
)

__all__ = [
    "NullSpec",
    "CdfrModel",
    "DiscoveryRecord",
    "DiscoveryReport",
    "TRANSFORM_MODES",
    "t_to_z",
    "to_pvalues",
    "fit_cdfdr",
    "u_of_t",
    "u_of_t_many",
    "local_fdr",
    "local_fdr_many",
    "nonnull_density",
    "integrate_nonnull_density",
    "discoveries",
]

TRANSFORM_MODES = ("pit", "two_sided")

# Named clamp point for probabilities entering the normal quantile.
_QUANTILE_CLAMP = 1e-15


@dataclass(frozen=True)
class NullSpec:
    """Null model used for the rank-null transformation.

    ``kind`` is one of ``standard_normal``, ``normal`` (with mu0/sigma0),
    ``student_t`` (with df), or ``precomputed_pvalues`` (inputs are already
    p-values and bypass the transform).
    """

    kind: str
    mu0: float = 0.0
    sigma0: float = 1.0
    df: float | None = None

    def __post_init__(self):
        if self.kind not in ("standard_normal", "normal", "student_t", "precomputed_pvalues"):
            raise ConfigError(f"unknown null kind {self.kind!r}")
        if self.kind == "normal" and not self.sigma0 > 0.0:
            raise ConfigError(f"sigma0 must be positive, got {self.sigma0!r}")
        if self.kind == "student_t" and not (self.df is not None and self.df > 0.0):
            raise ConfigError(f"student_t null needs df > 0, got {self.df!r}")

    @staticmethod
    def standard_normal() -> "NullSpec":
        return NullSpec(kind="standard_normal")

    @staticmethod
    def normal(mu0: float, sigma0: float) -> "NullSpec":
        return NullSpec(kind="normal", mu0=float(mu0), sigma0=float(sigma0))

    @staticmethod
    def student_t(df: float) -> "NullSpec":
        return NullSpec(kind="student_t", df=float(df))

    @staticmethod
    def precomputed() -> "NullSpec":
        return NullSpec(kind="precomputed_pvalues")

    def cdf(self, t: float) -> float:
        if self.kind == "standard_normal":
            return normal_cdf(t)
        if self.kind == "normal":
            return normal_cdf((t - self.mu0) / self.sigma0)
        if self.kind == "student_t":
            return student_t_cdf(t, self.df)
        raise ConfigError("precomputed_pvalues null has no distribution function")

    def pdf(self, t: float) -> float:
        if self.kind == "standard_normal":
            return normal_pdf(t)
        if self.kind == "normal":
            return normal_pdf((t - self.mu0) / self.sigma0) / self.sigma0
        if self.kind == "student_t":
            return student_t_pdf(t, self.df)
        # Uniform reference density on the p-value scale.
        return 1.0 if 0.0 <= t <= 1.0 else 0.0

    def median(self) -> float:
        if self.kind == "normal":
            return self.mu0
        if self.kind == "precomputed_pvalues":
            return 0.5
        return 0.0

    def cdf_many(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "student_t":
            return student_t_cdf_many(t, self.df)
        if self.kind == "normal":
            z = (t - self.mu0) / self.sigma0
        elif self.kind == "standard_normal":
            z = t
        else:
            raise ConfigError("precomputed_pvalues null has no distribution function")
        return np.array([normal_cdf(zi) for zi in np.atleast_1d(z)])


@dataclass(frozen=True)
class DiscoveryRecord:
    index: int
    statistic: float
    pvalue: float
    fdr: float


@dataclass(frozen=True)
class DiscoveryReport:
    """Cases whose estimated local fdr falls at or below the threshold."""

    threshold: float
    n_discoveries: int
    n_left: int
    n_right: int
    indices: list[int]
    records: list[DiscoveryRecord]


@dataclass(frozen=True)
class CdfrModel:
    """Complete fitted model with every intermediate artifact retained.

    The algebraic identity fdr(t) * d(u(t)) = pi0 holds exactly for the
    uncapped fdr, by construction of :func:`local_fdr`.
    """

    null_spec: NullSpec
    cd_model: ComparisonDensityModel
    pi0: float
    deviance_path: DeviancePath
    transform_mode: str
    stats: np.ndarray | None = field(repr=False, default=None)
    pvalues: np.ndarray | None = field(repr=False, default=None)
    smooth: np.ndarray | None = field(repr=False, default=None)

    @property
    def beta_fit(self) -> BetaFit:
        return self.cd_model.fit


def t_to_z(t_stats, df: float) -> np.ndarray:
    """Convert t statistics to z scale through the t CDF and normal quantile.

    Probabilities are clamped to [1e-15, 1 - 1e-15] before inversion (the
    named clamp point for this operation); the map is order-preserving.
    """
    if not df > 0.0:
        raise ConfigError(f"df must be positive, got {df!r}")
    t_stats = np.asarray(t_stats, dtype=float)
    p = student_t_cdf_many(t_stats, df)
    p = np.clip(p, _QUANTILE_CLAMP, 1.0 - _QUANTILE_CLAMP)
    return np.array([normal_quantile(pi) for pi in p])


def to_pvalues(stats, null_spec: NullSpec, mode: str = "pit") -> np.ndarray:
    """Rank-null transform of statistics to p-values.

    ``pit`` uses u = F0(t), putting signal in both tails of u; ``two_sided``
    uses u = 2 min(F0(t), 1 - F0(t)), folding signal toward 0.  With a
    ``precomputed_pvalues`` null the input passes through after validation.
    """
    if mode not in TRANSFORM_MODES:
        raise ConfigError(f"transform mode must be one of {TRANSFORM_MODES}, got {mode!r}")
    stats = np.asarray(stats, dtype=float)
    if np.any(~np.isfinite(stats)):
        raise ConfigError("statistics must be finite")
    if null_spec.kind == "precomputed_pvalues":
        if np.any(stats < 0.0) or np.any(stats > 1.0):
            raise ConfigError("precomputed p-values must lie in [0, 1]")
        return stats.copy()
    f0 = null_spec.cdf_many(stats)
    if mode == "pit":
        return f0
    return 2.0 * np.minimum(f0, 1.0 - f0)


def u_of_t_many(model: CdfrModel, t) -> np.ndarray:
    """The model's own statistic-to-p-value map, applied to an array."""
    return to_pvalues(t, model.null_spec, model.transform_mode)


def u_of_t(model: CdfrModel, t: float) -> float:
    return float(u_of_t_many(model, np.array([float(t)]))[0])


def fit_cdfdr(data, null_spec: NullSpec, *, m_density: int = 6, m_mdc: int = 10,
              grid_step: float = 0.01, mode: str = "pit",
              floor: float = DEFAULT_FLOOR) -> CdfrModel:
    """Run the five fitting steps in order and assemble the model.

    ``data`` holds statistics (transformed through ``null_spec``) or, with a
    ``precomputed_pvalues`` null, the p-values themselves.  Deterministic:
    identical inputs produce an identical model.
    """
    if mode not in TRANSFORM_MODES:
        raise ConfigError(f"transform mode must be one of {TRANSFORM_MODES}, got {mode!r}")
    data = np.asarray(data, dtype=float).ravel()
    if data.size < 100:
        raise InsufficientDataError(
            f"large-scale method needs n >= 100, got {data.size}"
        )
    if data.size < 1000:
        warnings.warn(
            f"n = {data.size} is small for a large-scale method; "
            "estimates may be unstable below n = 1000",
            UserWarning,
            stacklevel=2,
        )

    def step(label, fn):
        try:
            return fn()
        except CdfdrError as exc:
            raise PipelineError(label, str(exc)) from exc

    u = step("step 1 (rank-null transform)", lambda: to_pvalues(data, null_spec, mode))
    fit = step("step 2 (beta fit)", lambda: fit_beta_mle(u))
    v = step("step 3 (smooth p-values)", lambda: smooth_pvalues(u, fit))
    coeffs = step("step 4 (series density)", lambda: score_coefficients(v, m_density))
    cd_model = ComparisonDensityModel(fit=fit, coeffs=coeffs, floor=floor)
    path = step("step 5 (pi0 estimation)",
                lambda: estimate_pi0(u, cd_model, m=m_mdc, grid_step=grid_step))

    stats = None if null_spec.kind == "precomputed_pvalues" else data.copy()
    for arr in (stats, u, v):
        if arr is not None:
            arr.setflags(write=False)
    return CdfrModel(
        null_spec=null_spec,
        cd_model=cd_model,
        pi0=path.pi0_hat,
        deviance_path=path,
        transform_mode=mode,
        stats=stats,
        pvalues=u,
        smooth=v,
    )


def local_fdr_many(model: CdfrModel, t, cap: bool = True) -> np.ndarray:
    """Estimated local fdr at each statistic value.

    The raw plug-in ratio pi0 / d(u(t)) can exceed 1 where the estimated
    density dips below pi0; with ``cap=True`` (the reporting default) values
    are capped at 1.0.  Pass ``cap=False`` for the raw audit values.
    """
    u = u_of_t_many(model, t)
    fdr = model.pi0 / eval_comparison_density_many(model.cd_model, u)
    return np.minimum(fdr, 1.0) if cap else fdr


def local_fdr(model: CdfrModel, t: float, cap: bool = True) -> float:
    return float(local_fdr_many(model, np.array([float(t)]), cap=cap)[0])


def nonnull_density(model: CdfrModel, t: float) -> float:
    """Reconstructed density of the non-null cases at statistic t.

    Weights the null density by the estimated comparison-density excess over
    pi0, clipped at zero.  Requires pi0 strictly below 1.
    """
    if not model.pi0 < 1.0:
        raise EstimationError(
            "nonnull density undefined when pi0 = 1 (no estimated signal)"
        )
    u = u_of_t(model, t)
    d = eval_comparison_density(model.cd_model, u)
    return max(0.0, d - model.pi0) * model.null_spec.pdf(t) / (1.0 - model.pi0)


def integrate_nonnull_density(model: CdfrModel) -> float:
    """Total mass of the reconstructed non-null density (diagnostic, ~1).

    Computed in p-value space, where the statistic-scale integral reduces
    exactly to int max(0, d(u) - pi0) du / (1 - pi0) by the probability
    integral transform; clipping makes the result only approximately 1.
    """
    if not model.pi0 < 1.0:
        raise EstimationError(
            "nonnull density undefined when pi0 = 1 (no estimated signal)"
        )
    pi0 = model.pi0
    mass = integrate_unit(
        lambda u: np.maximum(
            0.0, comparison_density_raw_many(model.cd_model, u) - pi0
        ),
        lambda w: np.maximum(
            0.0, comparison_density_raw_reflected_many(model.cd_model, w) - pi0
        ),
    )
    return mass / (1.0 - pi0)


def discoveries(model: CdfrModel, stats, threshold: float = 0.2) -> DiscoveryReport:
    """Cases with estimated fdr at or below the threshold.

    The left/right split is by the sign of the statistic relative to the
    null median (left is strictly below); for precomputed p-values the split
    point is 0.5 on the p-value scale.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1], got {threshold!r}")
    stats = np.asarray(stats, dtype=float).ravel()
    u = u_of_t_many(model, stats)
    fdr = local_fdr_many(model, stats)
    median = model.null_spec.median()
    hits = np.flatnonzero(fdr <= threshold)
    records = [
        DiscoveryRecord(
            index=int(i),
            statistic=float(stats[i]),
            pvalue=float(u[i]),
            fdr=float(fdr[i]),
        )
        for i in hits
    ]
    n_left = int(np.sum(stats[hits] < median))
    return DiscoveryReport(
        threshold=float(threshold),
        n_discoveries=int(hits.size),
        n_left=n_left,
        n_right=int(hits.size) - n_left,
        indices=[int(i) for i in hits],
        records=records,
    )
