"""Seeded Monte Carlo designs for validating the fdr estimator.

Two designs: statistics from a two-group normal mixture evaluated on a fixed
z grid, and p-values from a uniform mixture with a short signal interval
[0, a] evaluated on a grid refined inside the signal region.  Replicates use
counter-based (Philox) substreams derived from (seed, replicate index), so
results are identical whether replicates run sequentially or in parallel.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CdfdrError, ConfigError, SimulationError
from .pipeline import NullSpec, fit_cdfdr, local_fdr_many
from .special import normal_pdf

__all__ = [
    "MixtureNormalDesign",
    "MixtureUniformDesign",
    "EstimatorConfig",
    "SimReport",
    "replicate_rng",
    "gen_mixture_normal",
    "true_fdr_mixture_normal",
    "gen_mixture_uniform",
    "true_fdr_mixture_uniform",
    "normal_grid",
    "uniform_grid",
    "run_replicates",
    "resolve_workers",
]

_MEANS_STREAM = 0
_REPLICATE_STREAM = 1


def replicate_rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Philox generator for substream (seed, stream, index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MixtureNormalDesign:
    """Two-group design: n_null standard normals, the rest N(mu_i, 1)."""

    mu: float
    n: int = 5000
    n_null: int = 4500
    replicates: int = 20
    seed: int = 0
    mu_redraw: str = "once"

    def __post_init__(self):
        if not 0 <= self.n_null <= self.n:
            raise ConfigError(f"n_null must lie in [0, n], got {self.n_null}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.mu_redraw not in ("once", "per_replicate"):
            raise ConfigError(f"mu_redraw must be 'once' or 'per_replicate', got {self.mu_redraw!r}")

    @property
    def pi0(self) -> float:
        return self.n_null / self.n


@dataclass(frozen=True)
class MixtureUniformDesign:
    """P-value design: pi0 U[0,1] + (1 - pi0) U[0,a]."""

    pi0: float
    a: float
    n: int = 5000
    replicates: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pi0 <= 1.0:
            raise ConfigError(f"pi0 must lie in [0, 1], got {self.pi0}")
        if not 0.0 < self.a < 1.0:
            raise ConfigError(f"a must lie in (0, 1), got {self.a}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")


@dataclass(frozen=True)
class EstimatorConfig:
    m_density: int = 6
    m_mdc: int = 10
    grid_step: float = 0.01
    floor: float = 1e-3


@dataclass(frozen=True)
class SimReport:
    """Replicate aggregates: pointwise mean/sd of the fdr estimate, the
    closed-form true fdr on the same grid, integrated squared errors, and
    the per-replicate pi0 estimates."""

    grid: np.ndarray
    mean_fdr: np.ndarray
    sd_fdr: np.ndarray
    true_fdr: np.ndarray
    mise: float
    tail_mise: float | None
    pi0_estimates: np.ndarray
    n_replicates: int
    failed_replicates: list[int] = field(default_factory=list)


def gen_mixture_normal(design: MixtureNormalDesign, replicate: int = 0) -> np.ndarray:
    """One replicate of the normal-mixture statistics (nulls first).

    Non-null means are drawn from N(mu, 1): once for the whole study when
    ``mu_redraw='once'`` (shared across replicates), or fresh per replicate.
    """
    n_signal = design.n - design.n_null
    rng = replicate_rng(design.seed, _REPLICATE_STREAM, replicate)
    if design.mu_redraw == "once":
        means = replicate_rng(design.seed, _MEANS_STREAM).normal(design.mu, 1.0, n_signal)
    else:
        means = rng.normal(design.mu, 1.0, n_signal)
    stats = np.empty(design.n)
    stats[: design.n_null] = rng.normal(0.0, 1.0, design.n_null)
    stats[design.n_null:] = means + rng.normal(0.0, 1.0, n_signal)
    return stats


def true_fdr_mixture_normal(z: float, pi0: float, mu: float) -> float:
    """Closed-form fdr of the marginalized mixture.

    Marginalizing the mean draw, non-null statistics are N(mu, 2), so
    f(z) = pi0 phi(z) + (1 - pi0) phi((z - mu)/sqrt 2)/sqrt 2.
    """
    z = float(z)
    null_part = pi0 * normal_pdf(z)
    alt_part = (1.0 - pi0) * normal_pdf((z - mu) / math.sqrt(2.0)) / math.sqrt(2.0)
    return null_part / (null_part + alt_part)


def gen_mixture_uniform(design: MixtureUniformDesign, replicate: int = 0) -> np.ndarray:
    """One replicate of mixture-uniform p-values."""
    rng = replicate_rng(design.seed, _REPLICATE_STREAM, replicate)
    is_null = rng.random(design.n) < design.pi0
    u = rng.random(design.n)
    return np.where(is_null, u, design.a * u)


def true_fdr_mixture_uniform(u: float, pi0: float, a: float) -> float:
    """Closed-form fdr of the uniform mixture.

    The mixture density is pi0 + (1 - pi0)/a on [0, a] and pi0 on (a, 1],
    so fdr(u) = pi0 / f(u), which is exactly 1 outside the signal region.
    """
    if not 0.0 < u < 1.0:
        raise ConfigError(f"u must lie in (0, 1), got {u!r}")
    if u <= a:
        return pi0 / (pi0 + (1.0 - pi0) / a)
    return 1.0


def normal_grid() -> np.ndarray:
    """Fixed evaluation grid for the normal design: z in [-6, 6], step 0.05."""
    return np.linspace(-6.0, 6.0, 241)


def uniform_grid(a: float) -> tuple[np.ndarray, int]:
    """Evaluation grid for the uniform design, refined on the signal region.

    Returns the grid and the number of leading points lying inside [0, a]
    (the tail section used for the tail-restricted error).  All points are
    strictly inside (0, 1), the domain of the closed-form fdr.
    """
    tail = np.linspace(a / 100.0, a, 100)
    body = np.linspace(a, 1.0, 202)[1:-1]
    return np.concatenate([tail, body]), tail.size


def _run_one(args) -> tuple[int, np.ndarray | None, float | None, str | None]:
    design, config, grid, replicate = args
    try:
        if isinstance(design, MixtureNormalDesign):
            stats = gen_mixture_normal(design, replicate)
            model = fit_cdfdr(
                stats, NullSpec.standard_normal(), mode="pit",
                m_density=config.m_density, m_mdc=config.m_mdc,
                grid_step=config.grid_step, floor=config.floor,
            )
        else:
            pvals = gen_mixture_uniform(design, replicate)
            model = fit_cdfdr(
                pvals, NullSpec.precomputed(),
                m_density=config.m_density, m_mdc=config.m_mdc,
                grid_step=config.grid_step, floor=config.floor,
            )
        fdr = local_fdr_many(model, grid)
        return replicate, fdr, model.pi0, None
    except CdfdrError as exc:
        return replicate, None, None, f"{type(exc).__name__}: {exc}"


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit argument, else CDFDR_THREADS (0 = auto), else 1."""
    if requested is None:
        raw = os.environ.get("CDFDR_THREADS", "1")
        try:
            requested = int(raw)
        except ValueError:
            raise ConfigError(f"CDFDR_THREADS must be an integer, got {raw!r}")
    if requested < 0:
        raise ConfigError(f"worker count must be >= 0, got {requested}")
    if requested == 0:
        return max(1, os.cpu_count() or 1)
    return requested


def run_replicates(design, config: EstimatorConfig = EstimatorConfig(),
                   workers: int | None = None) -> SimReport:
    """Generate, fit, and aggregate all replicates of a design.

    Failed replicate fits are excluded and recorded; more than 10% failures
    aborts.  Aggregation runs in replicate-index order, so the report is
    identical for any worker count.
    """
    if isinstance(design, MixtureNormalDesign):
        grid = normal_grid()
        n_tail = None
        truth = np.array([
            true_fdr_mixture_normal(z, design.pi0, design.mu) for z in grid
        ])
    elif isinstance(design, MixtureUniformDesign):
        grid, n_tail = uniform_grid(design.a)
        truth = np.array([
            true_fdr_mixture_uniform(u, design.pi0, design.a) for u in grid
        ])
    else:
        raise ConfigError(f"unknown design type {type(design).__name__}")

    n_workers = resolve_workers(workers)
    tasks = [(design, config, grid, r) for r in range(design.replicates)]
    if n_workers > 1 and design.replicates > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            raw = list(pool.map(_run_one, tasks))
    else:
        raw = [_run_one(t) for t in tasks]
    raw.sort(key=lambda r: r[0])

    curves, pi0s, failed = [], [], []
    for replicate, fdr, pi0, err in raw:
        if err is None:
            curves.append(fdr)
            pi0s.append(pi0)
        else:
            failed.append(replicate)
    if len(failed) > 0.1 * design.replicates:
        raise SimulationError(
            f"{len(failed)} of {design.replicates} replicate fits failed: {failed}"
        )

    stack = np.vstack(curves)
    mean_fdr = stack.mean(axis=0)
    sd_fdr = stack.std(axis=0)
    sq_err = (stack - truth) ** 2
    mise = float(np.mean(np.trapezoid(sq_err, grid, axis=1)))
    tail_mise = None
    if n_tail is not None:
        tail_mise = float(np.mean(
            np.trapezoid(sq_err[:, :n_tail], grid[:n_tail], axis=1)
        ))

    for arr in (grid, mean_fdr, sd_fdr, truth):
        arr.setflags(write=False)
    return SimReport(
        grid=grid,
        mean_fdr=mean_fdr,
        sd_fdr=sd_fdr,
        true_fdr=truth,
        mise=mise,
        tail_mise=tail_mise,
        pi0_estimates=np.array(pi0s),
        n_replicates=len(curves),
        failed_replicates=failed,
    )
