"""Pipeline orchestration: transforms, fitting, fdr evaluation, discoveries."""

import math

import numpy as np
import pytest
from scipy import stats as sp_stats

from cdfdr.betafit import BetaFit
from cdfdr.density import (
    ComparisonDensityModel,
    CoefficientSet,
    eval_comparison_density,
    eval_comparison_density_many,
)
from cdfdr.errors import (
    ConfigError,
    EstimationError,
    InsufficientDataError,
    PipelineError,
)
from cdfdr.pi0 import DeviancePath
from cdfdr.pipeline import (
    CdfrModel,
    NullSpec,
    discoveries,
    fit_cdfdr,
    integrate_nonnull_density,
    local_fdr,
    local_fdr_many,
    nonnull_density,
    t_to_z,
    to_pvalues,
    u_of_t,
    u_of_t_many,
)


def _two_sided_mixture(seed, n_null=4500, n_signal=500, mu=3.0):
    rng = np.random.Generator(np.random.Philox(seed))
    signs = np.where(rng.random(n_signal) < 0.5, -1.0, 1.0)
    means = signs * mu + rng.normal(0.0, 1.0, n_signal)
    return np.concatenate([
        rng.normal(0.0, 1.0, n_null),
        means + rng.normal(0.0, 1.0, n_signal),
    ])


def _manual_cdfr_model(pi0, theta_hat, alpha=1.0, beta=1.0):
    fit = BetaFit(alpha=alpha, beta=beta, log_likelihood=0.0, n=1000,
                  iterations=0, converged=True)
    theta = np.asarray(theta_hat, dtype=float)
    coeffs = CoefficientSet(m=theta.size, theta_tilde=theta.copy(),
                            theta_hat=theta, n=1000, threshold=0.0017)
    path = DeviancePath(
        lambdas=np.array([1.0]), deviances=np.array([0.0]),
        n_lambda=np.array([1000]), lambda_star=1.0, pi0_hat=pi0, m=10, flat=True,
    )
    return CdfrModel(
        null_spec=NullSpec.precomputed(),
        cd_model=ComparisonDensityModel(fit=fit, coeffs=coeffs),
        pi0=pi0, deviance_path=path, transform_mode="pit",
    )


class TestNullSpec:
    def test_validation(self):
        with pytest.raises(ConfigError):
            NullSpec(kind="poisson")
        with pytest.raises(ConfigError):
            NullSpec.normal(0.0, 0.0)
        with pytest.raises(ConfigError):
            NullSpec.student_t(-3.0)

    def test_cdf_dispatch(self):
        assert NullSpec.standard_normal().cdf(0.0) == 0.5
        assert NullSpec.normal(2.0, 3.0).cdf(2.0) == 0.5
        assert NullSpec.student_t(7.0).cdf(0.0) == 0.5
        with pytest.raises(ConfigError):
            NullSpec.precomputed().cdf(0.5)

    def test_medians(self):
        assert NullSpec.standard_normal().median() == 0.0
        assert NullSpec.normal(-1.5, 2.0).median() == -1.5
        assert NullSpec.student_t(3.0).median() == 0.0
        assert NullSpec.precomputed().median() == 0.5

    def test_pdf_normal_scaling(self):
        spec = NullSpec.normal(1.0, 2.0)
        base = NullSpec.standard_normal()
        assert spec.pdf(1.0) == pytest.approx(base.pdf(0.0) / 2.0, rel=1e-12)


class TestTtoZ:
    def test_zero_maps_to_zero(self):
        for df in (1.0, 10.0, 100.0):
            assert t_to_z(np.array([0.0]), df)[0] == 0.0

    def test_large_df_near_identity(self):
        z = t_to_z(np.array([1.96]), 100.0)[0]
        assert z == pytest.approx(1.96, abs=0.05)

    def test_rank_preservation(self):
        rng = np.random.Generator(np.random.Philox(3))
        t = rng.standard_t(5, size=500)
        z = t_to_z(t, 5.0)
        assert np.array_equal(np.argsort(t), np.argsort(z))

    def test_agrees_with_scipy_composition(self):
        t = np.array([-4.0, -1.2, 0.3, 2.7])
        z = t_to_z(t, 11.0)
        ref = sp_stats.norm.ppf(sp_stats.t.cdf(t, 11))
        np.testing.assert_allclose(z, ref, rtol=1e-9)

    def test_bad_df(self):
        with pytest.raises(ConfigError):
            t_to_z(np.array([1.0]), 0.0)


class TestToPvalues:
    def test_pit_median(self):
        u = to_pvalues(np.array([0.0]), NullSpec.standard_normal(), "pit")
        assert u[0] == 0.5

    def test_two_sided_quantile(self):
        u = to_pvalues(np.array([1.959964, -1.959964]),
                       NullSpec.standard_normal(), "two_sided")
        assert u[0] == pytest.approx(0.05, abs=1e-5)
        assert u[1] == pytest.approx(0.05, abs=1e-5)

    def test_order_preservation(self):
        rng = np.random.Generator(np.random.Philox(9))
        t = rng.normal(0, 2, 400)
        u_pit = to_pvalues(t, NullSpec.standard_normal(), "pit")
        assert np.array_equal(np.argsort(t), np.argsort(u_pit))
        u_two = to_pvalues(t, NullSpec.standard_normal(), "two_sided")
        assert np.array_equal(np.argsort(-np.abs(t)), np.argsort(u_two))

    def test_precomputed_passthrough_and_validation(self):
        u = np.array([0.1, 0.5, 0.9])
        out = to_pvalues(u, NullSpec.precomputed(), "pit")
        assert np.array_equal(out, u)
        with pytest.raises(ConfigError):
            to_pvalues(np.array([1.2]), NullSpec.precomputed(), "pit")

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            to_pvalues(np.array([0.0]), NullSpec.standard_normal(), "folded")


class TestFitCdfdr:
    def test_all_null_selects_nothing(self):
        rng = np.random.Generator(np.random.Philox(101))
        model = fit_cdfdr(rng.normal(0, 1, 5000), NullSpec.standard_normal())
        assert np.all(model.cd_model.coeffs.theta_hat == 0.0)
        assert model.pi0 >= 0.98
        assert model.beta_fit.converged

    def test_small_sample_rejected(self):
        with pytest.raises(InsufficientDataError):
            fit_cdfdr(np.linspace(-2, 2, 99), NullSpec.standard_normal())

    def test_small_sample_warns(self):
        rng = np.random.Generator(np.random.Philox(11))
        with pytest.warns(UserWarning, match="small"):
            fit_cdfdr(rng.normal(0, 1, 500), NullSpec.standard_normal())

    @pytest.mark.filterwarnings("ignore:n = 200 is small")
    def test_step_label_on_failure(self):
        # A constant statistic survives the transform but degenerates the
        # beta fit; the error must carry the step label.
        with pytest.raises(PipelineError, match="step 2"):
            fit_cdfdr(np.zeros(200), NullSpec.standard_normal())

    def test_determinism(self):
        stats = _two_sided_mixture(7)
        m1 = fit_cdfdr(stats, NullSpec.standard_normal())
        m2 = fit_cdfdr(stats.copy(), NullSpec.standard_normal())
        assert m1.beta_fit.alpha == m2.beta_fit.alpha
        assert m1.beta_fit.beta == m2.beta_fit.beta
        assert np.array_equal(m1.cd_model.coeffs.theta_tilde,
                              m2.cd_model.coeffs.theta_tilde)
        assert m1.pi0 == m2.pi0
        assert np.array_equal(m1.deviance_path.deviances,
                              m2.deviance_path.deviances, equal_nan=True)

    def test_scale_coherence_with_precomputed(self):
        # Feeding the pit p-values of a stats run through the precomputed
        # route must reproduce the identical model.
        stats = _two_sided_mixture(13)
        m_stats = fit_cdfdr(stats, NullSpec.standard_normal(), mode="pit")
        u = to_pvalues(stats, NullSpec.standard_normal(), "pit")
        m_pre = fit_cdfdr(u, NullSpec.precomputed())
        assert m_stats.beta_fit.alpha == m_pre.beta_fit.alpha
        assert m_stats.beta_fit.beta == m_pre.beta_fit.beta
        assert np.array_equal(m_stats.cd_model.coeffs.theta_hat,
                              m_pre.cd_model.coeffs.theta_hat)
        assert m_stats.pi0 == m_pre.pi0

    def test_intermediates_retained(self):
        stats = _two_sided_mixture(17)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        assert model.stats is not None and model.stats.size == stats.size
        assert model.pvalues.size == stats.size
        assert model.smooth.size == stats.size
        # Retained arrays are read-only audit artifacts.
        with pytest.raises(ValueError):
            model.pvalues[0] = 0.5


class TestLocalFdr:
    def test_threshold_correspondence_value(self):
        # pi0 = 1 and an assembled density of 5 gives fdr 0.2.
        model = _manual_cdfr_model(1.0, [0.0, 4.0 / math.sqrt(5.0), 0.0, 0.0, 0.0, 0.0])
        # At u -> 1 the series factor approaches 1 + theta * S_2(1) = 5.
        d = eval_comparison_density(model.cd_model, 1.0)
        assert d == pytest.approx(5.0, abs=1e-6)
        assert local_fdr(model, 1.0) == pytest.approx(0.2, abs=1e-6)

    def test_uniform_model_constant_fdr(self):
        model = _manual_cdfr_model(0.97, np.zeros(6))
        for t in np.linspace(0.01, 0.99, 13):
            assert local_fdr(model, t) == pytest.approx(0.97, rel=1e-12)

    def test_identity_with_comparison_density(self):
        stats = _two_sided_mixture(19)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        t = np.linspace(-4.0, 4.0, 101)
        raw = local_fdr_many(model, t, cap=False)
        d = eval_comparison_density_many(model.cd_model, u_of_t_many(model, t))
        np.testing.assert_allclose(raw * d, model.pi0, rtol=0, atol=1e-12)

    def test_cap_and_raw(self):
        stats = _two_sided_mixture(23)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        t = np.linspace(-6.0, 6.0, 241)
        raw = local_fdr_many(model, t, cap=False)
        capped = local_fdr_many(model, t)
        assert np.any(raw > 1.0)
        assert np.all(capped <= 1.0)
        np.testing.assert_array_equal(capped, np.minimum(raw, 1.0))

    def test_threshold_set_inclusions(self):
        # With pi0 in [0.95, 1]: {d > 5} subset of {fdr < 0.2} subset of
        # {d > 4.75}, bracketing the pi0-in-threshold ambiguity.
        rng = np.random.Generator(np.random.Philox(29))
        stats = np.concatenate([rng.normal(0, 1, 4850),
                                rng.normal(4, 1, 150) + rng.normal(0, 1, 150)])
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        assert 0.95 <= model.pi0 <= 1.0
        t = np.linspace(-6.0, 6.0, 1201)
        fdr = local_fdr_many(model, t)
        d = eval_comparison_density_many(model.cd_model, u_of_t_many(model, t))
        low = fdr < 0.2
        assert np.all(low[d > 5.0])
        assert np.all(d[low] > 4.75)


class TestNonnullDensity:
    def test_requires_signal(self):
        model = _manual_cdfr_model(1.0, np.zeros(6))
        with pytest.raises(EstimationError):
            nonnull_density(model, 0.3)
        with pytest.raises(EstimationError):
            integrate_nonnull_density(model)

    def test_clipped_weight_region(self):
        model = _manual_cdfr_model(0.97, np.zeros(6))
        # d = 1 everywhere... weight max(0, 1 - 0.97) > 0; shrink pi0 above d
        model_high = _manual_cdfr_model(0.97, [0.0, -0.5, 0.0, 0.0, 0.0, 0.0])
        # near v = 0.5, S_2 < 0 so d > 1 > pi0; at the endpoints d < pi0.
        assert nonnull_density(model_high, 1e-6) == 0.0

    def test_mass_concentrates_in_tails(self):
        stats = _two_sided_mixture(31)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        assert model.pi0 < 1.0
        z = np.linspace(-8.0, 8.0, 1601)
        f1 = np.array([nonnull_density(model, zi) for zi in z])
        inner = np.trapezoid(np.where(np.abs(z) <= 2.0, f1, 0.0), z)
        outer = np.trapezoid(np.where(np.abs(z) > 2.0, f1, 0.0), z)
        assert outer > inner

    def test_integral_structure(self):
        # The u-substituted library integral equals an independent x-space
        # trapezoid, and clipping makes the mass at least 1.
        stats = _two_sided_mixture(37)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        total = integrate_nonnull_density(model)
        z = np.linspace(-10.0, 10.0, 4001)
        f1 = np.array([nonnull_density(model, zi) for zi in z])
        assert total == pytest.approx(np.trapezoid(f1, z), abs=5e-3)
        assert total >= 1.0 - 1e-9

    @pytest.mark.xfail(
        strict=True,
        reason="not reproducible: the clipped mass is 1 + E[(pi0-d)^+]/(1-pi0); "
        "with the minimum-deviance pi0 sitting ~0.03 above the bulk density "
        "level the integral lands near 1.5 (1.18-1.27 even with the true pi0) "
        "for every seed and for one- and two-sided mu=3 variants alike",
    )
    def test_integral_within_documented_tolerance(self):
        stats = _two_sided_mixture(41)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        assert integrate_nonnull_density(model) == pytest.approx(1.0, abs=0.15)


class TestDiscoveries:
    def test_zero_threshold_yields_nothing(self):
        stats = _two_sided_mixture(43)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        report = discoveries(model, stats, threshold=0.0)
        assert report.n_discoveries == 0
        assert report.indices == []

    def test_monotone_in_threshold(self):
        stats = _two_sided_mixture(47)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        previous = set()
        for threshold in (0.05, 0.1, 0.2, 0.5):
            current = set(discoveries(model, stats, threshold=threshold).indices)
            assert previous <= current
            previous = current

    def test_counts_and_split(self):
        stats = _two_sided_mixture(53)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        report = discoveries(model, stats)
        assert report.n_discoveries == report.n_left + report.n_right
        assert report.n_discoveries == len(report.indices) == len(report.records)
        for rec in report.records:
            assert rec.fdr <= report.threshold
            if rec.statistic < 0.0:
                assert rec.index in report.indices
        lefts = [r for r in report.records if r.statistic < 0.0]
        assert len(lefts) == report.n_left

    def test_discovers_planted_signal(self):
        stats = _two_sided_mixture(59, mu=4.0)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        report = discoveries(model, stats)
        assert report.n_discoveries > 0
        # Every discovery should be an extreme statistic.
        assert np.all(np.abs(stats[report.indices]) > 2.0)

    def test_bad_threshold(self):
        model = _manual_cdfr_model(0.9, np.zeros(6))
        with pytest.raises(ConfigError):
            discoveries(model, np.array([0.5]), threshold=1.5)


class TestLeukemiaDataset:
    def test_expression_pvalues_if_supplied(self):
        # Runs only against the user-supplied two-sample-test p-value CSV
        # for the 7129-gene leukemia study (see README for the format).
        import os

        path = os.environ.get("CDFDR_GOLUB_CSV", "")
        if not path or not os.path.exists(path):
            pytest.skip("leukemia p-value CSV not supplied")
        import csv as _csv

        with open(path, encoding="utf-8", newline="") as handle:
            reader = _csv.reader(handle)
            header = [h.strip() for h in next(reader)]
            col = header.index("pvalue") if "pvalue" in header else 0
            u = np.array([float(row[col]) for row in reader if row])
        model = fit_cdfdr(u, NullSpec.precomputed())
        assert model.beta_fit.alpha == pytest.approx(0.32, abs=0.02)
        assert model.beta_fit.beta == pytest.approx(0.75, abs=0.02)
        assert model.cd_model.coeffs.selected() == [3]
        assert model.cd_model.coeffs.theta_hat[2] == pytest.approx(-0.16, abs=0.015)


class TestUofT:
    def test_precomputed_identity(self):
        model = _manual_cdfr_model(0.9, np.zeros(6))
        assert u_of_t(model, 0.37) == 0.37

    def test_pit_matches_null_cdf(self):
        stats = _two_sided_mixture(61)
        model = fit_cdfdr(stats, NullSpec.standard_normal())
        from cdfdr.special import normal_cdf

        for t in (-2.0, 0.0, 1.5):
            assert u_of_t(model, t) == normal_cdf(t)
