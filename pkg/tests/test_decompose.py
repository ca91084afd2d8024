"""Score decomposition, probes, and residual scans."""

import math

import numpy as np
import pytest

from scoreforge import (
    DEGRADED,
    NULL,
    AnalyticMixturePredictor,
    MixtureComponent,
    MixtureSpec,
    add_noise,
    class_condition,
    condition_direction,
    decompose_score,
    default_tau,
    domain_correction_step,
    domain_direction,
    point_mass_predictor,
    probe_id_ood,
    residual_scan,
)
from scoreforge.decompose import pearson


@pytest.fixture(scope="module")
def degraded_is_null(sched):
    """Analytic predictor whose degraded condition equals its marginal."""
    comps = [MixtureComponent(np.array([0.4, -0.2]), 0.8, 1.0)]
    spec = MixtureSpec({NULL: comps, DEGRADED: comps, class_condition(0): comps})
    return AnalyticMixturePredictor(spec, sched)


class TestConditionDirection:
    def test_null_condition_gives_exact_zero(self, sched, two_mode):
        _, pred = two_mode
        z = np.array([0.3, 0.8])
        out = condition_direction(pred, z, NULL, 25)
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_condition_equal_to_marginal_gives_zero(self, sched, single_gauss):
        """class(0) of the single-Gaussian spec has the same components as
        the marginal, so the two predictions coincide."""
        _, pred = single_gauss
        rng = np.random.default_rng(0)
        for t in (5, 50, 99):
            z = rng.normal(size=2)
            out = condition_direction(pred, z, class_condition(0), t)
            np.testing.assert_allclose(out, 0.0, atol=1e-10)

    def test_matches_posterior_mean_difference(self, sched, two_mode):
        """delta_c == sqrt(abar)/sqrt(1-abar) * (E[x|z,null] - E[x|z,y]),
        the closed-form identity; negated, it points from the marginal
        posterior mean toward the conditional one."""
        spec, pred = two_mode
        y = class_condition(0)
        mu_y = spec.components(y)[0].mean
        rng = np.random.default_rng(1)
        t = 40
        c_sig, c_noise = sched.signal_noise(t)
        for _ in range(5):
            eps = rng.standard_normal(2)
            z = add_noise(sched, mu_y, t, eps).z
            dc = condition_direction(pred, z, y, t)
            want = (
                c_sig
                / c_noise
                * (pred.posterior_mean(z, NULL, t) - pred.posterior_mean(z, y, t))
            )
            np.testing.assert_allclose(dc, want, rtol=1e-10, atol=1e-12)
            # steering: -delta_c aligns with (conditional - marginal) mean
            gap = pred.posterior_mean(z, y, t) - pred.posterior_mean(z, NULL, t)
            if np.linalg.norm(gap) > 1e-9:
                assert float(np.dot(-dc, gap)) > 0.0

    def test_exactly_two_predictor_calls(self, sched, two_mode):
        _, inner = two_mode

        class Counting:
            def __init__(self, inner):
                self.inner = inner
                self.calls = 0

            def predict(self, z, y, t):
                self.calls += 1
                return self.inner.predict(z, y, t)

        pred = Counting(inner)
        condition_direction(pred, np.zeros(2), class_condition(0), 10)
        assert pred.calls == 2


class TestDomainDirection:
    def test_below_threshold_returns_unconditional(self, sched, two_mode):
        _, pred = two_mode
        z = np.array([0.1, -0.4])
        tau = default_tau(sched.T)
        t = tau - 1
        out = domain_direction(pred, z, t, tau, DEGRADED)
        np.testing.assert_array_equal(out, pred.predict(z, NULL, t))

    def test_degraded_equal_null_cancels(self, sched, degraded_is_null):
        z = np.array([0.5, 0.2])
        tau = default_tau(sched.T)
        out = domain_direction(degraded_is_null, z, tau + 5, tau, DEGRADED)
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_blurred_image_correction_faces_clean(
        self, sched, image_model, image_pair
    ):
        """Applied as a correction (negated, per the steering frame), the
        domain direction on a blurred sample aligns with clean - blurred,
        averaged over noise draws."""
        clean, blurred = image_pair
        tau = default_tau(sched.T)
        t = sched.T // 2
        rng = np.random.default_rng(5)
        total = 0.0
        for k in range(4):
            for _ in range(125):
                eps = rng.standard_normal(clean.shape[1])
                z = add_noise(sched, blurred[k], t, eps).z
                dd = domain_direction(image_model, z, t, tau, DEGRADED)
                total += float(np.dot(-dd, clean[k] - blurred[k]))
        assert total / 500.0 > 0.0


class TestDecomposeScore:
    def test_identity_holds_for_random_inputs(self, sched, two_mode, image_model):
        tau = default_tau(sched.T)
        rng = np.random.default_rng(2)
        _, analytic = two_mode
        for pred, dim in ((analytic, 2), (image_model, 64)):
            for _ in range(25):
                z = rng.normal(size=dim)
                t = int(rng.integers(1, sched.T + 1))
                s = float(rng.uniform(0, 30))
                y = class_condition(0) if rng.random() < 0.7 else NULL
                dec = decompose_score(pred, z, y, t, s, tau)
                scale = max(np.max(np.abs(dec.guided)), 1e-30)
                assert np.max(np.abs(dec.recombined() - dec.guided)) <= 1e-10 * scale

    def test_null_condition_zero_delta_c(self, sched, two_mode):
        _, pred = two_mode
        dec = decompose_score(pred, np.zeros(2), NULL, 10, 0.0, default_tau(sched.T))
        np.testing.assert_array_equal(dec.delta_c, np.zeros(2))
        np.testing.assert_allclose(
            dec.guided, dec.delta_d + dec.delta_n, rtol=1e-15
        )

    def test_in_domain_above_threshold_zero_domain_part(
        self, sched, degraded_is_null
    ):
        """degraded == null: delta_d vanishes for t >= tau and delta_n is
        the whole unconditional prediction."""
        rng = np.random.default_rng(3)
        tau = default_tau(sched.T)
        z = rng.normal(size=2)
        t = tau + 10
        dec = decompose_score(degraded_is_null, z, class_condition(0), t, 7.5, tau)
        np.testing.assert_allclose(dec.delta_d, 0.0, atol=1e-12)
        np.testing.assert_allclose(
            dec.delta_n, degraded_is_null.predict(z, NULL, t), atol=1e-12
        )

    def test_noise_invariance_of_condition_direction(self, sched, two_mode):
        """Corr(delta_c, eps) is centered on zero across draws."""
        _, pred = two_mode
        y = class_condition(0)
        x = np.array([1.2, 0.3])
        t = 50
        rng = np.random.default_rng(4)
        corrs = np.empty(1000)
        for i in range(1000):
            eps = rng.standard_normal(2)
            z = add_noise(sched, x, t, eps).z
            corrs[i] = pearson(condition_direction(pred, z, y, t), eps)
        assert abs(corrs.mean()) < 0.05


class TestProbeIdOod:
    def test_identical_inputs_zero_domain_estimate(self, sched, two_mode):
        _, pred = two_mode
        x = np.array([0.4, 0.4])
        eps = np.random.default_rng(5).standard_normal(2)
        _, dd = probe_id_ood(pred, x, x, eps, 30, sched)
        np.testing.assert_array_equal(dd, np.zeros(2))

    def test_single_gaussian_closed_form_difference(self, sched, single_gauss):
        spec, pred = single_gauss
        comp = spec.components(NULL)[0]
        rng = np.random.default_rng(6)
        x_id = comp.mean
        x_ood = comp.mean + np.array([0.8, -0.6])
        eps = rng.standard_normal(2)
        t = 45
        dn, dd = probe_id_ood(pred, x_id, x_ood, eps, t, sched)
        ab = sched.alpha_bar(t)
        svar = ab * comp.var + (1.0 - ab)
        # eps*(z) is linear in z for one component, so the difference is
        # sqrt(abar) sqrt(1-abar) / svar times (x_ood - x_id)
        want = math.sqrt(ab) * math.sqrt(1.0 - ab) / svar * (x_ood - x_id)
        # independent recomputation via two oracle calls
        z_id = add_noise(sched, x_id, t, eps).z
        z_ood = add_noise(sched, x_ood, t, eps).z
        direct = pred.predict(z_ood, NULL, t) - pred.predict(z_id, NULL, t)
        np.testing.assert_allclose(dd, direct, rtol=1e-12)
        np.testing.assert_allclose(dd, want, rtol=1e-10)
        np.testing.assert_array_equal(dn, pred.predict(z_id, NULL, t))

    def test_blurred_probe_improves_with_positive_step(
        self, sched, image_model, image_pair
    ):
        """Line search over positive correction scales: some step strictly
        reduces the distance to the clean image."""
        clean, blurred = image_pair
        t = sched.T // 2
        rng = np.random.default_rng(7)
        improved = 0
        for k in range(4):
            eps = rng.standard_normal(clean.shape[1])
            _, dd = probe_id_ood(image_model, clean[k], blurred[k], eps, t, sched)
            base = np.linalg.norm(blurred[k] - clean[k])
            best = min(
                np.linalg.norm(
                    domain_correction_step(blurred[k], dd, sched, t, scale=c)
                    - clean[k]
                )
                for c in (0.1, 0.25, 0.5, 1.0, 2.0)
            )
            if best < base:
                improved += 1
        assert improved >= 3


class TestResidualScan:
    def test_exact_denoiser_zero_residual(self, sched):
        x = np.array([0.3, -0.9, 1.1])
        pred = point_mass_predictor(x, sched)
        rows = residual_scan(
            pred, x, [5, 50, 100], np.random.default_rng(8), n_draws=8, sched=sched
        )
        for row in rows:
            assert row.residual_norm == pytest.approx(0.0, abs=1e-12)

    def test_single_gaussian_matches_closed_form(self, sched, single_gauss):
        """At x = mean, the residual is -(abar sigma^2 / svar) eps, so its
        mean norm is that factor times E||eps||."""
        spec, pred = single_gauss
        comp = spec.components(NULL)[0]
        d = 2
        e_norm = math.sqrt(2.0) * math.gamma((d + 1) / 2) / math.gamma(d / 2)
        rows = residual_scan(
            pred,
            comp.mean,
            [10, 50, 90],
            np.random.default_rng(9),
            n_draws=400,
            sched=sched,
        )
        for row in rows:
            ab = sched.alpha_bar(row.t)
            factor = ab * comp.var / (ab * comp.var + 1.0 - ab)
            assert row.residual_norm == pytest.approx(factor * e_norm, rel=0.15)

    def test_relative_residual_grows_toward_small_t(self, sched, image_model, image_pair):
        clean, _ = image_pair
        rows = residual_scan(
            image_model,
            clean[0],
            [sched.T // 10, sched.T],
            np.random.default_rng(10),
            n_draws=64,
            sched=sched,
        )
        assert rows[0].residual_norm > rows[1].residual_norm

    def test_correlation_in_range(self, sched, image_model, image_pair):
        clean, _ = image_pair
        rows = residual_scan(
            image_model,
            clean[1],
            [10, 50, 100],
            np.random.default_rng(11),
            n_draws=16,
            sched=sched,
        )
        for row in rows:
            assert -1.0 <= row.correlation <= 1.0


class TestPearson:
    def test_perfect_correlation(self):
        a = np.arange(10.0)
        assert pearson(a, 2 * a + 1) == pytest.approx(1.0)
        assert pearson(a, -a) == pytest.approx(-1.0)

    def test_constant_input_gives_zero(self):
        assert pearson(np.ones(5), np.arange(5.0)) == 0.0
