import math
import os
import unittest

import mock
import numpy as np

from mvtlasso.core import (ExpressionView, ViewParams, ModelState, TauMatrix, StageError,
                           ValidationError, ConvergenceWarning)
from mvtlasso.dataset import SynthSpec, generate
from mvtlasso.glasso import GlassoSettings, solve
from mvtlasso.models import (MvtlassoSettings, estep, mstep_moments, mstep_theta, mstep_W, w_objective,
                             complete_loglik, penalized_loglik, fit)
from mvtlasso.models.mvtlasso import _initialBasis
from mvtlasso.tdist import MvtParams, sample
from mvtlasso.tlasso import tlasso_objective

SLOW = os.environ.get("MVTLASSO_SLOW_TESTS") == "1"


def chainData(p=8, n=60, nu=3.0, seed=0):
    Theta = np.eye(p)
    for i in range(p - 1):
        Theta[i, i + 1] = Theta[i + 1, i] = 0.4
    return sample(MvtParams(nu, np.zeros(p), np.linalg.inv(Theta)), n, seed=seed)


class TestEstep(unittest.TestCase):

    def test_signal_and_noise_columns(self):
        view = ExpressionView.fromMatrix(np.array([[1.0, 0.0], [1.0, 0.0]]))
        model = ModelState.create([ViewParams(np.eye(2), np.zeros(2), 1.0, 1)], np.eye(2), 3.0, 0.1)
        tau = estep([view], model)
        np.testing.assert_allclose(tau[0], [1.0, 5.0 / 3.0])

    def test_noise_uses_sigma(self):
        view = ExpressionView.fromMatrix(np.array([[0.0, 2.0], [0.0, 0.0]]))
        model = ModelState.create([ViewParams(np.eye(2), np.zeros(2), 2.0, 1)], np.eye(2), 3.0, 0.1)
        # Noise column (2, 0) at scale 2 has delta 1.
        np.testing.assert_allclose(estep([view], model)[0], [5.0 / 3.0, 5.0 / 4.0])


class TestMstep(unittest.TestCase):

    def test_noise_scale(self):
        params = ViewParams(np.eye(2), np.zeros(2), 1.0, 1)
        Y = np.array([[1.0, 3.0], [2.0, 4.0]])
        moments = mstep_moments([params], [Y], TauMatrix((np.ones(2),)))
        self.assertAlmostEqual(moments.sigmas[0], math.sqrt(25.0 / 2.0))
        np.testing.assert_allclose(moments.mus[0], [1.0, 2.0])
        np.testing.assert_allclose(moments.Sigma, np.zeros((2, 2)), atol=1e-9)

    def test_unit_tau_gives_empirical_scatter(self):
        rng = np.random.default_rng(0)
        Y = rng.standard_normal((3, 20))
        params = ViewParams(np.eye(20), np.zeros(3), 1.0, 20)
        moments = mstep_moments([params], [Y], [np.ones(20)])
        np.testing.assert_allclose(moments.mus[0], Y.mean(axis=1), atol=1e-12)
        np.testing.assert_allclose(moments.Sigma, np.cov(Y, bias=True), atol=1e-12)
        self.assertEqual(moments.sigmas[0], 1.0)

    def test_scatter_pools_signal_columns(self):
        rng = np.random.default_rng(1)
        Y1, Y2 = rng.standard_normal((3, 6)), rng.standard_normal((3, 4))
        params = [ViewParams(np.eye(6), np.zeros(3), 1.0, 4), ViewParams(np.eye(4), np.zeros(3), 1.0, 2)]
        moments = mstep_moments(params, [Y1, Y2], [np.ones(6), np.ones(4)])
        c1 = Y1[:, :4] - Y1[:, :4].mean(axis=1)[:, None]
        c2 = Y2[:, :2] - Y2[:, :2].mean(axis=1)[:, None]
        np.testing.assert_allclose(moments.Sigma, (c1 @ c1.T + c2 @ c2.T) / 6.0, atol=1e-12)

    def test_theta_step_is_glasso(self):
        Sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
        estimate = mstep_theta(Sigma, 0.1, GlassoSettings(lam=0.3, tol=1e-8))
        expected = solve(Sigma, GlassoSettings(lam=0.1, tol=1e-8))
        np.testing.assert_allclose(estimate.Theta, expected.Theta, atol=1e-10)


class TestWStep(unittest.TestCase):

    def test_scalar_minimizer(self):
        result = mstep_W(np.array([[1.0]]), np.zeros(1), np.eye(1), 1.0, np.ones(1), np.eye(1), k=1)
        self.assertTrue(result.success)
        self.assertAlmostEqual(abs(float(result.W[0, 0])), 1.0 / math.sqrt(2.0), places=4)
        self.assertLessEqual(result.objective_after, result.objective_before)

    def test_objective_includes_log_det(self):
        X = np.array([[1.0]])
        args = (np.zeros(1), np.eye(1), 1.0, np.ones(1))
        for w in [0.5, 1.0 / math.sqrt(2.0), 2.0]:
            self.assertAlmostEqual(w_objective(X, np.array([[w]]), *args, k=1), w ** 2 - math.log(w), places=10)
        self.assertAlmostEqual(w_objective(X, np.array([[0.5]]), *args, k=1), 0.94315, places=5)

    def test_small_start_moves_to_minimizer(self):
        result = mstep_W(np.array([[1.0]]), np.zeros(1), np.eye(1), 1.0, np.ones(1), np.array([[0.2]]), k=1)
        self.assertTrue(result.success)
        self.assertAlmostEqual(result.objective_before, 0.04 - math.log(0.2), places=10)
        self.assertAlmostEqual(abs(float(result.W[0, 0])), 1.0 / math.sqrt(2.0), places=4)

    def test_orthonormal_data_oracle(self):
        n = 3
        X, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((6, n)))
        optimum = n / 2.0 * (1.0 + math.log(2.0))
        args = (np.zeros(6), np.eye(6), 1.0, np.ones(n))
        self.assertAlmostEqual(w_objective(X, np.eye(n) / math.sqrt(2.0), *args), optimum, places=10)
        result = mstep_W(X, *args, np.eye(n))
        self.assertLessEqual(result.objective_after, optimum + 1e-6)

    def test_never_increases_objective(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((10, 5))
        current = rng.standard_normal((5, 5)) + 2.0 * np.eye(5)
        args = (rng.standard_normal(10) * 0.1, np.eye(10) * 2.0, 0.7, rng.uniform(0.5, 1.5, 5))
        result = mstep_W(X, *args, current, k=3, traceWeight=0.5)
        self.assertLessEqual(result.objective_after, result.objective_before + 1e-10)
        self.assertAlmostEqual(result.objective_after,
                               w_objective(X, result.W, *args, k=3, traceWeight=0.5), places=8)

    def test_keeps_w_when_no_decrease(self):
        X = np.array([[1.0]])
        with mock.patch('mvtlasso.models.mvtlasso.Optimizer') as optimizer:
            optimizer.return_value.gradient_norm.return_value = 1.0
            optimizer.return_value.step.return_value = False
            optimizer.return_value.Q.numpy.return_value = np.eye(1)
            optimizer.return_value.u.numpy.return_value = np.array([5.0])
            result = mstep_W(X, np.zeros(1), np.eye(1), 1.0, np.ones(1), np.eye(1), k=1)
        self.assertFalse(result.success)
        np.testing.assert_array_equal(result.W, np.eye(1))


class TestLikelihood(unittest.TestCase):

    def test_reduces_to_tlasso_objective(self):
        X = chainData(p=4, n=30, seed=4)
        view = ExpressionView.fromMatrix(X)
        Theta = np.eye(4) + 0.1
        mu = X.mean(axis=1)
        model = ModelState.create([ViewParams(np.eye(30), mu, 1.0, 30)], Theta, 3.0, 0.2)
        self.assertAlmostEqual(penalized_loglik([view], model),
                               tlasso_objective(X, mu, Theta, 3.0, 0.2), places=8)

    def test_jacobian_term(self):
        X = chainData(p=4, n=6, seed=5)
        view = ExpressionView.fromMatrix(X)
        W = np.eye(6)
        model = ModelState.create([ViewParams(W, np.zeros(4), 1.0, 3)], np.eye(4), 3.0, 0.2)
        scaled = ModelState.create([ViewParams(2.0 * W, np.zeros(4), 1.0, 3)], np.eye(4), 3.0, 0.2)
        base = penalized_loglik([ExpressionView.fromMatrix(2.0 * X)], model)
        self.assertAlmostEqual(penalized_loglik([view], scaled) - base, 6 * math.log(2.0), places=8)

    def test_prior_scales_with_signal_count(self):
        view = ExpressionView.fromMatrix(chainData(p=4, n=6, seed=6))
        Theta = np.eye(4) + 0.1
        models = [ModelState.create([ViewParams(np.eye(6), np.zeros(4), 1.0, 3)], Theta, 3.0, lam)
                  for lam in (0.2, 0.5)]
        # K = 3 signal columns, ||Theta||_1 = 5.6
        self.assertAlmostEqual(penalized_loglik([view], models[1]) - penalized_loglik([view], models[0]),
                               -1.5 * 0.3 * 5.6, places=8)

    def test_complete_loglik_is_finite(self):
        X = chainData(p=4, n=6, seed=6)
        view = ExpressionView.fromMatrix(X)
        model = ModelState.create([ViewParams(np.eye(6), np.zeros(4), 1.0, 4)], np.eye(4), 3.0, 0.2)
        value = complete_loglik([view], model, estep([view], model))
        self.assertTrue(np.isfinite(value))


class TestFit(unittest.TestCase):

    def identitySettings(self, lam, n, **kwargs):
        return MvtlassoSettings(lam=lam, k_per_view=(n,), w_init="identity", update_w=False,
                                glasso_tol=1e-8, **kwargs)

    def test_gaussian_limit_matches_glasso(self):
        X = np.random.default_rng(7).standard_normal((10, 500))
        view = ExpressionView.fromMatrix(X)
        report = fit([view], self.identitySettings(0.05, 500, nu=1e6, max_em_iter=3))
        expected = solve(np.cov(X, bias=True), GlassoSettings(lam=0.05, tol=1e-8))
        np.testing.assert_allclose(report.model.Theta, expected.Theta, atol=1e-3)

    def test_scale_identifiability(self):
        c = 3.0
        lam = 0.05
        matches = 0
        for seed in range(5):
            X = chainData(p=8, n=60, seed=seed)
            settings = dict(em_tol=0.0, max_em_iter=10)
            base = fit([ExpressionView.fromMatrix(X)], self.identitySettings(lam, 60, **settings))
            scaled = fit([ExpressionView.fromMatrix(c * X)],
                         self.identitySettings(lam * c ** 2, 60, **settings))
            np.testing.assert_allclose(scaled.model.Theta * c ** 2, base.model.Theta, rtol=1e-4, atol=1e-6)
            matches += base.estimate.edges == scaled.estimate.edges
        self.assertGreaterEqual(matches, 4)

    @unittest.skipUnless(SLOW, "set MVTLASSO_SLOW_TESTS=1 to run")
    def test_signal_scale_identifiability_with_ica_basis(self):
        c = 3.0
        lam = 0.1

        def scaledSignal(view, d, k, settings):
            basis = np.array(_initialBasis(view, d, k, settings))
            basis[:, :k] *= c
            return basis

        matches = 0
        for seed in range(20):
            views, _ = generate(SynthSpec(p=30, n=20, k=12, r=8, D=1, edge_prob=0.02, seed=seed))
            settings = dict(k_per_view=(12,), update_w=False, em_tol=0.0, max_em_iter=5, glasso_tol=1e-8)
            base = fit(views, MvtlassoSettings(lam=lam, **settings))
            with mock.patch('mvtlasso.models.mvtlasso._initialBasis', side_effect=scaledSignal):
                scaled = fit(views, MvtlassoSettings(lam=lam * c ** 2, **settings))
            matches += base.estimate.edges == scaled.estimate.edges
        self.assertGreaterEqual(matches, 18)

    def test_ica_pipeline_ascends(self):
        views, _ = generate(SynthSpec(p=30, n=12, k=8, r=4, D=2, edge_prob=0.05, seed=1))
        settings = MvtlassoSettings(lam=0.1, k_per_view=(8, 8), max_em_iter=4, glasso_tol=1e-8)
        report = fit(views, settings)
        self.assertEqual(len(report.q_trace), report.iterations)
        self.assertEqual(len(report.loglik_trace), report.iterations)
        self.assertEqual([params.k for params in report.model.views], [8, 8])
        self.assertTrue(np.all(np.linalg.eigvalsh(report.model.Theta) > 0))
        trace = report.loglik_trace
        for t in range(1, len(trace)):
            if report.w_success[t]:
                self.assertGreaterEqual(trace[t], trace[t - 1] - 1e-6 * max(1.0, abs(trace[t - 1])))
        for gain, q, success in zip(report.q_gain_trace, report.q_trace, report.w_success):
            if success:
                self.assertGreaterEqual(gain, -1e-6 * max(1.0, abs(q)))

    def test_more_samples_than_genes(self):
        views, _ = generate(SynthSpec(p=20, n=30, k=10, r=20, D=2, edge_prob=0.05, seed=5))
        with self.assertLogs('mvtlasso.models.mvtlasso', level='WARNING') as logs:
            report = fit(views, MvtlassoSettings(lam=0.1, k_per_view=(10, 10), max_em_iter=2))
        self.assertTrue(any("completing the ICA basis" in line for line in logs.output))
        self.assertTrue(np.all(np.linalg.eigvalsh(report.model.Theta) > 0))
        self.assertTrue(np.all(np.isfinite(report.loglik_trace)))
        for basis, params in zip(report.bases, report.model.views):
            self.assertEqual(basis.shape, (30, 30))
            self.assertEqual(params.W.shape, (30, 30))

    def test_rank_deficient_basis(self):
        X = np.random.default_rng(8).standard_normal((5, 8))
        view = ExpressionView.fromMatrix(X)
        settings = MvtlassoSettings(lam=0.1, k_per_view=(2,))
        basis = _initialBasis(view, 0, 2, settings)
        self.assertEqual(basis.shape, (8, 8))
        self.assertLess(np.linalg.cond(basis / np.linalg.norm(basis, axis=0)[None, :]), 1e8)
        np.testing.assert_allclose(X @ basis[:, 5:], np.zeros((5, 3)), atol=1e-8)
        self.assertRaises(ValidationError, lambda: _initialBasis(view, 0, 5, settings))

    def test_deterministic(self):
        views, _ = generate(SynthSpec(p=20, n=10, k=6, r=4, D=1, edge_prob=0.05, seed=2))
        settings = MvtlassoSettings(lam=0.1, k_per_view=(6,), max_em_iter=2)
        first, second = fit(views, settings), fit(views, settings)
        np.testing.assert_array_equal(first.model.Theta, second.model.Theta)
        self.assertEqual(first.estimate.edges, second.estimate.edges)

    def test_unconverged_run_warns(self):
        view = ExpressionView.fromMatrix(chainData(p=6, n=40, seed=5))
        with self.assertWarns(ConvergenceWarning):
            report = fit([view], self.identitySettings(0.1, 40, em_tol=0.0, max_em_iter=2))
        self.assertFalse(report.converged)
        self.assertEqual(report.iterations, 2)

    def test_rank_out_of_range(self):
        views, _ = generate(SynthSpec(p=20, n=10, k=6, r=4, D=1, seed=3))
        with self.assertRaises(StageError) as context:
            fit(views, MvtlassoSettings(lam=0.1, k_per_view=(11,)))
        self.assertEqual(context.exception.stage, "rank")
        self.assertIsInstance(context.exception.cause, ValidationError)

    def test_hook_receives_scalars(self):
        views, _ = generate(SynthSpec(p=20, n=10, k=6, r=4, D=1, seed=4))
        hook = mock.Mock()
        report = fit(views, MvtlassoSettings(lam=0.1, k_per_view=(6,), max_em_iter=2), hook=hook)
        hook.add_scalar.assert_any_call("fit/loglik", report.loglik_trace[-1])
        self.assertEqual(hook.stepReset.call_count, report.iterations)

    def test_settings_validation(self):
        self.assertRaises(ValidationError, lambda: MvtlassoSettings(lam=0.1, nu=2.0))
        self.assertRaises(ValidationError, lambda: MvtlassoSettings(lam=0.1, w_init="pca"))
        self.assertRaises(ValidationError, lambda: MvtlassoSettings(lam=0.1, k_per_view="some"))
        self.assertRaises(ValidationError, lambda: MvtlassoSettings(lam=0.1, warm_start_iter=0))

    @unittest.skipUnless(SLOW, "set MVTLASSO_SLOW_TESTS=1 to run")
    def test_auto_rank_desk_scale(self):
        views, _ = generate(SynthSpec(p=50, n=60, k=30, r=30, D=2, seed=0))
        report = fit(views, MvtlassoSettings(lam=0.1, max_em_iter=10))
        self.assertTrue(all(1 <= params.k <= 59 for params in report.model.views))
        self.assertGreater(report.iterations, 0)
