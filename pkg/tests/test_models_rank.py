import os
import unittest

import mock
import numpy as np

from mvtlasso.core import ValidationError, ExpressionView
from mvtlasso.models import select_rank
from mvtlasso.models.rank import leadingExceedances

SLOW = os.environ.get("MVTLASSO_SLOW_TESTS") == "1"


class TestSelectRank(unittest.TestCase):

    def test_two_samples(self):
        self.assertEqual(select_rank(np.random.default_rng(0).standard_normal((10, 2))), 1)

    def test_pure_noise(self):
        for seed in range(3):
            X = np.random.default_rng(seed).standard_normal((100, 30))
            self.assertLessEqual(select_rank(X, seed=seed), 2)

    def test_planted_rank(self):
        rng = np.random.default_rng(10)
        U, _ = np.linalg.qr(rng.standard_normal((100, 5)))
        V, _ = np.linalg.qr(rng.standard_normal((30, 5)))
        signal = U @ np.diag([200.0, 190.0, 180.0, 170.0, 160.0]) @ V.T
        X = signal + rng.standard_normal((100, 30))
        self.assertEqual(select_rank(ExpressionView.fromMatrix(X), seed=1), 5)

    def test_never_reaches_n(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((50, 4)) @ np.diag([50.0, 40.0, 30.0, 20.0])
        self.assertLessEqual(select_rank(X), 3)

    def test_deterministic_under_workers(self):
        X = np.random.default_rng(12).standard_normal((40, 12))
        self.assertEqual(select_rank(X, seed=4, n_jobs=1), select_rank(X, seed=4, n_jobs=2))

    def test_leading_run_only(self):
        self.assertEqual(leadingExceedances([10.0, 8.0, 6.0, 4.0], [1.0, 1.0, 7.0, 1.0]), 2)
        self.assertEqual(leadingExceedances([10.0, 8.0], [1.0, 1.0]), 2)
        self.assertEqual(leadingExceedances([1.0, 9.0], [2.0, 2.0]), 0)

    def test_exceedances_after_a_miss_are_ignored(self):
        rng = np.random.default_rng(13)
        basis, _ = np.linalg.qr(np.hstack([np.ones((6, 1)), rng.standard_normal((6, 5))]))
        U, _ = np.linalg.qr(rng.standard_normal((10, 5)))
        X = U @ np.diag([10.0, 8.0, 6.0, 4.0, 2.0]) @ basis[:, 1:].T
        thresholds = np.array([1.0, 1.0, 11.0, 1.0, 1.0, 1.0])
        with mock.patch('mvtlasso.models.rank._nullSingularValues', lambda Xc, seed, replicate: thresholds):
            self.assertEqual(select_rank(X, n_permutations=19), 2)

    @unittest.skipUnless(SLOW, "set MVTLASSO_SLOW_TESTS=1 to run")
    def test_calibration_over_seeds(self):
        planted, noise = 0, 0
        for seed in range(50):
            rng = np.random.default_rng(1000 + seed)
            U, _ = np.linalg.qr(rng.standard_normal((100, 5)))
            V, _ = np.linalg.qr(rng.standard_normal((30, 5)))
            X = U @ np.diag([200.0, 190.0, 180.0, 170.0, 160.0]) @ V.T + rng.standard_normal((100, 30))
            planted += select_rank(X, seed=seed) == 5
            noise += select_rank(rng.standard_normal((100, 30)), seed=seed) <= 2
        self.assertGreaterEqual(planted, 45)
        self.assertGreaterEqual(noise, 45)

    def test_validation(self):
        X = np.ones((5, 5))
        self.assertRaises(ValidationError, lambda: select_rank(X, n_permutations=10))
        self.assertRaises(ValidationError, lambda: select_rank(X, quantile=1.0))
