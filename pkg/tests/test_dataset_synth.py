import unittest

import numpy as np

from mvtlasso.core import ValidationError
from mvtlasso.dataset import SynthSpec, gen_theta, gen_views, generate, geneIds, sampleIds


class TestGenTheta(unittest.TestCase):

    def test_no_edges(self):
        Theta, edges = gen_theta(5, 0.0, seed=0)
        np.testing.assert_array_equal(Theta, np.eye(5))
        self.assertEqual(edges, frozenset())

    def test_diagonal_is_one_plus_degree(self):
        Theta, edges = gen_theta(40, 0.05, seed=1)
        degree = np.sum((Theta != 0) & ~np.eye(40, dtype=bool), axis=1)
        np.testing.assert_array_equal(np.diag(Theta) - 1.0, degree)
        for i, j in edges:
            self.assertIn(Theta[i, j], (-1.0, 1.0))

    def test_positive_definite(self):
        for seed in range(20):
            Theta, _ = gen_theta(30, 0.1, seed=seed)
            self.assertGreater(np.linalg.eigvalsh(Theta)[0], 0.0)

    def test_edges_match_support(self):
        Theta, edges = gen_theta(25, 0.1, seed=2)
        rows, cols = np.nonzero(np.triu(Theta, 1))
        self.assertEqual(edges, frozenset(zip(rows.tolist(), cols.tolist())))

    def test_deterministic(self):
        first, _ = gen_theta(20, 0.1, seed=3)
        second, _ = gen_theta(20, 0.1, seed=3)
        np.testing.assert_array_equal(first, second)

    def test_invalid_probability(self):
        self.assertRaises(ValidationError, lambda: gen_theta(5, 0.5, seed=0))


class TestGenViews(unittest.TestCase):

    def test_shapes_and_ids(self):
        spec = SynthSpec(p=12, n=8, k=5, r=3, D=2, edge_prob=0.1, seed=4)
        views, truth = generate(spec)
        self.assertEqual(len(views), 2)
        self.assertEqual([view.view_id for view in views], ["view1", "view2"])
        for d, view in enumerate(views):
            self.assertEqual(view.data.shape, (12, 8))
            self.assertEqual(list(view.gene_ids), geneIds(12))
            self.assertEqual(list(view.sample_ids), sampleIds(d, 8))
            self.assertEqual(truth.S[d].shape, (12, 5))
            self.assertEqual(truth.Z[d].shape, (12, 3))
            np.testing.assert_allclose(view.data, truth.S[d] @ truth.A[d] + truth.Z[d] @ truth.B[d], atol=1e-12)

    def test_mixing_is_invertible(self):
        spec = SynthSpec(p=10, n=6, k=4, r=2, seed=5, edge_prob=0.1)
        _, truth = generate(spec)
        mixing = np.vstack([truth.A[0], truth.B[0]])
        self.assertLess(np.linalg.cond(mixing), 1e8)

    def test_signal_only(self):
        spec = SynthSpec.fromSamples(10, 6, 6, seed=6, edge_prob=0.1)
        views, truth = generate(spec)
        self.assertEqual(truth.Z[0].shape, (10, 0))
        np.testing.assert_allclose(views[0].data, truth.S[0] @ truth.A[0], atol=1e-12)

    def test_deterministic(self):
        spec = SynthSpec(p=10, n=6, k=4, r=2, D=2, seed=7, edge_prob=0.1)
        first, _ = generate(spec)
        second, _ = generate(spec)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.data, b.data)

    def test_views_differ(self):
        views, _ = generate(SynthSpec(p=10, n=6, k=4, r=2, D=2, seed=8, edge_prob=0.1))
        self.assertFalse(np.array_equal(views[0].data, views[1].data))

    def test_theta_shape_checked(self):
        spec = SynthSpec(p=10, n=6, k=4, r=2, seed=9)
        self.assertRaises(ValidationError, lambda: gen_views(spec, np.eye(4)))


class TestSynthSpec(unittest.TestCase):

    def test_rank_above_samples(self):
        with self.assertRaises(ValidationError) as context:
            SynthSpec.fromSamples(10, 10, 11)
        self.assertIn("k=11", str(context.exception))

    def test_inconsistent_split(self):
        self.assertRaises(ValidationError, lambda: SynthSpec(p=10, n=6, k=4, r=1))

    def test_edge_probability_range(self):
        self.assertRaises(ValidationError, lambda: SynthSpec(p=10, n=6, k=4, r=2, edge_prob=0.0))

    def test_location(self):
        spec = SynthSpec(p=3, n=4, k=2, r=2, mu=(1, 2, 3))
        np.testing.assert_array_equal(spec.location(), [1.0, 2.0, 3.0])
        self.assertRaises(ValidationError, lambda: SynthSpec(p=3, n=4, k=2, r=2, mu=(1, 2)))
