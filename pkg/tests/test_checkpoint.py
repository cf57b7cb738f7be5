import unittest
import os
import shutil
import tempfile

import mock
import numpy as np

from mvtlasso.core import ViewParams, ModelState, TauMatrix
from mvtlasso.models import FitReport
from mvtlasso.util.checkpoint import Checkpoint


class TestCheckpoint(unittest.TestCase):

    def setUp(self):
        self.folder = tempfile.mkdtemp()
        views = [ViewParams(np.array([[2.0, 0.5], [0.0, 1.0]]), np.array([0.1, -0.2, 0.3]), 1.5, 1),
                 ViewParams(np.eye(3), np.array([1.0, 2.0, 3.0]), 0.5, 2)]
        Theta = np.array([[2.0, -0.3, 0.0], [-0.3, 1.5, 0.2], [0.0, 0.2, 1.0]])
        self.model = ModelState.create(views, Theta, 3.0, 0.1)

    def tearDown(self):
        shutil.rmtree(self.folder)

    def test_path_error(self):
        ckpt = Checkpoint(None, [], [])
        self.assertRaises(LookupError, lambda: ckpt.path)

    def test_save_and_load(self):
        path = os.path.join(self.folder, "checkpoint")
        ckpt = Checkpoint(self.model, ["a", "b"], ["g1", "g2", "g3"], {"iterations": 3})
        self.assertEqual(ckpt.save(path), path)
        self.assertEqual(ckpt.path, path)

        loaded = Checkpoint.load(path)
        np.testing.assert_array_equal(loaded.model.Theta, self.model.Theta)
        for original, restored in zip(self.model.views, loaded.model.views):
            np.testing.assert_array_equal(restored.W, original.W)
            np.testing.assert_array_equal(restored.mu, original.mu)
            self.assertEqual(restored.sigma, original.sigma)
            self.assertEqual(restored.k, original.k)
        self.assertEqual(loaded.model.nu, 3.0)
        self.assertEqual(loaded.view_ids, ["a", "b"])
        self.assertEqual(loaded.gene_ids, ["g1", "g2", "g3"])
        self.assertEqual(loaded.traces, {"iterations": 3})
        self.assertEqual(loaded.path, path)

    def test_save_replaces_folder(self):
        path = os.path.join(self.folder, "checkpoint")
        os.makedirs(path)
        with open(os.path.join(path, "stale.txt"), "w") as fout:
            fout.write("old")
        Checkpoint(self.model, ["a", "b"], ["g1", "g2", "g3"]).save(path)
        self.assertEqual(sorted(os.listdir(path)), sorted([Checkpoint.ARRAYS_NAME, Checkpoint.STATE_NAME]))

    @mock.patch('mvtlasso.util.checkpoint.np')
    def test_save_writes_arrays(self, mock_np):
        path = os.path.join(self.folder, "checkpoint")
        Checkpoint(self.model, ["a", "b"], ["g1", "g2", "g3"]).save(path)
        self.assertEqual(1, mock_np.savez.call_count)
        args, kwargs = mock_np.savez.call_args
        self.assertEqual(args[0], os.path.join(path, Checkpoint.ARRAYS_NAME))
        self.assertEqual(sorted(kwargs), ["Theta", "W_0", "W_1", "mu_0", "mu_1"])

    def test_from_report(self):
        view = mock.Mock(view_id="view1", gene_ids=("g1", "g2", "g3"))
        report = FitReport(model=self.model, tau=TauMatrix((np.ones(2), np.ones(3))),
                           q_trace=[1.0, 2.0], loglik_trace=[-3.0, -2.5], converged=True, iterations=2,
                           q_gain_trace=[0.5, 0.1], w_success=[True, np.bool_(False)])
        ckpt = Checkpoint.fromReport(report, [view, view])
        self.assertEqual(ckpt.traces["iterations"], 2)
        self.assertIs(ckpt.traces["w_success"][1], False)
        self.assertEqual(ckpt.gene_ids, ["g1", "g2", "g3"])
