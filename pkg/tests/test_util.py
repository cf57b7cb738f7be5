import argparse
import os
import unittest

import mock
import numpy as np

from mvtlasso.util import (levelDown, rngStream, resolveThreads, str2bool, edgeSetFromSupport,
                           TensorBoardHook, nullTensorBoardHook, methodProfiler, blockProfiler,
                           summarizeLabelNodes, resetProfilingData, enableProfiling)
from mvtlasso.util.profiler import profilingData


class TestRngStream(unittest.TestCase):

    def test_same_key_same_stream(self):
        self.assertEqual(rngStream(5, 1, 2).random(), rngStream(5, 1, 2).random())

    def test_keys_are_independent(self):
        self.assertNotEqual(rngStream(5, 1, 2).random(), rngStream(5, 2, 1).random())
        self.assertNotEqual(rngStream(5).random(), rngStream(6).random())


class TestResolveThreads(unittest.TestCase):

    def test_explicit_value(self):
        self.assertEqual(resolveThreads(3), 3)

    @mock.patch.dict(os.environ, {"MVTLASSO_THREADS": "2"})
    def test_environment(self):
        self.assertEqual(resolveThreads(None), 2)

    @mock.patch.dict(os.environ, {}, clear=True)
    @mock.patch('mvtlasso.util.multiprocessing.cpu_count', return_value=7)
    def test_all_cores(self, mock_cpu_count):
        self.assertEqual(resolveThreads(None), 7)
        self.assertEqual(resolveThreads(0), 7)


class TestArgs(unittest.TestCase):

    def test_str2bool(self):
        self.assertTrue(str2bool("yes"))
        self.assertFalse(str2bool("0"))
        self.assertRaises(argparse.ArgumentTypeError, lambda: str2bool("maybe"))

    def test_level_down(self):
        parsed = argparse.Namespace(out="o", bench_seeds=3, bench_methods="glasso", seeds=9)
        section = levelDown(parsed, "benchArgs", ["seeds", "methods"], prefix="bench_")
        self.assertEqual(dict(section), {"seeds": 3, "methods": "glasso"})
        self.assertFalse(hasattr(parsed, "bench_seeds"))
        self.assertEqual(parsed.seeds, 9)
        self.assertIs(parsed.benchArgs, section)

    def test_edge_set_from_support(self):
        M = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, -1.0], [2.0, -1.0, 1.0]])
        self.assertEqual(edgeSetFromSupport(M), frozenset({(0, 2), (1, 2)}))


class TestTensorBoardHook(unittest.TestCase):

    def test_null_hook_writes_nothing(self):
        with mock.patch('tensorboardX.SummaryWriter.add_scalar') as mock_add:
            nullTensorBoardHook.add_scalar("fit/loglik", 1.0)
            nullTensorBoardHook.add_histogram("fit/tau", np.ones(3))
            nullTensorBoardHook.close()
        self.assertEqual(0, mock_add.call_count)

    @mock.patch('tensorboardX.SummaryWriter.__init__', return_value=None)
    def test_scalars_carry_step(self, mock_init):
        hook = TensorBoardHook(2, "runs/x")
        mock_init.assert_called_once_with("runs/x")
        with mock.patch('tensorboardX.SummaryWriter.add_scalar') as mock_add, \
                mock.patch('tensorboardX.SummaryWriter.add_histogram') as mock_histogram:
            hook.stepReset(step=3)
            hook.add_scalar("fit/q", np.float64(2.5))
            hook.add_histogram("fit/tau", [1.0])
            hook.stepNext()
            hook.add_histogram("fit/tau", [1.0])
        mock_add.assert_called_once_with("fit/q", 2.5, 3)
        mock_histogram.assert_called_once_with("fit/tau", [1.0], 4)


class TestProfiler(unittest.TestCase):

    def setUp(self):
        resetProfilingData()

    def tearDown(self):
        enableProfiling(False)
        resetProfilingData()

    def test_disabled_collects_nothing(self):
        enableProfiling(False)
        with blockProfiler("estep"):
            pass
        self.assertEqual(profilingData[0]["BreakUp"], [])

    def test_nested_blocks_summary(self):
        enableProfiling(True)

        @methodProfiler
        def mstep():
            with blockProfiler("glasso"):
                return 5

        with blockProfiler("fit"):
            self.assertEqual(mstep(), 5)
            mstep()
        self.assertEqual(len(profilingData), 1)

        summary = summarizeLabelNodes(profilingData[0])
        fitSummary = summary["BreakUp"]["fit"]
        self.assertEqual(fitSummary["Count"], 1)
        stepSummary = fitSummary["BreakUp"][mstep.__qualname__]
        self.assertEqual(stepSummary["Count"], 2)
        self.assertEqual(stepSummary["BreakUp"]["glasso"]["Count"], 2)
        self.assertGreaterEqual(fitSummary["MilliSeconds"], stepSummary["MilliSeconds"])
        self.assertAlmostEqual(summary["MilliSeconds"], fitSummary["MilliSeconds"])

    def test_summary_rejects_other_types(self):
        self.assertRaises(TypeError, lambda: summarizeLabelNodes("fit"))
