import os, argparse, multiprocessing
from enum import IntEnum

import numpy as np
from numpy.random import SeedSequence, Philox, Generator
from orderedattrdict import AttrDict

from .profiler import (methodProfiler, blockProfiler, summarizeLabelNodes,
            resetProfilingData, enableProfiling)

class AppMode(IntEnum):
    Simulate=0
    Fit=1
    Stability=2
    Bench=3
    Evaluate=4

def str2bool(v):
    """
    Converts string to bool.

    This is used as type in argparse arguments to parse command line arguments.
    """
    if isinstance(v, bool):
        return v
    if v.lower() in ('yes', 'true', 't', 'y', '1'):
        return True
    elif v.lower() in ('no', 'false', 'f', 'n', '0'):
        return False
    else:
        raise argparse.ArgumentTypeError('Boolean value expected.')

def levelDown(parsedArgs, label, keys, prefix=""):
        """
        Command line arguments parsed using argparse are not hierarchical. This
        method helps them make hierarchical.

        The input parsedArgs is a config tree. We move each key in keys=["k1", "k2", "k3",
        ...] currently present under parsedArgs to a level below under parsedArgs[label].
        Keys stored in parsedArgs as prefix + key are moved under their bare name.
        """
        lowerLevelDict = AttrDict()
        for key in keys:
            if hasattr(parsedArgs, prefix + key):
                lowerLevelDict[key] = getattr(parsedArgs, prefix + key)
                delattr(parsedArgs, prefix + key)

        setattr(parsedArgs, label, lowerLevelDict)
        return lowerLevelDict

def rngStream(seed, *key):
    """
    Returns a counter based (Philox, 64 bit) generator for the substream identified by
    (seed, key...). Streams with distinct keys are statistically independent, so work
    split by key (view, column block, replicate) is reproducible in any execution order.
    """
    keyTuple = tuple(int(k) for k in key)
    return Generator(Philox(SeedSequence(int(seed), spawn_key=keyTuple)))

def resolveThreads(threads=None):
    """
    Worker count: explicit value, else MVTLASSO_THREADS, else all logical cores.
    """
    if threads is None:
        envValue = os.environ.get("MVTLASSO_THREADS")
        if envValue:
            threads = int(envValue)
    if threads is None or threads <= 0:
        threads = multiprocessing.cpu_count()
    return threads

def edgeSetFromSupport(M, threshold=0.0):
    """
    Unordered index pairs (i, j), i < j, where |M_ij| > threshold.
    """
    rows, cols = np.nonzero(np.abs(np.triu(M, 1)) > threshold)
    return frozenset((int(i), int(j)) for i, j in zip(rows, cols))

from .tensorboard import TensorBoardHook, nullTensorBoardHook
from .checkpoint import Checkpoint
