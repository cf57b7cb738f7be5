"""
Signal rank preselection by permutation parallel analysis.
"""
import logging

import numpy as np
from joblib import Parallel, delayed

from ..core.errors import ValidationError
from ..core.types import ExpressionView
from ..util import rngStream, resolveThreads

logger = logging.getLogger(__name__)

def _nullSingularValues(Xc, seed, replicate):
    # Each gene's values are shuffled across samples independently of every other gene.
    permuted = rngStream(seed, replicate).permuted(Xc, axis=1)
    return np.linalg.svd(permuted, compute_uv=False)

def leadingExceedances(observed, thresholds):
    """
    Length of the leading run of observed singular values above their null thresholds.
    Exceedances after the first miss are not counted.
    """
    exceeds = np.asarray(observed) > np.asarray(thresholds)
    return int(np.argmin(exceeds)) if not np.all(exceeds) else len(exceeds)

def select_rank(view, n_permutations=49, quantile=0.95, seed=0, n_jobs=1):
    """
    Number of leading singular values of the row centered view that exceed the given
    quantile of their counterparts in row-wise permuted copies, clamped to [1, n - 1].

    Args:
        view: ExpressionView or p x n matrix.
        n_permutations (int): null replicates, at least 19.
        quantile (float): null quantile each observed singular value must exceed.
        seed (int): replicate b uses the stream rngStream(seed, b).
        n_jobs (int): joblib workers; None resolves from MVTLASSO_THREADS.
    """
    if n_permutations < 19:
        raise ValidationError("n_permutations must be >= 19, got {0}.".format(n_permutations))
    if not 0 < quantile < 1:
        raise ValidationError("quantile must lie in (0, 1), got {0}.".format(quantile))
    X = view.data if isinstance(view, ExpressionView) else np.asarray(view, dtype=float)
    n = X.shape[1]
    if n <= 2:
        return 1

    Xc = X - X.mean(axis=1)[:, None]
    observed = np.linalg.svd(Xc, compute_uv=False)
    nJobs = resolveThreads(n_jobs)
    null = Parallel(n_jobs=nJobs)(delayed(_nullSingularValues)(Xc, seed, b) for b in range(n_permutations))
    thresholds = np.quantile(np.stack(null), quantile, axis=0)

    leading = leadingExceedances(observed, thresholds)
    k = int(min(max(leading, 1), n - 1))
    logger.info("Parallel analysis: {0} leading singular values above the {1} null quantile; k={2}".format(
        leading, quantile, k))
    return k
