"""
Stability selection over any registered estimator.

Every replicate draws floor(fraction * n_d) samples per view without replacement and
refits the whole penalty grid on that subsample; an edge's selection probability at a
penalty is the share of replicates that recovered it.
"""
import logging, math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.errors import ValidationError
from ..core.types import SelectionProbabilityMatrix, alignViews
from ..evaluator.bench import lambda_grid
from ..evaluator.estimators import FIT_ERRORS
from ..util import rngStream, resolveThreads

logger = logging.getLogger(__name__)

# A penalty is flagged invalid when more than this share of its replicates failed.
MAX_FAILED_SHARE = 0.20

# Stream namespace of the subsample draws.
_SUBSAMPLE_STREAM = 2

@dataclass(frozen=True)
class StabilitySpec:
    """
    Args:
        lambdas (list): penalties, or None for grid_count log-spaced points below the
            estimator's lambda_max on the full data.
        n_replicates (int): subsampled refits N.
        subsample_fraction (float): share of each view's samples kept per replicate.
        threshold (float): edges are selected when their probability exceeds it.
        seed (int): root of the subsample streams.
        n_jobs (int): joblib workers; <= 0 uses all cores.
    """
    lambdas: tuple = None
    n_replicates: int = 100
    subsample_fraction: float = 0.9
    threshold: float = 0.5
    seed: int = 0
    n_jobs: int = 1
    grid_count: int = 15
    grid_ratio: float = 1e-2

    def __post_init__(self):
        if self.lambdas is not None:
            lambdas = tuple(float(lam) for lam in self.lambdas)
            if not lambdas or any(not lam > 0 for lam in lambdas):
                raise ValidationError("Penalties must be a non-empty list of positive values.")
            object.__setattr__(self, "lambdas", lambdas)
        if self.n_replicates < 1:
            raise ValidationError("n_replicates must be >= 1, got {0}.".format(self.n_replicates))
        if not 0 < self.subsample_fraction < 1:
            raise ValidationError("subsample_fraction must lie in (0, 1), got {0}.".format(self.subsample_fraction))
        if not 0 < self.threshold < 1:
            raise ValidationError("threshold must lie in (0, 1), got {0}.".format(self.threshold))
        if self.grid_count < 1 or not 0 < self.grid_ratio <= 1:
            raise ValidationError("Need grid_count >= 1 and grid_ratio in (0, 1].")

@dataclass(frozen=True)
class StabilityResult:
    """
    Args:
        matrix (SelectionProbabilityMatrix): selection frequencies at one penalty.
        selected (frozenset): index pairs with probability strictly above the threshold.
        failures (int): replicates whose fit failed; they count as selecting no edge.
        valid (bool): False when more than 20% of the replicates failed.
    """
    matrix: SelectionProbabilityMatrix
    selected: frozenset
    failures: int
    valid: bool

    @property
    def lam(self):
        return self.matrix.lam

def subsampleSizes(views, fraction):
    sizes = []
    for view in views:
        size = int(math.floor(fraction * view.n))
        if size < 2:
            raise ValidationError("View {0}: a {1} subsample of {2} samples keeps fewer than 2.".format(
                view.view_id, fraction, view.n))
        sizes.append(size)
    return sizes

def subsample(views, sizes, seed, replicate):
    """ Column subsample of every view for one replicate; streams keyed by (replicate, view). """
    drawn = []
    for d, (view, size) in enumerate(zip(views, sizes)):
        rng = rngStream(seed, _SUBSAMPLE_STREAM, replicate, d)
        indices = np.sort(rng.choice(view.n, size=size, replace=False))
        drawn.append(view.selectSamples(indices))
    return drawn

def _replicateEdges(estimator, views, sizes, lambdas, seed, replicate):
    drawn = subsample(views, sizes, seed, replicate)
    try:
        estimates = estimator.fit_path(drawn, lambdas, seed + replicate)
    except FIT_ERRORS as e:
        logger.warning("Replicate {0} failed: {1}".format(replicate, e))
        return [None] * len(lambdas)
    return [None if estimate is None else estimate.edges for estimate in estimates]

def run(views, estimator, spec):
    """
    Selection probabilities for every penalty of the grid.

    Args:
        views (list of ExpressionView): views sharing the gene axis.
        estimator (Estimator): a registry estimator with its options.
        spec (StabilitySpec): grid, replicate count, fraction and threshold.

    Returns:
        dict mapping each penalty, in grid order, to its StabilityResult.

    Raises:
        ValidationError: a view keeps fewer than 2 samples after subsampling.
    """
    views = alignViews(views)
    sizes = subsampleSizes(views, spec.subsample_fraction)
    lambdas = list(spec.lambdas) if spec.lambdas is not None else \
        [float(lam) for lam in lambda_grid(estimator, views, spec.grid_count, spec.grid_ratio)]
    p = views[0].p
    N = spec.n_replicates

    perReplicate = Parallel(n_jobs=resolveThreads(spec.n_jobs))(
        delayed(_replicateEdges)(estimator, views, sizes, lambdas, spec.seed, replicate)
        for replicate in tqdm(range(N), desc="stability", disable=None))

    results = {}
    for index, lam in enumerate(lambdas):
        counts = np.zeros((p, p))
        failures = 0
        for edgeSets in perReplicate:
            edges = edgeSets[index]
            if edges is None:
                failures += 1
                continue
            for i, j in edges:
                counts[i, j] += 1
                counts[j, i] += 1
        matrix = SelectionProbabilityMatrix(counts / N, lam, N)
        valid = failures <= MAX_FAILED_SHARE * N
        if not valid:
            logger.warning("lambda={0:.4g}: {1} of {2} replicates failed; result flagged invalid.".format(
                lam, failures, N))
        selected = matrix.selected(spec.threshold)
        logger.info("lambda={0:.4g}: {1} edges selected".format(lam, len(selected)))
        results[lam] = StabilityResult(matrix, selected, failures, valid)
    return results

def union_graph(results, valid_only=True):
    """ Union of the selected edges over all penalties. """
    edges = set()
    for result in results.values():
        if valid_only and not result.valid:
            continue
        edges |= result.selected
    return frozenset(edges)

def count_against_truth(results, true_edges):
    """
    Per penalty (lam, true positives, selected edges), in grid order.
    """
    truth = {(min(i, j), max(i, j)) for i, j in true_edges}
    return [(lam, len(result.selected & truth), len(result.selected)) for lam, result in results.items()]
