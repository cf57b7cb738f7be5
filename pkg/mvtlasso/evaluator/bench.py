"""
ROC benchmarking of precision estimators against synthetic ground truth.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..core.errors import ValidationError
from ..dataset import SynthSpec, generate
from ..glasso import lambda_max, log_grid
from ..util import resolveThreads
from .estimators import FIT_ERRORS, make_estimator

logger = logging.getLogger(__name__)

# A curve with more than this share of dropped seeds is flagged invalid.
MAX_DROPPED_SHARE = 0.10

@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def tpr(self):
        positives = self.tp + self.fn
        return self.tp / positives if positives else 0.0

    @property
    def fpr(self):
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else 0.0

    def asDict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn, "tpr": self.tpr, "fpr": self.fpr}

@dataclass
class RocCurve:
    """
    Args:
        points (list): (fpr, tpr) per penalty, ordered by penalty descending.
        auc (float): trapezoid area over the points extended with (0, 0) and (1, 1).
        n_seeds (int): seeds that contributed to the averages.
        method (str): estimator name.
        lambdas (list): penalties, descending, aligned with points.
        dropped (int): seeds dropped because the estimator failed on them.
        valid (bool): False when more than 10% of the seeds were dropped.
    """
    points: list
    auc: float
    n_seeds: int
    method: str
    lambdas: list = field(default_factory=list)
    dropped: int = 0
    valid: bool = True

def _normalizePairs(edges):
    pairs = set()
    for pair in edges:
        a, b = tuple(pair)
        if a == b:
            raise ValidationError("Self loop on {0} in edge set.".format(a))
        pairs.add((a, b) if a < b else (b, a))
    return pairs

def confusion(est_edges, true_edges, p):
    """ Confusion counts over all p(p-1)/2 unordered pairs. """
    estimated = _normalizePairs(est_edges)
    truth = _normalizePairs(true_edges)
    total = p * (p - 1) // 2
    tp = len(estimated & truth)
    fp = len(estimated - truth)
    fn = len(truth - estimated)
    tn = total - tp - fp - fn
    if tn < 0:
        raise ValidationError("More distinct pairs than p={0} genes allow.".format(p))
    return Confusion(tp, fp, fn, tn)

def auc_from_points(points):
    """ Trapezoid area under (fpr, tpr) points extended with (0, 0) and (1, 1). """
    curve = sorted([(0.0, 0.0)] + [(float(f), float(t)) for f, t in points] + [(1.0, 1.0)])
    fprs = np.array([f for f, _ in curve])
    tprs = np.array([t for _, t in curve])
    return float(np.sum(np.diff(fprs) * (tprs[1:] + tprs[:-1]) / 2.0))

def lambda_grid(estimator, views, count=50, ratio=1e-3):
    """ count log-spaced penalties from the estimator's lambda_max down by ratio. """
    top = lambda_max(estimator.scatter(views))
    if not top > 0:
        raise ValidationError("Scatter of {0} has no off-diagonal mass; cannot place a grid.".format(estimator.name))
    return log_grid(top, count, ratio)

def _seedRates(estimator, views, truth, lambdas, seed):
    p = views[0].p
    estimates = estimator.fit_path(views, lambdas, seed)
    if any(estimate is None for estimate in estimates):
        return None
    rates = [confusion(estimate.edges, truth.edges, p) for estimate in estimates]
    return [(c.fpr, c.tpr) for c in rates]

def _assemble(method, lambdas, perSeedRates, nSeeds):
    kept = [rates for rates in perSeedRates if rates is not None]
    dropped = nSeeds - len(kept)
    if dropped:
        logger.warning("{0}: dropped {1} of {2} seeds.".format(method, dropped, nSeeds))
    order = np.argsort(-np.asarray(lambdas), kind="stable")
    if kept:
        mean = np.mean(np.asarray(kept), axis=0)
        points = [(float(mean[i, 0]), float(mean[i, 1])) for i in order]
    else:
        points = []
    valid = bool(kept) and dropped <= MAX_DROPPED_SHARE * nSeeds
    return RocCurve(points=points, auc=auc_from_points(points) if points else float("nan"),
                    n_seeds=len(kept), method=method, lambdas=[float(lambdas[i]) for i in order],
                    dropped=dropped, valid=valid)

def _dataForSeed(data, seed):
    if isinstance(data, SynthSpec):
        return generate(replace(data, seed=seed))
    return data(seed)

def roc_sweep(method, data, lambdas, seeds, n_jobs=1):
    """
    Averages TPR and FPR over seeds for every penalty.

    Args:
        method: estimator instance or registry name.
        data: SynthSpec (regenerated with each seed) or a callable seed -> (views, truth).
        lambdas: penalty grid, or None for a 50 point grid on the first seed's data.
        seeds: generation seeds.

    Returns:
        RocCurve
    """
    estimator = make_estimator(method) if isinstance(method, str) else method
    seeds = list(seeds)
    if not seeds:
        raise ValidationError("At least one seed is required.")
    if lambdas is None:
        views, _ = _dataForSeed(data, seeds[0])
        lambdas = lambda_grid(estimator, views)
    lambdas = [float(lam) for lam in lambdas]
    if not lambdas:
        raise ValidationError("Penalty grid is empty.")

    def runSeed(seed):
        views, truth = _dataForSeed(data, seed)
        try:
            return _seedRates(estimator, views, truth, lambdas, seed)
        except FIT_ERRORS as e:
            logger.warning("{0}: seed {1} failed: {2}".format(estimator.name, seed, e))
            return None

    perSeed = Parallel(n_jobs=resolveThreads(n_jobs))(
        delayed(runSeed)(seed) for seed in tqdm(seeds, desc=estimator.name, disable=None))
    return _assemble(estimator.name, lambdas, perSeed, len(seeds))

def _compareSeed(spec, estimators, grids, seed):
    views, truth = generate(replace(spec, seed=seed))
    rates = []
    for estimator, lambdas in zip(estimators, grids):
        try:
            rates.append(_seedRates(estimator, views, truth, lambdas, seed))
        except FIT_ERRORS as e:
            logger.warning("{0}: seed {1} failed: {2}".format(estimator.name, seed, e))
            rates.append(None)
    return rates

def compare_methods(spec, methods, lambdas, seeds, count=50, ratio=1e-3, n_jobs=1):
    """
    Runs every method on identical data per seed.

    Args:
        spec (SynthSpec): generation spec; its seed is replaced by each entry of seeds.
        methods (list): estimator instances or registry names.
        lambdas: shared grid, or None for a per method grid placed on the first seed's data.

    Returns:
        list of RocCurve, one per method in the given order.
    """
    estimators = [make_estimator(m) if isinstance(m, str) else m for m in methods]
    seeds = list(seeds)
    if not estimators or not seeds:
        raise ValidationError("Need at least one method and one seed.")
    if lambdas is None:
        views, _ = generate(replace(spec, seed=seeds[0]))
        grids = []
        for estimator in estimators:
            try:
                grids.append([float(lam) for lam in lambda_grid(estimator, views, count, ratio)])
            except FIT_ERRORS as e:
                raise ValidationError("{0}: cannot place a penalty grid: {1}".format(estimator.name, e))
    else:
        grids = [[float(lam) for lam in lambdas]] * len(estimators)

    perSeed = Parallel(n_jobs=resolveThreads(n_jobs))(
        delayed(_compareSeed)(spec, estimators, grids, seed) for seed in tqdm(seeds, desc="bench", disable=None))
    curves = []
    for index, (estimator, grid) in enumerate(zip(estimators, grids)):
        curves.append(_assemble(estimator.name, grid, [rates[index] for rates in perSeed], len(seeds)))
        logger.info("{0}: AUC {1:.4f} over {2} seeds".format(estimator.name, curves[-1].auc, curves[-1].n_seeds))
    return curves
