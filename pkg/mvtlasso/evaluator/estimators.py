"""
Named precision estimators sharing one interface, so stability selection and the
benchmark harness can treat GLASSO, TLASSO, the two preprocessing baselines and the
multi view EM alike.

Every estimator maps (views, lam, seed) to a PrecisionEstimate and exposes the scatter
its penalty acts on, from which penalty grids are derived.
"""
import logging, warnings

import numpy as np

from ..core.errors import MvtlassoError, ValidationError, ReducedRankWarning
from ..core.types import alignViews
from ..glasso import GlassoSettings, solve, solve_path
from ..ica import fastica
from ..models import MvtlassoSettings, fit, initial_scatter
from ..tlasso import tlasso_fit

logger = logging.getLogger(__name__)

# Failures an estimator may report for one penalty without aborting a sweep.
FIT_ERRORS = (MvtlassoError, FloatingPointError, ValueError, np.linalg.LinAlgError)

def empirical_scatter(columnBlocks):
    """ (1/n) sum of outer products of the columns, each block centered on its own mean. """
    blocks = [np.asarray(block, dtype=float) for block in columnBlocks]
    centered = np.hstack([block - block.mean(axis=1)[:, None] for block in blocks])
    scatter = centered @ centered.T / centered.shape[1]
    return (scatter + scatter.T) / 2.0

class Estimator(object):
    """
    Base class of the registry entries.

    Args:
        options (dict): estimator specific settings; unknown keys raise ValidationError.
    """
    name = None
    optionDefaults = {}

    def __init__(self, **options):
        unknown = set(options) - set(self.optionDefaults)
        if unknown:
            raise ValidationError("Unknown options for {0}: {1}".format(self.name, sorted(unknown)))
        self.options = dict(self.optionDefaults, **options)

    def glassoSettings(self, lam):
        return GlassoSettings(lam=lam, max_iter=self.options.get("glasso_max_iter", 200),
                              tol=self.options.get("glasso_tol", 1e-5),
                              penalize_diagonal=self.options.get("penalize_diagonal", True))

    def scatter(self, views):
        raise NotImplementedError

    def fit(self, views, lam, seed=0):
        return solve(self.scatter(views), self.glassoSettings(lam))

    def fit_path(self, views, lambdas, seed=0):
        """
        One estimate per penalty, None where the fit failed.
        """
        try:
            return solve_path(self.scatter(views), lambdas, self.glassoSettings(max(lambdas)))
        except FIT_ERRORS as e:
            logger.info("{0}: path solve failed ({1}); solving penalties one by one.".format(self.name, e))
        return [self._fitOrNone(views, lam, seed) for lam in lambdas]

    def _fitOrNone(self, views, lam, seed):
        try:
            return self.fit(views, lam, seed)
        except FIT_ERRORS as e:
            logger.warning("{0} failed at lambda={1:.4g}: {2}".format(self.name, lam, e))
            return None

    def __repr__(self):
        return "{0}({1})".format(self.name, self.options)

class GlassoEstimator(Estimator):
    """ Graphical lasso on the empirical scatter of the pooled columns. """
    name = "glasso"
    optionDefaults = {"glasso_max_iter": 200, "glasso_tol": 1e-5, "penalize_diagonal": True}

    def scatter(self, views):
        return empirical_scatter([view.data for view in alignViews(views)])

class GlassoStdEstimator(GlassoEstimator):
    """ Graphical lasso after z-scoring every gene across the samples of each view. """
    name = "glasso-std"

    def scatter(self, views):
        blocks = []
        for view in alignViews(views):
            X = view.data
            scale = X.std(axis=1)
            scale = np.where(scale > 0, scale, 1.0)
            blocks.append((X - X.mean(axis=1)[:, None]) / scale[:, None])
        return empirical_scatter(blocks)

class GlassoIcaEstimator(GlassoEstimator):
    """ Graphical lasso on all ICA components of every view, no rank truncation. """
    name = "glasso-ica"
    optionDefaults = dict(GlassoEstimator.optionDefaults, ica_max_iter=500, ica_tol=1e-6, seed=0)

    def scatter(self, views):
        blocks = []
        for d, view in enumerate(alignViews(views)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ReducedRankWarning)
                ica = fastica(view.data, self.options["seed"], max_iter=self.options["ica_max_iter"],
                              tol=self.options["ica_tol"], key=(1, d))
            blocks.append(ica.components)
        return empirical_scatter(blocks)

class TlassoEstimator(Estimator):
    """ TLASSO on the pooled columns. """
    name = "tlasso"
    optionDefaults = dict(GlassoEstimator.optionDefaults, nu=3.0, max_em_iter=100, tol=1e-4)

    def pooled(self, views):
        return np.hstack([view.data for view in alignViews(views)])

    def scatter(self, views):
        return empirical_scatter([self.pooled(views)])

    def fit(self, views, lam, seed=0):
        state = tlasso_fit(self.pooled(views), self.options["nu"], lam,
                           max_em_iter=self.options["max_em_iter"], tol=self.options["tol"], seed=seed,
                           glassoSettings=self.glassoSettings(lam))
        return state.estimate

    def fit_path(self, views, lambdas, seed=0):
        return [self._fitOrNone(views, lam, seed) for lam in lambdas]

class MvtlassoEstimator(Estimator):
    """ The multi view EM; options are MvtlassoSettings fields other than lam and seed. """
    name = "mvtlasso"
    optionDefaults = {
        key: value for key, value in MvtlassoSettings(lam=1.0).__dict__.items()
        if key not in ("lam", "seed")
    }

    def settings(self, lam, seed):
        return MvtlassoSettings(lam=lam, seed=seed, **self.options)

    def scatter(self, views, seed=0):
        return initial_scatter(views, self.settings(1.0, seed))

    def fit(self, views, lam, seed=0):
        return fit(views, self.settings(lam, seed)).estimate

    def fit_path(self, views, lambdas, seed=0):
        return [self._fitOrNone(views, lam, seed) for lam in lambdas]

ESTIMATORS = {
    estimator.name: estimator
    for estimator in [GlassoEstimator, TlassoEstimator, GlassoIcaEstimator, GlassoStdEstimator, MvtlassoEstimator]
}

def make_estimator(name, **options):
    """
    Registry lookup.

    Raises:
        ValidationError: unknown name; the message lists the valid names.
    """
    if name not in ESTIMATORS:
        raise ValidationError("Unknown method {0!r}; valid methods: {1}".format(name, ", ".join(sorted(ESTIMATORS))))
    return ESTIMATORS[name](**options)
