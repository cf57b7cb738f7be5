"""
Whitening and parallel FastICA with the log-cosh contrast.

Orientation: a view X is p x n and its n columns are the latent vectors to separate, so
the p genes play the role of ICA samples. Everything here returns matrices acting on
columns from the right: components = (X - mean) @ unmixing.
"""
import logging, warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from ..core.errors import ValidationError, ShapeError, ReducedRankWarning
from ..util import rngStream

logger = logging.getLogger(__name__)

# Eigenvalues below RANK_TOL * largest eigenvalue are treated as zero.
RANK_TOL = 1e-10

# Octile based kurtosis of a Gaussian.
GAUSSIAN_OCTILE_KURTOSIS = 1.2330951154929897

@dataclass(frozen=True)
class IcaResult:
    """
    Args:
        components (matrix): p x r estimated source columns.
        unmixing (matrix): n x r, components = (X - mean) @ unmixing.
        whitener (matrix): n x r whitening matrix applied before rotation.
        mean (vector): column means removed before whitening (zeros when not centering).
        converged (bool): whether the rotation update fell below tol.
        iterations (int): fixed point iterations run.
    """
    components: np.ndarray
    unmixing: np.ndarray
    whitener: np.ndarray
    mean: np.ndarray
    converged: bool
    iterations: int

    @property
    def rank(self):
        return self.unmixing.shape[1]

def whiten(X, center=True):
    """
    Whitens the columns of X so that Xw' Xw / p = I.

    Returns:
        (Xw, whitener): Xw = (X - column means) @ whitener, whitener of shape n x r where r
        is the numerical rank of X. A ReducedRankWarning is issued when r < n.

    Raises:
        ValidationError: fewer than two columns or numerical rank below 2.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("whiten expects a matrix, got shape {0}.".format(X.shape))
    p, n = X.shape
    if n < 2:
        raise ValidationError("whiten needs at least 2 columns, got {0}.".format(n))
    Xc = X - X.mean(axis=0) if center else X
    gram = (Xc.T @ Xc) / p
    eigenvalues, eigenvectors = linalg.eigh((gram + gram.T) / 2.0)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
    top = eigenvalues[0] if eigenvalues.size else 0.0
    rank = int(np.sum(eigenvalues > RANK_TOL * top)) if top > 0 else 0
    if rank < 2:
        raise ValidationError("Column space of X has rank {0}; at least 2 is required.".format(rank))
    if rank < n:
        message = "X has {0} columns but numerical rank {1}.".format(n, rank)
        logger.warning(message)
        warnings.warn(message, ReducedRankWarning)
    whitener = eigenvectors[:, :rank] / np.sqrt(eigenvalues[:rank])[None, :]
    return Xc @ whitener, whitener

def _symmetricDecorrelation(W):
    """ W <- (W W')^{-1/2} W """
    s, u = linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W

def _logcosh(x):
    gx = np.tanh(x)
    return gx, (1.0 - gx ** 2).mean(axis=1)

def fastica(X, seed, max_iter=500, tol=1e-6, center=True, key=()):
    """
    Parallel fixed point ICA with log-cosh contrast and symmetric decorrelation.

    Non-convergence is reported through IcaResult.converged, never raised; the last
    iterate is returned and its whitened Gram matrix is still the identity. The random
    start is drawn from rngStream(seed, *key).
    """
    Xw, whitener = whiten(X, center=center)
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0) if center else np.zeros(X.shape[1])
    p, r = Xw.shape

    rng = rngStream(seed, *key)
    W = _symmetricDecorrelation(rng.standard_normal((r, r)))
    XwT = Xw.T

    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        gwtx, gPrimeMean = _logcosh(W @ XwT)
        W1 = _symmetricDecorrelation(gwtx @ Xw / p - gPrimeMean[:, None] * W)
        lim = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W1, W)) - 1.0)))
        W = W1
        if lim < tol:
            converged = True
            break
    if not converged:
        logger.info("FastICA stopped after {0} iterations without converging (tol {1}).".format(max_iter, tol))

    unmixing = whitener @ W.T
    components = Xw @ W.T
    return IcaResult(components, unmixing, whitener, mean, converged, iteration)

def robust_excess_kurtosis(Y):
    """
    Octile based excess kurtosis of every column of Y: ((E7 - E5) + (E3 - E1)) / (E6 - E2)
    minus its Gaussian value. Invariant to location and scale of each column.
    """
    Y = np.asarray(Y, dtype=float)
    E = np.quantile(Y, np.arange(1, 8) / 8.0, axis=0)
    spread = E[5] - E[1]
    spread = np.where(spread > 0, spread, np.finfo(float).tiny)
    return ((E[6] - E[4]) + (E[2] - E[0])) / spread - GAUSSIAN_OCTILE_KURTOSIS

def kurtosis_order(Y):
    """ Column indices of Y by decreasing robust excess kurtosis (stable for ties). """
    return np.argsort(-robust_excess_kurtosis(Y), kind="stable")

def excess_kurtosis(Y):
    """ Moment based excess kurtosis of every column of Y. """
    return stats.kurtosis(np.asarray(Y, dtype=float), axis=0, fisher=True)
