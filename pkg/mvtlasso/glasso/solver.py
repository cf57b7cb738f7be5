"""
Graphical lasso: min over Theta > 0 of  -log det Theta + tr(S Theta) + lam * ||Theta||_1.

Solved by block coordinate descent on the covariance iterate W = Theta^-1: every sweep
visits each column j, solves the lasso subproblem

    min_beta  1/2 beta' W11 beta - s12' beta + lam * ||beta||_1

by coordinate descent, and writes back w12 = W11 beta. Theta is assembled from the final
coefficient vectors, which keeps exact zeros in the off-diagonal support.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from ..core.errors import ValidationError, ShapeError, ConvergenceError, NonPositiveDefiniteError
from ..core.types import PrecisionEstimate, choleskyOrRaise
from ..util import methodProfiler

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class GlassoSettings:
    """
    Args:
        lam (float): l1 penalty, > 0.
        max_iter (int): cap on outer sweeps.
        tol (float): stop once the largest elementwise change of W in a sweep is below tol
            times the mean diagonal of W.
        penalize_diagonal (bool): whether ||Theta||_1 includes the diagonal.
        inner_max_iter (int): cap on coordinate descent passes per lasso subproblem.
    """
    lam: float
    max_iter: int = 200
    tol: float = 1e-5
    penalize_diagonal: bool = True
    inner_max_iter: int = 1000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("lambda must be positive, got {0}.".format(self.lam))
        if not self.tol > 0:
            raise ValidationError("tol must be positive, got {0}.".format(self.tol))
        if self.max_iter < 1 or self.inner_max_iter < 1:
            raise ValidationError("Iteration caps must be >= 1.")

@njit(cache=True)
def _lassoCoordinateDescent(W11, s12, beta, lam, maxIter, tol):
    m = beta.shape[0]
    Wbeta = np.zeros(m)
    for k in range(m):
        if beta[k] != 0.0:
            for l in range(m):
                Wbeta[l] += W11[l, k] * beta[k]
    for sweep in range(maxIter):
        maxDelta = 0.0
        for k in range(m):
            old = beta[k]
            partial = s12[k] - Wbeta[k] + W11[k, k] * old
            if partial > lam:
                new = (partial - lam) / W11[k, k]
            elif partial < -lam:
                new = (partial + lam) / W11[k, k]
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                beta[k] = new
                for l in range(m):
                    Wbeta[l] += W11[l, k] * delta
                if abs(delta) > maxDelta:
                    maxDelta = abs(delta)
        if maxDelta < tol:
            break
    return beta, Wbeta

def _validateScatter(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError("S must be square, got shape {0}.".format(S.shape))
    if not np.all(np.isfinite(S)):
        raise ValidationError("S contains NaN or Inf.")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > 1e-10 * scale:
        raise ValidationError("S must be symmetric.")
    if np.any(np.diag(S) <= 0):
        raise ValidationError("S has a zero variance row; regularize before calling the solver.")
    return (S + S.T) / 2.0

def objective(Theta, S, lam, penalize_diagonal=True):
    """ -log det Theta + tr(S Theta) + lam * ||Theta||_1 (off-diagonal only unless penalize_diagonal). """
    Theta = np.asarray(Theta, dtype=float)
    S = np.asarray(S, dtype=float)
    L = choleskyOrRaise(Theta, "Theta")
    logDet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -logDet + float(np.sum(S * Theta)) + lam * l1Norm(Theta, penalize_diagonal)

def l1Norm(Theta, penalize_diagonal=True):
    total = float(np.sum(np.abs(Theta)))
    if not penalize_diagonal:
        total -= float(np.sum(np.abs(np.diag(Theta))))
    return total

def dualityGap(Theta, S, lam, penalize_diagonal=True):
    """ tr(S Theta) - p + lam * ||Theta||_1; zero at the optimum. """
    return float(np.sum(S * Theta)) - Theta.shape[0] + lam * l1Norm(Theta, penalize_diagonal)

def lambda_max(S):
    """
    Smallest penalty giving the empty graph: the largest off-diagonal |S_ij|. The value is
    the same whether or not the diagonal is penalized, since a diagonal penalty only
    shifts the diagonal of the covariance iterate.
    """
    S = np.asarray(S, dtype=float)
    offDiagonal = np.abs(S - np.diag(np.diag(S)))
    return float(np.max(offDiagonal)) if S.shape[0] > 1 else 0.0

def log_grid(lam_max, count=50, ratio=1e-3):
    """ count log-spaced penalties from lam_max down to lam_max * ratio. """
    if not lam_max > 0:
        raise ValidationError("lam_max must be positive, got {0}.".format(lam_max))
    if count < 1 or not 0 < ratio <= 1:
        raise ValidationError("Need count >= 1 and ratio in (0, 1].")
    if count == 1:
        return np.array([float(lam_max)])
    return np.geomspace(lam_max, lam_max * ratio, count)

def _coldState(S, settings):
    W = S.copy()
    np.fill_diagonal(W, np.diag(S) + (settings.lam if settings.penalize_diagonal else 0.0))
    return W, np.zeros(S.shape)

def _warmState(S, settings, warmStart):
    """ (W, betas) from an earlier solution, or None when it does not fit S. """
    warmTheta = warmStart.Theta if isinstance(warmStart, PrecisionEstimate) else np.asarray(warmStart)
    if warmTheta.shape != S.shape:
        return None
    W = np.linalg.inv(warmTheta)
    W = (W + W.T) / 2.0
    np.fill_diagonal(W, np.diag(S) + (settings.lam if settings.penalize_diagonal else 0.0))
    try:
        choleskyOrRaise(W, "warm start")
    except NonPositiveDefiniteError:
        logger.debug("Warm start not positive definite after diagonal reset; starting cold.")
        return None
    betas = -warmTheta / np.diag(warmTheta)[None, :]
    np.fill_diagonal(betas, 0.0)
    return W, betas

@methodProfiler
def solve(S, settings, warmStart=None):
    """
    Sparse precision estimate of the scatter S.

    A warm start that diverges or runs out of sweeps is abandoned for the cold start
    W = S + lam I; only a failure from the cold start is raised.

    Args:
        S (matrix): symmetric p x p scatter with strictly positive diagonal.
        settings (GlassoSettings): penalty and stopping rule.
        warmStart (PrecisionEstimate or matrix, optional): earlier solution to start from.

    Returns:
        PrecisionEstimate

    Raises:
        ValidationError: S is not symmetric or has a non-positive diagonal entry.
        ConvergenceError: max_iter sweeps without meeting tol; carries the last iterate.
    """
    S = _validateScatter(S)
    state = _warmState(S, settings, warmStart) if warmStart is not None else None
    if state is not None:
        try:
            return _blockCoordinateDescent(S, settings, *state)
        except (NonPositiveDefiniteError, ConvergenceError) as e:
            logger.warning("Warm started glasso failed ({0}); retrying from S + lambda I.".format(e))
    return _blockCoordinateDescent(S, settings, *_coldState(S, settings))

def _blockCoordinateDescent(S, settings, W, betas):
    p = S.shape[0]
    lam = float(settings.lam)
    innerTol = settings.tol * 1e-3
    # W has a fixed diagonal, so this keeps the rule invariant to rescaling S.
    threshold = settings.tol * float(np.mean(np.diag(W)))

    change = np.inf
    sweeps = 0
    if p > 1:
        indices = np.arange(p)
        for sweeps in range(1, settings.max_iter + 1):
            change = 0.0
            for j in range(p):
                rest = indices != j
                W11 = np.ascontiguousarray(W[np.ix_(rest, rest)])
                s12 = np.ascontiguousarray(S[rest, j])
                beta = np.ascontiguousarray(betas[rest, j])
                beta, w12 = _lassoCoordinateDescent(W11, s12, beta, lam, settings.inner_max_iter, innerTol)
                betas[rest, j] = beta
                change = max(change, float(np.max(np.abs(w12 - W[rest, j]))))
                W[rest, j] = w12
                W[j, rest] = w12
            logger.debug("glasso sweep {0}: max change {1:.3e}".format(sweeps, change))
            if not np.all(np.isfinite(W)):
                raise NonPositiveDefiniteError("glasso iterate diverged; the scatter is too ill-conditioned.")
            if change < threshold:
                break

    Theta = _assemblePrecision(W, betas)
    if not np.all(np.isfinite(Theta)):
        raise NonPositiveDefiniteError("glasso precision has non-finite entries; the iterate is singular.")
    estimate = PrecisionEstimate.fromTheta(Theta, lam)
    if p > 1 and change >= threshold:
        gap = dualityGap(Theta, S, lam, settings.penalize_diagonal)
        raise ConvergenceError(
            "glasso did not converge after {0} sweeps (max change {1:.3e}, duality gap {2:.3e}).".format(
                settings.max_iter, change, gap),
            iterate=estimate,
            gap=gap)
    choleskyOrRaise(estimate.Theta, "glasso solution")
    return estimate

def _assemblePrecision(W, betas):
    p = W.shape[0]
    Theta = np.zeros((p, p))
    for j in range(p):
        rest = np.arange(p) != j
        beta = betas[rest, j]
        thetaJJ = 1.0 / (W[j, j] - W[rest, j] @ beta)
        Theta[j, j] = thetaJJ
        Theta[rest, j] = -beta * thetaJJ
    return (Theta + Theta.T) / 2.0

def solve_path(S, lambdas, settings):
    """
    Solves for every penalty in lambdas, largest first with warm starts.

    Returns:
        list of PrecisionEstimate in the order of lambdas.
    """
    lambdas = [float(lam) for lam in lambdas]
    if not lambdas:
        raise ValidationError("Penalty grid is empty.")
    order = sorted(range(len(lambdas)), key=lambda i: -lambdas[i])
    results = [None] * len(lambdas)
    previous = None
    for i in order:
        previous = solve(S, replace(settings, lam=lambdas[i]), warmStart=previous)
        results[i] = previous
    return results
