"""
Single view TLASSO: robust sparse precision estimation for i.i.d. multivariate t columns.

EM over the latent Gamma scales: the E-step replaces each tau_i by its posterior mean, the
M-step takes the tau weighted mean and scatter and hands the scatter to the graphical
lasso. The penalized observed log-likelihood

    sum_i log t_p(X_i | nu, mu, Theta^-1) - (n/2) * lam * ||Theta||_1

never decreases across iterations.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.errors import ValidationError, ShapeError, RegularizationError
from ..core.ops import mahalanobis_columns
from ..core.types import choleskyOrRaise
from ..glasso import GlassoSettings, solve, l1Norm
from ..tdist import tau_posterior_mean, log_density_delta
from ..util import methodProfiler

logger = logging.getLogger(__name__)

# Variances at or below this are treated as degenerate.
DEGENERATE_VARIANCE = 1e-12

@dataclass
class TlassoState:
    """
    Args:
        mu (vector): location estimate, length p.
        Theta (matrix): sparse precision estimate.
        tau (vector): posterior means of the latent scales from the last E-step.
        objective_trace (list): penalized log-likelihood after every EM iteration.
        estimate (PrecisionEstimate): the last GLASSO solution, carrying the edge set.
        converged (bool): whether the parameter change fell below tol.
        iterations (int): EM iterations run.
    """
    mu: np.ndarray
    Theta: np.ndarray
    tau: np.ndarray
    objective_trace: list = field(default_factory=list)
    estimate: object = None
    converged: bool = False
    iterations: int = 0

def _checkData(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("X must be a p x n matrix, got shape {0}.".format(X.shape))
    if X.shape[1] < 2:
        raise ValidationError("TLASSO needs n >= 2 columns, got {0}.".format(X.shape[1]))
    if not np.all(np.isfinite(X)):
        raise ValidationError("X contains NaN or Inf.")
    return X

def tlasso_estep(X, mu, Theta, nu):
    """ Posterior mean of tau for every column of X under t_p(nu, mu, Theta^-1). """
    X = np.asarray(X, dtype=float)
    delta = mahalanobis_columns(X, mu, Theta)
    return tau_posterior_mean(delta, nu, X.shape[0])

def weighted_moments(X, tau):
    """
    tau weighted mean and scatter (1/n) sum_i tau_i (X_i - mu)(X_i - mu)'.

    Raises:
        RegularizationError: the scatter has a zero variance coordinate.
    """
    tau = np.asarray(tau, dtype=float)
    mu = (X @ tau) / np.sum(tau)
    centered = X - mu[:, None]
    scatter = (centered * tau[None, :]) @ centered.T / X.shape[1]
    scatter = (scatter + scatter.T) / 2.0
    if np.any(np.diag(scatter) <= DEGENERATE_VARIANCE):
        raise RegularizationError("Weighted scatter has a zero variance coordinate.")
    return mu, scatter

def tlasso_mstep(X, tau, settings, warmStart=None):
    """
    One M-step: weighted moments followed by the graphical lasso on the scatter.

    Returns:
        (mu, scatter, PrecisionEstimate)
    """
    mu, scatter = weighted_moments(X, tau)
    return mu, scatter, solve(scatter, settings, warmStart=warmStart)

def tlasso_objective(X, mu, Theta, nu, lam, penalize_diagonal=True):
    """ Penalized observed log-likelihood sum_i log t_p(X_i) - (n/2) lam ||Theta||_1. """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    L = choleskyOrRaise(Theta, "Theta")
    logDetTheta = 2.0 * float(np.sum(np.log(np.diag(L))))
    delta = mahalanobis_columns(X, mu, Theta)
    loglik = float(np.sum(log_density_delta(delta, nu, p, logDetTheta)))
    return loglik - 0.5 * n * lam * l1Norm(Theta, penalize_diagonal)

def _initialState(X, settings):
    mu = np.median(X, axis=1)
    centered = X - X.mean(axis=1)[:, None]
    covariance = centered @ centered.T / X.shape[1]
    scale = np.sqrt(np.diag(covariance))
    if np.any(scale ** 2 <= DEGENERATE_VARIANCE):
        raise RegularizationError("Empirical covariance has a zero variance coordinate.")
    correlation = covariance / np.outer(scale, scale)
    # Penalty in correlation units so the start rescales with the data.
    estimate = solve(correlation, replace(settings, lam=settings.lam / float(np.mean(scale ** 2))))
    # Back to the data scale.
    Theta = estimate.Theta / np.outer(scale, scale)
    return mu, (Theta + Theta.T) / 2.0

@methodProfiler
def tlasso_fit(X, nu, lam, max_em_iter=100, tol=1e-4, seed=0, glassoSettings=None, init=None):
    """
    Runs TLASSO EM on the columns of X.

    Args:
        X (matrix): p x n data, columns are samples.
        nu (float): degrees of freedom of the t likelihood.
        lam (float): graphical lasso penalty.
        max_em_iter (int): cap on EM iterations.
        tol (float): stop once max(|d mu|_inf, |d Theta|_max) < tol.
        seed (int): recorded for reproducibility; the procedure itself draws no random numbers.
        glassoSettings (GlassoSettings, optional): solver settings; lam overrides its penalty.
        init (tuple, optional): (mu, Theta) to start from instead of median/correlation GLASSO.

    Returns:
        TlassoState
    """
    X = _checkData(X)
    if not nu > 0:
        raise ValidationError("nu must be positive, got {0}.".format(nu))
    if max_em_iter < 1:
        raise ValidationError("max_em_iter must be >= 1, got {0}.".format(max_em_iter))
    settings = replace(glassoSettings, lam=lam) if glassoSettings is not None else GlassoSettings(lam=lam)
    logger.debug("TLASSO on {0}x{1} data, nu={2}, lambda={3}, seed={4}".format(
        X.shape[0], X.shape[1], nu, lam, seed))

    if init is not None:
        mu, Theta = np.asarray(init[0], dtype=float), np.asarray(init[1], dtype=float)
    else:
        mu, Theta = _initialState(X, settings)
    state = TlassoState(mu=mu, Theta=Theta, tau=np.ones(X.shape[1]))

    estimate = None
    for iteration in range(1, max_em_iter + 1):
        tau = tlasso_estep(X, mu, Theta, nu)
        newMu, _, estimate = tlasso_mstep(X, tau, settings, warmStart=estimate)
        newTheta = estimate.Theta
        change = max(float(np.max(np.abs(newMu - mu))), float(np.max(np.abs(newTheta - Theta))))
        mu, Theta = newMu, newTheta

        objectiveValue = tlasso_objective(X, mu, Theta, nu, lam, settings.penalize_diagonal)
        state.objective_trace.append(objectiveValue)
        logger.info("TLASSO iteration {0}: objective {1:.6f}, max change {2:.3e}, edges {3}".format(
            iteration, objectiveValue, change, len(estimate.edges)))

        state.iterations = iteration
        if change < tol:
            state.converged = True
            break

    state.mu, state.Theta, state.tau, state.estimate = mu, Theta, tau, estimate
    return state
