"""
Multivariate t machinery: density, Gamma-Gaussian sampling and the posterior mean of the
latent scale tau, shared by the single view and the multi view EM.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from ..core.errors import ValidationError, ShapeError, NonPositiveDefiniteError
from ..util import rngStream

@dataclass(frozen=True)
class MvtParams:
    """
    Parameters of t_p(nu, mu, Sigma).

    Args:
        nu (float): degrees of freedom, > 0.
        mu (vector): location, length p.
        Sigma (matrix): symmetric positive definite p x p dispersion.
    """
    nu: float
    mu: np.ndarray
    Sigma: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float, copy=True)
        Sigma = np.array(self.Sigma, dtype=float, copy=True)
        if mu.ndim != 1 or Sigma.shape != (mu.shape[0], mu.shape[0]):
            raise ShapeError("mu {0} and Sigma {1} do not conform.".format(mu.shape, Sigma.shape))
        if not self.nu > 0:
            raise ValidationError("nu must be positive, got {0}.".format(self.nu))
        try:
            chol = linalg.cholesky(Sigma, lower=True)
        except linalg.LinAlgError as e:
            raise NonPositiveDefiniteError("Sigma is not positive definite: {0}".format(e))
        for arr in (mu, Sigma, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "chol", chol)

    @property
    def p(self):
        return self.mu.shape[0]

    def logDetSigma(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

def log_density_delta(delta, nu, p, logDetPrecision):
    """
    log t_p density written through the squared Mahalanobis distance delta and
    log|Sigma^-1|. Vectorized over delta.
    """
    delta = np.asarray(delta, dtype=float)
    return (special.gammaln((nu + p) / 2.0)
            - special.gammaln(nu / 2.0)
            - (p / 2.0) * np.log(nu * np.pi)
            + 0.5 * logDetPrecision
            - ((nu + p) / 2.0) * np.log1p(delta / nu))

def log_density(x, params):
    """
    log f(x) of t_p(nu, mu, Sigma).

    x may be a vector of length p (returns a float) or a p x m matrix of columns
    (returns a vector of m values).
    """
    x = np.asarray(x, dtype=float)
    isVector = (x.ndim == 1)
    X = x[:, None] if isVector else x
    if X.ndim != 2 or X.shape[0] != params.p:
        raise ShapeError("x of shape {0} does not match p={1}.".format(x.shape, params.p))
    Z = linalg.solve_triangular(params.chol, X - params.mu[:, None], lower=True)
    delta = np.sum(Z * Z, axis=0)
    values = log_density_delta(delta, params.nu, params.p, -params.logDetSigma())
    return float(values[0]) if isVector else values

def sample(params, count, seed, key=()):
    """
    Draws count i.i.d. columns from t_p(nu, mu, Sigma) as mu + L N / sqrt(tau), where
    tau ~ Gamma(shape=nu/2, rate=nu/2) and N ~ Normal(0, I), L the Cholesky factor of Sigma.

    All randomness comes from the stream rngStream(seed, *key): tau is drawn first
    (count values), then N (p x count, row major). Two calls that differ only in Sigma
    therefore return affine images of each other.
    """
    count = int(count)
    if count < 1:
        raise ValidationError("count must be >= 1, got {0}.".format(count))
    rng = rngStream(seed, *key)
    # numpy's gamma takes a scale, the inverse of the rate nu/2.
    tau = rng.gamma(shape=params.nu / 2.0, scale=2.0 / params.nu, size=count)
    N = rng.standard_normal((params.p, count))
    return params.mu[:, None] + (params.chol @ N) / np.sqrt(tau)[None, :]

def tau_posterior_mean(delta, nu, p):
    """ E[tau | y] = (nu + p) / (nu + delta). Accepts scalar or array delta. """
    if not nu > 0 or p < 1:
        raise ValidationError("Need nu > 0 and p >= 1, got nu={0}, p={1}.".format(nu, p))
    deltaArr = np.asarray(delta, dtype=float)
    if np.any(deltaArr < 0):
        raise ValidationError("delta must be non-negative.")
    result = (nu + p) / (nu + deltaArr)
    return float(result) if np.ndim(result) == 0 else result
