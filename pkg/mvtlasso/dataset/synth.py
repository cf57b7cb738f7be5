"""
Synthetic multi view data with a known sparse precision matrix.

Theta has off-diagonal entries drawn from {-1, 0, +1} and diagonal 1 + node degree, so it
is strictly diagonally dominant. Every view is X_d = S_d A_d + Z_d B_d with t distributed
signal columns S_d ~ t_p(nu, mu, Theta^-1), noise columns Z_d ~ t_p(nu, 0, sigma^2 I) and
standard normal mixing weights.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import ValidationError, GenerationError
from ..core.types import ExpressionView
from ..tdist import MvtParams, sample
from ..util import rngStream, edgeSetFromSupport

logger = logging.getLogger(__name__)

# Stacked mixing matrices with a larger condition number are redrawn.
MAX_CONDITION = 1e8
MAX_REDRAWS = 10

# Stream namespaces under the generation seed.
_THETA_STREAM = 0
_VIEW_STREAM = 1
_SIGNAL_BLOCK, _NOISE_BLOCK, _MIXING_BLOCK = 0, 1, 2

@dataclass(frozen=True)
class SynthSpec:
    """
    Args:
        p (int): genes.
        n (int): samples per view.
        k (int): signal columns per view.
        r (int): noise columns per view, k + r = n.
        D (int): number of views.
        nu (float): degrees of freedom of both signal and noise columns.
        edge_prob (float): probability of each sign for an off-diagonal entry.
        seed (int): generation seed.
        mu (vector, optional): signal location, zeros by default.
        sigma (float): noise scale.
    """
    p: int
    n: int
    k: int
    r: int
    D: int = 1
    nu: float = 3.0
    edge_prob: float = 0.01
    seed: int = 0
    mu: tuple = None
    sigma: float = 1.0

    def __post_init__(self):
        if self.p < 2 or self.n < 2 or self.D < 1:
            raise ValidationError("Need p >= 2, n >= 2 and D >= 1, got p={0}, n={1}, D={2}.".format(
                self.p, self.n, self.D))
        if self.k < 1 or self.r < 0 or self.k + self.r != self.n:
            raise ValidationError("Need k >= 1, r >= 0 and k + r = n, got k={0}, r={1}, n={2}.".format(
                self.k, self.r, self.n))
        if not 0 < self.edge_prob < 0.5:
            raise ValidationError("edge_prob must lie in (0, 0.5), got {0}.".format(self.edge_prob))
        if not self.nu > 0 or not self.sigma > 0:
            raise ValidationError("nu and sigma must be positive.")
        if self.mu is not None:
            mu = tuple(float(m) for m in self.mu)
            if len(mu) != self.p:
                raise ValidationError("mu has length {0}, expected {1}.".format(len(mu), self.p))
            object.__setattr__(self, "mu", mu)

    @classmethod
    def fromSamples(cls, p, n, k, **kwargs):
        if not 1 <= k <= n:
            raise ValidationError("Signal rank k={0} outside [1, n={1}].".format(k, n))
        return cls(p=p, n=n, k=k, r=n - k, **kwargs)

    def location(self):
        return np.zeros(self.p) if self.mu is None else np.array(self.mu)

@dataclass
class SynthTruth:
    Theta: np.ndarray
    edges: frozenset
    S: list = field(default_factory=list)
    Z: list = field(default_factory=list)
    A: list = field(default_factory=list)
    B: list = field(default_factory=list)

def geneIds(p):
    width = max(4, len(str(p)))
    return ["g{0:0{1}d}".format(i + 1, width) for i in range(p)]

def sampleIds(viewIndex, n):
    width = max(4, len(str(n)))
    return ["v{0}_s{1:0{2}d}".format(viewIndex + 1, i + 1, width) for i in range(n)]

def gen_theta(p, edge_prob, seed):
    """
    Random sparse precision matrix and its edge set.

    Upper triangle entries are -1, +1 with probability edge_prob each and 0 otherwise,
    mirrored to the lower triangle; Theta_ii = 1 + degree(i).
    """
    if p < 2:
        raise ValidationError("p must be >= 2, got {0}.".format(p))
    if not 0 <= edge_prob < 0.5:
        raise ValidationError("edge_prob must lie in [0, 0.5), got {0}.".format(edge_prob))
    rng = rngStream(seed, _THETA_STREAM)
    rows, cols = np.triu_indices(p, 1)
    u = rng.random(rows.shape[0])
    values = np.where(u < edge_prob, -1.0, np.where(u < 2 * edge_prob, 1.0, 0.0))

    Theta = np.zeros((p, p))
    Theta[rows, cols] = values
    Theta = Theta + Theta.T
    degree = np.sum(Theta != 0, axis=1)
    np.fill_diagonal(Theta, 1.0 + degree)
    return Theta, edgeSetFromSupport(Theta)

def _mixing(seed, d, k, r, n):
    for attempt in range(MAX_REDRAWS + 1):
        rng = rngStream(seed, _VIEW_STREAM, d, _MIXING_BLOCK, attempt)
        mixing = rng.standard_normal((k + r, n))
        condition = np.linalg.cond(mixing)
        if np.isfinite(condition) and condition < MAX_CONDITION:
            return mixing[:k], mixing[k:]
        logger.debug("View {0}: mixing draw {1} has condition number {2:.3e}; redrawing.".format(d, attempt, condition))
    raise GenerationError("View {0}: no well conditioned mixing matrix after {1} redraws.".format(d, MAX_REDRAWS))

def gen_views(spec, Theta):
    """
    Draws the D views of spec around the precision matrix Theta.

    Returns:
        (views, truth): list of ExpressionView and the SynthTruth holding S_d, Z_d, A_d, B_d.
    """
    Theta = np.asarray(Theta, dtype=float)
    if Theta.shape != (spec.p, spec.p):
        raise ValidationError("Theta is {0}, expected {1}x{1}.".format(Theta.shape, spec.p))
    Sigma = np.linalg.inv(Theta)
    signalParams = MvtParams(spec.nu, spec.location(), (Sigma + Sigma.T) / 2.0)
    noiseParams = MvtParams(spec.nu, np.zeros(spec.p), spec.sigma ** 2 * np.eye(spec.p))

    genes = geneIds(spec.p)
    truth = SynthTruth(Theta=Theta, edges=edgeSetFromSupport(Theta))
    views = []
    for d in range(spec.D):
        S = sample(signalParams, spec.k, spec.seed, key=(_VIEW_STREAM, d, _SIGNAL_BLOCK))
        if spec.r > 0:
            Z = sample(noiseParams, spec.r, spec.seed, key=(_VIEW_STREAM, d, _NOISE_BLOCK))
        else:
            Z = np.zeros((spec.p, 0))
        A, B = _mixing(spec.seed, d, spec.k, spec.r, spec.n)
        X = S @ A + Z @ B
        if not np.all(np.isfinite(X)):
            raise GenerationError("View {0} contains non-finite values.".format(d))
        views.append(ExpressionView("view{0}".format(d + 1), genes, sampleIds(d, spec.n), X))
        truth.S.append(S)
        truth.Z.append(Z)
        truth.A.append(A)
        truth.B.append(B)
    return views, truth

def generate(spec):
    """ gen_theta followed by gen_views under spec.seed. """
    Theta, _ = gen_theta(spec.p, spec.edge_prob, spec.seed)
    return gen_views(spec, Theta)
