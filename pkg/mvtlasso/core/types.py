"""
Domain types shared by every module.

All types are immutable value objects: numpy payloads are copied on construction and
flagged read-only, so instances can be shared freely across threads and workers.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ValidationError, ShapeError, SingularityError, NonPositiveDefiniteError

# Edges are read off |Theta_ij| > EDGE_EPS * max|Theta|.
EDGE_EPS = 1e-6

# Tolerance of the Sigma * Theta = I consistency check.
INVERSE_TOL = 1e-8

def _frozenArray(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr

def _checkSymmetric(M, label, tol=1e-10):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError("{0} must be square, got shape {1}.".format(label, M.shape))
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise ValidationError("{0} must be symmetric.".format(label))

def choleskyOrRaise(M, label="matrix"):
    """ Lower Cholesky factor of M, raising NonPositiveDefiniteError when M is not PD. """
    try:
        return linalg.cholesky(M, lower=True)
    except linalg.LinAlgError as e:
        raise NonPositiveDefiniteError("{0} is not positive definite: {1}".format(label, e))

@dataclass(frozen=True)
class ExpressionView:
    """
    One observed data set X_d (p genes x n_d samples) with its identifiers.
    """
    view_id: str
    gene_ids: tuple
    sample_ids: tuple
    data: np.ndarray

    def __post_init__(self):
        data = _frozenArray(self.data)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "gene_ids", tuple(str(g) for g in self.gene_ids))
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))

        if data.ndim != 2:
            raise ShapeError("View {0}: data must be a matrix.".format(self.view_id))
        p, n = data.shape
        if p < 2 or n < 2:
            raise ShapeError("View {0}: need p >= 2 and n >= 2, got {1}x{2}.".format(self.view_id, p, n))
        if len(self.gene_ids) != p or len(self.sample_ids) != n:
            raise ShapeError("View {0}: identifier counts do not match data shape {1}.".format(
                self.view_id, data.shape))
        if len(set(self.gene_ids)) != p:
            raise ValidationError("View {0}: duplicate gene ids.".format(self.view_id))
        if not np.all(np.isfinite(data)):
            raise ValidationError("View {0}: data contains NaN or Inf.".format(self.view_id))

    @property
    def p(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    def selectSamples(self, indices):
        indices = np.asarray(indices, dtype=int)
        return ExpressionView(
            self.view_id,
            self.gene_ids,
            [self.sample_ids[i] for i in indices],
            self.data[:, indices],
        )

    @classmethod
    def fromMatrix(cls, data, view_id="view", gene_ids=None, sample_ids=None):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2:
            raise ShapeError("View {0}: data must be a matrix.".format(view_id))
        if gene_ids is None:
            gene_ids = ["g{0:05d}".format(i) for i in range(data.shape[0])]
        if sample_ids is None:
            sample_ids = ["{0}_s{1:04d}".format(view_id, i) for i in range(data.shape[1])]
        return cls(view_id, tuple(gene_ids), tuple(sample_ids), data)

def alignViews(views):
    """
    Reorders every view's gene axis to the gene order of the first view.

    Alignment is by exact gene_id match; views whose gene sets differ are rejected.
    """
    views = list(views)
    if not views:
        raise ValidationError("At least one view is required.")
    reference = views[0].gene_ids
    referenceSet = set(reference)
    aligned = [views[0]]
    for view in views[1:]:
        if set(view.gene_ids) != referenceSet:
            raise ValidationError("View {0} does not share the gene axis of view {1}.".format(
                view.view_id, views[0].view_id))
        if view.gene_ids == reference:
            aligned.append(view)
            continue
        position = {gene: i for i, gene in enumerate(view.gene_ids)}
        order = [position[gene] for gene in reference]
        aligned.append(ExpressionView(view.view_id, reference, view.sample_ids, view.data[order, :]))
    return aligned

@dataclass(frozen=True)
class ViewParams:
    """
    Per view EM parameters: unmixing W (n_d x n_d), signal location mu, noise scale sigma
    and signal rank k. Columns 0..k-1 of X W are signal, the remaining r = n_d - k noise.
    """
    W: np.ndarray
    mu: np.ndarray
    sigma: float
    k: int

    def __post_init__(self):
        W = _frozenArray(self.W)
        mu = _frozenArray(self.mu)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "k", int(self.k))

        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ShapeError("W must be square, got shape {0}.".format(W.shape))
        n = W.shape[0]
        if mu.ndim != 1:
            raise ShapeError("mu must be a vector.")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValidationError("sigma must be positive, got {0}.".format(self.sigma))
        if not 1 <= self.k <= n:
            raise ValidationError("Signal rank k={0} outside [1, {1}].".format(self.k, n))
        sign, _ = np.linalg.slogdet(W)
        if sign == 0:
            raise SingularityError("W is singular.")

    @property
    def n(self):
        return self.W.shape[0]

    @property
    def r(self):
        return self.n - self.k

@dataclass(frozen=True)
class ModelState:
    """
    All EM parameters: per view ViewParams, shared precision Theta and its inverse Sigma,
    degrees of freedom nu and GLASSO penalty lam.

    Use ModelState.create() to have Sigma derived from Theta.
    """
    views: tuple
    Theta: np.ndarray
    Sigma: np.ndarray
    nu: float
    lam: float

    def __post_init__(self):
        Theta = _frozenArray(self.Theta)
        Sigma = _frozenArray(self.Sigma)
        object.__setattr__(self, "Theta", Theta)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "lam", float(self.lam))

        _checkSymmetric(Theta, "Theta")
        _checkSymmetric(Sigma, "Sigma")
        if Theta.shape != Sigma.shape:
            raise ShapeError("Theta and Sigma shapes differ.")
        choleskyOrRaise(Theta, "Theta")
        if not self.nu > 2:
            raise ValidationError("nu must exceed 2, got {0}.".format(self.nu))
        if not self.lam > 0:
            raise ValidationError("lambda must be positive, got {0}.".format(self.lam))
        p = Theta.shape[0]
        for params in self.views:
            if params.mu.shape[0] != p:
                raise ShapeError("mu length {0} does not match p={1}.".format(params.mu.shape[0], p))
        residual = np.max(np.abs(Sigma @ Theta - np.eye(p)))
        if residual > INVERSE_TOL:
            raise ValidationError("Sigma is not the inverse of Theta (max residual {0:.3e}).".format(residual))

    @classmethod
    def create(cls, views, Theta, nu, lam):
        Theta = np.asarray(Theta, dtype=float)
        Theta = (Theta + Theta.T) / 2.0
        L = choleskyOrRaise(Theta, "Theta")
        Sigma = linalg.cho_solve((L, True), np.eye(Theta.shape[0]))
        Sigma = (Sigma + Sigma.T) / 2.0
        return cls(tuple(views), Theta, Sigma, nu, lam)

    @property
    def p(self):
        return self.Theta.shape[0]

    def replace(self, views=None, Theta=None):
        return ModelState.create(
            self.views if views is None else views,
            self.Theta if Theta is None else Theta,
            self.nu,
            self.lam,
        )

@dataclass(frozen=True)
class TauMatrix:
    """ Latent scale expectations, one strictly positive vector per view. """
    values: tuple

    def __post_init__(self):
        values = tuple(_frozenArray(v) for v in self.values)
        object.__setattr__(self, "values", values)
        for tau in values:
            if tau.ndim != 1:
                raise ShapeError("tau entries must be vectors.")
            if not (np.all(np.isfinite(tau)) and np.all(tau > 0)):
                raise ValidationError("tau entries must be positive and finite.")

    def __getitem__(self, d):
        return self.values[d]

    def __len__(self):
        return len(self.values)

@dataclass(frozen=True)
class PrecisionEstimate:
    """
    Symmetric PD precision matrix and the undirected graph it induces.

    A non-zero Theta_ij (beyond EDGE_EPS relative to max |Theta|) is an edge {i, j}.
    """
    Theta: np.ndarray
    edges: frozenset
    lam: float

    def __post_init__(self):
        Theta = _frozenArray(self.Theta)
        object.__setattr__(self, "Theta", Theta)
        object.__setattr__(self, "edges", frozenset(self.edges))
        _checkSymmetric(Theta, "Theta")
        for i, j in self.edges:
            if i == j:
                raise ValidationError("Self loop {0} in edge set.".format(i))

    @classmethod
    def fromTheta(cls, Theta, lam, eps=EDGE_EPS):
        Theta = np.asarray(Theta, dtype=float)
        Theta = (Theta + Theta.T) / 2.0
        scale = float(np.max(np.abs(Theta))) if Theta.size else 0.0
        threshold = eps * scale
        rows, cols = np.nonzero(np.abs(np.triu(Theta, 1)) > threshold)
        edges = frozenset((int(i), int(j)) for i, j in zip(rows, cols))
        return cls(Theta, edges, lam)

    @property
    def p(self):
        return self.Theta.shape[0]

@dataclass(frozen=True)
class SelectionProbabilityMatrix:
    """
    Edge selection frequencies Pi over n_replicates subsampled refits at penalty lam.
    """
    Pi: np.ndarray
    lam: float
    n_replicates: int

    def __post_init__(self):
        Pi = np.array(self.Pi, dtype=float, copy=True)
        np.fill_diagonal(Pi, 0.0)
        Pi.setflags(write=False)
        object.__setattr__(self, "Pi", Pi)
        _checkSymmetric(Pi, "Pi", tol=0.0)
        if np.any(Pi < 0) or np.any(Pi > 1):
            raise ValidationError("Selection probabilities must lie in [0, 1].")
        counts = Pi * self.n_replicates
        if np.max(np.abs(counts - np.round(counts))) > 1e-9:
            raise ValidationError("Selection probabilities must be multiples of 1/N.")

    def selected(self, threshold):
        """ Edges with probability strictly above threshold. """
        rows, cols = np.nonzero(np.triu(self.Pi, 1) > threshold)
        return frozenset((int(i), int(j)) for i, j in zip(rows, cols))
