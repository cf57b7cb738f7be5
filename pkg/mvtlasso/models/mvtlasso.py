"""
Multi view EM for a shared sparse precision matrix.

Every view d is modeled as X_d = S_d A_d + Z_d B_d with t distributed latent columns:
signal columns S_d ~ t_p(nu, mu_d, Theta^-1) shared across views, noise columns
Z_d ~ t_p(nu, 0, sigma_d^2 I). With W_d = (A_d | B_d)^-1 the unmixed loadings are
Y_d = X_d W_d, whose first k_d columns are signal.

One EM iteration runs the E-step (posterior means of the latent scales) and then the
M-substeps: closed form moments, graphical lasso for Theta, and a line-search step for
every W_d. All substeps increase the same Q function, so the penalized log-likelihood

    sum_d [ ln|det W_d| + sum_i log t_p(Y_d,i | nu, rho_d,i, Phi_d,i) ] - (K/2) lam ||Theta||_1

with K = sum_d k_d never decreases while the W-steps succeed.
"""
import logging, math, warnings
from dataclasses import dataclass, field

import numpy as np
import torch
from scipy import linalg

from ..core.errors import (MvtlassoError, ValidationError, ShapeError, RegularizationError,
            StageError, ReducedRankWarning, ConvergenceWarning)
from ..core.ops import unmix, mahalanobis_columns
from ..core.types import ExpressionView, ViewParams, ModelState, TauMatrix, alignViews, choleskyOrRaise
from ..glasso import GlassoSettings, solve, l1Norm
from ..ica import fastica, kurtosis_order
from ..optim import Optimizer
from ..tdist import tau_posterior_mean, log_density_delta
from ..tlasso import tlasso_fit
from ..util import blockProfiler, methodProfiler
from ..util.tensorboard import nullTensorBoardHook
from .rank import select_rank

logger = logging.getLogger(__name__)

# Eigenvalue floor of the pooled scatter before it is handed to the graphical lasso.
PSD_FLOOR = 1e-10

# Bounds on the diagonal scale factors of W.
SCALE_BOUNDS = (1e-6, 1e6)

# Weight on the trace terms of the W objective that makes the W-step a Q-function step.
Q_TRACE_WEIGHT = 0.5

# Stream namespaces under the fit seed.
_ICA_STREAM = 1

@dataclass(frozen=True)
class WOptSettings:
    """
    Args:
        max_iter (int): line-search steps per W-step.
        step (float): initial step size.
        tol (float): stop once the Riemannian gradient norm is below tol.
        max_grad_norm (float): gradient clipping, 0 disables.
        max_backtracks (int): step halvings before a step is declared failed.
    """
    max_iter: int = 100
    step: float = 1.0
    tol: float = 1e-7
    max_grad_norm: float = 0.0
    max_backtracks: int = 30

@dataclass(frozen=True)
class MvtlassoSettings:
    lam: float
    nu: float = 3.0
    k_per_view: object = "auto"
    max_em_iter: int = 50
    em_tol: float = 1e-5
    w_opt: WOptSettings = field(default_factory=WOptSettings)
    seed: int = 0
    msteps_per_iter: int = 1
    w_init: str = "ica"
    update_w: bool = True
    penalize_diagonal: bool = True
    glasso_max_iter: int = 200
    glasso_tol: float = 1e-5
    ica_max_iter: int = 500
    ica_tol: float = 1e-6
    warm_start_iter: int = 5
    rank_permutations: int = 49
    rank_quantile: float = 0.95
    n_jobs: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("lambda must be positive, got {0}.".format(self.lam))
        if not self.nu > 2:
            raise ValidationError("nu must exceed 2, got {0}.".format(self.nu))
        if self.w_init not in ("ica", "identity"):
            raise ValidationError("w_init must be 'ica' or 'identity', got {0}.".format(self.w_init))
        if self.max_em_iter < 1 or self.msteps_per_iter < 1 or self.warm_start_iter < 1:
            raise ValidationError("max_em_iter, msteps_per_iter and warm_start_iter must be >= 1.")
        if isinstance(self.k_per_view, str):
            if self.k_per_view != "auto":
                raise ValidationError("k_per_view must be 'auto' or a list of ranks.")
        else:
            ks = (self.k_per_view,) if isinstance(self.k_per_view, int) else tuple(self.k_per_view)
            if not ks or any(int(k) < 1 for k in ks):
                raise ValidationError("Explicit signal ranks must be >= 1, got {0}.".format(ks))
            object.__setattr__(self, "k_per_view", tuple(int(k) for k in ks))

    def glassoSettings(self):
        return GlassoSettings(lam=self.lam, max_iter=self.glasso_max_iter, tol=self.glasso_tol,
                              penalize_diagonal=self.penalize_diagonal)

@dataclass
class FitReport:
    """
    Outcome of fit().

    Args:
        model (ModelState): final parameters.
        tau (TauMatrix): latent scale expectations from the last E-step.
        q_trace (list): Q-function value after the M-step of every iteration.
        loglik_trace (list): penalized log-likelihood after every iteration.
        converged (bool): whether the relative log-likelihood change fell below em_tol.
        iterations (int): EM iterations run.
        q_gain_trace (list): Q after the M-step minus Q before it, per iteration.
        w_success (list): whether every W-step of the iteration reported success.
        estimate (PrecisionEstimate): the last graphical lasso solution.
        bases (list): per view fixed basis B_d of the parameterization W_d = B_d Q_d Lambda_d.
    """
    model: ModelState
    tau: TauMatrix
    q_trace: list = field(default_factory=list)
    loglik_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    q_gain_trace: list = field(default_factory=list)
    w_success: list = field(default_factory=list)
    estimate: object = None
    bases: list = field(default_factory=list)

@dataclass(frozen=True)
class Moments:
    mus: tuple
    Sigma: np.ndarray
    sigmas: tuple

@dataclass(frozen=True)
class WStepResult:
    """
    Args:
        W (matrix): new unmixing matrix, current_W when the step failed.
        success (bool): False when no decrease of the objective was found.
        objective_before (float): objective at current_W.
        objective_after (float): objective at W.
        iterations (int): accepted line-search steps.
    """
    W: np.ndarray
    success: bool
    objective_before: float
    objective_after: float
    iterations: int

def _data(view):
    return view.data if isinstance(view, ExpressionView) else np.asarray(view, dtype=float)

def _logDetPrecision(Theta):
    L = choleskyOrRaise(Theta, "Theta")
    return 2.0 * float(np.sum(np.log(np.diag(L))))

def _columnDeltas(Y, params, Theta):
    """ Squared Mahalanobis distances of signal and noise columns of Y. """
    k = params.k
    signal = mahalanobis_columns(Y[:, :k], params.mu, Theta)
    noise = np.sum(Y[:, k:] ** 2, axis=0) / params.sigma ** 2
    return signal, noise

def signalCount(model):
    return int(sum(params.k for params in model.views))

@methodProfiler
def estep(views, model):
    """
    Posterior means of the latent scales: tau_d,i = (nu + p) / (nu + delta_d,i), where
    delta uses (mu_d, Theta) for signal columns and (0, I / sigma_d^2) for noise columns.
    """
    if len(views) != len(model.views):
        raise ShapeError("{0} views but {1} view parameter sets.".format(len(views), len(model.views)))
    taus = []
    for view, params in zip(views, model.views):
        Y = unmix(view, params)
        if Y.shape[0] != model.p:
            raise ShapeError("View has {0} genes, model has {1}.".format(Y.shape[0], model.p))
        signal, noise = _columnDeltas(Y, params, model.Theta)
        taus.append(tau_posterior_mean(np.concatenate([signal, noise]), model.nu, model.p))
    return TauMatrix(tuple(taus))

@methodProfiler
def mstep_moments(views, Y_all, tau):
    """
    Closed form M-substep.

        mu_d    = sum_{i<k_d} tau Y / sum_{i<k_d} tau
        Sigma   = (1 / sum_d k_d) sum_d sum_{i<k_d} tau (Y - mu_d)(Y - mu_d)'
        sigma_d = sqrt( sum_{i>=k_d} tau |Y|^2 / (p (n_d - k_d)) )

    Args:
        views: per view ViewParams (for k_d and the sigma kept when n_d = k_d).
        Y_all: per view unmixed loadings.
        tau: TauMatrix or per view tau vectors.

    Raises:
        RegularizationError: Sigma has an eigenvalue below -1e-10, or a noise scale is zero.
    """
    mus, sigmas = [], []
    p = Y_all[0].shape[0]
    scatter = np.zeros((p, p))
    totalSignal = 0
    for d, (params, Y) in enumerate(zip(views, Y_all)):
        k = params.k
        tauD = np.asarray(tau[d], dtype=float)
        signalTau = tauD[:k]
        mu = (Y[:, :k] @ signalTau) / np.sum(signalTau)
        centered = Y[:, :k] - mu[:, None]
        scatter += (centered * signalTau[None, :]) @ centered.T
        totalSignal += k
        mus.append(mu)

        r = Y.shape[1] - k
        if r == 0:
            sigmas.append(params.sigma)
            continue
        sigmaSquared = float(np.sum(tauD[k:] * np.sum(Y[:, k:] ** 2, axis=0))) / (p * r)
        if not sigmaSquared > 0:
            raise RegularizationError("Noise columns of view {0} are identically zero.".format(d))
        sigmas.append(math.sqrt(sigmaSquared))

    Sigma = _repairScatter(scatter / totalSignal)
    return Moments(tuple(mus), Sigma, tuple(sigmas))

def _repairScatter(Sigma):
    Sigma = (Sigma + Sigma.T) / 2.0
    eigenvalues, eigenvectors = linalg.eigh(Sigma)
    if eigenvalues[0] < -PSD_FLOOR:
        raise RegularizationError("Pooled scatter has eigenvalue {0:.3e}.".format(eigenvalues[0]))
    if eigenvalues[0] < PSD_FLOOR:
        logger.warning("Pooled scatter is singular (min eigenvalue {0:.3e}); clipping eigenvalues at {1}.".format(
            eigenvalues[0], PSD_FLOOR))
        clipped = np.maximum(eigenvalues, PSD_FLOOR)
        Sigma = (eigenvectors * clipped[None, :]) @ eigenvectors.T
        Sigma = (Sigma + Sigma.T) / 2.0
    return Sigma

@methodProfiler
def mstep_theta(Sigma, lam, settings=None, warmStart=None):
    """ Graphical lasso on the pooled scatter. """
    if settings is None:
        settings = GlassoSettings(lam=lam)
    elif settings.lam != lam:
        settings = GlassoSettings(lam=lam, max_iter=settings.max_iter, tol=settings.tol,
                                  penalize_diagonal=settings.penalize_diagonal,
                                  inner_max_iter=settings.inner_max_iter)
    return solve(Sigma, settings, warmStart=warmStart)

def _wObjectiveTorch(XB, mu, Theta, sigma, tau, k, traceWeight, logAbsDetBasis):
    """
    Builds the W objective as a function of (Q, u) for W = B Q diag(exp(u)):

        traceWeight * [ tr((X W - M)' Theta (X W - M) T1) + tr(W' X' X W T2) / sigma^2 ]
            - ln|det W|

    with M the matrix repeating mu in every column, T1 = diag(tau) on the first k
    columns and T2 = diag(tau) on the rest.
    """
    n = XB.shape[1]
    signalMask = torch.zeros(n, dtype=torch.float64)
    signalMask[:k] = 1.0
    T1 = tau * signalMask
    T2 = tau * (1.0 - signalMask)

    def objective(Q, u):
        Y = (XB @ Q) * torch.exp(u)[None, :]
        M = Y - mu[:, None]
        signalTerm = torch.sum(torch.sum(M * (Theta @ M), dim=0) * T1)
        noiseTerm = torch.sum(torch.sum(Y * Y, dim=0) * T2) / sigma ** 2
        logAbsDetQ = torch.linalg.slogdet(Q)[1]
        return traceWeight * (signalTerm + noiseTerm) - (logAbsDetBasis + logAbsDetQ + torch.sum(u))
    return objective

def w_objective(view, W, mu, Theta, sigma, tau, k=None, traceWeight=1.0):
    """
    Value of the W objective at W (see mstep_W). traceWeight = 1 is the literal form,
    0.5 is the weight under which it equals minus the W-dependent part of the Q function.
    """
    X = _data(view)
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    k = n if k is None else int(k)
    tensor = lambda a: torch.as_tensor(np.asarray(a, dtype=float), dtype=torch.float64)
    logAbsDetW = float(np.linalg.slogdet(W)[1])
    objective = _wObjectiveTorch(tensor(X @ W), tensor(mu), tensor(Theta), float(sigma), tensor(tau),
                                 k, traceWeight, logAbsDetW)
    with torch.no_grad():
        return float(objective(torch.eye(n, dtype=torch.float64), torch.zeros(n, dtype=torch.float64)))

def _decompose(basis, W):
    """ (Q, u) with W = basis Q diag(exp(u)) when the columns of basis^-1 W are orthogonal. """
    M = linalg.solve(basis, W)
    scales = np.linalg.norm(M, axis=0)
    scales = np.clip(scales, *SCALE_BOUNDS)
    Q = M / scales[None, :]
    if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > 1e-8:
        U, _, Vt = np.linalg.svd(Q)
        Q = U @ Vt
    return Q, np.log(scales)

@methodProfiler
def mstep_W(view, mu_d, Theta, sigma_d, tau_d, current_W, w_opt=None, k=None, basis=None, traceWeight=1.0):
    """
    Decreases the W objective

        traceWeight * [ tr((X W - M)' Theta (X W - M) T1) + tr(W' X' X W T2) / sigma^2 ] - ln|det W|

    starting from current_W, over W = B Q Lambda with Q orthogonal and Lambda diagonal in
    [1e-6, 1e6]. B is the fixed basis (the ICA unmixing in fit, identity by default).

    Returns:
        WStepResult; when no decrease relative to current_W is found, W is current_W and
        success is False.
    """
    w_opt = WOptSettings() if w_opt is None else w_opt
    X = _data(view)
    current_W = np.asarray(current_W, dtype=float)
    n = current_W.shape[0]
    if X.shape[1] != n:
        raise ShapeError("X has {0} columns but W is {1}x{1}.".format(X.shape[1], n))
    k = n if k is None else int(k)
    basis = np.eye(n) if basis is None else np.asarray(basis, dtype=float)

    before = w_objective(X, current_W, mu_d, Theta, sigma_d, tau_d, k, traceWeight)
    Q0, u0 = _decompose(basis, current_W)

    tensor = lambda a: torch.as_tensor(np.asarray(a, dtype=float), dtype=torch.float64)
    logAbsDetBasis = float(np.linalg.slogdet(basis)[1])
    objective = _wObjectiveTorch(tensor(X @ basis), tensor(mu_d), tensor(Theta), float(sigma_d),
                                 tensor(tau_d), k, traceWeight, logAbsDetBasis)
    optimizer = Optimizer(objective, tensor(Q0), tensor(u0), step=w_opt.step,
                          max_grad_norm=w_opt.max_grad_norm,
                          log_bounds=(math.log(SCALE_BOUNDS[0]), math.log(SCALE_BOUNDS[1])),
                          max_backtracks=w_opt.max_backtracks)
    accepted = 0
    for _ in range(w_opt.max_iter):
        if optimizer.gradient_norm() < w_opt.tol:
            break
        if not optimizer.step():
            break
        accepted += 1

    Q = optimizer.Q.numpy()
    scales = np.exp(optimizer.u.numpy())
    candidate = basis @ Q * scales[None, :]
    after = w_objective(X, candidate, mu_d, Theta, sigma_d, tau_d, k, traceWeight)
    if not (np.isfinite(after) and after <= before + 1e-10):
        logger.warning("W-step found no decrease ({0:.6f} -> {1:.6f}); keeping the current W.".format(before, after))
        return WStepResult(current_W, False, before, before, accepted)
    return WStepResult(candidate, True, before, after, accepted)

def complete_loglik(views, model, tau, Y=None, penalize_diagonal=True):
    """
    Q-function: the complete data log-likelihood with tau replaced by its expectation,
    up to terms that do not depend on the parameters, plus the log prior of Theta.

    The prior enters as -(K/2) lam ||Theta||_1 with K = sum_d k_d: every signal column
    contributes a term (1/2) [ln det Theta - tr(Theta S_i)], so scaling the penalty by K/2
    makes the Theta-substep exactly the graphical lasso -ln det Theta + tr(S Theta) +
    lam ||Theta||_1 on the pooled scatter S.
    """
    Y = [unmix(view, params) for view, params in zip(views, model.views)] if Y is None else Y
    p = model.p
    logDetTheta = _logDetPrecision(model.Theta)
    total = 0.0
    for d, (params, Yd) in enumerate(zip(model.views, Y)):
        tauD = np.asarray(tau[d], dtype=float)
        k = params.k
        signal, noise = _columnDeltas(Yd, params, model.Theta)
        total += float(np.linalg.slogdet(params.W)[1])
        total += 0.5 * k * logDetTheta - 0.5 * float(np.sum(tauD[:k] * signal))
        total += -p * (Yd.shape[1] - k) * math.log(params.sigma) - 0.5 * float(np.sum(tauD[k:] * noise))
    return total - 0.5 * signalCount(model) * model.lam * l1Norm(model.Theta, penalize_diagonal)

def penalized_loglik(views, model, penalize_diagonal=True):
    """
    sum_d [ ln|det W_d| + sum_i log t_p(Y_d,i | nu, rho_d,i, Phi_d,i) ] - (K/2) lam ||Theta||_1.

    K = sum_d k_d. The K/2 factor puts lam on the scale of the per column graphical lasso
    objective; a prior -c ||Theta||_1 is recovered with lam = 2c / K.
    """
    p = model.p
    logDetTheta = _logDetPrecision(model.Theta)
    total = 0.0
    for view, params in zip(views, model.views):
        Y = unmix(view, params)
        signal, noise = _columnDeltas(Y, params, model.Theta)
        total += float(np.linalg.slogdet(params.W)[1])
        total += float(np.sum(log_density_delta(signal, model.nu, p, logDetTheta)))
        total += float(np.sum(log_density_delta(noise, model.nu, p, -2.0 * p * math.log(params.sigma))))
    return total - 0.5 * signalCount(model) * model.lam * l1Norm(model.Theta, penalize_diagonal)

def _resolveRanks(views, settings):
    if settings.k_per_view == "auto":
        return [select_rank(view, settings.rank_permutations, settings.rank_quantile,
                            seed=settings.seed + d, n_jobs=settings.n_jobs)
                for d, view in enumerate(views)]
    ks = list(settings.k_per_view)
    if len(ks) == 1 and len(views) > 1:
        ks = ks * len(views)
    if len(ks) != len(views):
        raise ValidationError("{0} signal ranks given for {1} views.".format(len(ks), len(views)))
    for view, k in zip(views, ks):
        if not 1 <= k <= view.n:
            raise ValidationError("Signal rank k={0} outside [1, {1}] for view {2}.".format(k, view.n, view.view_id))
    return ks

def _initialBasis(view, d, k, settings):
    """
    Fixed basis B_d with columns ordered signal first.

    ICA separates at most rank(X_d) sources. When the view has fewer independent
    directions than samples, the ICA columns are completed by an orthonormal basis of
    the complement of their span, placed last so it only ever carries noise.
    """
    if settings.w_init == "identity":
        return np.eye(view.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedRankWarning)
        ica = fastica(view.data, settings.seed, max_iter=settings.ica_max_iter, tol=settings.ica_tol,
                      center=False, key=(_ICA_STREAM, d))
    if not ica.converged:
        logger.warning("ICA on view {0} did not converge in {1} iterations.".format(view.view_id, ica.iterations))
    order = kurtosis_order(ica.components)
    basis = ica.unmixing[:, order]
    if ica.rank < view.n:
        if k >= ica.rank:
            raise ValidationError("Signal rank k={0} leaves no noise direction in view {1} "
                                  "of numerical rank {2}.".format(k, view.view_id, ica.rank))
        logger.warning("View {0} has numerical rank {1} below its {2} samples; completing the ICA basis.".format(
            view.view_id, ica.rank, view.n))
        basis = np.hstack([basis, linalg.null_space(ica.unmixing.T)])
    return basis

def _warmStart(views, bases, ks, settings):
    """ TLASSO on the pooled signal columns for (mu_d, Theta); noise scale from noise columns. """
    Ys = [view.data @ basis for view, basis in zip(views, bases)]
    pooled = np.hstack([Y[:, :k] for Y, k in zip(Ys, ks)])
    p = pooled.shape[0]
    if pooled.shape[1] >= 2:
        state = tlasso_fit(pooled, settings.nu, settings.lam, max_em_iter=settings.warm_start_iter,
                           tol=settings.em_tol, seed=settings.seed, glassoSettings=settings.glassoSettings())
        Theta, tauPooled = state.Theta, state.tau
    else:
        scale = max(float(np.mean((pooled - pooled.mean()) ** 2)), float(np.mean(pooled ** 2)), 1e-12)
        Theta, tauPooled = np.eye(p) / scale, np.ones(pooled.shape[1])

    params = []
    offset = 0
    for Y, k, basis in zip(Ys, ks, bases):
        tauD = tauPooled[offset:offset + k]
        offset += k
        mu = (Y[:, :k] @ tauD) / np.sum(tauD)
        noise = Y[:, k:]
        sigma = math.sqrt(float(np.mean(noise ** 2))) if noise.shape[1] > 0 else 1.0
        if not sigma > 0:
            raise RegularizationError("Noise columns are identically zero at initialization.")
        params.append(ViewParams(basis, mu, sigma, k))
    return params, Theta

def initial_scatter(views, settings):
    """
    Pooled scatter of the initial signal columns (unit tau), the scale on which fit's
    penalty acts. Used to place penalty grids.
    """
    views = alignViews(views)
    ks = _resolveRanks(views, settings)
    scatter = 0.0
    for d, (view, k) in enumerate(zip(views, ks)):
        signal = (view.data @ _initialBasis(view, d, k, settings))[:, :k]
        centered = signal - signal.mean(axis=1)[:, None]
        scatter = scatter + centered @ centered.T
    scatter = scatter / sum(ks)
    return (scatter + scatter.T) / 2.0

def _stage(name, iteration, func, *args, **kwargs):
    try:
        with blockProfiler(name):
            return func(*args, **kwargs)
    except StageError:
        raise
    except (MvtlassoError, linalg.LinAlgError, FloatingPointError, ValueError) as e:
        raise StageError(name, iteration, e) from e

@methodProfiler
def fit(views, settings, hook=None):
    """
    Runs the multi view EM.

    Pipeline: signal rank selection (when k_per_view is "auto"), per view ICA basis with
    columns ordered by decreasing robust kurtosis (top k_d are signal, frozen for the run),
    TLASSO warm start, then EM iterations until the relative change of the penalized
    log-likelihood is below em_tol or max_em_iter is reached.

    Args:
        views (list): ExpressionView objects sharing the gene axis.
        settings (MvtlassoSettings)
        hook (TensorBoardHook, optional): receives per iteration scalars.

    Returns:
        FitReport

    Raises:
        ValidationError: inconsistent inputs.
        StageError: a substep failed; carries the stage name and EM iteration.
    """
    hook = nullTensorBoardHook if hook is None else hook
    views = alignViews(views)
    glassoSettings = settings.glassoSettings()

    ks = _stage("rank", 0, _resolveRanks, views, settings)
    logger.info("Signal ranks per view: {0}".format(ks))
    bases = [_stage("ica", 0, _initialBasis, view, d, k, settings) for d, (view, k) in enumerate(zip(views, ks))]
    params, Theta = _stage("warm_start", 0, _warmStart, views, bases, ks, settings)
    model = _stage("warm_start", 0, ModelState.create, params, Theta, settings.nu, settings.lam)

    report = FitReport(model=model, tau=TauMatrix(tuple(np.ones(view.n) for view in views)), bases=bases)
    previousLoglik = _stage("loglik", 0, penalized_loglik, views, model, settings.penalize_diagonal)
    logger.info("EM start: penalized log-likelihood {0:.6f}".format(previousLoglik))

    estimate = None
    for iteration in range(1, settings.max_em_iter + 1):
        tau = _stage("estep", iteration, estep, views, model)
        qBefore = _stage("q", iteration, complete_loglik, views, model, tau, None, settings.penalize_diagonal)

        wSuccess = True
        for _ in range(settings.msteps_per_iter):
            Y_all = [unmix(view, p) for view, p in zip(views, model.views)]
            moments = _stage("moments", iteration, mstep_moments, model.views, Y_all, tau)
            estimate = _stage("theta", iteration, mstep_theta, moments.Sigma, settings.lam, glassoSettings, estimate)

            newParams = []
            for d, (view, old) in enumerate(zip(views, model.views)):
                W = old.W
                if settings.update_w:
                    result = _stage("W", iteration, mstep_W, view, moments.mus[d], estimate.Theta,
                                    moments.sigmas[d], tau[d], old.W, settings.w_opt, old.k, bases[d],
                                    Q_TRACE_WEIGHT)
                    wSuccess = wSuccess and result.success
                    W = result.W
                newParams.append(ViewParams(W, moments.mus[d], moments.sigmas[d], old.k))
            model = _stage("theta", iteration, ModelState.create, newParams, estimate.Theta, settings.nu, settings.lam)

        qAfter = _stage("q", iteration, complete_loglik, views, model, tau, None, settings.penalize_diagonal)
        loglik = _stage("loglik", iteration, penalized_loglik, views, model, settings.penalize_diagonal)

        report.q_trace.append(qAfter)
        report.q_gain_trace.append(qAfter - qBefore)
        report.loglik_trace.append(loglik)
        report.w_success.append(wSuccess)
        report.iterations = iteration
        report.model, report.tau, report.estimate = model, tau, estimate

        change = abs(loglik - previousLoglik) / max(1.0, abs(previousLoglik))
        logger.info("EM iteration {0}: loglik {1:.6f}, Q {2:.6f}, relative change {3:.3e}, edges {4}, W {5}".format(
            iteration, loglik, qAfter, change, len(estimate.edges), "ok" if wSuccess else "kept"))
        hook.stepReset(step=iteration)
        hook.add_scalar("fit/loglik", loglik)
        hook.add_scalar("fit/q", qAfter)
        hook.add_scalar("fit/edges", len(estimate.edges))

        previousLoglik = loglik
        if change < settings.em_tol:
            report.converged = True
            break

    if not report.converged:
        message = "EM stopped after {0} iterations without reaching em_tol={1}.".format(
            report.iterations, settings.em_tol)
        logger.warning(message)
        warnings.warn(message, ConvergenceWarning)
    return report
