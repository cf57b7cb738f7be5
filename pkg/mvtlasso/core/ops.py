import numpy as np

from .errors import ShapeError, SingularityError, NumericError
from .types import ExpressionView, ViewParams

# W counts as singular once the condition number of its column normalized form exceeds this.
SINGULAR_COND = 1.0 / np.finfo(float).eps

# Largest negative rounding slack tolerated in a quadratic form.
NEGATIVE_FORM_TOL = 1e-10

def columnCondition(W):
    """ Condition number of W after scaling each column to unit norm; inf for a zero column. """
    columnNorms = np.linalg.norm(W, axis=0)
    if np.any(columnNorms == 0) or not np.all(np.isfinite(W)):
        return np.inf
    return float(np.linalg.cond(W / columnNorms[None, :]))

def unmix(view, params):
    """
    Unmixed loadings Y = X W of one view.

    Columns 0..k-1 of the result estimate signal loadings, the rest noise loadings.

    Args:
        view: ExpressionView or a plain p x n matrix.
        params: ViewParams or a plain n x n matrix.
    """
    X = view.data if isinstance(view, ExpressionView) else np.asarray(view, dtype=float)
    W = params.W if isinstance(params, ViewParams) else np.asarray(params, dtype=float)
    if X.ndim != 2 or W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeError("unmix needs a matrix X and square W, got {0} and {1}.".format(X.shape, W.shape))
    if X.shape[1] != W.shape[0]:
        raise ShapeError("X has {0} columns but W is {1}x{1}.".format(X.shape[1], W.shape[0]))
    if columnCondition(W) > SINGULAR_COND:
        raise SingularityError("Unmixing matrix is singular.")
    return X @ W

def mahalanobis_delta(y, rho, Phi_inv):
    """ (y - rho)' Phi_inv (y - rho). """
    y = np.asarray(y, dtype=float)
    rho = np.asarray(rho, dtype=float)
    Phi_inv = np.asarray(Phi_inv, dtype=float)
    if y.shape != rho.shape or y.ndim != 1 or Phi_inv.shape != (y.shape[0], y.shape[0]):
        raise ShapeError("Shapes {0}, {1}, {2} do not conform.".format(y.shape, rho.shape, Phi_inv.shape))
    diff = y - rho
    value = float(diff @ Phi_inv @ diff)
    if value < -NEGATIVE_FORM_TOL or not np.isfinite(value):
        raise NumericError("Quadratic form is {0}; Phi_inv is not positive definite.".format(value))
    return max(value, 0.0)

def mahalanobis_columns(Y, rho, Phi_inv):
    """
    mahalanobis_delta applied to every column of Y against a shared rho and Phi_inv.
    """
    D = np.asarray(Y, dtype=float) - np.asarray(rho, dtype=float)[:, None]
    values = np.einsum("ij,ij->j", D, Phi_inv @ D)
    if np.any(values < -NEGATIVE_FORM_TOL) or not np.all(np.isfinite(values)):
        raise NumericError("Quadratic form is negative; Phi_inv is not positive definite.")
    return np.maximum(values, 0.0)
