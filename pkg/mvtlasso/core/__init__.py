from .errors import (MvtlassoError, ValidationError, ShapeError, NumericError, SingularityError,
            NonPositiveDefiniteError, RegularizationError, ConvergenceError, GenerationError,
            StageError, ReducedRankWarning, ConvergenceWarning)
from .types import (EDGE_EPS, ExpressionView, ViewParams, ModelState, TauMatrix, PrecisionEstimate,
            SelectionProbabilityMatrix, alignViews, choleskyOrRaise)
from .ops import unmix, mahalanobis_delta, mahalanobis_columns
