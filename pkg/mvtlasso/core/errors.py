"""
Exception and warning types raised across the mvtlasso package.

Callers that only care about "bad input" vs "the numbers went wrong" can catch
ValidationError and NumericError; the CLI maps those to exit codes 2 and 3.
"""

class MvtlassoError(Exception):
    pass

class ValidationError(MvtlassoError, ValueError):
    pass

class ShapeError(ValidationError):
    pass

class NumericError(MvtlassoError, FloatingPointError):
    pass

class SingularityError(NumericError):
    pass

class NonPositiveDefiniteError(NumericError):
    pass

class RegularizationError(NumericError):
    """ A scatter/covariance is too degenerate to be used without regularization. """
    pass

class ConvergenceError(NumericError):
    """
    An iterative solver hit its iteration cap.

    Attributes:
        iterate: last iterate reached by the solver.
        gap (float): convergence measure at the last iterate.
    """
    def __init__(self, message, iterate=None, gap=None):
        super().__init__(message)
        self.iterate = iterate
        self.gap = gap

class GenerationError(MvtlassoError):
    pass

class StageError(MvtlassoError):
    """
    Wraps a failure inside a multi stage pipeline with the stage name and EM iteration.
    """
    def __init__(self, stage, iteration, cause):
        super().__init__("Stage '{0}' failed at iteration {1}: {2}".format(stage, iteration, cause))
        self.stage = stage
        self.iteration = iteration
        self.cause = cause

class ReducedRankWarning(UserWarning):
    pass

class ConvergenceWarning(UserWarning):
    pass
