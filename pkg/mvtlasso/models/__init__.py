from .mvtlasso import (WOptSettings, MvtlassoSettings, FitReport, Moments, WStepResult, estep,
            mstep_moments, mstep_theta, mstep_W, w_objective, fit, penalized_loglik, complete_loglik,
            initial_scatter,
            Q_TRACE_WEIGHT)
from .rank import select_rank
