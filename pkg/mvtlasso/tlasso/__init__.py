from .tlasso import (TlassoState, tlasso_fit, tlasso_estep, tlasso_mstep, tlasso_objective,
            weighted_moments)
