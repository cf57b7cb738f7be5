from .solver import (GlassoSettings, solve, solve_path, objective, l1Norm, dualityGap,
            lambda_max, log_grid)
