from .estimators import (Estimator, GlassoEstimator, TlassoEstimator, GlassoIcaEstimator,
            GlassoStdEstimator, MvtlassoEstimator, ESTIMATORS, FIT_ERRORS, make_estimator, empirical_scatter)
from .bench import (Confusion, RocCurve, confusion, auc_from_points, lambda_grid, roc_sweep,
            compare_methods)
