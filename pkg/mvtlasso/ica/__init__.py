from .fastica import (IcaResult, whiten, fastica, robust_excess_kurtosis, kurtosis_order,
            excess_kurtosis, GAUSSIAN_OCTILE_KURTOSIS)
