from .mvt import MvtParams, log_density, log_density_delta, sample, tau_posterior_mean
