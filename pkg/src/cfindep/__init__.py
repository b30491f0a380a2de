"""Independence test for high-dimensional vectors based on the characteristic
function of the empirical spectral distribution and the Marcenko-Pastur law."""

__version__ = "0.1.0"

from .calibrate import (NullCalibration, StatConfig, empirical_power, empirical_size,
                        run_grid, scaled_statistic, simulate_null)
from .cf_test import Decision, TestStatistic, WeightMeasure, decide, ecf, statistic_mn
from .eigcore import EigenSpectrum, eigenvalues_herm, eigenvalues_sym, spectrum_of
from .errors import *  # noqa: F401,F403
from .genmodels import ModelSpec, generate, null_counterpart
from .lrt import LrtResult, lrt_size_power, lrt_statistic
from .mp_law import MpParams, QuadratureRule, make_rule, mp_charfn, mp_density, mp_stieltjes

__all__ = [
    "__version__", "NullCalibration", "StatConfig", "empirical_power", "empirical_size",
    "run_grid", "scaled_statistic", "simulate_null", "Decision", "TestStatistic",
    "WeightMeasure", "decide", "ecf", "statistic_mn", "EigenSpectrum", "eigenvalues_herm",
    "eigenvalues_sym", "spectrum_of", "ModelSpec", "generate", "null_counterpart",
    "LrtResult", "lrt_size_power", "lrt_statistic", "MpParams", "QuadratureRule",
    "make_rule", "mp_charfn", "mp_density", "mp_stieltjes",
]
