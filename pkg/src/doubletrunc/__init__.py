"""Nonparametric inference for doubly truncated data.

Nonparametric MLE, empirical CDF, and a bootstrap test of the null
hypothesis that double truncation induces no sampling bias.
"""
from .biastest import (BiasTestReport, SeRatioCurve, bias_test_with_se, bootstrap_replicate,
                       bootstrap_test, dn_statistic, se_ratio)
from .core import (SamplingCurve, TruncatedObservation, TruncatedSample, WeightedCDF,
                   make_weighted_cdf, sup_distance, validate_sample)
from .estimators import (FitDiagnostics, FitStatus, NpmleFit, coverage_matrix, ecdf, fit_npmle,
                         is_identifiable, log_likelihood, npmle_cdf, sampling_curve)
from .exceptions import *  # noqa: F401,F403
from .simulate import (McResult, McScenario, TargetLaw, analytic_g, count_discards, draw_target,
                       draw_truncated_sample, run_monte_carlo)

__version__ = "0.1.0"
