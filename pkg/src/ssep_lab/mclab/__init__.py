"""Ensembles, estimators, fits and verdicts."""
from .accumulators import MomentAccumulator
from .compare import Verdict, compare_mc_limit
from .dual import DualEstimate, pair_correlation_dual
from .ensemble import (EnsembleResult, ExperimentConfig, WindowPolicy, margin_doubling_check, normalisation,
                       run_ensemble)
from .fits import BoundReport, SlopeFit, bound_check, hurst_fit, loglog_fit, trend_pvalue
from .kv import KVRow, block_length, kv_bound, kv_experiment, kv_summary
from .report import CovarianceReport, product_se

__all__ = [
    "BoundReport", "CovarianceReport", "DualEstimate", "EnsembleResult", "ExperimentConfig", "KVRow",
    "MomentAccumulator", "SlopeFit", "Verdict", "WindowPolicy", "block_length", "bound_check",
    "compare_mc_limit", "hurst_fit", "kv_bound", "kv_experiment", "kv_summary", "loglog_fit",
    "margin_doubling_check", "normalisation", "pair_correlation_dual", "product_se", "run_ensemble",
    "trend_pvalue",
]
