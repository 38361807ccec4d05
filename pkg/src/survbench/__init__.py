"""Benchmarking toolkit for survival models on censored data.

Linear (Cox, elastic-net Cox) and tree-ensemble (random survival forest,
gradient-boosted Cox) models, concordance / Brier / AUROC metrics, synthetic
PH and non-PH data generators and a nested cross-validation harness.
"""

from ._kernels import BACKEND
from .core import StepFunction, SurvivalDataset, SurvivalPredictionMatrix, TimeGrid, validate_dataset
from .ensemble import fit_gbcox, fit_rsf, gbcox_predict, rsf_predict
from .harness import ModelSpec, NestedCVPlan, nested_cv, run_ablation, run_benchmark
from .linear import ElasticNetConfig, cox_predict, fit_cox, fit_coxnet
from .metrics import antolini_c, brier_score_at, evaluate, harrell_c, harrell_c_quartile_avg
from .nonparam import breslow_baseline, kaplan_meier, nelson_aalen
from .synthetic import GeneratorSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ElasticNetConfig",
    "GeneratorSpec",
    "ModelSpec",
    "NestedCVPlan",
    "StepFunction",
    "SurvivalDataset",
    "SurvivalPredictionMatrix",
    "TimeGrid",
    "antolini_c",
    "breslow_baseline",
    "brier_score_at",
    "cox_predict",
    "evaluate",
    "fit_cox",
    "fit_coxnet",
    "fit_gbcox",
    "fit_rsf",
    "gbcox_predict",
    "generate",
    "harrell_c",
    "harrell_c_quartile_avg",
    "kaplan_meier",
    "nelson_aalen",
    "nested_cv",
    "rsf_predict",
    "run_ablation",
    "run_benchmark",
    "validate_dataset",
]
