"""Stroke risk stratification toolkit.

Pipeline pieces: cohort ingestion and cleansing, CSPP "8+2" rule labeling,
CART / random-forest / logistic models, three interpretability measures (MDI,
permutation importance, SHAP), an experiment harness, a calibrated synthetic
cohort generator, and a JSON inference service for the what-if explorer UI.
"""

from ._accel import BACKEND, NUMBA_ENABLED
from .bundle import ModelBundle
from .cohort import (
    Cohort,
    CleansingConfig,
    CleansingReport,
    Feature,
    FeatureSchema,
    MISSING,
    cleanse,
    default_schema,
    ingest_csv,
    split_stratified,
)
from .evaluate import (
    ClassificationReport,
    RfeTrace,
    SweepResult,
    classification_report,
    missing_sweep,
    rfe,
    risk_group_probability,
    weighted_precision,
)
from .explain import (
    Explanation,
    PermutationReport,
    exact_shapley,
    permutation_importance,
    shap_dependence_export,
    shap_summary_export,
    tree_shap,
)
from .forest import ForestModel, fit_forest, mdi_importance, oob_accuracy, predict_forest
from .logit import (
    FitDiagnostics,
    LogitModel,
    PerfectSeparationError,
    fit_logit,
    predict_proba,
    relabel_binary,
    select_features,
)
from .rules import (
    CohortStats,
    CsppThresholds,
    RiskFactors,
    RiskLabel,
    cohort_stats,
    derive_factors,
    factors_cohort,
    label_cohort,
    label_risk,
)
from .synth import CalibrationTargets, generate_cohort
from .tree import TrainConfig, TreeModel, fit_tree, gini, predict_tree

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
