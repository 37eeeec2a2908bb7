"""rankbench: feature-ranking explanations for binary classifiers, model
complexity statistics from accumulated local effects, and faithfulness
benchmarking of ranking methods via subset retraining."""

from .dataset import (
    CorrelationSummary,
    Dataset,
    SyntheticSpec,
    bootstrap,
    correlation_summary,
    derive_seed,
    generate,
    load_csv,
    pareto_weights,
    split,
    subset,
)
from .effects import (
    AleCurve,
    ComplexityReport,
    ale_variance_scores,
    complexity_report,
    compute_ale,
    compute_all_ale,
    first_order_predict,
    ias,
    mec,
    mec_feature,
)
from .faithfulness import (
    FaithfulnessRecord,
    FaithfulnessReport,
    incremental_curves,
    pareto_curve,
    run_experiment,
    topk_bottomk,
)
from .metrics import (
    FitStats,
    PerformanceDiagram,
    association_stats,
    bootstrap_ci,
    brier_skill_score,
    naupdc,
    ncsi,
    performance_curve,
    roc_auc,
)
from .models import (
    ForestConfig,
    LogRegConfig,
    Predictor,
    coefficients,
    fit,
    fit_forest,
    fit_logreg,
    gini_importance,
    predict,
    predictor_from_json,
    predictor_to_json,
    tree_path_attribution,
)
from .rankings import (
    AggregatedRanking,
    RankingScorecard,
    aggregate,
    ale_variance_ranking,
    coefficient_ranking,
    gini_ranking,
    lime_relevance,
    permutation_importance,
    rank_uncertainty,
    sage_importance,
    shapley_relevance,
    tree_path_ranking,
    uncertainty_ratio,
)
from .selection import (
    SelectionReport,
    compare_models,
    correlated_pairs,
    l1_select,
    manual_filter,
)

__version__ = "0.1.0"
