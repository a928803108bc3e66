"""Graph-filtered random-walk over-sampling for imbalanced binary data."""

from .data import Dataset, DatasetSummary, FoldPlan, impute_mean, load_csv, make_folds, read_dataset, summarize
from .graph import AdjacencyGraph, keep_coefficients, knn_lists, mutual_adjacency
from .metrics import ConfusionCounts, MetricsReport, auc, auc_ratio, confusion, derive_metrics, win_summary
from .sampling import (
    MomentStats,
    ResampleResult,
    SamplerConfig,
    grwo_sample,
    moments,
    resample,
    ro_sample,
    roulette_draw,
    ru_sample,
    rwo_generate,
    rwo_sample,
    smote_sample,
    ugrwo_sample,
)

__version__ = "0.1.0"
