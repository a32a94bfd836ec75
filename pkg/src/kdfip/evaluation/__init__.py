"""CER evaluation and the experiment/ablation harness."""

from .cer import EvalResult, cer, edit_distance, evaluate
from .harness import (
    ABLATION_KINDS,
    ExperimentGrid,
    GridCell,
    GridRow,
    ROW_ORDER,
    grid_markdown,
    grid_results_json,
    mean_corpus_ce,
    mean_kl_drift,
    run_ablation,
    run_table1,
    write_grid,
)

__all__ = [
    "ABLATION_KINDS",
    "EvalResult",
    "ExperimentGrid",
    "GridCell",
    "GridRow",
    "ROW_ORDER",
    "cer",
    "edit_distance",
    "evaluate",
    "grid_markdown",
    "grid_results_json",
    "mean_corpus_ce",
    "mean_kl_drift",
    "run_ablation",
    "run_table1",
    "write_grid",
]
