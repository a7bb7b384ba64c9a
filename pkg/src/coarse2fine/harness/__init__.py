from .config import ExperimentConfig, load_config, parse_config
from .experiments import (
    ObjectModels,
    demo_for_config,
    run_reaching_trials,
    run_target_reaching,
    run_task_benchmark,
    train_models,
)
from .report import ReportTable, TrialRecord, aggregate, emit_report

__all__ = [
    "ExperimentConfig", "load_config", "parse_config", "ObjectModels", "demo_for_config",
    "run_reaching_trials", "run_target_reaching", "run_task_benchmark", "train_models",
    "ReportTable", "TrialRecord", "aggregate", "emit_report",
]
