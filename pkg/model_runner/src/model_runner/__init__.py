"""Export real-model predictions and tail verdicts for the tailvote toolkit."""

from .runner import (
    RunnerConfig,
    export_predictions,
    export_tail_verdicts,
    load_config,
    read_dataset,
)

__all__ = [
    "RunnerConfig",
    "export_predictions",
    "export_tail_verdicts",
    "load_config",
    "read_dataset",
]
