from .config import SCENARIOS, ExperimentConfig, ResultRecord, config_from_dict, load_config
from .runner import read_results, run_experiment, summarize, write_results

__all__ = [
    "SCENARIOS",
    "ExperimentConfig",
    "ResultRecord",
    "config_from_dict",
    "load_config",
    "read_results",
    "run_experiment",
    "summarize",
    "write_results",
]
