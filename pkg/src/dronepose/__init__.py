"""Drone / ground-vehicle relative pose estimation on synthetic spinning-LiDAR data."""

from .pipeline import (
    MetricsReport,
    RunRecord,
    Scenario,
    ScenarioError,
    compute_metrics,
    export,
    load_scenario,
    parse_scenario,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "MetricsReport",
    "RunRecord",
    "Scenario",
    "ScenarioError",
    "compute_metrics",
    "export",
    "load_scenario",
    "parse_scenario",
    "run",
    "__version__",
]
