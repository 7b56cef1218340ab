"""Service boundary: HTTP API, event stream, CLI, and persistence."""

from .runner import RunConfig, load_scenario_file, run_headless, run_scenario
from .store import ProjectStore

__all__ = [
    "ProjectStore",
    "RunConfig",
    "load_scenario_file",
    "run_headless",
    "run_scenario",
]
