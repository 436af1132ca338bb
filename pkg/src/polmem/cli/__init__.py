"""Scenario configs, named presets and the ``polmem`` command."""
from .config import ScenarioConfig, dump, load, loads, parse_initial
from .runner import RunResult, compare_models, plasticity, run, simulate, sweep

__all__ = ["ScenarioConfig", "dump", "load", "loads", "parse_initial", "RunResult",
           "compare_models", "plasticity", "run", "simulate", "sweep"]
