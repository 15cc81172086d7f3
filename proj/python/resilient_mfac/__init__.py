"""Resilient model-free adaptive consensus simulator."""

from ._core import (
    ConfigError,
    SimulationRun,
    fdi_signal,
    run,
    validate,
)

__all__ = ["ConfigError", "SimulationRun", "fdi_signal", "run", "validate"]
