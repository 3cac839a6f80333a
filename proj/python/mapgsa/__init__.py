"""Sensitivity analysis for map-valued and set-valued model outputs.

The heavy lifting happens in the compiled ``_core`` extension. ``run`` executes
a YAML experiment and returns the per-analysis indices as plain dicts.
"""

from ._core import (
    ConfigError,
    DegenerateError,
    ParameterError,
    hsic_ustat,
    num_threads,
    quantile,
    run,
    set_num_threads,
    universal_ratio,
    validate,
)

__all__ = [
    "ConfigError",
    "DegenerateError",
    "ParameterError",
    "hsic_ustat",
    "num_threads",
    "quantile",
    "run",
    "set_num_threads",
    "universal_ratio",
    "validate",
]
