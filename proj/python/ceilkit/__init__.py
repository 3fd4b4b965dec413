"""Short-text clustering with iterative pseudo-label classification."""

from ._ceilkit import (
    ConfigError,
    ContractError,
    DataError,
    Error,
    NumericalError,
    accuracy,
    cluster,
    config_keys,
    evaluate,
    nmi,
    run_ceil,
    synth,
    tokenize,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "Error",
    "NumericalError",
    "accuracy",
    "cluster",
    "config_keys",
    "evaluate",
    "nmi",
    "run_ceil",
    "synth",
    "tokenize",
]
