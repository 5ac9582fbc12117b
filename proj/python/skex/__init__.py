"""Hypercube rule extraction from black-box regressors."""

from ._core import (
    ConfigError,
    ContractError,
    DataError,
    Dataset,
    ExactOracle,
    KNNOracle,
    Predictor,
    Theory,
    __version__,
    benchmark_names,
    compare,
    enclosing_cube,
    evaluate,
    extract,
    fit_linear,
    generate,
    select_k,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "Dataset",
    "ExactOracle",
    "KNNOracle",
    "Predictor",
    "Theory",
    "__version__",
    "benchmark_names",
    "compare",
    "enclosing_cube",
    "evaluate",
    "extract",
    "fit_linear",
    "generate",
    "select_k",
]
