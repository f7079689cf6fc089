"""Heavy-tailed modeling, sparse recovery, and forecasting of per-cell traffic."""

from .stable import StableParams, FitReport, characteristic_function, sample, fit_stable
from .traffic import (
    CellMeta,
    TrafficMatrix,
    ScenarioSpec,
    generate_synthetic,
    ingest_csv,
    quantized_cdf,
)
from .voronoi import SparsityReport, voronoi_sparsity
from .predictors import LinearPredictorSpec, CoarseForecast, forecast, signed_power
from .sparse import DictionaryState, SparseCode, lars_lasso, omp, dictionary_update, learn
from .adm import AdmConfig, AdmState, predict, step
from .evaluation import nmae, evaluate

__version__ = "0.1.0"

__all__ = [
    "StableParams",
    "FitReport",
    "characteristic_function",
    "sample",
    "fit_stable",
    "CellMeta",
    "TrafficMatrix",
    "ScenarioSpec",
    "generate_synthetic",
    "ingest_csv",
    "quantized_cdf",
    "SparsityReport",
    "voronoi_sparsity",
    "LinearPredictorSpec",
    "CoarseForecast",
    "forecast",
    "signed_power",
    "DictionaryState",
    "SparseCode",
    "lars_lasso",
    "omp",
    "dictionary_update",
    "learn",
    "AdmConfig",
    "AdmState",
    "predict",
    "step",
    "nmae",
    "evaluate",
    "__version__",
]
