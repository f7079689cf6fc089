"""Prediction evaluation: NMAE scoring across methods, timestamps, and
single-parameter sweeps."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .adm import AdmConfig, per_cell_alphas, predict
from .predictors import LinearPredictorSpec, forecast, ls_ar_forecast

__all__ = ["METHODS", "nmae", "EvalResult", "EvalReport", "evaluate", "sweep", "predict_one"]

METHODS = ("adm-lars", "adm-omp", "linear", "ls-ar")


def nmae(prediction, truth) -> float:
    """Sum of absolute errors over the sum of absolute true values."""
    p = np.asarray(prediction, dtype=float)
    t = np.asarray(truth, dtype=float)
    num = float(np.sum(np.abs(p - t)))
    den = float(np.sum(np.abs(t)))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


@dataclass(frozen=True)
class EvalResult:
    """One (timestamp, method) evaluation."""

    t_end: int
    method: str
    nmae: float
    per_cell_abs_error: np.ndarray
    runtime_seconds: float


@dataclass(frozen=True)
class EvalReport:
    results: tuple[EvalResult, ...]
    config_echo: dict
    seed: int

    def mean_nmae(self, method: str) -> float:
        vals = [r.nmae for r in self.results if r.method == method]
        if not vals:
            raise KeyError(f"no results for method {method!r}")
        return float(np.mean(vals))


def predict_one(matrix, t_end, method, predictor, config, alphas):
    if method == "adm-lars":
        out, _ = predict(matrix, t_end, predictor, replace(config, coder="lars"), alphas=alphas)
        return out
    if method == "adm-omp":
        out, _ = predict(matrix, t_end, predictor, replace(config, coder="omp"), alphas=alphas)
        return out
    if method == "linear":
        return np.maximum(forecast(matrix, t_end, predictor, alphas=alphas).values, 0.0)
    if method == "ls-ar":
        return np.maximum(ls_ar_forecast(matrix, t_end, predictor).values, 0.0)
    raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")


def evaluate(
    matrix,
    t_ends,
    methods,
    predictor: LinearPredictorSpec,
    config: AdmConfig,
    seed: int = 0,
    estimate_alpha: bool = True,
    config_echo: dict | None = None,
) -> EvalReport:
    """Score each method at each timestamp against the true next column.

    `t_ends` are history lengths; the forecast at t_end is compared to
    column t_end + k - 1, which must exist.  Per-cell exponents are
    estimated once per timestamp and shared by the heavy-tail methods.
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    results = []
    for t_end in t_ends:
        target = t_end + predictor.k - 1
        if not (predictor.n <= t_end and target < matrix.n_intervals):
            raise ValueError(
                f"t_end {t_end} needs {predictor.n} history columns and a "
                f"ground-truth column {target}"
            )
        truth = matrix.values[:, target]
        alphas = (
            per_cell_alphas(matrix, t_end, predictor.alpha) if estimate_alpha else None
        )
        for method in methods:
            start = time.perf_counter()
            pred = predict_one(matrix, t_end, method, predictor, config, alphas)
            elapsed = time.perf_counter() - start
            results.append(
                EvalResult(
                    t_end=t_end,
                    method=method,
                    nmae=nmae(pred, truth),
                    per_cell_abs_error=np.abs(pred - truth),
                    runtime_seconds=elapsed,
                )
            )
    return EvalReport(tuple(results), dict(config_echo or {}), seed)


_SWEEP_PREDICTOR_INT = ("n", "m", "k")
_SWEEP_ADM_FLOAT = ("lambda1", "lambda2", "gamma0", "eta0", "rho", "early_stop_tol")
_SWEEP_ADM_INT = ("outer_iterations", "inner_iterations")


def sweep(
    matrix,
    t_ends,
    methods,
    predictor: LinearPredictorSpec,
    config: AdmConfig,
    key: str,
    values,
    seed: int = 0,
    estimate_alpha: bool = True,
    config_echo: dict | None = None,
) -> dict[float, EvalReport]:
    """Re-evaluate while varying one predictor or ADM parameter.

    Supported keys: n, m, k (predictor window/coefficients/lag) and the
    scalar hyperparameters of AdmConfig (lambda1, lambda2, eta0, the
    iteration counts, ...), matching the usual sensitivity axes.
    """
    out: dict[float, EvalReport] = {}
    for value in values:
        if key in _SWEEP_PREDICTOR_INT:
            pred_spec = replace(predictor, **{key: int(value)})
            cfg = config
        elif key in _SWEEP_ADM_FLOAT:
            pred_spec = predictor
            cfg = replace(config, **{key: float(value)})
        elif key in _SWEEP_ADM_INT:
            pred_spec = predictor
            cfg = replace(config, **{key: int(value)})
        else:
            raise ValueError(f"cannot sweep over {key!r}")
        echo = dict(config_echo or {})
        echo[key] = value
        out[value] = evaluate(
            matrix,
            t_ends,
            methods,
            pred_spec,
            cfg,
            seed=seed,
            estimate_alpha=estimate_alpha,
            config_echo=echo,
        )
    return out
