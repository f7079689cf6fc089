"""Covariation-orthogonal linear prediction on heavy-tailed traffic.

For a window x(1..n) and exponent a in (1, 2], the m coefficients of the
k-step-ahead predictor solve C a = c with

    C[h, l] = sum_j x(j - l + 1) * sp(x(j - h + 1))
    c[h]    = sum_j x(j + k)     * sp(x(j - h + 1))

where sp(v) = |v|^(a-1) sgn(v) and j runs over the common valid range
[m, n - k].  At a = 2 the signed power is the identity and the system is
exactly the least-squares AR(m) normal equations, which doubles as the
Gaussian baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularSystem
from .stable import StableParams

__all__ = [
    "LinearPredictorSpec",
    "CoarseForecast",
    "signed_power",
    "effective_alpha",
    "fit_coefficients",
    "forecast",
    "ls_ar_forecast",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class LinearPredictorSpec:
    """(n, m, k) window/coefficient/lag configuration.

    `alpha` is the exponent used inside the signed powers; fitted traffic
    exponents at or below 1 must be mapped through effective_alpha first.
    `ridge` of None selects the trace-scaled default 1e-8 tr(C)/m.
    """

    n: int = 36
    m: int = 10
    k: int = 1
    alpha: float = 2.0
    ridge: float | None = None

    def __post_init__(self):
        # m = 1 is degenerate but well-posed (single-lag predictor)
        if not (1 <= self.m <= self.n):
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (1.0 < self.alpha <= 2.0):
            raise ValueError(f"alpha must be in (1, 2], got {self.alpha}")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.n - self.k < self.m:
            raise ValueError("window too short: need n - k >= m")


@dataclass(frozen=True)
class CoarseForecast:
    """Per-cell k-step-ahead forecasts and the coefficients behind them."""

    values: np.ndarray  # (N,)
    coefficients: np.ndarray  # (N, m)


def signed_power(v, p):
    """|v|^p sgn(v), elementwise; odd in v, zero at zero."""
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.abs(v) ** p
    return out[()] if out.ndim == 0 else out


def effective_alpha(params: StableParams) -> float:
    """Clamp a fitted exponent into the predictor's (1, 2] domain."""
    return min(2.0, max(params.alpha, 1.01))


def fit_coefficients(history, spec: LinearPredictorSpec, alpha: float | None = None) -> np.ndarray:
    """Solve the covariation-orthogonality normal equations on a window.

    Uses the trailing n samples of `history`.  An all-zero window returns
    zero coefficients directly.  Raises SingularSystem when the
    ridge-stabilized system is still numerically singular.
    """
    x = np.asarray(history, dtype=float).ravel()
    n, m, k = spec.n, spec.m, spec.k
    if x.size < n:
        raise ValueError(f"history shorter than window: {x.size} < {n}")
    w = x[x.size - n :]
    if not np.any(w):
        return np.zeros(m)
    a = spec.alpha if alpha is None else alpha
    p = a - 1.0

    # 1-based j in [m, n-k]; x(j - l + 1) is w[j - l] 0-based
    js = np.arange(m, n - k + 1)
    lags = np.stack([w[js - l] for l in range(1, m + 1)], axis=1)  # (J, m)
    target = w[js + k - 1]
    sp_lags = signed_power(lags, p)
    cmat = sp_lags.T @ lags
    cvec = sp_lags.T @ target

    lam = spec.ridge if spec.ridge is not None else 1e-8 * np.trace(cmat) / m
    cmat = cmat + lam * np.eye(m)
    if not np.all(np.isfinite(cmat)) or np.linalg.cond(cmat) > _COND_LIMIT:
        raise SingularSystem(f"normal equations singular (ridge={lam:g})")
    return np.linalg.solve(cmat, cvec)


def forecast(
    matrix,
    t_end: int,
    spec: LinearPredictorSpec,
    alphas=None,
) -> CoarseForecast:
    """k-step-ahead coarse forecast for every cell.

    `t_end` is the number of leading columns treated as observed; the
    forecast targets column t_end + k - 1.  `alphas`, when given, holds
    one effective exponent per cell (already clamped); otherwise
    spec.alpha applies everywhere.  Cells are independent.
    """
    if t_end < spec.n:
        raise ValueError(f"t_end must be >= n={spec.n}, got {t_end}")
    if t_end > matrix.n_intervals:
        raise ValueError("t_end exceeds available history")
    n_cells = matrix.n_cells
    if alphas is not None and len(alphas) != n_cells:
        raise ValueError("alphas must have one entry per cell")
    values = np.empty(n_cells)
    coeffs = np.empty((n_cells, spec.m))
    for i in range(n_cells):
        window = matrix.values[i, t_end - spec.n : t_end]
        a = None if alphas is None else float(alphas[i])
        try:
            coef = fit_coefficients(window, spec, alpha=a)
        except SingularSystem as exc:
            raise SingularSystem(f"cell {matrix.cells[i].cell_id}: {exc}") from exc
        coeffs[i] = coef
        recent = matrix.values[i, t_end - spec.m : t_end][::-1]  # x(t_end - j), j=1..m
        values[i] = float(coef @ recent)
    return CoarseForecast(values, coeffs)


def ls_ar_forecast(matrix, t_end: int, spec: LinearPredictorSpec) -> CoarseForecast:
    """Least-squares AR baseline: the alpha = 2 special case of forecast."""
    return forecast(matrix, t_end, replace(spec, alpha=2.0), alphas=None)
