"""Sparse coding and online dictionary learning.

The coder minimizes  lambda2 ||x - D s||^2 + gamma ||s||_1  by the
LARS-lasso homotopy (exact solution path in the penalty), with greedy
orthogonal matching pursuit as the alternative.  The dictionary is
refined online from two accumulators, A = sum s s^T and B = sum x s^T,
by block coordinate descent over columns constrained to the unit ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "DictionaryState",
    "SparseCode",
    "lars_lasso",
    "omp",
    "dictionary_update",
    "learn",
    "default_omp_budget",
]

_MAX_PATH_STEPS_FACTOR = 8


@dataclass(frozen=True)
class SparseCode:
    """A sparse coefficient vector with its support and objective value."""

    s: np.ndarray
    support: np.ndarray
    objective: float

    @classmethod
    def zeros(cls, size: int) -> "SparseCode":
        return cls(np.zeros(size), np.array([], dtype=int), 0.0)


@dataclass(frozen=True)
class DictionaryState:
    """Dictionary D (unit-ball columns) plus the learning accumulators."""

    D: np.ndarray  # N x K
    A: np.ndarray  # K x K, sum of s s^T
    B: np.ndarray  # N x K, sum of x s^T

    def __post_init__(self):
        d = np.asarray(self.D, dtype=float)
        if d.ndim != 2:
            raise ValueError("D must be a matrix")
        norms = np.linalg.norm(d, axis=0)
        if np.any(norms > 1.0 + 1e-9):
            raise ValueError("dictionary columns must have norm <= 1")
        if self.A.shape != (d.shape[1], d.shape[1]) or self.B.shape != d.shape:
            raise DimensionMismatch("accumulator shapes do not match D")
        object.__setattr__(self, "D", d)

    @classmethod
    def initial(cls, d0: np.ndarray) -> "DictionaryState":
        d0 = np.asarray(d0, dtype=float)
        n, k = d0.shape
        return cls(d0.copy(), np.zeros((k, k)), np.zeros((n, k)))

    @property
    def n_atoms(self) -> int:
        return self.D.shape[1]


def _objective(d, x, s, lambda2, gamma):
    resid = x - d @ s
    return float(lambda2 * resid @ resid + gamma * np.sum(np.abs(s)))


def default_omp_budget(d) -> int:
    """Budget covering every usable atom: one coefficient per nonzero column."""
    d = np.asarray(d)
    nonzero = int(np.sum(np.linalg.norm(d, axis=0) > 1e-12))
    return max(1, min(nonzero, min(d.shape)))


def lars_lasso(D, x, lambda2: float, gamma: float) -> SparseCode:
    """Exact minimizer of lambda2 ||x - D s||^2 + gamma ||s||_1.

    Follows the homotopy path from the all-zero solution down to the
    target penalty, adding the most correlated atom at each breakpoint
    and dropping atoms whose coefficients cross zero.  Ties go to the
    lowest index.  gamma = 0 falls back to a least-squares solve.
    """
    d = np.asarray(D, dtype=float)
    xv = np.asarray(x, dtype=float).ravel()
    if d.ndim != 2 or d.shape[0] != xv.size:
        raise DimensionMismatch(f"D is {d.shape}, x has length {xv.size}")
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    k = d.shape[1]
    if gamma == 0.0:
        s, *_ = np.linalg.lstsq(d, xv, rcond=None)
        support = np.flatnonzero(np.abs(s) > 0)
        return SparseCode(s, support, _objective(d, xv, s, lambda2, gamma))

    # equivalent standard lasso: min 1/2||x-Ds||^2 + lam ||s||_1
    lam_target = gamma / (2.0 * lambda2)
    s = np.zeros(k)
    corr = d.T @ xv
    lam = float(np.max(np.abs(corr), initial=0.0))
    if lam <= lam_target or lam == 0.0:
        return SparseCode(s, np.array([], dtype=int), _objective(d, xv, s, lambda2, gamma))
    active: list[int] = [int(np.argmax(np.abs(corr)))]

    for _ in range(_MAX_PATH_STEPS_FACTOR * k):
        da = d[:, active]
        signs = np.sign(corr[active])
        gram = da.T @ da
        try:
            w = np.linalg.solve(gram, signs)
        except np.linalg.LinAlgError:
            w, *_ = np.linalg.lstsq(gram, signs, rcond=None)
        shift = d.T @ (da @ w)  # d(corr_j)/d(lam decrease)

        # smallest positive step to any event
        step = lam - lam_target
        event = ("stop", -1)
        inactive = np.setdiff1d(np.arange(k), active, assume_unique=False)
        for j in inactive:
            cj, aj = corr[j], shift[j]
            for num, den in ((lam - cj, 1.0 - aj), (lam + cj, 1.0 + aj)):
                if den <= 1e-14:
                    continue
                cand = num / den
                if 1e-14 < cand < step - 1e-14:
                    step = cand
                    event = ("join", int(j))
        for pos, idx in enumerate(active):
            if w[pos] == 0.0:
                continue
            cand = -s[idx] / w[pos]
            if 1e-14 < cand < step - 1e-14:
                step = cand
                event = ("drop", idx)

        for pos, idx in enumerate(active):
            s[idx] += step * w[pos]
        lam -= step
        corr = d.T @ (xv - d @ s)
        # pin active correlations to the theoretical value against drift
        corr[active] = lam * signs

        kind, j = event
        if kind == "stop":
            break
        if kind == "join":
            active.append(j)
        else:
            s[j] = 0.0
            active.remove(j)
        if not active:
            break

    support = np.flatnonzero(s != 0.0)
    return SparseCode(s, support, _objective(d, xv, s, lambda2, gamma))


def omp(D, x, max_nonzeros: int) -> SparseCode:
    """Greedy orthogonal matching pursuit with per-step least-squares refit.

    Selects the column most correlated with the residual (normalized by
    column norm, lowest index on ties), refits on the support, and stops
    early when the residual or every correlation vanishes.  The recorded
    objective is the squared residual norm.
    """
    d = np.asarray(D, dtype=float)
    xv = np.asarray(x, dtype=float).ravel()
    if d.ndim != 2 or d.shape[0] != xv.size:
        raise DimensionMismatch(f"D is {d.shape}, x has length {xv.size}")
    n, k = d.shape
    if not (1 <= max_nonzeros <= min(n, k)):
        raise ValueError(f"max_nonzeros must be in [1, {min(n, k)}]")
    norms = np.linalg.norm(d, axis=0)
    scale = float(np.linalg.norm(xv))
    s = np.zeros(k)
    support: list[int] = []
    resid = xv.copy()
    coef = np.array([])
    for _ in range(max_nonzeros):
        corr = np.abs(d.T @ resid) / np.maximum(norms, 1e-12)
        corr[norms <= 1e-12] = 0.0
        if support:
            corr[support] = 0.0
        j = int(np.argmax(corr))
        if corr[j] <= 1e-12 * max(scale, 1.0):
            break
        support.append(j)
        coef, *_ = np.linalg.lstsq(d[:, support], xv, rcond=None)
        resid = xv - d[:, support] @ coef
        if np.linalg.norm(resid) <= 1e-12 * max(scale, 1.0):
            break
    if support:
        s[support] = coef
    return SparseCode(s, np.array(sorted(support), dtype=int), float(resid @ resid))


def dictionary_update(state: DictionaryState) -> DictionaryState:
    """One block-coordinate sweep of the surrogate Tr(D^T D A) - 2 Tr(D^T B).

    Column j moves to (b_j - D a_j)/A_jj + d_j and is projected back to
    the unit ball; columns with A_jj below 1e-12 are left untouched.  The
    surrogate never increases (the per-column Hessian is isotropic, so
    projection preserves optimality).
    """
    d = state.D.copy()
    a, b = state.A, state.B
    for j in range(d.shape[1]):
        ajj = a[j, j]
        if ajj < 1e-12:
            continue
        u = (b[:, j] - d @ a[:, j]) / ajj + d[:, j]
        d[:, j] = u / max(1.0, float(np.linalg.norm(u)))
    return DictionaryState(d, a, b)


def learn(
    state: DictionaryState,
    x,
    lambda2: float,
    gamma: float,
    inner_iterations: int = 3,
    coder: str = "lars",
    omp_nonzeros: int | None = None,
) -> tuple[DictionaryState, SparseCode]:
    """Alternate sparse coding and dictionary refinement on one signal.

    Accumulators warm-start from `state`, so successive calls keep
    compounding history.  `coder` selects LARS-lasso or OMP for the
    coding step.
    """
    if inner_iterations < 1:
        raise ValueError("inner_iterations must be >= 1")
    xv = np.asarray(x, dtype=float).ravel()
    d, a, b = state.D, state.A.copy(), state.B.copy()
    code = SparseCode.zeros(state.n_atoms)
    current = state
    for _ in range(inner_iterations):
        if coder == "lars":
            code = lars_lasso(current.D, xv, lambda2, gamma)
        elif coder == "omp":
            budget = omp_nonzeros or default_omp_budget(current.D)
            code = omp(current.D, xv, budget)
        else:
            raise ValueError(f"unknown coder {coder!r}")
        a = a + np.outer(code.s, code.s)
        b = b + np.outer(xv, code.s)
        current = dictionary_update(DictionaryState(current.D, a, b))
    return current, code
