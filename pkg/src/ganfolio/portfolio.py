"""Portfolio moments, Sharpe ratio, and long-only max-Sharpe allocation.

The allocation problem is

    argmax_v  (v'r - r_f) / sqrt(v' S v)   s.t.  sum(v) = 1, 0 <= v <= 1,

a nonconvex ratio program solved here by projected-gradient ascent on the
probability simplex with backtracking line search, multi-started from the
uniform vector and every vertex.  Ties (Sharpe within 1e-9 of the best) break
toward the candidate closest to the uniform vector.  When no asset earns more
than the risk-free rate the Sharpe maximizer is degenerate and the solver
falls back to the minimum-variance point of the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .marketdata import simple_returns

# diagonal loading keeps per-draw covariance estimates (few observations,
# many assets) positive definite
COVARIANCE_RIDGE = 1e-4
VARIANCE_FLOOR = 1e-16
TIE_TOLERANCE = 1e-9

_MAX_ITERATIONS = 500
_CONVERGENCE_TOL = 1e-12


@dataclass(frozen=True)
class MomentEstimate:
    """Per-asset mean returns and regularized covariance."""

    mean_returns: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self):
        r = np.asarray(self.mean_returns, dtype=np.float64)
        c = np.asarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "mean_returns", r)
        object.__setattr__(self, "covariance", c)
        if c.shape != (r.size, r.size):
            raise ValidationError(f"covariance shape {c.shape} vs {r.size} assets")
        if not (np.isfinite(r).all() and np.isfinite(c).all()):
            raise ValidationError("moment estimate contains non-finite values")

    @property
    def n_assets(self) -> int:
        return self.mean_returns.size


def estimate_moments(returns, ridge: float = COVARIANCE_RIDGE) -> MomentEstimate:
    """Row means and sample covariance with diagonal loading.

    The loading term is ``ridge * trace(S)/N`` added to the diagonal, so it
    scales with the data and vanishes for identically-zero returns.
    """
    returns = np.asarray(returns, dtype=np.float64)
    if returns.ndim != 2:
        raise ValidationError(f"returns must be an N x T matrix, got shape {returns.shape}")
    n, t = returns.shape
    if t < 2:
        raise ValidationError(f"need at least 2 return observations, got {t}")
    mean = returns.mean(axis=1)
    centered = returns - mean[:, None]
    cov = centered @ centered.T / (t - 1)
    cov = (cov + cov.T) / 2.0
    cov = cov + ridge * (np.trace(cov) / n) * np.eye(n)
    return MomentEstimate(mean_returns=mean, covariance=cov, sample_count=t)


def portfolio_return_risk(weights, moments: MomentEstimate) -> tuple[float, float]:
    """(v'r, v'Sv) for one weight vector."""
    v = np.asarray(weights, dtype=np.float64)
    if v.shape != (moments.n_assets,):
        raise ValidationError(f"weights shape {v.shape} vs {moments.n_assets} assets")
    return float(v @ moments.mean_returns), float(v @ moments.covariance @ v)


def sharpe_ratio(weights, moments: MomentEstimate, r_f: float = 0.0) -> float:
    """(v'r - r_f) / sqrt(v'Sv), with the variance floored at 1e-16."""
    ret, var = portfolio_return_risk(weights, moments)
    if var < -1e-10:
        raise ValidationError(
            f"negative portfolio variance {var}; increase the covariance ridge "
            f"(estimate_moments ridge={COVARIANCE_RIDGE})")
    return (ret - r_f) / np.sqrt(max(var, VARIANCE_FLOOR))


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto {x : x >= 0, sum(x) = 1} (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / np.arange(1, v.size + 1) > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def _cleanup(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, 1.0)
    return v / v.sum()


def _ascend(v0, value, grad) -> np.ndarray:
    """Projected-gradient ascent with backtracking from one start point."""
    v = v0.copy()
    current = value(v)
    step = 1.0
    for _ in range(_MAX_ITERATIONS):
        g = grad(v)
        improved = False
        trial_step = step
        for _ in range(40):
            candidate = project_to_simplex(v + trial_step * g)
            candidate_value = value(candidate)
            if candidate_value > current + _CONVERGENCE_TOL * max(1.0, abs(current)):
                v, current, step = candidate, candidate_value, trial_step * 2.0
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
    return v


def _pick_candidate(candidates, values) -> np.ndarray:
    best = max(values)
    n = candidates[0].size
    uniform = np.full(n, 1.0 / n)
    tied = [v for v, s in zip(candidates, values) if s >= best - TIE_TOLERANCE]
    distances = [np.linalg.norm(v - uniform) for v in tied]
    return tied[int(np.argmin(distances))]


def min_variance_weights(moments: MomentEstimate) -> np.ndarray:
    """Long-only minimum-variance point of the simplex (fallback objective)."""
    cov = moments.covariance
    scale = np.trace(cov) / moments.n_assets
    if scale > 0:
        cov = cov / scale

    def value(v):
        return -float(v @ cov @ v)

    def grad(v):
        return -2.0 * cov @ v

    candidates, values = _run_multistart(moments.n_assets, value, grad)
    return _cleanup(_pick_candidate(candidates, values))


def _run_multistart(n, value, grad):
    starts = [np.full(n, 1.0 / n)]
    for i in range(n):
        vertex = np.zeros(n)
        vertex[i] = 1.0
        starts.append(vertex)
    candidates = [_ascend(s, value, grad) for s in starts]
    return candidates, [value(v) for v in candidates]


def max_sharpe_weights(moments: MomentEstimate, r_f: float = 0.0) -> np.ndarray:
    """Long-only weights maximizing the Sharpe ratio.

    Deterministic for fixed inputs; the returned vector sums to 1 within
    1e-10 with entries clamped to [0, 1].
    """
    if not (np.isfinite(moments.mean_returns).all() and np.isfinite(moments.covariance).all()):
        raise ValidationError("non-finite moments")
    excess = moments.mean_returns - r_f
    if not np.any(excess > 0):
        return min_variance_weights(moments)

    # precondition: the argmax is invariant to scaling the covariance
    cov = moments.covariance
    scale = np.trace(cov) / moments.n_assets
    if scale > 0:
        cov = cov / scale

    def value(v):
        var = max(float(v @ cov @ v), VARIANCE_FLOOR)
        return float(v @ excess) / np.sqrt(var)

    def grad(v):
        var = max(float(v @ cov @ v), VARIANCE_FLOOR)
        sigma = np.sqrt(var)
        ret = float(v @ excess)
        return excess / sigma - ret * (cov @ v) / sigma ** 3

    candidates, values = _run_multistart(moments.n_assets, value, grad)
    return _cleanup(_pick_candidate(candidates, values))


def markowitz_weights(historical_prices, r_f: float = 0.0) -> np.ndarray:
    """Max-Sharpe weights from a trailing window of real prices."""
    prices = np.asarray(historical_prices, dtype=np.float64)
    if prices.ndim != 2:
        raise ValidationError(f"historical prices must be N x h, got shape {prices.shape}")
    if prices.shape[1] < 3:
        raise ValidationError(
            f"need at least 3 trailing prices (2 returns), got {prices.shape[1]}")
    return max_sharpe_weights(estimate_moments(simple_returns(prices)), r_f)
