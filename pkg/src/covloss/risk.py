"""Risk measures on weighted empirical distributions.

Estimators work on weighted samples because expectations are taken under
the reference member's survival measure: paths on which the reference
defaults get weight zero, surviving paths get the renormalized importance
weight. Value-at-risk follows the right-continuous convention
VaR_alpha = inf{x : P(X <= x) > alpha} and expected shortfall carries the
atom correction

    ES_alpha = (1 - alpha)^{-1} ( E[X 1{X >= VaR}] + VaR (P(X < VaR) - alpha) )

which keeps ES exact when the loss law has atoms (a cleared loss has a big
one at zero). No interpolation between order statistics is performed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WEIGHT_SUM_TOL = 1e-12

# A cumulative weight within this distance of the level is treated as sitting
# exactly at it. Cumsum noise is ~1e-13 even at millions of paths, while the
# smallest atom any weighted sample here can carry is 1/n_paths >= 1e-8, so
# the tolerance separates the two regimes with orders of magnitude to spare.
CDF_BOUNDARY_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Finite values with nonnegative probability weights summing to one."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        if values.ndim != 1 or weights.shape != values.shape:
            raise ValueError("values and weights must be equal-length vectors")
        if values.size == 0:
            raise ValueError("sample is empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total}, expected 1 within {WEIGHT_SUM_TOL}")
        values.setflags(write=False)
        weights.setflags(write=False)

    @classmethod
    def uniform(cls, values) -> "WeightedSample":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError("sample is empty")
        return cls(values=values, weights=np.full(values.shape, 1.0 / values.size))


def _merged_cdf(sample: WeightedSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct sorted values, merged weights and the right-continuous CDF."""
    uniq, inverse = np.unique(sample.values, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inverse, sample.weights)
    return uniq, merged, np.cumsum(merged)


def _check_alpha(alpha: float) -> None:
    if not 0.5 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must lie in (1/2, 1)")


def _level_index(cdf: np.ndarray, alpha: float) -> int:
    """Index of the smallest value whose CDF strictly exceeds alpha.

    The comparison allows CDF_BOUNDARY_ATOL of slack so that an atom whose
    exact cumulative weight equals alpha is never misread as exceeding it
    just because the running float sum drifted a few ulps high.
    """
    idx = int(np.searchsorted(cdf, alpha + CDF_BOUNDARY_ATOL, side="right"))
    return min(idx, cdf.shape[0] - 1)


def empirical_var(sample: WeightedSample, alpha: float) -> float:
    """Right-continuous value-at-risk: smallest value whose CDF exceeds alpha.

    Ties in values are merged before the scan and the comparison is strict,
    so an atom sitting exactly at mass alpha pushes VaR to the next value.
    """
    _check_alpha(alpha)
    uniq, _, cdf = _merged_cdf(sample)
    return float(uniq[_level_index(cdf, alpha)])


def expected_shortfall(sample: WeightedSample, alpha: float) -> float:
    """Atom-corrected expected shortfall at level alpha.

    Evaluated in the threshold-excess form

        ES_alpha = VaR + (1 - alpha)^{-1} E[(X - VaR)^+]

    which is algebraically identical to the atom-corrected tail average in
    the module docstring but free of its cancellation: the excess of the
    atom at VaR is exactly zero rather than a difference of two near-equal
    tail weights. Reduces to the tail conditional expectation when no atom
    sits at VaR, and never falls below VaR. Exact on finite samples; no
    order-statistic interpolation.
    """
    _check_alpha(alpha)
    uniq, merged, cdf = _merged_cdf(sample)
    idx = _level_index(cdf, alpha)
    var = float(uniq[idx])
    excess = float(np.dot(uniq[idx:] - var, merged[idx:]))
    return var + excess / (1.0 - alpha)


def survival_weights(x0, b0: float, gamma: float, normalize: bool = True) -> np.ndarray:
    """Importance weights of the reference member's survival measure.

    The raw weight of a path is 1{x0 < b0} / (1 - gamma), gamma being the
    reference's default probability. With ``normalize`` (the default) the
    weights are rescaled to unit total mass, which cancels the 1/(1 - gamma)
    factor and removes the first-order bias of the raw estimator; otherwise
    the raw weights divided by the path count are returned (their total is
    then the sample survival rate over 1 - gamma, close to but not exactly 1).
    Raises when every path defaulted: the survival measure cannot be
    estimated from such a batch.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma={gamma} must lie in [0, 1)")
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ValueError("x0 must be a vector")
    alive = x0 < b0
    n_alive = int(alive.sum())
    if n_alive == 0:
        raise ValueError("every path defaulted the reference member; survival weights undefined")
    if normalize:
        return alive / float(n_alive)
    return alive / ((1.0 - gamma) * x0.shape[0])


def cecl(loss, weights) -> float:
    """Expected credit loss: the weighted first moment of the loss sample.

    ``loss`` may be a LossVector or a plain array; ``weights`` are survival
    weights (normalized or raw). With normalized weights this is exactly the
    plain mean over the surviving paths.
    """
    values = np.asarray(getattr(loss, "total", loss), dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape:
        raise ValueError("loss and weights must be equal-length vectors")
    return float(np.dot(values, weights))


def _as_probability_sample(loss, weights) -> WeightedSample:
    values = np.asarray(getattr(loss, "total", loss), dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("weights must carry positive total mass")
    return WeightedSample(values=values, weights=weights / total)


def economic_capital(loss, weights, alpha: float = 0.9975) -> float:
    """Expected shortfall of the loss under the survival measure.

    Weights are renormalized to unit mass before the quantile scan (the
    atom-corrected ES needs a probability measure; for raw survival weights
    this reintroduces the self-normalization).
    """
    return expected_shortfall(_as_probability_sample(loss, weights), alpha)


def value_at_risk(loss, weights, alpha: float = 0.9975) -> float:
    """Value-at-risk of the loss under the survival measure.

    Same weight handling as ``economic_capital``.
    """
    return empirical_var(_as_probability_sample(loss, weights), alpha)


def batch_statistics(estimates) -> tuple[float, float]:
    """Mean and standard error of independent per-batch estimates.

    stderr = sample standard deviation (ddof=1) divided by sqrt(k); requires
    at least two batches.
    """
    est = np.asarray(estimates, dtype=float)
    if est.ndim != 1 or est.shape[0] < 2:
        raise ValueError("need at least two batch estimates")
    k = est.shape[0]
    return float(est.mean()), float(est.std(ddof=1) / math.sqrt(k))


@dataclass(frozen=True)
class RiskReport:
    """Point estimates and batch dispersion for one configuration.

    cecl, ec and var_alpha are the pooled-sample estimates; the batch_mean
    fields average the per-batch estimates and the stderr fields measure
    their dispersion (the batching method's error bars for the pooled
    numbers).
    """

    cecl: float
    ec: float
    var_alpha: float
    cecl_batch_mean: float
    cecl_stderr: float
    ec_batch_mean: float
    ec_stderr: float
    var_batch_mean: float
    var_stderr: float
    alpha: float
    n_paths: int
    n_batches: int

    def __post_init__(self) -> None:
        tol = 1e-9 * max(1.0, abs(self.ec), abs(self.cecl))
        if self.ec < self.var_alpha - tol:
            raise ValueError(f"ec={self.ec} below var_alpha={self.var_alpha}")
        if self.var_alpha > 0.0 and self.ec < self.cecl - tol:
            raise ValueError(f"ec={self.ec} below cecl={self.cecl} with positive VaR")
