"""Attribute sampling distributions and inverse-CDF index draws.

The point-estimation distribution q controls which attributes of a
training example are observed; the inner-product distribution p controls
the single extra observation used to estimate <w, x>.  Moment-optimal
choices of q are what separate the data-dependent solvers from the
uniform baselines.
"""

import numpy as np

from .core import Regime

__all__ = [
    "AttributeDistribution",
    "build_distribution",
    "uniform_distribution",
    "apply_floor",
    "sample_index",
    "ridge_optimal_q",
    "lasso_optimal_q",
    "inner_product_p",
    "improved_inner_product_p",
]

_SUM_TOL = 1e-9


class AttributeDistribution:
    """A probability vector over attribute indices with its cumulative table.

    ``cumulative[i]`` is sum(probabilities[: i + 1]); draws resolve by
    binary search, and zero-probability indices are never returned.
    """

    __slots__ = ("probabilities", "cumulative", "_prev_positive")

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        if p.size == 0:
            raise ValueError("zero dimension")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("invalid weights")
        total = float(p.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError("invalid weights: probabilities must sum to 1")
        self.probabilities = p
        self.cumulative = np.cumsum(p)
        # For each index, the nearest index at or before it with positive mass;
        # shields sample_index from float edges at the top of the table.
        positive = p > 0
        if not positive.any():
            raise ValueError("invalid weights")
        idx = np.where(positive, np.arange(p.size), -1)
        self._prev_positive = np.maximum.accumulate(idx)
        first = int(np.argmax(positive))
        self._prev_positive[self._prev_positive < 0] = first

    @property
    def dimension(self):
        return int(self.probabilities.size)

    def __repr__(self):
        return f"AttributeDistribution({self.probabilities!r})"


def build_distribution(weights):
    """Normalize nonnegative weights into an AttributeDistribution."""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("zero dimension")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("invalid weights")
    total = float(w.sum())
    if total <= 0.0:
        raise ValueError("invalid weights: all weights are zero")
    return AttributeDistribution(w / total)


def uniform_distribution(d):
    if d <= 0:
        raise ValueError("zero dimension")
    return AttributeDistribution(np.full(d, 1.0 / d))


def apply_floor(dist, q_floor):
    """Mix a distribution with the uniform floor: (1 - d*q_floor) q + q_floor.

    q_floor = 0 returns the distribution unchanged.  Requires
    d * q_floor <= 1.
    """
    if q_floor < 0:
        raise ValueError("invalid weights: negative floor")
    if q_floor == 0:
        return dist
    d = dist.dimension
    if d * q_floor > 1.0:
        raise ValueError("invalid weights: floor exceeds 1/d")
    return AttributeDistribution((1.0 - d * q_floor) * dist.probabilities + q_floor)


def sample_index(dist, u):
    """Map uniform draws in [0, 1) to indices by inverse CDF.

    Returns the smallest index whose cumulative mass strictly exceeds u.
    Accepts a scalar or an array of draws; zero-probability indices are
    never returned.
    """
    idx = np.searchsorted(dist.cumulative, u, side="right")
    idx = np.minimum(idx, dist.dimension - 1)
    idx = dist._prev_positive[idx]
    if np.ndim(u) == 0:
        return int(idx)
    return idx


def ridge_optimal_q(moments):
    """q_i proportional to sqrt(E[x_i^2]): minimizes sum_i m_i / q_i.

    At the optimum the objective equals ||m||_{1/2}.
    """
    m = np.asarray(moments, dtype=float)
    if m.size == 0:
        raise ValueError("zero dimension")
    if np.any(m < 0):
        raise ValueError("degenerate moments")
    if not np.any(m > 0):
        raise ValueError("degenerate moments")
    return build_distribution(np.sqrt(m))


def lasso_optimal_q(moments):
    """q_i proportional to E[x_i^2]: minimizes max_i m_i / q_i.

    At the optimum every ratio m_i / q_i equals ||m||_1.
    """
    m = np.asarray(moments, dtype=float)
    if m.size == 0:
        raise ValueError("zero dimension")
    if np.any(m < 0):
        raise ValueError("degenerate moments")
    if not np.any(m > 0):
        raise ValueError("degenerate moments")
    return build_distribution(m)


def inner_product_p(w, regime):
    """Inner-product sampling weights from the current iterate.

    Ridge: p_j = w_j^2 / ||w||_2^2.  Lasso: p_j = |w_j| / ||w||_1.
    The w = 0 case is the caller's to handle (solvers short-circuit it).
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ValueError("zero dimension")
    if not np.any(w != 0):
        raise ValueError("zero weight vector")
    if Regime(regime) == Regime.L2:
        return build_distribution(w * w)
    return build_distribution(np.abs(w))


def improved_inner_product_p(w, moments, regime):
    """Variance-reducing alternative: p_j proportional to sqrt(w_j^2 E[x_j^2]).

    Identical formula for both regimes; an empirical refinement with no
    accompanying bound.  Unbiasedness of the inner-product estimate needs
    p positive wherever w is nonzero, so a zero moment estimate on the
    support (possible with estimated moments) voids the weighting and the
    standard distribution is used instead.
    """
    w = np.asarray(w, dtype=float)
    m = np.asarray(moments, dtype=float)
    if w.size == 0:
        raise ValueError("zero dimension")
    if w.shape != m.shape:
        raise ValueError("invalid weights: moment vector length mismatch")
    if np.any(m < 0):
        raise ValueError("degenerate moments")
    if not np.any(w != 0):
        raise ValueError("zero weight vector")
    weights = np.abs(w) * np.sqrt(m)
    if np.any((w != 0) & (weights == 0)):
        return inner_product_p(w, regime)
    return build_distribution(weights)
