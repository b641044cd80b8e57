"""Unbiased sparse estimates of the example and of the loss derivative.

A gradient step observes n_point sampled attribute values to build the
sparse point estimate x~ and (unless the iterate is zero) n_inner more to
estimate phi = <w, x> - y.  The implied gradient estimate phi * x~ is
unbiased for (<w, x> - y) x whenever q covers the support of x and p
covers the support of w.  All randomness is injected as uniform draws in
[0, 1), so callers control determinism.
"""

from dataclasses import dataclass

import numpy as np

from .sampling import sample_index

__all__ = [
    "SparseEstimate",
    "GradientEstimate",
    "estimate_point",
    "estimate_from_indices",
    "estimate_inner_product",
    "gradient_estimate",
]


@dataclass
class SparseEstimate:
    """Sparse vector as parallel (indices, values) arrays; duplicates merged."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def to_dense(self):
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out


@dataclass
class GradientEstimate:
    """phi together with the point estimate; the gradient itself is phi * point."""

    phi: float
    point: SparseEstimate
    attributes_consumed: int

    def to_dense(self):
        return self.phi * self.point.to_dense()


def estimate_from_indices(x, q, indices):
    """Build the point estimate from already-drawn indices.

    The estimate is (1/k) sum_r x[i_r] e_{i_r} / q_{i_r}; repeated draws
    merge by summation.
    """
    indices = np.asarray(indices, dtype=np.intp)
    k = indices.size
    if k == 0:
        raise ValueError("need at least one draw")
    uniq, counts = np.unique(indices, return_counts=True)
    values = counts * x[uniq] / (k * q.probabilities[uniq])
    return SparseEstimate(uniq, values, int(np.asarray(x).size))


def estimate_point(x, q, draws):
    """Sparse unbiased estimate of x from len(draws) sampled attributes.

    Each draw observes one attribute value; observing a zero still
    consumes budget.  Unbiasedness needs q_i > 0 wherever x_i != 0.
    """
    draws = np.atleast_1d(np.asarray(draws, dtype=float))
    idx = sample_index(q, draws)
    return estimate_from_indices(x, q, idx)


def estimate_inner_product(x, y, w, p, draw):
    """One-draw estimate of <w, x> - y; returns (phi, attributes_consumed).

    A zero iterate needs no observation: phi = -y exactly, consumed = 0.
    """
    w = np.asarray(w, dtype=float)
    if not np.any(w != 0):
        return -float(y), 0
    j = sample_index(p, draw)
    return float(w[j] / p.probabilities[j] * x[j] - y), 1


def gradient_estimate(x, y, w, q, p, point_draws, inner_draws):
    """Combine the point and inner-product estimates into one gradient estimate.

    Multiple inner draws average independent single-draw estimates of
    <w, x>, which keeps phi unbiased while reducing its variance.  The
    point and inner draws are disjoint randomness.
    """
    point = estimate_point(x, q, point_draws)
    n_point = np.atleast_1d(np.asarray(point_draws)).size
    w = np.asarray(w, dtype=float)
    if not np.any(w != 0):
        return GradientEstimate(-float(y), point, n_point)
    inner_draws = np.atleast_1d(np.asarray(inner_draws, dtype=float))
    j = sample_index(p, inner_draws)
    phi = float(np.mean(w[j] / p.probabilities[j] * x[j]) - y)
    return GradientEstimate(phi, point, n_point + inner_draws.size)
