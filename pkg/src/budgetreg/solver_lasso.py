"""Attribute-budgeted lasso regression by exponentiated gradient.

The iterate lives implicitly in two positive vectors z+ and z-; the
weight vector is their scaled difference on the L1 ball of radius b.
Gradient estimates are clipped at 1/eta before entering the exponent, so
each multiplicative factor stays in [1/e, e] and the z entries remain
positive.  Updates touch only the support of the sparse gradient
estimate: all other coordinates would be multiplied by exp(0) = 1.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Predictor, Regime, RunResult
from .estimator import estimate_point, sample_index
from .sampling import (
    AttributeDistribution,
    improved_inner_product_p,
    inner_product_p,
)

__all__ = [
    "EGConfig",
    "EGState",
    "eg_weights",
    "eg_state_from_weights",
    "eg_update",
    "gaelr_step",
    "run_gaelr",
    "aelr_eta",
    "lasso_eta_known_moments",
    "lasso_eta_two_phase",
]

_RENORM_THRESHOLD = 1e100


@dataclass
class EGConfig:
    b: float
    eta: float
    q: AttributeDistribution
    n_point: int = 1
    n_inner: int = 1
    p_mode: str = "standard"  # "standard" or "improved"
    moments: np.ndarray | None = None  # weighting for improved p
    initial_w: np.ndarray | None = None

    def validate(self, d):
        if self.b <= 0:
            raise ValueError("norm bound must be positive")
        if self.eta <= 0:
            raise ValueError("step size must be positive")
        if self.n_point < 1 or self.n_inner < 1:
            raise ValueError("need at least one draw per estimate")
        if self.q.dimension != d:
            raise ValueError("sampling distribution dimension mismatch")
        if self.p_mode not in ("standard", "improved"):
            raise ValueError(f"unknown p_mode {self.p_mode!r}")
        if self.p_mode == "improved" and self.moments is None:
            raise ValueError("improved inner-product sampling needs moments")


@dataclass
class EGState:
    z_plus: np.ndarray
    z_minus: np.ndarray
    sum_w: np.ndarray
    steps: int = 0
    attributes_consumed: int = 0
    zero_weight_steps: int = 0

    @classmethod
    def initial(cls, d, config=None):
        if config is not None and config.initial_w is not None:
            return eg_state_from_weights(config.initial_w, config.b)
        return cls(z_plus=np.ones(d), z_minus=np.ones(d), sum_w=np.zeros(d))


def eg_weights(state, b):
    """w = (z+ - z-) * b / (||z+||_1 + ||z-||_1); z entries are positive."""
    scale = b / (state.z_plus.sum() + state.z_minus.sum())
    return (state.z_plus - state.z_minus) * scale


def eg_state_from_weights(w, b):
    """State whose derived weight vector equals w (needs ||w||_1 < b).

    z+ = max(w, 0) + gamma and z- = max(-w, 0) + gamma with the slack
    gamma = (b - ||w||_1) / (2d) spread evenly; then ||z+||_1 + ||z-||_1
    = b and the scaled difference reproduces w exactly.  A seed sitting
    on the ball boundary gets a hair of slack instead, shrinking it by a
    negligible factor.
    """
    w = np.asarray(w, dtype=float)
    d = w.size
    if d == 0:
        raise ValueError("zero dimension")
    l1 = float(np.abs(w).sum())
    gamma = (b - l1) / (2.0 * d)
    if gamma <= 0:
        gamma = 1e-12 * b / (2.0 * d)
    return EGState(
        z_plus=np.maximum(w, 0.0) + gamma,
        z_minus=np.maximum(-w, 0.0) + gamma,
        sum_w=np.zeros(d),
    )


def eg_update(state, indices, values, eta):
    """Clipped multiplicative update on the gradient estimate's support.

    Off-support coordinates are untouched; both z vectors are rescaled by
    the same factor if an entry overflows the renormalization threshold
    (the derived weights are invariant to common rescaling).
    """
    g = np.clip(values, -1.0 / eta, 1.0 / eta)
    state.z_plus[indices] *= np.exp(-eta * g)
    state.z_minus[indices] *= np.exp(eta * g)
    peak = max(float(state.z_plus.max()), float(state.z_minus.max()))
    if peak > _RENORM_THRESHOLD:
        state.z_plus /= peak
        state.z_minus /= peak
    return state


def gaelr_step(state, x, y, config, rng, point_estimate=None):
    """One budgeted EG step; mutates and returns the state.

    The pre-update weight vector enters the running average and defines
    the inner-product distribution.  A zero iterate (the fresh initial
    state, in particular) needs no inner-product observation, but the
    full per-example budget is charged regardless; zero_weight_steps
    records how often the draw was skipped.  An externally built point
    estimate (draws shared with a moment table) replaces the internal
    one when supplied.
    """
    w = eg_weights(state, config.b)
    state.sum_w += w
    if point_estimate is None:
        point_estimate = estimate_point(x, config.q, rng.random(config.n_point))
    if np.any(w != 0):
        if config.p_mode == "improved":
            p = improved_inner_product_p(w, config.moments, Regime.LINF)
        else:
            p = inner_product_p(w, Regime.LINF)
        j = sample_index(p, rng.random(config.n_inner))
        phi = float(np.mean(w[j] / p.probabilities[j] * x[j]) - y)
    else:
        phi = -float(y)
        state.zero_weight_steps += 1
    if phi != 0.0:
        eg_update(state, point_estimate.indices, phi * point_estimate.values, config.eta)
    state.steps += 1
    state.attributes_consumed += config.n_point + config.n_inner
    return state


def run_gaelr(dataset, config, seed):
    """Single ordered pass over the dataset; returns the averaged predictor."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.regime is not None and dataset.regime != Regime.LINF:
        raise ValueError("lasso solver requires Linf-regime data")
    d = dataset.dimension
    config.validate(d)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(np.random.SeedSequence(seed))
    state = EGState.initial(d, config)
    xs, ys = dataset.x, dataset.y
    for t in range(len(dataset)):
        gaelr_step(state, xs[t], float(ys[t]), config, rng)
    w_bar = state.sum_w / state.steps
    predictor = Predictor(w_bar, config.b, Regime.LINF)
    return RunResult(predictor, state.attributes_consumed, state.zero_weight_steps)


def aelr_eta(m, k, d, b):
    """Step size 2b/(G sqrt(m)) with G = b sqrt(8d/k), capped at 1/(2G).

    The cap is the admissibility requirement of the clipped update; the
    norm bound cancels in the first branch.
    """
    if m < 1 or k < 1 or d < 1:
        raise ValueError("m, k, d must be positive")
    if b <= 0:
        raise ValueError("norm bound must be positive")
    g = b * math.sqrt(8.0 * d / k)
    return min(2.0 * b / (g * math.sqrt(m)), 1.0 / (2.0 * g))


def lasso_eta_known_moments(m, k, d, b, l1_moment):
    """eta = (1/(2b)) sqrt(ln(2d) / (5 m (||E[x^2]||_1 / k + 1))).

    The accompanying bound needs m >= ln(2d); smaller m only voids the
    guarantee, so the run proceeds under a warning.
    """
    if m < 1 or k < 1 or d < 1:
        raise ValueError("m, k, d must be positive")
    if b <= 0:
        raise ValueError("norm bound must be positive")
    if l1_moment < 0:
        raise ValueError("degenerate moments")
    if m < math.log(2 * d):
        warnings.warn("m below ln(2d): the regret bound is not guaranteed", stacklevel=2)
    return math.sqrt(math.log(2 * d) / (5.0 * m * (l1_moment / k + 1.0))) / (2.0 * b)


def lasso_eta_two_phase(m1, m2, k, d, delta, moment_estimates, b, epsilon=None):
    """Step size for the second phase when moments come from phase-1 estimates.

    eta = sqrt(k ln(2d) / (20 b^2 m2 (8 ||A||_1 + 20 d eps + k))) with
    eps = min(d ln(2d/delta) / ((k+1) m1), 1); an empty first phase pins
    eps at its cap.  Pass epsilon to bypass the recomputation.
    """
    if m2 < 1 or k < 1 or d < 1:
        raise ValueError("m2, k, d must be positive")
    if b <= 0:
        raise ValueError("norm bound must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    a1 = float(np.abs(np.asarray(moment_estimates, dtype=float)).sum())
    if epsilon is None:
        epsilon = 1.0 if m1 == 0 else min(d * math.log(2 * d / delta) / ((k + 1.0) * m1), 1.0)
    bracket = 8.0 * a1 + 20.0 * d * epsilon + k
    return math.sqrt(k * math.log(2 * d) / (20.0 * b * b * m2 * bracket))
