"""Attribute-budgeted ridge regression by projected online gradient descent.

Each step builds an unbiased gradient estimate from a handful of sampled
attribute values, takes a gradient step, and projects back onto the L2
ball of radius b.  The returned predictor is the average of the visited
iterates.  With uniform q this is the no-prior-knowledge baseline (AERR);
with q proportional to sqrt(E[x^2]) it is the data-dependent variant
(DDAERR).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Predictor, Regime, RunResult
from .estimator import estimate_point, sample_index
from .sampling import (
    AttributeDistribution,
    improved_inner_product_p,
    inner_product_p,
    uniform_distribution,
)

__all__ = [
    "RidgeConfig",
    "RidgeState",
    "default_initial_w",
    "gaerr_step",
    "run_gaerr",
    "aerr_q",
    "aerr_eta",
    "ridge_eta_known_moments",
]


def default_initial_w(d, b):
    """Nonzero start well inside the ball: (b / (2 sqrt(d))) * ones."""
    return np.full(d, b / (2.0 * math.sqrt(d)))


@dataclass
class RidgeConfig:
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
class RidgeState:
    w: np.ndarray
    sum_w: np.ndarray
    steps: int = 0
    attributes_consumed: int = 0
    zero_weight_steps: int = 0

    @classmethod
    def initial(cls, d, config):
        w0 = config.initial_w
        w0 = default_initial_w(d, config.b) if w0 is None else np.asarray(w0, dtype=float).copy()
        return cls(w=w0, sum_w=np.zeros(d))


def _inner_phi(x, y, w, config, rng):
    """phi estimate for a nonzero iterate."""
    if config.p_mode == "improved":
        p = improved_inner_product_p(w, config.moments, Regime.L2)
    else:
        p = inner_product_p(w, Regime.L2)
    j = sample_index(p, rng.random(config.n_inner))
    return float(np.mean(w[j] / p.probabilities[j] * x[j]) - y)


def gaerr_step(state, x, y, config, rng, point_estimate=None):
    """One budgeted OGD step; mutates and returns the state.

    The pre-update iterate enters the running average, mirroring the
    output definition w_bar = mean of visited iterates.  An externally
    built point estimate (draws shared with a moment table) replaces the
    internal one when supplied.  The full per-example budget is charged
    even on the zero-iterate path, where phi = -y costs no observation;
    zero_weight_steps records how often the inner-product draw was
    skipped.
    """
    w = state.w
    state.sum_w += w
    est = point_estimate if point_estimate is not None else estimate_point(x, config.q, rng.random(config.n_point))
    if np.any(w != 0):
        phi = _inner_phi(x, y, w, config, rng)
    else:
        phi = -float(y)
        state.zero_weight_steps += 1
    if phi != 0.0:
        w[est.indices] -= config.eta * phi * est.values
        nrm = math.sqrt(float(np.dot(w, w)))
        if nrm > config.b:
            w *= config.b / nrm
    state.steps += 1
    state.attributes_consumed += config.n_point + config.n_inner
    return state


def run_gaerr(dataset, config, seed):
    """Single ordered pass over the dataset; returns the averaged predictor."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.regime is not None and dataset.regime != Regime.L2:
        raise ValueError("ridge solver requires L2-regime data")
    d = dataset.dimension
    config.validate(d)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(np.random.SeedSequence(seed))
    state = RidgeState.initial(d, config)
    xs, ys = dataset.x, dataset.y
    for t in range(len(dataset)):
        gaerr_step(state, xs[t], float(ys[t]), config, rng)
    w_bar = state.sum_w / state.steps
    predictor = Predictor(w_bar, config.b, Regime.L2)
    return RunResult(predictor, state.attributes_consumed, state.zero_weight_steps)


def aerr_q(d):
    """Uniform attribute sampling: the no-prior-knowledge choice."""
    return uniform_distribution(d)


def aerr_eta(m, k, d, b):
    """Step size 2b/(G sqrt(m)) with the gradient bound G = b sqrt(8d/k).

    The norm bound cancels: eta = sqrt(k / (2 d m)).
    """
    if m < 1 or k < 1 or d < 1:
        raise ValueError("m, k, d must be positive")
    if b <= 0:
        raise ValueError("norm bound must be positive")
    return math.sqrt(k / (2.0 * d * m))


def ridge_eta_known_moments(m, k, half_norm):
    """eta = 1 / sqrt(m (||E[x^2]||_{1/2} / k + 1)) for the moment-aware solver."""
    if m < 1 or k < 1:
        raise ValueError("m, k must be positive")
    if half_norm < 0:
        raise ValueError("degenerate moments")
    return 1.0 / math.sqrt(m * (half_norm / k + 1.0))
