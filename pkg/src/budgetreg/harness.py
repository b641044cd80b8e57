"""Experiment orchestration: repeated seeded prefix runs, cross-validated
step sizes, and learning curves in attributes-observed coordinates.

Every run is keyed by (algorithm, prefix, repeat) and every random stream
is derived from the experiment seed plus that key, so the output is a pure
function of the configuration regardless of worker-pool size.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import AdaGradConfig, adagrad_variant, offline_erm, online_lasso_full, online_ridge_full
from .core import Regime, norm, squared_loss, weight_norm
from .datagen import generate_dataset, power_law_means, random_target_weights
from .ingest import Scaler, load_csv
from .sampling import lasso_optimal_q, ridge_optimal_q, uniform_distribution
from .solver_lasso import EGConfig, aelr_eta, lasso_eta_known_moments, run_gaelr
from .solver_ridge import RidgeConfig, aerr_eta, ridge_eta_known_moments, run_gaerr
from .two_phase import TwoPhaseConfig, run_two_phase

__all__ = [
    "ALGORITHMS",
    "AlgoSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "LearningCurve",
    "RunContext",
    "RunRecord",
    "cross_validate",
    "dataset_moments",
    "relative_loss",
    "run_experiment",
    "split_budget",
    "train_run",
]

# stream tags; every derived seed is (base entropy..., tag, key...)
_TAG_SPLIT = 101
_TAG_SHUFFLE = 102
_TAG_CV_SPLIT = 103
_TAG_CV_RUN = 104
_TAG_RUN = 105
_TAG_CV = 106


def _stream(seed, *tags):
    base = tuple(int(s) for s in seed) if isinstance(seed, tuple) else (int(seed),)
    return np.random.default_rng(np.random.SeedSequence(base + tags))


def relative_loss(predictor, test_set) -> float:
    """Total squared loss on the test set divided by the zero predictor's."""
    base = float(np.sum(squared_loss(0.0, test_set.y)))
    if base == 0.0:
        raise ValueError("zero-predictor loss undefined")
    preds = test_set.x @ predictor.weights
    return float(np.sum(squared_loss(preds, test_set.y))) / base


def dataset_moments(dataset) -> np.ndarray:
    """Exact empirical second moments E[x_i^2] over the given examples."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return np.mean(dataset.x**2, axis=0)


def split_budget(budget: int, fraction: float = 0.5):
    """Split a per-example budget into (point draws, inner-product draws).

    Point draws take round(fraction * budget) with both sides floored at
    one; round-half-to-even decides the exact midpoint.
    """
    if budget < 2:
        raise ValueError("budget must allow one point draw and one inner draw")
    n_point = int(round(fraction * budget))
    n_point = min(max(n_point, 1), budget - 1)
    return n_point, budget - n_point


@dataclass(frozen=True)
class AlgoSpec:
    """Registry entry: norm regime (None = follows the data), budget use,
    and the dispatch kind."""

    regime: Regime | None
    budgeted: bool
    kind: str
    base: str = ""


ALGORITHMS = {
    "aerr": AlgoSpec(Regime.L2, True, "plain"),
    "ddaerr": AlgoSpec(Regime.L2, True, "moments"),
    "2p-ddaerr": AlgoSpec(Regime.L2, True, "two_phase"),
    "aelr": AlgoSpec(Regime.LINF, True, "plain"),
    "ddaelr": AlgoSpec(Regime.LINF, True, "moments"),
    "2p-ddaelr": AlgoSpec(Regime.LINF, True, "two_phase"),
    "ogd-full": AlgoSpec(Regime.L2, False, "full"),
    "eg-full": AlgoSpec(Regime.LINF, False, "full"),
    "erm": AlgoSpec(None, False, "erm"),
    "adagrad-ogd-full": AlgoSpec(Regime.L2, False, "adagrad", base="online_full"),
    "adagrad-gaerr": AlgoSpec(Regime.L2, True, "adagrad", base="gaerr"),
    "adagrad-gaelr": AlgoSpec(Regime.LINF, True, "adagrad", base="gaelr"),
}


@dataclass
class RunContext:
    """Shared per-experiment inputs for a single training run."""

    regime: Regime
    b: float
    n_point: int
    n_inner: int
    moments: np.ndarray | None = None
    improved_p: bool = True
    m1_fraction: float = 0.1
    delta: float = 0.1
    epsilon_override: float | None = 0.0


def train_run(algo_id, train, ctx, eta, seed):
    """Dispatch one training run; eta=None selects the algorithm's own rate."""
    spec = ALGORITHMS.get(algo_id)
    if spec is None:
        raise ValueError(f"unknown algorithm: {algo_id}")
    regime = spec.regime if spec.regime is not None else ctx.regime
    if regime != ctx.regime:
        raise ValueError(f"{algo_id} requires {regime.value} data")
    ridge = regime == Regime.L2
    d = train.dimension
    m = len(train)
    k, n_inner = ctx.n_point, ctx.n_inner

    if spec.kind == "plain":
        q = uniform_distribution(d)
        if eta is None:
            eta = aerr_eta(m, k, d, ctx.b) if ridge else aelr_eta(m, k, d, ctx.b)
        if ridge:
            return run_gaerr(train, RidgeConfig(b=ctx.b, eta=eta, q=q, n_point=k, n_inner=n_inner), seed)
        return run_gaelr(train, EGConfig(b=ctx.b, eta=eta, q=q, n_point=k, n_inner=n_inner), seed)

    if spec.kind == "moments":
        mom = ctx.moments
        if mom is None:
            raise ValueError(f"{algo_id} needs second-moment estimates")
        if eta is None:
            if ridge:
                eta = ridge_eta_known_moments(m, k, float(norm(mom, 0.5)))
            else:
                eta = lasso_eta_known_moments(m, k, d, ctx.b, float(norm(mom, 1)))
        p_mode = "improved" if ctx.improved_p else "standard"
        p_moments = mom if ctx.improved_p else None
        if ridge:
            cfg = RidgeConfig(b=ctx.b, eta=eta, q=ridge_optimal_q(mom), n_point=k,
                              n_inner=n_inner, p_mode=p_mode, moments=p_moments)
            return run_gaerr(train, cfg, seed)
        cfg = EGConfig(b=ctx.b, eta=eta, q=lasso_optimal_q(mom), n_point=k,
                       n_inner=n_inner, p_mode=p_mode, moments=p_moments)
        return run_gaelr(train, cfg, seed)

    if spec.kind == "two_phase":
        m1 = int(math.ceil(ctx.m1_fraction * m))
        # tiny floor keeps zero-count coordinates reachable under the
        # practical epsilon = 0 override
        cfg = TwoPhaseConfig(
            m1=m1, m2=m - m1, b=ctx.b, k=k, regime=regime, delta=ctx.delta,
            eta=eta, n_inner=n_inner,
            p_mode="improved" if ctx.improved_p else "standard",
            phase1_mode="uniform_solver_warm_start",
            epsilon_override=ctx.epsilon_override,
            q_floor=1e-9,
        )
        return run_two_phase(train, cfg, seed)

    if spec.kind == "full":
        if eta is None:
            # scale-free OGD rate; EG rate from the ln(2d) regret bound
            eta = 1.0 / math.sqrt(m) if ridge else math.sqrt(math.log(2 * d) / m) / (2 * ctx.b)
        if ridge:
            return online_ridge_full(train, ctx.b, eta, seed)
        return online_lasso_full(train, ctx.b, eta, seed)

    if spec.kind == "erm":
        return offline_erm(train, ctx.b, regime)

    # adagrad family: uniform q for budgeted bases, standard inner-product p
    q = uniform_distribution(d) if spec.budgeted else None
    cfg = AdaGradConfig(b=ctx.b, eta0=ctx.b if eta is None else eta, q=q,
                        n_point=k, n_inner=n_inner)
    return adagrad_variant(spec.base, train, cfg, seed)


def cross_validate(dataset, algorithm, eta_grid, folds, seed, ctx):
    """Pick the step size by k-fold validation; ties go to the smaller eta.

    Fold data and fold run streams depend only on (seed, fold), never on
    the candidate, so duplicated grid entries score identically and the
    first one wins.  Folds whose validation targets are all zero carry no
    defined relative loss and are skipped.
    """
    if eta_grid is None or len(eta_grid) == 0:
        raise ValueError("empty step-size grid")
    if folds < 2:
        raise ValueError("need at least two folds")
    n = len(dataset)
    if n < folds:
        raise ValueError("fewer examples than folds")
    order = _stream(seed, _TAG_CV_SPLIT).permutation(n)
    blocks = np.array_split(order, folds)
    best = None
    for j, eta in enumerate(eta_grid):
        eta = float(eta)
        scores = []
        for f in range(folds):
            val = dataset.subset(blocks[f])
            if not np.any(val.y != 0):
                continue
            train_idx = np.concatenate([blocks[g] for g in range(folds) if g != f])
            rng = _stream(seed, _TAG_CV_RUN, f)
            result = train_run(algorithm, dataset.subset(train_idx), ctx, eta, rng)
            scores.append(relative_loss(result.predictor, val))
        if not scores:
            raise ValueError("zero-predictor loss undefined")
        key = (float(np.mean(scores)), eta, j)
        if best is None or key < best[0]:
            best = (key, eta)
    return best[1]


@dataclass
class ExperimentConfig:
    """Flat experiment description; every field round-trips through JSON."""

    algorithms: list
    regime: Regime
    prefixes: list
    k: int
    data: str | None = None  # CSV path; None means synthetic generation
    dim: int = 0
    alpha: float = 0.0
    budget_split: float = 0.5
    repeats: int = 100
    folds: int = 10
    eta_grid: list | None = None
    m1_fraction: float = 0.1
    test_fraction: float = 0.2
    seed: int = 0
    b: float | None = None
    delta: float = 0.1
    epsilon_override: float | None = 0.0
    improved_p: bool = True

    _FIELDS = (
        "algorithms", "regime", "prefixes", "k", "data", "dim", "alpha",
        "budget_split", "repeats", "folds", "eta_grid", "m1_fraction",
        "test_fraction", "seed", "b", "delta", "epsilon_override",
        "improved_p",
    )
    _REQUIRED = ("algorithms", "regime", "prefixes", "k")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = sorted(set(raw) - set(cls._FIELDS))
        if unknown:
            raise ValueError("invalid config keys: " + ", ".join(unknown))
        missing = sorted(k for k in cls._REQUIRED if k not in raw)
        if missing:
            raise ValueError("missing config keys: " + ", ".join(missing))
        kwargs = dict(raw)
        kwargs["regime"] = Regime(kwargs["regime"])
        config = cls(**kwargs)
        config.validate()
        return config

    def to_dict(self) -> dict:
        return {name: (self.regime.value if name == "regime" else getattr(self, name))
                for name in self._FIELDS}

    def validate(self):
        if not self.algorithms:
            raise ValueError("no algorithms configured")
        for algo in self.algorithms:
            spec = ALGORITHMS.get(algo)
            if spec is None:
                raise ValueError(f"unknown algorithm: {algo}")
            if spec.regime is not None and spec.regime != self.regime:
                raise ValueError(f"{algo} requires {spec.regime.value} data")
        if not self.prefixes or any(int(m) < 1 for m in self.prefixes):
            raise ValueError("prefixes must be positive")
        budgeted = any(ALGORITHMS[a].budgeted for a in self.algorithms)
        if budgeted and self.k < 1:
            raise ValueError("k must be at least 1")
        if budgeted:
            split_budget(self.k + 1, self.budget_split)
        if self.data is None and (self.dim < 1 or self.alpha > 0):
            raise ValueError("synthetic data needs dim >= 1 and alpha <= 0")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        if self.folds < 2:
            raise ValueError("need at least two folds")
        if self.eta_grid is not None and len(self.eta_grid) == 0:
            raise ValueError("empty step-size grid")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test fraction must lie in (0, 1)")
        if not 0.0 < self.m1_fraction < 1.0:
            raise ValueError("phase-1 fraction must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class RunRecord:
    algorithm: str
    seed: int  # repeat index
    m: int
    attributes_observed: int
    test_relative_loss: float


@dataclass
class LearningCurve:
    """Per-algorithm aggregate: (attributes observed, mean, std) points."""

    algorithm: str
    points: list = field(default_factory=list)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    curves: dict
    records: list
    etas: dict  # (algorithm, prefix) -> step size used (None = auto)


def _materialize(config):
    """Build the fixed (pool, test, B, moments) tuple from the config.

    The split permutation, the generated data, and the scaling all depend
    only on the seed, so every run of the experiment sees the same bytes.
    """
    if config.data is not None:
        raw = load_csv(config.data)
        total = len(raw)
        test_size = max(1, int(round(config.test_fraction * total)))
        if total - test_size < 1:
            raise ValueError("dataset too small for the test split")
        perm = _stream(config.seed, _TAG_SPLIT).permutation(total)
        pool_raw = raw.subset(perm[test_size:])
        scaler = Scaler(config.regime).fit(pool_raw)
        pool = scaler.transform(pool_raw)
        test = scaler.transform(raw.subset(perm[:test_size]))
        b = config.b if config.b is not None else float(np.abs(pool.y).max())
    else:
        need = int(max(config.prefixes))
        total = int(math.ceil(need / (1.0 - config.test_fraction)))
        while total - max(1, int(round(config.test_fraction * total))) < need:
            total += 1
        test_size = max(1, int(round(config.test_fraction * total)))
        u = power_law_means(config.dim, config.alpha, config.regime)
        w_star = random_target_weights(config.dim, config.regime, config.seed)
        full = generate_dataset(u, w_star, total, config.regime, config.seed)
        perm = _stream(config.seed, _TAG_SPLIT).permutation(total)
        pool = full.subset(perm[test_size:])
        test = full.subset(perm[:test_size])
        if config.b is not None:
            b = config.b
        else:
            # max|y| <= ||w*|| whenever ||x|| <= 1, so the max is a formality
            b = float(max(weight_norm(w_star, config.regime), np.abs(pool.y).max()))
    if b <= 0:
        raise ValueError("norm bound must be positive")
    return pool, test, b, dataset_moments(pool)


# worker-side payload, installed once per process by the pool initializer
_WORKER: dict = {}


def _init_worker(payload):
    _WORKER["payload"] = payload


def _run_task(task):
    algo_index, algo_id, prefix_index, m, repeat, eta = task
    payload = _WORKER["payload"]
    pool, test, ctx, seed = payload["pool"], payload["test"], payload["ctx"], payload["seed"]
    order = _stream(seed, _TAG_SHUFFLE, repeat).permutation(len(pool))
    train = pool.subset(order[:m])
    rng = _stream(seed, _TAG_RUN, algo_index, prefix_index, repeat)
    result = train_run(algo_id, train, ctx, eta, rng)
    return algo_index, prefix_index, repeat, int(result.attributes_consumed), relative_loss(result.predictor, test)


def run_experiment(config, workers: int = 1) -> ExperimentResult:
    """Run every (algorithm, prefix, repeat) cell and aggregate curves.

    Prefixes reuse one per-repeat pool shuffle, so at a fixed repeat all
    algorithms and all prefixes see nested slices of the same ordering
    (paired comparisons).  Step sizes come from one cross-validation per
    (algorithm, prefix) on the unshuffled pool prefix, or from each
    algorithm's own rate when no grid is configured.  The worker count is
    an execution detail and never affects the result.
    """
    config.validate()
    if workers < 1:
        raise ValueError("workers must be positive")
    pool, test, b, moments = _materialize(config)
    if int(max(config.prefixes)) > len(pool):
        raise ValueError("prefix exceeds the available training examples")
    n_point, n_inner = (1, 1)
    if any(ALGORITHMS[a].budgeted for a in config.algorithms):
        n_point, n_inner = split_budget(config.k + 1, config.budget_split)
    ctx = RunContext(
        regime=config.regime, b=b, n_point=n_point, n_inner=n_inner,
        moments=moments, improved_p=config.improved_p,
        m1_fraction=config.m1_fraction, delta=config.delta,
        epsilon_override=config.epsilon_override,
    )

    etas = {}
    for ai, algo in enumerate(config.algorithms):
        for pi, m in enumerate(config.prefixes):
            m = int(m)
            if config.eta_grid is None or ALGORITHMS[algo].kind == "erm":
                etas[(algo, m)] = None
            else:
                etas[(algo, m)] = cross_validate(
                    pool.subset(np.arange(m)), algo, config.eta_grid,
                    config.folds, (config.seed, _TAG_CV, ai, pi), ctx,
                )

    tasks = []
    for ai, algo in enumerate(config.algorithms):
        for pi, m in enumerate(config.prefixes):
            for r in range(config.repeats):
                tasks.append((ai, algo, pi, int(m), r, etas[(algo, int(m))]))

    payload = {"pool": pool, "test": test, "ctx": ctx, "seed": config.seed}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=_init_worker, initargs=(payload,)) as pool_exec:
            raw = list(pool_exec.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        _init_worker(payload)
        raw = [_run_task(t) for t in tasks]

    records = [
        RunRecord(algorithm=task[1], seed=task[4], m=task[3],
                  attributes_observed=attrs, test_relative_loss=rel)
        for task, (_, _, _, attrs, rel) in zip(tasks, raw)
    ]
    curves = {}
    for ai, algo in enumerate(config.algorithms):
        points = []
        for pi, m in enumerate(config.prefixes):
            cell = [rec for rec, task in zip(records, tasks) if task[0] == ai and task[2] == pi]
            losses = np.array([rec.test_relative_loss for rec in cell])
            std = float(np.std(losses, ddof=1)) if len(losses) > 1 else 0.0
            points.append((cell[0].attributes_observed, float(np.mean(losses)), std))
        points.sort(key=lambda p: p[0])
        curves[algo] = LearningCurve(algo, points)
    return ExperimentResult(config, curves, records, etas)
