"""Faithfulness benchmarking by subset retraining.

The core experiment: draw random feature subsets, retrain the model on each,
and check how well each ranking method's total importance over the subset
tracks the retrained model's skill. Granular follow-ups compare models built
from the top-k versus bottom-k features and trace incremental selection
curves.
"""

import dataclasses
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import models
from .metrics import FitStats, association_stats, resolve_metric
from .rankings import RankingScorecard
from .util import derive_seed, name_seed

__all__ = [
    "FaithfulnessRecord",
    "FaithfulnessReport",
    "run_experiment",
    "pareto_curve",
    "topk_bottomk",
    "incremental_curves",
]


@dataclass(frozen=True)
class FaithfulnessRecord:
    """One retrained subset: members, size, skill, and per-method totals."""

    subset: tuple
    subset_size: int
    performance: float
    total_importance: dict          # method -> raw sum of full-model scores
    scaled_importance: dict         # method -> min-max scaled across the run

    def to_json(self) -> dict:
        return {
            "subset": list(self.subset),
            "subset_size": self.subset_size,
            "performance": self.performance,
            "total_importance": dict(self.total_importance),
            "scaled_importance": dict(self.scaled_importance),
        }


@dataclass(frozen=True)
class FaithfulnessReport:
    metric: str
    n_subsets: int
    seed: int
    model_config: dict
    fit_stats: dict                 # method -> FitStats
    records: tuple
    n_failures: int = 0

    def methods(self):
        return list(self.fit_stats)

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "n_subsets": self.n_subsets,
            "seed": self.seed,
            "model_config": dict(self.model_config),
            "n_failures": self.n_failures,
            "fit_stats": {m: s.to_json() for m, s in self.fit_stats.items()},
            "records": [r.to_json() for r in self.records],
        }

    def to_csv_rows(self):
        methods = self.methods()
        yield ("subset", "subset_size", "performance", *methods)
        for r in self.records:
            yield (
                "|".join(r.subset),
                str(r.subset_size),
                f"{r.performance:.10g}",
                *(f"{r.scaled_importance[m]:.10g}" for m in methods),
            )


_MAX_ATTEMPTS_PER_SLOT = 20


def _retrain_one(args):
    """Train/score one subset slot; deterministic in (seed, slot index)."""
    train, test, cfg, metric, seed, n_subsets, index = args
    metric_fn = resolve_metric(metric)
    P = train.n_features
    failures = 0
    for attempt in range(_MAX_ATTEMPTS_PER_SLOT):
        slot_seed = derive_seed(seed, attempt * n_subsets + index + 1)
        rng = np.random.default_rng(slot_seed)
        size = int(rng.integers(1, P))
        members = tuple(
            train.feature_names[j] for j in sorted(rng.choice(P, size=size, replace=False))
        )
        try:
            model = models.fit(
                ds.subset(train, members),
                dataclasses.replace(cfg, seed=derive_seed(slot_seed, 1)),
            )
            performance = metric_fn(
                test.target, model.predict(ds.subset(test, members).features)
            )
        except Exception:
            failures += 1
            continue
        return index, members, size, float(performance), failures
    raise RuntimeError(
        f"subset slot {index} failed {_MAX_ATTEMPTS_PER_SLOT} retraining attempts"
    )


def _scale_totals(raw: np.ndarray) -> np.ndarray:
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full_like(raw, 0.5)
    return (raw - lo) / (hi - lo)


def run_experiment(
    data: ds.Dataset,
    model_cfg,
    cards,
    n_subsets: int = 5000,
    metric: str = "naupdc",
    seed: int = 0,
    test_fraction: float = 0.25,
    n_workers: int = 1,
) -> FaithfulnessReport:
    """Subset-retraining faithfulness benchmark.

    Subset sizes are uniform on [1, P-1] and members uniform without
    replacement. Each subset's model is retrained on the training split and
    scored on the held-out split; each scorecard's total importance is the
    sum of its full-model scores over the subset, min-max scaled across the
    run. Association statistics use a degree-5 polynomial and 100 bootstrap
    resamples. A failed retraining is retried with a fresh subset; more than
    1% failures aborts. Deterministic in (data, cfg, cards, seed) regardless
    of the worker count.
    """
    cards = list(cards)
    if not cards:
        raise ValueError("need at least one scorecard")
    P = data.n_features
    if P < 3:
        raise ValueError(f"need at least 3 features, got {P}")
    for card in cards:
        if set(card.feature_names) != set(data.feature_names):
            raise ValueError(
                f"scorecard '{card.method}' does not cover the dataset features"
            )
    resolve_metric(metric)
    train, test = ds.split(data, test_fraction, derive_seed(seed, 0))

    jobs = [
        (train, test, model_cfg, metric, seed, n_subsets, i)
        for i in range(n_subsets)
    ]
    if n_workers > 1:
        chunk = max(1, n_subsets // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_retrain_one, jobs, chunksize=chunk))
    else:
        results = [_retrain_one(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    n_failures = sum(r[4] for r in results)
    if n_failures > 0.01 * n_subsets:
        raise RuntimeError(
            f"{n_failures} retraining failures out of {n_subsets} subsets (>1%)"
        )

    score_maps = {
        card.method: dict(zip(card.feature_names, card.scores)) for card in cards
    }
    raw_totals = {
        card.method: np.array(
            [sum(score_maps[card.method][f] for f in members) for _, members, *_ in results]
        )
        for card in cards
    }
    scaled_totals = {m: _scale_totals(v) for m, v in raw_totals.items()}
    performances = np.array([r[3] for r in results])

    records = tuple(
        FaithfulnessRecord(
            subset=members,
            subset_size=size,
            performance=perf,
            total_importance={m: float(raw_totals[m][i]) for m in raw_totals},
            scaled_importance={m: float(scaled_totals[m][i]) for m in scaled_totals},
        )
        for i, (_, members, size, perf, _) in enumerate(results)
    )
    fit_stats = {}
    for m in scaled_totals:
        try:
            fit_stats[m] = association_stats(
                scaled_totals[m], performances, degree=5, n_boot=100,
                seed=name_seed(seed, m),
            )
        except ValueError:
            # constant totals (e.g. an all-equal-score card): stats undefined
            nan = float("nan")
            fit_stats[m] = FitStats(nan, nan, nan, nan, n_subsets)
    return FaithfulnessReport(
        metric=metric,
        n_subsets=n_subsets,
        seed=seed,
        model_config=dataclasses.asdict(model_cfg),
        fit_stats=fit_stats,
        records=records,
        n_failures=n_failures,
    )


def pareto_curve(report: FaithfulnessReport):
    """Per-size aggregation of record performance.

    Returns a list of (subset_size, mean, p10, p90) tuples in size order.
    """
    if not report.records:
        raise ValueError("report holds no records")
    by_size = {}
    for r in report.records:
        by_size.setdefault(r.subset_size, []).append(r.performance)
    out = []
    for size in sorted(by_size):
        vals = np.array(by_size[size])
        p10, p90 = np.percentile(vals, [10, 90])
        out.append((size, float(vals.mean()), float(p10), float(p90)))
    return out


def _bootstrap_delta_ci(y, p_top, p_bottom, metric_fn, n_boot, seed, level=0.95):
    rng = np.random.default_rng(seed)
    n = len(y)
    deltas = np.empty(n_boot)
    for b in range(n_boot):
        for _ in range(1000):
            idx = rng.integers(0, n, size=n)
            if 0 < y[idx].sum() < n:
                break
        deltas[b] = metric_fn(y[idx], p_top[idx]) - metric_fn(y[idx], p_bottom[idx])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(deltas, [100 * alpha, 100 * (1 - alpha)])
    return float(lo), float(hi)


def topk_bottomk(
    data: ds.Dataset,
    model_cfg,
    card: RankingScorecard,
    k: int = 15,
    metric: str = "naupdc",
    n_boot: int = 1000,
    seed: int = 0,
    test_fraction: float = 0.25,
):
    """Skill gap between models retrained on the card's top-k and bottom-k
    features, evaluated on the training split.

    Returns (delta, (ci_low, ci_high)); the confidence interval bootstraps
    the evaluation rows (N=n_boot, 95%).
    """
    P = data.n_features
    if k > P:
        raise ValueError(f"k={k} exceeds feature count {P}")
    if 2 * k > P:
        warnings.warn(
            f"2k={2 * k} exceeds {P} features; top and bottom sets overlap",
            RuntimeWarning,
        )
    metric_fn = resolve_metric(metric)
    train, _ = ds.split(data, test_fraction, derive_seed(seed, 0))
    ordered = card.top(P)
    top_names, bottom_names = ordered[:k], ordered[-k:]

    preds = {}
    for tag, (label, names) in enumerate((("top", top_names), ("bottom", bottom_names))):
        cfg = dataclasses.replace(model_cfg, seed=derive_seed(seed, 2 + tag))
        model = models.fit(ds.subset(train, names), cfg)
        preds[label] = model.predict(ds.subset(train, names).features)
    y = train.target
    delta = float(metric_fn(y, preds["top"]) - metric_fn(y, preds["bottom"]))
    ci = _bootstrap_delta_ci(
        y, preds["top"], preds["bottom"], metric_fn, n_boot, derive_seed(seed, 1)
    )
    return delta, ci


def incremental_curves(
    data: ds.Dataset,
    model_cfg,
    card: RankingScorecard,
    k_max: int = 15,
    metric: str = "naupdc",
    seed: int = 0,
    test_fraction: float = 0.25,
):
    """Retrained-model skill for growing prefixes of the best-ranked and
    worst-ranked feature orderings (evaluated on the training split).

    Returns (best_curve, worst_curve), each of length k_max.
    """
    P = data.n_features
    if k_max > P:
        raise ValueError(f"k_max={k_max} exceeds feature count {P}")
    metric_fn = resolve_metric(metric)
    train, _ = ds.split(data, test_fraction, derive_seed(seed, 0))
    ordered = card.top(P)
    best, worst = np.zeros(k_max), np.zeros(k_max)
    for k in range(1, k_max + 1):
        for curve, names in ((best, ordered[:k]), (worst, ordered[-k:])):
            cfg = dataclasses.replace(model_cfg, seed=derive_seed(seed, k))
            model = models.fit(ds.subset(train, names), cfg)
            curve[k - 1] = metric_fn(
                train.target, model.predict(ds.subset(train, names).features)
            )
    return best, worst
