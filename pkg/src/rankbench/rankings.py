"""Feature-ranking methods and rank aggregation.

Nine method families: the four permutation-importance variants (backward /
forward, single-pass / multi-pass), ALE variance, sampled Shapley relevance,
SAGE loss-based importance, LIME surrogate relevance, and the model-specific
extractors (logistic coefficients, impurity importance, tree-path
attribution). Each produces a :class:`RankingScorecard`; scorecards aggregate
into median ranks with interquartile uncertainty and the weighted
rank-uncertainty summary statistic.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import effects, models
from .dataset import Dataset
from .metrics import resolve_metric
from .util import cross_entropy, derive_seed, name_seed

__all__ = [
    "RankingScorecard",
    "AggregatedRanking",
    "permutation_importance",
    "shapley_values",
    "shapley_relevance",
    "sage_values",
    "sage_importance",
    "lime_relevance",
    "coefficient_ranking",
    "gini_ranking",
    "tree_path_ranking",
    "ale_variance_ranking",
    "aggregate",
    "rank_uncertainty",
    "uncertainty_ratio",
]


def _predict_fn(model):
    if hasattr(model, "predict"):
        return model.predict
    if callable(model):
        return model
    raise TypeError(f"model must have .predict or be callable, got {type(model)}")


def ranks_from_scores(scores) -> np.ndarray:
    """Dense ranks 1..P, highest score first; ties break by feature index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(len(scores)), -scores))
    ranks = np.empty(len(scores), dtype=np.int64)
    ranks[order] = np.arange(1, len(scores) + 1)
    return ranks


@dataclass(frozen=True)
class RankingScorecard:
    """Per-feature scores (higher = more important) and 1-based ranks."""

    method: str
    feature_names: tuple
    scores: np.ndarray
    ranks: np.ndarray
    direction: str = "importance"
    n_repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        if len(self.scores) != len(self.feature_names):
            raise ValueError("one score per feature required")
        if sorted(self.ranks) != list(range(1, len(self.feature_names) + 1)):
            raise ValueError("ranks must be a permutation of 1..P")

    @classmethod
    def from_scores(cls, method, feature_names, scores, direction="importance",
                    n_repeats=1, seed=0):
        scores = np.asarray(scores, dtype=np.float64)
        return cls(
            method=method,
            feature_names=tuple(feature_names),
            scores=scores,
            ranks=ranks_from_scores(scores),
            direction=direction,
            n_repeats=n_repeats,
            seed=seed,
        )

    def rank_of(self, name: str) -> int:
        return int(self.ranks[self.feature_names.index(name)])

    def top(self, k: int):
        order = np.argsort(self.ranks)
        return [self.feature_names[i] for i in order[:k]]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "direction": self.direction,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "features": list(self.feature_names),
            "scores": self.scores.tolist(),
            "ranks": self.ranks.tolist(),
        }

    def to_csv_rows(self):
        yield ("feature", "score", "rank")
        for name, score, rank in zip(self.feature_names, self.scores, self.ranks):
            yield (name, f"{score:.10g}", str(rank))


@dataclass(frozen=True)
class AggregatedRanking:
    """Median rank and interquartile range per feature across methods."""

    feature_names: tuple
    methods: tuple
    rank_table: np.ndarray          # methods x features
    median: np.ndarray
    iqr: np.ndarray

    def to_json(self) -> dict:
        return {
            "features": list(self.feature_names),
            "methods": list(self.methods),
            "rank_table": self.rank_table.tolist(),
            "median": self.median.tolist(),
            "iqr": self.iqr.tolist(),
        }

    def to_csv_rows(self):
        yield ("feature", "median_rank", "iqr", *self.methods)
        for j, name in enumerate(self.feature_names):
            yield (
                name,
                f"{self.median[j]:.10g}",
                f"{self.iqr[j]:.10g}",
                *(str(r) for r in self.rank_table[:, j]),
            )


def _column_permutation(root_seed, feature_name, repeat, n):
    rng = np.random.default_rng(derive_seed(name_seed(root_seed, feature_name), repeat))
    return rng.permutation(n)


def permutation_importance(
    model,
    data: Dataset,
    metric: str = "naupdc",
    direction: str = "backward",
    mode: str = "singlepass",
    n_permute: int = None,
    seed: int = 0,
) -> RankingScorecard:
    """Permutation importance in its four variants.

    backward-singlepass: skill drop when one column is shuffled (mean over
    n_permute shuffles). backward-multipass: greedily permute the most
    damaging remaining feature, keeping its shuffle frozen; rank = selection
    order. Forward variants start from every column shuffled and score or
    select features by the skill regained when a column is restored.
    Multipass runs n_permute frozen-shuffle replicates in parallel and
    averages candidate skill across them; single shuffles are keyed by
    (seed, feature name, repeat) so backward multipass and singlepass see
    identical draws in the first round.
    """
    if direction not in ("backward", "forward"):
        raise ValueError(f"direction must be backward/forward, got '{direction}'")
    if mode not in ("singlepass", "multipass"):
        raise ValueError(f"mode must be singlepass/multipass, got '{mode}'")
    metric_fn = resolve_metric(metric)
    if n_permute is None:
        n_permute = 30 if mode == "singlepass" else 10
    if n_permute < 1:
        raise ValueError("n_permute must be >= 1")
    predict = _predict_fn(model)
    X = data.features
    y = data.target
    n, P = X.shape
    names = data.feature_names
    method = f"{direction}_{mode}"

    def score(matrix):
        return metric_fn(y, predict(matrix))

    perms = {
        (j, r): _column_permutation(seed, names[j], r, n)
        for j in range(P)
        for r in range(n_permute)
    }

    if mode == "singlepass":
        if direction == "backward":
            baseline = score(X)
            scores = np.zeros(P)
            work = X.copy()
            for j in range(P):
                vals = []
                for r in range(n_permute):
                    work[:, j] = X[perms[(j, r)], j]
                    vals.append(score(work))
                work[:, j] = X[:, j]
                scores[j] = baseline - np.mean(vals)
        else:
            worlds = []
            baselines = []
            for r in range(n_permute):
                W = np.column_stack([X[perms[(j, r)], j] for j in range(P)])
                worlds.append(W)
                baselines.append(score(W))
            baseline = np.mean(baselines)
            scores = np.zeros(P)
            for j in range(P):
                vals = []
                for r, W in enumerate(worlds):
                    saved = W[:, j].copy()
                    W[:, j] = X[:, j]
                    vals.append(score(W))
                    W[:, j] = saved
                scores[j] = np.mean(vals) - baseline
        return RankingScorecard.from_scores(
            method, names, scores, direction="importance",
            n_repeats=n_permute, seed=seed,
        )

    # Multipass: n_permute replicate worlds with frozen shuffles.
    if direction == "backward":
        worlds = [X.copy() for _ in range(n_permute)]
    else:
        worlds = [
            np.column_stack([X[perms[(j, r)], j] for j in range(P)])
            for r in range(n_permute)
        ]
    remaining = list(range(P))
    scores = np.zeros(P)
    ranks = np.zeros(P, dtype=np.int64)
    for round_no in range(1, P + 1):
        round_baseline = np.mean([score(W) for W in worlds])
        best = None
        for j in remaining:
            vals = []
            for r, W in enumerate(worlds):
                saved = W[:, j].copy()
                W[:, j] = X[perms[(j, r)], j] if direction == "backward" else X[:, j]
                vals.append(score(W))
                W[:, j] = saved
            candidate = np.mean(vals)
            gain = round_baseline - candidate if direction == "backward" else candidate - round_baseline
            if best is None or gain > best[0]:
                best = (gain, j, candidate)
    # ties resolve to the lowest feature index (iteration order + strict >)
        gain, j_star, _ = best
        scores[j_star] = gain
        ranks[j_star] = round_no
        for r, W in enumerate(worlds):
            W[:, j_star] = X[perms[(j_star, r)], j_star] if direction == "backward" else X[:, j_star]
        remaining.remove(j_star)
    return RankingScorecard(
        method=method,
        feature_names=names,
        scores=scores,
        ranks=ranks,
        direction="importance",
        n_repeats=n_permute,
        seed=seed,
    )


def _reveal_order_ranks(rng, n_samples, P):
    """Ranks[s, j] = position of feature j in the s-th random ordering."""
    orderings = np.argsort(rng.random((n_samples, P)), axis=1)
    ranks = np.empty_like(orderings)
    rows = np.arange(n_samples)[:, None]
    ranks[rows, orderings] = np.arange(P)[None, :]
    return orderings, ranks


def shapley_values(model, X_explain, background, n_samples: int, seed: int):
    """Per-instance interventional Shapley values by ordering sampling.

    Absent features are imputed from one randomly drawn background row per
    ordering sample. Returns (values, background_mean_prediction); values
    sum per instance to prediction - background mean, in expectation.
    """
    predict = _predict_fn(model)
    X_explain = np.asarray(X_explain, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if background.shape[0] == 0:
        raise ValueError("background set is empty")
    n_inst, P = X_explain.shape
    rng = np.random.default_rng(seed)
    orderings, ranks = _reveal_order_ranks(rng, n_samples, P)
    bg_rows = background[rng.integers(0, background.shape[0], size=n_samples)]

    phi = np.zeros((n_inst, P))
    base = bg_rows[None, :, :]                      # 1 x samples x P
    inst = X_explain[:, None, :]                    # inst x 1 x P
    prev = None
    onehots = [
        (orderings[:, k][None, :] == np.arange(P)[:, None]).astype(np.float64).T
        for k in range(P)
    ]
    for k in range(P + 1):
        revealed = ranks[None, :, :] < k            # 1 x samples x P
        Z = np.where(revealed, inst, base)
        preds = np.asarray(predict(Z.reshape(-1, P))).reshape(n_inst, n_samples)
        if k > 0:
            phi += (preds - prev) @ onehots[k - 1]
        prev = preds
    mean_bg = float(np.asarray(predict(background)).mean())
    return phi / n_samples, mean_bg


def shapley_relevance(
    model,
    data: Dataset,
    n_samples: int = 64,
    seed: int = 0,
    background_size: int = 100,
    n_explain: int = None,
) -> RankingScorecard:
    """Global Shapley relevance: mean absolute per-instance Shapley value."""
    rng = np.random.default_rng(derive_seed(seed, 0))
    n = data.n_rows
    bg_idx = rng.choice(n, size=min(background_size, n), replace=False)
    if n_explain is not None and n_explain < n:
        explain_idx = rng.choice(n, size=n_explain, replace=False)
    else:
        explain_idx = np.arange(n)
    phi, _ = shapley_values(
        model,
        data.features[explain_idx],
        data.features[bg_idx],
        n_samples=n_samples,
        seed=derive_seed(seed, 1),
    )
    return RankingScorecard.from_scores(
        "shapley", data.feature_names, np.abs(phi).mean(axis=0),
        direction="relevance", n_repeats=n_samples, seed=seed,
    )


LOSSES = {"cross_entropy": cross_entropy}


def sage_values(model, data: Dataset, loss: str, n_samples: int, seed: int,
                background_size: int = 100):
    """Per-feature expected loss reduction when the feature is revealed.

    Coalitions impute hidden features from the whole background sample and
    score the loss of the averaged prediction. Returns (values,
    mean_total_reduction): values sum to the mean loss gap between the
    all-hidden baseline and the full model over the sampled instances.
    """
    try:
        loss_fn = LOSSES[loss]
    except KeyError:
        raise ValueError(f"unknown loss '{loss}'; valid losses: {sorted(LOSSES)}") from None
    predict = _predict_fn(model)
    X = data.features
    y = data.target.astype(np.float64)
    n, P = X.shape
    rng = np.random.default_rng(seed)
    bg = X[rng.choice(n, size=min(background_size, n), replace=False)]
    m = bg.shape[0]
    inst_idx = rng.integers(0, n, size=n_samples)
    orderings, ranks = _reveal_order_ranks(rng, n_samples, P)

    inst = X[inst_idx][:, None, :]                  # samples x 1 x P
    base = bg[None, :, :]                           # 1 x m x P
    y_s = y[inst_idx]
    phi = np.zeros(P)
    prev_loss = None
    total = 0.0
    for k in range(P + 1):
        revealed = ranks[:, None, :] < k            # samples x 1 x P
        Z = np.where(revealed, inst, base)
        preds = np.asarray(predict(Z.reshape(-1, P))).reshape(n_samples, m)
        cur_loss = loss_fn(y_s, preds.mean(axis=1))
        if k == 0:
            first_loss = cur_loss
        else:
            delta = prev_loss - cur_loss
            onehot = (orderings[:, k - 1][:, None] == np.arange(P)[None, :])
            phi += delta @ onehot
        prev_loss = cur_loss
    total = float(np.mean(first_loss - prev_loss))
    return phi / n_samples, total


def sage_importance(
    model,
    data: Dataset,
    loss: str = "cross_entropy",
    n_samples: int = 128,
    seed: int = 0,
    background_size: int = 100,
) -> RankingScorecard:
    """Loss-based Shapley importance (global)."""
    phi, _ = sage_values(model, data, loss, n_samples, seed, background_size)
    return RankingScorecard.from_scores(
        "sage", data.feature_names, phi,
        direction="importance", n_repeats=n_samples, seed=seed,
    )


def lime_relevance(
    model,
    data: Dataset,
    n_perturb: int = 1000,
    kernel_width: float = None,
    seed: int = 0,
    n_explain: int = 100,
    ridge: float = 1e-6,
) -> RankingScorecard:
    """Local linear surrogates on Gaussian perturbations, aggregated as the
    mean absolute surrogate coefficient across explained instances.

    Perturbations use 0.5x the per-feature stdev; weights decay with the
    standardized Euclidean distance and exp(-d^2 / kernel_width^2); the
    default kernel width is 0.75 * sqrt(P).
    """
    predict = _predict_fn(model)
    X = data.features
    n, P = X.shape
    if kernel_width is None:
        kernel_width = 0.75 * np.sqrt(P)
    stds = X.std(axis=0)
    stds_safe = np.where(stds > 0, stds, 1.0)
    rng = np.random.default_rng(seed)
    if n_explain is not None and n_explain < n:
        explain_idx = rng.choice(n, size=n_explain, replace=False)
    else:
        explain_idx = np.arange(n)

    coefs = np.zeros((len(explain_idx), P))
    for row, i in enumerate(explain_idx):
        x = X[i]
        Z = x + rng.standard_normal((n_perturb, P)) * (0.5 * stds)
        preds = np.asarray(predict(Z), dtype=np.float64)
        d2 = (((Z - x) / stds_safe) ** 2).sum(axis=1)
        w = np.exp(-d2 / kernel_width ** 2)
        design = np.column_stack([np.ones(n_perturb), Z - x])
        wd = design * w[:, None]
        A = design.T @ wd
        A[1:, 1:] += ridge * np.eye(P)
        try:
            solved = np.linalg.solve(A, wd.T @ preds)
        except np.linalg.LinAlgError:
            raise ValueError(
                "singular LIME surrogate system despite ridge regularization"
            ) from None
        coefs[row] = solved[1:]
    return RankingScorecard.from_scores(
        "lime", data.feature_names, np.abs(coefs).mean(axis=0),
        direction="relevance", n_repeats=n_perturb, seed=seed,
    )


def coefficient_ranking(model: models.Predictor) -> RankingScorecard:
    """Rank by the magnitude of the standardized logistic coefficients."""
    return RankingScorecard.from_scores(
        "coefficients",
        model.feature_names,
        np.abs(models.coefficients(model)),
        direction="relevance",
    )


def gini_ranking(model: models.Predictor) -> RankingScorecard:
    """Rank by normalized impurity decrease across the forest."""
    return RankingScorecard.from_scores(
        "gini",
        model.feature_names,
        models.gini_importance(model),
        direction="importance",
    )


def tree_path_ranking(model: models.Predictor, data: Dataset) -> RankingScorecard:
    """Rank by the mean absolute root-to-leaf attribution per feature."""
    contrib, _ = models.tree_path_attribution(model, data.features)
    return RankingScorecard.from_scores(
        "tree_path",
        model.feature_names,
        np.abs(contrib).mean(axis=0),
        direction="relevance",
    )


def ale_variance_ranking(model, data: Dataset, n_bins: int = 30) -> RankingScorecard:
    """Rank by the variance of each first-order effect curve."""
    return RankingScorecard.from_scores(
        "ale_variance",
        data.feature_names,
        effects.ale_variance_scores(model, data, n_bins),
        direction="relevance",
    )


def aggregate(cards) -> AggregatedRanking:
    """Median and interquartile range of ranks across methods."""
    cards = list(cards)
    if len(cards) < 2:
        raise ValueError("need at least 2 scorecards to aggregate")
    names = cards[0].feature_names
    table = np.zeros((len(cards), len(names)), dtype=np.int64)
    for i, card in enumerate(cards):
        if set(card.feature_names) != set(names):
            raise ValueError(
                f"scorecard '{card.method}' covers a different feature set"
            )
        for j, name in enumerate(names):
            table[i, j] = card.rank_of(name)
    q25, q50, q75 = np.percentile(table, [25, 50, 75], axis=0)
    return AggregatedRanking(
        feature_names=names,
        methods=tuple(c.method for c in cards),
        rank_table=table,
        median=q50,
        iqr=q75 - q25,
    )


def rank_uncertainty(agg: AggregatedRanking, top_k: int = 10) -> float:
    """Weighted rank-uncertainty: sum of IQR/median over the top_k features
    by median rank, divided by the sum of those medians. 0 = all methods
    agree on the top features."""
    P = len(agg.feature_names)
    if top_k > P:
        raise ValueError(f"top_k={top_k} exceeds feature count {P}")
    order = np.lexsort((np.arange(P), agg.median))[:top_k]
    medians = agg.median[order]
    iqrs = agg.iqr[order]
    if np.any(medians <= 0):
        raise ValueError("median ranks must be positive")
    return float(np.sum(iqrs / medians) / np.sum(medians))


def uncertainty_ratio(cards, faithful_top3, top_k: int = 10) -> float:
    """Rank uncertainty of the three named methods relative to the mean over
    every 3-method combination. Below 1 means the named trio agrees more
    than a typical trio."""
    cards = list(cards)
    by_method = {c.method: c for c in cards}
    if len(cards) < 4:
        raise ValueError("need at least 4 scorecards")
    faithful_top3 = list(faithful_top3)
    if len(faithful_top3) != 3 or len(set(faithful_top3)) != 3:
        raise ValueError("faithful_top3 must name 3 distinct methods")
    missing = [m for m in faithful_top3 if m not in by_method]
    if missing:
        raise ValueError(f"methods not among scorecards: {missing}")
    numerator = rank_uncertainty(
        aggregate([by_method[m] for m in faithful_top3]), top_k
    )
    sigmas = [
        rank_uncertainty(aggregate(list(combo)), top_k)
        for combo in itertools.combinations(cards, 3)
    ]
    denominator = float(np.mean(sigmas))
    if denominator == 0.0:
        raise ValueError(
            "all 3-method combinations have zero rank uncertainty; ratio undefined"
        )
    return numerator / denominator
