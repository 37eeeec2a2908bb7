"""Trainable classifiers: elastic-net logistic regression (coordinate descent
with soft-thresholding) and a random forest grown on entropy information gain.

Both expose probability prediction through a shared :class:`Predictor`
handle, plus the model-specific score extractors (standardized coefficients,
impurity importance, tree-path attribution) used by the ranking methods.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .util import derive_seed, sigmoid

__all__ = [
    "LogRegConfig",
    "ForestConfig",
    "Predictor",
    "fit",
    "fit_logreg",
    "fit_forest",
    "predict",
    "coefficients",
    "gini_importance",
    "tree_path_attribution",
    "elastic_net_objective",
    "predictor_to_json",
    "predictor_from_json",
]


@dataclass(frozen=True)
class LogRegConfig:
    """Elastic-net logistic regression hyperparameters.

    The penalty follows the inverse-strength convention:
    loss = (1/n) sum logloss + (1/C) * [l1_ratio*||b||_1 + (1-l1_ratio)/2*||b||_2^2].
    """

    C: float = 0.1
    l1_ratio: float = 0.0001
    max_iter: int = 1000
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError(f"l1_ratio must be in [0, 1], got {self.l1_ratio}")
        if self.max_iter < 1 or self.tol <= 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")


@dataclass(frozen=True)
class ForestConfig:
    """Random-forest hyperparameters (defaults follow the road-surface setup)."""

    n_trees: int = 500
    max_depth: int = 20
    max_features: int = 5
    min_samples_leaf: int = 5
    min_samples_split: int = 8
    criterion: str = "entropy"
    class_weight: str = "balanced"
    seed: int = 0

    def __post_init__(self):
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.n_trees < 1 or self.max_depth < 1 or self.max_features < 1:
            raise ValueError("n_trees, max_depth, max_features must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.criterion != "entropy":
            raise ValueError(f"unsupported criterion '{self.criterion}'")
        if self.class_weight not in ("balanced", "none"):
            raise ValueError(f"class_weight must be 'balanced' or 'none'")


@dataclass
class _Tree:
    """Flat-array binary tree. feature == -1 marks a leaf; value is the
    weighted class-1 frequency at the node."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    impurity: np.ndarray

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.flatnonzero(feat >= 0)
            if active.size == 0:
                return node
            cur = node[active]
            goes_left = X[active, feat[active]] <= self.threshold[cur]
            node[active] = np.where(goes_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.leaf_index(X)]


@dataclass(frozen=True)
class Predictor:
    """Fitted model handle. Immutable; predict is a pure function of X."""

    kind: str
    feature_names: tuple
    coef: np.ndarray = None
    intercept: float = 0.0
    mean: np.ndarray = None
    std: np.ndarray = None
    converged: bool = True
    n_iter: int = 0
    trees: tuple = ()

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


def _as_matrix(p: Predictor, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(p.feature_names):
        raise ValueError(
            f"expected {len(p.feature_names)} columns per feature_names, "
            f"got {X.shape[1]}"
        )
    return X


def predict(p: Predictor, X) -> np.ndarray:
    """Class-1 probability for each row of X."""
    X = _as_matrix(p, X)
    if p.kind == "logreg":
        z = (X - p.mean) / p.std @ p.coef + p.intercept
        return sigmoid(z)
    out = np.zeros(X.shape[0])
    for tree in p.trees:
        out += tree.predict(X)
    return out / len(p.trees)


def elastic_net_objective(Xs, y, coef, intercept, C, l1_ratio) -> float:
    """Penalized mean log-loss on standardized features (intercept unpenalized)."""
    z = Xs @ coef + intercept
    # log(1 + exp(-m)) computed stably via logaddexp.
    margins = np.where(y == 1, z, -z)
    loss = np.logaddexp(0.0, -margins).mean()
    penalty = (l1_ratio * np.abs(coef).sum() + 0.5 * (1 - l1_ratio) * coef @ coef) / C
    return float(loss + penalty)


def _soft_threshold(v, t):
    return np.sign(v) * max(abs(v) - t, 0.0)


def fit_logreg(train: Dataset, cfg: LogRegConfig) -> Predictor:
    """Fit elastic-net logistic regression by cyclic coordinate descent.

    Features are standardized internally; coefficients are reported in
    standardized space. Each coordinate update minimizes a separable
    quadratic upper bound of the log-loss (curvature 1/4 per sample) with
    soft-thresholding for the L1 part, so the objective decreases
    monotonically. Convergence: max coefficient change below cfg.tol.
    """
    X = train.features
    y = train.target.astype(np.float64)
    n, P = X.shape
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    active = sd > 0
    sd_safe = np.where(active, sd, 1.0)
    Xs = (X - mu) / sd_safe

    l1 = cfg.l1_ratio / cfg.C
    l2 = (1.0 - cfg.l1_ratio) / cfg.C
    col_sq = (Xs ** 2).mean(axis=0)

    beta = np.zeros(P)
    base = train.base_rate
    b = float(np.log(base / (1.0 - base)))
    eta = np.full(n, b)
    prob = sigmoid(eta)

    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iter + 1):
        max_delta = 0.0
        for j in range(P):
            if not active[j]:
                continue
            xj = Xs[:, j]
            grad = xj @ (y - prob) / n
            num = grad + 0.25 * col_sq[j] * beta[j]
            new = _soft_threshold(num, l1) / (0.25 * col_sq[j] + l2)
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                eta += delta * xj
                prob = sigmoid(eta)
                max_delta = max(max_delta, abs(delta))
        db = 4.0 * float(np.mean(y - prob))
        if db != 0.0:
            b += db
            eta += db
            prob = sigmoid(eta)
            max_delta = max(max_delta, abs(db))
        if max_delta < cfg.tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"logistic regression did not converge in {cfg.max_iter} sweeps "
            f"(last max coefficient change above {cfg.tol})",
            RuntimeWarning,
        )
    return Predictor(
        kind="logreg",
        feature_names=train.feature_names,
        coef=beta,
        intercept=b,
        mean=mu,
        std=sd_safe,
        converged=converged,
        n_iter=sweeps,
    )


def fit(train: Dataset, cfg) -> Predictor:
    """Dispatch on the config type: LogRegConfig or ForestConfig."""
    if isinstance(cfg, LogRegConfig):
        return fit_logreg(train, cfg)
    if isinstance(cfg, ForestConfig):
        return fit_forest(train, cfg)
    raise TypeError(f"unsupported model config type {type(cfg).__name__}")


def coefficients(p: Predictor) -> np.ndarray:
    """Standardized-space coefficients, one per feature, intercept excluded."""
    if p.kind != "logreg":
        raise ValueError(f"coefficients requires a logreg predictor, got '{p.kind}'")
    return p.coef.copy()


def _entropy(w_pos, w_neg):
    total = w_pos + w_neg
    h = np.zeros_like(np.asarray(total, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        for w in (w_pos, w_neg):
            q = np.where(total > 0, w / np.where(total > 0, total, 1.0), 0.0)
            h = h - np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return h


def _best_split(x, y, w, min_leaf):
    """Best midpoint threshold for one feature by weighted information gain.

    Returns (gain, threshold) or None. Ties between equal-gain thresholds
    resolve to the lowest threshold (first maximum in ascending order).
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    ws = w[order]
    n = len(xs)
    cut = np.flatnonzero(xs[1:] > xs[:-1]) + 1   # split positions between distinct values
    if cut.size == 0:
        return None
    cut = cut[(cut >= min_leaf) & (cut <= n - min_leaf)]
    if cut.size == 0:
        return None
    wpos = np.concatenate([[0.0], np.cumsum(ws * ys)])
    wall = np.concatenate([[0.0], np.cumsum(ws)])
    lp, lw = wpos[cut], wall[cut]
    rp, rw = wpos[-1] - lp, wall[-1] - lw
    total = wall[-1]
    parent = _entropy(wpos[-1], total - wpos[-1])
    child = (lw / total) * _entropy(lp, lw - lp) + (rw / total) * _entropy(rp, rw - rp)
    gains = parent - child
    k = int(np.argmax(gains))
    threshold = 0.5 * (xs[cut[k] - 1] + xs[cut[k]])
    return float(gains[k]), threshold


class _TreeBuilder:
    def __init__(self, X, y, w, cfg, rng):
        self.X, self.y, self.w, self.cfg, self.rng = X, y, w, cfg, rng
        self.feature, self.threshold = [], []
        self.left, self.right = [], []
        self.value, self.weight, self.impurity = [], [], []

    def _add_node(self, idx):
        wsum = self.w[idx].sum()
        wpos = (self.w[idx] * self.y[idx]).sum()
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(wpos / wsum)
        self.weight.append(wsum)
        self.impurity.append(float(_entropy(wpos, wsum - wpos)))
        return node

    def build(self, idx, depth):
        node = self._add_node(idx)
        y_node = self.y[idx]
        if (
            depth >= self.cfg.max_depth
            or len(idx) < self.cfg.min_samples_split
            or y_node.min() == y_node.max()
        ):
            return node
        P = self.X.shape[1]
        k = min(self.cfg.max_features, P)
        candidates = np.sort(self.rng.choice(P, size=k, replace=False))
        best = None
        for j in candidates:
            found = _best_split(
                self.X[idx, j], y_node, self.w[idx], self.cfg.min_samples_leaf
            )
            if found is None:
                continue
            gain, threshold = found
            if gain <= 0.0:
                continue
            if best is None or gain > best[0]:
                best = (gain, j, threshold)
        if best is None:
            return node
        _, j, threshold = best
        goes_left = self.X[idx, j] <= threshold
        self.feature[node] = int(j)
        self.threshold[node] = threshold
        self.left[node] = self.build(idx[goes_left], depth + 1)
        self.right[node] = self.build(idx[~goes_left], depth + 1)
        return node

    def finish(self) -> _Tree:
        return _Tree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
            weight=np.array(self.weight, dtype=np.float64),
            impurity=np.array(self.impurity, dtype=np.float64),
        )


def fit_forest(train: Dataset, cfg: ForestConfig) -> Predictor:
    """Grow cfg.n_trees trees on bootstrap resamples of the training rows.

    Splits maximize entropy information gain over max_features randomly drawn
    candidate features, with midpoint thresholds and deterministic
    tie-breaking (lowest feature index, then lowest threshold). Balanced
    class weights scale samples inversely to training class frequency.
    """
    X = train.features
    y = train.target
    n, P = X.shape
    if cfg.max_features > P:
        raise ValueError(
            f"max_features={cfg.max_features} exceeds feature count {P}"
        )
    if cfg.class_weight == "balanced":
        counts = np.bincount(y, minlength=2)
        class_w = n / (2.0 * counts)
    else:
        class_w = np.ones(2)
    sample_w = class_w[y]

    trees = []
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(derive_seed(cfg.seed, t))
        rows = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X, y, sample_w, cfg, rng)
        builder.build(rows, depth=0)
        trees.append(builder.finish())
    return Predictor(kind="forest", feature_names=train.feature_names, trees=tuple(trees))


def gini_importance(p: Predictor) -> np.ndarray:
    """Mean decrease in impurity per feature, normalized to sum to 1.

    Each split contributes its weighted impurity decrease to the split
    feature; per-tree totals are normalized before averaging across trees.
    """
    if p.kind != "forest":
        raise ValueError(f"gini_importance requires a forest, got '{p.kind}'")
    P = len(p.feature_names)
    acc = np.zeros(P)
    for tree in p.trees:
        imp = np.zeros(P)
        internal = np.flatnonzero(tree.feature >= 0)
        for node in internal:
            l, r = tree.left[node], tree.right[node]
            decrease = (
                tree.weight[node] * tree.impurity[node]
                - tree.weight[l] * tree.impurity[l]
                - tree.weight[r] * tree.impurity[r]
            ) / tree.weight[0]
            imp[tree.feature[node]] += decrease
        total = imp.sum()
        if total > 0:
            acc += imp / total
    grand = acc.sum()
    return acc / grand if grand > 0 else acc


def tree_path_attribution(p: Predictor, X):
    """Per-row feature contributions from root-to-leaf value changes.

    Returns (contributions, bias) with bias the tree-averaged root value;
    bias + contributions.sum(axis=1) equals predict(p, X) exactly.
    """
    if p.kind != "forest":
        raise ValueError(f"tree_path_attribution requires a forest, got '{p.kind}'")
    X = _as_matrix(p, X)
    n, P = X.shape[0], len(p.feature_names)
    contrib = np.zeros((n, P))
    bias = 0.0
    for tree in p.trees:
        bias += tree.value[0]
        node = np.zeros(n, dtype=np.int64)
        while True:
            feat = tree.feature[node]
            active = np.flatnonzero(feat >= 0)
            if active.size == 0:
                break
            cur = node[active]
            goes_left = X[active, feat[active]] <= tree.threshold[cur]
            child = np.where(goes_left, tree.left[cur], tree.right[cur])
            np.add.at(
                contrib,
                (active, feat[active]),
                tree.value[child] - tree.value[cur],
            )
            node[active] = child
    n_trees = len(p.trees)
    return contrib / n_trees, np.full(n, bias / n_trees)


def predictor_to_json(p: Predictor) -> dict:
    """Round-trip-exact JSON document for a fitted Predictor."""
    doc = {"kind": p.kind, "feature_names": list(p.feature_names)}
    if p.kind == "logreg":
        doc.update(
            coef=p.coef.tolist(),
            intercept=p.intercept,
            mean=p.mean.tolist(),
            std=p.std.tolist(),
            converged=p.converged,
            n_iter=p.n_iter,
        )
    else:
        doc["trees"] = [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
                "weight": t.weight.tolist(),
                "impurity": t.impurity.tolist(),
            }
            for t in p.trees
        ]
    return doc


def predictor_from_json(doc: dict) -> Predictor:
    names = tuple(doc["feature_names"])
    if doc["kind"] == "logreg":
        return Predictor(
            kind="logreg",
            feature_names=names,
            coef=np.array(doc["coef"], dtype=np.float64),
            intercept=float(doc["intercept"]),
            mean=np.array(doc["mean"], dtype=np.float64),
            std=np.array(doc["std"], dtype=np.float64),
            converged=bool(doc["converged"]),
            n_iter=int(doc["n_iter"]),
        )
    trees = tuple(
        _Tree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            value=np.array(t["value"], dtype=np.float64),
            weight=np.array(t["weight"], dtype=np.float64),
            impurity=np.array(t["impurity"], dtype=np.float64),
        )
        for t in doc["trees"]
    )
    return Predictor(kind="forest", feature_names=names, trees=trees)
