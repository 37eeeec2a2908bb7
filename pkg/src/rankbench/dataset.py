"""Tabular binary-classification datasets: ingestion, splitting, resampling,
correlation summaries, and synthetic generation with planted ground truth.

A :class:`Dataset` is immutable after construction and safe to share across
threads or processes. Every randomized operation takes an explicit seed;
callers running tasks in parallel should derive per-task seeds with
:func:`rankbench.util.derive_seed`.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .util import derive_seed, sigmoid

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "CorrelationSummary",
    "load_csv",
    "split",
    "bootstrap",
    "correlation_summary",
    "generate",
    "subset",
    "pareto_weights",
    "derive_seed",
]

_BOOTSTRAP_MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with a binary target.

    Invariants enforced at construction: matching row counts (>= 2), unique
    feature names matching the column count, all-finite features, and a
    target containing both classes.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.asarray(self.target)
        names = tuple(str(n) for n in self.feature_names)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got ndim={X.ndim}")
        n, p = X.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if y.shape != (n,):
            raise ValueError(f"target length {y.shape} does not match {n} rows")
        if len(names) != p:
            raise ValueError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != p:
            dupes = sorted({m for m in names if names.count(m) > 1})
            raise ValueError(f"duplicate feature names: {dupes}")
        if not np.isfinite(X).all():
            bad = np.argwhere(~np.isfinite(X))[0]
            raise ValueError(
                f"non-finite value in feature '{names[bad[1]]}' at row {bad[0]}"
            )
        vals = np.unique(y)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError(f"target values must be 0/1, got {vals[:5]}")
        if len(vals) < 2:
            raise ValueError("target is constant; need both classes present")
        y = y.astype(np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def base_rate(self) -> float:
        return float(self.target.mean())

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.feature_names.index(name)]

    def take_rows(self, idx) -> "Dataset":
        """Row selection that bypasses no class-presence checks."""
        return Dataset(self.features[idx], self.target[idx], self.feature_names)


class CorrelationSummary(NamedTuple):
    matrix: np.ndarray
    avg_feature_corr: float
    avg_target_corr: float


def load_csv(path, target_column: str) -> Dataset:
    """Read a UTF-8 CSV with a header row into a Dataset.

    All non-target columns must be numeric; the target column must hold only
    0/1. Errors name the offending row (1-based, counting the header) and
    column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise ValueError(f"{path}: duplicate header names {dupes}")
        if target_column not in header:
            raise ValueError(
                f"{path}: target column '{target_column}' not in header {header}"
            )
        t_idx = header.index(target_column)
        feature_names = [h for i, h in enumerate(header) if i != t_idx]

        rows, targets = [], []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(record)} cells, expected {len(header)}"
                )
            parsed = []
            for col, cell in zip(header, record):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell at row {lineno}, column '{col}': {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ValueError(
                        f"{path}: non-finite value at row {lineno}, column '{col}'"
                    )
                parsed.append(value)
            target_value = parsed.pop(t_idx)
            if target_value not in (0.0, 1.0):
                raise ValueError(
                    f"{path}: target column '{target_column}' must be 0/1, "
                    f"got {target_value} at row {lineno}"
                )
            rows.append(parsed)
            targets.append(int(target_value))

    if not rows:
        raise ValueError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    y = np.array(targets, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError(f"{path}: target column '{target_column}' is constant")
    return Dataset(X, y, tuple(feature_names))


def split(dataset: Dataset, test_fraction: float, seed: int):
    """Stratified train/test split. Returns (train, test).

    Per-class test counts are rounded so each split's base rate matches the
    parent's within one example per class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    y = dataset.target
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    n_test_pos = int(round(len(pos) * test_fraction))
    n_test_neg = int(round(len(neg) * test_fraction))
    counts = {
        "test positives": n_test_pos,
        "test negatives": n_test_neg,
        "train positives": len(pos) - n_test_pos,
        "train negatives": len(neg) - n_test_neg,
    }
    for label, count in counts.items():
        if count < 1:
            raise ValueError(
                f"test_fraction={test_fraction} leaves no {label} "
                f"({len(pos)} positives / {len(neg)} negatives total)"
            )
    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    test_idx = np.sort(np.concatenate([pos[:n_test_pos], neg[:n_test_neg]]))
    train_idx = np.sort(np.concatenate([pos[n_test_pos:], neg[n_test_neg:]]))
    if len(train_idx) < 2 or len(test_idx) < 2:
        raise ValueError(
            f"test_fraction={test_fraction} leaves a split with fewer than 2 rows"
        )
    return dataset.take_rows(train_idx), dataset.take_rows(test_idx)


def bootstrap(dataset: Dataset, seed: int) -> Dataset:
    """Resample rows with replacement, redrawing until both classes appear.

    The redraw loop is capped at 1000 attempts, after which an error is
    raised (only reachable for extremely rare-event targets at tiny n).
    """
    rng = np.random.default_rng(seed)
    n = dataset.n_rows
    for _ in range(_BOOTSTRAP_MAX_ATTEMPTS):
        idx = rng.integers(0, n, size=n)
        picked = dataset.target[idx]
        if picked.min() != picked.max():
            return dataset.take_rows(idx)
    raise RuntimeError(
        f"bootstrap failed to draw both classes in {_BOOTSTRAP_MAX_ATTEMPTS} attempts"
    )


def correlation_summary(dataset: Dataset) -> CorrelationSummary:
    """Pearson correlation matrix plus the mean absolute off-diagonal
    feature correlation and mean absolute feature-target correlation."""
    X = dataset.features
    stds = X.std(axis=0)
    for j, s in enumerate(stds):
        if s == 0.0:
            raise ValueError(
                f"feature '{dataset.feature_names[j]}' is constant; "
                "correlations are undefined"
            )
    matrix = np.corrcoef(X, rowvar=False)
    matrix = np.atleast_2d(matrix)
    matrix = (matrix + matrix.T) / 2.0
    np.fill_diagonal(matrix, 1.0)
    p = matrix.shape[0]
    if p > 1:
        iu = np.triu_indices(p, k=1)
        avg_feature = float(np.abs(matrix[iu]).mean())
    else:
        avg_feature = 0.0
    y = dataset.target.astype(np.float64)
    yc = y - y.mean()
    denom = np.sqrt((yc ** 2).sum()) * stds * np.sqrt(X.shape[0])
    target_corr = (X - X.mean(axis=0)).T @ yc / denom
    avg_target = float(np.abs(target_corr).mean())
    return CorrelationSummary(matrix, avg_feature, avg_target)


def pareto_weights(n_signal: int, first: float = 4.0, ratio: float = 0.5):
    """Geometrically decaying coefficient ladder (first, first*ratio, ...)."""
    if n_signal < 1:
        raise ValueError("n_signal must be >= 1")
    return tuple(first * ratio ** k for k in range(n_signal))


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset with known per-feature log-odds weights.

    Features are multivariate normal with unit variances; correlation_blocks
    plant equicorrelated groups; interaction_pairs add x_i * x_j terms to the
    log-odds so the planted signal is not purely additive. ``bias`` shifts
    the intercept to control the base rate.
    """

    n_features: int
    n_samples: int
    signal_weights: tuple
    noise_features: int = 0
    correlation_blocks: tuple = ()
    interaction_pairs: tuple = ()
    bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "signal_weights", tuple(float(w) for w in self.signal_weights))
        blocks = tuple(
            (tuple(int(i) for i in idx), float(rho))
            for idx, rho in self.correlation_blocks
        )
        object.__setattr__(self, "correlation_blocks", blocks)
        pairs = tuple(
            (int(i), int(j), float(s)) for i, j, s in self.interaction_pairs
        )
        object.__setattr__(self, "interaction_pairs", pairs)
        if self.n_features < 1 or self.n_samples < 2:
            raise ValueError("need n_features >= 1 and n_samples >= 2")
        if len(self.signal_weights) + self.noise_features != self.n_features:
            raise ValueError(
                f"{len(self.signal_weights)} signal weights + {self.noise_features} "
                f"noise features != n_features={self.n_features}"
            )
        seen = set()
        for idx, rho in blocks:
            if not -1.0 < rho < 1.0:
                raise ValueError(f"block correlation {rho} outside (-1, 1)")
            if len(idx) < 2:
                raise ValueError(f"correlation block {idx} needs >= 2 features")
            for i in idx:
                if not 0 <= i < self.n_features:
                    raise ValueError(f"block index {i} out of range")
                if i in seen:
                    raise ValueError(f"feature index {i} appears in two blocks")
                seen.add(i)
        for i, j, _ in pairs:
            if not (0 <= i < self.n_features and 0 <= j < self.n_features):
                raise ValueError(f"interaction pair ({i}, {j}) out of range")

    def true_weights(self) -> np.ndarray:
        """Planted log-odds coefficients, zero for noise features."""
        w = np.zeros(self.n_features)
        w[: len(self.signal_weights)] = self.signal_weights
        return w

    def feature_names(self) -> tuple:
        return tuple(f"x{k + 1}" for k in range(self.n_features))

    def correlation_matrix(self) -> np.ndarray:
        corr = np.eye(self.n_features)
        for idx, rho in self.correlation_blocks:
            for a in idx:
                for b in idx:
                    if a != b:
                        corr[a, b] = rho
        return corr

    def logits(self, X: np.ndarray) -> np.ndarray:
        z = X @ self.true_weights() + self.bias
        for i, j, strength in self.interaction_pairs:
            z = z + strength * X[:, i] * X[:, j]
        return z


def generate(spec: SyntheticSpec) -> Dataset:
    """Draw a Dataset from a SyntheticSpec.

    Target labels are Bernoulli in the sigmoid of the planted logit, redrawn
    (features kept) until both classes appear. The ground-truth weights stay
    available through ``spec.true_weights()`` for test oracles.
    """
    rng = np.random.default_rng(spec.seed)
    corr = spec.correlation_matrix()
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise ValueError(
            "correlation_blocks produce a non-positive-definite matrix"
        ) from None
    X = rng.standard_normal((spec.n_samples, spec.n_features)) @ chol.T
    probs = sigmoid(spec.logits(X))
    for _ in range(_BOOTSTRAP_MAX_ATTEMPTS):
        y = (rng.random(spec.n_samples) < probs).astype(np.int64)
        if 0 < y.sum() < spec.n_samples:
            return Dataset(X, y, spec.feature_names())
    raise RuntimeError(
        "failed to draw a two-class target; adjust bias or signal_weights"
    )


def subset(dataset: Dataset, names: Sequence[str]) -> Dataset:
    """Project onto the named columns, in the given order. Target unchanged."""
    names = list(names)
    if not names:
        raise ValueError("names must be nonempty")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate names in subset: {dupes}")
    unknown = [n for n in names if n not in dataset.feature_names]
    if unknown:
        raise ValueError(f"unknown feature names: {unknown}")
    cols = [dataset.feature_names.index(n) for n in names]
    return Dataset(dataset.features[:, cols], dataset.target, tuple(names))
