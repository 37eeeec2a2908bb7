"""Dimensionality reduction: correlation screening support, L1-based feature
selection, and before/after model comparison reports."""

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import effects, models
from .metrics import METRICS
from .util import derive_seed

__all__ = [
    "SelectionReport",
    "l1_select",
    "manual_filter",
    "correlated_pairs",
    "compare_models",
]


@dataclass(frozen=True)
class SelectionReport:
    """Before/after record of a feature-reduction step."""

    retained: tuple
    dropped_manual: tuple
    dropped_l1: tuple
    C: float
    cutoff: float
    metrics_full: dict              # metric -> bootstrap mean on the test split
    metrics_reduced: dict
    metric_delta_ci: dict           # metric -> 95% CI of (full - reduced)
    complexity_full: effects.ComplexityReport
    complexity_reduced: effects.ComplexityReport
    n_boot: int

    def to_json(self) -> dict:
        return {
            "retained": list(self.retained),
            "dropped_manual": list(self.dropped_manual),
            "dropped_l1": list(self.dropped_l1),
            "C": self.C,
            "cutoff": self.cutoff,
            "metrics_full": dict(self.metrics_full),
            "metrics_reduced": dict(self.metrics_reduced),
            "metric_delta_ci": {m: list(ci) for m, ci in self.metric_delta_ci.items()},
            "complexity_full": self.complexity_full.to_json(),
            "complexity_reduced": self.complexity_reduced.to_json(),
            "n_boot": self.n_boot,
        }


def l1_select(data: ds.Dataset, C: float = 0.0075, cutoff: float = 1e-5,
              seed: int = 0) -> list:
    """Retain features whose pure-L1 logistic coefficient survives the cutoff.

    Fits lasso-penalized logistic regression on standardized features at
    strength C and keeps features with |coefficient| > cutoff (standardized
    space).
    """
    cfg = models.LogRegConfig(C=C, l1_ratio=1.0, max_iter=2000, tol=1e-7, seed=seed)
    fitted = models.fit_logreg(data, cfg)
    keep = [
        name
        for name, coef in zip(data.feature_names, fitted.coef)
        if abs(coef) > cutoff
    ]
    if not keep:
        raise ValueError(
            f"no features survive C={C} with cutoff {cutoff}; weaken the "
            "penalty (larger C)"
        )
    return keep


def manual_filter(data: ds.Dataset, drop) -> ds.Dataset:
    """Project out the named features, keeping the remaining column order."""
    drop = list(drop)
    unknown = [n for n in drop if n not in data.feature_names]
    if unknown:
        raise ValueError(f"unknown feature names: {unknown}")
    if not drop:
        return data
    keep = [n for n in data.feature_names if n not in drop]
    if not keep:
        raise ValueError("cannot drop every feature")
    return ds.subset(data, keep)


def correlated_pairs(data: ds.Dataset, threshold: float):
    """Feature pairs with |Pearson rho| >= threshold, strongest first.

    Supports the manual screening step: the caller decides which member of
    each pair to drop.
    """
    summary = ds.correlation_summary(data)
    names = data.feature_names
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rho = summary.matrix[i, j]
            if abs(rho) >= threshold:
                pairs.append((names[i], names[j], float(rho)))
    pairs.sort(key=lambda t: -abs(t[2]))
    return pairs


def _bootstrap_metric_table(y, p_full, p_reduced, n_boot, seed, level=0.95):
    """Paired bootstrap over evaluation rows: per-metric means for both
    models plus a percentile CI of the (full - reduced) difference."""
    rng = np.random.default_rng(seed)
    n = len(y)
    vals = {m: (np.empty(n_boot), np.empty(n_boot)) for m in METRICS}
    for b in range(n_boot):
        for _ in range(1000):
            idx = rng.integers(0, n, size=n)
            if 0 < y[idx].sum() < n:
                break
        for m, fn in METRICS.items():
            vals[m][0][b] = fn(y[idx], p_full[idx])
            vals[m][1][b] = fn(y[idx], p_reduced[idx])
    alpha = 100 * (1.0 - level) / 2.0
    means_full = {m: float(v[0].mean()) for m, v in vals.items()}
    means_reduced = {m: float(v[1].mean()) for m, v in vals.items()}
    delta_ci = {
        m: tuple(float(q) for q in np.percentile(v[0] - v[1], [alpha, 100 - alpha]))
        for m, v in vals.items()
    }
    return means_full, means_reduced, delta_ci


def compare_models(
    data_full: ds.Dataset,
    data_reduced: ds.Dataset,
    model_cfg_full,
    model_cfg_reduced,
    n_boot: int = 1000,
    seed: int = 0,
    test_fraction: float = 0.25,
    complexity_n_boot: int = 100,
    n_bins: int = 30,
    dropped_manual=(),
    C: float = None,
    cutoff: float = None,
) -> SelectionReport:
    """Train on the full and the reduced feature set over the same rows and
    report bootstrap-mean test metrics plus training-data complexity.

    Both datasets must hold the same examples (identical targets); reduced
    features must be a subset of the full ones. Dropped features not listed
    in ``dropped_manual`` are attributed to the L1 step.
    """
    if data_full.n_rows != data_reduced.n_rows or not np.array_equal(
        data_full.target, data_reduced.target
    ):
        raise ValueError("full and reduced datasets must hold identical rows")
    extra = set(data_reduced.feature_names) - set(data_full.feature_names)
    if extra:
        raise ValueError(f"reduced features not in the full set: {sorted(extra)}")

    retained = data_reduced.feature_names
    dropped = [n for n in data_full.feature_names if n not in retained]
    dropped_manual = tuple(n for n in dropped_manual if n in dropped)
    dropped_l1 = tuple(n for n in dropped if n not in dropped_manual)

    split_seed = derive_seed(seed, 0)
    train_full, test_full = ds.split(data_full, test_fraction, split_seed)
    train_red, test_red = ds.split(data_reduced, test_fraction, split_seed)

    model_full = models.fit(train_full, dataclasses.replace(model_cfg_full, seed=derive_seed(seed, 1)))
    model_red = models.fit(train_red, dataclasses.replace(model_cfg_reduced, seed=derive_seed(seed, 2)))

    p_full = model_full.predict(test_full.features)
    p_red = model_red.predict(test_red.features)
    metrics_full, metrics_red, delta_ci = _bootstrap_metric_table(
        test_full.target, p_full, p_red, n_boot, derive_seed(seed, 3)
    )

    cx_full = effects.complexity_report(
        model_full, train_full, n_bins=n_bins, n_boot=complexity_n_boot,
        seed=derive_seed(seed, 4),
    )
    cx_red = effects.complexity_report(
        model_red, train_red, n_bins=n_bins, n_boot=complexity_n_boot,
        seed=derive_seed(seed, 5),
    )
    return SelectionReport(
        retained=retained,
        dropped_manual=dropped_manual,
        dropped_l1=dropped_l1,
        C=C,
        cutoff=cutoff,
        metrics_full=metrics_full,
        metrics_reduced=metrics_red,
        metric_delta_ci=delta_ci,
        complexity_full=cx_full,
        complexity_reduced=cx_red,
        n_boot=n_boot,
    )
