"""Verification scores for probabilistic binary forecasts and the association
statistics used to compare importance scores against model performance.

The rare-event scores (NAUPDC, NCSI) are normalized against the no-skill
baseline, taken to be the sample base rate: a perfect forecast scores 1 and a
climatological constant forecast scores 0.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .util import derive_seed

__all__ = [
    "PerformanceDiagram",
    "FitStats",
    "roc_auc",
    "brier_skill_score",
    "performance_curve",
    "naupdc",
    "ncsi",
    "association_stats",
    "polynomial_fit_stats",
    "bootstrap_ci",
    "resolve_metric",
    "METRICS",
]


@dataclass(frozen=True)
class PerformanceDiagram:
    """Contingency-table statistics swept over probability thresholds.

    ``thresholds`` are descending cutoffs; a sample is forecast positive when
    its probability is >= the cutoff. ``sr`` (success ratio) is defined as 0
    when nothing is forecast.
    """

    thresholds: np.ndarray
    pod: np.ndarray
    sr: np.ndarray
    csi: np.ndarray

    def to_json(self) -> dict:
        return {
            "thresholds": self.thresholds.tolist(),
            "pod": self.pod.tolist(),
            "sr": self.sr.tolist(),
            "csi": self.csi.tolist(),
        }

    def to_csv_rows(self):
        yield ("threshold", "pod", "sr", "csi")
        for t, pod, sr, csi in zip(self.thresholds, self.pod, self.sr, self.csi):
            yield (f"{t:.10g}", f"{pod:.10g}", f"{sr:.10g}", f"{csi:.10g}")


@dataclass(frozen=True)
class FitStats:
    """Bootstrap-mean association statistics between importance and skill."""

    kendall_tau: float
    log_pearson: float
    r2: float
    mse: float
    n: int

    def to_json(self) -> dict:
        return {
            "kendall_tau": self.kendall_tau,
            "log_pearson": self.log_pearson,
            "r2": self.r2,
            "mse": self.mse,
            "n": self.n,
        }


def _check_forecast(y, p):
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: y {y.shape} vs p {p.shape}")
    if len(np.unique(y)) < 2:
        raise ValueError("need both classes present in y")
    return y, p


def roc_auc(y, p) -> float:
    """Probability that a random positive outranks a random negative,
    counting ties as 1/2 (rank formulation)."""
    y, p = _check_forecast(y, p)
    ranks = stats.rankdata(p)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def brier_skill_score(y, p) -> float:
    """1 - BS / BS_climo, with climatology taken from the sample base rate."""
    y, p = _check_forecast(y, p)
    base = y.mean()
    bs = np.mean((p - y) ** 2)
    bs_climo = base * (1.0 - base)
    return float(1.0 - bs / bs_climo)


def _contingency(y, p, thresholds):
    """POD/SR/CSI at each threshold, vectorized over thresholds."""
    order = np.argsort(p, kind="stable")
    p_sorted = p[order]
    pos_prefix = np.concatenate([[0.0], np.cumsum(y[order])])
    n = len(y)
    n_pos = y.sum()
    idx = np.searchsorted(p_sorted, thresholds, side="left")
    n_forecast = n - idx
    hits = n_pos - pos_prefix[idx]
    false_alarms = n_forecast - hits
    misses = n_pos - hits
    pod = hits / n_pos
    with np.errstate(invalid="ignore", divide="ignore"):
        sr = np.where(n_forecast > 0, hits / np.maximum(n_forecast, 1), 0.0)
    csi = hits / (hits + misses + false_alarms)
    return pod, sr, csi


def performance_curve(y, p, n_thresholds: int = 200) -> PerformanceDiagram:
    """Contingency statistics at evenly spaced thresholds spanning [0, 1]."""
    y, p = _check_forecast(y, p)
    if n_thresholds < 2:
        raise ValueError(f"n_thresholds must be >= 2, got {n_thresholds}")
    thresholds = np.linspace(1.0, 0.0, n_thresholds)
    pod, sr, csi = _contingency(y, p, thresholds)
    return PerformanceDiagram(thresholds, pod, sr, csi)


def _exact_thresholds(p):
    # Every distinct forecast value plus one cutoff above the maximum (the
    # zero-forecast operating point); captures every contingency table.
    return np.concatenate([np.unique(p), [np.max(p) + 1.0]])


def naupdc(y, p) -> float:
    """Normalized area under the performance-diagram curve.

    The raw area averages the success ratio over probability-of-detection
    steps (step integration, best SR per POD level), evaluated at every
    distinct operating point; it is then rescaled as (area - b) / (1 - b)
    with b the base rate, so climatology scores ~0 and perfection scores 1.
    """
    y, p = _check_forecast(y, p)
    pod, sr, _ = _contingency(y, p, _exact_thresholds(p))
    order = np.argsort(pod, kind="stable")
    pod, sr = pod[order], sr[order]
    # Collapse equal-POD runs to their best success ratio.
    uniq_pod, inverse = np.unique(pod, return_inverse=True)
    best_sr = np.zeros_like(uniq_pod)
    np.maximum.at(best_sr, inverse, sr)
    steps = np.diff(np.concatenate([[0.0], uniq_pod]))
    area = float(np.sum(steps * best_sr))
    b = y.mean()
    return float((area - b) / (1.0 - b))


def ncsi(y, p) -> float:
    """Normalized maximum critical success index: (max CSI - b) / (1 - b),
    where b is the CSI of the always-yes forecast (the base rate)."""
    y, p = _check_forecast(y, p)
    _, _, csi = _contingency(y, p, _exact_thresholds(p))
    b = y.mean()
    return float((csi.max() - b) / (1.0 - b))


def polynomial_fit_stats(importance, performance, degree: int = 5):
    """R^2 and MSE of a least-squares polynomial fit of performance on
    min-max-scaled importance. Solved by orthogonal decomposition."""
    x = np.asarray(importance, dtype=np.float64)
    yv = np.asarray(performance, dtype=np.float64)
    span = x.max() - x.min()
    xs = (x - x.min()) / span if span > 0 else np.zeros_like(x)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", np.exceptions.RankWarning)
        coeffs = np.polyfit(xs, yv, degree)
    fitted = np.polyval(coeffs, xs)
    sse = float(np.sum((yv - fitted) ** 2))
    sst = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return r2, sse / len(yv)


def _log_transform(values):
    span = values.max() - values.min()
    eps = 1e-3 * span
    return np.log(values - values.min() + eps)


def association_stats(
    importance,
    performance,
    degree: int = 5,
    n_boot: int = 100,
    seed: int = 0,
) -> FitStats:
    """Bootstrap-mean Kendall tau-b, log-transform Pearson correlation, and
    degree-``degree`` polynomial fit R^2 / MSE between an importance vector
    and a performance vector.

    The four statistics are averaged over ``n_boot`` resamples of the pairs;
    degenerate resamples (either vector constant) are skipped.
    """
    x = np.asarray(importance, dtype=np.float64)
    yv = np.asarray(performance, dtype=np.float64)
    if x.shape != yv.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch: {x.shape} vs {yv.shape}")
    if len(x) < degree + 2:
        raise ValueError(f"need at least degree+2={degree + 2} pairs, got {len(x)}")
    if x.min() == x.max() or yv.min() == yv.max():
        raise ValueError("zero variance in importance or performance")

    rng = np.random.default_rng(seed)
    n = len(x)
    taus, pearsons, r2s, mses = [], [], [], []
    for _ in range(n_boot):
        idx = rng.integers(0, n, size=n)
        xb, yb = x[idx], yv[idx]
        if xb.min() == xb.max() or yb.min() == yb.max():
            continue
        taus.append(stats.kendalltau(xb, yb).statistic)
        ly = _log_transform(yb)
        pearsons.append(stats.pearsonr(xb, ly).statistic)
        r2, mse = polynomial_fit_stats(xb, yb, degree)
        r2s.append(r2)
        mses.append(mse)
    if not taus:
        raise ValueError("all bootstrap resamples degenerate")
    return FitStats(
        kendall_tau=float(np.mean(taus)),
        log_pearson=float(np.mean(pearsons)),
        r2=float(np.mean(r2s)),
        mse=float(np.mean(mses)),
        n=n,
    )


def bootstrap_ci(samples, n_boot: int, level: float, seed: int):
    """Percentile confidence interval for the mean via the bootstrap."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < 2:
        raise ValueError(f"need at least 2 samples, got {len(x)}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    means = rng.integers(0, len(x), size=(n_boot, len(x)))
    means = x[means].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.percentile(means, [100 * alpha, 100 * (1 - alpha)])
    return float(low), float(high)


METRICS = {
    "auc": roc_auc,
    "bss": brier_skill_score,
    "naupdc": naupdc,
    "ncsi": ncsi,
}


def resolve_metric(name: str):
    try:
        return METRICS[name]
    except KeyError:
        raise ValueError(
            f"unknown metric '{name}'; valid metrics: {sorted(METRICS)}"
        ) from None


def derived_seeds(root: int, count: int):
    """Independent child seeds for parallel bootstrap-style loops."""
    return [derive_seed(root, k) for k in range(count)]
