"""First-order accumulated local effects and the model-complexity statistics
built on them: interaction strength (IAS) and main effect complexity (MEC).

Every operation takes ``model`` as either a fitted Predictor or any callable
mapping a feature matrix to an output vector, so analytic test models plug in
directly.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from .util import derive_seed

__all__ = [
    "AleCurve",
    "ComplexityReport",
    "compute_ale",
    "compute_all_ale",
    "first_order_predict",
    "ias",
    "mec_feature",
    "mec",
    "complexity_report",
    "ale_variance_scores",
]


def _predict_fn(model):
    if hasattr(model, "predict"):
        return model.predict
    if callable(model):
        return model
    raise TypeError(f"model must have .predict or be callable, got {type(model)}")


@dataclass(frozen=True)
class AleCurve:
    """Centered first-order effect of one feature, tabulated per quantile bin.

    ``values`` hold the centered effect at ``bin_centers``; interpolating
    them over the training rows (linear between centers, clamped beyond the
    end centers) has sample mean zero by construction. ``center_constant``
    is the subtracted mean and ``variance`` the population variance of the
    per-sample interpolated effect. ``bin_counts`` carry the data mass per
    bin for weighted fits downstream.
    """

    feature: str
    bin_edges: np.ndarray
    bin_centers: np.ndarray
    values: np.ndarray
    center_constant: float
    variance: float
    bin_counts: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.bin_edges) - 1:
            raise ValueError("values must have one entry per bin")
        if len(self.bin_centers) != len(self.values):
            raise ValueError("bin_centers must match values")

    def interpolate(self, x) -> np.ndarray:
        """Effect at arbitrary feature values (clamped outside the centers)."""
        return np.interp(np.asarray(x, dtype=np.float64), self.bin_centers, self.values)

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "bin_edges": self.bin_edges.tolist(),
            "bin_centers": self.bin_centers.tolist(),
            "values": self.values.tolist(),
            "center_constant": self.center_constant,
            "variance": self.variance,
            "bin_counts": self.bin_counts.tolist(),
        }

    def to_csv_rows(self):
        yield ("bin_center", "value")
        for c, v in zip(self.bin_centers, self.values):
            yield (f"{c:.10g}", f"{v:.10g}")


@dataclass(frozen=True)
class ComplexityReport:
    ias_mean: float
    ias_sd: float
    mec_mean: float
    mec_sd: float
    per_feature_mec: dict
    n_boot: int

    def to_json(self) -> dict:
        return {
            "ias_mean": self.ias_mean,
            "ias_sd": self.ias_sd,
            "mec_mean": self.mec_mean,
            "mec_sd": self.mec_sd,
            "per_feature_mec": dict(self.per_feature_mec),
            "n_boot": self.n_boot,
        }


def _quantile_edges(x, n_bins):
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)))
    if len(edges) < 2:
        raise ValueError("feature is constant; effect curve is undefined")
    return edges


def _bin_index(x, edges):
    # Bin k spans (edges[k], edges[k+1]]; the minimum lands in bin 0.
    return np.clip(np.digitize(x, edges, right=True) - 1, 0, len(edges) - 2)


def _merge_empty_bins(x, edges):
    """Drop edges until every bin holds at least one sample (merging a
    sparse bin into its left neighbor)."""
    while True:
        idx = _bin_index(x, edges)
        counts = np.bincount(idx, minlength=len(edges) - 1)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return edges, idx, counts
        k = empty[0]
        edges = np.delete(edges, k if k > 0 else 1)


def compute_ale(model, data: ds.Dataset, feature: str, n_bins: int = 30) -> AleCurve:
    """Standard first-order ALE estimator over quantile bins.

    Per bin, in-bin samples are evaluated with the feature pushed to the
    bin's upper and lower edge; the mean difference is accumulated across
    bins and the result centered so the interpolated effect has zero mean
    over the data.
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    predict = _predict_fn(model)
    j = data.feature_names.index(feature)
    x = data.features[:, j]
    edges, idx, counts = _merge_empty_bins(x, _quantile_edges(x, n_bins))

    lower = data.features.copy()
    upper = data.features.copy()
    lower[:, j] = edges[idx]
    upper[:, j] = edges[idx + 1]
    diffs = np.asarray(predict(upper), dtype=np.float64) - np.asarray(
        predict(lower), dtype=np.float64
    )
    local = np.bincount(idx, weights=diffs, minlength=len(counts)) / counts

    cumulative = np.concatenate([[0.0], np.cumsum(local)])
    centers = 0.5 * (edges[:-1] + edges[1:])
    raw = 0.5 * (cumulative[:-1] + cumulative[1:])

    per_sample = np.interp(x, centers, raw)
    center = float(per_sample.mean())
    per_sample = per_sample - center
    return AleCurve(
        feature=feature,
        bin_edges=edges,
        bin_centers=centers,
        values=raw - center,
        center_constant=center,
        variance=float(per_sample.var()),
        bin_counts=counts.astype(np.int64),
    )


def _flat_curve(feature, value, n) -> AleCurve:
    return AleCurve(
        feature=feature,
        bin_edges=np.array([value - 0.5, value + 0.5]),
        bin_centers=np.array([value]),
        values=np.array([0.0]),
        center_constant=0.0,
        variance=0.0,
        bin_counts=np.array([n], dtype=np.int64),
    )


def compute_all_ale(model, data: ds.Dataset, n_bins: int = 30):
    """One AleCurve per feature, in dataset column order.

    Constant features get a flat zero curve with a warning instead of the
    error compute_ale would raise.
    """
    curves = []
    for name in data.feature_names:
        col = data.column(name)
        if col.min() == col.max():
            warnings.warn(
                f"feature '{name}' is constant; using a flat zero effect",
                RuntimeWarning,
            )
            curves.append(_flat_curve(name, float(col[0]), data.n_rows))
        else:
            curves.append(compute_ale(model, data, name, n_bins))
    return curves


def first_order_predict(curves, f0: float, X) -> np.ndarray:
    """Additive surrogate: mean prediction plus the interpolated per-feature
    effects. ``curves`` must align with the columns of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if len(curves) != X.shape[1]:
        raise ValueError(
            f"need one curve per column: {len(curves)} curves, {X.shape[1]} columns"
        )
    out = np.full(X.shape[0], float(f0))
    for j, curve in enumerate(curves):
        out += curve.interpolate(X[:, j])
    return out


def ias(model, data: ds.Dataset, n_bins: int = 30, curves=None) -> float:
    """Interaction strength: the fraction of the model's deviation from its
    mean prediction left unexplained by the summed first-order effects.

    0 means the model is exactly additive in its features; values near 1
    mean first-order effects explain almost nothing.
    """
    predict = _predict_fn(model)
    f = np.asarray(predict(data.features), dtype=np.float64)
    f0 = f.mean()
    denom = np.sum((f - f0) ** 2)
    if f.max() == f.min() or denom == 0.0:
        raise ValueError("model output is constant on this data; IAS undefined")
    if curves is None:
        curves = compute_all_ale(model, data, n_bins)
    f1 = first_order_predict(curves, f0, data.features)
    return float(np.sum((f - f1) ** 2) / denom)


def _weighted_line_sse(x, v, w):
    if len(x) < 3:
        return 0.0
    sw = np.sqrt(w)
    design = np.column_stack([np.ones_like(x), x]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, v * sw, rcond=None)
    resid = v - (coef[0] + coef[1] * x)
    return float(np.sum(w * resid ** 2))


def mec_feature(curve: AleCurve, epsilon: float = 0.05):
    """Segments needed to fit the curve piecewise-linearly to R^2 > 1 - eps.

    Greedy splitting: fit one line; while the count-weighted global R^2 is
    at or below 1 - eps, re-split the worst-fitting segment at its best
    bin boundary, keeping previous splits. Independent per-segment fits
    (discontinuities allowed). Returns (segment count, knot locations),
    knots being the first bin center of each segment after the first.
    """
    x = curve.bin_centers
    v = curve.values
    w = curve.bin_counts.astype(np.float64)
    n = len(x)
    mean = np.average(v, weights=w)
    sst = float(np.sum(w * (v - mean) ** 2))
    if sst == 0.0 or n == 1:
        return 1, []

    segments = [(0, n)]
    sses = [_weighted_line_sse(x, v, w)]
    while sum(sses) / sst >= epsilon and len(segments) < n:
        worst = int(np.argmax(sses))
        start, end = segments[worst]
        if end - start < 2 or sses[worst] == 0.0:
            break
        best = None
        for t in range(start + 1, end):
            sse = _weighted_line_sse(x[start:t], v[start:t], w[start:t]) + \
                  _weighted_line_sse(x[t:end], v[t:end], w[t:end])
            if best is None or sse < best[0]:
                best = (sse, t)
        _, t = best
        segments[worst:worst + 1] = [(start, t), (t, end)]
        sses[worst:worst + 1] = [
            _weighted_line_sse(x[start:t], v[start:t], w[start:t]),
            _weighted_line_sse(x[t:end], v[t:end], w[t:end]),
        ]
    segments.sort()
    knots = [float(x[s]) for s, _ in segments[1:]]
    return len(segments), knots


def mec(curves, epsilon: float = 0.05) -> float:
    """Variance-weighted mean of per-feature segment counts."""
    variances = np.array([c.variance for c in curves])
    total = variances.sum()
    if total == 0.0:
        raise ValueError("all effect curves have zero variance; MEC undefined")
    counts = np.array([mec_feature(c, epsilon)[0] for c in curves], dtype=np.float64)
    return float(np.sum(variances * counts) / total)


def complexity_report(
    model,
    data: ds.Dataset,
    n_bins: int = 30,
    n_boot: int = 100,
    seed: int = 0,
    epsilon: float = 0.05,
) -> ComplexityReport:
    """IAS and MEC over bootstrap replicates of the data (model held fixed).

    Means and population standard deviations across replicates, plus the
    replicate-mean segment count per feature.
    """
    ias_vals, mec_vals = [], []
    per_feature = np.zeros(data.n_features)
    for r in range(n_boot):
        boot = ds.bootstrap(data, derive_seed(seed, r))
        curves = compute_all_ale(model, boot, n_bins)
        ias_vals.append(ias(model, boot, n_bins, curves=curves))
        mec_vals.append(mec(curves, epsilon))
        per_feature += [mec_feature(c, epsilon)[0] for c in curves]
    return ComplexityReport(
        ias_mean=float(np.mean(ias_vals)),
        ias_sd=float(np.std(ias_vals)),
        mec_mean=float(np.mean(mec_vals)),
        mec_sd=float(np.std(mec_vals)),
        per_feature_mec={
            name: float(v / n_boot)
            for name, v in zip(data.feature_names, per_feature)
        },
        n_boot=n_boot,
    )


def ale_variance_scores(model, data: ds.Dataset, n_bins: int = 30) -> np.ndarray:
    """Variance of each feature's first-order effect, usable as a ranking
    score. Constant features score 0 (with a warning from curve building)."""
    curves = compute_all_ale(model, data, n_bins)
    return np.array([c.variance for c in curves])
