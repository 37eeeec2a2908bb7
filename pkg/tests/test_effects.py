import numpy as np
import pytest

import rankbench as rb
from rankbench.effects import AleCurve

from conftest import LinearModel, make_dataset


def uniform_data(rng, n, betas):
    P = len(betas)
    X = rng.uniform(-1.0, 1.0, size=(n, P))
    y = np.tile([0, 1], n // 2)
    return make_dataset(X, y)


def make_curve(values, counts=None, variance=1.0, centers=None):
    values = np.asarray(values, dtype=float)
    n = len(values)
    centers = np.arange(n, dtype=float) if centers is None else np.asarray(centers, float)
    edges = np.concatenate([[centers[0] - 0.5], (centers[:-1] + centers[1:]) / 2,
                            [centers[-1] + 0.5]])
    counts = np.ones(n, dtype=int) if counts is None else np.asarray(counts)
    return AleCurve(
        feature="f", bin_edges=edges, bin_centers=centers, values=values,
        center_constant=0.0, variance=variance, bin_counts=counts,
    )


class TestComputeAle:
    def test_linear_model_matches_analytic_line(self, rng):
        # Oracle: for f = beta * x_j the centered curve equals
        # beta * (centers - mean(clip(x, c_first, c_last))).
        beta = 1.7
        data = uniform_data(rng, 3000, [beta, 0.0])
        curve = rb.compute_ale(LinearModel([beta, 0.0]), data, "x1", n_bins=25)
        x = data.features[:, 0]
        m = np.mean(np.clip(x, curve.bin_centers[0], curve.bin_centers[-1]))
        expected = beta * (curve.bin_centers - m)
        assert np.max(np.abs(curve.values - expected)) < 1e-9

    def test_zero_coefficient_feature_flat(self, rng):
        data = uniform_data(rng, 1000, [1.0, 0.0])
        curve = rb.compute_ale(LinearModel([1.0, 0.0]), data, "x2", n_bins=15)
        assert np.all(curve.values == 0.0)
        assert curve.variance == 0.0

    def test_centering_invariant(self, rng):
        data = uniform_data(rng, 2000, [2.0, -1.0, 0.5])
        model = LinearModel([2.0, -1.0, 0.5])
        for name in data.feature_names:
            curve = rb.compute_ale(model, data, name, n_bins=20)
            mean_effect = curve.interpolate(data.column(name)).mean()
            assert abs(mean_effect) < 1e-9

    def test_interaction_effect_within_noise_band(self):
        # f = x1 * x2 with independent symmetric inputs: the first-order
        # effect of x1 is zero; sampled curves must stay inside a 3-sigma
        # band from the cumulative Monte-Carlo variance.
        r = np.random.default_rng(4)
        n = 100_000
        X = r.standard_normal((n, 2))
        data = make_dataset(X, np.tile([0, 1], n // 2))
        model = LinearModel([0.0, 0.0])
        model.predict = lambda Z: Z[:, 0] * Z[:, 1]
        curve = rb.compute_ale(model, data, "x1", n_bins=30)
        gaps = np.diff(curve.bin_edges)
        cum_var = np.cumsum(gaps ** 2 / curve.bin_counts)  # Var(x2) = 1
        band = 3.0 * np.sqrt(cum_var.max())
        assert np.max(np.abs(curve.values)) < band

    def test_constant_feature_errors(self, rng):
        X = np.column_stack([rng.standard_normal(100), np.full(100, 2.0)])
        data = make_dataset(X, np.tile([0, 1], 50))
        with pytest.raises(ValueError, match="constant"):
            rb.compute_ale(LinearModel([1.0, 0.0]), data, "x2", n_bins=10)

    def test_duplicate_heavy_feature_merges_bins(self, rng):
        x = np.concatenate([np.zeros(50), np.ones(30), rng.uniform(2, 3, 20)])
        X = np.column_stack([x, rng.standard_normal(100)])
        data = make_dataset(X, np.tile([0, 1], 50))
        curve = rb.compute_ale(LinearModel([1.0, 0.0]), data, "x1", n_bins=20)
        assert np.all(curve.bin_counts > 0)
        assert len(curve.values) < 20

    def test_min_bins(self, rng):
        data = uniform_data(rng, 100, [1.0])
        with pytest.raises(ValueError, match="n_bins"):
            rb.compute_ale(LinearModel([1.0]), data, "x1", n_bins=1)


class TestFirstOrderPredict:
    def test_zero_effect_point_returns_f0(self, rng):
        data = uniform_data(rng, 500, [1.0, 1.0])
        curves = rb.compute_all_ale(LinearModel([1.0, 1.0]), data, 10)
        # the effect interpolates to ~0 near the data mean
        x0 = np.array([[curves[0].bin_centers.mean(), curves[1].bin_centers.mean()]])
        out = rb.first_order_predict(curves, 5.0, x0)
        assert out[0] == pytest.approx(
            5.0 + sum(c.interpolate(x0[0, j]) for j, c in enumerate(curves))
        )

    def test_reproduces_additive_model_in_range(self, rng):
        # For linear f the piecewise interpolation is exact between the end
        # centers: the in-range residual is a single constant (the centering
        # offset), which itself stays small.
        betas = [2.0, -1.0, 0.5]
        data = uniform_data(rng, 4000, betas)
        model = LinearModel(betas)
        curves = rb.compute_all_ale(model, data, 100)
        f = model.predict(data.features)
        f0 = f.mean()
        inside = np.all(
            [
                (data.features[:, j] >= c.bin_centers[0])
                & (data.features[:, j] <= c.bin_centers[-1])
                for j, c in enumerate(curves)
            ],
            axis=0,
        )
        residual = rb.first_order_predict(curves, f0, data.features[inside]) - f[inside]
        assert np.ptp(residual) < 1e-9
        assert np.abs(residual).max() < 1e-3

    def test_single_feature_is_f0_plus_curve(self, rng):
        data = uniform_data(rng, 300, [1.5])
        curves = rb.compute_all_ale(LinearModel([1.5]), data, 10)
        out = rb.first_order_predict(curves, 2.0, data.features[:5])
        expected = 2.0 + curves[0].interpolate(data.features[:5, 0])
        assert np.allclose(out, expected)

    def test_missing_curve_errors(self, rng):
        data = uniform_data(rng, 300, [1.0, 1.0])
        curves = rb.compute_all_ale(LinearModel([1.0, 1.0]), data, 10)
        with pytest.raises(ValueError, match="one curve per column"):
            rb.first_order_predict(curves[:1], 0.0, data.features)


class TestIas:
    def test_additive_identity_model_is_zero(self, rng):
        data = uniform_data(rng, 5000, [2.0, 1.0, 0.5, 0.25, 0.1])
        value = rb.ias(LinearModel([2.0, 1.0, 0.5, 0.25, 0.1]), data, n_bins=150)
        assert value <= 1e-6

    def test_pure_interaction_saturates(self):
        r = np.random.default_rng(8)
        X = r.standard_normal((30_000, 2))
        data = make_dataset(X, np.tile([0, 1], 15_000))
        model = lambda Z: Z[:, 0] * Z[:, 1]
        value = rb.ias(model, data, n_bins=30)
        assert 0.9 <= value <= 1.0

    def test_constant_output_errors(self, rng):
        data = uniform_data(rng, 100, [1.0])
        with pytest.raises(ValueError, match="constant"):
            rb.ias(lambda Z: np.full(Z.shape[0], 0.3), data)

    def test_nonnegative(self, small_logreg):
        _, data, model = small_logreg
        assert rb.ias(model, data, n_bins=20) >= 0.0


class TestMecFeature:
    def test_exactly_linear_curve(self):
        curve = make_curve(0.7 * np.arange(20) - 3.0)
        segments, knots = rb.mec_feature(curve)
        assert segments == 1
        assert knots == []

    def test_hinge_curve(self):
        # two exact linear pieces meeting at bin center index 12
        x = np.arange(25, dtype=float)
        values = np.where(x <= 12, -1.0 * (x - 12), 2.5 * (x - 12))
        segments, knots = rb.mec_feature(make_curve(values))
        assert segments == 2
        assert len(knots) == 1
        assert abs(knots[0] - 12.0) <= 1.0

    def test_three_piece_curve(self):
        values = np.concatenate([
            3.0 * np.arange(10),
            30.0 - 3.0 * np.arange(10),
            1.5 * np.arange(10),
        ])
        segments, knots = rb.mec_feature(make_curve(values))
        assert segments == 3
        assert len(knots) == 2

    def test_zero_variance_returns_one(self):
        segments, knots = rb.mec_feature(make_curve(np.zeros(10)))
        assert segments == 1

    def test_single_bin_curve(self):
        segments, _ = rb.mec_feature(make_curve([0.0]))
        assert segments == 1

    def test_tolerance_or_maximal(self, rng):
        # Property: returned segmentation reaches R^2 > 1-eps or uses the
        # maximum number of segments.
        for trial in range(10):
            values = rng.standard_normal(12).cumsum()
            counts = rng.integers(1, 50, size=12)
            curve = make_curve(values, counts=counts)
            segments, knots = rb.mec_feature(curve, epsilon=0.05)
            assert 1 <= segments <= 12
            assert len(knots) == segments - 1
            if segments < 12:
                assert _segmentation_r2(curve, knots) > 0.95 - 1e-9


def _segmentation_r2(curve, knots):
    """Independent weighted R^2 of the returned piecewise fit."""
    x, v, w = curve.bin_centers, curve.values, curve.bin_counts.astype(float)
    bounds = [x[0] - 1] + list(knots) + [x[-1] + 1]
    sse = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = (x >= lo) & (x < hi)
        if mask.sum() == 0:
            continue
        xs, vs, ws = x[mask], v[mask], w[mask]
        if len(xs) < 3:
            continue
        W = np.diag(ws)
        A = np.column_stack([np.ones_like(xs), xs])
        coef = np.linalg.solve(A.T @ W @ A, A.T @ W @ vs)
        sse += float(ws @ (vs - A @ coef) ** 2)
    mean = np.average(v, weights=w)
    sst = float(w @ (v - mean) ** 2)
    return 1.0 - sse / sst


class TestMec:
    def test_all_linear_curves(self):
        curves = [make_curve(k * np.arange(10.0), variance=float(k)) for k in (1, 2)]
        assert rb.mec(curves) == 1.0

    def test_weight_degeneracy(self):
        x = np.arange(20, dtype=float)
        hinge = make_curve(np.where(x < 10, x, 20 - x) * 5, variance=4.0)
        flats = [make_curve(np.zeros(20), variance=0.0) for _ in range(3)]
        assert rb.mec([hinge] + flats) == 2.0

    def test_hand_weighting(self):
        x = np.arange(30, dtype=float)
        linear = make_curve(2.0 * x, variance=1.0)
        three_piece = make_curve(
            np.concatenate([
                3.0 * np.arange(10),
                30.0 - 3.0 * np.arange(10),
                1.5 * np.arange(10),
            ]),
            variance=1.0,
        )
        # equal variances: (1*1 + 1*3) / 2 = 2
        assert rb.mec([linear, three_piece]) == 2.0

    def test_all_zero_variance_errors(self):
        with pytest.raises(ValueError, match="zero variance"):
            rb.mec([make_curve(np.zeros(5), variance=0.0)])


class TestComplexityReport:
    def test_additive_identity_model(self, rng):
        data = uniform_data(rng, 3000, [2.0, 1.0])
        report = rb.complexity_report(
            LinearModel([2.0, 1.0]), data, n_bins=150, n_boot=3, seed=1
        )
        assert report.ias_mean < 1e-6
        assert report.mec_mean == 1.0
        assert report.n_boot == 3

    def test_single_replicate_zero_sd(self, small_logreg):
        _, data, model = small_logreg
        report = rb.complexity_report(model, data, n_bins=15, n_boot=1, seed=2)
        assert report.ias_sd == 0.0
        assert report.mec_sd == 0.0

    def test_deterministic(self, small_logreg):
        _, data, model = small_logreg
        a = rb.complexity_report(model, data, n_bins=12, n_boot=2, seed=3)
        b = rb.complexity_report(model, data, n_bins=12, n_boot=2, seed=3)
        assert a == b

    def test_per_feature_mec_keys(self, small_logreg):
        _, data, model = small_logreg
        report = rb.complexity_report(model, data, n_bins=12, n_boot=2, seed=4)
        assert set(report.per_feature_mec) == set(data.feature_names)


class TestAleVarianceScores:
    def test_zero_coefficient_scores_zero(self, rng):
        data = uniform_data(rng, 1000, [1.0, 0.0])
        scores = rb.ale_variance_scores(LinearModel([1.0, 0.0]), data, n_bins=15)
        assert scores[1] == 0.0

    def test_slope_ratio_exact_on_shared_values(self, rng):
        x = rng.uniform(-1, 1, 2000)
        X = np.column_stack([x, x.copy()])
        data = make_dataset(X, np.tile([0, 1], 1000))
        scores = rb.ale_variance_scores(LinearModel([2.0, 1.0]), data, n_bins=20)
        assert scores[0] / scores[1] == pytest.approx(4.0, abs=1e-9)

    def test_constant_feature_warns_and_scores_zero(self, rng):
        X = np.column_stack([rng.uniform(-1, 1, 200), np.full(200, 1.0)])
        data = make_dataset(X, np.tile([0, 1], 100))
        with pytest.warns(RuntimeWarning, match="constant"):
            scores = rb.ale_variance_scores(LinearModel([1.0, 0.0]), data, n_bins=10)
        assert scores[1] == 0.0
