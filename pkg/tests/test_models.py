import json
import warnings

import numpy as np
import pytest

import rankbench as rb
from rankbench.models import elastic_net_objective, predictor_from_json, predictor_to_json
from rankbench.util import sigmoid

from conftest import make_dataset


def standardized(data, model):
    return (data.features - model.mean) / model.std


def entropy(pos_w, neg_w):
    total = pos_w + neg_w
    h = 0.0
    for w in (pos_w, neg_w):
        q = w / total
        if q > 0:
            h -= q * np.log2(q)
    return h


class TestLogRegConfig:
    def test_tornado_style_config_accepted(self):
        cfg = rb.LogRegConfig(C=0.1, l1_ratio=0.0001)
        assert cfg.C == 0.1

    def test_validation(self):
        with pytest.raises(ValueError):
            rb.LogRegConfig(C=-1.0)
        with pytest.raises(ValueError):
            rb.LogRegConfig(l1_ratio=1.5)


class TestFitLogreg:
    def test_pure_noise_strong_regularization(self, rng):
        # Oracle: with no signal the penalized optimum is the zero vector.
        X = rng.standard_normal((800, 5))
        y = rng.integers(0, 2, 800)
        y[:2] = [0, 1]
        data = make_dataset(X, y)
        model = rb.fit_logreg(data, rb.LogRegConfig(C=0.5, l1_ratio=0.5, tol=1e-8))
        assert np.all(np.abs(model.coef) < 0.05)

    def test_separable_1d(self):
        X = np.linspace(-2, 2, 40)[:, None]
        y = (X[:, 0] > 0).astype(int)
        data = make_dataset(X, y)
        model = rb.fit_logreg(data, rb.LogRegConfig(C=0.1, l1_ratio=0.0001))
        assert model.coef[0] > 0
        assert rb.roc_auc(y, model.predict(X)) == 1.0

    def test_objective_not_worse_than_zero_vector(self, small_logreg):
        _, data, model = small_logreg
        Xs = standardized(data, model)
        y = data.target
        base = data.base_rate
        cfg_c, cfg_ratio = 20.0, 0.01
        at_fit = elastic_net_objective(Xs, y, model.coef, model.intercept, cfg_c, cfg_ratio)
        at_zero = elastic_net_objective(
            Xs, y, np.zeros(data.n_features), np.log(base / (1 - base)), cfg_c, cfg_ratio
        )
        assert at_fit <= at_zero + 1e-12

    def test_solution_near_stationarity(self, small_logreg):
        # KKT residual of the elastic-net subgradient at the solution.
        _, data, model = small_logreg
        Xs = standardized(data, model)
        y = data.target
        n = data.n_rows
        p = sigmoid(Xs @ model.coef + model.intercept)
        grad = Xs.T @ (p - y) / n + (1 - 0.01) / 20.0 * model.coef
        l1 = 0.01 / 20.0
        active = model.coef != 0
        assert np.all(np.abs(grad[active] + l1 * np.sign(model.coef[active])) < 1e-4)
        assert np.all(np.abs(grad[~active]) <= l1 + 1e-4)

    def test_l2_shrinkage_monotone_in_C(self, rng):
        X = rng.standard_normal((400, 3))
        z = X @ np.array([1.0, -0.7, 0.4])
        y = (rng.random(400) < sigmoid(z)).astype(int)
        y[:2] = [0, 1]
        data = make_dataset(X, y)
        grid = [0.3, 0.1, 0.03, 0.01, 0.003]
        norms = []
        for C in grid:
            model = rb.fit_logreg(data, rb.LogRegConfig(C=C, l1_ratio=0.0, tol=1e-9))
            norms.append(np.abs(model.coef))
        for smaller, larger in zip(norms[1:], norms[:-1]):
            assert np.all(smaller <= larger + 1e-8)

    def test_duplicated_column_near_pure_l1(self, rng):
        # With exact duplicates the L1 optimum is non-unique; our cyclic
        # descent deterministically keeps at most one of the pair above the
        # zero cutoff.
        x = rng.standard_normal(500)
        X = np.column_stack([x, x, rng.standard_normal(500)])
        y = (rng.random(500) < sigmoid(2 * x)).astype(int)
        y[:2] = [0, 1]
        data = make_dataset(X, y)
        model = rb.fit_logreg(data, rb.LogRegConfig(C=3.0, l1_ratio=0.999, tol=1e-9))
        surviving = np.abs(model.coef[:2]) > 1e-5
        assert surviving.sum() <= 1

    def test_non_convergence_warns_but_usable(self, rng):
        X = rng.standard_normal((200, 4))
        y = (rng.random(200) < sigmoid(3 * X[:, 0])).astype(int)
        y[:2] = [0, 1]
        data = make_dataset(X, y)
        with pytest.warns(RuntimeWarning, match="converge"):
            model = rb.fit_logreg(data, rb.LogRegConfig(C=100.0, l1_ratio=0.0,
                                                        max_iter=2, tol=1e-12))
        assert not model.converged
        p = model.predict(X)
        assert np.all((p >= 0) & (p <= 1))

    def test_constant_feature_gets_zero_coefficient(self, rng):
        X = np.column_stack([rng.standard_normal(100), np.full(100, 7.0)])
        y = (X[:, 0] > 0).astype(int)
        data = make_dataset(X, y)
        model = rb.fit_logreg(data, rb.LogRegConfig(C=10.0, l1_ratio=0.5))
        assert model.coef[1] == 0.0


class TestPredict:
    def test_all_mean_input_gives_sigmoid_intercept(self, small_logreg):
        _, data, model = small_logreg
        x = model.mean[None, :]
        assert model.predict(x)[0] == pytest.approx(sigmoid(model.intercept), abs=1e-12)

    def test_row_permutation_equivariance(self, small_logreg, rng):
        _, data, model = small_logreg
        X = data.features[:20]
        perm = rng.permutation(20)
        assert np.array_equal(model.predict(X)[perm], model.predict(X[perm]))

    def test_column_mismatch(self, small_logreg):
        _, data, model = small_logreg
        with pytest.raises(ValueError, match="columns"):
            model.predict(data.features[:, :3])

    def test_repeat_calls_identical(self, small_logreg):
        _, data, model = small_logreg
        a = model.predict(data.features)
        b = model.predict(data.features)
        assert np.array_equal(a, b)


class TestForestConfig:
    def test_road_style_config_accepted(self):
        cfg = rb.ForestConfig(n_trees=500, max_depth=20, max_features=5,
                              min_samples_leaf=5, min_samples_split=8,
                              criterion="entropy", class_weight="balanced")
        assert cfg.n_trees == 500

    def test_validation(self):
        with pytest.raises(ValueError):
            rb.ForestConfig(min_samples_split=1)
        with pytest.raises(ValueError):
            rb.ForestConfig(criterion="gini")
        with pytest.raises(ValueError):
            rb.ForestConfig(class_weight="other")


@pytest.fixture(scope="module")
def step_data():
    X = np.linspace(-1, 1, 60)[:, None]
    y = (X[:, 0] > 0.13).astype(int)
    return make_dataset(X, y)


@pytest.fixture(scope="module")
def forest_data():
    r = np.random.default_rng(77)
    X = r.standard_normal((500, 4))
    z = 1.8 * X[:, 0] - 1.1 * X[:, 1]
    y = (r.random(500) < sigmoid(z)).astype(int)
    y[:2] = [0, 1]
    return make_dataset(X, y)


@pytest.fixture(scope="module")
def small_forest(forest_data):
    cfg = rb.ForestConfig(n_trees=30, max_depth=6, max_features=2,
                          min_samples_leaf=2, min_samples_split=4, seed=3)
    return rb.fit_forest(forest_data, cfg)


class TestFitForest:
    def test_single_tree_single_split_perfect(self, step_data):
        cfg = rb.ForestConfig(n_trees=1, max_depth=1, max_features=1,
                              min_samples_leaf=1, min_samples_split=2,
                              class_weight="none", seed=0)
        model = rb.fit_forest(step_data, cfg)
        preds = model.predict(step_data.features)
        acc = np.mean((preds > 0.5) == step_data.target)
        assert acc == 1.0

    def test_identical_seeds_identical_forests(self, forest_data):
        cfg = rb.ForestConfig(n_trees=5, max_depth=4, max_features=2, seed=11,
                              min_samples_leaf=1, min_samples_split=2)
        a = rb.fit_forest(forest_data, cfg)
        b = rb.fit_forest(forest_data, cfg)
        assert np.array_equal(a.predict(forest_data.features),
                              b.predict(forest_data.features))

    def test_max_features_exceeds_p(self, forest_data):
        cfg = rb.ForestConfig(n_trees=2, max_features=10)
        with pytest.raises(ValueError, match="max_features"):
            rb.fit_forest(forest_data, cfg)

    def test_probabilities_in_range(self, small_forest, forest_data):
        p = small_forest.predict(forest_data.features)
        assert np.all((p >= 0) & (p <= 1))

    def test_logloss_improves_with_more_trees(self, forest_data):
        # Averaged over 5 seeds, doubling the forest never hurts train loss.
        from rankbench.util import cross_entropy

        losses = {10: [], 20: []}
        for s in range(5):
            for k in (10, 20):
                cfg = rb.ForestConfig(n_trees=k, max_depth=5, max_features=2,
                                      min_samples_leaf=2, min_samples_split=4, seed=s)
                model = rb.fit_forest(forest_data, cfg)
                p = model.predict(forest_data.features)
                losses[k].append(cross_entropy(forest_data.target, p).mean())
        assert np.mean(losses[20]) <= np.mean(losses[10])


class TestCoefficients:
    def test_returns_standardized_coefs(self, small_logreg):
        _, data, model = small_logreg
        coefs = rb.coefficients(model)
        assert coefs.shape == (data.n_features,)
        assert np.array_equal(coefs, model.coef)

    def test_rejects_forest(self, small_forest):
        with pytest.raises(ValueError, match="logreg"):
            rb.coefficients(small_forest)

    def test_single_feature(self):
        X = np.linspace(-1, 1, 30)[:, None]
        y = (X[:, 0] > 0).astype(int)
        model = rb.fit_logreg(make_dataset(X, y), rb.LogRegConfig(C=1.0, l1_ratio=0.1))
        assert rb.coefficients(model).shape == (1,)


class TestGiniImportance:
    def test_constant_feature_unused(self, rng):
        X = np.column_stack([rng.standard_normal(300), np.full(300, 1.0)])
        y = (X[:, 0] > 0).astype(int)
        data = make_dataset(X, y)
        cfg = rb.ForestConfig(n_trees=10, max_depth=4, max_features=2,
                              min_samples_leaf=1, min_samples_split=2, seed=1)
        gi = rb.gini_importance(rb.fit_forest(data, cfg))
        assert gi[1] == 0.0
        assert gi.sum() == pytest.approx(1.0, abs=1e-12)

    def test_single_feature_forest(self, step_data):
        cfg = rb.ForestConfig(n_trees=3, max_depth=3, max_features=1,
                              min_samples_leaf=1, min_samples_split=2, seed=2)
        gi = rb.gini_importance(rb.fit_forest(step_data, cfg))
        assert gi[0] == pytest.approx(1.0)

    def test_signal_feature_dominates(self, rng):
        X = rng.standard_normal((400, 2))
        y = (X[:, 0] > 0).astype(int)
        data = make_dataset(X, y)
        cfg = rb.ForestConfig(n_trees=20, max_depth=4, max_features=2,
                              min_samples_leaf=2, min_samples_split=4,
                              class_weight="none", seed=4)
        gi = rb.gini_importance(rb.fit_forest(data, cfg))
        assert gi[0] > 0.9

    def test_matches_direct_bookkeeping(self, step_data):
        # Oracle: recompute weighted entropy decrease from the raw data for
        # every node of a single returned tree.
        cfg = rb.ForestConfig(n_trees=1, max_depth=2, max_features=1,
                              min_samples_leaf=1, min_samples_split=2,
                              class_weight="none", seed=9)
        model = rb.fit_forest(step_data, cfg)
        tree = model.trees[0]

        rng_t = np.random.default_rng(rb.derive_seed(9, 0))
        rows = rng_t.integers(0, step_data.n_rows, size=step_data.n_rows)
        X, y = step_data.features[rows], step_data.target[rows]

        expected = np.zeros(step_data.n_features)

        def walk(node, idx):
            j = tree.feature[node]
            if j < 0:
                return
            mask = X[idx, j] <= tree.threshold[node]
            left, right = idx[mask], idx[~mask]
            h = entropy(y[idx].sum(), len(idx) - y[idx].sum())
            hl = entropy(y[left].sum(), len(left) - y[left].sum())
            hr = entropy(y[right].sum(), len(right) - y[right].sum())
            expected[j] += (len(idx) * h - len(left) * hl - len(right) * hr) / len(X)
            walk(tree.left[node], left)
            walk(tree.right[node], right)

        walk(0, np.arange(len(X)))
        expected /= expected.sum()
        assert np.allclose(rb.gini_importance(model), expected, atol=1e-12)

    def test_rejects_logreg(self, small_logreg):
        _, _, model = small_logreg
        with pytest.raises(ValueError, match="forest"):
            rb.gini_importance(model)


class TestTreePathAttribution:
    def test_stumpless_trees_flat(self, forest_data):
        # min_samples_split above n forces every tree to a single leaf.
        cfg = rb.ForestConfig(n_trees=4, max_depth=3, max_features=2,
                              min_samples_split=10_000, class_weight="none", seed=0)
        model = rb.fit_forest(forest_data, cfg)
        contrib, bias = rb.tree_path_attribution(model, forest_data.features[:10])
        assert np.all(contrib == 0.0)
        # each tree's root frequency is its bootstrap base rate
        assert np.allclose(bias, np.mean([t.value[0] for t in model.trees]))

    def test_single_split_only_one_column(self, step_data):
        cfg = rb.ForestConfig(n_trees=1, max_depth=1, max_features=1,
                              min_samples_leaf=1, min_samples_split=2,
                              class_weight="none", seed=0)
        model = rb.fit_forest(step_data, cfg)
        contrib, bias = rb.tree_path_attribution(model, step_data.features)
        assert contrib.shape == (60, 1)
        assert np.any(contrib != 0.0)

    def test_additivity_identity(self, small_forest, forest_data):
        X = forest_data.features
        contrib, bias = rb.tree_path_attribution(small_forest, X)
        recon = bias + contrib.sum(axis=1)
        assert np.max(np.abs(recon - small_forest.predict(X))) < 1e-12

    def test_rejects_logreg(self, small_logreg):
        _, data, model = small_logreg
        with pytest.raises(ValueError, match="forest"):
            rb.tree_path_attribution(model, data.features)


class TestSerialization:
    def test_logreg_round_trip_exact(self, small_logreg):
        _, data, model = small_logreg
        doc = json.loads(json.dumps(predictor_to_json(model)))
        back = predictor_from_json(doc)
        assert np.array_equal(back.coef, model.coef)
        assert back.intercept == model.intercept
        assert np.array_equal(back.predict(data.features), model.predict(data.features))

    def test_forest_round_trip_exact(self, small_forest, forest_data):
        doc = json.loads(json.dumps(predictor_to_json(small_forest)))
        back = predictor_from_json(doc)
        assert np.array_equal(
            back.predict(forest_data.features),
            small_forest.predict(forest_data.features),
        )

    def test_fit_dispatch(self, forest_data):
        model = rb.fit(forest_data, rb.LogRegConfig(C=5.0, l1_ratio=0.1))
        assert model.kind == "logreg"
        with pytest.raises(TypeError):
            rb.fit(forest_data, object())


class TestBalancedWeights:
    def test_balanced_shifts_rare_class_probability(self, rng):
        X = rng.standard_normal((600, 2))
        y = (rng.random(600) < sigmoid(2.5 * X[:, 0] - 2.0)).astype(int)
        y[:2] = [0, 1]
        data = make_dataset(X, y)
        kw = dict(n_trees=20, max_depth=4, max_features=1,
                  min_samples_leaf=2, min_samples_split=4, seed=6)
        balanced = rb.fit_forest(data, rb.ForestConfig(class_weight="balanced", **kw))
        plain = rb.fit_forest(data, rb.ForestConfig(class_weight="none", **kw))
        assert balanced.predict(X).mean() > plain.predict(X).mean()
