"""Command-line front end: reproducible pipelines over a single config file.

Commands: rank, complexity, select, faithfulness, curves, synth. Every run is
a pure function of (config, seed): outputs carry no timestamps and re-running
overwrites byte-identical files. The resolved configuration (defaults filled
in) is echoed into the output directory for provenance.
"""

import argparse
import configparser
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import dataset as ds
from . import effects, faithfulness, models, rankings, selection
from .metrics import METRICS
from .util import derive_seed

__all__ = ["main"]

VALID_METHODS = (
    "backward_singlepass",
    "backward_multipass",
    "forward_singlepass",
    "forward_multipass",
    "ale_variance",
    "shapley",
    "sage",
    "lime",
    "coefficients",
    "gini",
    "tree_path",
)
LOGREG_ONLY = {"coefficients"}
FOREST_ONLY = {"gini", "tree_path"}


class ConfigError(Exception):
    pass


def _get(cfg, section, key, cast, default=None, required=False):
    try:
        raw = cfg.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if required:
            raise ConfigError(f"[{section}] {key}: required setting missing") from None
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _floats(raw):
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _strings(raw):
    return tuple(tok for tok in raw.replace(",", " ").split() if tok)


def _blocks(raw):
    """Parse 'i j k : rho ; ...' into ((indices), rho) tuples."""
    out = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        left, _, right = part.partition(":")
        if not right:
            raise ValueError(f"block '{part}' needs 'indices : value'")
        idx = tuple(int(tok) for tok in left.split())
        out.append((idx, float(right)))
    return tuple(out)


def _pairs(raw):
    out = []
    for idx, value in _blocks(raw):
        if len(idx) != 2:
            raise ValueError(f"interaction pair needs exactly 2 indices, got {idx}")
        out.append((idx[0], idx[1], value))
    return tuple(out)


@dataclasses.dataclass
class RunConfig:
    parser: configparser.ConfigParser
    seed: int
    output: str
    test_fraction: float
    dataset_kind: str
    csv_path: str
    csv_target: str
    synthetic: ds.SyntheticSpec
    model_kind: str
    model_cfg: object
    methods: tuple
    rank_metric: str
    rankings_data: str
    n_permute_singlepass: int
    n_permute_multipass: int
    shapley_samples: int
    sage_samples: int
    lime_perturbations: int
    n_explain: int
    n_bins: int
    top_k: int
    faithful_top3: tuple
    n_subsets: int
    experiment_metric: str
    k: int
    n_boot: int
    sel_C: float
    sel_cutoff: float
    sel_drop: tuple
    sel_n_boot: int
    complexity_n_boot: int


def load_run_config(path, seed_override=None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    seed = seed_override
    if seed is None:
        seed = _get(parser, "run", "seed", int, required=True)
    output = _get(parser, "run", "output", str, default="out")
    test_fraction = _get(parser, "run", "test_fraction", float, default=0.25)

    dataset_kind = _get(parser, "dataset", "kind", str, required=True)
    csv_path = csv_target = None
    synthetic = None
    if dataset_kind == "csv":
        csv_path = _get(parser, "dataset", "path", str, required=True)
        csv_target = _get(parser, "dataset", "target", str, required=True)
    elif dataset_kind == "synthetic":
        synthetic = ds.SyntheticSpec(
            n_features=_get(parser, "dataset", "n_features", int, required=True),
            n_samples=_get(parser, "dataset", "n_samples", int, required=True),
            signal_weights=_get(parser, "dataset", "signal_weights", _floats, required=True),
            noise_features=_get(parser, "dataset", "noise_features", int, default=0),
            correlation_blocks=_get(parser, "dataset", "correlation_blocks", _blocks, default=()),
            interaction_pairs=_get(parser, "dataset", "interaction_pairs", _pairs, default=()),
            bias=_get(parser, "dataset", "bias", float, default=0.0),
            seed=_get(parser, "dataset", "seed", int, default=derive_seed(seed, 101)),
        )
    else:
        raise ConfigError(
            f"[dataset] kind: expected 'csv' or 'synthetic', got '{dataset_kind}'"
        )

    model_kind = _get(parser, "model", "kind", str, default="logreg")
    if model_kind == "logreg":
        model_cfg = models.LogRegConfig(
            C=_get(parser, "model", "c", float, default=0.1),
            l1_ratio=_get(parser, "model", "l1_ratio", float, default=0.0001),
            max_iter=_get(parser, "model", "max_iter", int, default=1000),
            tol=_get(parser, "model", "tol", float, default=1e-6),
            seed=seed,
        )
    elif model_kind == "forest":
        model_cfg = models.ForestConfig(
            n_trees=_get(parser, "model", "n_trees", int, default=500),
            max_depth=_get(parser, "model", "max_depth", int, default=20),
            max_features=_get(parser, "model", "max_features", int, default=5),
            min_samples_leaf=_get(parser, "model", "min_samples_leaf", int, default=5),
            min_samples_split=_get(parser, "model", "min_samples_split", int, default=8),
            criterion=_get(parser, "model", "criterion", str, default="entropy"),
            class_weight=_get(parser, "model", "class_weight", str, default="balanced"),
            seed=seed,
        )
    else:
        raise ConfigError(
            f"[model] kind: expected 'logreg' or 'forest', got '{model_kind}'"
        )

    default_methods = (
        "backward_singlepass backward_multipass forward_singlepass "
        "forward_multipass ale_variance shapley sage lime "
        + ("coefficients" if model_kind == "logreg" else "gini tree_path")
    )
    methods = _get(parser, "rankings", "methods", _strings, default=_strings(default_methods))
    for m in methods:
        if m not in VALID_METHODS:
            raise ConfigError(
                f"[rankings] methods: unknown method '{m}'; "
                f"valid methods: {', '.join(VALID_METHODS)}"
            )
        if m in LOGREG_ONLY and model_kind != "logreg":
            raise ConfigError(f"[rankings] methods: '{m}' requires a logreg model")
        if m in FOREST_ONLY and model_kind != "forest":
            raise ConfigError(f"[rankings] methods: '{m}' requires a forest model")

    rank_metric = _get(parser, "rankings", "metric", str, default="naupdc")
    experiment_metric = _get(parser, "experiment", "metric", str, default="naupdc")
    for label, metric in (("rankings", rank_metric), ("experiment", experiment_metric)):
        if metric not in METRICS:
            raise ConfigError(
                f"[{label}] metric: unknown metric '{metric}'; valid: {sorted(METRICS)}"
            )
    rankings_data = _get(parser, "rankings", "data", str, default="train")
    if rankings_data not in ("train", "test", "full"):
        raise ConfigError(
            f"[rankings] data: expected train/test/full, got '{rankings_data}'"
        )

    return RunConfig(
        parser=parser,
        seed=seed,
        output=output,
        test_fraction=test_fraction,
        dataset_kind=dataset_kind,
        csv_path=csv_path,
        csv_target=csv_target,
        synthetic=synthetic,
        model_kind=model_kind,
        model_cfg=model_cfg,
        methods=methods,
        rank_metric=rank_metric,
        rankings_data=rankings_data,
        n_permute_singlepass=_get(parser, "rankings", "n_permute_singlepass", int, default=30),
        n_permute_multipass=_get(parser, "rankings", "n_permute_multipass", int, default=10),
        shapley_samples=_get(parser, "rankings", "shapley_samples", int, default=64),
        sage_samples=_get(parser, "rankings", "sage_samples", int, default=128),
        lime_perturbations=_get(parser, "rankings", "lime_perturbations", int, default=1000),
        n_explain=_get(parser, "rankings", "n_explain", int, default=100),
        n_bins=_get(parser, "rankings", "n_bins", int, default=30),
        top_k=_get(parser, "rankings", "top_k", int, default=10),
        faithful_top3=_get(parser, "rankings", "faithful_top3", _strings, default=()),
        n_subsets=_get(parser, "experiment", "n_subsets", int, default=5000),
        experiment_metric=experiment_metric,
        k=_get(parser, "experiment", "k", int, default=15),
        n_boot=_get(parser, "experiment", "n_boot", int, default=1000),
        sel_C=_get(parser, "selection", "c", float, default=0.0075),
        sel_cutoff=_get(parser, "selection", "cutoff", float, default=1e-5),
        sel_drop=_get(parser, "selection", "drop", _strings, default=()),
        sel_n_boot=_get(parser, "selection", "n_boot", int, default=1000),
        complexity_n_boot=_get(parser, "selection", "complexity_n_boot", int, default=100),
    )


def build_dataset(rc: RunConfig) -> ds.Dataset:
    if rc.dataset_kind == "csv":
        return ds.load_csv(rc.csv_path, rc.csv_target)
    return ds.generate(rc.synthetic)


class OutputWriter:
    """Tracks written files so a failed command can clean up after itself."""

    def __init__(self, out_dir, formats):
        self.out_dir = out_dir
        self.formats = formats
        self.written = []
        os.makedirs(out_dir, exist_ok=True)

    def wants(self, fmt):
        return self.formats == "all" or self.formats == fmt

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def write_json(self, name, obj):
        if not self.wants("json"):
            return
        p = self.path(name)
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.written.append(p)

    def write_csv(self, name, rows):
        if not self.wants("csv"):
            return
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in rows:
                writer.writerow(row)
        self.written.append(p)

    def write_text(self, name, text):
        p = self.path(name)
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(text)
        self.written.append(p)

    def save_figure(self, name, fig):
        if not self.wants("svg"):
            return
        import matplotlib
        p = self.path(name)
        fig.savefig(p, format="svg", metadata={"Date": None})
        self.written.append(p)

    def cleanup(self):
        for p in self.written:
            try:
                os.unlink(p)
            except OSError:
                pass


def _echo_config(rc: RunConfig, writer: OutputWriter, command: str):
    resolved = configparser.ConfigParser()
    resolved.read_dict(
        {
            section: dict(rc.parser.items(section))
            for section in rc.parser.sections()
        }
    )
    if not resolved.has_section("run"):
        resolved.add_section("run")
    resolved.set("run", "seed", str(rc.seed))
    resolved.set("run", "output", rc.output)
    resolved.set("run", "test_fraction", str(rc.test_fraction))
    resolved.set("run", "command", command)
    import io

    buf = io.StringIO()
    resolved.write(buf)
    writer.write_text("resolved_config.ini", buf.getvalue())


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "rankbench"
    import matplotlib.pyplot as plt

    return plt


def _split_for_rankings(rc, data):
    train, test = ds.split(data, rc.test_fraction, derive_seed(rc.seed, 0))
    return {"train": train, "test": test, "full": data}[rc.rankings_data], train


def _compute_cards(model, data, rc: RunConfig):
    builders = {
        "backward_singlepass": lambda: rankings.permutation_importance(
            model, data, metric=rc.rank_metric, direction="backward",
            mode="singlepass", n_permute=rc.n_permute_singlepass, seed=rc.seed),
        "backward_multipass": lambda: rankings.permutation_importance(
            model, data, metric=rc.rank_metric, direction="backward",
            mode="multipass", n_permute=rc.n_permute_multipass, seed=rc.seed),
        "forward_singlepass": lambda: rankings.permutation_importance(
            model, data, metric=rc.rank_metric, direction="forward",
            mode="singlepass", n_permute=rc.n_permute_singlepass, seed=rc.seed),
        "forward_multipass": lambda: rankings.permutation_importance(
            model, data, metric=rc.rank_metric, direction="forward",
            mode="multipass", n_permute=rc.n_permute_multipass, seed=rc.seed),
        "ale_variance": lambda: rankings.ale_variance_ranking(model, data, n_bins=rc.n_bins),
        "shapley": lambda: rankings.shapley_relevance(
            model, data, n_samples=rc.shapley_samples, seed=rc.seed,
            n_explain=rc.n_explain),
        "sage": lambda: rankings.sage_importance(
            model, data, n_samples=rc.sage_samples, seed=rc.seed),
        "lime": lambda: rankings.lime_relevance(
            model, data, n_perturb=rc.lime_perturbations, seed=rc.seed,
            n_explain=rc.n_explain),
        "coefficients": lambda: rankings.coefficient_ranking(model),
        "gini": lambda: rankings.gini_ranking(model),
        "tree_path": lambda: rankings.tree_path_ranking(model, data),
    }
    return [builders[m]() for m in rc.methods]


def cmd_rank(rc: RunConfig, writer: OutputWriter):
    data = build_dataset(rc)
    rank_data, train = _split_for_rankings(rc, data)
    model = models.fit(train, rc.model_cfg)
    cards = _compute_cards(model, rank_data, rc)
    agg = rankings.aggregate(cards)
    top_k = min(rc.top_k, data.n_features)
    sigma_bar = rankings.rank_uncertainty(agg, top_k)

    writer.write_json("scorecards.json", [c.to_json() for c in cards])
    for card in cards:
        writer.write_csv(f"scorecard_{card.method}.csv", card.to_csv_rows())
    writer.write_json("aggregated.json", agg.to_json())
    writer.write_csv("aggregated.csv", agg.to_csv_rows())
    uncertainty = {
        "rank_uncertainty": sigma_bar,
        "top_k": top_k,
        "n_methods": len(cards),
    }
    if rc.faithful_top3:
        uncertainty["uncertainty_ratio"] = rankings.uncertainty_ratio(
            cards, rc.faithful_top3, top_k
        )
        uncertainty["faithful_top3"] = list(rc.faithful_top3)
    writer.write_json("rank_uncertainty.json", uncertainty)

    if writer.wants("svg"):
        plt = _pyplot()
        order = np.argsort(agg.median)
        names = [agg.feature_names[i] for i in order]
        med = agg.median[order]
        iqr = agg.iqr[order]
        fig, ax = plt.subplots(figsize=(7, max(3, 0.3 * len(names))))
        ypos = np.arange(len(names))[::-1]
        ax.barh(ypos, med, xerr=iqr / 2, color="#4878a8", alpha=0.8, capsize=2)
        ax.set_yticks(ypos)
        ax.set_yticklabels(names, fontsize=8)
        ax.set_xlabel("median rank (whiskers: IQR)")
        ax.set_title(f"median feature ranking, sigma_bar={sigma_bar:.3f}")
        fig.tight_layout()
        writer.save_figure("rankings.svg", fig)
        plt.close(fig)
        if rc.faithful_top3:
            fig, ax = plt.subplots(figsize=(4, 3))
            num = rankings.rank_uncertainty(
                rankings.aggregate([c for c in cards if c.method in rc.faithful_top3]),
                top_k,
            )
            ratio = uncertainty["uncertainty_ratio"]
            ax.bar([0, 1], [num, num / ratio if ratio else 0.0],
                   color=["#2a9d8f", "#888888"])
            ax.set_xticks([0, 1])
            ax.set_xticklabels(["chosen trio", "mean over trios"], fontsize=8)
            ax.set_ylabel("rank uncertainty")
            ax.set_title(f"uncertainty ratio = {ratio:.3f}")
            fig.tight_layout()
            writer.save_figure("uncertainty_ratio.svg", fig)
            plt.close(fig)


def cmd_complexity(rc: RunConfig, writer: OutputWriter):
    data = build_dataset(rc)
    train, _ = ds.split(data, rc.test_fraction, derive_seed(rc.seed, 0))
    model = models.fit(train, rc.model_cfg)
    report = effects.complexity_report(
        model, train, n_bins=rc.n_bins, n_boot=rc.complexity_n_boot,
        seed=derive_seed(rc.seed, 1),
    )
    curves = effects.compute_all_ale(model, train, n_bins=rc.n_bins)
    writer.write_json("complexity.json", report.to_json())
    writer.write_json("ale_curves.json", [c.to_json() for c in curves])
    rows = [("feature", "bin_center", "value")]
    for c in curves:
        for center, value in zip(c.bin_centers, c.values):
            rows.append((c.feature, f"{center:.10g}", f"{value:.10g}"))
    writer.write_csv("ale_curves.csv", rows)

    if writer.wants("svg"):
        plt = _pyplot()
        n = len(curves)
        cols = min(4, n)
        rows_n = (n + cols - 1) // cols
        fig, axes = plt.subplots(rows_n, cols, figsize=(3 * cols, 2.2 * rows_n),
                                 squeeze=False)
        for k, curve in enumerate(curves):
            ax = axes[k // cols][k % cols]
            ax.plot(curve.bin_centers, curve.values, color="#4878a8")
            ax.axhline(0.0, color="#999999", lw=0.6)
            ax.set_title(curve.feature, fontsize=8)
        for k in range(n, rows_n * cols):
            axes[k // cols][k % cols].axis("off")
        fig.suptitle(
            f"first-order effects: IAS={report.ias_mean:.3f}, MEC={report.mec_mean:.2f}"
        )
        fig.tight_layout()
        writer.save_figure("ale_curves.svg", fig)
        plt.close(fig)


def cmd_select(rc: RunConfig, writer: OutputWriter):
    data = build_dataset(rc)
    filtered = selection.manual_filter(data, rc.sel_drop)
    retained = selection.l1_select(
        filtered, C=rc.sel_C, cutoff=rc.sel_cutoff, seed=rc.seed
    )
    reduced = ds.subset(data, retained)
    report = selection.compare_models(
        data, reduced, rc.model_cfg, rc.model_cfg,
        n_boot=rc.sel_n_boot, seed=rc.seed, test_fraction=rc.test_fraction,
        complexity_n_boot=rc.complexity_n_boot, n_bins=rc.n_bins,
        dropped_manual=rc.sel_drop, C=rc.sel_C, cutoff=rc.sel_cutoff,
    )
    writer.write_json("selection.json", report.to_json())

    if writer.wants("svg"):
        plt = _pyplot()
        labels = list(METRICS) + ["ias", "mec-1"]
        full_vals = [report.metrics_full[m] for m in METRICS] + [
            report.complexity_full.ias_mean,
            report.complexity_full.mec_mean - 1.0,
        ]
        red_vals = [report.metrics_reduced[m] for m in METRICS] + [
            report.complexity_reduced.ias_mean,
            report.complexity_reduced.mec_mean - 1.0,
        ]
        x = np.arange(len(labels))
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.bar(x - 0.2, full_vals, width=0.4, label="full", color="#888888")
        ax.bar(x + 0.2, red_vals, width=0.4, label="reduced", color="#2a9d8f")
        ax.set_xticks(x)
        ax.set_xticklabels(labels)
        ax.legend()
        ax.set_title(
            f"full ({len(data.feature_names)}) vs reduced ({len(retained)}) features"
        )
        fig.tight_layout()
        writer.save_figure("selection.svg", fig)
        plt.close(fig)


def cmd_faithfulness(rc: RunConfig, writer: OutputWriter, n_workers: int = 1):
    data = build_dataset(rc)
    rank_data, train = _split_for_rankings(rc, data)
    model = models.fit(train, rc.model_cfg)
    cards = _compute_cards(model, rank_data, rc)
    report = faithfulness.run_experiment(
        data, rc.model_cfg, cards,
        n_subsets=rc.n_subsets, metric=rc.experiment_metric, seed=rc.seed,
        test_fraction=rc.test_fraction, n_workers=n_workers,
    )
    writer.write_json("faithfulness.json", report.to_json())
    writer.write_csv("faithfulness.csv", report.to_csv_rows())
    curve = faithfulness.pareto_curve(report)
    writer.write_json(
        "pareto.json",
        [
            {"subset_size": s, "mean": m, "p10": lo, "p90": hi}
            for s, m, lo, hi in curve
        ],
    )

    if writer.wants("svg"):
        plt = _pyplot()
        methods = report.methods()
        perf = np.array([r.performance for r in report.records])
        cols = min(3, len(methods))
        rows_n = (len(methods) + cols - 1) // cols
        fig, axes = plt.subplots(rows_n, cols, figsize=(3.2 * cols, 2.6 * rows_n),
                                 squeeze=False)
        for k, m in enumerate(methods):
            ax = axes[k // cols][k % cols]
            totals = np.array([r.scaled_importance[m] for r in report.records])
            ax.hexbin(totals, perf, gridsize=24, cmap="Blues", mincnt=1)
            st = report.fit_stats[m]
            ax.set_title(
                f"{m}\nR2={st.r2:.2f} tau={st.kendall_tau:.2f}", fontsize=8
            )
        for k in range(len(methods), rows_n * cols):
            axes[k // cols][k % cols].axis("off")
        fig.suptitle(f"total importance vs {report.metric} of retrained models")
        fig.tight_layout()
        writer.save_figure("faithfulness.svg", fig)
        plt.close(fig)

        sizes = [c[0] for c in curve]
        means = [c[1] for c in curve]
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.fill_between(sizes, [c[2] for c in curve], [c[3] for c in curve],
                        alpha=0.25, color="#4878a8")
        ax.plot(sizes, means, marker="o", color="#4878a8")
        ax.set_xlabel("subset size")
        ax.set_ylabel(report.metric)
        fig.tight_layout()
        writer.save_figure("pareto.svg", fig)
        plt.close(fig)


def cmd_curves(rc: RunConfig, writer: OutputWriter):
    data = build_dataset(rc)
    rank_data, train = _split_for_rankings(rc, data)
    model = models.fit(train, rc.model_cfg)
    cards = _compute_cards(model, rank_data, rc)
    k = min(rc.k, data.n_features)

    results = {}
    for card in cards:
        delta, ci = faithfulness.topk_bottomk(
            data, rc.model_cfg, card, k=k, metric=rc.experiment_metric,
            n_boot=rc.n_boot, seed=rc.seed, test_fraction=rc.test_fraction,
        )
        best, worst = faithfulness.incremental_curves(
            data, rc.model_cfg, card, k_max=k, metric=rc.experiment_metric,
            seed=rc.seed, test_fraction=rc.test_fraction,
        )
        results[card.method] = {
            "topk_delta": delta,
            "topk_ci": list(ci),
            "best_curve": best.tolist(),
            "worst_curve": worst.tolist(),
            "k": k,
        }
    writer.write_json("curves.json", results)
    rows = [("method", "k", "best", "worst")]
    for m, r in results.items():
        for i, (b, w) in enumerate(zip(r["best_curve"], r["worst_curve"]), start=1):
            rows.append((m, str(i), f"{b:.10g}", f"{w:.10g}"))
    writer.write_csv("curves.csv", rows)

    if writer.wants("svg"):
        plt = _pyplot()
        methods = list(results)
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        ks = np.arange(1, k + 1)
        cmap = plt.get_cmap("tab10")
        for i, m in enumerate(methods):
            axes[0].plot(ks, results[m]["best_curve"], color=cmap(i % 10), label=m)
            axes[1].plot(ks, results[m]["worst_curve"], color=cmap(i % 10), label=m)
        axes[0].set_title("top features first")
        axes[1].set_title("worst features first")
        for ax in axes:
            ax.set_xlabel("features used")
            ax.set_ylabel(rc.experiment_metric)
        axes[0].legend(fontsize=6)
        fig.tight_layout()
        writer.save_figure("incremental_curves.svg", fig)
        plt.close(fig)

        fig, ax = plt.subplots(figsize=(6, 3.2))
        deltas = [results[m]["topk_delta"] for m in methods]
        los = [results[m]["topk_delta"] - results[m]["topk_ci"][0] for m in methods]
        his = [results[m]["topk_ci"][1] - results[m]["topk_delta"] for m in methods]
        ax.bar(np.arange(len(methods)), deltas, yerr=[los, his], capsize=3,
               color="#4878a8")
        ax.set_xticks(np.arange(len(methods)))
        ax.set_xticklabels(methods, rotation=30, ha="right", fontsize=7)
        ax.axhline(0.0, color="#444444", lw=0.8)
        ax.set_ylabel(f"{rc.experiment_metric}(top {k}) - (bottom {k})")
        fig.tight_layout()
        writer.save_figure("topk_delta.svg", fig)
        plt.close(fig)


def cmd_synth(rc: RunConfig, writer: OutputWriter):
    if rc.dataset_kind != "synthetic":
        raise ConfigError("[dataset] kind: synth command needs kind = synthetic")
    spec = rc.synthetic
    data = ds.generate(spec)
    rows = [list(data.feature_names) + ["y"]]
    for i in range(data.n_rows):
        rows.append([f"{v!r}" for v in data.features[i]] + [str(int(data.target[i]))])
    writer.write_csv("synthetic.csv", rows)
    writer.write_json(
        "ground_truth.json",
        {
            "feature_names": list(data.feature_names),
            "true_weights": spec.true_weights().tolist(),
            "interaction_pairs": [list(p) for p in spec.interaction_pairs],
            "bias": spec.bias,
            "base_rate": data.base_rate,
            "seed": spec.seed,
        },
    )


COMMANDS = {
    "rank": cmd_rank,
    "complexity": cmd_complexity,
    "select": cmd_select,
    "faithfulness": cmd_faithfulness,
    "curves": cmd_curves,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rankbench",
        description="Feature-ranking explanations and faithfulness benchmarks.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="root seed (overrides config)")
    parser.add_argument(
        "--workers", type=int, default=os.cpu_count(),
        help="worker processes for subset retraining",
    )
    parser.add_argument(
        "--format", choices=("json", "csv", "svg", "all"), default="all"
    )
    args = parser.parse_args(argv)

    try:
        rc = load_run_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        rc.output = args.out

    writer = OutputWriter(rc.output, args.format)
    try:
        _echo_config(rc, writer, args.command)
        if args.command == "faithfulness":
            cmd_faithfulness(rc, writer, n_workers=max(1, args.workers))
        else:
            COMMANDS[args.command](rc, writer)
    except ConfigError as exc:
        writer.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        writer.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
