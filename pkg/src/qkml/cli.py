"""Command-line pipeline driver.

Subcommands:

* ``ingest``    -- CSV or synthetic source -> cached numeric dataset.
* ``benchmark`` -- train/evaluate one model (dt, rf, svm, qsvm) on the
  cached dataset and write its classification report.
* ``kernel``    -- export the training Gram matrix as a QKGM container,
  or verify an existing container against its sidecar hashes.
* ``hybrid``    -- train classical vs quanvolutional arms and write the
  learning curves.
* ``report``    -- re-render a stored machine-readable report.

All artifacts are written atomically and deterministically: rerunning a
command with the same config, seed and inputs reproduces every byte
(the hybrid manifest's wall_time field is the one documented exception).
``QKML_LOG`` sets the log level; logs go to stderr so stdout stays
scriptable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, accel, dataset as dsmod, hybrid as hmod, metrics, qkernel, svm as svmmod, synth, trees
from .artifacts import write_json_atomic, write_text_atomic
from .config import ConfigError, load_config, resolve_config
from .feature_maps import FeatureMapSpec

log = logging.getLogger("qkml")


def _setup_logging() -> None:
    name = os.environ.get("QKML_LOG", "WARNING").strip().upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    if name and not hasattr(logging, name):
        log.warning("unknown QKML_LOG level %r, using WARNING", name)


# -- dataset plumbing ---------------------------------------------------------


def _feature_config(dcfg: dict) -> dsmod.FeatureConfig:
    path = dcfg.get("feature_config")
    if path is None:
        return dsmod.default_feature_config()
    return dsmod.FeatureConfig.from_json(Path(path).read_text())


def _build_dataset(dcfg: dict):
    """Materialise the configured source; returns (dataset, summary)."""
    if dcfg["csv"] is not None:
        fc = _feature_config(dcfg)
        table = dsmod.load_csv(dcfg["csv"])
        filtered, status_summary = dsmod.filter_status(table, fc.status_column)
        ds, eng_summary = dsmod.engineer_features(filtered, fc)
        summary = {"source": {"csv": dcfg["csv"]}, "status_filter": status_summary,
                   "engineering": eng_summary}
    else:
        synth_cfg = dcfg["synthetic"]
        ds = synth.make_synthetic(
            synth_cfg["name"],
            int(synth_cfg["n"]),
            noise=synth_cfg["noise"],
            seed=int(synth_cfg["seed"]),
        )
        summary = {"source": {"synthetic": synth_cfg}}
    if ds.n_rows == 0:
        raise ValueError("dataset pipeline produced zero rows")
    summary["n_rows"] = ds.n_rows
    summary["n_features"] = ds.features.shape[1]
    summary["class_counts"] = {
        "0": int((ds.labels == 0).sum()),
        "1": int((ds.labels == 1).sum()),
    }
    return ds, summary


def _dataset_cache_dir(out: Path) -> Path:
    return out / "dataset"


def _prepare_splits(ds: dsmod.Dataset, dcfg: dict):
    """Split, scale (fit on train only), select, subsample.

    Returns (train, test, info); the returned info feeds the report
    artifacts."""
    train, test = dsmod.train_test_split(
        ds, float(dcfg["test_fraction"]), int(dcfg["seed"]), bool(dcfg["stratify"])
    )
    params = dsmod.fit_scaler(train, dcfg["scaling"])
    train = dsmod.apply_scaler(params, train)
    test = dsmod.apply_scaler(params, test)
    if dcfg["feature_k"] is not None:
        idx = dsmod.select_features(train, int(dcfg["feature_k"]))
        train = dsmod.take_features(train, idx)
        test = dsmod.take_features(test, idx)
    if dcfg["subsample"] is not None and train.n_rows > int(dcfg["subsample"]):
        # Rows are already seed-shuffled by the split; take a prefix.
        keep = np.arange(int(dcfg["subsample"]))
        train = dsmod.Dataset(
            train.features[keep], train.labels[keep], train.feature_names
        )
    info = {
        "train_rows": train.n_rows,
        "test_rows": test.n_rows,
        "features": list(train.feature_names),
        "scaling": dcfg["scaling"],
    }
    return train, test, info


def _require_cached_dataset(out: Path) -> dsmod.Dataset:
    return dsmod.load_dataset(_dataset_cache_dir(out))


def _obtain_dataset(resolved: dict, out: Path) -> dsmod.Dataset:
    """Synthetic sources regenerate on the fly; CSV sources need `ingest`."""
    dcfg = resolved["dataset"]
    if dcfg["synthetic"] is not None:
        ds, _ = _build_dataset(dcfg)
        return ds
    return _require_cached_dataset(out)


def _feature_map_spec(model_cfg: dict, num_qubits: int) -> FeatureMapSpec:
    fm = (model_cfg or {}).get("feature_map") or {}
    return FeatureMapSpec(
        kind=fm.get("kind", "angle_y"),
        num_qubits=num_qubits,
        repetitions=fm.get("repetitions"),
        entanglement=fm.get("entanglement", "linear"),
    )


# -- commands -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    resolved, cfg_hash = resolve_config(
        load_config(args.config), args.seed, args.synthetic
    )
    out = Path(args.out)
    ds, summary = _build_dataset(resolved["dataset"])
    dsmod.save_dataset(_dataset_cache_dir(out), ds)
    summary = {"config_sha256": cfg_hash, "seed": resolved["dataset"]["seed"], **summary}
    write_json_atomic(out / "ingest_summary.json", summary)
    print(
        f"ingest: {ds.n_rows} rows x {ds.features.shape[1]} features "
        f"-> {_dataset_cache_dir(out)}"
    )
    return 0


def _train_and_predict(model_cfg: dict, train, test, seed: int, threads: int):
    """Returns (test predictions, train predictions, model info dict)."""
    name = model_cfg["name"]
    if name == "dt":
        cfg = trees.TreeConfig(
            max_depth=int(model_cfg["max_depth"]),
            min_samples_split=int(model_cfg["min_samples_split"]),
            min_samples_leaf=int(model_cfg["min_samples_leaf"]),
        )
        tree = trees.train_tree(train.features, train.labels, cfg)
        return (
            trees.predict_tree_batch(tree, test.features),
            trees.predict_tree_batch(tree, train.features),
            {"depth": trees.tree_depth(tree)},
        )
    if name == "rf":
        tcfg = trees.TreeConfig(
            max_depth=int(model_cfg["max_depth"]),
            min_samples_split=int(model_cfg["min_samples_split"]),
            min_samples_leaf=int(model_cfg["min_samples_leaf"]),
        )
        fcfg = trees.ForestConfig(
            n_trees=int(model_cfg["n_trees"]),
            mtry=model_cfg["mtry"],
            bootstrap=bool(model_cfg["bootstrap"]),
            seed=seed,
        )
        forest = trees.train_forest(train.features, train.labels, tcfg, fcfg, threads)
        return (
            trees.predict_forest_batch(forest, test.features),
            trees.predict_forest_batch(forest, train.features),
            {"n_trees": fcfg.n_trees},
        )
    if name == "svm":
        cw = model_cfg["class_weight"]
        cfg = svmmod.SvmConfig(
            c=float(model_cfg["c"]),
            tolerance=float(model_cfg["tolerance"]),
            max_passes=int(model_cfg["max_passes"]),
            kernel=model_cfg["kernel"],
            gamma=model_cfg["gamma"],
            class_weight=None if cw is None else tuple(cw),
        )
        model = svmmod.train_svm_features(train.features, train.labels, cfg, seed)
        return (
            svmmod.predict_features(model, test.features),
            svmmod.predict_features(model, train.features),
            {
                "support_vectors": int(model.support_indices.shape[0]),
                "kernel": cfg.kernel,
            },
        )
    if name == "qsvm":
        spec = _feature_map_spec(model_cfg, train.features.shape[1])
        gram = qkernel.gram_matrix(spec, train.features, threads=threads)
        cw = model_cfg["class_weight"]
        cfg = svmmod.SvmConfig(
            c=float(model_cfg["c"]),
            tolerance=float(model_cfg["tolerance"]),
            max_passes=int(model_cfg["max_passes"]),
            kernel=svmmod.PRECOMPUTED,
            class_weight=None if cw is None else tuple(cw),
        )
        model = svmmod.train_svm(gram, train.labels, cfg, seed)
        cross = qkernel.cross_kernel(spec, test.features, train.features, threads=threads)
        return (
            svmmod.predict(model, cross),
            svmmod.predict(model, gram.entries),
            {
                "support_vectors": int(model.support_indices.shape[0]),
                "feature_map": {
                    "kind": spec.kind,
                    "num_qubits": spec.num_qubits,
                    "repetitions": spec.repetitions,
                    "entanglement": spec.entanglement,
                },
            },
        )
    raise ConfigError(f"unknown model {name!r}")


def cmd_benchmark(args) -> int:
    resolved, cfg_hash = resolve_config(
        load_config(args.config), args.seed, args.synthetic
    )
    if "model" not in resolved:
        raise ConfigError("benchmark needs a 'model' section in the config")
    out = Path(args.out)
    ds = _obtain_dataset(resolved, out)
    train, test, info = _prepare_splits(ds, resolved["dataset"])
    seed = int(resolved["dataset"]["seed"])
    preds, train_preds, model_info = _train_and_predict(
        resolved["model"], train, test, seed, args.threads
    )
    cm = metrics.confusion_matrix(test.labels, preds)
    report = metrics.report_from_confusion(cm)
    rendered = metrics.render_report(report)
    doc = {
        "config_sha256": cfg_hash,
        "seed": seed,
        "model": resolved["model"],
        "model_info": model_info,
        "split": info,
        "train_accuracy": metrics.accuracy(train.labels, train_preds),
        "confusion": cm.counts.tolist(),
        "report": metrics.report_to_dict(report),
    }
    write_text_atomic(out / "report.txt", rendered)
    write_json_atomic(out / "report.json", doc)
    write_text_atomic(out / "confusion.csv", metrics.confusion_to_csv(cm))
    print(rendered, end="")
    return 0


def cmd_kernel(args) -> int:
    if args.verify is not None:
        meta = qkernel.verify_gram(args.verify)
        print(
            f"verify: ok ({args.verify}, n={meta['n']}, "
            f"map={meta['feature_map']['kind']})"
        )
        return 0
    resolved, cfg_hash = resolve_config(
        load_config(args.config), args.seed, args.synthetic
    )
    log.debug("kernel export under config %s", cfg_hash)
    out = Path(args.out)
    ds = _obtain_dataset(resolved, out)
    train, _, _ = _prepare_splits(ds, resolved["dataset"])
    spec = _feature_map_spec(resolved.get("model"), train.features.shape[1])
    gram = qkernel.gram_matrix(spec, train.features, threads=args.threads)
    export = Path(args.export) if args.export else out / "gram.qkgm"
    sidecar = qkernel.save_gram(
        export, gram, spec, input_sha256=qkernel.matrix_sha256(train.features)
    )
    qkernel.verify_gram(export)  # self-check the fresh container
    print(f"kernel: wrote {export} (n={gram.size}) + {sidecar.name}")
    return 0


def cmd_hybrid(args) -> int:
    resolved, cfg_hash = resolve_config(
        load_config(args.config), args.seed, args.synthetic
    )
    out = Path(args.out)
    ds = _obtain_dataset(resolved, out)
    train, test, info = _prepare_splits(ds, resolved["dataset"])
    hcfg = resolved["hybrid"]
    window = int(hcfg["quanv"]["window"])
    n_feats = train.features.shape[1]
    if window > n_feats:
        log.warning(
            "quanv window %d wider than %d features; clamping", window, n_feats
        )
        window = n_feats
    quanv = hmod.QuanvSpec(
        window=window,
        stride=int(hcfg["quanv"]["stride"]),
        layers=int(hcfg["quanv"]["layers"]),
        circuit_seed=int(hcfg["quanv"]["circuit_seed"]),
    )
    tcfg = hmod.TrainConfig(
        epochs=int(hcfg["train"]["epochs"]),
        learning_rate=float(hcfg["train"]["learning_rate"]),
        batch_size=int(hcfg["train"]["batch_size"]),
        seed=int(resolved["dataset"]["seed"]),
    )
    started = time.monotonic()
    arms = hmod.compare_hybrid(
        train, test, quanv, hcfg["hidden"], tcfg, threads=args.threads
    )
    wall = time.monotonic() - started
    write_text_atomic(out / "curves.csv", hmod.curves_csv(arms))
    manifest = {
        "config_sha256": cfg_hash,
        "seed": tcfg.seed,
        "split": info,
        "quanv": {**hcfg["quanv"], "window": quanv.window},
        "hidden": hcfg["hidden"],
        "train": hcfg["train"],
        "arms": {
            name: {
                "final_train_loss": arm["history"].train_loss[-1],
                "final_train_acc": arm["history"].train_acc[-1],
                "final_val_loss": arm["history"].val_loss[-1],
                "final_val_acc": arm["history"].val_acc[-1],
            }
            for name, arm in sorted(arms.items())
        },
        # Wall time varies run to run; every other field is deterministic.
        "wall_time_s": wall,
    }
    write_json_atomic(out / "hybrid_manifest.json", manifest)
    for name in sorted(arms):
        h = arms[name]["history"]
        print(
            f"hybrid[{name}]: train_acc={h.train_acc[-1]:.3f} "
            f"val_acc={h.val_acc[-1]:.3f}"
        )
    return 0


def cmd_report(args) -> int:
    import json

    doc = json.loads(Path(args.input).read_text())
    cm = metrics.ConfusionMatrix(np.asarray(doc["confusion"], dtype=np.int64))
    print(metrics.render_report(metrics.report_from_confusion(cm)), end="")
    return 0


# -- argument parsing ---------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", default=None, help="experiment config JSON")
    sub.add_argument("--out", default="qkml_out", help="artifact directory")
    sub.add_argument("--seed", type=int, default=None, help="override dataset seed")
    sub.add_argument(
        "--threads", type=int, default=1, help="worker threads (results identical)"
    )
    sub.add_argument(
        "--synthetic",
        default=None,
        choices=sorted(synth.generator_names()),
        help="use this synthetic source instead of the configured one",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkml",
        description="quantum-kernel ML pipeline (simulator, kernels, baselines)",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ingest", help="build and cache the numeric dataset")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("benchmark", help="train one model and write its report")
    _add_common(p)
    p.set_defaults(func=cmd_benchmark)

    p = subs.add_parser("kernel", help="export or verify a QKGM gram container")
    _add_common(p)
    p.add_argument("--export", default=None, help="container output path")
    p.add_argument("--verify", default=None, help="verify an existing container")
    p.set_defaults(func=cmd_kernel)

    p = subs.add_parser("hybrid", help="compare classical and quanvolutional arms")
    _add_common(p)
    p.set_defaults(func=cmd_hybrid)

    p = subs.add_parser("report", help="re-render a stored report.json")
    p.add_argument("--input", required=True, help="path to report.json")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if (
        args.command == "kernel"
        and args.verify is None
        and args.config is None
        and args.synthetic is None
    ):
        parser.error("kernel needs --config/--synthetic (export) or --verify PATH")
    if args.command in ("ingest", "benchmark", "hybrid") and (
        args.config is None and args.synthetic is None
    ):
        parser.error(f"{args.command} needs --config or --synthetic")
    log.debug("backend: %s", accel.active_backend())
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
