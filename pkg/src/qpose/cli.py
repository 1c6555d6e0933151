"""Command-line experiment driver.

Subcommands chain into the usual pipeline:

    qpose gen          synthetic dataset CSV with a controllable domain shift
    qpose train        pretrain a model on labeled source samples
    qpose transfer     few-shot fine-tuning on target labels, repeated
    qpose eval         accuracy / confusion / ROC-AUC report for a checkpoint
    qpose curve        accuracy vs number of labeled training samples
    qpose make-figures the whole pipeline on the committed fixture settings

Every subcommand takes --seed (all randomness derives from it) and writes a
metadata document that suffices to re-run it bit-identically. Exit code 0 on
success; on failure a JSON error document goes to stderr and the exit code
is nonzero. --out-dir defaults to $QPOSE_OUT_DIR or ./qpose_out.

Heavy imports stay inside the handlers so --deterministic can pin the BLAS
thread count before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

OUT_DIR_ENV = "QPOSE_OUT_DIR"


def _force_single_thread() -> None:
    # must happen before numpy is first imported anywhere in the process
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS"):
        os.environ.setdefault(var, "1")


def _out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "qpose_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _shift_from_args(args):
    from .data import ShiftSpec

    spec = ShiftSpec(
        mean_offset_scale=args.offset_scale,
        feature_gain_spread=args.gain_spread,
        noise_sigma_source=args.noise_source,
        noise_sigma_target=args.noise_target,
        seed=args.seed,
    )
    return spec.scaled(args.shift)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    parser.add_argument("--out-dir", default=None,
                        help=f"output directory (default: ${OUT_DIR_ENV} or ./qpose_out)")
    parser.add_argument("--deterministic", action="store_true",
                        help="pin numerics to one thread for bit-identical reruns")


def _add_shift_args(parser: argparse.ArgumentParser) -> None:
    from .data import ShiftSpec

    d = ShiftSpec()
    parser.add_argument("--shift", type=float, default=1.0,
                        help="domain-shift scale: 0 disables the shift, 1 is the default strength")
    parser.add_argument("--offset-scale", type=float, default=d.mean_offset_scale)
    parser.add_argument("--gain-spread", type=float, default=d.feature_gain_spread)
    parser.add_argument("--noise-source", type=float, default=d.noise_sigma_source)
    parser.add_argument("--noise-target", type=float, default=d.noise_sigma_target)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpose",
        description="Hybrid quantum-classical pose recognition from Wi-Fi beam SNRs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic beam-SNR dataset CSV")
    _add_common(p)
    _add_shift_args(p)
    p.add_argument("--n-source", type=int, default=800)
    p.add_argument("--n-target", type=int, default=1040)
    p.add_argument("--out", default=None, help="CSV path (default OUT_DIR/dataset.csv)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="pretrain a model on the labeled source split")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset CSV from `gen` (or external)")
    p.add_argument("--model", required=True, choices=["dnn", "qnn", "knn", "gnb"])
    p.add_argument("--qubits", type=int, default=10)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--k", type=int, default=5, help="neighbors for knn")
    p.add_argument("--labeled-fraction", type=float, default=None,
                   help="fraction of source samples labeled for training (default 0.5)")
    p.add_argument("--labeled-count", type=int, default=None)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="few-shot fine-tuning on target labels")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--samples", type=int, default=None, help="labeled target sample count")
    p.add_argument("--fraction", type=float, default=None,
                   help="labeled target fraction (default 0.10)")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--mode", choices=["resample", "reshuffle"], default="resample",
                   help="resample the transfer subset per repeat, or reshuffle batches only")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset domain")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--domain", choices=["source", "target"], default="target")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="accuracy vs labeled training sample count")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=["dnn", "qnn", "knn", "gnb"])
    p.add_argument("--grid", required=True,
                   help="comma-separated labeled sample counts, e.g. 52,104,208")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--eval-domain", choices=["source", "target"], default="target")
    p.add_argument("--qubits", type=int, default=10)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("make-figures",
                       help="gen -> train -> transfer -> eval -> curve on fixture settings")
    _add_common(p)
    p.add_argument("--quick", action="store_true",
                   help="tiny sizes for smoke testing (not the committed fixture)")
    p.set_defaults(func=cmd_make_figures, seed=FIXTURE_SEED)

    return parser


# ---------------------------------------------------------------------------
# Shared helpers.
# ---------------------------------------------------------------------------


def _load_dataset(path):
    from .data import load_csv

    return load_csv(path)


def _train_model(dataset, args):
    """Split source, fit the normalizer on the labeled part, train."""
    from .baselines import GnbModel, KnnModel
    from .data import Domain, FeatureNormalizer, split_labeled
    from .neural import DnnModel
    from .quantum_classifier import DressedQnnModel, StdAnsatz
    from .training import TrainConfig, pretrain

    fraction = args.labeled_fraction
    count = getattr(args, "labeled_count", None)
    if fraction is None and count is None:
        fraction = 0.5
    split = split_labeled(dataset, Domain.SOURCE, fraction=fraction, count=count, seed=args.seed)
    if not split.labeled:
        raise ValueError("labeled source split is empty; raise --labeled-fraction")
    normalizer = FeatureNormalizer.fit(split.labeled)

    trace = None
    if args.model == "knn":
        model = KnnModel.fit(split.labeled, normalizer, k=args.k)
    elif args.model == "gnb":
        model = GnbModel.fit(split.labeled, normalizer)
    else:
        config = TrainConfig(
            batch_size=args.batch_size,
            epochs=args.epochs,
            lr=args.lr,
            weight_decay=args.weight_decay,
            seed=args.seed,
        )
        if args.model == "dnn":
            model = DnnModel.create(normalizer, seed=args.seed)
        else:
            ansatz = StdAnsatz(n_qubits=args.qubits, n_layers=args.layers)
            model = DressedQnnModel.create(normalizer, ansatz=ansatz, seed=args.seed)
        trace = pretrain(model, split.labeled, config, eval_samples=split.evaluation or None)
    return model, split, trace


def _param_summary(model) -> dict:
    from .neural import DnnModel
    from .quantum_classifier import DressedQnnModel

    if isinstance(model, DressedQnnModel):
        return {
            "quantum_params": model.n_quantum_params(),
            "classical_params": model.n_classical_params(),
            "total_params": model.n_params(),
        }
    if isinstance(model, DnnModel):
        return {"total_params": model.n_params()}
    return {}


def _eval_dict(model, samples) -> dict:
    from .evaluation import evaluate

    return evaluate(model, samples).to_dict()


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    from .data import Domain, dataset_sha256, generate_synthetic, write_csv
    from .serialize import write_run_metadata

    out_dir = _out_dir(args)
    shift = _shift_from_args(args)
    dataset = generate_synthetic(args.n_source, args.n_target, shift)
    out = Path(args.out) if args.out else out_dir / "dataset.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, out)

    src = dataset.class_counts(Domain.SOURCE)
    tgt = dataset.class_counts(Domain.TARGET)
    print(f"wrote {out} ({len(dataset.samples)} samples)")
    print("pose  source  target")
    for c in range(len(src)):
        print(f"{c:4d}  {src[c]:6d}  {tgt[c]:6d}")
    print(f"sum   {src.sum():6d}  {tgt.sum():6d}")

    write_run_metadata(
        out_dir / "gen_metadata.json",
        command="gen",
        config={
            "n_source": args.n_source,
            "n_target": args.n_target,
            "shift_scale": args.shift,
            "shift_spec": vars(shift),
            "out": str(out),
        },
        seed=args.seed,
        dataset_hash=dataset_sha256(dataset),
        deterministic=args.deterministic,
        metrics={"n_source": int(src.sum()), "n_target": int(tgt.sum())},
    )
    return 0


def cmd_train(args) -> int:
    from .data import Domain, dataset_sha256
    from .serialize import save_checkpoint, write_run_metadata

    out_dir = _out_dir(args)
    dataset = _load_dataset(args.data)
    model, split, trace = _train_model(dataset, args)

    summary = {"model": args.model} | _param_summary(model)
    if split.evaluation:
        summary["in_domain"] = _eval_dict(model, split.evaluation)
    target = dataset.by_domain(Domain.TARGET)
    if target:
        summary["cross_domain"] = _eval_dict(model, target)
    if trace is not None:
        summary["final_train_loss"] = trace.losses[-1] if trace.losses else None
        summary["epochs_run"] = len(trace.records)

    save_checkpoint(model, out_dir / "checkpoint.json")
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    write_run_metadata(
        out_dir / "metadata.json",
        command="train",
        config={k: v for k, v in vars(args).items() if k != "func"},
        seed=args.seed,
        dataset_hash=dataset_sha256(dataset),
        deterministic=args.deterministic,
        metrics={
            "in_domain_accuracy": summary.get("in_domain", {}).get("accuracy"),
            "cross_domain_accuracy": summary.get("cross_domain", {}).get("accuracy"),
        },
    )
    acc = summary.get("in_domain", {}).get("accuracy")
    print(f"trained {args.model}: params={summary.get('total_params')}"
          f" in-domain accuracy={acc}")
    return 0


def cmd_transfer(args) -> int:
    from .data import dataset_sha256
    from .serialize import load_checkpoint, save_checkpoint, write_run_metadata
    from .training import TransferConfig, run_repeated

    out_dir = _out_dir(args)
    dataset = _load_dataset(args.data)
    model = load_checkpoint(args.checkpoint)
    if not hasattr(model, "transfer_frozen"):
        raise ValueError(f"model kind `{model.kind}` does not support fine-tuning")

    samples = args.samples
    fraction = args.fraction
    if samples is None and fraction is None:
        fraction = 0.10
    config = TransferConfig(
        n_transfer=samples,
        transfer_fraction=fraction,
        batch_size=args.batch_size,
        epochs=args.epochs,
        lr=args.lr,
        weight_decay=args.weight_decay,
        seed=args.seed,
        resample=args.mode == "resample",
    )
    result, models = run_repeated(model, dataset, config, n_repeats=args.repeats)

    save_checkpoint(models[0], out_dir / "transfer_checkpoint.json")
    doc = result.to_dict() | {"mode": args.mode}
    (out_dir / "transfer_summary.json").write_text(
        json.dumps(doc, indent=2) + "\n", encoding="utf-8"
    )
    write_run_metadata(
        out_dir / "metadata.json",
        command="transfer",
        config={k: v for k, v in vars(args).items() if k != "func"},
        seed=args.seed,
        dataset_hash=dataset_sha256(dataset),
        deterministic=args.deterministic,
        metrics={
            "pre_accuracy_mean": doc["pre_accuracy_mean"],
            "post_accuracy_mean": doc["post_accuracy_mean"],
            "post_accuracy_std": doc["post_accuracy_std"],
        },
    )
    print(f"transfer {model.kind}: pre={doc['pre_accuracy_mean']:.4f}"
          f" post={doc['post_accuracy_mean']:.4f} +- {doc['post_accuracy_std']:.4f}"
          f" over {args.repeats} repeats")
    return 0


def cmd_eval(args) -> int:
    from .data import Domain, dataset_sha256
    from .evaluation import evaluate, write_confusion_csv, write_roc_csvs, write_summary_json
    from .serialize import load_checkpoint, write_run_metadata

    out_dir = _out_dir(args)
    dataset = _load_dataset(args.data)
    model = load_checkpoint(args.checkpoint)
    samples = dataset.by_domain(Domain(args.domain))
    if not samples:
        raise ValueError(f"dataset has no {args.domain} samples")
    report = evaluate(model, samples)

    write_summary_json(report, out_dir / "eval_summary.json")
    write_confusion_csv(report, out_dir / "confusion.csv")
    write_roc_csvs(report, out_dir)
    write_run_metadata(
        out_dir / "metadata.json",
        command="eval",
        config={k: v for k, v in vars(args).items() if k != "func"},
        seed=args.seed,
        dataset_hash=dataset_sha256(dataset),
        deterministic=args.deterministic,
        metrics={
            "accuracy": report.accuracy,
            "macro_auc": report.macro_auc,
            "micro_auc": report.micro_auc,
        },
    )
    print(f"eval {model.kind} on {args.domain}: accuracy={report.accuracy:.4f}"
          f" macro_auc={report.macro_auc:.4f} micro_auc={report.micro_auc:.4f}")
    return 0


def _curve_factory(args):
    from .baselines import GnbModel, KnnModel
    from .data import FeatureNormalizer
    from .neural import DnnModel
    from .quantum_classifier import DressedQnnModel, StdAnsatz
    from .training import TrainConfig, pretrain

    def factory(samples, seed):
        normalizer = FeatureNormalizer.fit(samples)
        if args.model == "knn":
            k = min(args.k, len(samples))
            return KnnModel.fit(samples, normalizer, k=k)
        if args.model == "gnb":
            return GnbModel.fit(samples, normalizer)
        config = TrainConfig(
            batch_size=args.batch_size,
            epochs=args.epochs,
            lr=args.lr,
            weight_decay=args.weight_decay,
            seed=seed,
        )
        if args.model == "dnn":
            model = DnnModel.create(normalizer, seed=seed)
        else:
            ansatz = StdAnsatz(n_qubits=args.qubits, n_layers=args.layers)
            model = DressedQnnModel.create(normalizer, ansatz=ansatz, seed=seed)
        pretrain(model, samples, config)
        return model

    return factory


def cmd_curve(args) -> int:
    from .data import Domain, dataset_sha256, split_labeled
    from .evaluation import accuracy_vs_samples_curve, write_curve_csv
    from .serialize import write_run_metadata

    out_dir = _out_dir(args)
    dataset = _load_dataset(args.data)
    grid = [int(v) for v in args.grid.split(",") if v.strip()]
    if not grid:
        raise ValueError("empty --grid")

    if args.eval_domain == "target":
        pool = dataset.by_domain(Domain.SOURCE)
        eval_samples = dataset.by_domain(Domain.TARGET)
    else:
        # in-domain curve: hold out a fixed quarter of the source domain
        split = split_labeled(dataset, Domain.SOURCE, fraction=0.75, seed=args.seed)
        pool, eval_samples = split.labeled, split.evaluation

    points = accuracy_vs_samples_curve(
        _curve_factory(args), pool, eval_samples, grid,
        seed=args.seed, n_repeats=args.repeats,
    )
    write_curve_csv(points, out_dir / "curve.csv")
    write_run_metadata(
        out_dir / "metadata.json",
        command="curve",
        config={k: v for k, v in vars(args).items() if k != "func"},
        seed=args.seed,
        dataset_hash=dataset_sha256(dataset),
        deterministic=args.deterministic,
        metrics={str(p.n_labeled): p.mean_accuracy for p in points},
    )
    for p in points:
        print(f"n={p.n_labeled:5d} accuracy={p.mean_accuracy:.4f} +- {p.std_accuracy:.4f}")
    return 0


# ---------------------------------------------------------------------------
# The committed fixture pipeline.
# ---------------------------------------------------------------------------

# Committed fixture: seeds and sizes are part of the regression surface, so
# changing any value here invalidates the stored expectations in the tests.
FIXTURE_SEED = 7

FIXTURE = {
    "n_source": 800,
    "n_target": 1040,
    "labeled_fraction": 0.5,
    "dnn_epochs": 100,
    "qnn_epochs": 60,
    "transfer_fraction": 0.10,
    "transfer_epochs": 40,
    "repeats": 5,
    "curve_grid": [32, 64, 128, 256, 400],
}

QUICK = {
    "n_source": 160,
    "n_target": 160,
    "labeled_fraction": 0.5,
    "dnn_epochs": 10,
    "qnn_epochs": 3,
    "transfer_fraction": 0.10,
    "transfer_epochs": 2,
    "repeats": 2,
    "curve_grid": [16, 40],
}


def _run(argv) -> None:
    code = main(argv)
    if code != 0:
        raise RuntimeError(f"subcommand {argv[0]} failed with exit code {code}")


def cmd_make_figures(args) -> int:
    fx = QUICK if args.quick else FIXTURE
    out_dir = _out_dir(args)
    seed = args.seed
    det = ["--deterministic"] if args.deterministic else []
    data = str(out_dir / "dataset.csv")

    _run(["gen", "--seed", str(seed), "--n-source", str(fx["n_source"]),
          "--n-target", str(fx["n_target"]), "--out", data,
          "--out-dir", str(out_dir)] + det)

    for model in ("dnn", "qnn", "knn", "gnb"):
        epochs = fx["qnn_epochs"] if model == "qnn" else fx["dnn_epochs"]
        _run(["train", "--seed", str(seed), "--data", data, "--model", model,
              "--labeled-fraction", str(fx["labeled_fraction"]),
              "--epochs", str(epochs),
              "--out-dir", str(out_dir / model)] + det)

    for model in ("dnn", "qnn"):
        _run(["transfer", "--seed", str(seed), "--data", data,
              "--checkpoint", str(out_dir / model / "checkpoint.json"),
              "--fraction", str(fx["transfer_fraction"]),
              "--epochs", str(fx["transfer_epochs"]),
              "--repeats", str(fx["repeats"]),
              "--out-dir", str(out_dir / f"transfer_{model}")] + det)

    for model in ("dnn", "qnn"):
        _run(["eval", "--seed", str(seed), "--data", data,
              "--checkpoint", str(out_dir / model / "checkpoint.json"),
              "--domain", "target",
              "--out-dir", str(out_dir / f"eval_{model}")] + det)

    grid = ",".join(str(g) for g in fx["curve_grid"])
    for model in ("dnn", "knn"):
        _run(["curve", "--seed", str(seed), "--data", data, "--model", model,
              "--grid", grid, "--epochs", str(fx["dnn_epochs"]),
              "--out-dir", str(out_dir / f"curve_{model}")] + det)

    facts = {"fixture": fx, "seed": seed, "models": {}}
    for model in ("dnn", "qnn", "knn", "gnb"):
        summary = json.loads((out_dir / model / "summary.json").read_text(encoding="utf-8"))
        entry = {
            "params": {k: summary[k] for k in
                       ("total_params", "quantum_params", "classical_params") if k in summary},
            "in_domain_accuracy": summary["in_domain"]["accuracy"],
            "cross_domain_accuracy": summary["cross_domain"]["accuracy"],
            "cross_domain_macro_auc": summary["cross_domain"]["macro_auc"],
            "cross_domain_micro_auc": summary["cross_domain"]["micro_auc"],
        }
        if model in ("dnn", "qnn"):
            tdoc = json.loads(
                (out_dir / f"transfer_{model}" / "transfer_summary.json").read_text(
                    encoding="utf-8"
                )
            )
            entry["transfer"] = tdoc
        facts["models"][model] = entry
    (out_dir / "facts.json").write_text(json.dumps(facts, indent=2) + "\n", encoding="utf-8")
    print(f"fixture pipeline complete; aggregated numbers in {out_dir / 'facts.json'}")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if "--deterministic" in argv:
        _force_single_thread()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001  - boundary: report and exit nonzero
        doc = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(doc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
