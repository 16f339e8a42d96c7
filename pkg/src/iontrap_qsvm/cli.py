"""Command-line front end.

    iontrap-qsvm dataset digits|graphs|inspect ...
    iontrap-qsvm kernel --dataset PATH|digits --rows train|test ...
    iontrap-qsvm train --kernel GRAM.csv --out model.json
    iontrap-qsvm predict --model model.json --kernel CROSS.csv
    iontrap-qsvm experiment digits|graphs [--grid] ...
    iontrap-qsvm transpile IN [--mode opt]
    iontrap-qsvm figure3

Exit codes: 0 success, 2 usage/configuration, 3 data, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, data, experiments, kernel, svm
from .circuit import TranspileMode, count_gates, format_circuit, optimize, parse_circuit, transpile_cx
from .encodings import DEFAULT_GAMMA
from .errors import ConfigurationError, ConvergenceError, DataError, GenerationError, QsvmError
from .noise import parse_noise_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


def shots_arg(text: str) -> int | None:
    if text.lower() == "exact":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'exact', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("shots must be positive")
    return value


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _add_kernel_flags(p, encoding=True):
    if encoding:
        p.add_argument("--encoding", choices=["ry", "rycx", "amplitude"], default="ry")
    p.add_argument("--mode", choices=[m.value for m in TranspileMode], default="nonopt")
    p.add_argument("--shots", type=shots_arg, default=None, metavar="N|exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", default="off", metavar="file|off|default")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--pin-diagonal", action="store_true",
                   help="set self-kernel entries to 1 instead of sampling them")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iontrap-qsvm", description="Quantum-kernel SVM toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="generate or inspect datasets")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)
    d = ds_sub.add_parser("digits", help="write the pinned digit split, or load an Optdigits file")
    d.add_argument("--source", help="Optdigits file (.tes/.tra, optionally .gz); default: pinned manifest")
    d.add_argument("--out")
    g = ds_sub.add_parser("graphs", help="generate a labeled ring-graph dataset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--train", type=int, default=20)
    g.add_argument("--test", type=int, default=10)
    g.add_argument("--out")
    i = ds_sub.add_parser("inspect", help="summarize a dataset file")
    i.add_argument("path")

    k = sub.add_parser("kernel", help="compute a kernel matrix as CSV")
    k.add_argument("--dataset", default="digits", help="dataset JSON, or 'digits' for the pinned split")
    k.add_argument("--rows", choices=["train", "test"], default="train",
                   help="row samples; columns are always the training samples")
    _add_kernel_flags(k)
    k.add_argument("--out")

    t = sub.add_parser("train", help="train an SVM on a precomputed Gram CSV")
    t.add_argument("--kernel", required=True)
    t.add_argument("--dataset", default="digits")
    t.add_argument("--C", type=float, default=1.0)
    t.add_argument("--out")

    pr = sub.add_parser("predict", help="predict labels from a cross-kernel CSV")
    pr.add_argument("--model", required=True)
    pr.add_argument("--kernel", required=True)
    pr.add_argument("--dataset", default="digits", help="used to score predictions when ids match")
    pr.add_argument("--out")

    ex = sub.add_parser("experiment", help="run a classification experiment")
    ex_sub = ex.add_subparsers(dest="experiment_command", required=True)
    ed = ex_sub.add_parser("digits")
    _add_kernel_flags(ed)
    ed.add_argument("--C", type=float, default=1.0)
    ed.add_argument("--manifest")
    ed.add_argument("--grid", action="store_true", help="run the full digits grid")
    ed.add_argument("--workers", type=int, default=1)
    ed.add_argument("--timing", action="store_true", help="include wall time in the JSON report")
    ed.add_argument("--out")
    eg = ex_sub.add_parser("graphs")
    eg.add_argument("--n", type=int, default=3)
    _add_kernel_flags(eg, encoding=False)
    eg.set_defaults(mode="opt")
    eg.add_argument("--C", type=float, default=1.0)
    eg.add_argument("--dataset", help="graph dataset JSON (default: generate from --seed)")
    eg.add_argument("--grid", action="store_true", help="run n=3,4,5 in both modes")
    eg.add_argument("--workers", type=int, default=1)
    eg.add_argument("--timing", action="store_true")
    eg.add_argument("--out")

    tr = sub.add_parser("transpile", help="lower CX to native gates; optionally optimize")
    tr.add_argument("input", help="circuit text file, or - for stdin")
    tr.add_argument("--mode", choices=[m.value for m in TranspileMode], default="opt")
    tr.add_argument("--out")

    f3 = sub.add_parser("figure3", help="mean classical infidelity per MS-gate count")
    f3.add_argument("--shots", type=shots_arg, default=experiments.GRAPH_SHOTS)
    f3.add_argument("--seed", type=int, default=0)
    f3.add_argument("--noise", default="default")
    f3.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    f3.add_argument("--by-source", action="store_true", help="one row per (n, mode) instead of per MS count")
    f3.add_argument("--out")
    return parser


# -- dataset ----------------------------------------------------------------

def _load_any(spec: str):
    if spec == "digits":
        return data.load_digit_manifest()
    return data.load_dataset(spec)


def cmd_dataset(args) -> int:
    if args.dataset_command == "digits":
        if args.source:
            samples = data.load_optdigits(args.source)
            ds = data.DigitDataset(tuple(samples), (), {"source": str(args.source)})
        else:
            ds = data.load_digit_manifest()
        _emit(json.dumps(ds.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    elif args.dataset_command == "graphs":
        ds = data.generate_graph_dataset(args.n, args.train, args.test, seed=args.seed)
        _emit(ds.to_json(), args.out)
    else:
        ds = data.load_dataset(args.path)
        print(_describe(ds))
    return EXIT_OK


def _describe(ds) -> str:
    def counts(items):
        labels = [label for _, label in items]
        return f"+1: {labels.count(1)}, -1: {labels.count(-1)}"

    if isinstance(ds, data.GraphDataset):
        lines = [f"graphs n={ds.n}", f"train {len(ds.train)} ({counts(ds.train)})",
                 f"test {len(ds.test)} ({counts(ds.test)})"]
        for g, label in ds.train + ds.test:
            weights = " ".join(f"{w:+.3f}" for w in g.weights[np.triu_indices(g.n, 1)] if w != 0)
            lines.append(f"  {g.id:<16} {label:+d}  {weights}")
    else:
        pairs = lambda split: [(s, s.label) for s in split]  # noqa: E731
        lines = ["digits", f"train {len(ds.train)} ({counts(pairs(ds.train))})",
                 f"test {len(ds.test)} ({counts(pairs(ds.test))})"]
        for s in ds.train + ds.test:
            lines.append(f"  {s.id:<20} {s.label:+d}  digit {s.digit}")
    return "\n".join(lines)


# -- kernel / train / predict -------------------------------------------------

def _samples(ds, split):
    """(features, ids, labels, encoding override) for one split."""
    items = ds.train if split == "train" else ds.test
    if isinstance(ds, data.GraphDataset):
        return [g for g, _ in items], [g.id for g, _ in items], [label for _, label in items], "graph"
    return list(items), [s.id for s in items], [s.label for s in items], None


def cmd_kernel(args) -> int:
    ds = _load_any(args.dataset)
    noise = parse_noise_spec(args.noise)
    rows, row_ids, _, graph = _samples(ds, args.rows)
    cols, col_ids, _, _ = _samples(ds, "train")
    encoding = graph or args.encoding
    if not graph:
        feat = data.digit_features_amplitude if encoding == "amplitude" else data.digit_features_ry
        rows, cols = [feat(s) for s in rows], [feat(s) for s in cols]
    km = kernel.kernel_matrix(
        rows, None if args.rows == "train" else cols, encoding=encoding, mode=args.mode,
        shots=args.shots, noise=noise, seed=args.seed, gamma=args.gamma,
        row_ids=row_ids, col_ids=None if args.rows == "train" else col_ids,
        pin_diagonal=args.pin_diagonal,
    )
    _emit(km.to_csv(), args.out)
    return EXIT_OK


def _read_kernel(path) -> kernel.KernelMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read kernel {path}: {exc}") from None
    return kernel.KernelMatrix.from_csv(text)


def _label_lookup(ds) -> dict[str, int]:
    out = {}
    for split in ("train", "test"):
        _, ids, labels, _ = _samples(ds, split)
        out.update(zip(ids, labels))
    return out


def cmd_train(args) -> int:
    km = _read_kernel(args.kernel)
    if km.row_ids != km.col_ids:
        raise DataError("training kernel must be square with matching row and column ids")
    labels = _label_lookup(_load_any(args.dataset))
    missing = [r for r in km.row_ids if r not in labels]
    if missing:
        raise DataError(f"no labels for ids {missing[:3]}")
    model = svm.train(km.entries, [labels[r] for r in km.row_ids], C=args.C)
    d = model.to_dict()
    d["train_ids"] = km.row_ids
    _emit(json.dumps(d, indent=2) + "\n", args.out)
    acc = svm.accuracy(model, km.entries, model.labels)
    print(f"trained on {len(km.row_ids)} samples; {len(model.support_indices)} support vectors; "
          f"train accuracy {100 * acc:.1f}%", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        d = json.loads(Path(args.model).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from None
    model = svm.SvmModel.from_dict(d)
    km = _read_kernel(args.kernel)
    if "train_ids" in d and km.col_ids != d["train_ids"]:
        raise DataError("kernel columns do not match the model's training ids")
    values = model.decision_values(km.entries)
    predictions = np.where(values >= 0, 1, -1)
    labels = _label_lookup(_load_any(args.dataset)) if args.dataset else {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "decision", "prediction", "label"])
    for rid, v, p in zip(km.row_ids, values, predictions):
        w.writerow([rid, format(float(v), ".17g"), int(p), labels.get(rid, "")])
    _emit(buf.getvalue(), args.out)
    known = [(p, labels[r]) for r, p in zip(km.row_ids, predictions) if r in labels]
    if known:
        correct = sum(int(p == t) for p, t in known)
        print(f"accuracy {correct}/{len(known)} ({100 * correct / len(known):.1f}%)", file=sys.stderr)
    return EXIT_OK


# -- experiments ---------------------------------------------------------------

def _report_json(reports, timing: bool) -> str:
    payload = [r.to_dict(include_timing=timing) for r in reports]
    return json.dumps(payload if len(payload) > 1 else payload[0], indent=2, sort_keys=True) + "\n"


def cmd_experiment(args) -> int:
    noise = parse_noise_spec(args.noise)
    if args.experiment_command == "digits":
        if args.grid:
            reports = experiments.digits_grid(args.seed, noise, exact=args.shots is None and noise is None,
                                              C=args.C, manifest=args.manifest,
                                              pin_diagonal=args.pin_diagonal, workers=args.workers)
        else:
            reports = [experiments.run_digits(args.encoding, args.mode, args.shots, args.seed, noise, args.C,
                                              args.manifest, args.pin_diagonal, args.workers)]
    else:
        if args.grid:
            shots = args.shots if args.shots is not None else experiments.GRAPH_SHOTS
            reports = experiments.graphs_grid(args.seed, noise, exact=args.shots is None and noise is None,
                                              shots=shots, gamma=args.gamma, C=args.C,
                                              pin_diagonal=args.pin_diagonal, workers=args.workers)
        else:
            ds = data.load_dataset(args.dataset) if args.dataset else None
            if ds is not None and not isinstance(ds, data.GraphDataset):
                raise DataError(f"{args.dataset} is not a graph dataset")
            reports = [experiments.run_graphs(args.n, args.mode, args.shots, args.seed, noise, args.gamma,
                                              args.C, dataset=ds, pin_diagonal=args.pin_diagonal,
                                              workers=args.workers)]
    text = _report_json(reports, args.timing)
    if args.out:
        Path(args.out).write_text(text)
        print(experiments.format_reports(reports))
    else:
        sys.stdout.write(text)
        print(experiments.format_reports(reports), file=sys.stderr)
    return EXIT_OK


# -- transpile / figure3 ---------------------------------------------------------

def _count_summary(before: dict, after: dict) -> str:
    kinds = sorted(set(before) | set(after))
    parts = [f"{k}: {before.get(k, 0)} -> {after.get(k, 0)}" for k in kinds]
    total_b, total_a = sum(before.values()), sum(after.values())
    return "; ".join(parts + [f"total: {total_b} -> {total_a} ({total_a - total_b:+d})"])


def cmd_transpile(args) -> int:
    try:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    circuit = parse_circuit(text)
    if TranspileMode(args.mode) is TranspileMode.OPTIMIZED:
        result = optimize(transpile_cx(optimize(circuit)))
    else:
        result = transpile_cx(circuit)
    # an empty input stays empty; otherwise keep the register size explicit
    out = format_circuit(result) if text.strip() else ""
    _emit(out, args.out)
    print(_count_summary(count_gates(circuit), count_gates(result)), file=sys.stderr)
    return EXIT_OK


def cmd_figure3(args) -> int:
    noise = parse_noise_spec(args.noise)
    rows = experiments.figure3_table(args.seed, noise, args.shots, args.gamma)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.by_source:
        w.writerow(["ms_gates", "n", "mode", "circuits", "mean_infidelity"])
        for r in rows:
            w.writerow([r["ms_gates"], r["n"], r["mode"], r["circuits"], f"{r['mean_infidelity']:.6f}"])
    else:
        w.writerow(["ms_gates", "circuits", "mean_infidelity", "sources"])
        for r in experiments.pool_by_ms_count(rows):
            w.writerow([r["ms_gates"], r["circuits"], f"{r['mean_infidelity']:.6f}", r["sources"]])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


COMMANDS = {
    "dataset": cmd_dataset,
    "kernel": cmd_kernel,
    "train": cmd_train,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "transpile": cmd_transpile,
    "figure3": cmd_figure3,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GenerationError, OSError, QsvmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
