"""Experiment harness: the digit and graph classification grids and the
MS-count / infidelity table."""

from __future__ import annotations

import hashlib
import json
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import __version__, data, kernel, svm
from .circuit import TranspileMode, count_gates
from .encodings import DEFAULT_GAMMA
from .noise import NoiseConfig

# digits grid rows: (encoding, transpile modes, shots, repetitions)
DIGITS_GRID = (
    ("ry", ("nonopt",), 2048, 3),
    ("rycx", ("nonopt", "opt"), 1024, 3),
    ("amplitude", ("nonopt", "opt"), 1024, 2),
)
GRAPH_SIZES = (3, 4, 5)
GRAPH_SHOTS = 1024


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    train_accuracy: tuple[int, int]  # (correct, total)
    test_accuracy: tuple[int, int]
    train_distance: float
    test_distance: float
    fidelity: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    timing: float | None = None

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.config, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "experiment": self.experiment,
            "config": self.config,
            "accuracy": {
                "train": _accuracy_record(self.train_accuracy),
                "test": _accuracy_record(self.test_accuracy),
            },
            "distance": {"train": round(self.train_distance, 4), "test": round(self.test_distance, 4)},
            "fidelity": self.fidelity,
            "diagnostics": self.diagnostics,
            "provenance": provenance(self.config_hash),
        }
        if include_timing and self.timing is not None:
            d["timing_s"] = round(self.timing, 3)
        return d

    @property
    def train_percent(self) -> float:
        return 100 * self.train_accuracy[0] / self.train_accuracy[1]

    @property
    def test_percent(self) -> float:
        return 100 * self.test_accuracy[0] / self.test_accuracy[1]


def _accuracy_record(acc: tuple[int, int]) -> dict:
    correct, total = acc
    return {"correct": correct, "total": total, "percent": f"{100 * correct / total:.1f}"}


def provenance(config_hash: str) -> dict:
    return {"package": __version__, "numpy": np.__version__, "config_hash": config_hash}


def _fraction_correct(model, k, labels) -> tuple[int, int]:
    pred = svm.predict_all(model, k)
    return int(np.sum(pred == np.asarray(labels))), len(labels)


def _noise_record(noise: NoiseConfig | None):
    return noise.to_dict() if noise is not None and noise.active else None


def _evaluate(train_x, train_ids, train_y, test_x, test_ids, test_y, encoding, mode, shots,
              noise, seed, gamma, C, pin_diagonal, workers):
    opts = dict(encoding=encoding, mode=mode, gamma=gamma)
    ideal_gram = kernel.kernel_matrix(train_x, row_ids=train_ids, **opts)
    ideal_cross = kernel.kernel_matrix(test_x, train_x, row_ids=test_ids, col_ids=train_ids, **opts)
    if shots is None and (noise is None or not noise.active):
        gram, cross = ideal_gram, ideal_cross
    else:
        sampled = dict(shots=shots, noise=noise, seed=seed, workers=workers, **opts)
        gram = kernel.kernel_matrix(train_x, row_ids=train_ids, pin_diagonal=pin_diagonal, **sampled)
        cross = kernel.kernel_matrix(test_x, train_x, row_ids=test_ids, col_ids=train_ids, **sampled)
    model = svm.train(gram, train_y, C=C)
    return {
        "model": model,
        "gram": gram,
        "cross": cross,
        "train_accuracy": _fraction_correct(model, gram, train_y),
        "test_accuracy": _fraction_correct(model, cross, test_y),
        "train_distance": kernel.matrix_distance(gram, ideal_gram),
        "test_distance": kernel.matrix_distance(cross, ideal_cross),
        "diagnostics": {
            "support_vectors": len(model.support_indices),
            "min_eigenvalue": round(kernel.min_eigenvalue(gram), 6),
        },
    }


def run_digits(encoding: str = "ry", mode: str = "nonopt", shots: int | None = None, seed: int = 0,
               noise: NoiseConfig | None = None, C: float = 1.0, manifest=None,
               pin_diagonal: bool = False, workers: int = 1) -> ExperimentReport:
    """Train on the pinned digit split and score train and test accuracy."""
    t0 = time.perf_counter()
    mode = TranspileMode(mode).value
    ds = manifest if isinstance(manifest, data.DigitDataset) else data.load_digit_manifest(manifest)
    feat = data.digit_features_amplitude if encoding == "amplitude" else data.digit_features_ry
    out = _evaluate(
        [feat(s) for s in ds.train], [s.id for s in ds.train], [s.label for s in ds.train],
        [feat(s) for s in ds.test], [s.id for s in ds.test], [s.label for s in ds.test],
        encoding, mode, shots, noise, seed, DEFAULT_GAMMA, C, pin_diagonal, workers,
    )
    config = {
        "dataset": "digits",
        "encoding": encoding,
        "mode": mode,
        "shots": shots if shots is not None else "exact",
        "seed": seed,
        "noise": _noise_record(noise),
        "C": C,
        "pin_diagonal": pin_diagonal,
        "train_ids": [s.id for s in ds.train],
        "test_ids": [s.id for s in ds.test],
    }
    return ExperimentReport(
        f"digits-{encoding}-{mode}", config, out["train_accuracy"], out["test_accuracy"],
        out["train_distance"], out["test_distance"], {}, out["diagnostics"], time.perf_counter() - t0,
    )


def fidelity_buckets(circuits_with_seeds, noise, shots) -> dict:
    """Mean classical infidelity of circuits grouped by MS count.

    Circuits without MS gates are skipped. Each circuit is sampled with the
    same seed as its kernel entry, so the counts are the ones the kernel used.
    """
    groups = defaultdict(list)
    for circuit, entry_seed in circuits_with_seeds:
        n_ms = count_gates(circuit)["MS"]
        if n_ms == 0:
            continue
        if shots is None:
            f = kernel.classical_fidelity(circuit)
        else:
            f = kernel.classical_fidelity(circuit, noise, shots, entry_seed)
        groups[n_ms].append(1.0 - f)
    return {
        str(k): {"circuits": len(v), "mean_infidelity": round(float(np.mean(v)), 6)}
        for k, v in sorted(groups.items())
    }


def _graph_circuits(ds: data.GraphDataset, mode, gamma, seed):
    train = [g for g, _ in ds.train]
    test = [g for g, _ in ds.test]
    for rows in (train, test):
        for a in rows:
            for b in train:
                yield kernel.kernel_circuit(a, b, "graph", mode, gamma), kernel.entry_seed(seed, a.id, b.id)


def run_graphs(n: int = 3, mode: str = "opt", shots: int | None = None, seed: int = 0,
               noise: NoiseConfig | None = None, gamma: float = DEFAULT_GAMMA, C: float = 1.0,
               dataset: data.GraphDataset | None = None, dataset_seed: int | None = None,
               pin_diagonal: bool = False, fidelities: bool = True, workers: int = 1) -> ExperimentReport:
    """Classify ring graphs on n vertices; reports F_cl per MS-count bucket."""
    t0 = time.perf_counter()
    mode = TranspileMode(mode).value
    dataset_seed = seed if dataset_seed is None else dataset_seed
    ds = dataset if dataset is not None else data.generate_graph_dataset(n, seed=dataset_seed)
    n = ds.n
    train_g = [g for g, _ in ds.train]
    test_g = [g for g, _ in ds.test]
    out = _evaluate(
        train_g, [g.id for g in train_g], [l for _, l in ds.train],
        test_g, [g.id for g in test_g], [l for _, l in ds.test],
        "graph", mode, shots, noise, seed, gamma, C, pin_diagonal, workers,
    )
    fid = fidelity_buckets(_graph_circuits(ds, mode, gamma, seed), noise, shots) if fidelities else {}
    config = {
        "dataset": "graphs",
        "n": n,
        "dataset_seed": dataset_seed,
        "mode": mode,
        "shots": shots if shots is not None else "exact",
        "seed": seed,
        "noise": _noise_record(noise),
        "gamma": gamma,
        "C": C,
        "pin_diagonal": pin_diagonal,
        "class_counts": {"train": ds.metadata.get("train_counts"), "test": ds.metadata.get("test_counts")},
    }
    return ExperimentReport(
        f"graphs-n{n}-{mode}", config, out["train_accuracy"], out["test_accuracy"],
        out["train_distance"], out["test_distance"], fid, out["diagnostics"], time.perf_counter() - t0,
    )


def digits_grid(seed: int = 0, noise: NoiseConfig | None = None, exact: bool = False, **kw) -> list[ExperimentReport]:
    """Thirteen runs over five (encoding, mode) configurations; repetitions use seeds seed, seed+1, ..."""
    reports = []
    for encoding, modes, shots, reps in DIGITS_GRID:
        for r in range(reps):
            for mode in modes:
                reports.append(run_digits(encoding, mode, None if exact else shots, seed + r, noise, **kw))
    return reports


def graphs_grid(seed: int = 0, noise: NoiseConfig | None = None, exact: bool = False,
                shots: int = GRAPH_SHOTS, **kw) -> list[ExperimentReport]:
    reports = []
    for n in GRAPH_SIZES:
        ds = data.generate_graph_dataset(n, seed=seed)
        for mode in ("nonopt", "opt"):
            reports.append(run_graphs(n, mode, None if exact else shots, seed, noise, dataset=ds, **kw))
    return reports


def figure3_table(seed: int = 0, noise: NoiseConfig | None = None, shots: int = GRAPH_SHOTS,
                  gamma: float = DEFAULT_GAMMA, sizes=GRAPH_SIZES) -> list[dict]:
    """Mean classical infidelity per MS count over all graph kernel circuits."""
    rows = []
    for n in sizes:
        ds = data.generate_graph_dataset(n, seed=seed)
        for mode in ("opt", "nonopt"):
            buckets = fidelity_buckets(_graph_circuits(ds, mode, gamma, seed), noise, shots)
            for ms_count, b in buckets.items():
                rows.append({"ms_gates": int(ms_count), "n": n, "mode": mode, **b})
    rows.sort(key=lambda r: (r["ms_gates"], r["n"]))
    return rows


def pool_by_ms_count(rows: list[dict]) -> list[dict]:
    """Merge figure-3 rows sharing an MS count into circuit-weighted means."""
    groups = defaultdict(list)
    for r in rows:
        groups[r["ms_gates"]].append(r)
    pooled = []
    for ms_count, rs in sorted(groups.items()):
        total = sum(r["circuits"] for r in rs)
        mean = sum(r["circuits"] * r["mean_infidelity"] for r in rs) / total
        sources = ";".join(f"n{r['n']}-{r['mode']}" for r in rs)
        pooled.append({"ms_gates": ms_count, "circuits": total, "mean_infidelity": round(mean, 6), "sources": sources})
    return pooled


def format_reports(reports: list[ExperimentReport]) -> str:
    """Plain-text table: accuracy percentages with distances in brackets."""
    header = f"{'experiment':<24} {'shots':>6} {'seed':>5}  {'train':>14}  {'test':>14}"
    lines = [header, "-" * len(header)]
    for r in reports:
        shots = r.config["shots"]
        lines.append(
            f"{r.experiment:<24} {shots!s:>6} {r.config['seed']:>5}  "
            f"{r.train_percent:6.1f} ({r.train_distance:.4f})  {r.test_percent:6.1f} ({r.test_distance:.4f})"
        )
    return "\n".join(lines)
