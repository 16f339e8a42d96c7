"""Fidelity-kernel estimation with mirror circuits.

A kernel entry K(x, y) is the probability of reading |0...0> after running
U(x) followed by U(y)^dagger from |0...0>. It is computed exactly from the
state vector, or estimated as the all-zeros frequency over a number of shots,
optionally under the noise model.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import encodings as enc
from .circuit import Circuit, TranspileMode, merge_graph_kernel, mirror_circuit, optimize
from .errors import ConfigurationError, DataError, ShapeError
from .noise import NoiseConfig, sample_noisy
from .simulator import born_probabilities, probability_all_zeros, run_circuit


class Encoding(str, Enum):
    RY = "ry"
    RY_CX = "rycx"
    AMPLITUDE = "amplitude"
    GRAPH = "graph"


ENCODERS: dict[Encoding, Callable] = {
    Encoding.RY: enc.encode_ry,
    Encoding.RY_CX: enc.encode_ry_cx,
    Encoding.AMPLITUDE: enc.encode_amplitude,
}

ANALYTIC: dict[Encoding, Callable] = {
    Encoding.RY: enc.analytic_kernel_ry,
    Encoding.RY_CX: enc.analytic_kernel_ry,
    Encoding.AMPLITUDE: enc.analytic_kernel_amplitude,
    Encoding.GRAPH: enc.analytic_kernel_graph,
}


def entry_seed(seed: int, row_id, col_id) -> int:
    """Per-entry seed; independent of evaluation order."""
    digest = hashlib.blake2b(f"{seed}|{row_id}|{col_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class KernelMatrix:
    entries: np.ndarray
    row_ids: list[str]
    col_ids: list[str]
    mode: dict = field(default_factory=lambda: {"kind": "exact"})

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        self.row_ids = [str(r) for r in self.row_ids]
        self.col_ids = [str(c) for c in self.col_ids]
        if self.entries.shape != (len(self.row_ids), len(self.col_ids)):
            raise ShapeError(
                f"entries {self.entries.shape} do not match "
                f"{len(self.row_ids)} row ids x {len(self.col_ids)} column ids"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", *self.col_ids])
        for rid, row in zip(self.row_ids, self.entries):
            w.writerow([rid, *(format(v, ".17g") for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, mode: dict | None = None) -> KernelMatrix:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:1] != ["id"]:
            raise DataError("kernel CSV must start with an 'id' header")
        col_ids = rows[0][1:]
        try:
            entries = [[float(v) for v in r[1:]] for r in rows[1:]]
        except ValueError as exc:
            raise DataError(f"bad kernel CSV value: {exc}") from None
        if any(len(r) != len(col_ids) for r in entries):
            raise DataError("ragged kernel CSV")
        return cls(np.array(entries).reshape(len(entries), len(col_ids)), [r[0] for r in rows[1:]],
                   col_ids, mode or {"kind": "unknown"})

    def to_dict(self) -> dict:
        return {
            "row_ids": self.row_ids,
            "col_ids": self.col_ids,
            "entries": self.entries.tolist(),
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> KernelMatrix:
        d = json.loads(text)
        return cls(np.array(d["entries"], dtype=float).reshape(len(d["row_ids"]), len(d["col_ids"])),
                   d["row_ids"], d["col_ids"], d.get("mode", {}))


def kernel_circuit(x, y, encoding: Encoding | str, mode: TranspileMode | str,
                   gamma: float = enc.DEFAULT_GAMMA) -> Circuit:
    """Native-gate mirror circuit for one (x, y) pair."""
    encoding, mode = Encoding(encoding), TranspileMode(mode)
    if encoding is Encoding.GRAPH:
        if mode is TranspileMode.OPTIMIZED:
            return optimize(merge_graph_kernel(x, y, gamma))
        return mirror_circuit(enc.encode_graph(x, gamma), enc.encode_graph(y, gamma), mode)
    encoder = ENCODERS[encoding]
    return mirror_circuit(encoder(x), encoder(y), mode)


def kernel_entry(circuit: Circuit, shots: int | None = None, seed: int = 0,
                 noise: NoiseConfig | None = None) -> float:
    """Exact all-zeros probability (``shots=None``) or its shot estimate."""
    if shots is None:
        if noise is not None and noise.active:
            raise ConfigurationError("noisy kernels need a finite shot count")
        return min(1.0, probability_all_zeros(run_circuit(circuit)))
    outcome = sample_noisy(circuit, noise, shots, seed)
    return outcome.frequency("0" * circuit.n_qubits)


def _mode_record(encoding, mode, shots, seed, noise, gamma, pin_diagonal) -> dict:
    rec = {"encoding": encoding.value, "transpile": mode.value}
    if encoding is Encoding.GRAPH:
        rec["gamma"] = gamma
    if shots is None:
        rec["kind"] = "exact"
        return rec
    rec.update(shots=shots, seed=seed, pin_diagonal=pin_diagonal)
    if noise is not None and noise.active:
        rec["kind"] = "noisy"
        rec["noise"] = noise.to_dict()
    else:
        rec["kind"] = "shots"
    return rec


def kernel_matrix(
    rows: Sequence,
    cols: Sequence | None = None,
    encoding: Encoding | str = Encoding.RY,
    mode: TranspileMode | str = TranspileMode.NON_OPTIMIZED,
    shots: int | None = None,
    noise: NoiseConfig | None = None,
    seed: int = 0,
    gamma: float = enc.DEFAULT_GAMMA,
    row_ids: Sequence[str] | None = None,
    col_ids: Sequence[str] | None = None,
    pin_diagonal: bool = False,
    workers: int = 1,
) -> KernelMatrix:
    """Kernel matrix between ``rows`` and ``cols`` (a Gram matrix when
    ``cols`` is omitted).

    Rows and columns are feature vectors for the digit encodings and
    :class:`~iontrap_qsvm.data.GraphInstance` values for ``graph``. In exact
    mode a Gram matrix is computed on the upper triangle and mirrored. In
    shot mode every entry is sampled with its own seed derived from
    ``(seed, row id, col id)``; ``pin_diagonal`` sets entries whose row and
    column ids coincide to 1 instead of sampling them.
    """
    encoding, mode = Encoding(encoding), TranspileMode(mode)
    if shots is not None and shots < 1:
        raise ConfigurationError(f"shots must be positive, got {shots}")
    gram = cols is None
    if gram:
        cols, col_ids = rows, row_ids
    row_ids = list(row_ids) if row_ids is not None else [str(i) for i in range(len(rows))]
    col_ids = list(col_ids) if col_ids is not None else [str(j) for j in range(len(cols))]
    if len(row_ids) != len(rows) or len(col_ids) != len(cols):
        raise ShapeError("id lists do not match the samples")

    if encoding is not Encoding.GRAPH:
        encoder = ENCODERS[encoding]
        row_circ = [encoder(x) for x in rows]
        col_circ = row_circ if gram else [encoder(y) for y in cols]

    def circuit_for(i, j):
        if encoding is Encoding.GRAPH:
            return kernel_circuit(rows[i], cols[j], encoding, mode, gamma)
        return mirror_circuit(row_circ[i], col_circ[j], mode)

    symmetric = gram and shots is None
    cells = [
        (i, j)
        for i in range(len(rows))
        for j in range(len(cols))
        if not symmetric or j >= i
    ]

    def evaluate(cell):
        i, j = cell
        if pin_diagonal and shots is not None and row_ids[i] == col_ids[j]:
            return 1.0
        return kernel_entry(circuit_for(i, j), shots, entry_seed(seed, row_ids[i], col_ids[j]), noise)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(evaluate, cells))
    else:
        values = [evaluate(c) for c in cells]

    entries = np.zeros((len(rows), len(cols)))
    for (i, j), v in zip(cells, values):
        entries[i, j] = v
        if symmetric:
            entries[j, i] = v
    return KernelMatrix(entries, row_ids, col_ids,
                        _mode_record(encoding, mode, shots, seed, noise, gamma, pin_diagonal))


def analytic_kernel_matrix(rows, cols=None, encoding: Encoding | str = Encoding.RY,
                           gamma: float = enc.DEFAULT_GAMMA, row_ids=None, col_ids=None) -> KernelMatrix:
    """Closed-form kernel matrix; independent of the circuit simulator."""
    encoding = Encoding(encoding)
    if cols is None:
        cols, col_ids = rows, row_ids
    fn = ANALYTIC[encoding]
    if encoding is Encoding.GRAPH:
        entries = [[fn(x, y, gamma) for y in cols] for x in rows]
    else:
        entries = [[fn(x, y) for y in cols] for x in rows]
    row_ids = row_ids if row_ids is not None else [str(i) for i in range(len(rows))]
    col_ids = col_ids if col_ids is not None else [str(j) for j in range(len(cols))]
    return KernelMatrix(np.array(entries).reshape(len(rows), len(cols)), row_ids, col_ids,
                        {"kind": "analytic", "encoding": encoding.value})


def matrix_distance(a, b) -> float:
    """max_ij |A_ij - B_ij|."""
    a = np.asarray(getattr(a, "entries", a), dtype=float)
    b = np.asarray(getattr(b, "entries", b), dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare {a.shape} with {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def bhattacharyya(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"distributions of shape {p.shape} and {q.shape}")
    return float(np.sum(np.sqrt(p * q)))


def classical_fidelity(circuit: Circuit, noise: NoiseConfig | None = None,
                       shots: int | None = None, seed: int = 0) -> float:
    """Bhattacharyya coefficient between sampled and ideal output distributions.

    With ``shots=None`` and no active noise the sampled distribution is
    replaced by the exact one, giving 1.
    """
    ideal = born_probabilities(run_circuit(circuit))
    if shots is None:
        if noise is not None and noise.active:
            raise ConfigurationError("noisy fidelity needs a finite shot count")
        return bhattacharyya(ideal, ideal)
    observed = sample_noisy(circuit, noise, shots, seed).distribution(circuit.n_qubits)
    return bhattacharyya(observed, ideal)


def min_eigenvalue(k) -> float:
    m = np.asarray(getattr(k, "entries", k), dtype=float)
    return float(np.min(np.linalg.eigvalsh((m + m.T) / 2)))


__all__ = [
    "Encoding", "KernelMatrix", "TranspileMode", "entry_seed", "kernel_circuit",
    "kernel_entry", "kernel_matrix", "analytic_kernel_matrix", "matrix_distance",
    "bhattacharyya", "classical_fidelity", "min_eigenvalue",
]
