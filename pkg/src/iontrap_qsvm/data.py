"""Digit and weighted-graph datasets.

Digits come from Optdigits-format files (64 comma-separated intensities in
0..16 followed by the class digit). Graphs are ring-topology weight matrices
labeled by which basis states sit at the bottom of their Ising spectrum.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, GenerationError, NormalizationError, ParseError, ResourceError, ShapeError

MAX_INTENSITY = 16
SPECTRUM_MAX_QUBITS = 12
DEGENERACY_TOL = 1e-9

# zero-based (row, column) pixel coordinates
RY_PIXELS = ((3, 3), (3, 4), (4, 3), (4, 4))
AMPLITUDE_PIXELS = ((3, 3), (3, 4), (4, 4))
AMPLITUDE_PAD = 0.25

REJECT = 0


# -- digits ---------------------------------------------------------------

@dataclass(frozen=True)
class DigitSample:
    pixels: np.ndarray
    label: int
    id: str
    digit: int | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=int)
        if px.shape != (8, 8):
            raise ShapeError(f"digit image must be 8x8, got {px.shape}")
        if px.min() < 0 or px.max() > MAX_INTENSITY:
            raise DataError(f"pixel intensities must lie in 0..{MAX_INTENSITY}")
        if self.label not in (1, -1):
            raise DataError(f"label must be +1 or -1, got {self.label}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "digit": self.digit,
            "label": self.label,
            "pixels": self.pixels.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DigitSample:
        return cls(np.reshape(d["pixels"], (8, 8)), int(d["label"]), str(d["id"]), d.get("digit"))


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path)


def load_optdigits(path, class_a_digit: int = 0, class_b_digit: int = 1) -> list[DigitSample]:
    """Read the two requested digit classes, in file order.

    ``class_a_digit`` maps to label +1 and ``class_b_digit`` to -1. Sample ids
    are ``<file name>:<line number>``.
    """
    path = Path(path)
    name = path.name
    out = []
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 65:
                raise ParseError(f"expected 65 comma-separated values, got {len(fields)}", lineno)
            try:
                values = [int(v) for v in fields]
            except ValueError:
                raise ParseError("non-integer value", lineno) from None
            digit = values[64]
            if digit not in (class_a_digit, class_b_digit):
                continue
            pixels = np.array(values[:64]).reshape(8, 8)
            if pixels.min() < 0 or pixels.max() > MAX_INTENSITY:
                raise ParseError(f"intensity outside 0..{MAX_INTENSITY}", lineno)
            label = 1 if digit == class_a_digit else -1
            out.append(DigitSample(pixels, label, f"{name}:{lineno}", digit))
    return out


def _scaled(sample: DigitSample, coords) -> np.ndarray:
    return np.array([sample.pixels[r, c] for r, c in coords], dtype=float) / MAX_INTENSITY


def digit_features_ry(sample: DigitSample) -> np.ndarray:
    """Four central intensities scaled to [0, 1] and multiplied by pi."""
    return np.pi * _scaled(sample, RY_PIXELS)


def digit_features_amplitude(sample: DigitSample) -> np.ndarray:
    """Three central intensities in [0, 1] padded with 0.25 (not normalized)."""
    return np.append(_scaled(sample, AMPLITUDE_PIXELS), AMPLITUDE_PAD)


@dataclass(frozen=True)
class DigitDataset:
    train: tuple[DigitSample, ...]
    test: tuple[DigitSample, ...]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "digits",
            "metadata": self.metadata,
            "train": [s.to_dict() for s in self.train],
            "test": [s.to_dict() for s in self.test],
        }

    @classmethod
    def from_dict(cls, d: dict) -> DigitDataset:
        if d.get("kind") != "digits":
            raise DataError("not a digits dataset")
        return cls(
            tuple(DigitSample.from_dict(s) for s in d["train"]),
            tuple(DigitSample.from_dict(s) for s in d["test"]),
            dict(d.get("metadata", {})),
        )


def load_digit_manifest(path=None) -> DigitDataset:
    """Load the pinned 6/4 digit split (the packaged manifest by default)."""
    if path is None:
        text = resources.files("iontrap_qsvm").joinpath("resources/digits_manifest.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DataError(f"cannot read digit manifest: {exc}") from None
    return DigitDataset.from_dict(json.loads(text))


# -- graphs ---------------------------------------------------------------

@dataclass(frozen=True)
class GraphInstance:
    weights: np.ndarray
    id: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ShapeError(f"weight matrix must be square, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise DataError("weights must be finite")
        if np.any(np.diag(w) != 0):
            raise DataError("weight matrix must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise DataError("weight matrix must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def g_max(self) -> float:
        return float(np.max(np.abs(self.weights)))

    def normalized_weights(self) -> np.ndarray:
        gmax = self.g_max
        if gmax == 0:
            raise NormalizationError("graph has no nonzero weight")
        return self.weights / gmax

    def edges(self) -> list[tuple[int, int, float]]:
        """Nonzero edges (j, k, weight) with j < k, lexicographic."""
        n = self.n
        return [
            (j, k, float(self.weights[j, k]))
            for j in range(n)
            for k in range(j + 1, n)
            if self.weights[j, k] != 0
        ]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]], id: str = "") -> GraphInstance:
        w = np.zeros((n, n))
        for j, k, weight in edges:
            j, k = int(j), int(k)
            if j == k:
                raise DataError(f"self-loop on vertex {j}")
            w[j, k] = w[k, j] = weight
        return cls(w, id)

    @classmethod
    def ring(cls, ring_weights: Sequence[float], id: str = "") -> GraphInstance:
        """Ring with weight ``ring_weights[i]`` on edge (i, i+1 mod n)."""
        n = len(ring_weights)
        if n < 3:
            raise ShapeError("a ring needs at least 3 vertices")
        return cls.from_edges(n, ((i, (i + 1) % n, w) for i, w in enumerate(ring_weights)), id)


def spin_table(n: int) -> np.ndarray:
    """z values (+1 for bit 0, -1 for bit 1); row x, column = qubit."""
    idx = np.arange(2**n)[:, None]
    bits = (idx >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1 - 2 * bits


def ising_energies(g: GraphInstance) -> np.ndarray:
    """E_x = sum_{j<k} g_jk z_j z_k for every basis index x (qubit 0 = MSB)."""
    if g.n > SPECTRUM_MAX_QUBITS:
        raise ResourceError(f"spectrum enumeration limited to {SPECTRUM_MAX_QUBITS} vertices")
    z = spin_table(g.n)
    energies = np.zeros(2**g.n)
    for j, k, w in g.edges():
        energies += w * z[:, j] * z[:, k]
    return energies


def ising_spectrum(g: GraphInstance) -> dict[str, float]:
    energies = ising_energies(g)
    return {format(x, f"0{g.n}b"): float(e) for x, e in enumerate(energies)}


def invert_bits(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


@dataclass(frozen=True)
class SpectrumLabelRule:
    n: int
    positive_set: frozenset
    negative_set: frozenset

    def __post_init__(self):
        pos, neg = frozenset(self.positive_set), frozenset(self.negative_set)
        object.__setattr__(self, "positive_set", pos)
        object.__setattr__(self, "negative_set", neg)
        if pos & neg:
            raise DataError("label sets must be disjoint")
        for s in pos | neg:
            if len(s) != self.n or set(s) - {"0", "1"}:
                raise DataError(f"{s!r} is not a {self.n}-bit string")
        for group in (pos, neg):
            if any(invert_bits(s) not in group for s in group):
                raise DataError("label sets must be closed under bit inversion")


def table_rule(n: int) -> SpectrumLabelRule:
    """Classification rule for ring graphs on ``n`` vertices.

    +1: the two uniform strings are the lowest levels. -1: for n = 3 the six
    mixed strings are the lowest levels; for n >= 4 the alternating pair is.
    """
    if n < 3:
        raise DataError("graph rules need n >= 3")
    positive = {"0" * n, "1" * n}
    if n == 3:
        negative = {format(x, "03b") for x in range(1, 7)}
    else:
        alt = ("01" * n)[:n]
        negative = {alt, invert_bits(alt)}
    return SpectrumLabelRule(n, frozenset(positive), frozenset(negative))


def _lowest_set(energies: np.ndarray, s: int, n: int) -> frozenset | None:
    order = np.argsort(energies, kind="stable")
    if s < len(energies) and abs(energies[order[s]] - energies[order[s - 1]]) <= DEGENERACY_TOL:
        return None
    return frozenset(format(int(x), f"0{n}b") for x in order[:s])


def label_graph(g: GraphInstance, rule: SpectrumLabelRule | None = None) -> int:
    """+1, -1, or ``REJECT`` (0) when neither set matches or the s-th level
    is degenerate with the next one."""
    rule = rule or table_rule(g.n)
    if rule.n != g.n:
        raise ShapeError(f"rule is for n={rule.n}, graph has n={g.n}")
    energies = ising_energies(g)
    for label, group in ((1, rule.positive_set), (-1, rule.negative_set)):
        lowest = _lowest_set(energies, len(group), g.n)
        if lowest is not None and lowest == group:
            return label
    return REJECT


@dataclass(frozen=True)
class GraphDataset:
    n: int
    train: tuple[tuple[GraphInstance, int], ...]
    test: tuple[tuple[GraphInstance, int], ...]
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def entry(g, label):
            return {"id": g.id, "n": g.n, "edges": [[j, k, w] for j, k, w in g.edges()], "label": label}

        return {
            "kind": "graphs",
            "n": self.n,
            "metadata": self.metadata,
            "train": [entry(g, l) for g, l in self.train],
            "test": [entry(g, l) for g, l in self.test],
        }

    @classmethod
    def from_dict(cls, d: dict) -> GraphDataset:
        if d.get("kind") != "graphs":
            raise DataError("not a graph dataset")

        def read(items):
            return tuple(
                (GraphInstance.from_edges(e["n"], e["edges"], e.get("id", "")), int(e["label"]))
                for e in items
            )

        return cls(int(d["n"]), read(d["train"]), read(d["test"]), dict(d.get("metadata", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _class_counts(items) -> dict[str, int]:
    labels = [l for _, l in items]
    return {"+1": labels.count(1), "-1": labels.count(-1)}


def generate_graph_dataset(
    n: int,
    count_train: int = 20,
    count_test: int = 10,
    seed: int = 0,
    max_attempts: int = 1_000_000,
    rule: SpectrumLabelRule | None = None,
) -> GraphDataset:
    """Rejection-sample labeled ring graphs with N(0, 1) edge weights.

    The first ``count_train`` accepted graphs form the training split and the
    next ``count_test`` the test split. Class balance is not enforced; the
    per-class counts are recorded in the metadata.
    """
    rule = rule or table_rule(n)
    rng = np.random.default_rng(seed)
    accepted: list[tuple[GraphInstance, int]] = []
    total = count_train + count_test
    attempts = 0
    while len(accepted) < total:
        if attempts >= max_attempts:
            raise GenerationError(f"only {len(accepted)} of {total} graphs after {attempts} attempts")
        attempts += 1
        w = rng.standard_normal(n)
        g = GraphInstance.ring(w)
        label = label_graph(g, rule)
        if label == REJECT:
            continue
        split = "train" if len(accepted) < count_train else "test"
        idx = len(accepted) if split == "train" else len(accepted) - count_train
        accepted.append((GraphInstance(g.weights, f"n{n}-{split}-{idx}"), label))
    train, test = tuple(accepted[:count_train]), tuple(accepted[count_train:])
    if count_train and len({l for _, l in train}) < 2:
        raise GenerationError(f"training split for n={n}, seed={seed} contains a single class")
    meta = {
        "seed": seed,
        "attempts": attempts,
        "train_counts": _class_counts(train),
        "test_counts": _class_counts(test),
    }
    return GraphDataset(n, train, test, meta)


def load_dataset(path):
    """Load a digits or graphs dataset JSON file, dispatching on ``kind``."""
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    kind = d.get("kind")
    if kind == "digits":
        return DigitDataset.from_dict(d)
    if kind == "graphs":
        return GraphDataset.from_dict(d)
    raise DataError(f"unknown dataset kind {kind!r}")


def brute_force_ground_energy(g: GraphInstance) -> float:
    return float(np.min(ising_energies(g)))


__all__ = [
    "DigitSample", "DigitDataset", "GraphInstance", "GraphDataset", "SpectrumLabelRule",
    "REJECT", "load_optdigits", "load_digit_manifest", "load_dataset", "digit_features_ry",
    "digit_features_amplitude", "ising_spectrum", "ising_energies", "label_graph",
    "table_rule", "generate_graph_dataset", "invert_bits", "spin_table",
]
