"""Gate-level circuit IR, CX -> MS transpilation and peephole optimization.

Native trapped-ion gates are ``RPHI(phi, theta)`` (with ``RX``/``RY`` as its
phi = 0 and phi = pi/2 special cases) and ``MS(chi) = exp(-i chi X(x)X)``.
``CX`` is accepted as input and rewritten into native gates; ``H`` exists only
for test oracles and is rejected by the transpiler.

Circuits are immutable. Every rewrite returns a new :class:`Circuit`.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, ShapeError, UnsupportedGateError

PI = math.pi

KINDS = ("RPHI", "RX", "RY", "CX", "MS", "H")
_ARITY = {"RPHI": 1, "RX": 1, "RY": 1, "H": 1, "CX": 2, "MS": 2}
_NPARAMS = {"RPHI": 2, "RX": 1, "RY": 1, "H": 0, "CX": 0, "MS": 1}
ROTATIONS = frozenset({"RPHI", "RX", "RY"})

# Angles closer than this to a deletion point are treated as exact.
ANGLE_ATOL = 1e-10

GLOBAL_PHASE_KEY = "global_phase_flips"


class TranspileMode(str, Enum):
    NON_OPTIMIZED = "nonopt"
    OPTIMIZED = "opt"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise UnsupportedGateError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.qubits) != _ARITY[self.kind]:
            raise ShapeError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), got {self.qubits}")
        if len(self.params) != _NPARAMS[self.kind]:
            raise ShapeError(f"{self.kind} takes {_NPARAMS[self.kind]} parameter(s), got {self.params}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ShapeError(f"{self.kind} needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ShapeError(f"negative qubit index in {self.qubits}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError(f"non-finite angle in {self.kind}{self.params}")

    def inverse(self) -> Gate:
        if self.kind == "RPHI":
            phi, theta = self.params
            return Gate("RPHI", self.qubits, (phi, -theta))
        if self.kind in ("RX", "RY", "MS"):
            return Gate(self.kind, self.qubits, (-self.params[0],))
        return self

    def __str__(self) -> str:
        qs = ",".join(str(q) for q in self.qubits)
        if not self.params:
            return f"{self.kind} {qs}"
        return f"{self.kind} {qs} " + ",".join(repr(p) for p in self.params)


# Constructors matching the names used throughout the code base.
def rphi(q: int, phi: float, theta: float) -> Gate:
    return Gate("RPHI", (q,), (phi, theta))


def rx(q: int, theta: float) -> Gate:
    return Gate("RX", (q,), (theta,))


def ry(q: int, theta: float) -> Gate:
    return Gate("RY", (q,), (theta,))


def ms(q1: int, q2: int, chi: float) -> Gate:
    return Gate("MS", (q1, q2), (chi,))


def cx(control: int, target: int) -> Gate:
    return Gate("CX", (control, target))


def h(q: int) -> Gate:
    return Gate("H", (q,))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ShapeError(f"circuit needs at least one qubit, got {self.n_qubits}")
        gates = tuple(self.gates)
        for g in gates:
            if max(g.qubits) >= self.n_qubits:
                raise ShapeError(f"{g} addresses a qubit outside 0..{self.n_qubits - 1}")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        return concat(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.gates == other.gates

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.gates))

    def with_gates(self, gates: Iterable[Gate], **metadata: str) -> Circuit:
        meta = dict(self.metadata)
        meta.update(metadata)
        return Circuit(self.n_qubits, tuple(gates), meta)

    @property
    def global_phase_flips(self) -> int:
        """Number of -1 global phases dropped by the optimizer (mod 2)."""
        return int(self.metadata.get(GLOBAL_PHASE_KEY, "0"))


def concat(first: Circuit, second: Circuit) -> Circuit:
    if first.n_qubits != second.n_qubits:
        raise ShapeError(f"cannot concatenate {first.n_qubits}- and {second.n_qubits}-qubit circuits")
    meta = {**second.metadata, **first.metadata}
    flips = (first.global_phase_flips + second.global_phase_flips) % 2
    if flips:
        meta[GLOBAL_PHASE_KEY] = str(flips)
    return Circuit(first.n_qubits, first.gates + second.gates, meta)


def adjoint(circuit: Circuit) -> Circuit:
    """Reverse the gate order and invert every gate."""
    return circuit.with_gates(g.inverse() for g in reversed(circuit.gates))


def cx_to_native(control: int, target: int) -> list[Gate]:
    """Five native gates equal to CX(control, target) up to a global phase."""
    return [
        ry(control, -PI / 2),
        ms(control, target, PI / 4),
        rx(control, -PI / 2),
        rx(target, PI / 2),
        ry(control, PI / 2),
    ]


def transpile_cx(circuit: Circuit) -> Circuit:
    out: list[Gate] = []
    for g in circuit.gates:
        if g.kind == "H":
            raise UnsupportedGateError("H is not a native gate and cannot be transpiled")
        if g.kind == "CX":
            out.extend(cx_to_native(*g.qubits))
        else:
            out.append(g)
    return circuit.with_gates(out)


def count_gates(circuit: Circuit) -> dict[str, int]:
    tally = Counter(g.kind for g in circuit.gates)
    return {k: tally.get(k, 0) for k in KINDS}


# -- optimization ---------------------------------------------------------

def _wrap(angle: float, period: float) -> float:
    """Map angle into (-period/2, period/2]."""
    r = math.fmod(angle, period)
    half = period / 2
    if r > half:
        r -= period
    elif r <= -half:
        r += period
    return r


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= ANGLE_ATOL


def _merge(a: Gate, b: Gate) -> tuple[Gate | None, int] | None:
    """Merge gate ``a`` followed by ``b``.

    Returns None when the pair is not mergeable, else ``(gate_or_None, flips)``
    where ``flips`` counts dropped -1 global phases.
    """
    if a.kind in ROTATIONS and a.kind == b.kind and a.qubits == b.qubits:
        if a.kind == "RPHI":
            if not _near(_wrap(a.params[0] - b.params[0], 2 * PI), 0.0):
                return None
            phi, theta = a.params[0], a.params[1] + b.params[1]
            return _simplify(Gate("RPHI", a.qubits, (phi, theta)))
        return _simplify(Gate(a.kind, a.qubits, (a.params[0] + b.params[0],)))
    if a.kind == "MS" and b.kind == "MS" and set(a.qubits) == set(b.qubits):
        return _simplify(Gate("MS", a.qubits, (a.params[0] + b.params[0],)))
    if a.kind in ("CX", "H") and a == b:
        return None, 0
    return None


def _simplify(g: Gate) -> tuple[Gate | None, int]:
    """Drop rotations that are +-identity, tracking the sign.

    Spin-1/2 rotations have period 4*pi (R(2*pi) = -I); MS(chi) has period
    2*pi (MS(pi) = -I). Surviving MS angles are wrapped to (-pi, pi].
    """
    if g.kind == "MS":
        chi = _wrap(g.params[0], 2 * PI)
        if _near(chi, 0.0):
            return None, 0
        if _near(abs(chi), PI):
            return None, 1
        return Gate("MS", g.qubits, (chi,)), 0
    if g.kind in ROTATIONS:
        theta = g.params[-1]
        r = _wrap(theta, 4 * PI)
        if _near(r, 0.0):
            return None, 0
        if _near(abs(r), 2 * PI):
            return None, 1
        return g, 0
    return g, 0


def _peephole(gates: list[Gate]) -> tuple[list[Gate], int, bool]:
    """One sweep of merge/cancel over gates that meet after commuting
    through gates on disjoint qubits."""
    flips = 0
    changed = False
    i = 0
    gates = list(gates)
    while i < len(gates):
        g = gates[i]
        if g.kind in ROTATIONS or g.kind == "MS":
            simplified, f = _simplify(g)
            if simplified is None:
                del gates[i]
                flips += f
                changed = True
                continue
        support = set(g.qubits)
        j = i + 1
        while j < len(gates) and not support.intersection(gates[j].qubits):
            j += 1
        if j < len(gates) and set(gates[j].qubits) == support:
            merged = _merge(g, gates[j])
            if merged is not None:
                new, f = merged
                flips += f
                changed = True
                del gates[j]
                if new is None:
                    del gates[i]
                    i = max(i - 1, 0)
                else:
                    gates[i] = new
                    # later gates may now merge into the new one
                continue
        i += 1
    return gates, flips, changed


def optimize(circuit: Circuit) -> Circuit:
    """Apply the merge / delete / cancel passes until nothing changes.

    * adjacent same-axis rotations on one qubit are summed (RPHI only when
      the phases agree),
    * rotations equal to +-identity are deleted; a removed -I is recorded in
      the ``global_phase_flips`` metadata entry,
    * CX.CX and H.H on identical qubit tuples cancel and MS gates on the same
      pair add their angles.

    Gates on disjoint qubits are treated as commuting, so a pair separated
    only by such gates is still considered adjacent.
    """
    gates = list(circuit.gates)
    flips = circuit.global_phase_flips
    while True:
        gates, f, changed = _peephole(gates)
        flips += f
        if not changed:
            break
    meta = dict(circuit.metadata)
    meta.pop(GLOBAL_PHASE_KEY, None)
    if flips % 2:
        meta[GLOBAL_PHASE_KEY] = "1"
    return Circuit(circuit.n_qubits, tuple(gates), meta)


# -- kernel circuits ------------------------------------------------------

def mirror_circuit(encode_x: Circuit, encode_y: Circuit, mode: TranspileMode | str) -> Circuit:
    """U(x) followed by U(y)^dagger, lowered to native gates.

    In optimized mode CX pairs meeting at the mirror point are cancelled
    before CX lowering, and the native circuit is optimized again after.
    """
    mode = TranspileMode(mode)
    if encode_x.n_qubits != encode_y.n_qubits:
        raise ShapeError(
            f"encodings act on {encode_x.n_qubits} and {encode_y.n_qubits} qubits"
        )
    joined = concat(encode_x, adjoint(encode_y))
    if mode is TranspileMode.NON_OPTIMIZED:
        return transpile_cx(joined)
    return optimize(transpile_cx(optimize(joined)))


def merge_graph_kernel(g, g_prime, gamma: float = 0.8) -> Circuit:
    """Single-layer circuit for V(g')^dagger V(g).

    All edge factors are X(x)X rotations and commute, so the product
    collapses to one MS per edge with the difference of normalized weights.
    """
    if g.n != g_prime.n:
        raise ShapeError(f"graphs have {g.n} and {g_prime.n} vertices")
    a = g.normalized_weights()
    b = g_prime.normalized_weights()
    gates = []
    for j in range(g.n):
        for k in range(j + 1, g.n):
            if g.weights[j, k] != 0 or g_prime.weights[j, k] != 0:
                gates.append(ms(j, k, gamma * (a[j, k] - b[j, k])))
    return Circuit(g.n, tuple(gates), {"kind": "graph-kernel-merged"})


# -- text format ----------------------------------------------------------

def format_circuit(circuit: Circuit, header: bool = True) -> str:
    lines = []
    if header:
        lines.append(f"# qubits {circuit.n_qubits}")
    lines.extend(str(g) for g in circuit.gates)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_circuit(text: str, n_qubits: int | None = None) -> Circuit:
    """Parse the one-gate-per-line format produced by :func:`format_circuit`.

    A ``# qubits N`` comment fixes the register size; otherwise it is the
    larger of ``n_qubits`` and the highest index used plus one.
    """
    gates = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        words = comment.split()
        if len(words) == 2 and words[0] == "qubits":
            try:
                declared = int(words[1])
            except ValueError:
                raise ParseError(f"bad qubit count {words[1]!r}", lineno) from None
        body = body.strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'KIND qubits [angles]', got {body!r}", lineno)
        kind = parts[0].upper()
        if kind not in _ARITY:
            raise ParseError(f"unknown gate kind {parts[0]!r}", lineno)
        try:
            qubits = tuple(int(q) for q in parts[1].split(","))
            params = tuple(float(p) for p in parts[2].split(",")) if len(parts) == 3 else ()
            gates.append(Gate(kind, qubits, params))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    used = max((max(g.qubits) + 1 for g in gates), default=1)
    size = declared if declared is not None else max(used, n_qubits or 1)
    try:
        return Circuit(size, tuple(gates))
    except ShapeError as exc:
        raise ParseError(str(exc)) from None


def random_circuit(rng, n_qubits: int, n_gates: int, kinds: Sequence[str] = ("RPHI", "RX", "RY", "CX", "MS")) -> Circuit:
    """Random circuit for property tests and benchmarks."""
    gates = []
    for _ in range(n_gates):
        kind = kinds[int(rng.integers(len(kinds)))]
        if _ARITY[kind] == 2 and n_qubits < 2:
            kind = "RY"
        if _ARITY[kind] == 1:
            qubits = (int(rng.integers(n_qubits)),)
        else:
            qubits = tuple(int(q) for q in rng.choice(n_qubits, size=2, replace=False))
        params = tuple(float(p) for p in rng.uniform(-2 * PI, 2 * PI, size=_NPARAMS[kind]))
        gates.append(Gate(kind, qubits, params))
    return Circuit(n_qubits, tuple(gates))


__all__ = [
    "Gate", "Circuit", "TranspileMode", "rphi", "rx", "ry", "ms", "cx", "h",
    "concat", "adjoint", "cx_to_native", "transpile_cx", "optimize", "count_gates",
    "mirror_circuit", "merge_graph_kernel", "format_circuit", "parse_circuit",
    "random_circuit",
]
