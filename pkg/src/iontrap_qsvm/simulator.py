"""Dense state-vector simulation of the trapped-ion native gate set.

Bit ordering: qubit 0 is the most significant bit of the basis index, so on
two qubits index 1 is ``|01>`` (qubit 1 set). Bitstrings are written with
qubit 0 first.

Sampling uses ``numpy.random.Generator(PCG64(seed))`` and draws the counts
vector with a single ``multinomial`` call, which makes shot counts
reproducible across platforms for a given numpy version.

The private ``_apply_*`` helpers operate on a batch of states laid out as a
``(batch, 2**n)`` array; the noise module drives them with one row per shot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .circuit import Circuit, Gate
from .errors import ConfigurationError, ShapeError

MAX_QUBITS = 12

SQRT1_2 = 1 / np.sqrt(2)
HADAMARD = np.array([[SQRT1_2, SQRT1_2], [SQRT1_2, -SQRT1_2]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_n(self.n_qubits)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"{self.n_qubits} qubits need {2**self.n_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class MeasurementOutcome:
    counts: Mapping[str, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not add up to shots")

    def frequency(self, bitstring: str) -> float:
        return self.counts.get(bitstring, 0) / self.shots

    def distribution(self, n_qubits: int) -> np.ndarray:
        """Empirical probabilities indexed by basis state."""
        p = np.zeros(2**n_qubits)
        for bits, c in self.counts.items():
            p[int(bits, 2)] = c
        return p / self.shots


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be in 1..{MAX_QUBITS}, got {n_qubits}")


def _check_qubit(state: StateVector, *qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise IndexError(f"qubit {q} out of range for {state.n_qubits}-qubit state")
    if len(set(qubits)) != len(qubits):
        raise IndexError(f"repeated qubit index in {qubits}")


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def zero_state(n_qubits: int) -> StateVector:
    _check_n(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(bits: str) -> StateVector:
    n = len(bits)
    _check_n(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(n, amps)


# -- matrices -------------------------------------------------------------

def rphi_matrix(phi: float, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -1j * np.exp(-1j * phi) * s], [-1j * np.exp(1j * phi) * s, c]],
        dtype=complex,
    )


def ms_matrix(chi: float) -> np.ndarray:
    """4x4 matrix of exp(-i chi X(x)X) in the |q1 q2> basis."""
    c, s = np.cos(chi), np.sin(chi)
    m = np.eye(4, dtype=complex) * c
    m[[0, 1, 2, 3], [3, 2, 1, 0]] = -1j * s
    return m


def gate_matrix(gate: Gate) -> np.ndarray:
    """Unitary of a single gate on its own qubits (first qubit = MSB)."""
    if gate.kind == "RPHI":
        return rphi_matrix(*gate.params)
    if gate.kind == "RX":
        return rphi_matrix(0.0, gate.params[0])
    if gate.kind == "RY":
        return rphi_matrix(np.pi / 2, gate.params[0])
    if gate.kind == "H":
        return HADAMARD.copy()
    if gate.kind == "MS":
        return ms_matrix(gate.params[0])
    if gate.kind == "CX":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    raise ValueError(gate.kind)


# -- batched kernels ------------------------------------------------------

def _apply_1q(amps: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    a = amps.reshape(-1, 2**q, 2, 2 ** (n - q - 1))
    a0, a1 = a[:, :, 0, :], a[:, :, 1, :]
    out = np.empty_like(a)
    out[:, :, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    out[:, :, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return out.reshape(amps.shape)


def _flip(amps: np.ndarray, n: int, qubits: tuple[int, ...]) -> np.ndarray:
    t = amps.reshape((-1,) + (2,) * n)
    return np.flip(t, axis=tuple(q + 1 for q in qubits)).reshape(amps.shape)


def _apply_ms(amps: np.ndarray, n: int, q1: int, q2: int, chi: float) -> np.ndarray:
    return np.cos(chi) * amps - 1j * np.sin(chi) * _flip(amps, n, (q1, q2))


def _apply_cx(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    t = amps.reshape((-1,) + (2,) * n).copy()
    idx = [slice(None)] * (n + 1)
    idx[control + 1] = 1
    sub = t[tuple(idx)]
    # dropping the control axis shifts later axes left by one
    axis = target + 1 - (1 if target > control else 0)
    t[tuple(idx)] = np.flip(sub, axis=axis)
    return t.reshape(amps.shape)


def _apply_gate(amps: np.ndarray, n: int, gate: Gate) -> np.ndarray:
    kind = gate.kind
    if kind == "MS":
        return _apply_ms(amps, n, gate.qubits[0], gate.qubits[1], gate.params[0])
    if kind == "CX":
        return _apply_cx(amps, n, *gate.qubits)
    return _apply_1q(amps, n, gate.qubits[0], gate_matrix(gate))


# -- public single-state API ----------------------------------------------

def apply_rphi(state: StateVector, qubit: int, phi: float, theta: float) -> StateVector:
    _check_qubit(state, qubit)
    amps = _apply_1q(state.amplitudes, state.n_qubits, qubit, rphi_matrix(phi, theta))
    return StateVector(state.n_qubits, amps)


def apply_rx(state: StateVector, qubit: int, theta: float) -> StateVector:
    return apply_rphi(state, qubit, 0.0, theta)


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    return apply_rphi(state, qubit, np.pi / 2, theta)


def apply_ms(state: StateVector, q1: int, q2: int, chi: float) -> StateVector:
    _check_qubit(state, q1, q2)
    return StateVector(state.n_qubits, _apply_ms(state.amplitudes, state.n_qubits, q1, q2, chi))


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    _check_qubit(state, qubit)
    return StateVector(state.n_qubits, _apply_1q(state.amplitudes, state.n_qubits, qubit, HADAMARD))


def apply_cx(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(state, control, target)
    return StateVector(state.n_qubits, _apply_cx(state.amplitudes, state.n_qubits, control, target))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_qubit(state, *gate.qubits)
    return StateVector(state.n_qubits, _apply_gate(state.amplitudes, state.n_qubits, gate))


def run_circuit(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    """Apply the gates of ``circuit`` in order; starts from |0...0> by default."""
    if initial is None:
        initial = zero_state(circuit.n_qubits)
    if circuit.n_qubits != initial.n_qubits:
        raise ShapeError(
            f"circuit has {circuit.n_qubits} qubits, state has {initial.n_qubits}"
        )
    amps = initial.amplitudes
    for g in circuit.gates:
        amps = _apply_gate(amps, circuit.n_qubits, g)
    return StateVector(circuit.n_qubits, amps)


def run_batch(circuit: Circuit, states: np.ndarray) -> np.ndarray:
    """Evolve a ``(batch, 2**n)`` array of states through ``circuit``."""
    amps = np.asarray(states, dtype=complex)
    for g in circuit.gates:
        amps = _apply_gate(amps, circuit.n_qubits, g)
    return amps


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full 2**n x 2**n unitary, built by evolving every basis state."""
    _check_n(circuit.n_qubits)
    dim = 2**circuit.n_qubits
    # row k of the batch is U|k>, so the unitary is the transpose
    return run_batch(circuit, np.eye(dim, dtype=complex)).T


def probability_all_zeros(state: StateVector) -> float:
    return float(abs(state.amplitudes[0]) ** 2)


def born_probabilities(state: StateVector) -> np.ndarray:
    p = state.probabilities()
    return p / p.sum()


def counts_from_indices(counts_vec: np.ndarray, n_qubits: int) -> dict[str, int]:
    return {bitstring(i, n_qubits): int(c) for i, c in enumerate(counts_vec) if c}


def sample(state: StateVector, shots: int, seed: int) -> MeasurementOutcome:
    """Draw ``shots`` measurements of all qubits from the Born distribution."""
    if shots < 1:
        raise ConfigurationError(f"shots must be positive, got {shots}")
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.multinomial(shots, born_probabilities(state))
    return MeasurementOutcome(counts_from_indices(counts, state.n_qubits), shots)


def equal_up_to_global_phase(a, b, tol: float = 1e-10) -> bool:
    """True when ``a`` equals ``exp(i alpha) b`` entrywise within ``tol``.

    Works for state vectors and matrices. The phase is taken from the
    largest-magnitude entry of ``b``.
    """
    a = np.asarray(getattr(a, "amplitudes", a), dtype=complex)
    b = np.asarray(getattr(b, "amplitudes", b), dtype=complex)
    if a.shape != b.shape:
        return False
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) == 0:
        return bool(np.max(np.abs(a)) <= tol)
    ratio = a[k] / b[k]
    if abs(ratio) == 0:
        return False
    phase = ratio / abs(ratio)
    return bool(np.max(np.abs(a - phase * b)) <= tol)
