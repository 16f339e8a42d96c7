"""Stochastic Pauli noise and readout errors for shot sampling.

Every shot replays the circuit on its own copy of |0...0>. After each gate, a
uniformly random non-identity Pauli is applied to the gate's qubits with the
gate's error probability. Before readout each bit flips independently with
``p_readout``. All shots are simulated together as one ``(shots, 2**n)``
array, so the cost is a handful of vectorized operations per gate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import simulator
from .circuit import Circuit
from .errors import ConfigurationError, DataError, UnsupportedGateError
from .simulator import PAULI_X, PAULI_Y, PAULI_Z, MeasurementOutcome

_PAULIS_1Q = (PAULI_X, PAULI_Y, PAULI_Z)
_IDENTITY = np.eye(2, dtype=complex)
# non-identity two-qubit Paulis as (first qubit, second qubit) factors
_PAULIS_2Q = tuple(
    (a, b)
    for a in (_IDENTITY,) + _PAULIS_1Q
    for b in (_IDENTITY,) + _PAULIS_1Q
    if not (a is _IDENTITY and b is _IDENTITY)
)


@dataclass(frozen=True)
class NoiseConfig:
    p_1q: float = 5e-4
    p_ms_base: float = 0.037
    ms_chi_slope: float = 0.5
    p_readout: float = 0.01
    enabled: bool = True

    def __post_init__(self):
        for name in ("p_1q", "p_ms_base", "p_readout"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must be a probability, got {v}")
        if not 0.0 <= self.ms_chi_slope <= 1.0:
            raise ConfigurationError(f"ms_chi_slope must lie in [0, 1], got {self.ms_chi_slope}")

    @property
    def active(self) -> bool:
        """False when disabled or when every probability is zero."""
        return self.enabled and any((self.p_1q, self.p_ms_base, self.p_readout))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> NoiseConfig:
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown noise fields {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> NoiseConfig:
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def default_calibration() -> NoiseConfig:
    """99.95% single-qubit fidelity, 96.3% MS(pi/4) fidelity, 1% SPAM per ion."""
    return NoiseConfig(p_1q=5e-4, p_ms_base=0.037, ms_chi_slope=0.5, p_readout=0.01)


def disabled() -> NoiseConfig:
    return NoiseConfig(enabled=False)


def parse_noise_spec(spec: str | None) -> NoiseConfig | None:
    """``off`` / ``none`` -> None, ``default`` -> calibration, else a JSON file."""
    if spec is None or spec.lower() in ("off", "none"):
        return None
    if spec.lower() == "default":
        return default_calibration()
    try:
        return NoiseConfig.from_json(Path(spec).read_text())
    except OSError as exc:
        raise DataError(f"cannot read noise config {spec}: {exc}") from None
    except (json.JSONDecodeError, TypeError) as exc:
        raise ConfigurationError(f"bad noise config {spec}: {exc}") from None


def ms_error_prob(chi: float, cfg: NoiseConfig) -> float:
    """Affine in |chi|: equals p_ms_base at pi/4 and (1 - slope) * p_ms_base at 0."""
    scale = (1 - cfg.ms_chi_slope) + cfg.ms_chi_slope * abs(chi) / (np.pi / 4)
    return float(np.clip(cfg.p_ms_base * scale, 0.0, 1.0))


def gate_error_prob(gate, cfg: NoiseConfig) -> float:
    if gate.kind == "MS":
        return ms_error_prob(gate.params[0], cfg)
    if gate.kind in ("RPHI", "RX", "RY"):
        return cfg.p_1q
    raise UnsupportedGateError(f"{gate.kind} is not a native gate; transpile first")


def _check_native(circuit: Circuit) -> None:
    for g in circuit.gates:
        if g.kind not in ("RPHI", "RX", "RY", "MS"):
            raise UnsupportedGateError(f"{g.kind} is not a native gate; transpile first")


def _insert_paulis(amps, n, gate, hit, rng):
    rows = np.flatnonzero(hit)
    if gate.kind == "MS":
        choice = rng.integers(len(_PAULIS_2Q), size=rows.size)
        for k in np.unique(choice):
            sel = rows[choice == k]
            first, second = _PAULIS_2Q[k]
            block = amps[sel]
            if first is not _IDENTITY:
                block = simulator._apply_1q(block, n, gate.qubits[0], first)
            if second is not _IDENTITY:
                block = simulator._apply_1q(block, n, gate.qubits[1], second)
            amps[sel] = block
    else:
        choice = rng.integers(3, size=rows.size)
        for k in np.unique(choice):
            sel = rows[choice == k]
            amps[sel] = simulator._apply_1q(amps[sel], n, gate.qubits[0], _PAULIS_1Q[k])
    return amps


def noisy_shot_indices(circuit: Circuit, cfg: NoiseConfig, shots: int, rng) -> np.ndarray:
    """Measured basis index of every shot, readout errors included."""
    n = circuit.n_qubits
    dim = 2**n
    amps = np.zeros((shots, dim), dtype=complex)
    amps[:, 0] = 1.0
    for g in circuit.gates:
        amps = simulator._apply_gate(amps, n, g)
        p = gate_error_prob(g, cfg)
        if p > 0:
            hit = rng.random(shots) < p
            if hit.any():
                amps = _insert_paulis(amps, n, g, hit, rng)
    probs = np.abs(amps) ** 2
    cum = np.cumsum(probs, axis=1)
    cum /= cum[:, -1:]
    u = rng.random(shots)
    idx = np.minimum((cum < u[:, None]).sum(axis=1), dim - 1)
    if cfg.p_readout > 0:
        flips = rng.random((shots, n)) < cfg.p_readout
        weights = 1 << (n - 1 - np.arange(n))
        idx = idx ^ (flips.astype(np.int64) @ weights)
    return idx


def sample_noisy(circuit: Circuit, cfg: NoiseConfig | None, shots: int, seed: int) -> MeasurementOutcome:
    """Shot counts of ``circuit`` run from |0...0> under ``cfg``.

    With no config, a disabled config or all-zero probabilities this is exactly
    ``simulator.sample`` of the ideal final state.
    """
    _check_native(circuit)
    if shots < 1:
        raise ConfigurationError(f"shots must be positive, got {shots}")
    if cfg is None or not cfg.active:
        return simulator.sample(simulator.run_circuit(circuit), shots, seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = noisy_shot_indices(circuit, cfg, shots, rng)
    counts = np.bincount(idx, minlength=2**circuit.n_qubits)
    return MeasurementOutcome(simulator.counts_from_indices(counts, circuit.n_qubits), shots)


__all__ = [
    "NoiseConfig", "default_calibration", "disabled", "parse_noise_spec",
    "ms_error_prob", "gate_error_prob", "sample_noisy",
]
