"""Embedding circuits for digit features and weighted graphs, together with
closed-form kernels used as oracles for the simulated ones."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, cx, ms, rx, ry
from .data import GraphInstance, ising_energies
from .errors import DomainError, NormalizationError, ShapeError

DEFAULT_GAMMA = 0.8
EPSILON = 1e-12


def _angles4(x: Sequence[float]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ShapeError(f"expected 4 features, got shape {x.shape}")
    return x


def encode_ry(x: Sequence[float]) -> Circuit:
    x = _angles4(x)
    return Circuit(4, tuple(ry(q, x[q]) for q in range(4)), {"encoding": "ry"})


def encode_ry_cx(x: Sequence[float]) -> Circuit:
    x = _angles4(x)
    gates = tuple(ry(q, x[q]) for q in range(4)) + (cx(0, 1), cx(2, 3))
    return Circuit(4, gates, {"encoding": "rycx"})


@dataclass(frozen=True)
class AmplitudeAngles:
    a: tuple[float, float, float, float, float]
    beta: tuple[float, float, float]


def normalize_padded(x: Sequence[float]) -> np.ndarray:
    x = _angles4(x)
    if np.any(x < 0):
        raise DomainError("amplitude encoding needs nonnegative components")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise NormalizationError("cannot normalize the zero vector")
    return x / norm


AMPLITUDE_VARIANTS = ("exact", "epsilon", "verbatim")


def amplitude_angles(x: Sequence[float], variant: str = "exact") -> AmplitudeAngles:
    """Rotation angles of the two-qubit amplitude-encoding circuit.

    ``x`` is the padded feature vector; it is normalized here.

    ``"exact"``
        beta0 = 2 atan2(x2, x1), beta1 = 2 atan2(x4, x3) and
        beta2 = 2 arcsin(sqrt(x3^2 + x4^2)), evaluated as an atan2 so that it
        stays accurate when the upper half carries almost no weight; prepares
        x_bar to rounding error.
    ``"epsilon"``
        beta0, beta1 as ``2 arcsin(x2 / sqrt(x1^2 + x2^2 + eps))`` with
        eps = 1e-12. When x1 = 0 exactly this is off by about sqrt(eps)/x2.
    ``"verbatim"``
        the epsilon form with beta2 = 2 arcsin(x3^2 + x4^2), i.e. without the
        square root. Does not reproduce x_bar for generic inputs.
    """
    if variant not in AMPLITUDE_VARIANTS:
        raise ValueError(f"unknown amplitude variant {variant!r}")
    xb = normalize_padded(x)
    x1, x2, x3, x4 = xb
    lower = x3**2 + x4**2
    if variant == "exact":
        beta0 = 2 * np.arctan2(x2, x1)
        beta1 = 2 * np.arctan2(x4, x3)
    else:
        beta0 = 2 * np.arcsin(x2 / np.sqrt(x1**2 + x2**2 + EPSILON))
        beta1 = 2 * np.arcsin(x4 / np.sqrt(x3**2 + x4**2 + EPSILON))
    if variant == "exact":
        # arcsin(s) written as atan2(s, sqrt(1 - s^2)); stays accurate near pi
        beta2 = 2 * np.arctan2(np.sqrt(lower), np.hypot(x1, x2))
    else:
        # clip guards against 1 + ulp from rounding
        beta2 = 2 * np.arcsin(np.clip(lower if variant == "verbatim" else np.sqrt(lower), 0.0, 1.0))
    a = (beta2, -beta1 / 2, beta1 / 2, -beta0 / 2, beta0 / 2)
    return AmplitudeAngles(tuple(float(v) for v in a), (float(beta0), float(beta1), float(beta2)))


def encode_amplitude(x: Sequence[float], variant: str = "exact") -> Circuit:
    """Prepare |x_bar> on two qubits (qubit 0 is the high-order amplitude bit).

    The RY(a1) on qubit 0 splits the weight between the halves; each of the
    two CX-RY-CX-RY blocks is a controlled rotation of qubit 1, with the RX(pi)
    pair steering the second block onto the qubit-0 = 0 branch.
    """
    a1, a2, a3, a4, a5 = amplitude_angles(x, variant).a
    gates = (
        ry(0, a1),
        cx(0, 1), ry(1, a2), cx(0, 1), ry(1, a3), rx(0, np.pi),
        cx(0, 1), ry(1, a4), cx(0, 1), ry(1, a5), rx(0, np.pi),
    )
    return Circuit(2, gates, {"encoding": "amplitude"})


def encode_graph(g: GraphInstance, gamma: float = DEFAULT_GAMMA) -> Circuit:
    """One MS(gamma * g_jk / max|g|) per nonzero edge, edges in (j, k) order."""
    gt = g.normalized_weights()
    gates = tuple(ms(j, k, gamma * gt[j, k]) for j, k, _ in g.edges())
    return Circuit(g.n, gates, {"encoding": "graph"})


# -- closed-form kernels --------------------------------------------------

def analytic_kernel_ry(x: Sequence[float], y: Sequence[float]) -> float:
    d = _angles4(x) - _angles4(y)
    return float(np.prod(np.cos(d / 2) ** 2))


def analytic_kernel_amplitude(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.dot(normalize_padded(x), normalize_padded(y)) ** 2)


def analytic_kernel_graph(g: GraphInstance, g_prime: GraphInstance, gamma: float = DEFAULT_GAMMA) -> float:
    """|2^-n sum_x exp(-i gamma (E_x / g_max - E'_x / g'_max))|^2 by enumeration."""
    if g.n != g_prime.n:
        raise ShapeError(f"graphs have {g.n} and {g_prime.n} vertices")
    if g.g_max == 0 or g_prime.g_max == 0:
        raise NormalizationError("graph has no nonzero weight")
    phases = gamma * (ising_energies(g) / g.g_max - ising_energies(g_prime) / g_prime.g_max)
    overlap = np.mean(np.exp(-1j * phases))
    return float(abs(overlap) ** 2)


__all__ = [
    "DEFAULT_GAMMA", "AmplitudeAngles", "encode_ry", "encode_ry_cx", "amplitude_angles",
    "encode_amplitude", "encode_graph", "normalize_padded", "analytic_kernel_ry",
    "analytic_kernel_amplitude", "analytic_kernel_graph",
]
