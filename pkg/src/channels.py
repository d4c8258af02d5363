"""CNOT gate and the two-qubit depolarizing gate-noise model.

A noisy CNOT is the ideal gate followed, on exactly the same two qubits, by

    E(rho) = (1 - p) rho + p (I/4 on the gate qubits) ⊗ tr_gate(rho)

The noise term is normalized to the maximally mixed state so the channel is
trace preserving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.qlinalg import (
    ComplexMatrix,
    DensityMatrix,
    DomainError,
    apply_two_qubit_unitary,
    check_qubit_pair,
    with_maximally_mixed,
)

logger = logging.getLogger(__name__)

_CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=np.complex128,
)
_CNOT.flags.writeable = False


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Depolarizing probability must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class GateNoise:
    """Probability that a two-qubit gate fully depolarizes the qubits it acts on."""

    p_gate: float = 0.0

    def __post_init__(self):
        _check_probability(self.p_gate)

    @property
    def is_noiseless(self) -> bool:
        return self.p_gate == 0.0


def cnot_unitary() -> ComplexMatrix:
    """CNOT with the control on the more significant slot: swaps |10> and |11>."""
    return _CNOT.copy()


def depolarize_two_qubits(rho: DensityMatrix, q_a: int, q_b: int, p: float) -> DensityMatrix:
    """Apply the two-qubit depolarizing channel with probability ``p`` to ``(q_a, q_b)``.

    Raises:
        IndexError: on invalid or equal qubit indices.
        DomainError: if ``p`` is outside [0, 1].
    """
    _check_probability(p)
    check_qubit_pair(rho.n_qubits, q_a, q_b)
    if p == 0.0:
        return rho
    return DensityMatrix((1 - p) * rho.matrix + p * with_maximally_mixed(rho, q_a, q_b))


def noisy_cnot(rho: DensityMatrix, control: int, target: int, noise: GateNoise) -> DensityMatrix:
    """Ideal CNOT on ``(control, target)`` followed by depolarization of both qubits."""
    after_gate = apply_two_qubit_unitary(rho, _CNOT, control, target)
    return depolarize_two_qubits(after_gate, control, target, noise.p_gate)
