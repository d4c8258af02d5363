"""Shared test fixtures and utilities."""

import numpy as np
import pytest

from src.protocol import ProtocolConfig
from src.qlinalg import DensityMatrix, tensor_states
from src.states import BellKind, bell_state


def bell_density(kind: BellKind) -> DensityMatrix:
    """Density matrix of a Bell state."""
    return DensityMatrix.from_pure(bell_state(kind))


def basis_density(index: int, n_qubits: int) -> DensityMatrix:
    """|index><index| on ``n_qubits`` qubits, qubit 0 most significant."""
    dim = 1 << n_qubits
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    matrix[index, index] = 1.0
    return DensityMatrix(matrix)


def random_density(rng: np.random.Generator, n_qubits: int) -> DensityMatrix:
    """Full-rank random state from a complex Gaussian matrix G as G G† / tr."""
    dim = 1 << n_qubits
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    matrix = g @ g.conj().T
    matrix = (matrix + matrix.conj().T) / 2
    return DensityMatrix(matrix / np.trace(matrix).real)


@pytest.fixture
def rng():
    """Seeded generator so sampled inputs are reproducible."""
    return np.random.default_rng(20240917)


@pytest.fixture
def noiseless_config():
    """Rotation between rounds, perfect gates."""
    return ProtocolConfig()


@pytest.fixture
def noisy_config():
    """Rotation between rounds, 5% gate depolarization."""
    return ProtocolConfig.for_gate_error(0.05)


@pytest.fixture
def psi_plus():
    return bell_density(BellKind.PSI_PLUS)


@pytest.fixture
def psi_plus_phi_plus():
    """Ψ⁺ on qubits (0, 1) and Φ⁺ on qubits (2, 3)."""
    return tensor_states(bell_density(BellKind.PSI_PLUS), bell_density(BellKind.PHI_PLUS))
