"""Bell states, Werner-form inputs and the random input ensemble."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cache

import numpy as np

from src.qlinalg import (
    ComplexMatrix,
    DensityMatrix,
    DimensionMismatchError,
    DomainError,
    PureStateVector,
)

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
NORMALIZATION_TOL = 1e-10

_SQRT_HALF = 1 / np.sqrt(2)


class BellKind(Enum):
    """The four Bell states, valued by their (amplitude bit, phase bit) label."""

    PHI_PLUS = (0, 0)
    PHI_MINUS = (0, 1)
    PSI_PLUS = (1, 0)
    PSI_MINUS = (1, 1)

    @property
    def amplitude_bit(self) -> int:
        return self.value[0]

    @property
    def phase_bit(self) -> int:
        return self.value[1]

    @classmethod
    def from_bits(cls, amplitude_bit: int, phase_bit: int) -> BellKind:
        return cls((amplitude_bit, phase_bit))


# Protocol target
TARGET = BellKind.PSI_PLUS

# Field order of BellCoefficients
BELL_ORDER: tuple[BellKind, ...] = (BellKind.PSI_PLUS, BellKind.PSI_MINUS, BellKind.PHI_PLUS, BellKind.PHI_MINUS)


@dataclass(frozen=True)
class BellCoefficients:
    """Diagonal weights of a two-qubit state in the Bell basis.

    ``off_diag_norm`` is the largest off-diagonal magnitude; it is 0 for
    Bell-diagonal states.
    """

    a_psi_plus: float
    a_psi_minus: float
    a_phi_plus: float
    a_phi_minus: float
    off_diag_norm: float = 0.0

    def __post_init__(self):
        for kind, w in zip(BELL_ORDER, self.as_tuple(), strict=True):
            if w < -WEIGHT_TOL:
                raise DomainError(f"Bell weight for {kind.name} is negative: {w:.3e}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        """Weights in (Ψ⁺, Ψ⁻, Φ⁺, Φ⁻) order."""
        return (self.a_psi_plus, self.a_psi_minus, self.a_phi_plus, self.a_phi_minus)

    def weight(self, kind: BellKind) -> float:
        return self.as_tuple()[BELL_ORDER.index(kind)]

    @property
    def total(self) -> float:
        return float(sum(self.as_tuple()))

    @classmethod
    def from_mapping(cls, weights: dict[BellKind, float], off_diag_norm: float = 0.0) -> BellCoefficients:
        return cls(*(float(weights.get(kind, 0.0)) for kind in BELL_ORDER), off_diag_norm=off_diag_norm)

    @classmethod
    def werner(cls, f: float) -> BellCoefficients:
        rest = (1 - f) / 3
        return cls(f, rest, rest, rest)


@cache
def _bell_amplitudes(kind: BellKind) -> ComplexMatrix:
    a, p = kind.value
    sign = -1 if p else 1
    amps = np.zeros(4, dtype=np.complex128)
    if a == 0:
        amps[0b00], amps[0b11] = _SQRT_HALF, sign * _SQRT_HALF
    else:
        amps[0b01], amps[0b10] = _SQRT_HALF, sign * _SQRT_HALF
    amps.flags.writeable = False
    return amps


@cache
def _bell_basis() -> ComplexMatrix:
    # columns in BELL_ORDER
    basis = np.column_stack([_bell_amplitudes(kind) for kind in BELL_ORDER])
    basis.flags.writeable = False
    return basis


def bell_state(kind: BellKind) -> PureStateVector:
    """Normalized two-qubit Bell vector, e.g. Ψ⁺ = (|01> + |10>)/√2."""
    return PureStateVector(_bell_amplitudes(kind))


def bell_projector(kind: BellKind) -> ComplexMatrix:
    """Rank-one projector onto the Bell state."""
    amps = _bell_amplitudes(kind)
    return np.outer(amps, amps.conj())


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def bell_diagonal_state(weights: BellCoefficients) -> DensityMatrix:
    """Mixture of Bell projectors with the given weights.

    Raises:
        DomainError: if the weights do not sum to 1.
    """
    if abs(weights.total - 1.0) > NORMALIZATION_TOL:
        raise DomainError(f"Bell weights must sum to 1, got {weights.total:.12f}")
    basis = _bell_basis()
    diag = np.diag(np.array(weights.as_tuple(), dtype=np.complex128))
    return DensityMatrix(basis @ diag @ basis.conj().T)


def werner_from_fidelity(f: float) -> DensityMatrix:
    """f·|Ψ⁺><Ψ⁺| plus (1-f)/3 on each of the other three Bell states.

    Raises:
        DomainError: if ``f`` is outside [0, 1].
    """
    _check_unit_interval("Werner fidelity", f)
    return bell_diagonal_state(BellCoefficients.werner(f))


def depolarized_bell(q: float) -> DensityMatrix:
    """Ψ⁺ sent through a depolarizing channel of strength ``q``: (1-q)|Ψ⁺><Ψ⁺| + q·I/4.

    Equal to ``werner_from_fidelity(1 - 3q/4)``.
    """
    _check_unit_interval("Depolarizing strength", q)
    matrix = (1 - q) * bell_projector(TARGET) + q * np.eye(4, dtype=np.complex128) / 4
    return DensityMatrix(matrix)


def random_input_state(rng: np.random.Generator) -> DensityMatrix:
    """Depolarized Ψ⁺ with strength drawn uniformly from [0, 1].

    ``rng`` should be a ``numpy.random.default_rng(seed)`` generator (PCG64);
    one uniform draw is consumed per call, so a seeded stream is reproducible.
    """
    q = float(rng.uniform(0.0, 1.0))
    return depolarized_bell(q)


def random_bell_weights(rng: np.random.Generator) -> BellCoefficients:
    """Uniformly random point on the Bell-weight simplex."""
    w = rng.dirichlet(np.ones(4))
    return BellCoefficients(*(float(x) for x in w))


def bell_basis_coefficients(rho: DensityMatrix) -> BellCoefficients:
    """Bell-basis weights of a two-qubit state and its largest off-diagonal element.

    Raises:
        DimensionMismatchError: if ``rho`` is not a two-qubit state.
    """
    if rho.n_qubits != 2:
        raise DimensionMismatchError(f"Bell decomposition needs a 2-qubit state, got {rho.n_qubits} qubits")
    basis = _bell_basis()
    in_bell = basis.conj().T @ rho.matrix @ basis
    diag = np.real(np.diag(in_bell))
    off_diag = in_bell - np.diag(np.diag(in_bell))
    return BellCoefficients(
        *(float(w) for w in diag),
        off_diag_norm=float(np.max(np.abs(off_diag))),
    )
