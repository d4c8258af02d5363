"""One purification round and its recursive iteration on identical copies.

Register layout for a round (qubit 0 most significant)::

    0: A1  Alice, kept pair        2: A2  Alice, measured pair
    1: B1  Bob,   kept pair        3: B2  Bob,   measured pair

Alice applies a noisy CNOT A1 -> A2 and Bob a noisy CNOT B1 -> B2. The
measured pair is read out in the computational basis and the kept pair
survives when both outcomes agree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from src.channels import GateNoise, noisy_cnot
from src.qlinalg import (
    ZERO_PROBABILITY_TOL,
    DensityMatrix,
    DimensionMismatchError,
    DomainError,
    ZeroProbabilityError,
    apply_local_unitaries,
    fidelity_with_pure,
    postselect_equal_outcomes,
    require_physical,
    tensor_states,
)
from src.states import TARGET, bell_state, werner_from_fidelity

logger = logging.getLogger(__name__)

# Defaults
DEFAULT_MAX_ROUNDS = 10_000
DEFAULT_CONVERGENCE_TOL = 1e-9
DEFAULT_ZERO_PROB_TOL = ZERO_PROBABILITY_TOL

A1, B1, A2, B2 = 0, 1, 2, 3

_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)
# Alice rotates by exp(-i pi/4 X), Bob by the conjugate
_ROTATION_ALICE = (_I2 - 1j * _X) / np.sqrt(2)
_ROTATION_BOB = (_I2 + 1j * _X) / np.sqrt(2)


class LocalOperations(str, Enum):
    """Local operation applied to the kept pair between rounds."""

    ROTATE = "rotate"
    TWIRL = "twirl"
    NONE = "none"


class Termination(str, Enum):
    """Why a trajectory stopped."""

    CONVERGED = "converged"
    MAX_ROUNDS = "max_rounds"
    ZERO_PROBABILITY = "zero_probability"


@dataclass(frozen=True)
class ProtocolConfig:
    """Gate noise, inter-round local operations and iteration limits."""

    noise: GateNoise = field(default_factory=GateNoise)
    twirl_between_rounds: bool = False
    rotate_between_rounds: bool = True
    max_rounds: int = DEFAULT_MAX_ROUNDS
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    zero_prob_tol: float = DEFAULT_ZERO_PROB_TOL

    def __post_init__(self):
        if self.max_rounds < 1:
            raise DomainError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.convergence_tol <= 0:
            raise DomainError(f"convergence_tol must be > 0, got {self.convergence_tol}")
        if self.zero_prob_tol < 0:
            raise DomainError(f"zero_prob_tol must be >= 0, got {self.zero_prob_tol}")

    @classmethod
    def for_gate_error(
        cls, p_gate: float, local_ops: LocalOperations | str = LocalOperations.ROTATE, **kwargs
    ) -> ProtocolConfig:
        """Build a config for ``p_gate`` with one of the inter-round local operations."""
        ops = LocalOperations(local_ops)
        return cls(
            noise=GateNoise(p_gate),
            twirl_between_rounds=ops is LocalOperations.TWIRL,
            rotate_between_rounds=ops is LocalOperations.ROTATE,
            **kwargs,
        )

    def with_gate_error(self, p_gate: float) -> ProtocolConfig:
        """Copy of this config with a different gate error rate."""
        return replace(self, noise=GateNoise(p_gate))

    @property
    def p_gate(self) -> float:
        return self.noise.p_gate

    @property
    def local_operations(self) -> LocalOperations:
        if self.twirl_between_rounds:
            return LocalOperations.TWIRL
        if self.rotate_between_rounds:
            return LocalOperations.ROTATE
        return LocalOperations.NONE


@dataclass(frozen=True, eq=False)
class RoundOutcome:
    """Post-selected kept pair of one round."""

    output_state: DensityMatrix
    success_probability: float
    output_fidelity: float


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Fidelity after every round of an iterated purification."""

    input_fidelity: float
    fidelities: tuple[float, ...]
    terminated_by: Termination
    success_probabilities: tuple[float, ...] = ()
    final_state: DensityMatrix | None = None

    @property
    def rounds(self) -> int:
        return len(self.fidelities)

    @property
    def final_fidelity(self) -> float:
        return self.fidelities[-1] if self.fidelities else self.input_fidelity

    @property
    def net_change(self) -> float:
        return self.final_fidelity - self.input_fidelity

    def last_nonzero_change(self) -> float:
        """Most recent non-zero round-to-round fidelity change (0.0 if none)."""
        previous = (self.input_fidelity, *self.fidelities)
        for before, after in zip(reversed(previous[:-1]), reversed(previous[1:]), strict=True):
            if after != before:
                return after - before
        return 0.0


def _require_two_qubits(rho: DensityMatrix) -> None:
    if rho.n_qubits != 2:
        raise DimensionMismatchError(f"Expected a 2-qubit pair state, got {rho.n_qubits} qubits")


def target_fidelity(rho: DensityMatrix) -> float:
    """Fidelity with the Ψ⁺ target."""
    return fidelity_with_pure(rho, bell_state(TARGET))


def purification_round(rho: DensityMatrix, config: ProtocolConfig) -> RoundOutcome:
    """Run the two-CNOT circuit on two copies of ``rho`` and post-select equal outcomes.

    Raises:
        ZeroProbabilityError: if the copies cannot pass post-selection.
    """
    _require_two_qubits(rho)
    joint = tensor_states(rho, rho)
    joint = noisy_cnot(joint, control=A1, target=A2, noise=config.noise)
    joint = noisy_cnot(joint, control=B1, target=B2, noise=config.noise)
    kept, probability = postselect_equal_outcomes(joint, A2, B2, zero_tol=config.zero_prob_tol)
    require_physical(kept)
    return RoundOutcome(
        output_state=kept,
        success_probability=probability,
        output_fidelity=target_fidelity(kept),
    )


def twirl_to_werner(rho: DensityMatrix) -> DensityMatrix:
    """Replace ``rho`` by the Werner state with the same Ψ⁺ fidelity.

    Deterministic equivalent of random bilateral twirling.
    """
    _require_two_qubits(rho)
    return werner_from_fidelity(target_fidelity(rho))


def bilateral_rotation(rho: DensityMatrix) -> DensityMatrix:
    """Alice applies (I - iX)/√2 and Bob (I + iX)/√2 to their halves of the pair.

    Fixes Ψ⁺ and Φ⁺ and exchanges Ψ⁻ with Φ⁻, so phase errors picked up in one
    round become errors the next round's parity check filters out.
    """
    _require_two_qubits(rho)
    return apply_local_unitaries(rho, {0: _ROTATION_ALICE, 1: _ROTATION_BOB})


def _between_rounds(rho: DensityMatrix, config: ProtocolConfig) -> DensityMatrix:
    if config.rotate_between_rounds:
        rho = bilateral_rotation(rho)
    if config.twirl_between_rounds:
        rho = twirl_to_werner(rho)
    return rho


def iterate_trajectory(rho0: DensityMatrix, config: ProtocolConfig) -> TrajectoryRecord:
    """Feed each round's output back in as two fresh identical copies.

    Stops when the fidelity changes by less than ``config.convergence_tol``,
    after ``config.max_rounds`` rounds, or when post-selection becomes
    impossible. The cause is recorded, never raised.
    """
    _require_two_qubits(rho0)
    f_in = target_fidelity(rho0)
    fidelities: list[float] = []
    probabilities: list[float] = []
    state = rho0
    final_state = rho0
    previous = f_in
    terminated_by = Termination.MAX_ROUNDS

    for round_index in range(config.max_rounds):
        try:
            outcome = purification_round(state, config)
        except ZeroProbabilityError as e:
            logger.debug(f"Trajectory from F={f_in:.6f} stopped at round {round_index}: {e}")
            terminated_by = Termination.ZERO_PROBABILITY
            break

        fidelities.append(outcome.output_fidelity)
        probabilities.append(outcome.success_probability)
        final_state = outcome.output_state
        state = _between_rounds(outcome.output_state, config)

        if abs(outcome.output_fidelity - previous) < config.convergence_tol:
            terminated_by = Termination.CONVERGED
            break
        previous = outcome.output_fidelity

    logger.debug(
        f"Trajectory F0={f_in:.6f} p_gate={config.p_gate:g}: {len(fidelities)} rounds, "
        f"final F={fidelities[-1] if fidelities else f_in:.9f} ({terminated_by.value})"
    )
    return TrajectoryRecord(
        input_fidelity=f_in,
        fidelities=tuple(fidelities),
        terminated_by=terminated_by,
        success_probabilities=tuple(probabilities),
        final_state=final_state,
    )
