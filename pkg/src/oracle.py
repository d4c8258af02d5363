"""Matrix-free reference for the noiseless round on Bell-diagonal states.

Bell states are labelled by an amplitude bit (Φ = 0, Ψ = 1) and a phase bit
(+ = 0, - = 1). A bilateral CNOT copies the source amplitude bit into the
target and the target phase bit back into the source:

    source' = (a1, p1 XOR p2)
    target' = (a1 XOR a2, p2)

Equal measurement outcomes on the target pair mean its amplitude bit is 0.
Nothing here touches a density matrix, so it checks the dense simulation
independently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

from src.qlinalg import DomainError
from src.states import BELL_ORDER, BellCoefficients, BellKind

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class BellBitLabel:
    """(amplitude bit, phase bit) of a Bell state."""

    amplitude_bit: int
    phase_bit: int

    def __post_init__(self):
        if self.amplitude_bit not in (0, 1) or self.phase_bit not in (0, 1):
            raise DomainError(f"Bell bits must be 0 or 1, got ({self.amplitude_bit}, {self.phase_bit})")

    @classmethod
    def of(cls, kind: BellKind) -> BellBitLabel:
        return cls(kind.amplitude_bit, kind.phase_bit)

    @property
    def kind(self) -> BellKind:
        return BellKind.from_bits(self.amplitude_bit, self.phase_bit)


def bilateral_cnot_action(source: BellBitLabel, target: BellBitLabel) -> tuple[BellBitLabel, BellBitLabel]:
    """Bell labels of (source, target) after both parties apply CNOT source -> target."""
    new_source = BellBitLabel(source.amplitude_bit, source.phase_bit ^ target.phase_bit)
    new_target = BellBitLabel(source.amplitude_bit ^ target.amplitude_bit, target.phase_bit)
    return new_source, new_target


@dataclass(frozen=True)
class EnumerationTally:
    """Unnormalized kept weights per Bell state plus the discarded weight."""

    kept: dict[BellKind, float]
    discarded: float

    @property
    def kept_total(self) -> float:
        return sum(self.kept.values())


def enumerate_round(weights: BellCoefficients) -> EnumerationTally:
    """Walk all 16 (source, target) Bell combinations with product weights."""
    kept = dict.fromkeys(BELL_ORDER, 0.0)
    discarded = 0.0
    for source_kind, target_kind in product(BELL_ORDER, repeat=2):
        w = weights.weight(source_kind) * weights.weight(target_kind)
        new_source, new_target = bilateral_cnot_action(BellBitLabel.of(source_kind), BellBitLabel.of(target_kind))
        if new_target.amplitude_bit == 0:
            kept[new_source.kind] += w
        else:
            discarded += w
    return EnumerationTally(kept=kept, discarded=discarded)


def noiseless_round_bell_diagonal(weights: BellCoefficients) -> tuple[BellCoefficients, float]:
    """Output Bell weights and success probability of one noiseless round.

    Raises:
        DomainError: if the weights are not a probability vector.
    """
    if abs(weights.total - 1.0) > NORMALIZATION_TOL:
        raise DomainError(f"Bell weights must sum to 1, got {weights.total:.12f}")

    tally = enumerate_round(weights)
    # at least half the weight survives for any normalized input
    probability = tally.kept_total

    normalized = {kind: w / probability for kind, w in tally.kept.items()}
    return BellCoefficients.from_mapping(normalized), probability
