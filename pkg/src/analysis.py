"""F_min, F_∞, gate-error sweeps and the purification threshold.

F_min is the boundary between Werner inputs that the iterated protocol
purifies and inputs it degrades. F_∞ is where the ideal input Ψ⁺ settles.
Both are found by iterating full trajectories, never from a single round.
Above the threshold there is nothing to purify and both come back as None.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from src.protocol import (
    DEFAULT_CONVERGENCE_TOL,
    ProtocolConfig,
    Termination,
    TrajectoryRecord,
    iterate_trajectory,
)
from src.qlinalg import DensityMatrix, DomainError
from src.states import TARGET, bell_state, random_input_state, werner_from_fidelity

logger = logging.getLogger(__name__)

# Defaults
DEFAULT_F_TOL = 5e-4
DEFAULT_P_TOL = 2e-3
DEFAULT_BRACKET = (0.0, 0.2)
DEFAULT_MAX_WORKERS = 1
DEFAULT_GAP_TOL = 1e-6

CLASSIFICATION_TOL = 1e-6
# Lowest Werner fidelity; werner(0.25) is I/4
F_FLOOR = 0.25
# An attractor at or below this is not entangled
ENTANGLEMENT_BOUND = 0.5


class BracketError(ValueError):
    """Raised when a threshold bracket does not straddle the threshold."""


class TrajectoryClass(str, Enum):
    PURIFIED = "purified"
    DEGRADED = "degraded"
    STALLED = "stalled"


class SweepRow(BaseModel):
    """F_min and F_∞ at one gate error rate."""

    p_gate: float = Field(description="Two-qubit gate depolarizing probability")
    f_min: float | None = Field(default=None, description="Lowest purifiable Werner fidelity, None if nothing purifies")
    f_infty: float | None = Field(default=None, description="Fidelity the ideal input converges to, None if it degrades")

    @property
    def purifiable(self) -> bool:
        return self.f_min is not None and self.f_infty is not None


class ThresholdReport(BaseModel):
    """Outcome of the threshold bisection."""

    rows: list[SweepRow] = Field(description="Every probed gate error rate, sorted by p_gate")
    p_th: float = Field(description="Midpoint of the final bracket")
    f_at_threshold: float = Field(description="Mean of F_min and F_∞ at the last purifiable probe")
    p_lo: float = Field(description="Final bracket, purifiable edge")
    p_hi: float = Field(description="Final bracket, unpurifiable edge")


def classify_trajectory(record: TrajectoryRecord) -> TrajectoryClass:
    """Purified, Degraded or Stalled from the net fidelity change and the stop reason."""
    if record.rounds == 0 and record.terminated_by is not Termination.ZERO_PROBABILITY:
        raise DomainError("Cannot classify a trajectory with no rounds")
    if record.terminated_by is Termination.ZERO_PROBABILITY:
        return TrajectoryClass.DEGRADED
    if record.net_change < -CLASSIFICATION_TOL:
        return TrajectoryClass.DEGRADED
    if record.net_change > CLASSIFICATION_TOL and record.terminated_by is Termination.CONVERGED:
        return TrajectoryClass.PURIFIED
    return TrajectoryClass.STALLED


def purifies(record: TrajectoryRecord) -> bool:
    """Bisection verdict; a stalled trajectory follows its last non-zero step and ties count as not purified."""
    match classify_trajectory(record):
        case TrajectoryClass.PURIFIED:
            return True
        case TrajectoryClass.DEGRADED:
            return False
        case TrajectoryClass.STALLED:
            return record.last_nonzero_change() > 0.0


def _check_p_gate(p_gate: float) -> None:
    if not 0.0 <= p_gate <= 1.0:
        raise DomainError(f"p_gate must lie in [0, 1], got {p_gate}")


def _config_for(p_gate: float, config: ProtocolConfig | None) -> ProtocolConfig:
    _check_p_gate(p_gate)
    if config is None:
        return ProtocolConfig.for_gate_error(p_gate)
    return config.with_gate_error(p_gate)


def find_f_infty(
    p_gate: float, tol: float = DEFAULT_CONVERGENCE_TOL, config: ProtocolConfig | None = None
) -> float | None:
    """Limit of the trajectory started from Ψ⁺, or None when it does not converge above 1/2.

    Raises:
        DomainError: if ``p_gate`` or ``tol`` is out of range.
    """
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    cfg = replace(_config_for(p_gate, config), convergence_tol=tol)
    record = iterate_trajectory(DensityMatrix.from_pure(bell_state(TARGET)), cfg)
    if record.terminated_by is not Termination.CONVERGED:
        logger.debug(f"p_gate={p_gate:g}: trajectory from Ψ⁺ ended with {record.terminated_by.value}")
        return None
    if record.final_fidelity <= ENTANGLEMENT_BOUND:
        return None
    return record.final_fidelity


def _bisect_f_min(f_infty: float, f_tol: float, cfg: ProtocolConfig) -> float | None:
    def purified_from(f0: float) -> bool:
        return purifies(iterate_trajectory(werner_from_fidelity(f0), cfg))

    # Inputs above the attractor fall towards it, so the upper edge stays below F_∞
    lo, hi = F_FLOOR, f_infty - f_tol
    if hi <= lo or not purified_from(hi):
        return None

    while hi - lo > f_tol:
        mid = (lo + hi) / 2
        if purified_from(mid):
            hi = mid
        else:
            lo = mid
        logger.debug(f"p_gate={cfg.p_gate:g}: F_min bracket [{lo:.6f}, {hi:.6f}]")
    return (lo + hi) / 2


def find_f_min(
    p_gate: float,
    f_tol: float = DEFAULT_F_TOL,
    config: ProtocolConfig | None = None,
    f_infty: float | None = None,
) -> float | None:
    """Lowest Werner input fidelity the iterated protocol purifies.

    Bisects on [0.25, F_∞ - f_tol] until the bracket is no wider than ``f_tol``
    and returns its midpoint. ``f_infty`` may be passed when already known.

    Raises:
        DomainError: if ``p_gate`` or ``f_tol`` is out of range.
    """
    if f_tol <= 0:
        raise DomainError(f"f_tol must be > 0, got {f_tol}")
    cfg = _config_for(p_gate, config)
    if f_infty is None:
        f_infty = find_f_infty(p_gate, cfg.convergence_tol, cfg)
    if f_infty is None:
        return None
    return _bisect_f_min(f_infty, f_tol, cfg)


def evaluate_row(
    p_gate: float,
    f_tol: float = DEFAULT_F_TOL,
    tol: float = DEFAULT_CONVERGENCE_TOL,
    config: ProtocolConfig | None = None,
) -> SweepRow:
    """F_min and F_∞ at one gate error rate; both None when nothing purifies."""
    if f_tol <= 0:
        raise DomainError(f"f_tol must be > 0, got {f_tol}")
    cfg = replace(_config_for(p_gate, config), convergence_tol=tol)
    f_infty = find_f_infty(p_gate, tol, cfg)
    f_min = find_f_min(p_gate, f_tol, cfg, f_infty=f_infty) if f_infty is not None else None
    row = SweepRow(p_gate=p_gate, f_min=f_min, f_infty=f_infty)
    f_min_text = "NA" if f_min is None else f"{f_min:.6f}"
    f_infty_text = "NA" if f_infty is None else f"{f_infty:.6f}"
    logger.info(f"p_gate={p_gate:.4f}: F_min={f_min_text}, F_inf={f_infty_text}")
    return row


def sweep(
    p_values: Sequence[float],
    f_tol: float = DEFAULT_F_TOL,
    tol: float = DEFAULT_CONVERGENCE_TOL,
    config: ProtocolConfig | None = None,
    max_workers: int = DEFAULT_MAX_WORKERS,
) -> list[SweepRow]:
    """One SweepRow per gate error rate, returned in ``p_values`` order.

    Rows are independent; with ``max_workers > 1`` they are evaluated on a
    thread pool.
    """
    if max_workers < 1:
        raise DomainError(f"max_workers must be >= 1, got {max_workers}")
    for p in p_values:
        _check_p_gate(p)

    total = len(p_values)
    if total == 0:
        return []

    logger.info(f"Sweeping {total} gate error rates (workers={max_workers})...")
    start = time.time()
    workers = min(max_workers, total)

    if workers > 1:
        results: list[SweepRow | None] = [None] * total
        with ThreadPoolExecutor(max_workers=workers) as pool:
            future_to_idx = {
                pool.submit(evaluate_row, p, f_tol, tol, config): i for i, p in enumerate(p_values)
            }
            done = 0
            for future in as_completed(future_to_idx):
                results[future_to_idx[future]] = future.result()
                done += 1
                logger.info(f"  Progress: {done}/{total} ({done * 100 // total}%)")
        rows = [r for r in results if r is not None]
    else:
        rows = []
        for i, p in enumerate(p_values):
            rows.append(evaluate_row(p, f_tol, tol, config))
            logger.info(f"  Progress: {i + 1}/{total} ({(i + 1) * 100 // total}%)")

    logger.info(f"Sweep finished in {time.time() - start:.1f}s")
    return rows


def find_threshold(
    p_lo: float = DEFAULT_BRACKET[0],
    p_hi: float = DEFAULT_BRACKET[1],
    p_tol: float = DEFAULT_P_TOL,
    f_tol: float = DEFAULT_F_TOL,
    config: ProtocolConfig | None = None,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> ThresholdReport:
    """Bisect on p_gate for the point where no Werner input can be purified.

    Raises:
        DomainError: if the bracket or tolerances are malformed.
        BracketError: if ``p_lo`` is not purifiable or ``p_hi`` is.
    """
    if p_tol <= 0:
        raise DomainError(f"p_tol must be > 0, got {p_tol}")
    _check_p_gate(p_lo)
    _check_p_gate(p_hi)
    if p_lo >= p_hi:
        raise DomainError(f"Bracket must satisfy p_lo < p_hi, got [{p_lo}, {p_hi}]")

    tol = config.convergence_tol if config is not None else DEFAULT_CONVERGENCE_TOL
    rows: list[SweepRow] = []

    def probe(p: float) -> SweepRow:
        row = evaluate_row(p, f_tol, tol, config)
        rows.append(row)
        return row

    lo_row = probe(p_lo)
    if lo_row.f_min is None or lo_row.f_infty is None or lo_row.f_infty - lo_row.f_min <= gap_tol:
        raise BracketError(f"Purification is not possible at the lower edge p_gate={p_lo}")
    if probe(p_hi).purifiable:
        raise BracketError(f"Purification is still possible at the upper edge p_gate={p_hi}")

    f_at_threshold = (lo_row.f_min + lo_row.f_infty) / 2
    lo, hi = p_lo, p_hi
    while hi - lo > p_tol:
        mid = (lo + hi) / 2
        row = probe(mid)
        if row.f_min is not None and row.f_infty is not None:
            lo = mid
            f_at_threshold = (row.f_min + row.f_infty) / 2
        else:
            hi = mid
        logger.debug(f"Threshold bracket [{lo:.5f}, {hi:.5f}]")

    p_th = (lo + hi) / 2
    logger.info(f"Threshold p_th={p_th:.5f} (bracket [{lo:.5f}, {hi:.5f}]), F={f_at_threshold:.6f}")
    return ThresholdReport(
        rows=sorted(rows, key=lambda r: r.p_gate),
        p_th=p_th,
        f_at_threshold=f_at_threshold,
        p_lo=lo,
        p_hi=hi,
    )


def grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive evenly spaced grid, rounded so 0.1 + 0.2 style drift does not leak into output."""
    if step <= 0:
        raise DomainError(f"Grid step must be > 0, got {step}")
    if stop < start:
        raise DomainError(f"Grid stop {stop} is below start {start}")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 10) for i in range(count)]


def trajectory_fan(
    p_gate: float,
    n_states: int,
    rounds: int,
    seed: int,
    config: ProtocolConfig | None = None,
) -> list[TrajectoryRecord]:
    """Iterate ``n_states`` random depolarized-Bell inputs for up to ``rounds`` rounds each.

    Inputs come from ``numpy.random.default_rng(seed)``, so a seed fixes the
    whole fan.
    """
    if n_states < 0:
        raise DomainError(f"n_states must be >= 0, got {n_states}")
    cfg = replace(_config_for(p_gate, config), max_rounds=rounds)
    rng = np.random.default_rng(seed)
    inputs = [random_input_state(rng) for _ in range(n_states)]
    return [iterate_trajectory(rho, cfg) for rho in inputs]
