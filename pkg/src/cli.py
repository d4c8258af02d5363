"""Command-line front end: trajectory fans, F_min/F_∞ sweeps, the threshold and single rounds.

Every CSV starts with ``#`` manifest lines followed by one header row.
Exit codes: 0 ok, 2 usage or invalid parameters, 3 I/O failure, 4 bad
threshold bracket.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from argparse import ArgumentTypeError
from collections.abc import Callable, Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, TextIO

import pandas as pd
from pydantic import BaseModel, Field

from src import __version__
from src.analysis import (
    DEFAULT_BRACKET,
    DEFAULT_F_TOL,
    DEFAULT_MAX_WORKERS,
    DEFAULT_P_TOL,
    BracketError,
    SweepRow,
    find_threshold,
    grid,
    sweep,
    trajectory_fan,
)
from src.protocol import LocalOperations, ProtocolConfig, purification_round
from src.qlinalg import DomainError
from src.states import werner_from_fidelity

UTC = timezone.utc

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BRACKET = 4

SWEEP_P_MAX = 0.2
ROUND_F0_MIN = 0.25
DEFAULT_GRID = (0.0, 0.1, 0.005)
DEFAULT_STATES = 50
DEFAULT_ROUNDS = 20
DEFAULT_SEED = 1

TRAJECTORY_COLUMNS = ["state_index", "round", "fidelity"]
SWEEP_COLUMNS = ["p_gate", "f_min", "f_infty"]

CSV_OPTIONS: dict[str, Any] = {"index": False, "float_format": "%.10g", "na_rep": "NA", "lineterminator": "\n"}


class RunManifest(BaseModel):
    """Provenance written as ``#`` lines above every CSV."""

    command: str = Field(description="Subcommand that produced the file")
    parameters: dict[str, Any] = Field(description="Resolved parameter values")
    seed: int | None = Field(default=None, description="Seed of the input sampler, if any")
    version: str = Field(default=__version__, description="Package version")
    timestamp: str = Field(
        default_factory=lambda: datetime.now(UTC).isoformat(timespec="seconds"),
        description="UTC creation time",
    )

    def header_lines(self) -> list[str]:
        return [
            f"# command: {self.command}",
            f"# parameters: {json.dumps(self.parameters, sort_keys=True)}",
            f"# seed: {'none' if self.seed is None else self.seed}",
            f"# version: {self.version}",
            f"# timestamp: {self.timestamp}",
        ]


class RoundReport(BaseModel):
    """Single purification round on a Werner input."""

    p_gate: float = Field(description="Two-qubit gate depolarizing probability")
    input_fidelity: float = Field(description="Ψ⁺ fidelity of the Werner input")
    output_fidelity: float = Field(description="Ψ⁺ fidelity of the kept pair")
    success_probability: float = Field(description="Probability both measurement outcomes agree")


def _range_arg(n_parts: int) -> Callable[[str], tuple[float, ...]]:
    """argparse type for colon-separated numbers such as ``0:0.1:0.005``."""

    def parse(value: str) -> tuple[float, ...]:
        parts = value.split(":")
        if len(parts) != n_parts:
            raise ArgumentTypeError(f"Expected {n_parts} colon-separated numbers, got '{value}'")
        try:
            return tuple(float(p) for p in parts)
        except ValueError as e:
            raise ArgumentTypeError(f"Invalid number in '{value}'") from e

    return parse


def write_csv(out: Path | TextIO, manifest: RunManifest, frame: pd.DataFrame) -> None:
    """Manifest comment lines, then the frame as CSV."""
    if isinstance(out, Path):
        with out.open("w", encoding="utf-8", newline="") as fh:
            write_csv(fh, manifest, frame)
        return
    for line in manifest.header_lines():
        out.write(line + "\n")
    frame.to_csv(out, **CSV_OPTIONS)


def _sweep_frame(rows: Sequence[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=SWEEP_COLUMNS, dtype=float)


def _run(command: str, action: Callable[[], int]) -> int:
    """Map library exceptions to exit codes."""
    try:
        return action()
    except BracketError as e:
        logger.error(f"{command}: {e}")
        return EXIT_BRACKET
    except DomainError as e:
        logger.error(f"{command}: invalid parameters: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"{command}: cannot write output: {e}")
        return EXIT_IO


def cmd_trajectories(
    p_gate: float,
    n_states: int,
    rounds: int,
    seed: int,
    out: Path,
    local_ops: str = LocalOperations.ROTATE.value,
) -> int:
    """Fidelity after every round for ``n_states`` random inputs, round 0 being the input."""

    def action() -> int:
        config = ProtocolConfig.for_gate_error(p_gate, local_ops)
        records = trajectory_fan(p_gate, n_states, rounds, seed, config)
        data = [
            (i, r, f)
            for i, record in enumerate(records)
            for r, f in enumerate((record.input_fidelity, *record.fidelities))
        ]
        frame = pd.DataFrame(data, columns=TRAJECTORY_COLUMNS)
        manifest = RunManifest(
            command="trajectories",
            parameters={"p_gate": p_gate, "states": n_states, "rounds": rounds, "local_ops": local_ops},
            seed=seed,
        )
        write_csv(out, manifest, frame)
        logger.info(f"Wrote {len(records)} trajectories ({len(data)} rows) to {out}")
        return EXIT_OK

    return _run("trajectories", action)


def cmd_sweep(
    p_start: float,
    p_stop: float,
    p_step: float,
    out: Path,
    f_tol: float = DEFAULT_F_TOL,
    local_ops: str = LocalOperations.ROTATE.value,
    workers: int = DEFAULT_MAX_WORKERS,
) -> int:
    """F_min and F_∞ on an inclusive p_gate grid; absent values become NA."""

    def action() -> int:
        if not 0.0 <= p_start < p_stop <= SWEEP_P_MAX or p_step <= 0:
            raise DomainError(
                f"Grid must satisfy 0 <= start < stop <= {SWEEP_P_MAX} and step > 0, "
                f"got {p_start}:{p_stop}:{p_step}"
            )
        config = ProtocolConfig.for_gate_error(0.0, local_ops)
        rows = sweep(grid(p_start, p_stop, p_step), f_tol=f_tol, config=config, max_workers=workers)
        manifest = RunManifest(
            command="sweep",
            parameters={
                "grid": [p_start, p_stop, p_step],
                "f_tol": f_tol,
                "local_ops": local_ops,
                "workers": workers,
            },
        )
        write_csv(out, manifest, _sweep_frame(rows))
        logger.info(f"Wrote {len(rows)} sweep rows to {out}")
        return EXIT_OK

    return _run("sweep", action)


def cmd_threshold(
    p_lo: float,
    p_hi: float,
    p_tol: float,
    out: Path | None = None,
    f_tol: float = DEFAULT_F_TOL,
    local_ops: str = LocalOperations.ROTATE.value,
) -> int:
    """Print p_th and the fidelity where F_min meets F_∞; optionally write the probed rows."""

    def action() -> int:
        config = ProtocolConfig.for_gate_error(0.0, local_ops)
        report = find_threshold(p_lo, p_hi, p_tol, f_tol=f_tol, config=config)
        if out is not None:
            manifest = RunManifest(
                command="threshold",
                parameters={"bracket": [p_lo, p_hi], "p_tol": p_tol, "f_tol": f_tol, "local_ops": local_ops},
            )
            write_csv(out, manifest, _sweep_frame(report.rows))
            logger.info(f"Wrote {len(report.rows)} probe rows to {out}")
        print(f"p_th: {report.p_th:.10g}")
        print(f"f_at_threshold: {report.f_at_threshold:.10g}")
        return EXIT_OK

    return _run("threshold", action)


def cmd_round(f0: float, p_gate: float, as_json: bool = False) -> int:
    """One purification round on werner(f0)."""

    def action() -> int:
        if not ROUND_F0_MIN <= f0 <= 1.0:
            raise DomainError(f"f0 must lie in [{ROUND_F0_MIN}, 1], got {f0}")
        outcome = purification_round(werner_from_fidelity(f0), ProtocolConfig.for_gate_error(p_gate))
        report = RoundReport(
            p_gate=p_gate,
            input_fidelity=f0,
            output_fidelity=outcome.output_fidelity,
            success_probability=outcome.success_probability,
        )
        if as_json:
            print(report.model_dump_json())
        else:
            for key, value in report.model_dump().items():
                print(f"{key}: {value:.10g}")
        return EXIT_OK

    return _run("round", action)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="purification-threshold",
        description="Entanglement purification under depolarizing gate noise",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Log debug output to stderr")
    verbosity.add_argument("--quiet", action="store_true", help="Only log warnings and errors")

    local_ops = argparse.ArgumentParser(add_help=False)
    local_ops.add_argument(
        "--local-ops",
        choices=[op.value for op in LocalOperations],
        default=LocalOperations.ROTATE.value,
        help="Local operation on the kept pair between rounds. Default: rotate",
    )
    f_tol = argparse.ArgumentParser(add_help=False)
    f_tol.add_argument("--f-tol", type=float, default=DEFAULT_F_TOL, help=f"F_min bisection width. Default: {DEFAULT_F_TOL}")

    commands = parser.add_subparsers(dest="command", required=True)

    traj = commands.add_parser("trajectories", parents=[local_ops], help="Fidelity trajectories of random inputs")
    traj.add_argument("--p-gate", type=float, default=0.0, help="Gate error rate. Default: 0")
    traj.add_argument("--states", type=int, default=DEFAULT_STATES, help=f"Number of inputs. Default: {DEFAULT_STATES}")
    traj.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS, help=f"Round cap. Default: {DEFAULT_ROUNDS}")
    traj.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"Input sampler seed. Default: {DEFAULT_SEED}")
    traj.add_argument("--out", type=Path, required=True, help="Output CSV path")

    sw = commands.add_parser("sweep", parents=[local_ops, f_tol], help="F_min and F_inf against gate error rate")
    sw.add_argument(
        "--grid",
        type=_range_arg(3),
        default=DEFAULT_GRID,
        metavar="START:STOP:STEP",
        help="Inclusive p_gate grid. Default: 0:0.1:0.005",
    )
    sw.add_argument("--workers", type=int, default=DEFAULT_MAX_WORKERS, help="Rows evaluated in parallel. Default: 1")
    sw.add_argument("--out", type=Path, required=True, help="Output CSV path")

    th = commands.add_parser("threshold", parents=[local_ops, f_tol], help="Locate the gate error threshold")
    th.add_argument(
        "--bracket",
        type=_range_arg(2),
        default=DEFAULT_BRACKET,
        metavar="LO:HI",
        help="p_gate bracket straddling the threshold. Default: 0:0.2",
    )
    th.add_argument("--p-tol", type=float, default=DEFAULT_P_TOL, help=f"Final bracket width. Default: {DEFAULT_P_TOL}")
    th.add_argument("--out", type=Path, default=None, help="Optional CSV of probed rows")

    rd = commands.add_parser("round", help="One purification round on a Werner input")
    rd.add_argument("--f0", type=float, required=True, help="Werner input fidelity in [0.25, 1]")
    rd.add_argument("--p-gate", type=float, default=0.0, help="Gate error rate. Default: 0")
    rd.add_argument("--json", action="store_true", help="Print the result as JSON")

    return parser


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    # stderr only; stdout carries command results
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point for the purification-threshold command."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)

    match args.command:
        case "trajectories":
            return cmd_trajectories(args.p_gate, args.states, args.rounds, args.seed, args.out, args.local_ops)
        case "sweep":
            start, stop, step = args.grid
            return cmd_sweep(start, stop, step, args.out, args.f_tol, args.local_ops, args.workers)
        case "threshold":
            p_lo, p_hi = args.bracket
            return cmd_threshold(p_lo, p_hi, args.p_tol, args.out, args.f_tol, args.local_ops)
        case "round":
            return cmd_round(args.f0, args.p_gate, args.json)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
