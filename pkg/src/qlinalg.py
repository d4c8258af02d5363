"""Dense complex linear algebra for small qubit registers.

Operators are plain ``numpy`` complex128 arrays. States are wrapped in frozen
dataclasses that validate shape, Hermiticity and trace on construction.

Qubit 0 is the most significant bit of a computational-basis label, so the
basis state ``|q0 q1 q2 q3>`` has index ``8*q0 + 4*q1 + 2*q2 + q3``. Every
function in this module follows that convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import TypeAlias

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

ComplexMatrix: TypeAlias = npt.NDArray[np.complex128]

# Tolerances for the DensityMatrix invariants
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
IMAG_FIDELITY_TOL = 1e-10
ZERO_PROBABILITY_TOL = 1e-14

_KET0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_KET1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)


class DomainError(ValueError):
    """Raised when a scalar parameter lies outside its allowed range."""


class DimensionMismatchError(ValueError):
    """Raised when operands act on different numbers of qubits."""


class NotUnitaryError(ValueError):
    """Raised when a gate matrix is not unitary within tolerance."""


class ZeroProbabilityError(ArithmeticError):
    """Raised when a state cannot pass post-selection."""


class UnphysicalStateError(ValueError):
    """Raised when a matrix violates the density-matrix invariants."""


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionMismatchError(f"Dimension {dim} is not a power of 2")
    return n


def _readonly(array: npt.ArrayLike) -> ComplexMatrix:
    out = np.array(array, dtype=np.complex128)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A density matrix on ``n_qubits`` qubits.

    Hermiticity and unit trace are checked on construction. Positivity is
    checked by :func:`check_physical` since it needs an eigendecomposition.
    """

    matrix: ComplexMatrix
    n_qubits: int = field(init=False)

    def __post_init__(self):
        matrix = _readonly(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"Density matrix must be square, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "n_qubits", _num_qubits(matrix.shape[0]))

        herm = float(np.max(np.abs(matrix - matrix.conj().T)))
        if herm > HERMITIAN_TOL:
            raise UnphysicalStateError(f"Matrix is not Hermitian (deviation {herm:.3e})")
        trace_dev = abs(np.trace(matrix) - 1.0)
        if trace_dev > TRACE_TOL:
            raise UnphysicalStateError(f"Trace deviates from 1 by {trace_dev:.3e}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @classmethod
    def from_pure(cls, psi: PureStateVector) -> DensityMatrix:
        """Build |psi><psi|."""
        return cls(np.outer(psi.amplitudes, psi.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> DensityMatrix:
        dim = 1 << n_qubits
        return cls(np.eye(dim, dtype=np.complex128) / dim)


@dataclass(frozen=True, eq=False)
class PureStateVector:
    """A normalized state vector on ``n_qubits`` qubits."""

    amplitudes: ComplexMatrix
    n_qubits: int = field(init=False)

    def __post_init__(self):
        amps = _readonly(self.amplitudes)
        if amps.ndim != 1:
            raise DimensionMismatchError(f"State vector must be 1-D, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_qubits", _num_qubits(amps.shape[0]))

        norm_dev = abs(float(np.vdot(amps, amps).real) - 1.0)
        if norm_dev > NORM_TOL:
            raise UnphysicalStateError(f"State vector norm deviates from 1 by {norm_dev:.3e}")


@dataclass(frozen=True)
class PhysicalityReport:
    """Diagnostics returned by :func:`check_physical`."""

    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.trace_deviation <= self.tol
            and self.hermiticity_deviation <= self.tol
            and self.min_eigenvalue >= -max(self.tol, PSD_TOL)
        )


def tensor_product(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product with ``a`` as the more significant block."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def tensor_states(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Joint state ``a ⊗ b``; the qubits of ``a`` come first."""
    return DensityMatrix(tensor_product(a.matrix, b.matrix))


def check_qubit_pair(n_qubits: int, q_a: int, q_b: int) -> None:
    """Raise IndexError unless q_a and q_b are distinct valid qubit indices."""
    for q in (q_a, q_b):
        if not 0 <= q < n_qubits:
            raise IndexError(f"Qubit index {q} out of range for {n_qubits} qubits")
    if q_a == q_b:
        raise IndexError(f"Qubit indices must differ, got {q_a} twice")


def _as_tensor(matrix: ComplexMatrix, n_qubits: int) -> ComplexMatrix:
    # axes 0..n-1 are row qubits, n..2n-1 column qubits
    return matrix.reshape((2,) * (2 * n_qubits))


def _apply_on_axes(tensor: ComplexMatrix, u: ComplexMatrix, axes: tuple[int, int]) -> ComplexMatrix:
    u4 = u.reshape(2, 2, 2, 2)
    out = np.tensordot(u4, tensor, axes=([2, 3], list(axes)))
    return np.moveaxis(out, [0, 1], list(axes))


def _conjugate(matrix: ComplexMatrix, n_qubits: int, u: ComplexMatrix, q_hi: int, q_lo: int) -> ComplexMatrix:
    t = _as_tensor(matrix, n_qubits)
    t = _apply_on_axes(t, u, (q_hi, q_lo))
    t = _apply_on_axes(t, u.conj(), (n_qubits + q_hi, n_qubits + q_lo))
    dim = 1 << n_qubits
    return t.reshape(dim, dim)


def apply_two_qubit_unitary(rho: DensityMatrix, u: ComplexMatrix, q_hi: int, q_lo: int) -> DensityMatrix:
    """Conjugate ``rho`` by a two-qubit gate embedded on ``(q_hi, q_lo)``.

    ``q_hi`` plays the more significant slot of ``u`` (the control for a CNOT),
    ``q_lo`` the less significant one. All other qubits see the identity.

    Raises:
        IndexError: if the indices are out of range or equal.
        NotUnitaryError: if ``u`` is not a 4x4 unitary.
    """
    check_qubit_pair(rho.n_qubits, q_hi, q_lo)
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise DimensionMismatchError(f"Two-qubit gate must be 4x4, got {u.shape}")
    deviation = float(np.max(np.abs(u.conj().T @ u - np.eye(4))))
    if deviation > UNITARY_TOL:
        raise NotUnitaryError(f"Gate is not unitary (max |u†u - I| = {deviation:.3e})")
    return DensityMatrix(_conjugate(rho.matrix, rho.n_qubits, u, q_hi, q_lo))


def apply_local_unitaries(rho: DensityMatrix, unitaries: dict[int, ComplexMatrix]) -> DensityMatrix:
    """Conjugate ``rho`` by single-qubit unitaries, one per listed qubit."""
    n = rho.n_qubits
    full = reduce(tensor_product, [np.asarray(unitaries.get(q, _I2)) for q in range(n)])
    return DensityMatrix(full @ rho.matrix @ full.conj().T)


def _trace_out(tensor: ComplexMatrix, n_qubits: int, qubits: list[int]) -> ComplexMatrix:
    # trace from the highest index down so earlier axis numbers stay valid
    remaining = n_qubits
    for q in sorted(qubits, reverse=True):
        tensor = np.trace(tensor, axis1=q, axis2=q + remaining)
        remaining -= 1
    return tensor


def partial_trace(rho: DensityMatrix, traced_qubits: set[int] | frozenset[int]) -> DensityMatrix:
    """Reduced state on the qubits not in ``traced_qubits``.

    The surviving qubits keep their relative order.

    Raises:
        IndexError: if the set is empty, covers every qubit, or has an invalid index.
    """
    n = rho.n_qubits
    traced = sorted(set(traced_qubits))
    if not traced or len(traced) >= n:
        raise IndexError(f"Traced set must be a non-empty strict subset of {n} qubits, got {traced}")
    if traced[0] < 0 or traced[-1] >= n:
        raise IndexError(f"Traced qubit out of range for {n} qubits: {traced}")
    keep_dim = 1 << (n - len(traced))
    reduced = _trace_out(_as_tensor(rho.matrix, n), n, traced)
    return DensityMatrix(reduced.reshape(keep_dim, keep_dim))


def with_maximally_mixed(rho: DensityMatrix, q_a: int, q_b: int) -> ComplexMatrix:
    """Return ``I/4`` on ``(q_a, q_b)`` tensored with the reduced state of the rest.

    Qubit positions are preserved. Used by the two-qubit depolarizing channel.
    """
    n = rho.n_qubits
    check_qubit_pair(n, q_a, q_b)
    kept = [q for q in range(n) if q not in (q_a, q_b)]
    reduced = _trace_out(_as_tensor(rho.matrix, n), n, [q_a, q_b])
    mixed = np.eye(4, dtype=np.complex128).reshape(2, 2, 2, 2) / 4
    full = np.multiply.outer(reduced, mixed)
    destination = kept + [n + q for q in kept] + [q_a, q_b, n + q_a, n + q_b]
    full = np.moveaxis(full, list(range(2 * n)), destination)
    dim = 1 << n
    return full.reshape(dim, dim)


@lru_cache(maxsize=32)
def _equal_outcome_projectors(n_qubits: int, q_a: int, q_b: int) -> tuple[ComplexMatrix, ComplexMatrix]:
    def projector(ket: ComplexMatrix) -> ComplexMatrix:
        factors = [ket if q in (q_a, q_b) else _I2 for q in range(n_qubits)]
        return _readonly(reduce(tensor_product, factors))

    return projector(_KET0), projector(_KET1)


def postselect_equal_outcomes(
    rho: DensityMatrix, q_a: int, q_b: int, zero_tol: float = ZERO_PROBABILITY_TOL
) -> tuple[DensityMatrix, float]:
    """Measure ``q_a`` and ``q_b`` in the computational basis and keep equal outcomes.

    Both accepted branches (00 and 11) are pooled without any
    outcome-dependent correction, then the measured qubits are traced out.

    Returns:
        Tuple of (renormalized reduced state, success probability).

    Raises:
        ZeroProbabilityError: if the success probability is below ``zero_tol``.
    """
    check_qubit_pair(rho.n_qubits, q_a, q_b)
    p00, p11 = _equal_outcome_projectors(rho.n_qubits, q_a, q_b)
    kept = p00 @ rho.matrix @ p00 + p11 @ rho.matrix @ p11
    probability = float(np.trace(kept).real)
    if probability < zero_tol:
        raise ZeroProbabilityError(f"Post-selection probability {probability:.3e} is below {zero_tol:.0e}")

    n = rho.n_qubits
    keep_dim = 1 << (n - 2)
    reduced = _trace_out(_as_tensor(kept / probability, n), n, [q_a, q_b]).reshape(keep_dim, keep_dim)
    return DensityMatrix(reduced), probability


def fidelity_with_pure(rho: DensityMatrix, psi: PureStateVector) -> float:
    """Return <psi|rho|psi>.

    Raises:
        DimensionMismatchError: if the qubit counts differ.
        UnphysicalStateError: if the overlap has a non-negligible imaginary part.
    """
    if rho.n_qubits != psi.n_qubits:
        raise DimensionMismatchError(f"State has {rho.n_qubits} qubits but target has {psi.n_qubits}")
    overlap = complex(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes))
    if abs(overlap.imag) > IMAG_FIDELITY_TOL:
        raise UnphysicalStateError(f"Fidelity has imaginary part {overlap.imag:.3e}")
    return float(min(max(overlap.real, 0.0), 1.0))


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2)."""
    return float(np.real(np.trace(rho.matrix @ rho.matrix)))


def check_physical(rho: DensityMatrix | ComplexMatrix, tol: float = TRACE_TOL) -> PhysicalityReport:
    """Report trace, Hermiticity and positivity diagnostics without raising."""
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    hermitian_part = (matrix + matrix.conj().T) / 2
    return PhysicalityReport(
        trace_deviation=float(abs(np.trace(matrix) - 1.0)),
        hermiticity_deviation=float(np.max(np.abs(matrix - matrix.conj().T))),
        min_eigenvalue=float(np.min(np.linalg.eigvalsh(hermitian_part))),
        tol=tol,
    )


def require_physical(rho: DensityMatrix, tol: float = PSD_TOL) -> DensityMatrix:
    """Return ``rho`` unchanged, or raise if :func:`check_physical` fails."""
    report = check_physical(rho, tol)
    if not report.passed:
        raise UnphysicalStateError(
            f"State failed physicality check: trace dev {report.trace_deviation:.3e}, "
            f"hermiticity dev {report.hermiticity_deviation:.3e}, min eigenvalue {report.min_eigenvalue:.3e}"
        )
    return rho
