from dataclasses import dataclass, field
from typing import Iterable, Tuple, Union

import numpy as np

from app.exceptions import (
    DimensionMismatchError,
    InvalidStateError,
    SubsystemIndexError,
)

NORM_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
TRACE_ATOL = 1e-12
# Eigenvalues in [-EIGEN_FLOOR, 0) are rounding noise; below that the state is invalid
EIGEN_FLOOR = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


def _check_dims(dims: Iterable[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise DimensionMismatchError(f"Subsystem dimensions must be positive, got {dims}")
    return dims


@dataclass(frozen=True)
class PureState:
    """State vector over an ordered list of subsystems (first factor most significant)."""

    amplitudes: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amplitudes = _frozen(self.amplitudes).reshape(-1)
        if amplitudes.size != int(np.prod(dims, dtype=np.int64)):
            raise DimensionMismatchError(
                f"{amplitudes.size} amplitudes do not match dims {dims}"
            )
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise InvalidStateError(f"State is not normalized: <psi|psi> = {norm!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def normalized(cls, amplitudes, dims) -> "PureState":
        """Build a state after rescaling the vector to unit norm."""
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amplitudes)
        if norm == 0:
            raise InvalidStateError("Cannot normalize the zero vector")
        return cls(amplitudes / norm, dims)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.dims)

    def __repr__(self):
        return f"<PureState dims={self.dims}>"


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator over ordered subsystems."""

    matrix: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        matrix = _frozen(self.matrix)
        size = int(np.prod(dims, dtype=np.int64))
        if matrix.shape != (size, size):
            raise DimensionMismatchError(
                f"Matrix of shape {matrix.shape} does not match dims {dims}"
            )
        if size and np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_ATOL:
            raise InvalidStateError("Density matrix is not Hermitian")
        trace = np.trace(matrix)
        if abs(trace - 1.0) > TRACE_ATOL:
            raise InvalidStateError(f"Density matrix trace is {trace!r}, expected 1")
        lowest = float(np.linalg.eigvalsh(matrix)[0])
        if lowest < -EIGEN_FLOOR:
            raise InvalidStateError(
                f"Density matrix has negative eigenvalue {lowest:.3e}"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(np.outer(psi, psi.conj()), state.dims)

    @classmethod
    def hermitized(cls, matrix, dims) -> "DensityMatrix":
        """Build from a matrix that is Hermitian up to rounding."""
        matrix = np.asarray(matrix, dtype=complex)
        return cls(0.5 * (matrix + matrix.conj().T), dims)

    def eigenvalues(self) -> np.ndarray:
        """Spectrum with rounding noise in [-EIGEN_FLOOR, 0) clamped to 0."""
        values = np.linalg.eigvalsh(self.matrix)
        if values.size and values[0] < -EIGEN_FLOOR:
            raise InvalidStateError(
                f"Density matrix has negative eigenvalue {values[0]:.3e}"
            )
        return np.clip(values, 0.0, None)

    def __repr__(self):
        return f"<DensityMatrix dims={self.dims}>"


@dataclass(frozen=True)
class Bipartition:
    """Sorted set of kept subsystem positions out of n; the rest is the complement."""

    keep: Tuple[int, ...]
    n: int
    complement: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        keep = tuple(int(k) for k in self.keep)
        if len(set(keep)) != len(keep):
            raise SubsystemIndexError(f"Duplicate subsystem index in {keep}")
        for k in keep:
            if not 0 <= k < self.n:
                raise SubsystemIndexError(
                    f"Subsystem index {k} out of range for {self.n} subsystems"
                )
        keep = tuple(sorted(keep))
        object.__setattr__(self, "keep", keep)
        object.__setattr__(
            self, "complement", tuple(i for i in range(self.n) if i not in keep)
        )


State = Union[PureState, DensityMatrix]
Keep = Union[Bipartition, Iterable[int]]


def as_bipartition(keep: Keep, n: int) -> Bipartition:
    """Accept a Bipartition or a plain index collection."""
    if isinstance(keep, Bipartition):
        if keep.n != n:
            raise SubsystemIndexError(
                f"Bipartition over {keep.n} subsystems used on {n} subsystems"
            )
        return keep
    return Bipartition(tuple(keep), n)
