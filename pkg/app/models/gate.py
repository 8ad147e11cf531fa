import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.exceptions import DimensionMismatchError, NotUnitaryError

UNITARY_ATOL = 1e-10


def unitarity_defect(matrix: np.ndarray) -> float:
    """Trace norm ||U U^dag - I||_1, infinite when an entry is not finite."""
    matrix = np.asarray(matrix, dtype=complex)
    if not np.all(np.isfinite(matrix)):
        return math.inf
    residual = matrix @ matrix.conj().T - np.eye(matrix.shape[0])
    residual = 0.5 * (residual + residual.conj().T)
    return float(np.sum(np.abs(np.linalg.eigvalsh(residual))))


@dataclass(frozen=True)
class Gate:
    """Two-site unitary on q x q, entries u[(i,j),(k,l)] with i and k major."""

    q: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        size = self.q * self.q
        if self.q < 1 or matrix.shape != (size, size):
            raise DimensionMismatchError(
                f"Gate matrix of shape {matrix.shape} does not fit q={self.q}"
            )
        defect = unitarity_defect(matrix)
        if defect > UNITARY_ATOL:
            raise NotUnitaryError(defect, UNITARY_ATOL)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def tensor(self) -> np.ndarray:
        """Four-index view u[i, j, k, l]."""
        return self.matrix.reshape(self.q, self.q, self.q, self.q)

    def __matmul__(self, other: "Gate") -> "Gate":
        if other.q != self.q:
            raise DimensionMismatchError("Cannot compose gates of different q")
        return Gate(self.q, self.matrix @ other.matrix)

    def __repr__(self):
        return f"<Gate q={self.q}>"


@dataclass(frozen=True)
class CartanData:
    """u = e^{i phase} (u1 x u2) exp(-i sum_a J_a s^a x s^a) (u3 x u4), J in the chamber."""

    phase: float
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    u4: np.ndarray
    J: Tuple[float, float, float]

    def __repr__(self):
        jx, jy, jz = self.J
        return f"<CartanData J=({jx:.6f}, {jy:.6f}, {jz:.6f}) phase={self.phase:.6f}>"
