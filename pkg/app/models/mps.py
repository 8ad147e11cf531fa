from dataclasses import dataclass

import numpy as np

from app.exceptions import DimensionMismatchError


@dataclass(frozen=True)
class MPSPair:
    """Two-site unit cell of a shift-invariant MPS.

    A[i, a, c] maps bond a (dim chi) to bond c (dim chi*q) with physical i;
    B[j, c, b] maps bond c back to bond b (dim chi).
    """

    q: int
    chi: int
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        wide = self.chi * self.q
        if A.shape != (self.q, self.chi, wide):
            raise DimensionMismatchError(
                f"A has shape {A.shape}, expected {(self.q, self.chi, wide)}"
            )
        if B.shape != (self.q, wide, self.chi):
            raise DimensionMismatchError(
                f"B has shape {B.shape}, expected {(self.q, wide, self.chi)}"
            )
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def chi_wide(self) -> int:
        return self.chi * self.q

    def cell_matrices(self) -> np.ndarray:
        """C[i, j] = A^i B^j as an array of shape (q, q, chi, chi)."""
        return np.einsum("iac,jcb->ijab", self.A, self.B)

    def __repr__(self):
        return f"<MPSPair q={self.q} chi={self.chi}>"
