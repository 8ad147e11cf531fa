from typing import Optional


class LabError(Exception):
    """Base error for the laboratory; carries an exit status and a human detail."""

    exit_code = 2

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self):
        return self.detail


class UsageError(LabError):
    """Bad command line or configuration."""


class AssertionFailure(LabError):
    """A numerical check requested with --assert did not hold."""

    exit_code = 1


class InvalidStateError(LabError):
    """State or density matrix violates its invariants."""


class DimensionMismatchError(LabError):
    """Operands live on incompatible tensor factors."""


class SubsystemIndexError(LabError):
    """Subsystem position out of range or duplicated."""


class CapacityExceededError(LabError):
    """Dense representation would exceed the configured amplitude limit."""

    def __init__(self, required: int, limit: int):
        super().__init__(
            f"Dense state needs {required} amplitudes, limit is {limit} "
            f"(set LAB_MAX_AMPLITUDES to raise it)"
        )
        self.required = required
        self.limit = limit


class NotUnitaryError(LabError):
    """Matrix failed the unitarity test."""

    def __init__(self, defect: float, tolerance: float):
        super().__init__(
            f"Matrix is not unitary: ||UU^dag - I||_1 = {defect:.3e} > {tolerance:.1e}"
        )
        self.defect = defect


class GateFileError(LabError):
    """Malformed gate file; line is 1-based."""

    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


class DecompositionError(LabError):
    """Cartan decomposition failed to reconstruct its input."""


class NotDualError(LabError):
    """Gate was required to be dual unitary and is not."""


class NonSolvableError(LabError):
    """MPS pair does not satisfy the solvability condition."""


class EstimationError(LabError):
    """Fit window is unusable."""
