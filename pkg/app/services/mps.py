"""Solvable two-site-shift-invariant MPS: construction, dense realization and
exact cut identities."""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.dependencies.seeding import RandomSource
from app.dependencies.settings import check_capacity
from app.exceptions import NonSolvableError, UsageError
from app.models.gate import unitarity_defect
from app.models.mps import MPSPair
from app.models.state import PureState
from app.services.circuit import bond_entropies
from app.services.gates import haar_unitary

logger = logging.getLogger(__name__)

SOLVABLE_ATOL = 1e-10
DEGENERACY_ATOL = 1e-9

Boundary = Union[str, Tuple[Sequence[complex], Sequence[complex]]]


def combined_tensor(pair: MPSPair) -> np.ndarray:
    """N[(a,i),(b,j)] = sqrt(q) sum_c A^i[a,c] B^j[c,b], a and b major."""
    n = math.sqrt(pair.q) * np.einsum("iac,jcb->aibj", pair.A, pair.B)
    return n.reshape(pair.chi_wide, pair.chi_wide)


def solvability_defect(pair: MPSPair) -> float:
    """||N N^dag - I||_1; zero for a solvable pair."""
    return unitarity_defect(combined_tensor(pair))


def require_solvable(pair: MPSPair) -> None:
    defect = solvability_defect(pair)
    if defect > SOLVABLE_ATOL:
        raise NonSolvableError(f"MPS pair is not solvable: ||NN^dag - I||_1 = {defect:.3e}")


def from_unitary(q: int, chi: int, unitary: np.ndarray) -> MPSPair:
    """Split a (chi q) x (chi q) unitary N into the canonical (A, B) pair.

    A injects (a, i) into the wide bond; B carries N / sqrt(q).
    """
    wide = chi * q
    A = np.zeros((q, chi, wide), dtype=complex)
    for a in range(chi):
        for i in range(q):
            A[i, a, a * q + i] = 1.0
    B = np.asarray(unitary, dtype=complex).reshape(wide, chi, q).transpose(2, 0, 1)
    return MPSPair(q=q, chi=chi, A=A, B=B / math.sqrt(q))


def random_solvable(q: int, chi: int, seed: RandomSource = None) -> MPSPair:
    """Solvable pair with a Haar-random N."""
    if q < 2 or chi < 1:
        raise UsageError(f"Need q >= 2 and chi >= 1, got q={q}, chi={chi}")
    return from_unitary(q, chi, haar_unitary(chi * q, seed))


def transfer_spectrum(pair: MPSPair) -> np.ndarray:
    """Eigenvalues of the unit-cell transfer matrix, largest modulus first."""
    cells = pair.cell_matrices().reshape(-1, pair.chi, pair.chi)
    transfer = np.einsum("kab,kcd->acbd", cells, cells.conj()).reshape(pair.chi**2, pair.chi**2)
    values = np.linalg.eigvals(transfer)
    return values[np.argsort(-np.abs(values))]


def spectral_gap(pair: MPSPair) -> Tuple[float, bool]:
    """1 - |l2|/|l1| and whether the leading eigenvalue is degenerate."""
    values = np.abs(transfer_spectrum(pair))
    if values.size == 1:
        return 1.0, False
    gap = 1.0 - values[1] / values[0]
    degenerate = gap < DEGENERACY_ATOL
    if degenerate:
        logger.warning("Transfer matrix of %r has a degenerate leading eigenvalue", pair)
    return float(gap), bool(degenerate)


def dense_state(pair: MPSPair, n_cells: int, boundary: Boundary = "uniform") -> PureState:
    """Contract ...ABAB... over n_cells unit cells and normalize.

    boundary "uniform": left/right vectors (1,...,1)/sqrt(chi); 2 n_cells qudits.
    boundary "ancilla": each open bond is maximally entangled with a chi-dim
    ancilla, the purification of the transfer fixed point; the state then
    has dims (chi, q, ..., q, chi) and every interior cut is exact.
    boundary (left, right): explicit boundary vectors.
    """
    if n_cells < 1:
        raise UsageError(f"Need at least one unit cell, got {n_cells}")
    chi, q = pair.chi, pair.q
    ancilla = boundary == "ancilla"
    check_capacity(q ** (2 * n_cells) * (chi * chi if ancilla else 1))

    if ancilla:
        left = np.eye(chi, dtype=complex)
        right = np.eye(chi, dtype=complex)
    elif boundary == "uniform":
        left = np.ones((1, chi), dtype=complex)
        right = np.ones((chi, 1), dtype=complex)
    elif isinstance(boundary, str):
        raise UsageError(f"Unknown boundary '{boundary}' (known: uniform, ancilla)")
    else:
        left = np.asarray(boundary[0], dtype=complex).reshape(1, chi)
        right = np.asarray(boundary[1], dtype=complex).reshape(chi, 1)

    cells = pair.cell_matrices()  # [i, j, a, b]
    tensor = left  # [prefix, bond]
    for _ in range(n_cells):
        tensor = np.einsum("pa,ijab->pijb", tensor, cells).reshape(-1, chi)
    amplitudes = tensor @ right

    dims = (q,) * (2 * n_cells)
    if ancilla:
        dims = (chi,) + dims + (chi,)
    return PureState.normalized(amplitudes.reshape(-1), dims)


def _exact_profile(pair: MPSPair) -> np.ndarray:
    require_solvable(pair)
    gap, degenerate = spectral_gap(pair)
    logger.debug("Transfer gap of %r: %.6f", pair, gap)
    # subsystems: ancilla, A, B, A, B, ancilla
    return bond_entropies(dense_state(pair, 2, boundary="ancilla"))


def cut_entropies_exact(pair: MPSPair) -> Tuple[float, float]:
    """(E(A:B), E(B:A)) at interior cuts; ln chi + ln q and ln chi when solvable."""
    profile = _exact_profile(pair)
    return float(profile[3]), float(profile[2])


def replica_purity(pair: MPSPair, n: int) -> float:
    """Tr rho_Q^n for the half chain ending on an A site."""
    if n < 1:
        raise UsageError(f"Replica index must be positive, got {n}")
    require_solvable(pair)
    state = dense_state(pair, 2, boundary="ancilla")
    left = int(np.prod(state.dims[:4]))
    singular = np.linalg.svd(state.amplitudes.reshape(left, -1), compute_uv=False)
    return float(np.sum(singular ** (2 * n)))


def replica_target(pair: MPSPair, n: int) -> float:
    """(chi q)^{-(n-1)}."""
    return float(pair.chi_wide) ** (-(n - 1))


def shift_deviation(pair: MPSPair, n_cells: int, boundary: Boundary = "uniform",
                    margin: Optional[int] = None) -> float:
    """Largest change of interior bond entropies under a two-site shift.

    Bonds closer than `margin` sites to either end are left out.
    """
    profile = bond_entropies(dense_state(pair, n_cells, boundary))
    margin = n_cells // 2 if margin is None else margin
    interior = range(margin, len(profile) - 2 - margin)
    deviations = [abs(profile[b + 2] - profile[b]) for b in interior]
    deviation = max(deviations) if deviations else 0.0
    logger.info("Two-site shift changes interior entropies by at most %.3e", deviation)
    return float(deviation)
