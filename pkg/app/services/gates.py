"""Two-site gates: reshuffling, dual-unitarity defects, Haar sampling,
named gates and the alternating dual projection.

Index grouping used throughout:
  gate       u[(i,j),(k,l)]          rows (i,j) i-major, columns (k,l) k-major
  dual       M[(i,k),(j,l)] = u[(i,j),(k,l)]
  Choi       rho_AB' over (A, B') = (input-left partner, output-left site)
With these, rho_AB'[(a,i),(a',i')] = (M M^dag)[(i,a),(i',a')] / q^2, i.e.
rho_AB' is M M^dag / q^2 with its two factors swapped.
"""
import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import linalg

from app.dependencies.seeding import RandomSource, as_generator
from app.exceptions import UsageError
from app.models.gate import UNITARY_ATOL, Gate, unitarity_defect
from app.models.state import DensityMatrix, PureState
from app.schemas.gate import DefectReport
from app.services import qinfo

logger = logging.getLogger(__name__)

DUAL_ATOL = 1e-10
CONSISTENCY_ATOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def reshuffle(matrix: np.ndarray, q: int) -> np.ndarray:
    """Regroup [(i,j),(k,l)] into [(i,k),(j,l)]; an involution."""
    tensor = np.asarray(matrix).reshape(q, q, q, q)
    return tensor.transpose(0, 2, 1, 3).reshape(q * q, q * q)


def dual_matrix(gate: Gate) -> np.ndarray:
    """The gate read sideways, M[(i,k),(j,l)] = u[(i,j),(k,l)]."""
    return reshuffle(gate.matrix, gate.q)


def choi_output_state(gate: Gate) -> DensityMatrix:
    """rho_AB' from conjugating Phi_AB x Phi_CD by I x u x I and tracing C'D."""
    q = gate.q
    # amplitude[a, i, j, d] = u[(i,j),(a,d)] / q
    amplitudes = gate.tensor().transpose(2, 0, 1, 3) / q
    output = PureState(amplitudes.reshape(-1), (q, q, q, q))
    return qinfo.reduce(output, (0, 1))


def defects(gate: Gate, tolerance: float = DUAL_ATOL) -> DefectReport:
    """Gram and Choi forms of the dual-unitarity defect."""
    q = gate.q
    gram = unitarity_defect(dual_matrix(gate))
    choi = qinfo.trace_norm_distance(
        qinfo.maximally_mixed((q, q)), choi_output_state(gate)
    )
    consistent = abs(choi * q * q - gram) <= CONSISTENCY_ATOL
    if not consistent:
        logger.warning(
            "choi*q^2 = %.3e disagrees with gram = %.3e", choi * q * q, gram
        )
    return DefectReport(
        q=q,
        gram_defect=gram,
        choi_defect=choi,
        choi_defect_unnormalized=choi * q * q,
        choi_gram_consistent=consistent,
        is_dual=gram <= tolerance and choi <= tolerance,
    )


def is_dual(gate: Gate, tolerance: float = DUAL_ATOL) -> bool:
    return unitarity_defect(dual_matrix(gate)) <= tolerance


def haar_unitary(d: int, seed: RandomSource = None) -> np.ndarray:
    """Haar-distributed d x d unitary (Ginibre matrix, QR, phase-fixed R diagonal)."""
    if d < 1:
        raise UsageError(f"Unitary dimension must be positive, got {d}")
    rng = as_generator(seed)
    ginibre = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    unitary, upper = linalg.qr(ginibre)
    diagonal = np.diagonal(upper)
    return unitary * (diagonal / np.abs(diagonal))


def haar_gate(q: int, seed: RandomSource = None) -> Gate:
    return Gate(q, haar_unitary(q * q, seed))


def random_hermitian(d: int, seed: RandomSource = None) -> np.ndarray:
    """GUE sample rescaled to unit operator norm."""
    rng = as_generator(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (g + g.conj().T)
    return h / np.linalg.norm(h, 2)


def pauli_rotation(pauli: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle P) for P squaring to the identity."""
    return math.cos(angle) * np.eye(pauli.shape[0]) - 1j * math.sin(angle) * pauli


# ---------------------------------------------------------------------------
# Named gates


def identity_gate(q: int) -> Gate:
    return Gate(q, np.eye(q * q, dtype=complex))


def swap_gate(q: int) -> Gate:
    matrix = np.zeros((q * q, q * q), dtype=complex)
    for i in range(q):
        for j in range(q):
            matrix[i * q + j, j * q + i] = 1.0
    return Gate(q, matrix)


def controlled_phase_gate(q: int) -> Gate:
    """diag(w^{ij}), w = exp(2 pi i / q); controlled-Z at q=2."""
    i, j = np.divmod(np.arange(q * q), q)
    return Gate(q, np.diag(np.exp(2j * np.pi * i * j / q)))


def fourier_gate(q: int) -> Gate:
    """Discrete Fourier transform on the q^2-dimensional two-site space."""
    n = q * q
    x = np.arange(n)
    return Gate(q, np.exp(2j * np.pi * np.outer(x, x) / n) / q)


def kicked_ising_gate(J: float, b: float, h: float) -> Gate:
    """Bulk kicked-Ising gate, dual unitary at |J| = |b| = pi/4."""
    rz = pauli_rotation(PAULI_Z, h / 2)
    rx = pauli_rotation(PAULI_X, b)
    field = np.kron(rz, rz)
    coupling = pauli_rotation(np.kron(PAULI_Z, PAULI_Z), J)
    kick = np.kron(rx, rx)
    return Gate(2, field @ coupling @ kick @ coupling @ field)


def kicked_ising_first_gate(J: float, h: float) -> Gate:
    """First-layer gate exp(-i J Z1 Z2 - i h Z1/2 - i h Z2/2); diagonal."""
    z = np.array([1.0, -1.0])
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    phases = np.exp(-1j * (J * z1 * z2 + h * (z1 + z2) / 2))
    return Gate(2, np.diag(phases.reshape(-1)))


NAMED_GATES: Dict[str, Callable[..., Gate]] = {
    "identity": identity_gate,
    "swap": swap_gate,
    "cz": controlled_phase_gate,
    "fourier": fourier_gate,
}


def named_gate(name: str, q: int = 2, J: float = math.pi / 4, b: float = math.pi / 4,
               h: float = 0.0) -> Gate:
    """Look up a gate by name; kicked-ising takes (J, b, h) and needs q=2."""
    if name == "kicked-ising":
        if q != 2:
            raise UsageError("kicked-ising is a qubit gate, use --q 2")
        return kicked_ising_gate(J, b, h)
    if name == "kicked-ising-first":
        if q != 2:
            raise UsageError("kicked-ising-first is a qubit gate, use --q 2")
        return kicked_ising_first_gate(J, h)
    if name not in NAMED_GATES:
        known = ", ".join(sorted([*NAMED_GATES, "kicked-ising", "kicked-ising-first"]))
        raise UsageError(f"Unknown gate '{name}' (known: {known})")
    return NAMED_GATES[name](q)


# ---------------------------------------------------------------------------
# Iterative projection


def _polar_unitary(matrix: np.ndarray) -> np.ndarray:
    unitary, _ = linalg.polar(matrix)
    return unitary


def project_dual_iterative(
    gate: Gate, max_iters: int = 200, tol: float = 1e-10
) -> Tuple[Gate, bool, List[float]]:
    """Alternate polar projections of the dual matrix and of the gate.

    The recorded defect is choi_defect, evaluated as gram_defect / q^2.
    Ends on a gate projection, so the output is always unitary.
    """
    q = gate.q
    matrix = gate.matrix
    trace = [unitarity_defect(reshuffle(matrix, q)) / q**2]
    converged = trace[0] <= tol
    iteration = 0
    while not converged and iteration < max_iters:
        iteration += 1
        dual = _polar_unitary(reshuffle(matrix, q))
        matrix = _polar_unitary(reshuffle(dual, q))
        trace.append(unitarity_defect(reshuffle(matrix, q)) / q**2)
        logger.debug("projection iteration %d: choi defect %.3e", iteration, trace[-1])
        converged = trace[-1] <= tol
    if not converged:
        logger.info(
            "Dual projection stopped after %d iterations at defect %.3e", iteration, trace[-1]
        )
    if unitarity_defect(matrix) > UNITARY_ATOL:
        matrix = _polar_unitary(matrix)
    return Gate(q, matrix), converged, trace
