"""Four-party audit of a single gate: A | B C | D with the gate on B C.

B and C are single qudits. Primes denote the output of the gate.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.exceptions import DimensionMismatchError
from app.models.gate import Gate
from app.models.state import DensityMatrix, PureState
from app.services import qinfo
from app.services.gates import defects
from app.schemas.circuit import FourPartyReport

logger = logging.getLogger(__name__)

RANK_CUTOFF = 1e-12


@dataclass(frozen=True)
class DistillableCandidate:
    """sigma = Bell(A2,B) x sigma_{A1 D1} x Bell(C,D2), kept in factored form.

    Factor order of the dense form is (A1, A2, B, C, D2, D1). When built by
    reconstruct_distillable the Uhlmann fidelities of its two alignment steps
    are kept alongside.
    """

    q: int
    sigma_A1D1: DensityMatrix
    fidelity_left: Optional[float] = None
    fidelity_right: Optional[float] = None

    @property
    def dims(self) -> Tuple[int, ...]:
        k_left, k_right = self.sigma_A1D1.dims
        return (k_left, self.q, self.q, self.q, self.q, k_right)

    def dense(self) -> DensityMatrix:
        bell = qinfo.bell_state(self.q).tensor()
        k_left, k_right = self.sigma_A1D1.dims
        projector = np.einsum("ab,AB->abAB", bell, bell.conj())
        sigma_AD = self.sigma_A1D1.matrix.reshape(k_left, k_right, k_left, k_right)
        sigma = np.einsum("abAB,gdGD,cwCW->gabcwdGABCWD", projector, sigma_AD, projector)
        size = int(np.prod(self.dims))
        return DensityMatrix.hermitized(sigma.reshape(size, size), self.dims)

    def distance_to(self, state: PureState) -> float:
        """||psi psi^dag - sigma||_1, evaluated on span(supp sigma, psi)."""
        if tuple(state.dims) != self.dims:
            raise DimensionMismatchError(f"State dims {state.dims} differ from {self.dims}")
        psi = state.tensor()
        bell = qinfo.bell_state(self.q).tensor()
        inner = np.einsum("ab,cw,gabcwd->gd", bell.conj(), bell.conj(), psi)
        projected = np.einsum("ab,cw,gd->gabcwd", bell, bell, inner)
        outside = np.linalg.norm((psi - projected).reshape(-1))
        vector = np.append(inner.reshape(-1), outside)
        difference = np.outer(vector, vector.conj())
        difference[: inner.size, : inner.size] -= self.sigma_A1D1.matrix
        return float(np.sum(np.abs(np.linalg.eigvalsh(difference))))


def _four_party(state: PureState, dims: Sequence[int], q: int) -> PureState:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4:
        raise DimensionMismatchError(f"Four-party split needs four dims, got {dims}")
    if dims[1] != q or dims[2] != q:
        raise DimensionMismatchError(f"B and C must be single qudits of dimension {q}, got {dims}")
    return qinfo.regroup(state, dims)


def four_party_report(
    gate: Gate,
    state: PureState,
    dims: Sequence[int],
    reconstruct: bool = False,
) -> FourPartyReport:
    """Apply the gate to BC and evaluate every entropy, information and fidelity bound."""
    q = gate.q
    ln_q = math.log(q)
    before = _four_party(state, dims, q)
    after = qinfo.apply_operator(before, gate.matrix, (1, 2))
    entropy = qinfo.entanglement_entropy

    S_A = entropy(before, (0,))
    S_D = entropy(before, (3,))
    S_AB = entropy(before, (0, 1))
    S_CD = entropy(before, (2, 3))
    S_ABp = entropy(after, (0, 1))
    S_CpD = entropy(after, (2, 3))
    S_B = entropy(before, (1,))
    S_C = entropy(before, (2,))
    S_Bp = entropy(after, (1,))
    S_Cp = entropy(after, (2,))
    S_BC = entropy(before, (1, 2))

    delta_S = S_ABp - S_AB
    epsilon = 2 * ln_q - delta_S

    flat_B = qinfo.maximally_mixed((q,))
    rho_A = qinfo.reduce(before, (0,))
    rho_D = qinfo.reduce(before, (3,))
    rho_AB = qinfo.reduce(before, (0, 1))
    rho_CD = qinfo.reduce(before, (2, 3))
    rho_ABp = qinfo.reduce(after, (0, 1))
    rho_CpD = qinfo.reduce(after, (2, 3))
    rho_BCD = qinfo.reduce(before, (1, 2, 3))
    rho_ABC = qinfo.reduce(before, (0, 1, 2))

    out_target = qinfo.tensor_product(rho_A, flat_B)
    in_target = qinfo.tensor_product(flat_B, rho_CD)

    choi = defects(gate).choi_defect
    report = FourPartyReport(
        q=q,
        dims=list(before.dims),
        delta_S=delta_S,
        epsilon=epsilon,
        cond_A=S_A - S_AB,
        cond_D=S_D - S_CD,
        S_B=S_B,
        S_Bp=S_Bp,
        S_C=S_C,
        S_Cp=S_Cp,
        S_BC=S_BC,
        I_AB_C=S_AB + S_C - S_D,
        I_B_CD=S_B + S_CD - S_A,
        I_A_Bp=S_A + S_Bp - S_ABp,
        I_Cp_D=S_Cp + S_D - S_CpD,
        F_out=qinfo.fidelity(rho_ABp, out_target),
        F_in=qinfo.fidelity(rho_BCD, in_target),
        F_BC=qinfo.fidelity(qinfo.reduce(before, (1, 2)), qinfo.maximally_mixed((q, q))),
        F_out_right=qinfo.fidelity(rho_CpD, qinfo.tensor_product(flat_B, rho_D)),
        F_in_left=qinfo.fidelity(rho_ABC, qinfo.tensor_product(rho_AB, flat_B)),
        D_out=qinfo.trace_norm_distance(rho_ABp, out_target),
        D_in=qinfo.trace_norm_distance(rho_BCD, in_target),
        choi_defect=choi,
        delta_over_sqrt_eps=choi / math.sqrt(epsilon) if epsilon > 1e-12 else None,
        bounds_vacuous=epsilon > ln_q,
        distillable_structure_exact=(
            S_A - S_AB >= ln_q - 1e-9 and S_D - S_CD >= ln_q - 1e-9
        ),
        **_reconstruction_fields(before, epsilon, q, reconstruct),
    )
    if report.bounds_vacuous:
        logger.info("epsilon = %.6f exceeds ln q; bounds are vacuous", epsilon)
    failed = report.failed_checks()
    if failed:
        logger.warning("Four-party checks failed: %s", ", ".join(failed))
    return report


def _reconstruction_fields(state: PureState, epsilon: float, q: int, wanted: bool) -> dict:
    dA, _, _, dD = state.dims
    if not wanted or dA % q or dD % q:
        return {}
    candidate, distance = reconstruct_distillable(state, state.dims, epsilon)
    return {
        "reconstruction_distance": distance,
        "reconstruction_bound": reconstruction_bound(epsilon),
        "reconstruction_fidelities": [candidate.fidelity_left, candidate.fidelity_right],
    }


def reconstruction_bound(epsilon: float) -> float:
    """Two Uhlmann steps, each at fidelity >= e^{-eps}: 2 * 2 sqrt(1 - e^{-2 eps})."""
    return 2 * 2 * math.sqrt(max(1 - math.exp(-2 * epsilon), 0.0))


def _rank(rho: DensityMatrix) -> int:
    return max(int(np.count_nonzero(np.linalg.eigvalsh(rho.matrix) > RANK_CUTOFF)), 1)


def _padded_purification(rho: DensityMatrix, size: int) -> np.ndarray:
    """Purification amplitudes with the ancilla zero-padded to `size`."""
    pure = qinfo.purify(rho, cutoff=RANK_CUTOFF)
    tensor = pure.tensor()
    padding = [(0, 0)] * (tensor.ndim - 1) + [(0, size - tensor.shape[-1])]
    return np.pad(tensor, padding)


def reconstruct_distillable(
    state: PureState, dims: Sequence[int], epsilon: float
) -> Tuple[DistillableCandidate, float]:
    """Candidate Bell(A2,B) x sigma(A1,D1) x Bell(C,D2) and its distance to the aligned input.

    A is split as A1 x A2 with A2 the qudit next to B, D as D2 x D1 with D2
    next to C. When rank(rho_CD) exceeds dim A / q the register A1 is
    enlarged and A embedded isometrically into A1 x A2 (likewise on the D
    side). Returns sigma over (A1, A2, B, C, D2, D1), carrying the fidelities
    of both Uhlmann steps, and ||U_D U_A rho U_A^dag U_D^dag - sigma||_1.
    """
    q = int(dims[1])
    dA, dD = int(dims[0]), int(dims[3])
    if dA % q or dD % q:
        raise DimensionMismatchError(
            f"A and D dims must be multiples of q={q} to hold a qudit factor, got {dA}, {dD}"
        )
    psi = _four_party(state, dims, q)
    rho_CD = qinfo.reduce(psi, (2, 3))
    rank = _rank(rho_CD)
    k_left = max(dA // q, rank)
    k_right = max(dD // q, rank)
    m_left, m_right = k_left * q, k_right * q

    # embed A -> A1 A2 and D -> D2 D1 by zero padding
    embedded = np.zeros((m_left, q, q, m_right), dtype=complex)
    embedded[:dA, :, :, :dD] = psi.tensor()
    embedded = PureState(embedded.reshape(-1), (m_left, q, q, m_right))

    bell = qinfo.bell_state(q).tensor()

    # left: Bell(A2,B) x mu(A1,C,D) with mu purifying rho_CD
    mu = _padded_purification(rho_CD, k_left)  # [c, d, a1]
    mu = np.pad(mu, [(0, 0), (0, m_right - dD), (0, 0)])
    phi_left = np.einsum("xb,cdy->yxbcd", bell, mu).reshape(m_left, q, q, m_right)
    phi_left = PureState.normalized(phi_left.reshape(-1), embedded.dims)
    unitary_A, fidelity_left = qinfo.uhlmann_align(embedded, phi_left, (0,))
    aligned = qinfo.apply_on_ancilla(embedded, unitary_A, (0,))

    # right: nu(A,B,D1) x Bell(C,D2) with nu purifying rho_AB
    rho_AB = qinfo.reduce(aligned, (0, 1))
    nu = _padded_purification(rho_AB, k_right)  # [a, b, d1]
    phi_right = np.einsum("abz,cw->abcwz", nu, bell).reshape(m_left, q, q, m_right)
    phi_right = PureState.normalized(phi_right.reshape(-1), embedded.dims)
    unitary_D, fidelity_right = qinfo.uhlmann_align(aligned, phi_right, (3,))
    aligned = qinfo.apply_on_ancilla(aligned, unitary_D, (3,))

    # sigma_{A1 D1} = Tr_{A2 B} nu
    nu_state = PureState.normalized(nu.reshape(-1), (k_left, q, q, k_right))
    candidate = DistillableCandidate(
        q=q,
        sigma_A1D1=qinfo.reduce(nu_state, (0, 3)),
        fidelity_left=float(fidelity_left),
        fidelity_right=float(fidelity_right),
    )
    distance = candidate.distance_to(qinfo.regroup(aligned, candidate.dims))
    logger.debug(
        "Distillable reconstruction: F_L=%.9f F_R=%.9f distance=%.3e",
        fidelity_left, fidelity_right, distance,
    )
    return candidate, distance
