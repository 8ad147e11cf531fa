"""Cartan (KAK) decomposition of two-qubit gates and the nearest dual unitary.

A 4x4 unitary is written e^{i phase} (u1 x u2) A(J) (u3 x u4) with
A(J) = exp(-i (Jx XX + Jy YY + Jz ZZ)) and J in the chamber
pi/4 >= Jx >= Jy >= |Jz| (Jz >= 0 when Jx = pi/4).
"""
import logging
import math
from typing import List, Tuple

import numpy as np
from scipy import linalg

from app.exceptions import DecompositionError, DimensionMismatchError
from app.models.gate import CartanData, Gate
from app.schemas.gate import NearestDualReport
from app.services.gates import PAULI_X, PAULI_Y, PAULI_Z, defects, pauli_rotation

logger = logging.getLogger(__name__)

RECONSTRUCTION_ATOL = 1e-9
CERTIFICATE_SLACK = 1e-9
CHAMBER_ATOL = 1e-9
# Seed of the random real combination used to diagonalize Re and Im together
DIAGONALIZATION_SEED = 2020
MAX_DIAGONALIZATION_ATTEMPTS = 100

# Columns: Phi+, i Psi+, Psi-, i Phi-
MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / math.sqrt(2)
MAGIC_DAG = MAGIC.conj().T

PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
# Cliffords exchanging two Pauli axes under conjugation
AXIS_SWAPS = {
    frozenset((0, 1)): np.diag([1, 1j]).astype(complex),
    frozenset((1, 2)): pauli_rotation(PAULI_X, math.pi / 4),
    frozenset((0, 2)): pauli_rotation(PAULI_Y, math.pi / 4),
}


def interaction(J) -> np.ndarray:
    """A(J) = exp(-i sum_a J_a s^a x s^a); the three terms commute."""
    out = np.eye(4, dtype=complex)
    for coefficient, pauli in zip(J, PAULIS):
        out = out @ pauli_rotation(np.kron(pauli, pauli), coefficient)
    return out


def cartan_reconstruct(data: CartanData) -> np.ndarray:
    return (
        np.exp(1j * data.phase)
        * np.kron(data.u1, data.u2)
        @ interaction(data.J)
        @ np.kron(data.u3, data.u4)
    )


def _special(u: np.ndarray) -> np.ndarray:
    return u / np.sqrt(np.linalg.det(u))


def _split_local(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Factor k = a x b (up to phase) by a rank-one split of the realigned matrix."""
    realigned = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    left, singular, right = linalg.svd(realigned)
    scale = math.sqrt(singular[0])
    a = scale * left[:, 0].reshape(2, 2)
    b = scale * right[0, :].reshape(2, 2)
    return _special(a), _special(b)


def _simultaneous_eigenbasis(symmetric: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Real orthogonal P with P^T S P diagonal for a complex symmetric unitary S."""
    rng = np.random.default_rng(DIAGONALIZATION_SEED)
    for attempt in range(MAX_DIAGONALIZATION_ATTEMPTS):
        weights = rng.standard_normal(2)
        combined = weights[0] * symmetric.real + weights[1] * symmetric.imag
        _, basis = np.linalg.eigh(combined)
        diagonal = np.diagonal(basis.T @ symmetric @ basis)
        if np.allclose(basis @ np.diag(diagonal) @ basis.T, symmetric, rtol=0, atol=1e-13):
            if attempt:
                logger.debug("Simultaneous diagonalization took %d attempts", attempt + 1)
            return diagonal, basis
    raise DecompositionError("Could not diagonalize the magic-basis Gram matrix")


def _order_eigenbasis(diagonal: np.ndarray, basis: np.ndarray):
    """Descending real part, then imaginary part; first nonzero entry positive; det +1."""
    keys = [(-round(d.real, 9), -round(d.imag, 9)) for d in diagonal]
    order = sorted(range(len(diagonal)), key=lambda k: keys[k])
    diagonal, basis = diagonal[order], basis[:, order].copy()
    for column in range(basis.shape[1]):
        leading = basis[np.abs(basis[:, column]) > 1e-9, column]
        if leading.size and leading[0] < 0:
            basis[:, column] *= -1
    if np.linalg.det(basis) < 0:
        basis[:, 0] *= -1
    return diagonal, basis


class _Canonicalizer:
    """Moves J into the chamber while keeping (u1 x u2) A(J) (u3 x u4) fixed up to phase."""

    def __init__(self, J, locals_):
        self.J = [float(j) for j in J]
        self.u1, self.u2, self.u3, self.u4 = locals_

    def shift(self, axis: int, steps: int) -> None:
        # A(J) = A(J - steps*pi/2 e_axis) (-i s s)^steps
        self.J[axis] -= steps * math.pi / 2
        if steps % 2:
            pauli = PAULIS[axis]
            self.u3 = pauli @ self.u3
            self.u4 = pauli @ self.u4

    def negate(self, first: int, second: int) -> None:
        # conjugating by s_third x I flips the other two coefficients
        third = 3 - first - second
        pauli = PAULIS[third]
        self.J[first], self.J[second] = -self.J[first], -self.J[second]
        self.u1 = self.u1 @ pauli
        self.u3 = pauli @ self.u3

    def exchange(self, first: int, second: int) -> None:
        clifford = AXIS_SWAPS[frozenset((first, second))]
        self.J[first], self.J[second] = self.J[second], self.J[first]
        self.u1 = self.u1 @ clifford.conj().T
        self.u2 = self.u2 @ clifford.conj().T
        self.u3 = clifford @ self.u3
        self.u4 = clifford @ self.u4

    def run(self) -> None:
        for axis in range(3):
            steps = math.ceil((self.J[axis] - math.pi / 4) / (math.pi / 2) - 1e-12)
            if steps:
                self.shift(axis, steps)
        # sort by magnitude, descending
        for _ in range(2):
            for axis in range(2):
                if abs(self.J[axis]) < abs(self.J[axis + 1]) - 1e-15:
                    self.exchange(axis, axis + 1)
        if self.J[0] < 0:
            self.negate(0, 2)
        if self.J[1] < 0:
            self.negate(1, 2)
        # on the pi/4 face the sign of Jz is a convention
        if abs(self.J[0] - math.pi / 4) < CHAMBER_ATOL and self.J[2] < 0:
            self.shift(0, 1)
            self.negate(0, 2)


def cartan_decompose(gate: Gate) -> CartanData:
    """KAK decomposition of a two-qubit gate, J in the canonical chamber."""
    if gate.q != 2:
        raise DimensionMismatchError(f"Cartan decomposition needs q=2, got q={gate.q}")
    target = gate.matrix
    special = target / np.linalg.det(target) ** 0.25
    magic_frame = MAGIC_DAG @ special @ MAGIC
    gram = magic_frame.T @ magic_frame
    gram.real[np.abs(gram.real) < 1e-15] = 0.0
    gram.imag[np.abs(gram.imag) < 1e-15] = 0.0

    diagonal, basis = _order_eigenbasis(*_simultaneous_eigenbasis(gram))
    theta = np.angle(diagonal) / 2
    left = magic_frame @ basis @ np.diag(np.exp(-1j * theta))
    left = left.real
    if np.linalg.det(left) < 0:
        left[:, 0] *= -1
        theta[0] += math.pi

    u1, u2 = _split_local(MAGIC @ left @ MAGIC_DAG)
    u3, u4 = _split_local(MAGIC @ basis.T @ MAGIC_DAG)

    # magic-basis eigenphases of A(J) are -lambda with
    # lambda = (Jx-Jy+Jz, Jx+Jy-Jz, -Jx-Jy-Jz, -Jx+Jy+Jz)
    lam = -(theta - np.mean(theta))
    J = ((lam[0] + lam[1]) / 2, (lam[1] + lam[3]) / 2, (lam[0] + lam[3]) / 2)

    canon = _Canonicalizer(J, (u1, u2, u3, u4))
    canon.run()
    locals_ = [_special(u) for u in (canon.u1, canon.u2, canon.u3, canon.u4)]
    core = np.kron(locals_[0], locals_[1]) @ interaction(canon.J) @ np.kron(locals_[2], locals_[3])
    phase = float(np.angle(np.trace(core.conj().T @ target) / 4))
    data = CartanData(phase, *locals_, J=tuple(canon.J))

    error = float(np.linalg.norm(target - cartan_reconstruct(data), "nuc"))
    if error > RECONSTRUCTION_ATOL:
        raise DecompositionError(
            f"Cartan reconstruction error {error:.3e} exceeds {RECONSTRUCTION_ATOL:.0e}"
        )
    logger.debug("Cartan decomposition %r, reconstruction error %.3e", data, error)
    return data


def snapped_axes(J) -> List[int]:
    """The two axes whose |cos 2J| is smallest; ties go to the earlier axis."""
    closeness = [abs(math.cos(2 * j)) for j in J]
    return sorted(range(3), key=lambda axis: (closeness[axis], axis))[:2]


def snap_to_dual(J) -> Tuple[float, float, float]:
    """J with its two snapped axes moved to +-pi/4, keeping their signs."""
    snapped = [float(j) for j in J]
    for axis in snapped_axes(snapped):
        snapped[axis] = math.copysign(math.pi / 4, snapped[axis]) if snapped[axis] != 0 else math.pi / 4
    return tuple(snapped)


def nearest_dual_q2(gate: Gate, slack: float = CERTIFICATE_SLACK) -> Tuple[Gate, NearestDualReport]:
    """Dual unitary obtained by snapping the two J nearest to +-pi/4 onto them.

    Phase, local unitaries and the remaining coefficient are kept. The report
    carries ||gate - dual||_1, delta = q^2 * choi_defect, the bound 14 sqrt(delta)
    and whether the distance stays under it (up to slack).
    """
    data = cartan_decompose(gate)
    J = snap_to_dual(data.J)
    projected = CartanData(data.phase, data.u1, data.u2, data.u3, data.u4, J=J)
    matrix = cartan_reconstruct(projected)
    distance = float(np.linalg.norm(gate.matrix - matrix, "nuc"))
    delta = defects(gate).choi_defect_unnormalized
    bound = certificate(delta)
    report = NearestDualReport(
        distance=distance,
        delta=delta,
        certificate=bound,
        certificate_holds=distance <= bound + slack,
        J=list(data.J),
        J_projected=list(J),
    )
    logger.debug("Snapped J %s -> %s, distance %.3e, bound %.3e", data.J, J, distance, bound)
    return Gate(2, matrix), report


def certificate(delta: float) -> float:
    """14 sqrt(delta) with delta in the unnormalized q^2 * choi_defect form."""
    return 14.0 * math.sqrt(max(delta, 0.0))
