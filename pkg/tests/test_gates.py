import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from app.exceptions import DimensionMismatchError, NotUnitaryError, UsageError
from app.models.gate import Gate, unitarity_defect
from app.services.ensemble import perturbed_gate
from app.services import gates


class TestGateModel:
    def test_non_unitary_matrix_is_rejected(self):
        with pytest.raises(NotUnitaryError):
            Gate(2, 2 * np.eye(4))

    def test_shape_must_fit_q(self):
        with pytest.raises(DimensionMismatchError):
            Gate(3, np.eye(4))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite_entries_are_rejected(self, bad):
        matrix = np.eye(4, dtype=complex)
        matrix[1, 2] = bad
        with pytest.raises(NotUnitaryError):
            Gate(2, matrix)
        assert unitarity_defect(matrix) == math.inf

    def test_matrix_is_read_only(self):
        gate = gates.swap_gate(2)
        with pytest.raises(ValueError):
            gate.matrix[0, 0] = 2


class TestReshuffle:
    @pytest.mark.parametrize("q", [2, 3])
    def test_involution(self, rng, q):
        matrix = rng.standard_normal((q * q, q * q))
        assert_allclose(gates.reshuffle(gates.reshuffle(matrix, q), q), matrix)

    def test_identity_becomes_rank_one(self):
        dual = gates.dual_matrix(gates.identity_gate(3))
        assert np.linalg.matrix_rank(dual) == 1


class TestDefects:
    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_swap_is_dual(self, q):
        report = gates.defects(gates.swap_gate(q))
        assert report.is_dual
        assert report.gram_defect == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("q", [2, 3])
    def test_fourier_is_dual(self, q):
        assert gates.defects(gates.fourier_gate(q)).is_dual

    def test_identity(self):
        report = gates.defects(gates.identity_gate(2))
        assert report.choi_defect == pytest.approx(1.5, abs=1e-12)
        assert report.gram_defect == pytest.approx(6.0, abs=1e-12)
        assert not report.is_dual

    @pytest.mark.parametrize("q", [2, 3])
    def test_identity_general_q(self, q):
        report = gates.defects(gates.identity_gate(q))
        assert report.choi_defect == pytest.approx(2 * (1 - 1 / q**2), abs=1e-12)
        assert report.gram_defect == pytest.approx(2 * (q**2 - 1), abs=1e-10)

    def test_controlled_phase_is_not_dual(self):
        assert gates.defects(gates.controlled_phase_gate(2)).choi_defect > 0.1

    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_choi_and_gram_agree_on_haar_gates(self, q):
        for seed in range(100):
            report = gates.defects(gates.haar_gate(q, seed))
            assert report.choi_gram_consistent
            assert report.choi_defect * q * q == pytest.approx(report.gram_defect, abs=1e-9)

    @pytest.mark.parametrize("q", [2, 3])
    def test_choi_spectrum_is_dual_singular_values(self, q):
        gate = gates.haar_gate(q, 11)
        expected = np.sort(linalg.svdvals(gates.dual_matrix(gate)) ** 2 / q**2)
        actual = np.sort(gates.choi_output_state(gate).eigenvalues())
        assert_allclose(actual, expected, atol=1e-12)


DUAL_BASES = [
    gates.swap_gate(2),
    gates.fourier_gate(2),
    gates.kicked_ising_gate(math.pi / 4, math.pi / 4, 0.3),
    gates.swap_gate(3),
    gates.fourier_gate(3),
]


def sideways_product(gate):
    # sum_{j,l} u[i,j,k,l] conj(u[i',j,k',l])
    u = gate.tensor()
    q = gate.q
    return np.einsum("ijkl,ajbl->ikab", u, u.conj()).reshape(q * q, q * q)


class TestDuality:
    @pytest.mark.parametrize("gate", DUAL_BASES)
    def test_index_form_on_dual_gates(self, gate):
        q = gate.q
        assert_allclose(sideways_product(gate), np.eye(q * q), atol=1e-10)
        assert gates.defects(gate).gram_defect <= 1e-10

    def test_gram_defect_vanishes_exactly_when_the_dual_is_unitary(self):
        non_dual = 0
        for seed in range(100):
            base = DUAL_BASES[seed % len(DUAL_BASES)]
            direction = gates.random_hermitian(base.q**2, seed)
            gate = perturbed_gate(base, direction, 0.05)
            report = gates.defects(gate)
            dual_is_unitary = unitarity_defect(gates.dual_matrix(gate)) <= 1e-10
            index_form_holds = np.allclose(
                sideways_product(gate), np.eye(gate.q**2), atol=1e-10, rtol=0
            )
            assert (report.gram_defect <= 1e-10) == dual_is_unitary == index_form_holds
            assert report.is_dual == gates.is_dual(gate)
            non_dual += not dual_is_unitary
        assert non_dual >= 90


class TestDefectContinuity:
    @pytest.mark.parametrize("base", DUAL_BASES[:3])
    def test_choi_defect_goes_to_zero_with_theta(self, base):
        direction = gates.random_hermitian(base.q**2, 17)
        thetas = [0.0, *np.geomspace(1e-6, 1e-1, 11)]
        values = [gates.defects(perturbed_gate(base, direction, t)).choi_defect for t in thetas]
        assert values[0] <= 1e-12
        # the Choi state moves by at most 2 ||u(t) - u(s)|| <= 2 |t - s| in trace norm
        for theta, value in zip(thetas, values):
            assert value <= 2 * theta + 1e-12
        for (s, a), (t, b) in zip(zip(thetas, values), zip(thetas[1:], values[1:])):
            assert abs(b - a) <= 2 * (t - s) + 1e-12


class TestHaarUnitary:
    def test_sixteen_dimensional_samples(self):
        generator = np.random.default_rng(16)
        for _ in range(100):
            unitary = gates.haar_unitary(16, generator)
            assert unitarity_defect(unitary) <= 1e-12
            assert_allclose(unitary.conj().T @ unitary, np.eye(16), atol=1e-12)

    def test_dimension_must_be_positive(self):
        with pytest.raises(UsageError):
            gates.haar_unitary(0)


class TestNamedGates:
    def test_haar_is_deterministic(self):
        assert_allclose(gates.haar_gate(3, 7).matrix, gates.haar_gate(3, 7).matrix)
        assert not np.allclose(gates.haar_gate(3, 7).matrix, gates.haar_gate(3, 8).matrix)

    @pytest.mark.parametrize("h", [0.0, 0.3, 1.1])
    def test_self_dual_kicked_ising(self, h):
        assert gates.is_dual(gates.kicked_ising_gate(math.pi / 4, math.pi / 4, h))

    def test_generic_kicked_ising_is_not_dual(self):
        assert not gates.is_dual(gates.kicked_ising_gate(0.5, 0.7, 0.3))

    def test_kicked_ising_without_kick_is_diagonal(self):
        matrix = gates.kicked_ising_gate(0.4, 0.0, 0.3).matrix
        assert_allclose(matrix, np.diag(np.diagonal(matrix)), atol=1e-15)

    def test_first_layer_gate_is_diagonal(self):
        matrix = gates.kicked_ising_first_gate(math.pi / 4, 0.3).matrix
        assert_allclose(matrix, np.diag(np.diagonal(matrix)), atol=1e-15)

    def test_lookup(self):
        assert_allclose(gates.named_gate("swap", 3).matrix, gates.swap_gate(3).matrix)

    def test_unknown_name(self):
        with pytest.raises(UsageError, match="Unknown gate"):
            gates.named_gate("toffoli")

    def test_kicked_ising_needs_qubits(self):
        with pytest.raises(UsageError):
            gates.named_gate("kicked-ising", q=3)


class TestProjection:
    def test_dual_input_stops_immediately(self):
        projected, converged, trace = gates.project_dual_iterative(gates.swap_gate(2))
        assert converged
        assert len(trace) == 1
        assert_allclose(projected.matrix, gates.swap_gate(2).matrix)

    @pytest.mark.parametrize("seed", range(3))
    def test_output_is_unitary(self, seed):
        projected, _, trace = gates.project_dual_iterative(gates.haar_gate(2, seed), max_iters=50)
        assert isinstance(projected, Gate)
        assert trace[-1] <= trace[0]
