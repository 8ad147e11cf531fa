import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.exceptions import DimensionMismatchError
from app.services import gates
from app.services.cartan import (
    cartan_decompose,
    cartan_reconstruct,
    certificate,
    nearest_dual_q2,
    snap_to_dual,
)
from app.services.ensemble import perturbed_gate

QUARTER = math.pi / 4


def assert_in_chamber(J, atol=1e-9):
    Jx, Jy, Jz = J
    assert QUARTER + atol >= Jx >= Jy - atol
    assert Jy + atol >= abs(Jz)
    if abs(Jx - QUARTER) <= atol:
        assert Jz >= -atol


class TestDecomposition:
    @pytest.mark.parametrize("seed", range(200))
    def test_reconstructs_haar_gates(self, seed):
        gate = gates.haar_gate(2, seed)
        data = cartan_decompose(gate)
        assert_allclose(cartan_reconstruct(data), gate.matrix, atol=1e-9)
        assert_in_chamber(data.J)

    def test_chamber_on_the_quarter_face(self):
        for gate in (gates.swap_gate(2), gates.kicked_ising_gate(QUARTER, QUARTER, 0.3)):
            assert_in_chamber(cartan_decompose(gate).J)

    def test_swap(self):
        J = cartan_decompose(gates.swap_gate(2)).J
        assert_allclose(np.abs(J), [QUARTER] * 3, atol=1e-9)

    def test_identity(self):
        data = cartan_decompose(gates.identity_gate(2))
        assert_allclose(data.J, [0, 0, 0], atol=1e-9)
        local = np.kron(data.u1, data.u2) @ np.kron(data.u3, data.u4)
        assert abs(np.trace(local)) / 4 == pytest.approx(1.0, abs=1e-9)

    def test_dual_kicked_ising_sits_on_two_faces(self):
        J = cartan_decompose(gates.kicked_ising_gate(QUARTER, QUARTER, 0.3)).J
        assert sum(abs(abs(j) - QUARTER) < 1e-8 for j in J) >= 2

    def test_needs_qubits(self):
        with pytest.raises(DimensionMismatchError):
            cartan_decompose(gates.swap_gate(3))


class TestSnapping:
    def test_snaps_the_two_closest_axes(self):
        assert snap_to_dual((0.7, 0.1, 0.75)) == pytest.approx((QUARTER, 0.1, QUARTER))

    def test_keeps_signs(self):
        assert snap_to_dual((0.7, 0.5, -0.75)) == pytest.approx((QUARTER, 0.5, -QUARTER))

    def test_dual_gate_is_a_fixed_point(self):
        snapped, nearest = nearest_dual_q2(gates.swap_gate(2))
        assert nearest.distance == pytest.approx(0, abs=1e-9)
        assert nearest.certificate_holds
        assert gates.is_dual(snapped)

    def test_report_carries_the_certificate(self):
        gate = gates.haar_gate(2, 3)
        snapped, nearest = nearest_dual_q2(gate)
        assert nearest.delta == pytest.approx(gates.defects(gate).choi_defect_unnormalized)
        assert nearest.certificate == pytest.approx(certificate(nearest.delta))
        assert nearest.certificate_holds == (nearest.distance <= nearest.certificate + 1e-9)
        assert nearest.J_projected == pytest.approx(list(snap_to_dual(nearest.J)))
        assert nearest.distance == pytest.approx(
            float(np.linalg.norm(gate.matrix - snapped.matrix, "nuc"))
        )

    def test_certificate(self):
        assert certificate(0.25) == pytest.approx(7.0)
        assert certificate(-1e-15) == 0.0

    def test_perturbed_dual_gates_stay_within_certificate(self):
        checked = 0
        for seed in range(50):
            base, _ = nearest_dual_q2(gates.haar_gate(2, seed))
            direction = gates.random_hermitian(4, 1000 + seed)
            gate = perturbed_gate(base, direction, 0.01)
            delta = gates.defects(gate).choi_defect_unnormalized
            if delta > 0.1:
                continue
            snapped, nearest = nearest_dual_q2(gate)
            assert gates.is_dual(snapped)
            assert nearest.certificate_holds
            assert nearest.distance <= certificate(delta) + 1e-9
            checked += 1
        assert checked >= 25
