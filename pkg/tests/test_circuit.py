import math

import pytest
from numpy.testing import assert_allclose

from app.exceptions import CapacityExceededError, DimensionMismatchError, EstimationError, UsageError
from app.models.circuit import BrickworkCircuit
from app.services import gates, qinfo
from app.services.circuit import (
    bond_entropies,
    estimate_vE,
    evolve,
    initial_state,
    kicked_ising_circuit,
    light_cone_valid,
    valley_parity,
    zigzag_check,
)

LN2 = math.log(2)
QUARTER = math.pi / 4


def dimer_run(gate, L=16, T=6, **kwargs):
    circuit = BrickworkCircuit.uniform(L, gate, first_parity=1, **kwargs)
    return evolve(circuit, initial_state("dimer", L, gate.q), T)


def assert_linear_growth(record):
    central = record.series(record.central_cut)
    ln_q = math.log(record.q)
    for t in record.times:
        if t % 2 == 0 and record.light_cone_valid[t]:
            assert central[t] - central[0] == pytest.approx(t * ln_q, abs=1e-9)


class TestCircuitModel:
    def test_layer_parity_alternates(self):
        circuit = BrickworkCircuit.uniform(6, gates.swap_gate(2), first_parity=1)
        assert circuit.bonds(1) == [1, 3]
        assert circuit.bonds(2) == [0, 2, 4]
        assert circuit.bonds(3) == [1, 3]

    def test_first_layer_override(self):
        circuit = kicked_ising_circuit(6, QUARTER, QUARTER, 0.3)
        assert_allclose(circuit.gate_at(1, 0).matrix, gates.kicked_ising_first_gate(QUARTER, 0.3).matrix)
        assert_allclose(circuit.gate_at(2, 1).matrix, gates.kicked_ising_gate(QUARTER, QUARTER, 0.3).matrix)

    def test_bond_gate_precedence(self):
        swap, identity = gates.swap_gate(2), gates.identity_gate(2)
        circuit = BrickworkCircuit.uniform(6, swap, bond_gates={(None, 2): identity})
        assert circuit.gate_at(3, 2) is identity
        assert circuit.gate_at(3, 0) is swap

    def test_odd_chain_is_rejected(self):
        with pytest.raises(UsageError):
            BrickworkCircuit.uniform(7, gates.swap_gate(2))

    def test_mixed_q_is_rejected(self):
        with pytest.raises(DimensionMismatchError):
            BrickworkCircuit(L=6, q=2, parity_gates={0: gates.swap_gate(2), 1: gates.swap_gate(3)})

    def test_light_cone(self):
        assert light_cone_valid(16, 7)
        assert not light_cone_valid(16, 8)


class TestInitialStates:
    @pytest.mark.parametrize("q", [2, 3])
    def test_dimer_profile(self, q):
        profile = bond_entropies(initial_state("dimer", 8, q))
        expected = [math.log(q) if bond % 2 == 0 else 0.0 for bond in range(7)]
        assert_allclose(profile, expected, atol=1e-12)

    def test_dimer_valleys_are_odd(self):
        assert valley_parity(initial_state("dimer", 8, 2), 2) == 1

    def test_product_state_is_not_a_zigzag(self):
        assert valley_parity(initial_state("product", 8, 2), 2) is None

    def test_kicked_ising_states_need_qubits(self):
        with pytest.raises(UsageError):
            initial_state("kicked-ising-T", 6, 3)

    def test_per_site_bits(self):
        state = initial_state("kicked-ising-L", 4, 2, {"bits": [1, 0, 1, 1]})
        assert abs(state.amplitudes[0b1011]) == pytest.approx(1.0)

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            initial_state("ghz", 6, 2)


class TestBondEntropies:
    @pytest.mark.parametrize("L", [2, 4, 6])
    def test_matches_marginal_entropies(self, rng, L):
        state = qinfo.haar_state((2,) * L, rng)
        expected = [qinfo.entropy_vn(qinfo.reduce(state, range(b + 1))) for b in range(L - 1)]
        assert_allclose(bond_entropies(state), expected, atol=1e-10)


class TestDualEvolution:
    def test_swap_from_dimers(self):
        assert_linear_growth(dimer_run(gates.swap_gate(2)))

    def test_self_dual_kicked_ising_from_dimers(self):
        assert_linear_growth(dimer_run(gates.kicked_ising_gate(QUARTER, QUARTER, 0.3)))

    def test_qutrit_fourier_from_dimers(self):
        assert_linear_growth(dimer_run(gates.fourier_gate(3), L=8, T=3))

    def test_mixed_dual_gates(self):
        swap = gates.swap_gate(2)
        kicked = gates.kicked_ising_gate(QUARTER, QUARTER, 0.3)
        bond_gates = {(None, bond): kicked for bond in range(15) if bond % 4 >= 2}
        assert_linear_growth(dimer_run(swap, bond_gates=bond_gates))

    def test_growth_per_layer_is_bounded(self):
        record = dimer_run(gates.haar_gate(2, 3), L=10, T=4)
        assert record.layer_increases().max() <= 2 * LN2 + 1e-9

    def test_identity_leaves_the_profile_alone(self):
        record = dimer_run(gates.identity_gate(2), L=8, T=4)
        for profile in record.profiles:
            assert_allclose(profile, record.profiles[0], atol=1e-12)

    def test_entanglement_velocity(self):
        record = dimer_run(gates.swap_gate(2))
        rate, residual = estimate_vE(record, window=(0, 6))
        assert rate == pytest.approx(1.0, abs=1e-9)
        assert residual == pytest.approx(0, abs=1e-9)

    def test_velocity_window_past_light_cone(self):
        record = dimer_run(gates.swap_gate(2), L=8, T=6)
        with pytest.raises(EstimationError):
            estimate_vE(record, window=(0, 6))

    def test_velocity_window_too_short(self):
        record = dimer_run(gates.swap_gate(2))
        with pytest.raises(EstimationError):
            estimate_vE(record, window=(0, 2))


class TestKickedIsingClasses:
    def test_transverse_states_zigzag_after_one_layer(self):
        circuit = kicked_ising_circuit(10, QUARTER, QUARTER, 0.3)
        record = evolve(circuit, initial_state("kicked-ising-T", 10, 2, {"phi": 0.4}), 4)
        assert zigzag_check(record.profiles[1], 2)[0]

    def test_longitudinal_states_zigzag_after_two_layers(self):
        circuit = kicked_ising_circuit(10, QUARTER, QUARTER, 0.3)
        bits = [0, 1, 1, 0, 1, 0, 0, 0, 1, 1]
        record = evolve(circuit, initial_state("kicked-ising-L", 10, 2, {"bits": bits}), 4)
        assert zigzag_check(record.profiles[2], 2)[0]

    @pytest.mark.parametrize("kind,t0", [("kicked-ising-T", 1), ("kicked-ising-L", 2)])
    def test_two_ln_q_per_two_layers(self, kind, t0):
        circuit = kicked_ising_circuit(12, QUARTER, QUARTER, 0.3)
        record = evolve(circuit, initial_state(kind, 12, 2), 5)
        central = record.series(record.central_cut)
        for t in range(t0, 4):
            if record.light_cone_valid[t + 2]:
                assert central[t + 2] - central[t] == pytest.approx(2 * LN2, abs=1e-9)


class TestZigzagCheck:
    def test_accepts_a_zigzag(self):
        assert zigzag_check([LN2, 0, LN2, 0, LN2], 2) == (True, 1)

    def test_reports_even_valleys(self):
        assert zigzag_check([0, LN2, 0, LN2], 2) == (True, 0)

    def test_rejects_flat_profile(self):
        assert not zigzag_check([LN2, LN2, LN2], 2)[0]

    def test_needs_two_bonds(self):
        with pytest.raises(UsageError):
            zigzag_check([LN2], 2)


class TestCapacity:
    def test_large_chain_is_refused(self, small_capacity):
        with pytest.raises(CapacityExceededError):
            initial_state("dimer", 14, 2)

    def test_explicit_limit(self):
        circuit = BrickworkCircuit.uniform(8, gates.swap_gate(2))
        with pytest.raises(CapacityExceededError):
            evolve(circuit, initial_state("dimer", 8, 2), 2, max_amplitudes=100)
