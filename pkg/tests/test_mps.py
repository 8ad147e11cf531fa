import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.exceptions import CapacityExceededError, DimensionMismatchError, NonSolvableError, UsageError
from app.models.circuit import BrickworkCircuit
from app.models.mps import MPSPair
from app.services import gates
from app.services.circuit import evolve, valley_parity
from app.services.mps import (
    combined_tensor,
    cut_entropies_exact,
    dense_state,
    from_unitary,
    random_solvable,
    replica_purity,
    replica_target,
    shift_deviation,
    solvability_defect,
    spectral_gap,
)


def unsolvable_pair(rng, q=2, chi=2):
    A = rng.standard_normal((q, chi, chi * q)) + 1j * rng.standard_normal((q, chi, chi * q))
    B = rng.standard_normal((q, chi * q, chi)) + 1j * rng.standard_normal((q, chi * q, chi))
    return MPSPair(q=q, chi=chi, A=A, B=B)


class TestConstruction:
    def test_combined_tensor_is_the_input_unitary(self):
        unitary = gates.haar_unitary(6, 3)
        pair = from_unitary(3, 2, unitary)
        assert_allclose(combined_tensor(pair), unitary, atol=1e-12)

    @pytest.mark.parametrize("q,chi", [(2, 1), (2, 2), (3, 2)])
    def test_random_pairs_are_solvable(self, q, chi):
        assert solvability_defect(random_solvable(q, chi, 0)) < 1e-10

    def test_shapes_are_checked(self):
        with pytest.raises(DimensionMismatchError):
            MPSPair(q=2, chi=2, A=np.zeros((2, 2, 2)), B=np.zeros((2, 4, 2)))

    def test_bad_sizes(self):
        with pytest.raises(UsageError):
            random_solvable(1, 2, 0)


class TestExactCuts:
    @pytest.mark.parametrize("q", [2, 3])
    @pytest.mark.parametrize("chi", [1, 2])
    def test_cut_entropies(self, q, chi):
        for seed in range(20):
            E_AB, E_BA = cut_entropies_exact(random_solvable(q, chi, seed))
            assert E_AB == pytest.approx(math.log(chi * q), abs=1e-8)
            assert E_BA == pytest.approx(math.log(chi), abs=1e-8)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_replica_purities(self, n):
        for seed in range(5):
            pair = random_solvable(2, 2, seed)
            assert replica_purity(pair, n) == pytest.approx(replica_target(pair, n), abs=1e-8)

    def test_replica_target(self):
        assert replica_target(random_solvable(2, 2, 0), 3) == pytest.approx(1 / 16)

    def test_replica_index_must_be_positive(self):
        with pytest.raises(UsageError):
            replica_purity(random_solvable(2, 2, 0), 0)

    def test_unsolvable_pair_is_refused(self, rng):
        pair = unsolvable_pair(rng)
        with pytest.raises(NonSolvableError):
            cut_entropies_exact(pair)
        with pytest.raises(NonSolvableError):
            replica_purity(pair, 2)

    def test_ancilla_boundary_is_shift_invariant(self):
        assert shift_deviation(random_solvable(2, 2, 4), 3, "ancilla", margin=0) < 1e-8


class TestDenseState:
    def test_ancilla_dims(self):
        state = dense_state(random_solvable(2, 2, 1), 2, "ancilla")
        assert state.dims == (2, 2, 2, 2, 2, 2)

    def test_explicit_boundary(self):
        state = dense_state(random_solvable(2, 2, 1), 2, ([1, 0], [0, 1]))
        assert state.dims == (2, 2, 2, 2)

    def test_unknown_boundary(self):
        with pytest.raises(UsageError):
            dense_state(random_solvable(2, 2, 1), 2, "periodic")

    def test_capacity(self, small_capacity):
        with pytest.raises(CapacityExceededError):
            dense_state(random_solvable(2, 2, 1), 7)

    def test_product_chain_feeds_a_circuit(self):
        state = dense_state(random_solvable(2, 1, 2), 3)
        circuit = BrickworkCircuit.uniform(6, gates.swap_gate(2))
        record = evolve(circuit, state, 2)
        assert record.L == 6
        assert record.layer_increases().max() <= 2 * math.log(2) + 1e-9

    @pytest.mark.parametrize("seed", [0, 3])
    def test_dual_circuit_at_the_valleys_grows_two_ln_q(self, seed):
        state = dense_state(random_solvable(2, 2, seed), 5, "ancilla")
        parity = valley_parity(state, 2)
        assert parity is not None
        circuit = BrickworkCircuit.uniform(len(state.dims), gates.swap_gate(2), first_parity=parity)
        record = evolve(circuit, state, 4)
        central = record.series(record.central_cut)
        for t in range(3):
            assert record.light_cone_valid[t + 2]
            assert central[t + 2] - central[t] == pytest.approx(2 * math.log(2), abs=1e-9)

    def test_spectral_gap_of_product_chain(self):
        gap, degenerate = spectral_gap(random_solvable(2, 1, 0))
        assert gap == 1.0
        assert not degenerate
