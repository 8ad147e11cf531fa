import math

import numpy as np
import pytest

from app.exceptions import DimensionMismatchError
from app.services import gates, qinfo
from app.services.cartan import nearest_dual_q2
from app.services.four_party import four_party_report, reconstruct_distillable, reconstruction_bound

LN2 = math.log(2)


def two_bells(q):
    bell = qinfo.bell_state(q)
    return qinfo.tensor_product(bell, bell)


class TestBellPairs:
    @pytest.mark.parametrize("q", [2, 3])
    def test_swap_is_perfect(self, q):
        report = four_party_report(gates.swap_gate(q), two_bells(q), (q,) * 4)
        assert report.delta_S == pytest.approx(2 * math.log(q), abs=1e-10)
        assert report.epsilon == pytest.approx(0, abs=1e-10)
        assert report.distillable_structure_exact
        assert report.failed_checks() == []

    @pytest.mark.parametrize("q", [2, 3])
    def test_identity_creates_nothing(self, q):
        report = four_party_report(gates.identity_gate(q), two_bells(q), (q,) * 4)
        assert report.delta_S == pytest.approx(0, abs=1e-10)
        assert report.epsilon == pytest.approx(2 * math.log(q), abs=1e-10)
        assert report.bounds_vacuous

    def test_serializes_with_symbols(self):
        payload = four_party_report(gates.swap_gate(2), two_bells(2), (2,) * 4).to_flat_dict()
        assert "ΔS" in payload and "ε" in payload
        assert payload["all_checks_pass"] is True

    def test_two_bell_reconstruction_is_exact(self):
        report = four_party_report(gates.swap_gate(2), two_bells(2), (2,) * 4, reconstruct=True)
        assert report.reconstruction_distance == pytest.approx(0, abs=1e-9)
        assert report.reconstruction_bound == pytest.approx(0, abs=1e-9)
        assert report.reconstruction_fidelities == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_single_qudit_middle_is_required(self):
        with pytest.raises(DimensionMismatchError):
            four_party_report(gates.swap_gate(2), two_bells(2), (2, 4, 2))


class TestBounds:
    def test_reconstruction_bound(self):
        assert reconstruction_bound(0.0) == 0.0
        assert reconstruction_bound(math.inf) == pytest.approx(4.0)

    def test_reconstruction_needs_qudit_factors(self, rng):
        state = qinfo.haar_state((3, 2, 2, 3), rng)
        with pytest.raises(DimensionMismatchError):
            reconstruct_distillable(state, (3, 2, 2, 3), 0.1)

    def test_candidate_keeps_both_uhlmann_fidelities(self, rng):
        state = qinfo.haar_state((4, 2, 2, 4), rng)
        candidate, distance = reconstruct_distillable(state, state.dims, 0.5)
        for fidelity in (candidate.fidelity_left, candidate.fidelity_right):
            assert 0.0 <= fidelity <= 1.0 + 1e-9
        assert distance > 0

    @pytest.mark.parametrize("seed", range(5))
    def test_near_dual_gate_on_bells(self, seed):
        base, _ = nearest_dual_q2(gates.haar_gate(2, seed))
        report = four_party_report(base, two_bells(2), (2,) * 4, reconstruct=True)
        assert report.epsilon == pytest.approx(0, abs=1e-9)
        assert report.failed_checks() == []

    @pytest.mark.slow
    def test_random_experiments(self):
        generator = np.random.default_rng(7)
        for trial in range(200):
            dims = (4, 2, 2, 4) if trial % 2 else (2, 2, 2, 2)
            state = qinfo.haar_state(dims, generator)
            gate = gates.haar_gate(2, generator)
            if trial % 3 == 0:
                gate, _ = nearest_dual_q2(gate)
            report = four_party_report(gate, state, dims, reconstruct=True)
            assert report.failed_checks() == [], f"trial {trial}"
            assert report.reconstruction_distance <= report.reconstruction_bound + 1e-9
