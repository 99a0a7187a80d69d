"""Simulator primitives checked against independent constructions.

The Bell and Z projection tests compare the tensordot-based
implementation against a plain bit-arithmetic oracle that knows nothing
about array reshaping, so a convention slip in either one shows up.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcteleport.statevector import (
    BellOutcome,
    Pauli,
    StateVector,
    SubsystemNotPureError,
    apply_hadamard,
    apply_pauli,
    bell_probabilities,
    bell_project,
    bell_sample,
    extract_subsystem,
    fidelity,
    load_state_file,
    make_basis_state,
    reduced_fidelity,
    save_state_file,
    states_equal,
    tensor,
    z_probabilities,
    z_project,
    z_sample,
)

from conftest import dense_state

SQ2 = 1.0 / math.sqrt(2.0)


def bell_project_oracle(state, qa, qb, outcome):
    """Projection via explicit basis-index bit arithmetic."""
    n = state.num_qubits
    v = outcome.vector.reshape(2, 2)
    pos_a, pos_b = n - 1 - qa, n - 1 - qb
    mask = (1 << pos_a) | (1 << pos_b)
    residual = {}
    for idx, amp in enumerate(state.amplitudes):
        x = (idx >> pos_a) & 1
        y = (idx >> pos_b) & 1
        rest = idx & ~mask
        residual[rest] = residual.get(rest, 0.0) + np.conj(v[x, y]) * amp
    prob = sum(abs(c) ** 2 for c in residual.values())
    if prob < 1e-12:
        return None, prob
    out = np.zeros_like(state.amplitudes)
    for rest, c in residual.items():
        for x in (0, 1):
            for y in (0, 1):
                out[rest | (x << pos_a) | (y << pos_b)] = v[x, y] * c / math.sqrt(prob)
    return out, prob


class TestBasisAndTensor:
    def test_basis_state_index_is_big_endian(self):
        """|110> on three qubits sits at index 6, qubit 0 most significant."""
        sv = make_basis_state(3, 6)
        assert sv.amplitude(6) == 1.0
        assert np.count_nonzero(sv.amplitudes) == 1

    def test_tensor_orders_first_factor_high(self):
        sv = tensor(make_basis_state(1, 0), make_basis_state(1, 1))
        assert sv.num_qubits == 2
        assert sv.amplitude(0b01) == 1.0

    def test_tensor_is_associative(self):
        a, b, c = dense_state(1, 1), dense_state(2, 2), dense_state(1, 3)
        left = tensor(tensor(a, b), c)
        right = tensor(a, tensor(b, c))
        np.testing.assert_allclose(left.amplitudes, right.amplitudes, atol=1e-14)

    def test_constructor_rejects_bad_input(self):
        with pytest.raises(ValueError):
            StateVector([1.0, 0.0, 0.0])  # not a power of two
        with pytest.raises(ValueError):
            StateVector([1.0, 1.0])  # norm too far off
        with pytest.raises(ValueError):
            make_basis_state(2, 4)

    def test_constructor_renormalizes_within_tolerance(self):
        sv = StateVector([1.0 + 5e-7, 0.0])
        assert abs(np.linalg.norm(sv.amplitudes) - 1.0) < 1e-15

    def test_amplitudes_are_read_only(self):
        sv = make_basis_state(1, 0)
        with pytest.raises(ValueError):
            sv.amplitudes[0] = 0.0
        with pytest.raises(AttributeError):
            sv.num_qubits = 2


class TestPauliAlgebra:
    def test_matrices_are_exact(self):
        np.testing.assert_array_equal(Pauli.I.matrix, np.eye(2))
        np.testing.assert_array_equal(Pauli.X.matrix, [[0, 1], [1, 0]])
        np.testing.assert_array_equal(Pauli.IY.matrix, [[0, 1], [-1, 0]])
        np.testing.assert_array_equal(Pauli.Z.matrix, [[1, 0], [0, -1]])

    def test_iy_is_z_times_x(self):
        np.testing.assert_array_equal(Pauli.IY.matrix, Pauli.Z.matrix @ Pauli.X.matrix)

    def test_iy_squares_to_minus_identity(self):
        np.testing.assert_array_equal(Pauli.IY.matrix @ Pauli.IY.matrix, -np.eye(2))

    def test_iy_on_basis_states(self):
        """iY|0> = -|1>, iY|1> = |0>."""
        sv = apply_pauli(make_basis_state(1, 0), 0, Pauli.IY)
        np.testing.assert_allclose(sv.amplitudes, [0, -1], atol=1e-15)
        sv = apply_pauli(make_basis_state(1, 1), 0, Pauli.IY)
        np.testing.assert_allclose(sv.amplitudes, [1, 0], atol=1e-15)

    @pytest.mark.parametrize("pauli", list(Pauli))
    @pytest.mark.parametrize("qubit", [0, 1, 2])
    def test_apply_matches_kron_expansion(self, pauli, qubit):
        sv = dense_state(3, 11)
        ops = [np.eye(2)] * 3
        ops[qubit] = pauli.matrix
        full = np.kron(np.kron(ops[0], ops[1]), ops[2])
        np.testing.assert_allclose(
            apply_pauli(sv, qubit, pauli).amplitudes, full @ sv.amplitudes, atol=1e-14
        )

    def test_identity_is_a_no_op_object(self):
        sv = dense_state(2, 4)
        assert apply_pauli(sv, 1, Pauli.I) is sv


class TestHadamard:
    def test_hadamard_on_basis(self):
        sv = apply_hadamard(make_basis_state(1, 0), 0)
        np.testing.assert_allclose(sv.amplitudes, [SQ2, SQ2], atol=1e-15)
        sv = apply_hadamard(make_basis_state(1, 1), 0)
        np.testing.assert_allclose(sv.amplitudes, [SQ2, -SQ2], atol=1e-15)

    def test_hadamard_is_involutive(self):
        sv = dense_state(3, 7)
        back = apply_hadamard(apply_hadamard(sv, 1), 1)
        np.testing.assert_allclose(back.amplitudes, sv.amplitudes, atol=1e-14)


class TestBellProjection:
    @pytest.mark.parametrize("outcome", list(BellOutcome))
    @pytest.mark.parametrize("qa,qb", [(0, 1), (1, 0), (0, 2), (3, 1)])
    def test_matches_bit_arithmetic_oracle(self, outcome, qa, qb):
        sv = dense_state(4, 23)
        post, prob = bell_project(sv, qa, qb, outcome)
        oracle_amps, oracle_prob = bell_project_oracle(sv, qa, qb, outcome)
        np.testing.assert_allclose(prob, oracle_prob, atol=1e-14)
        np.testing.assert_allclose(post.amplitudes, oracle_amps, atol=1e-12)

    def test_outcome_weights_are_complete(self):
        sv = dense_state(3, 5)
        probs = bell_probabilities(sv, 0, 2)
        assert abs(sum(probs.values()) - 1.0) < 1e-12

    def test_projection_is_idempotent(self):
        sv = dense_state(3, 9)
        once, _ = bell_project(sv, 0, 1, BellOutcome.PSI_MINUS)
        twice, prob = bell_project(once, 0, 1, BellOutcome.PSI_MINUS)
        assert abs(prob - 1.0) < 1e-12
        np.testing.assert_allclose(twice.amplitudes, once.amplitudes, atol=1e-12)

    def test_measured_qubits_stay_collapsed_in_register(self):
        sv = dense_state(3, 13)
        post, _ = bell_project(sv, 0, 1, BellOutcome.PHI_MINUS)
        assert post.num_qubits == 3  # register does not shrink
        pair = extract_subsystem(post, (0, 1))
        np.testing.assert_allclose(
            np.abs(np.vdot(pair.amplitudes, BellOutcome.PHI_MINUS.vector)), 1.0, atol=1e-12
        )

    def test_impossible_branch_returns_none_with_residual_weight(self):
        sv = make_basis_state(2, 0b00)
        post, prob = bell_project(sv, 0, 1, BellOutcome.PSI_PLUS)
        assert post is None
        assert prob < 1e-12

    def test_qubit_order_projects_the_same_ray(self):
        """Bell states are swap-symmetric rays; both orders must agree."""
        sv = dense_state(3, 17)
        fwd, p_fwd = bell_project(sv, 0, 2, BellOutcome.PSI_MINUS)
        rev, p_rev = bell_project(sv, 2, 0, BellOutcome.PSI_MINUS)
        assert abs(p_fwd - p_rev) < 1e-14
        assert states_equal(fwd, rev, tol=1e-12)

    def test_rejects_duplicate_or_out_of_range_qubits(self):
        sv = dense_state(2, 3)
        with pytest.raises(ValueError):
            bell_project(sv, 1, 1, BellOutcome.PHI_PLUS)
        with pytest.raises(ValueError):
            bell_project(sv, 0, 2, BellOutcome.PHI_PLUS)


class TestZMeasurement:
    def test_plus_state_is_unbiased(self):
        sv = apply_hadamard(make_basis_state(1, 0), 0)
        p0, p1 = z_probabilities(sv, 0)
        assert abs(p0 - 0.5) < 1e-12 and abs(p1 - 0.5) < 1e-12

    def test_projection_collapses_in_place(self):
        sv = dense_state(2, 19)
        post, prob = z_project(sv, 1, 1)
        assert post.num_qubits == 2
        p0, p1 = z_probabilities(post, 1)
        assert abs(p1 - 1.0) < 1e-12
        assert 0 < prob < 1

    def test_impossible_bit(self):
        post, prob = z_project(make_basis_state(1, 0), 0, 1)
        assert post is None and prob < 1e-12

    def test_rejects_non_bit(self):
        with pytest.raises(ValueError):
            z_project(make_basis_state(1, 0), 0, 2)


class TestSampling:
    def test_bell_sampling_is_seed_deterministic(self):
        sv = dense_state(4, 29)
        seqs = []
        for _ in range(2):
            gen = np.random.default_rng(123)
            seqs.append([bell_sample(sv, 0, 1, gen)[0] for _ in range(50)])
        assert seqs[0] == seqs[1]

    def test_bell_sampling_frequencies(self):
        """Sampled outcome counts agree with the weights at five sigma."""
        sv = dense_state(2, 31)
        probs = bell_probabilities(sv, 0, 1)
        gen = np.random.default_rng(7)
        trials = 4000
        counts = {o: 0 for o in BellOutcome}
        for _ in range(trials):
            counts[bell_sample(sv, 0, 1, gen)[0]] += 1
        for outcome, p in probs.items():
            sigma = math.sqrt(trials * p * (1 - p))
            assert abs(counts[outcome] - trials * p) <= 5 * sigma

    def test_z_sampling_frequencies(self):
        sv = dense_state(1, 37)
        p0, _ = z_probabilities(sv, 0)
        gen = np.random.default_rng(11)
        trials = 4000
        zeros = sum(1 for _ in range(trials) if z_sample(sv, 0, gen)[0] == 0)
        sigma = math.sqrt(trials * p0 * (1 - p0))
        assert abs(zeros - trials * p0) <= 5 * sigma


class TestSubsystemAndFidelity:
    def test_extract_recovers_tensor_factor(self):
        a, b = dense_state(2, 41), dense_state(1, 43)
        joint = tensor(a, b)
        assert states_equal(extract_subsystem(joint, (0, 1)), a, tol=1e-12)
        assert states_equal(extract_subsystem(joint, (2,)), b, tol=1e-12)

    def test_extract_respects_requested_order(self):
        sv = dense_state(3, 47)
        swapped = extract_subsystem(tensor(sv, make_basis_state(1, 0)), (1, 0, 2))
        expect = sv.amplitudes.reshape(2, 2, 2).transpose(1, 0, 2).reshape(-1)
        phase = np.vdot(swapped.amplitudes, expect)
        np.testing.assert_allclose(
            swapped.amplitudes * phase / abs(phase), expect, atol=1e-12
        )

    def test_extract_is_phase_canonical(self):
        sv = dense_state(2, 53)
        joint = tensor(sv, make_basis_state(1, 1))
        one = extract_subsystem(joint, (0, 1))
        two = extract_subsystem(joint, (0, 1))
        np.testing.assert_array_equal(one.amplitudes, two.amplitudes)

    def test_entangled_subsystem_raises(self):
        bell = StateVector(BellOutcome.PHI_PLUS.vector)
        with pytest.raises(SubsystemNotPureError):
            extract_subsystem(bell, (0,))

    def test_fidelity_of_orthogonal_and_identical(self):
        a = make_basis_state(2, 0)
        b = make_basis_state(2, 3)
        assert fidelity(a, a) == pytest.approx(1.0, abs=1e-14)
        assert fidelity(a, b) == pytest.approx(0.0, abs=1e-14)

    def test_reduced_fidelity_matches_extraction_when_pure(self):
        a, b = dense_state(2, 59), dense_state(2, 61)
        joint = tensor(a, b)
        target = dense_state(2, 67)
        via_extract = fidelity(extract_subsystem(joint, (0, 1)), target)
        direct = reduced_fidelity(joint, (0, 1), target)
        assert direct == pytest.approx(via_extract, abs=1e-12)

    def test_reduced_fidelity_on_mixed_subsystem(self):
        """Half of a Bell pair scores 1/2 against any pure target."""
        bell = StateVector(BellOutcome.PHI_PLUS.vector)
        assert reduced_fidelity(bell, (0,), make_basis_state(1, 0)) == pytest.approx(
            0.5, abs=1e-12
        )


class TestStateFile:
    def test_round_trip_is_exact(self, tmp_path):
        sv = dense_state(3, 71)
        path = tmp_path / "state.txt"
        save_state_file(sv, path)
        back = load_state_file(path)
        np.testing.assert_array_equal(back.amplitudes, sv.amplitudes)

    def test_small_norm_error_is_renormalized(self, tmp_path):
        path = tmp_path / "state.txt"
        path.write_text(f"{1.0 + 3e-7} 0.0\n0.0 0.0\n")
        sv = load_state_file(path)
        assert abs(np.linalg.norm(sv.amplitudes) - 1.0) < 1e-15

    @pytest.mark.parametrize(
        "content",
        [
            "1.0 0.0\n",  # not a power-of-two count >= 2
            "1.0 0.0\n0.0\n",  # missing column
            "1.0 0.0\nfoo bar\n",  # not floats
            "0.9 0.0\n0.1 0.0\n",  # norm too far off
        ],
    )
    def test_malformed_files_are_rejected(self, tmp_path, content):
        path = tmp_path / "bad.txt"
        path.write_text(content)
        with pytest.raises(ValueError):
            load_state_file(path)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 5))
def test_property_operations_preserve_norm(seed, n):
    """Any gate/projection sequence keeps the state normalized."""
    gen = np.random.default_rng(seed)
    sv = dense_state(n, seed)
    for _ in range(4):
        q = int(gen.integers(n))
        op = int(gen.integers(3))
        if op == 0:
            sv = apply_pauli(sv, q, list(Pauli)[int(gen.integers(4))])
        elif op == 1:
            sv = apply_hadamard(sv, q)
        else:
            post, _ = z_project(sv, q, int(gen.integers(2)))
            if post is not None:
                sv = post
        assert abs(np.linalg.norm(sv.amplitudes) - 1.0) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 5))
def test_property_bell_weights_complete_and_uniformly_reachable(seed, n):
    gen = np.random.default_rng(seed)
    qa, qb = map(int, gen.choice(n, size=2, replace=False))
    sv = dense_state(n, seed + 1)
    probs = bell_probabilities(sv, qa, qb)
    assert abs(sum(probs.values()) - 1.0) < 1e-10
    for outcome, p in probs.items():
        post, prob = bell_project(sv, qa, qb, outcome)
        assert prob == pytest.approx(p, abs=1e-12)
        if post is not None:
            again, p2 = bell_project(post, qa, qb, outcome)
            assert p2 == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), na=st.integers(1, 3), nb=st.integers(1, 3))
def test_property_tensor_then_extract_round_trips(seed, na, nb):
    a, b = dense_state(na, seed), dense_state(nb, seed + 1)
    joint = tensor(a, b)
    assert states_equal(extract_subsystem(joint, tuple(range(na))), a, tol=1e-10)
    assert states_equal(
        extract_subsystem(joint, tuple(range(na, na + nb))), b, tol=1e-10
    )
