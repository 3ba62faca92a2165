import math

import numpy as np
import pytest

from quantum_leakage.config import SolverConfig
from quantum_leakage.core.encoder import basis_encoding, wrapped_basis_encoding
from quantum_leakage.core.errors import DegenerateEnsembleError, InvalidArgumentError
from quantum_leakage.core.leakage import (
    assignment_update,
    audit_dual_bound,
    compute_leakage,
    dual_certificate,
    global_dual_bound,
    leakage_bounds,
    objective,
    povm_fixed_point_step,
    pretty_good_start,
    two_state_oracle,
)
from quantum_leakage.core.operators import Ensemble, Povm, PureState, random_pure_state, random_unitary
from quantum_leakage.core.stochastic import derive_rng, random_pure_ensemble
from quantum_leakage.core.validators import validate_povm

from .helpers import pure_pair_with_overlap

TWO_STATE_BITS = math.log2(1 + math.sqrt(0.5))


def _pair_ensemble(overlap: float, dim: int = 2) -> Ensemble:
    return Ensemble.from_pure_states(list(pure_pair_with_overlap(overlap, dim)))


# ---- assignment / objective ----

def test_assignment_on_basis_states(qubit_basis):
    assert assignment_update(Povm.computational(2), qubit_basis) == (0, 1)


def test_assignment_single_label_is_constant():
    ens = Ensemble.from_pure_states([PureState.normalized([1.0, 1.0])])
    assert assignment_update(Povm.computational(2), ens) == (0, 0)


def test_assignment_ties_go_to_smallest_index():
    psi = PureState.normalized([1.0, 2.0])
    ens = Ensemble.from_pure_states([psi, psi, psi])
    assert assignment_update(Povm.computational(2), ens) == (0, 0)


def test_assignment_ignores_zero_prior_labels(qubit_basis):
    ens = qubit_basis.with_prior([0.0, 1.0])
    assert assignment_update(Povm.computational(2), ens) == (1, 1)
    assert objective(Povm.computational(2), ens) == pytest.approx(1.0)


# ---- fixed-point step ----

def test_fixed_point_keeps_basis_measurement():
    f = Povm.computational(3)
    sigma = [PureState.basis(3, y).density() for y in range(3)]
    assert np.allclose(povm_fixed_point_step(f, sigma).elements, f.elements, atol=1e-12)


def test_fixed_point_with_one_state_keeps_objective_at_one(rng):
    rho = random_pure_state(2, rng).density()
    f = Povm(np.stack([np.eye(2) / 4] * 4))
    stepped = povm_fixed_point_step(f, [rho] * 4)
    total = sum(np.trace(rho.matrix @ e).real for e in stepped.elements)
    assert total == pytest.approx(1.0, abs=1e-12)
    assert validate_povm(stepped).is_ok()


def test_fixed_point_increases_two_state_objective():
    ens = Ensemble.from_pure_states([PureState.basis(2, 0), PureState.normalized([1.0, 1.0])])
    f = Povm(np.stack([np.diag([0.6, 0.4]), np.diag([0.4, 0.6])]))
    before = objective(f, ens)
    sigma = ens.stack[list(assignment_update(f, ens))]
    after = objective(povm_fixed_point_step(f, sigma), ens)
    assert before == pytest.approx(1.1)
    assert after > before + 0.5


def test_fixed_point_degenerate_raises():
    f = Povm.computational(2)
    sigma = [PureState.basis(2, 1).density(), PureState.basis(2, 0).density()]
    with pytest.raises(DegenerateEnsembleError):
        povm_fixed_point_step(f, sigma)


def test_pretty_good_start_pads_outcomes(qubit_basis):
    f = pretty_good_start(qubit_basis, 4)
    assert f.shape == (4, 2, 2)
    assert np.allclose(f.sum(axis=0), np.eye(2))
    assert pretty_good_start(wrapped_basis_encoding(5, 2), 4) is None


# ---- compute_leakage ----

def test_identical_states_leak_nothing(rng):
    rho = random_pure_state(3, rng).density()
    res = compute_leakage(Ensemble.from_matrices([rho.matrix] * 3))
    assert res.leakage_bits == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_basis_encoding_reaches_log_alphabet(n):
    res = compute_leakage(basis_encoding(n, n))
    assert res.leakage_bits == pytest.approx(math.log2(n), abs=1e-9)
    assert res.converged


def test_two_state_example_matches_closed_form(fast_solver):
    res = compute_leakage(_pair_ensemble(1 / math.sqrt(2)), fast_solver)
    assert res.leakage_bits == pytest.approx(0.771553, abs=1e-5)
    assert res.objective == pytest.approx(1 + math.sqrt(0.5), abs=1e-5)


def test_result_invariants(rng):
    ens = random_pure_ensemble(3, 3, rng)
    res = compute_leakage(ens)
    assert 0.0 <= res.leakage_bits <= res.dual_upper_bound_bits + 1e-6
    assert res.objective == pytest.approx(2.0 ** res.leakage_bits, rel=1e-12)
    assert all(b >= a - 1e-12 for a, b in zip(res.objective_trace, res.objective_trace[1:]))
    assert validate_povm(res.povm, 1e-8).is_ok()
    assert res.povm.outcome_count == 9
    alphabet_cap, pure_cap = leakage_bounds(ens)
    assert res.leakage_bits <= min(alphabet_cap, pure_cap) + 1e-8


def test_result_to_dict_fields(qubit_basis):
    payload = compute_leakage(qubit_basis).to_dict()
    assert set(payload) == {"leakage_bits", "dual_upper_bound_bits", "iterations", "converged",
                            "objective_trace", "povm", "assignment"}
    assert len(payload["povm"]) == 4
    assert set(payload["povm"][0]) == {"dim", "re", "im"}


def test_warm_start_runs_single_trajectory():
    res = compute_leakage(basis_encoding(4, 4), initial_povm=Povm.computational(4))
    assert res.start == "warm"
    assert res.povm.outcome_count == 4
    assert res.leakage_bits == pytest.approx(2.0, abs=1e-12)


def test_deterministic_reruns(rng):
    ens = random_pure_ensemble(3, 2, rng)
    cfg = SolverConfig(restarts=3, seed=11)
    a, b = compute_leakage(ens, cfg), compute_leakage(ens, cfg)
    assert a.objective_trace == b.objective_trace
    assert np.array_equal(a.povm.elements, b.povm.elements)


def test_unitary_invariance():
    for i in range(3):
        rng = derive_rng(5, i)
        ens = random_pure_ensemble(3, 3, rng)
        u = random_unitary(3, rng)
        q = compute_leakage(ens).leakage_bits
        assert compute_leakage(ens.conjugated(u)).leakage_bits == pytest.approx(q, abs=2e-4)


def test_label_invariance(rng):
    ens = random_pure_ensemble(4, 2, rng)
    q = compute_leakage(ens).leakage_bits
    assert compute_leakage(ens.permuted([3, 1, 0, 2])).leakage_bits == pytest.approx(q, abs=2e-4)


def test_zero_probability_labels_do_not_matter(rng):
    a, b, c = (random_pure_state(2, rng) for _ in range(3))
    q_two = compute_leakage(Ensemble.from_pure_states([a, b])).leakage_bits
    q_padded = compute_leakage(Ensemble.from_pure_states([a, b, c], prior=[0.3, 0.7, 0.0])).leakage_bits
    assert q_padded == pytest.approx(q_two, abs=1e-12)


# ---- dual certificates ----

def test_dual_certificate_orthonormal_is_tight():
    ens = basis_encoding(4, 4)
    assert dual_certificate(Povm.computational(4), ens, (0, 1, 2, 3)) == pytest.approx(4.0, abs=1e-9)


def test_dual_certificate_single_state():
    ens = Ensemble.from_pure_states([PureState.basis(2, 0)])
    assert dual_certificate(Povm.trivial(2), ens, (0,)) == pytest.approx(1.0, abs=1e-12)


def test_dual_certificate_checks_assignment_length(qubit_basis):
    with pytest.raises(InvalidArgumentError):
        dual_certificate(Povm.computational(2), qubit_basis, (0,))


def test_two_state_dual_gap_is_small(fast_solver):
    res = compute_leakage(_pair_ensemble(0.6), fast_solver)
    oracle = two_state_oracle(*pure_pair_with_overlap(0.6))
    assert res.leakage_bits == pytest.approx(oracle, abs=1e-5)
    assert res.dual_upper_bound_bits - oracle <= 1e-4
    assert res.dual_upper_bound_bits >= oracle - 1e-9


def test_global_bound_dominates_any_povm(rng):
    ens = random_pure_ensemble(3, 2, rng)
    res = compute_leakage(ens)
    bound = global_dual_bound(res.povm, ens)
    assert bound >= res.objective - 1e-9
    assert audit_dual_bound(res.povm, ens) >= res.objective - 1e-9


def test_audit_mode_is_size_limited():
    ens = basis_encoding(4, 4)
    with pytest.raises(InvalidArgumentError):
        audit_dual_bound(Povm.computational(4), ens)


# ---- oracles and caps ----

def test_two_state_oracle_examples():
    zero, one = PureState.basis(2, 0), PureState.basis(2, 1)
    assert two_state_oracle(zero, one) == pytest.approx(1.0)
    assert two_state_oracle(zero, zero) == pytest.approx(0.0)
    a, b = pure_pair_with_overlap(1 / math.sqrt(2))
    assert two_state_oracle(a, b) == pytest.approx(TWO_STATE_BITS)


def test_leakage_bounds_examples():
    assert leakage_bounds(basis_encoding(8, 8)) == pytest.approx((3.0, 3.0))
    assert leakage_bounds(wrapped_basis_encoding(8, 2)) == pytest.approx((2.0, 1.0))
    assert leakage_bounds(basis_encoding(1, 4)) == pytest.approx((0.0, 0.0))


def test_wrapped_basis_hits_pure_cap():
    res = compute_leakage(wrapped_basis_encoding(8, 2))
    assert res.leakage_bits == pytest.approx(1.0, abs=1e-6)


def _oracle_gap(trials: int, fast_solver) -> float:
    worst = 0.0
    for i in range(trials):
        rng = derive_rng(2024, i)
        dim = 2 + i % 2
        a, b = random_pure_state(dim, rng), random_pure_state(dim, rng)
        q = compute_leakage(Ensemble.from_pure_states([a, b]), fast_solver).leakage_bits
        worst = max(worst, abs(q - two_state_oracle(a, b)))
    return worst


def test_two_state_oracle_agreement(fast_solver):
    assert _oracle_gap(20, fast_solver) <= 1e-5


@pytest.mark.slow
def test_two_state_oracle_agreement_full(fast_solver):
    assert _oracle_gap(200, fast_solver) <= 1e-5


def test_optimal_start_stops_on_closed_dual_gap():
    res = compute_leakage(basis_encoding(4, 4), initial_povm=Povm.computational(4))
    assert res.converged
    assert res.iterations == 0
    assert res.dual_upper_bound_bits == pytest.approx(res.leakage_bits, abs=1e-9)


def test_exact_pretty_good_start_needs_no_steps():
    res = compute_leakage(basis_encoding(3, 3), SolverConfig(max_iter=1, restarts=1))
    assert res.start == "pgm"
    assert res.converged
    assert res.iterations == 0
    assert res.leakage_bits == pytest.approx(math.log2(3), abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_more_outcomes_do_not_raise_leakage(seed):
    ens = random_pure_ensemble(4, 2, derive_rng(seed, 0))
    base = compute_leakage(ens).leakage_bits
    big = compute_leakage(ens, SolverConfig(outcome_count=8)).leakage_bits
    assert big <= base + 1e-6
