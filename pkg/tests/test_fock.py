"""Tests for the small-Fock-space distillation model.

Reference values come from an independent brute-force expansion in the
number basis (pure math/factorial arithmetic, sharing no code with the
package); the headline numbers are additionally frozen as literals below
so a regression in either route is caught.
"""

import math

import numpy as np
import pytest

from photonloop.fock import (
    AtomFieldState,
    DispersivePhase,
    FockSpaceError,
    FockVector,
    PhotonQubit,
    TruncationError,
    coherent_fock,
    dispersive_evolve,
    distill_fidelity,
    distill_probability,
    measure_atom_pm,
    prepare_interaction,
    x_basis_qnd,
)

N_MAX = 40
ALPHA_GRID = (1e-4, 1e-3, 1e-2, 1e-1)

# Frozen reference values (brute-force series, n_max = 40).
P_MINUS_AT_001 = 0.009900663346622346       # alpha_sq = 0.01
AMP0_AT_004 = 0.9801986733067553            # exp(-0.02), alpha_sq = 0.04
FIDELITY_AT_01 = 0.9983352757296109         # alpha_sq = 0.1, exact series
INFIDELITY_AT_2EM3 = 6.666663556753605e-07  # alpha_sq = 2e-3, 1 - fidelity


# --- independent reference route (no package code) ----------------------

def _ref_coherent(alpha_sq, n_max=N_MAX):
    alpha = math.sqrt(alpha_sq)
    return [math.exp(-alpha_sq / 2.0) * alpha ** n / math.sqrt(math.factorial(n))
            for n in range(n_max + 1)]


def _ref_distill(alpha_sq, n_max=N_MAX):
    """Full pipeline by explicit enumeration: equal atomic superposition,
    per-photon sign flip on one branch, projection onto (|g2> ± |g1>)/sqrt(2)."""
    root2 = math.sqrt(2.0)
    c = _ref_coherent(alpha_sq, n_max)
    g1 = [c[n] / root2 * (-1) ** n for n in range(n_max + 1)]
    g2 = [c[n] / root2 for n in range(n_max + 1)]
    plus = [(g2[n] + g1[n]) / root2 for n in range(n_max + 1)]
    minus = [(g2[n] - g1[n]) / root2 for n in range(n_max + 1)]
    p_plus = math.fsum(a * a for a in plus)
    p_minus = math.fsum(a * a for a in minus)
    fidelity = (minus[1] ** 2 / p_minus) if p_minus > 0.0 else 0.0
    return p_plus, p_minus, fidelity


def _pipeline(alpha_sq, n_max=N_MAX):
    pulse = coherent_fock(alpha_sq, n_max)
    joint = prepare_interaction(pulse)
    evolved = dispersive_evolve(joint, DispersivePhase.tuned())
    return measure_atom_pm(evolved)


# --- coherent pulse expansion -------------------------------------------

def test_vacuum_pulse_is_pure_vacuum():
    pulse = coherent_fock(0.0, 4)
    assert np.allclose(pulse.amplitudes, [1, 0, 0, 0, 0], atol=0)
    assert pulse.tail_bound == 0.0


def test_coherent_amplitude_closed_form():
    pulse = coherent_fock(0.04, 10)
    assert abs(pulse.amplitudes[0] - AMP0_AT_004) < 1e-15
    assert abs(pulse.amplitudes[0] - math.exp(-0.02)) < 1e-15


def test_coherent_series_norm_and_tail():
    pulse = coherent_fock(0.01, 12)
    norm_sq = float(np.sum(np.abs(pulse.amplitudes) ** 2))
    assert abs(norm_sq - 1.0) < 1e-15
    assert pulse.tail_bound < 1e-15


@pytest.mark.parametrize("alpha_sq", ALPHA_GRID)
def test_coherent_matches_reference_series(alpha_sq):
    pulse = coherent_fock(alpha_sq, N_MAX)
    ref = _ref_coherent(alpha_sq, N_MAX)
    for n in (0, 1, 2, 3, 5, 10):
        assert abs(pulse.amplitudes[n] - ref[n]) < 1e-15, f"n={n}"


def test_truncation_error_when_cutoff_too_small():
    with pytest.raises(TruncationError):
        coherent_fock(4.0, 5)


def test_invalid_parameters_rejected():
    with pytest.raises(FockSpaceError):
        coherent_fock(-0.5, 10)
    with pytest.raises(FockSpaceError):
        coherent_fock(0.1, -1)
    with pytest.raises(FockSpaceError):
        FockVector(np.array([0.5, 0.5]))  # norm² = 0.5
    with pytest.raises(FockSpaceError):
        PhotonQubit(1.0, 1.0)


# --- dispersive interaction ---------------------------------------------

def test_single_photon_sign_flip_at_tuned_phase():
    root2 = math.sqrt(2.0)
    state = AtomFieldState(
        branch_g1=np.array([0.0, 1.0 / root2]),
        branch_g2=np.array([0.0, 1.0 / root2]),
    )
    evolved = dispersive_evolve(state, DispersivePhase.tuned())
    assert abs(evolved.branch_g1[1] + 1.0 / root2) < 1e-15  # sign flipped
    assert abs(evolved.branch_g2[1] - 1.0 / root2) < 1e-15  # untouched


def test_two_photon_component_unchanged_at_tuned_phase():
    root2 = math.sqrt(2.0)
    state = AtomFieldState(
        branch_g1=np.array([0.0, 0.0, 1.0 / root2]),
        branch_g2=np.array([0.0, 0.0, 1.0 / root2]),
    )
    evolved = dispersive_evolve(state, DispersivePhase.tuned())
    assert abs(evolved.branch_g1[2] - 1.0 / root2) < 1e-15  # phase e^{2πi}


def test_zero_phase_is_identity():
    joint = prepare_interaction(coherent_fock(0.3, N_MAX))
    evolved = dispersive_evolve(joint, DispersivePhase(0.0))
    assert np.allclose(evolved.branch_g1, joint.branch_g1, atol=1e-15)
    assert np.allclose(evolved.branch_g2, joint.branch_g2, atol=1e-15)


def test_evolve_preserves_norm():
    rng = np.random.default_rng(20260818)
    for _ in range(50):
        alpha_sq = float(rng.uniform(1e-5, 1.5))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        joint = prepare_interaction(coherent_fock(alpha_sq, N_MAX))
        evolved = dispersive_evolve(joint, DispersivePhase(theta))
        total = float(np.sum(np.abs(evolved.branch_g1) ** 2)
                      + np.sum(np.abs(evolved.branch_g2) ** 2))
        assert abs(total - 1.0) <= 1e-12, f"alpha_sq={alpha_sq}, theta={theta}"


# --- atomic readout / distillation --------------------------------------

@pytest.mark.parametrize("alpha_sq", ALPHA_GRID)
def test_pipeline_probabilities_match_closed_form(alpha_sq):
    res = _pipeline(alpha_sq)
    p_plus, p_minus = distill_probability(alpha_sq)
    assert abs(res.p_plus - p_plus) <= 1e-12
    assert abs(res.p_minus - p_minus) <= 1e-12
    assert abs(res.p_plus + res.p_minus - 1.0) <= 1e-12


@pytest.mark.parametrize("alpha_sq", ALPHA_GRID)
def test_pipeline_matches_reference_series(alpha_sq):
    res = _pipeline(alpha_sq)
    ref_plus, ref_minus, ref_fid = _ref_distill(alpha_sq)
    assert abs(res.p_plus - ref_plus) < 1e-13
    assert abs(res.p_minus - ref_minus) < 1e-13
    assert abs(res.fidelity_minus - ref_fid) < 1e-12


@pytest.mark.parametrize("alpha_sq", (1e-4, 1e-3, 1e-2))
def test_pipeline_fidelity_matches_closed_form_small_alpha(alpha_sq):
    res = _pipeline(alpha_sq)
    assert abs(res.fidelity_minus - distill_fidelity(alpha_sq)) <= 1e-10


def test_closed_form_fidelity_is_approximation_at_larger_alpha():
    # The quartic closed form drops terms of order alpha_sq^4/120; by
    # alpha_sq = 0.1 that approximation error (~8e-7) dominates any
    # numerical tolerance, so the exact series is the reference there.
    res = _pipeline(0.1)
    assert abs(res.fidelity_minus - FIDELITY_AT_01) < 1e-12
    gap = abs(res.fidelity_minus - distill_fidelity(0.1))
    assert 1e-7 < gap < 1e-6


def test_frozen_minus_probability():
    res = _pipeline(0.01)
    assert abs(res.p_minus - P_MINUS_AT_001) < 1e-15
    assert abs(res.p_minus - 9.9005e-3) < 2e-6  # quoted to 5 significant figures


def test_vacuum_never_distills():
    res = _pipeline(0.0, n_max=6)
    assert res.p_plus == pytest.approx(1.0, abs=1e-15)
    assert res.p_minus == pytest.approx(0.0, abs=1e-15)
    assert res.state_minus is None
    assert res.fidelity_minus == 0.0
    assert res.state_plus is not None
    assert abs(res.state_plus.amplitudes[0] - 1.0) < 1e-12


def test_infidelity_at_operating_point():
    res = _pipeline(2e-3)
    infidelity = 1.0 - res.fidelity_minus
    assert abs(infidelity - INFIDELITY_AT_2EM3) < 1e-15
    assert abs(infidelity - 6.7e-7) <= 0.02 * 6.7e-7


def test_parity_structure_of_projections():
    rng = np.random.default_rng(7)
    for _ in range(20):
        alpha_sq = float(rng.uniform(1e-4, 0.5))
        res = _pipeline(alpha_sq)
        even = np.arange(N_MAX + 1) % 2 == 0
        assert np.all(np.abs(res.state_minus.amplitudes[even]) < 1e-14)
        assert np.all(np.abs(res.state_plus.amplitudes[~even]) < 1e-14)


def test_projected_states_are_normalized():
    for alpha_sq in ALPHA_GRID:
        res = _pipeline(alpha_sq)
        for state in (res.state_plus, res.state_minus):
            norm_sq = float(np.sum(np.abs(state.amplitudes) ** 2))
            assert abs(norm_sq - 1.0) <= 1e-12


def test_no_evolution_means_no_minus_outcomes():
    joint = prepare_interaction(coherent_fock(0.5, N_MAX))
    res = measure_atom_pm(joint)  # branches identical: minus amplitude cancels
    assert res.p_minus == pytest.approx(0.0, abs=1e-15)
    assert res.state_minus is None
    assert res.fidelity_minus == 0.0


# --- closed forms --------------------------------------------------------

def test_probability_pair_closed_form():
    assert distill_probability(0.0) == (1.0, 0.0)
    for alpha_sq in ALPHA_GRID:
        p_plus, p_minus = distill_probability(alpha_sq)
        assert p_plus + p_minus == 1.0  # exact by construction
        assert abs(p_plus - math.exp(-alpha_sq) * math.cosh(alpha_sq)) < 1e-15
        assert abs(p_minus - math.exp(-alpha_sq) * math.sinh(alpha_sq)) < 1e-15


def test_minus_probability_linear_in_weak_limit():
    for alpha_sq in (1e-4, 1e-3, 3e-3):
        _, p_minus = distill_probability(alpha_sq)
        assert abs(p_minus - alpha_sq) <= 1.5 * alpha_sq ** 2


def test_fidelity_closed_form_values():
    assert distill_fidelity(0.0) == 1.0
    assert abs(distill_fidelity(0.1) - 6.0 / 6.01) < 1e-15
    assert abs(1.0 - distill_fidelity(2e-3) - 6.67e-7) < 1e-9


def test_fidelity_small_alpha_expansion():
    for alpha_sq in (1e-4, 1e-3, 1e-2):
        infidelity = 1.0 - distill_fidelity(alpha_sq)
        expansion = alpha_sq ** 2 / 6.0
        assert abs(infidelity - expansion) <= 1e-3 * expansion


def test_negative_alpha_rejected_by_closed_forms():
    with pytest.raises(FockSpaceError):
        distill_probability(-1e-3)
    with pytest.raises(FockSpaceError):
        distill_fidelity(-1e-3)


# --- non-demolition X readout -------------------------------------------

def test_qnd_plus_eigenstate_passes_through():
    root_half = 1.0 / math.sqrt(2.0)
    plus = PhotonQubit(root_half, root_half)
    rng = np.random.default_rng(3)
    for _ in range(20):
        outcome, projected, probability = x_basis_qnd(plus, rng)
        assert outcome == +1
        assert probability == pytest.approx(1.0, abs=1e-12)
        assert abs(projected.a0 - root_half) < 1e-12
        assert abs(projected.a1 - root_half) < 1e-12


def test_qnd_minus_eigenstate_passes_through():
    root_half = 1.0 / math.sqrt(2.0)
    minus = PhotonQubit(root_half, -root_half)
    rng = np.random.default_rng(4)
    for _ in range(20):
        outcome, projected, probability = x_basis_qnd(minus, rng)
        assert outcome == -1
        assert probability == pytest.approx(1.0, abs=1e-12)
        assert abs(projected.a1 + root_half) < 1e-12


def test_qnd_vacuum_mode_splits_evenly():
    zero = PhotonQubit(1.0, 0.0)
    rng = np.random.default_rng(20260818)
    draws = 4000
    outcomes = []
    for _ in range(draws):
        outcome, projected, probability = x_basis_qnd(zero, rng)
        assert probability == pytest.approx(0.5, abs=1e-12)
        assert abs(abs(projected.a1) - 1.0 / math.sqrt(2.0)) < 1e-12
        outcomes.append(outcome)
    frequency = outcomes.count(+1) / draws
    assert abs(frequency - 0.5) < 0.03, f"plus frequency {frequency}"
