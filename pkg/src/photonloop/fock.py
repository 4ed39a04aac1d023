"""Exact small-Fock-space model of the heralded photon distillation module.

A weak coherent pulse interacts dispersively with a single atom prepared in
an equal superposition of two ground states.  The interaction imprints a
photon-number-dependent phase on one atomic branch; measuring the atom in
its +/- basis then projects the field onto even or odd photon number.  The
odd outcome heralds a distilled single photon (with a small multi-photon
admixture), the even outcome mostly heralds vacuum.

Everything here is a pure function over immutable value types.  Amplitudes
are stored in a truncated number basis; truncation error is tracked
explicitly and bounded at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Normalization slack tolerated on construction of state types.
NORM_ATOL = 1e-9

# Maximum truncated tail weight accepted for a coherent pulse expansion.
DEFAULT_TAIL_TOL = 1e-15

SQRT_HALF = 1.0 / math.sqrt(2.0)


class FockSpaceError(ValueError):
    """Raised when a state fails validation (norm, truncation, shape)."""


class TruncationError(FockSpaceError):
    """Raised when a requested cutoff cannot hold the state to tolerance."""


def _as_complex_vector(amplitudes) -> np.ndarray:
    arr = np.asarray(amplitudes, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise FockSpaceError("amplitudes must be a non-empty 1-D sequence")
    return arr


@dataclass(frozen=True)
class FockVector:
    """Pure field state in the truncated number basis |0..n_max>.

    amplitudes[n] is the amplitude on |n>.  tail_bound is an upper bound on
    the probability weight discarded by the truncation.
    """

    amplitudes: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        arr = _as_complex_vector(self.amplitudes)
        object.__setattr__(self, "amplitudes", arr)
        arr.setflags(write=False)
        if not (0.0 <= self.tail_bound < 1.0):
            raise FockSpaceError(f"tail_bound out of range: {self.tail_bound}")
        norm_sq = float(np.sum(np.abs(arr) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise FockSpaceError(f"state norm² = {norm_sq} is not 1")

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    def probability(self, n: int) -> float:
        """Probability of finding exactly n photons."""
        return float(abs(self.amplitudes[n]) ** 2)


@dataclass(frozen=True)
class AtomFieldState:
    """Joint atom-field state  branch_g1 ⊗ |g1> + branch_g2 ⊗ |g2>.

    The two arrays hold the (unnormalized) field amplitudes riding on each
    atomic ground state; their combined weight must be 1.
    """

    branch_g1: np.ndarray
    branch_g2: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        g1 = _as_complex_vector(self.branch_g1)
        g2 = _as_complex_vector(self.branch_g2)
        if g1.size != g2.size:
            raise FockSpaceError("branch lengths differ")
        object.__setattr__(self, "branch_g1", g1)
        object.__setattr__(self, "branch_g2", g2)
        g1.setflags(write=False)
        g2.setflags(write=False)
        total = float(np.sum(np.abs(g1) ** 2) + np.sum(np.abs(g2) ** 2))
        if abs(total - 1.0) > NORM_ATOL:
            raise FockSpaceError(f"joint norm² = {total} is not 1")

    @property
    def n_max(self) -> int:
        return self.branch_g1.size - 1


@dataclass(frozen=True)
class DispersivePhase:
    """Phase angle theta accumulated per photon on the g1 branch.

    The interaction multiplies the g1 branch by exp(2i·theta·n).  The
    operating point theta = pi/2 makes odd photon numbers acquire a pi
    phase, turning the atomic +/- measurement into a photon-number-parity
    readout.
    """

    theta: float = math.pi / 2.0

    @classmethod
    def tuned(cls) -> "DispersivePhase":
        """Interaction time tuned so one photon flips the atomic phase."""
        return cls(math.pi / 2.0)


@dataclass(frozen=True)
class PhotonQubit:
    """Single-rail photonic qubit  a0|0> + a1|1>."""

    a0: complex
    a1: complex

    def __post_init__(self):
        norm_sq = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise FockSpaceError(f"qubit norm² = {norm_sq} is not 1")


@dataclass(frozen=True)
class DistillationResult:
    """Outcome statistics of one distillation attempt.

    p_plus / p_minus are the atomic readout probabilities; state_plus /
    state_minus the corresponding normalized post-measurement field states
    (None when the branch has zero probability).  fidelity_minus is the
    single-photon weight |<1|state_minus>|² of the heralded branch, 0.0
    when that branch never occurs.
    """

    p_plus: float
    p_minus: float
    state_plus: Optional[FockVector]
    state_minus: Optional[FockVector]
    fidelity_minus: float


def coherent_fock(alpha_sq: float, n_max: int = 40,
                  tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """Weak coherent pulse |alpha> expanded in the truncated number basis.

    amplitudes[n] ∝ exp(-|alpha|²/2) alpha^n / sqrt(n!), with alpha real
    and alpha² = alpha_sq, renormalized to unit length after truncation;
    the discarded probability weight is recorded as tail_bound.  Raises
    TruncationError if that weight exceeds tail_tol.

    Args:
        alpha_sq: mean photon number |alpha|² of the pulse (>= 0).
        n_max: largest photon number kept.
        tail_tol: maximum tolerable truncated probability weight.
    """
    if alpha_sq < 0.0:
        raise FockSpaceError(f"alpha_sq must be non-negative, got {alpha_sq}")
    if n_max < 0:
        raise FockSpaceError(f"n_max must be non-negative, got {n_max}")
    alpha = math.sqrt(alpha_sq)
    amps = np.empty(n_max + 1, dtype=np.complex128)
    value = math.exp(-alpha_sq / 2.0)
    amps[0] = value
    for n in range(1, n_max + 1):
        value *= alpha / math.sqrt(n)
        amps[n] = value
    kept = math.fsum(float(abs(a) ** 2) for a in amps)
    tail = max(0.0, 1.0 - kept)
    if tail > tail_tol:
        raise TruncationError(
            f"n_max={n_max} keeps tail weight {tail:.3e} > {tail_tol:.3e} "
            f"for alpha_sq={alpha_sq}"
        )
    return FockVector(amplitudes=amps / math.sqrt(kept), tail_bound=tail)


def prepare_interaction(pulse: FockVector) -> AtomFieldState:
    """Joint state with the atom initialized in (|g1> + |g2>)/sqrt(2).

    The module always starts its atom in the balanced ground-state
    superposition; this constructor is the only supported initialization.
    """
    branch = pulse.amplitudes * SQRT_HALF
    return AtomFieldState(branch_g1=branch.copy(), branch_g2=branch.copy(),
                          tail_bound=pulse.tail_bound)


def dispersive_evolve(state: AtomFieldState,
                      phase: DispersivePhase = DispersivePhase()) -> AtomFieldState:
    """Apply the photon-number-dependent phase to the g1 branch.

    Each number state |n> riding on |g1> picks up exp(2i·theta·n); the g2
    branch is untouched.  Norm is preserved exactly.
    """
    n = np.arange(state.branch_g1.size)
    factors = np.exp(2j * phase.theta * n)
    return AtomFieldState(
        branch_g1=state.branch_g1 * factors,
        branch_g2=state.branch_g2.copy(),
        tail_bound=state.tail_bound,
    )


def measure_atom_pm(state: AtomFieldState) -> DistillationResult:
    """Project the atom onto |±> = (|g2> ± |g1>)/sqrt(2) and renormalize.

    Returns both branch probabilities, the normalized post-measurement
    field states, and the single-photon fidelity of the minus branch.
    """
    plus_amp = (state.branch_g2 + state.branch_g1) * SQRT_HALF
    minus_amp = (state.branch_g2 - state.branch_g1) * SQRT_HALF
    p_plus = float(np.sum(np.abs(plus_amp) ** 2))
    p_minus = float(np.sum(np.abs(minus_amp) ** 2))

    def _normalized(amp: np.ndarray, p: float) -> Optional[FockVector]:
        if p <= 0.0:
            return None
        vec = amp / math.sqrt(p)
        # Renormalizing to exactly unit length absorbs the truncation tail.
        vec = vec / math.sqrt(float(np.sum(np.abs(vec) ** 2)))
        return FockVector(amplitudes=vec, tail_bound=0.0)

    state_plus = _normalized(plus_amp, p_plus)
    state_minus = _normalized(minus_amp, p_minus)
    if state_minus is not None and state_minus.n_max >= 1:
        fidelity_minus = state_minus.probability(1)
    else:
        fidelity_minus = 0.0
    return DistillationResult(
        p_plus=p_plus,
        p_minus=p_minus,
        state_plus=state_plus,
        state_minus=state_minus,
        fidelity_minus=fidelity_minus,
    )


def distill_probability(alpha_sq: float) -> tuple[float, float]:
    """Closed-form atomic readout probabilities for a coherent pulse.

    p_plus = exp(-|alpha|²) cosh(|alpha|²)  (even photon number),
    p_minus = exp(-|alpha|²) sinh(|alpha|²) (odd photon number, heralds the
    distilled photon).  Computed as 0.5 ± 0.5·exp(-2|alpha|²) so the pair
    sums to 1.0 exactly in floating point.
    """
    if alpha_sq < 0.0:
        raise FockSpaceError(f"alpha_sq must be non-negative, got {alpha_sq}")
    half_gap = 0.5 * math.exp(-2.0 * alpha_sq)
    return 0.5 + half_gap, 0.5 - half_gap


def distill_fidelity(alpha_sq: float) -> float:
    """Closed-form single-photon fidelity of the heralded branch.

    F = 6 / (6 + alpha_sq²); the deficit comes from the three-photon
    admixture surviving the parity herald.
    """
    if alpha_sq < 0.0:
        raise FockSpaceError(f"alpha_sq must be non-negative, got {alpha_sq}")
    return 6.0 / (6.0 + alpha_sq * alpha_sq)


def x_basis_qnd(photon: PhotonQubit, rng: Optional[np.random.Generator] = None
                ) -> tuple[int, PhotonQubit, float]:
    """Non-demolition X-basis readout of a photonic qubit.

    Returns (outcome, projected_state, probability) where outcome is +1 or
    -1, projected_state the corresponding |±> eigenstate, and probability
    the Born weight of that outcome.  Eigenstates pass through untouched
    (probability 1).  The outcome is sampled with the supplied generator
    (a fresh default generator when omitted).
    """
    amp_plus = (photon.a0 + photon.a1) * SQRT_HALF
    amp_minus = (photon.a0 - photon.a1) * SQRT_HALF
    p_plus = abs(amp_plus) ** 2
    p_minus = abs(amp_minus) ** 2
    if rng is None:
        rng = np.random.default_rng()
    if rng.random() < p_plus:
        outcome, probability = +1, p_plus
        projected = PhotonQubit(SQRT_HALF, SQRT_HALF)
    else:
        outcome, probability = -1, p_minus
        projected = PhotonQubit(SQRT_HALF, -SQRT_HALF)
    return outcome, projected, float(probability)
