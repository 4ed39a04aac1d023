"""Cycle-accurate simulator of the photon-recycling network cross-section.

The system is N parallel optical lines. Each line owns a 12-position
recirculation ring (4 preparation stages, a 4-step delay, 2 detection
stages, 2 return stages), a slot on the shunting chain that climbs one
line per step (the top line wraps to the bottom), and a probabilistic
heralded source that attempts every 3 steps and delivers a confirmed
photon one or two steps after success — one confirmation step plus,
when needed, one buffering step that lands the photon on its line's
injection parity (off-parity photons could never meet an injection
event anywhere on the chain).

Time advances in synchronous global steps.  Within step t:

1. photons whose sampled lifetime ends this step are lost (unheralded:
   the slot that carried them stays *believed* occupied);
2. ring contents advance one position; a slot wrapping past the last
   position reaches the line's injection boundary, which only happens on
   the line's injection phase (every 2 or 4 steps, lines alternating,
   neighbor phases offset by one step);
3. each wrapping slot is classified through the double-readout logic
   (fold of where in the cycle the photon was lost, if it was) and the
   eight-way injection switch fires: recycle, refill from the shunt,
   refill from the source, or leave the slot known-empty;
4. source photons due this step that found no injection event join the
   shunt at their line (colliding entries are terminated); every shunt
   occupant then hops up one line;
5. sources due this step attempt; a success becomes a pending photon
   that arrives at the switch one step later, or two when the extra
   step is needed to match the line's injection parity.

All randomness is pre-drawn per trial into a TrialInputs bundle (source
success times via geometric inter-success gaps, one geometric lifetime
and one readout coin per photon) in a fixed, documented order, so a trial
is a pure function of (params, trial index) and independent of engine
internals.  Measurement-error flips (p_m > 0) are the one lazily sampled
quantity, drawn from a dedicated substream at each believed readout
crossing in line-ascending order.

This module is the readable reference engine; photonloop._kernel holds a
compiled twin for the p_m = 0 fast path, verified step-for-step identical
by the test suite.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from photonloop.detection import (
    Decision,
    ErrorFlags,
    IncidentState,
    classify,
    simulate_double_measurement,
)

RING_POSITIONS = 12          # loss opportunities per recirculation cycle
M1_HOP = 9                   # fatal-hop index that falls between the readouts
SOURCE_PERIOD = 3            # steps between source attempts
CONFIRM_DELAY = 1            # confirmation steps before a success can enter
DEFAULT_T_MAX_PER_LINE = 300


class SimConfigError(ValueError):
    """Raised when simulation parameters are inconsistent or out of range."""


def line_period(line: int) -> int:
    """Recirculation spacing of a line: even lines 2 steps, odd lines 4."""
    return 2 if line % 2 == 0 else 4


def source_phase(line: int, stagger: bool) -> int:
    """Step (mod 3) of a line's first source attempt.

    Staggered phases must keep ``line - source_phase(line)`` non-constant
    mod 3: a confirmed photon from line i enters the shunt at t = attempt+1,
    and the shunt conserves (line - t) mod N, so entries land in residue
    class (i - source_phase(i) - 1) mod 3 of that coordinate.  The naive
    stagger ``i mod 3`` makes this class the same for every line; whenever
    N is a multiple of 3 all supply is then confined to one-third of the
    shunt slots and two-thirds of every ring can never fill.  ``2*i mod 3``
    spreads attempt phases evenly over {0,1,2} while cycling the entry
    class through all three residues.
    """
    return (2 * line) % SOURCE_PERIOD if stagger else 0


def entry_step(line: int, attempt: int) -> int:
    """Step at which a success from ``attempt`` reaches the line's switch.

    One step of confirmation delay, plus one more step when needed to land
    on the line's injection parity.  Injection events of line j occur at
    t ≡ j (mod period) and both the ring cycle and the shunt hop conserve
    (t - line) mod 2, so a photon arriving off-parity could never coincide
    with an injection event at any line and would circulate uselessly until
    lost.  The alignment buffer keeps every confirmed photon on the grid at
    the cost of at most one extra step of loss exposure.
    """
    entry = attempt + CONFIRM_DELAY
    if (entry - line) % 2 != 0:
        entry += 1
    return entry


def is_injection_event(line: int, t: int) -> bool:
    """True when the line's injection boundary is active at step t.

    Line j fires at t ≡ j (mod period): neighbors are offset by one step.
    """
    return (t - line) % line_period(line) == 0


def ring_capacity(n_lines: int) -> int:
    """Computational slots at full occupancy: 12/2 + 12/4 per line pair."""
    return 9 * n_lines // 2


def per_cycle_loss(p_L: float) -> float:
    """Probability a photon is lost somewhere in one 12-step recirculation."""
    if not 0.0 <= p_L <= 1.0:
        raise SimConfigError(f"p_L must lie in [0,1], got {p_L}")
    return 1.0 - (1.0 - p_L) ** RING_POSITIONS


@dataclass(frozen=True)
class SimParams:
    """Static configuration of one simulation.

    p_s (success probability per source attempt) and p_L (loss probability
    per component-step) default to the operating relations p_s = 1/(3N)
    and p_L = p_s / B; passing them explicitly overrides the relation for
    experiments and tests.
    """

    n_lines: int
    bias: float
    p_m: float = 0.0
    t_max: Optional[int] = None
    seed: int = 0
    source_stagger: bool = True
    p_s: Optional[float] = None
    p_L: Optional[float] = None

    def __post_init__(self):
        if self.n_lines < 2 or self.n_lines % 2 != 0:
            raise SimConfigError(
                f"n_lines must be an even integer >= 2, got {self.n_lines}")
        if not self.bias > 0.0:
            raise SimConfigError(f"bias must be positive, got {self.bias}")
        if self.p_s is None:
            object.__setattr__(self, "p_s", 1.0 / (3.0 * self.n_lines))
        if self.p_L is None:
            object.__setattr__(self, "p_L", self.p_s / self.bias)
        if self.t_max is None:
            object.__setattr__(self, "t_max",
                               DEFAULT_T_MAX_PER_LINE * self.n_lines)
        for name in ("p_s", "p_L", "p_m"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SimConfigError(f"{name} must lie in [0,1], got {value}")
        if self.t_max < 1:
            raise SimConfigError(f"t_max must be >= 1, got {self.t_max}")
        if not 0 <= self.seed < 2 ** 64:
            raise SimConfigError(
                f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def capacity(self) -> int:
        return ring_capacity(self.n_lines)


# --- pre-drawn stochastic inputs -----------------------------------------

# Lifetimes are not drawn at p_L = 0; this sentinel means "never lost".
def _immortal_death(t_max: int) -> int:
    return t_max + 2 * RING_POSITIONS + 2


@dataclass(frozen=True)
class TrialInputs:
    """Every stochastic input of one trial, pre-drawn in a fixed order.

    Arrays are parallel over source successes, sorted by (step, line):
    success_step        step of the successful attempt (photon created),
    success_line        the source's line,
    death_step          absolute step on which the photon is lost (the
                        fatal hop is death_step - success_step, counting
                        the confirmation hop as 1),
    first_reading       ±1 eigenstate reported by the first readout if the
                        photon dies between the two readout modules.
    """

    success_step: np.ndarray
    success_line: np.ndarray
    death_step: np.ndarray
    first_reading: np.ndarray


def draw_trial_inputs(params: SimParams, rng: np.random.Generator) -> TrialInputs:
    """Draw all per-trial randomness in the documented order.

    For each line in ascending order: (1) geometric inter-success gaps
    over attempt indices, drawn in deterministic growing chunks until the
    attempt horizon is crossed; (2) one geometric lifetime per success;
    (3) one ±1 readout coin per success.  Results are then merged across
    lines and sorted by (step, line).
    """
    t_max = params.t_max
    steps_all: list[np.ndarray] = []
    lines_all: list[np.ndarray] = []
    deaths_all: list[np.ndarray] = []
    coins_all: list[np.ndarray] = []
    for line in range(params.n_lines):
        first = source_phase(line, params.source_stagger)
        n_attempts = 0 if first >= t_max else (t_max - 1 - first) // SOURCE_PERIOD + 1
        if n_attempts == 0 or params.p_s == 0.0:
            continue
        # Success attempt numbers via cumulative geometric gaps (1-based).
        mean = n_attempts * params.p_s
        chunk = max(8, int(mean + 6.0 * math.sqrt(mean) + 8.0))
        gaps = rng.geometric(params.p_s, size=chunk)
        while int(gaps.sum()) <= n_attempts:
            gaps = np.concatenate([gaps, rng.geometric(params.p_s, size=chunk)])
        attempt_index = np.cumsum(gaps) - 1          # 0-based attempt index
        attempt_index = attempt_index[attempt_index < n_attempts]
        steps = first + SOURCE_PERIOD * attempt_index
        k = steps.size
        if params.p_L > 0.0:
            lifetime = rng.geometric(params.p_L, size=k)
            deaths = steps + lifetime
        else:
            deaths = np.full(k, _immortal_death(t_max), dtype=np.int64)
        coins = rng.integers(0, 2, size=k).astype(np.int8) * 2 - 1
        steps_all.append(steps.astype(np.int64))
        lines_all.append(np.full(k, line, dtype=np.int64))
        deaths_all.append(deaths.astype(np.int64))
        coins_all.append(coins)
    if steps_all:
        step_arr = np.concatenate(steps_all)
        line_arr = np.concatenate(lines_all)
        death_arr = np.concatenate(deaths_all)
        coin_arr = np.concatenate(coins_all)
        order = np.lexsort((line_arr, step_arr))
        return TrialInputs(step_arr[order], line_arr[order],
                           death_arr[order], coin_arr[order])
    empty = np.empty(0, dtype=np.int64)
    return TrialInputs(empty, empty.copy(), empty.copy(),
                       np.empty(0, dtype=np.int8))


def trial_rng(params: SimParams, trial: int) -> np.random.Generator:
    """Input-drawing stream of one trial: child (seed, trial)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([params.seed, trial])))


def flips_rng(params: SimParams, trial: int) -> np.random.Generator:
    """Measurement-error stream of one trial: child (seed, trial, 1)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([params.seed, trial, 1])))


# --- injection switch -----------------------------------------------------

class RecycledState(enum.Enum):
    """Classification of the slot wrapping at the injection boundary.

    BELIEVED: readings disagreed — a photon (possibly a ghost) is routed
    back.  HERALDED_LOSS: readings agreed — the slot is known lost.  A
    known-empty slot passes None instead of a RecycledState.
    """

    BELIEVED = "believed"
    HERALDED_LOSS = "heralded_loss"


class Injection(enum.Enum):
    RECYCLED = "recycled"
    SHUNT = "shunt"
    SOURCE = "source"
    NOTHING = "nothing"


@dataclass(frozen=True)
class ScenarioAction:
    """Resolved behavior of the switch for one injection event."""

    scenario: str            # 'a'..'h'
    inject: Injection
    source_to_shunt: bool = False
    terminate_source: bool = False


def switch_decision(recycled: Optional[RecycledState], shunt_occupied: bool,
                    source_ready: bool) -> ScenarioAction:
    """The eight-way injection switch.

    A believed photon always takes the slot.  Otherwise the shunt has
    priority over the source, and the source falls back to the shunt when
    the slot was taken — unless both the slot and the shunt are taken, in
    which case the source photon is terminated.  A known-empty slot
    (recycled None) behaves exactly like a heralded loss.
    """
    if recycled is RecycledState.BELIEVED:
        if source_ready:
            if shunt_occupied:
                return ScenarioAction("e", Injection.RECYCLED,
                                      terminate_source=True)
            return ScenarioAction("g", Injection.RECYCLED,
                                  source_to_shunt=True)
        if shunt_occupied:
            return ScenarioAction("b", Injection.RECYCLED)
        return ScenarioAction("a", Injection.RECYCLED)
    # Heralded loss or known-empty: the slot is free for new photons.
    if shunt_occupied:
        if source_ready:
            return ScenarioAction("d", Injection.SHUNT, source_to_shunt=True)
        return ScenarioAction("c", Injection.SHUNT)
    if source_ready:
        return ScenarioAction("f", Injection.SOURCE)
    return ScenarioAction("h", Injection.NOTHING)


# --- mutable simulation state ---------------------------------------------

@dataclass
class PhotonToken:
    """One (believed) photon.  After its sampled lifetime ends the token
    keeps circulating as a ghost until a detection passage heralds it."""

    id: int
    birth_time: int
    death_step: int          # step on which the photon is lost
    first_reading: int       # ±1, consumed only if lost between readouts
    actually_present: bool = True
    recycle_count: int = 0
    injected_at: int = -1    # step of the most recent ring injection


@dataclass
class SourceState:
    """Per-line probabilistic source."""

    next_attempt: int
    pending: Optional[PhotonToken] = None
    pending_entry: int = -1  # step at which the pending photon reaches the switch


@dataclass
class LineState:
    """One optical line: its recirculation ring, shunt slot, and source."""

    index: int
    period: int
    phase: int
    ring: deque                    # 12 entries of Optional[PhotonToken]
    shunt_slot: Optional[PhotonToken]
    source: SourceState


@dataclass
class Metrics:
    """Population snapshot plus the event counts of the step that produced it."""

    computational_count: int = 0
    shunt_count: int = 0
    total_count: int = 0
    losses: int = 0
    heralded_losses: int = 0
    injections: int = 0
    terminations: int = 0


@dataclass
class Counters:
    """Cumulative event totals, maintained incrementally by step()."""

    created: int = 0
    losses: int = 0
    heralded_losses: int = 0
    injections: int = 0
    terminations: int = 0
    terminated_alive: int = 0
    cycles_alive: int = 0
    cycles_lost: int = 0


@dataclass
class NetworkState:
    """Complete mutable state of one trial."""

    params: SimParams
    lines: list
    clock: int
    inputs: TrialInputs
    input_ptr: int
    flips: np.random.Generator
    counters: Counters
    next_token_id: int
    event_log: Optional[list]


def new_network(params: SimParams, trial: int = 0,
                record_log: bool = False) -> NetworkState:
    """Empty boot state: all slots empty, clock 0, inputs pre-drawn.

    Lines alternate period 2,4,2,4,… with injection phases offset by one
    step between neighbors; trial selects the independent random substream.
    """
    lines = []
    for j in range(params.n_lines):
        first_attempt = source_phase(j, params.source_stagger)
        lines.append(LineState(
            index=j,
            period=line_period(j),
            phase=j,
            ring=deque([None] * RING_POSITIONS),
            shunt_slot=None,
            source=SourceState(next_attempt=first_attempt),
        ))
    inputs = draw_trial_inputs(params, trial_rng(params, trial))
    return NetworkState(
        params=params,
        lines=lines,
        clock=0,
        inputs=inputs,
        input_ptr=0,
        flips=flips_rng(params, trial),
        counters=Counters(),
        next_token_id=0,
        event_log=[] if record_log else None,
    )


def _log(state: NetworkState, t: int, line: int, event: str, token_id: int):
    if state.event_log is not None:
        state.event_log.append((t, line, event, token_id))


def _classify_wrapped(state: NetworkState, token: PhotonToken,
                      t: int) -> Decision:
    """Fold the token's loss history into one double-readout classification.

    The fatal hop index r = death_step - injected_at locates the loss
    within the cycle that just completed: r <= 8 means the photon was
    already gone at the first readout (the modules see vacuum), r == 9
    means it vanished between the readouts, r >= 10 means both modules
    read it (loss after detection is invisible), and r >= 13 means it is
    still alive.  Readout-error flips are sampled here when p_m > 0.
    """
    r = token.death_step - token.injected_at
    if r <= 8:
        incident = IncidentState.VACUUM
        loss_after_m1 = False
    else:
        incident = (IncidentState.PLUS_PHOTON if token.first_reading > 0
                    else IncidentState.MINUS_PHOTON)
        loss_after_m1 = (r == M1_HOP)
    if state.params.p_m > 0.0:
        flips = ErrorFlags(
            m1_error=bool(state.flips.random() < state.params.p_m),
            m2_error=bool(state.flips.random() < state.params.p_m),
            loss_after_m1=loss_after_m1,
        )
    else:
        flips = ErrorFlags(loss_after_m1=loss_after_m1)
    return classify(simulate_double_measurement(incident, flips))


def _enter_shunt(state: NetworkState, line: LineState, token: PhotonToken,
                 t: int, metrics: Metrics) -> None:
    """Free shunt entry at the token's own line; collisions terminate."""
    if line.shunt_slot is not None:
        metrics.terminations += 1
        state.counters.terminations += 1
        if token.actually_present:
            state.counters.terminated_alive += 1
        _log(state, t, line.index, "terminate", token.id)
    else:
        line.shunt_slot = token


def step(state: NetworkState) -> Metrics:
    """Advance the network one global step; returns this step's Metrics."""
    params = state.params
    t = state.clock
    if t >= params.t_max:
        raise RuntimeError(f"stepping past t_max={params.t_max}")
    metrics = Metrics()
    counters = state.counters
    n = params.n_lines

    # Phase 1: sampled lifetimes ending this step become unheralded losses.
    for line in state.lines:
        for token in line.ring:
            if token is not None and token.actually_present \
                    and token.death_step == t:
                token.actually_present = False
                metrics.losses += 1
                counters.losses += 1
                _log(state, t, line.index, "loss", token.id)
        occupant = line.shunt_slot
        if occupant is not None and occupant.actually_present \
                and occupant.death_step == t:
            occupant.actually_present = False
            metrics.losses += 1
            counters.losses += 1
            _log(state, t, line.index, "loss", occupant.id)
        pending = line.source.pending
        if pending is not None and pending.actually_present \
                and pending.death_step == t:
            pending.actually_present = False
            metrics.losses += 1
            counters.losses += 1
            _log(state, t, line.index, "loss", pending.id)

    # Phase 2: rings advance; the entry leaving the last position wraps to
    # the injection boundary.
    wrapped: list = []
    for line in state.lines:
        line.ring.rotate(1)
        wrapped.append(line.ring[0])
        line.ring[0] = None

    # Phase 3: injection boundaries (line-ascending), and free shunt
    # entries on lines without an event.
    for line in state.lines:
        j = line.index
        source = line.source
        source_ready = (source.pending is not None
                        and source.pending_entry == t)
        if not is_injection_event(j, t):
            if wrapped[j] is not None:
                raise RuntimeError(
                    f"phase coherence broken: line {j} wrapped a slot at "
                    f"step {t} outside its injection phase")
            if source_ready:
                token = source.pending
                source.pending = None
                _enter_shunt(state, line, token, t, metrics)
            continue

        token = wrapped[j]
        if token is None:
            recycled = None
        else:
            decision = _classify_wrapped(state, token, t)
            injected_alive = token.death_step > token.injected_at
            if injected_alive:
                if token.death_step - token.injected_at >= RING_POSITIONS + 1:
                    counters.cycles_alive += 1
                else:
                    counters.cycles_lost += 1
            if decision is Decision.REPLACE:
                recycled = RecycledState.HERALDED_LOSS
                metrics.heralded_losses += 1
                counters.heralded_losses += 1
                _log(state, t, j, "herald", token.id)
                if token.actually_present:
                    # Misreadings discarded a live photon at the switch.
                    token.actually_present = False
                    metrics.terminations += 1
                    counters.terminations += 1
                    counters.terminated_alive += 1
                    _log(state, t, j, "terminate", token.id)
                token = None
            else:
                recycled = RecycledState.BELIEVED

        action = switch_decision(recycled, line.shunt_slot is not None,
                                 source_ready)

        if action.inject is Injection.RECYCLED:
            token.recycle_count += 1
            token.injected_at = t
            line.ring[0] = token
        elif action.inject is Injection.SHUNT:
            entrant = line.shunt_slot
            line.shunt_slot = None
            entrant.injected_at = t
            line.ring[0] = entrant
            metrics.injections += 1
            counters.injections += 1
            _log(state, t, j, "inject", entrant.id)
        elif action.inject is Injection.SOURCE:
            entrant = source.pending
            source.pending = None
            entrant.injected_at = t
            line.ring[0] = entrant
            metrics.injections += 1
            counters.injections += 1
            _log(state, t, j, "inject", entrant.id)

        if action.source_to_shunt:
            line.shunt_slot = source.pending
            source.pending = None
        elif action.terminate_source:
            doomed = source.pending
            source.pending = None
            metrics.terminations += 1
            counters.terminations += 1
            if doomed.actually_present:
                counters.terminated_alive += 1
            _log(state, t, j, "terminate", doomed.id)

    # Phase 4: every shunt occupant hops up one line (periodic).
    moving = [line.shunt_slot for line in state.lines]
    for j in range(n):
        state.lines[(j + 1) % n].shunt_slot = moving[j]

    # Phase 5: sources due this step attempt; successes are pre-drawn.
    inputs = state.inputs
    for line in state.lines:
        source = line.source
        if source.next_attempt == t:
            source.next_attempt = t + SOURCE_PERIOD
    while (state.input_ptr < inputs.success_step.size
           and inputs.success_step[state.input_ptr] == t):
        i = state.input_ptr
        j = int(inputs.success_line[i])
        line = state.lines[j]
        token = PhotonToken(
            id=state.next_token_id,
            birth_time=t,
            death_step=int(inputs.death_step[i]),
            first_reading=int(inputs.first_reading[i]),
        )
        state.next_token_id += 1
        counters.created += 1
        line.source.pending = token
        line.source.pending_entry = entry_step(j, t)
        _log(state, t, j, "source_success", token.id)
        state.input_ptr += 1

    state.clock = t + 1
    populations = photon_count(state)
    metrics.computational_count = populations.computational_count
    metrics.shunt_count = populations.shunt_count
    metrics.total_count = populations.total_count
    return metrics


def photon_count(state: NetworkState) -> Metrics:
    """Recount actually-present photons from scratch (no event fields)."""
    computational = 0
    shunt = 0
    for line in state.lines:
        for token in line.ring:
            if token is not None and token.actually_present:
                computational += 1
        if line.shunt_slot is not None and line.shunt_slot.actually_present:
            shunt += 1
        pending = line.source.pending
        if pending is not None and pending.actually_present:
            shunt += 1
    return Metrics(computational_count=computational, shunt_count=shunt,
                   total_count=computational + shunt)


def is_saturated(state: NetworkState) -> bool:
    """Strictly more photons present than the ring capacity 9N/2."""
    return photon_count(state).total_count > ring_capacity(state.params.n_lines)
