"""Double-readout loss detection and the recycle/replace decision rule.

Each circulating photon is measured non-destructively twice per pass, with
a deliberate single-photon phase rotation between the readouts that swaps
the |+> and |-> eigenstates.  A surviving photon therefore reports two
*different* readings, while vacuum (which ignores the rotation) reports
(+,+).  Agreement between the readings signals that the slot should be
refilled; disagreement means the photon is believed present and is routed
back around the loop.

The truth table over every incident state and fault combination is small
and closed, so this module is purely deterministic: stochastic sampling of
faults lives in the network simulator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

PLUS = +1
MINUS = -1


class IncidentState(enum.Enum):
    """Field state arriving at the first readout module."""

    PLUS_PHOTON = "plus"
    MINUS_PHOTON = "minus"
    VACUUM = "vacuum"


class Decision(enum.Enum):
    """What the switch does with the slot after the double readout."""

    RECYCLE = "recycle"
    REPLACE = "replace"


@dataclass(frozen=True)
class ErrorFlags:
    """Independent fault injections for one double-readout pass.

    m1_error / m2_error flip the corresponding reported outcome;
    loss_after_m1 removes the photon between the two readouts, so the
    second module sees vacuum.  Loss *before* the first readout is
    expressed by passing IncidentState.VACUUM instead, since the first
    module cannot distinguish how a slot came to be empty.
    """

    m1_error: bool = False
    m2_error: bool = False
    loss_after_m1: bool = False

    @property
    def count(self) -> int:
        return int(self.m1_error) + int(self.m2_error) + int(self.loss_after_m1)


@dataclass(frozen=True)
class OutcomePair:
    """Reported readings (m1, m2), each +1 or -1."""

    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 not in (PLUS, MINUS) or self.m2 not in (PLUS, MINUS):
            raise ValueError(f"outcomes must be ±1, got ({self.m1}, {self.m2})")

    def __str__(self) -> str:
        def sign(v: int) -> str:
            return "+" if v == PLUS else "-"

        return f"({sign(self.m1)},{sign(self.m2)})"


def _readout(state: IncidentState) -> int:
    """True X-basis reading of one module: vacuum and |+> read +, |-> reads -."""
    return MINUS if state is IncidentState.MINUS_PHOTON else PLUS


def _rotate(state: IncidentState) -> IncidentState:
    """Inter-readout phase rotation: swaps |+> and |->, fixes vacuum."""
    if state is IncidentState.PLUS_PHOTON:
        return IncidentState.MINUS_PHOTON
    if state is IncidentState.MINUS_PHOTON:
        return IncidentState.PLUS_PHOTON
    return IncidentState.VACUUM


def simulate_double_measurement(incident: IncidentState,
                                flags: ErrorFlags = ErrorFlags()) -> OutcomePair:
    """Reported readings for one pass through both readout modules.

    The true first reading is taken on the incident state; the state then
    passes the phase rotation (and is lost if loss_after_m1); the true
    second reading is taken on what remains.  Reported outcomes are the
    true ones with m1_error/m2_error applied as sign flips.
    """
    m1 = _readout(incident)
    between = _rotate(incident)
    if flags.loss_after_m1:
        between = IncidentState.VACUUM
    m2 = _readout(between)
    if flags.m1_error:
        m1 = -m1
    if flags.m2_error:
        m2 = -m2
    return OutcomePair(m1=m1, m2=m2)


def classify(outcomes: OutcomePair) -> Decision:
    """Recycle on differing readings, replace on matching ones.

    A photon that survives both readouts always reports opposite signs
    (the rotation swaps its eigenstate between them), so agreement is
    evidence of vacuum or a double fault and the slot is refilled.
    """
    if outcomes.m1 != outcomes.m2:
        return Decision.RECYCLE
    return Decision.REPLACE


# Canonical presentation order of the four outcome groups.
GROUP_ORDER = (
    OutcomePair(PLUS, PLUS),
    OutcomePair(PLUS, MINUS),
    OutcomePair(MINUS, PLUS),
    OutcomePair(MINUS, MINUS),
)

_INCIDENT_ORDER = (IncidentState.PLUS_PHOTON, IncidentState.MINUS_PHOTON,
                   IncidentState.VACUUM)


def enumerate_table() -> list[tuple[IncidentState, ErrorFlags, OutcomePair]]:
    """Every distinct physical scenario for one double-readout pass.

    Exhausts incident states against all fault combinations, skipping
    loss_after_m1 on vacuum (there is no photon to lose, so those
    combinations duplicate their loss-free counterparts).  Rows come out
    grouped by outcome pair in GROUP_ORDER, the fault-free scenario first
    within its group; exactly five scenarios fall in each group.
    """
    rows: list[tuple[IncidentState, ErrorFlags, OutcomePair]] = []
    for incident in _INCIDENT_ORDER:
        for loss_after_m1 in (False, True):
            if loss_after_m1 and incident is IncidentState.VACUUM:
                continue
            for m1_error in (False, True):
                for m2_error in (False, True):
                    flags = ErrorFlags(m1_error=m1_error, m2_error=m2_error,
                                       loss_after_m1=loss_after_m1)
                    rows.append((incident, flags,
                                 simulate_double_measurement(incident, flags)))

    def sort_key(row: tuple[IncidentState, ErrorFlags, OutcomePair]):
        incident, flags, pair = row
        return (
            GROUP_ORDER.index(pair),
            flags.count != 0,  # fault-free scenario leads its group
            _INCIDENT_ORDER.index(incident),
            flags.loss_after_m1,
            flags.m1_error,
            flags.m2_error,
        )

    rows.sort(key=sort_key)
    return rows
