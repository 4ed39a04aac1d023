"""photonloop: discrete-event simulator for a photon-recycling network.

The package has two halves:

* :mod:`photonloop.fock` and :mod:`photonloop.detection` — exact
  small-Fock-space model of the heralded distillation module and the
  double-readout decision logic that classifies each loop pass.
* :mod:`photonloop.network` and :mod:`photonloop.montecarlo` — the
  cycle-accurate network simulator (storage ring, shunt ring, probabilistic
  sources, loss) and the Monte-Carlo harness that aggregates trials into
  population curves, saturation statistics and boot-time fits.

:mod:`photonloop.cli` exposes it all as the ``photonloop`` command.
"""

from photonloop.detection import (
    Decision,
    ErrorFlags,
    IncidentState,
    OutcomePair,
    classify,
    enumerate_table,
    simulate_double_measurement,
)
from photonloop.fock import (
    AtomFieldState,
    DispersivePhase,
    DistillationResult,
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
from photonloop.montecarlo import (
    BootupFit,
    SweepResult,
    TrialResult,
    bootup_time,
    fit_bootup_scaling,
    run_trials,
    saturation_fraction,
    sweep_bias,
)
from photonloop.network import (
    SimConfigError,
    SimParams,
    is_saturated,
    new_network,
    per_cycle_loss,
    photon_count,
    ring_capacity,
    step,
    switch_decision,
)

__version__ = "0.1.0"

__all__ = [
    "AtomFieldState",
    "BootupFit",
    "Decision",
    "DispersivePhase",
    "DistillationResult",
    "ErrorFlags",
    "FockSpaceError",
    "FockVector",
    "IncidentState",
    "OutcomePair",
    "PhotonQubit",
    "SimConfigError",
    "SimParams",
    "SweepResult",
    "TrialResult",
    "TruncationError",
    "bootup_time",
    "classify",
    "coherent_fock",
    "dispersive_evolve",
    "distill_fidelity",
    "distill_probability",
    "enumerate_table",
    "fit_bootup_scaling",
    "is_saturated",
    "measure_atom_pm",
    "new_network",
    "per_cycle_loss",
    "photon_count",
    "prepare_interaction",
    "ring_capacity",
    "run_trials",
    "saturation_fraction",
    "simulate_double_measurement",
    "step",
    "sweep_bias",
    "switch_decision",
    "x_basis_qnd",
    "__version__",
]
