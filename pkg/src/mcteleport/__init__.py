"""Simulator and verification harness for multiparty controlled teleportation.

The package is organized as a small stack:

- ``statevector``: dense pure-state simulator (gates, Bell/Z measurement,
  subsystem extraction, fidelity).
- ``tables``: classical correction rules, both as published and as
  independently derived, with provenance tracked per table.
- ``protocol``: the teleportation protocol itself, driven either by a
  random sampler or by forced measurement outcomes.
- ``verify``: exhaustive branch enumeration, a brute-force oracle that
  re-derives the correction rules from scratch, and reconciliation of
  published against derived tables.
- ``cli``: command-line front end producing JSON/CSV reports and figures.
"""

from .statevector import (
    BellOutcome,
    MeasurementRecord,
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
    tensor,
    z_probabilities,
    z_project,
    z_sample,
)
from .tables import (
    CorrectionTable,
    EprVariant,
    Parity,
    TableProvenance,
    derived_table,
    paper_table,
)
from .protocol import (
    ForcedOutcomes,
    ImpossibleBranchError,
    ProtocolConfig,
    RegisterLayout,
    Transcript,
    bit_parity,
    compose_system,
    prepare_channel,
    random_message,
    run,
)
from .verify import (
    AmbiguousCorrectionError,
    BranchBudgetError,
    BranchReport,
    ModelFalsifiedError,
    ReconciliationReport,
    derive_corrections,
    enumerate_branches,
    reconcile,
)

__all__ = [
    "BellOutcome",
    "MeasurementRecord",
    "Pauli",
    "StateVector",
    "SubsystemNotPureError",
    "apply_hadamard",
    "apply_pauli",
    "bell_probabilities",
    "bell_project",
    "bell_sample",
    "extract_subsystem",
    "fidelity",
    "load_state_file",
    "make_basis_state",
    "reduced_fidelity",
    "save_state_file",
    "tensor",
    "z_probabilities",
    "z_project",
    "z_sample",
    "CorrectionTable",
    "EprVariant",
    "Parity",
    "TableProvenance",
    "derived_table",
    "paper_table",
    "ForcedOutcomes",
    "ImpossibleBranchError",
    "ProtocolConfig",
    "RegisterLayout",
    "Transcript",
    "bit_parity",
    "compose_system",
    "prepare_channel",
    "random_message",
    "run",
    "AmbiguousCorrectionError",
    "BranchBudgetError",
    "BranchReport",
    "ModelFalsifiedError",
    "ReconciliationReport",
    "derive_corrections",
    "enumerate_branches",
    "reconcile",
]

__version__ = "0.1.0"
