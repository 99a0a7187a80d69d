"""Classical correction rules for the teleportation protocol.

A :class:`CorrectionTable` holds four rule maps keyed by Bell outcome:

- ``u_i``: the receiver's correction on helper qubit B_i after the pair
  measurement (A_i, D_i), for i = 1 .. N-1. Depends on which Bell state
  the distributed EPR pairs were prepared in (the channel variant).
- ``u_n``: the receiver's correction on B_N after the final Bell
  measurement (A_N, D_N). The GHZ part of the channel is the same for
  all variants, so this map never varies.
- ``u_c``: the correction each controller applies to their own qubit at
  the same step, again variant-independent.
- ``final_u_n``: the receiver's last correction on B_N once every
  controller has broadcast a bit; keyed by the step-4 Bell outcome and
  the parity of the controllers' bits.

Tables come in two provenances. ``paper_table`` transcribes the
published rules verbatim, including two cells per psi-variant whose
printed operator is malformed (a projector sum that is not unitary);
those are transcribed as the evident intended operator and flagged in
``typo_cells``. ``derived_table`` is the rule set this package derives
independently; it is hardcoded here after derivation and re-checked
against the live oracle (:func:`mcteleport.verify.derive_corrections`)
by the test suite, so both routes stay honest.

The two provenances agree everywhere except ``final_u_n``: the published
parity rule applies the identity on odd parity and Z on even parity for
every step-4 outcome, while the derived rule is the opposite, with the
psi-minus column additionally flipped when the controller count is odd.
The derived rule is the one under which the protocol reaches unit
fidelity on every branch; see :mod:`mcteleport.verify`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .statevector import BellOutcome, Pauli


class EprVariant(enum.Enum):
    """Bell state the N-1 distributed EPR pairs are prepared in."""

    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def bell_outcome(self) -> BellOutcome:
        return BellOutcome(self.value)


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


class TableProvenance(enum.Enum):
    PAPER_STATED = "paper"
    ORACLE_DERIVED = "derived"


_OUTCOMES = tuple(BellOutcome)
_PARITIES = (Parity.EVEN, Parity.ODD)


@dataclass(frozen=True)
class CorrectionTable:
    """Complete rule set for one channel variant.

    ``m_parity`` records which controller-count parity the ``final_u_n``
    entries were derived for; it is ``None`` for the published table,
    whose stated rule does not distinguish the two cases.
    """

    epr_variant: EprVariant
    provenance: TableProvenance
    u_i: Mapping[BellOutcome, Pauli]
    u_n: Mapping[BellOutcome, Pauli]
    u_c: Mapping[BellOutcome, Pauli]
    final_u_n: Mapping[tuple[BellOutcome, Parity], Pauli]
    m_parity: Parity | None = None
    typo_cells: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        for name, mapping in (("u_i", self.u_i), ("u_n", self.u_n), ("u_c", self.u_c)):
            missing = [o for o in _OUTCOMES if o not in mapping]
            if missing:
                raise ValueError(f"{name} missing outcomes {missing}")
        missing = [
            (o, p) for o in _OUTCOMES for p in _PARITIES if (o, p) not in self.final_u_n
        ]
        if missing:
            raise ValueError(f"final_u_n missing keys {missing}")

    def cells(self) -> Iterator[tuple[str, Pauli]]:
        """Every rule cell as ``(cell_id, pauli)``, in a fixed order."""
        for outcome in _OUTCOMES:
            yield f"u_i[{outcome.value}]", self.u_i[outcome]
        for outcome in _OUTCOMES:
            yield f"u_n[{outcome.value}]", self.u_n[outcome]
        for outcome in _OUTCOMES:
            yield f"u_c[{outcome.value}]", self.u_c[outcome]
        for outcome in _OUTCOMES:
            for parity in _PARITIES:
                yield f"final_u_n[{outcome.value},{parity.value}]", self.final_u_n[
                    (outcome, parity)
                ]


def _outcome_map(phi_plus: Pauli, phi_minus: Pauli, psi_plus: Pauli, psi_minus: Pauli):
    return {
        BellOutcome.PHI_PLUS: phi_plus,
        BellOutcome.PHI_MINUS: phi_minus,
        BellOutcome.PSI_PLUS: psi_plus,
        BellOutcome.PSI_MINUS: psi_minus,
    }


# Published pair-measurement rules per channel variant. The operators are
# printed as outer products; |0><0|+|1><1| = I, |0><0|-|1><1| = Z,
# |0><1|+|1><0| = X, |0><1|-|1><0| = iY.
_PAPER_U_I = {
    EprVariant.PHI_PLUS: _outcome_map(Pauli.I, Pauli.Z, Pauli.X, Pauli.IY),
    EprVariant.PHI_MINUS: _outcome_map(Pauli.Z, Pauli.I, Pauli.IY, Pauli.X),
    # For both psi variants the phi+/phi- cells are printed as
    # |0><1| +/- |0><1|, which is not unitary; the evident intent is
    # |0><1| +/- |1><0| (X and iY), transcribed here and flagged below.
    EprVariant.PSI_PLUS: _outcome_map(Pauli.X, Pauli.IY, Pauli.I, Pauli.Z),
    EprVariant.PSI_MINUS: _outcome_map(Pauli.IY, Pauli.X, Pauli.Z, Pauli.I),
}

_PSI_TYPO_CELLS = frozenset({"u_i[phi+]", "u_i[phi-]"})

# Step-4 rules; the GHZ part of the channel is variant-independent.
_PAPER_U_N = _outcome_map(Pauli.I, Pauli.Z, Pauli.X, Pauli.IY)
_PAPER_U_C = _outcome_map(Pauli.I, Pauli.I, Pauli.X, Pauli.IY)


def _final_map(even: Mapping[BellOutcome, Pauli], odd: Mapping[BellOutcome, Pauli]):
    out: dict[tuple[BellOutcome, Parity], Pauli] = {}
    for outcome in _OUTCOMES:
        out[(outcome, Parity.EVEN)] = even[outcome]
        out[(outcome, Parity.ODD)] = odd[outcome]
    return out


# Published final rule: identity on odd parity, Z on even, for every
# step-4 outcome.
_PAPER_FINAL = _final_map(
    even=_outcome_map(Pauli.Z, Pauli.Z, Pauli.Z, Pauli.Z),
    odd=_outcome_map(Pauli.I, Pauli.I, Pauli.I, Pauli.I),
)

# Derived final rule. With an even number of controllers: identity on
# even parity, Z on odd. With an odd number, the psi- column flips
# because the controllers' iY corrections contribute a sign (-1)^(M+1)
# to the |1...1> component, which lands in the opposite parity sector.
_DERIVED_FINAL = {
    Parity.EVEN: _final_map(
        even=_outcome_map(Pauli.I, Pauli.I, Pauli.I, Pauli.I),
        odd=_outcome_map(Pauli.Z, Pauli.Z, Pauli.Z, Pauli.Z),
    ),
    Parity.ODD: _final_map(
        even=_outcome_map(Pauli.I, Pauli.I, Pauli.I, Pauli.Z),
        odd=_outcome_map(Pauli.Z, Pauli.Z, Pauli.Z, Pauli.I),
    ),
}


def paper_table(epr_variant: EprVariant) -> CorrectionTable:
    """The published rule set for one channel variant, transcribed as-is."""
    typos = _PSI_TYPO_CELLS if epr_variant in (
        EprVariant.PSI_PLUS,
        EprVariant.PSI_MINUS,
    ) else frozenset()
    return CorrectionTable(
        epr_variant=epr_variant,
        provenance=TableProvenance.PAPER_STATED,
        u_i=dict(_PAPER_U_I[epr_variant]),
        u_n=dict(_PAPER_U_N),
        u_c=dict(_PAPER_U_C),
        final_u_n=dict(_PAPER_FINAL),
        m_parity=None,
        typo_cells=typos,
    )


def derived_table(epr_variant: EprVariant, m_parity: Parity) -> CorrectionTable:
    """The independently derived rule set.

    Values are frozen here after derivation; the test suite re-derives
    them through :func:`mcteleport.verify.derive_corrections` and asserts
    equality, so a change in either route is caught.
    """
    return CorrectionTable(
        epr_variant=epr_variant,
        provenance=TableProvenance.ORACLE_DERIVED,
        u_i=dict(_PAPER_U_I[epr_variant]),  # pair rules agree with the published ones
        u_n=dict(_PAPER_U_N),
        u_c=dict(_PAPER_U_C),
        final_u_n=dict(_DERIVED_FINAL[m_parity]),
        m_parity=m_parity,
        typo_cells=frozenset(),
    )
