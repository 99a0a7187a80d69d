"""Correction-rule tables: transcription integrity and the dual route.

The derived tables are frozen constants; the oracle in ``verify``
recomputes them from the simulator alone. These tests pin the frozen
values, then assert the two routes coincide for every variant and
controller-count parity, so neither copy can drift silently.
"""

import pytest

from mcteleport.statevector import BellOutcome, Pauli
from mcteleport.tables import (
    CorrectionTable,
    EprVariant,
    Parity,
    TableProvenance,
    derived_table,
    paper_table,
)
from mcteleport.protocol import ProtocolConfig
from mcteleport.verify import derive_corrections

PHI_P, PHI_M = BellOutcome.PHI_PLUS, BellOutcome.PHI_MINUS
PSI_P, PSI_M = BellOutcome.PSI_PLUS, BellOutcome.PSI_MINUS

# Published pair rules, keyed by channel variant then measurement outcome.
PUBLISHED_U_I = {
    EprVariant.PHI_PLUS: {PHI_P: Pauli.I, PHI_M: Pauli.Z, PSI_P: Pauli.X, PSI_M: Pauli.IY},
    EprVariant.PHI_MINUS: {PHI_P: Pauli.Z, PHI_M: Pauli.I, PSI_P: Pauli.IY, PSI_M: Pauli.X},
    EprVariant.PSI_PLUS: {PHI_P: Pauli.X, PHI_M: Pauli.IY, PSI_P: Pauli.I, PSI_M: Pauli.Z},
    EprVariant.PSI_MINUS: {PHI_P: Pauli.IY, PHI_M: Pauli.X, PSI_P: Pauli.Z, PSI_M: Pauli.I},
}

PUBLISHED_U_N = {PHI_P: Pauli.I, PHI_M: Pauli.Z, PSI_P: Pauli.X, PSI_M: Pauli.IY}
PUBLISHED_U_C = {PHI_P: Pauli.I, PHI_M: Pauli.I, PSI_P: Pauli.X, PSI_M: Pauli.IY}


class TestPublishedTables:
    @pytest.mark.parametrize("variant", list(EprVariant))
    def test_pair_rules_match_transcription(self, variant):
        table = paper_table(variant)
        assert dict(table.u_i) == PUBLISHED_U_I[variant]

    @pytest.mark.parametrize("variant", list(EprVariant))
    def test_ghz_side_rules_are_variant_independent(self, variant):
        table = paper_table(variant)
        assert dict(table.u_n) == PUBLISHED_U_N
        assert dict(table.u_c) == PUBLISHED_U_C

    @pytest.mark.parametrize("variant", list(EprVariant))
    def test_published_final_rule_keys_on_parity_only(self, variant):
        table = paper_table(variant)
        for outcome in BellOutcome:
            assert table.final_u_n[(outcome, Parity.ODD)] is Pauli.I
            assert table.final_u_n[(outcome, Parity.EVEN)] is Pauli.Z

    def test_typo_flags_mark_malformed_cells_only(self):
        for variant in (EprVariant.PSI_PLUS, EprVariant.PSI_MINUS):
            assert paper_table(variant).typo_cells == {"u_i[phi+]", "u_i[phi-]"}
        for variant in (EprVariant.PHI_PLUS, EprVariant.PHI_MINUS):
            assert paper_table(variant).typo_cells == frozenset()

    def test_provenance_and_parity_fields(self):
        table = paper_table(EprVariant.PHI_PLUS)
        assert table.provenance is TableProvenance.PAPER_STATED
        assert table.m_parity is None


class TestDerivedTables:
    def test_intermediate_rules_agree_with_published(self):
        for variant in EprVariant:
            for parity in Parity:
                d = derived_table(variant, parity)
                p = paper_table(variant)
                assert dict(d.u_i) == dict(p.u_i)
                assert dict(d.u_n) == dict(p.u_n)
                assert dict(d.u_c) == dict(p.u_c)

    def test_final_rule_even_controller_count(self):
        table = derived_table(EprVariant.PHI_PLUS, Parity.EVEN)
        for outcome in BellOutcome:
            assert table.final_u_n[(outcome, Parity.EVEN)] is Pauli.I
            assert table.final_u_n[(outcome, Parity.ODD)] is Pauli.Z

    def test_final_rule_odd_controller_count_flips_psi_minus(self):
        table = derived_table(EprVariant.PHI_PLUS, Parity.ODD)
        for outcome in BellOutcome:
            if outcome is PSI_M:
                assert table.final_u_n[(outcome, Parity.EVEN)] is Pauli.Z
                assert table.final_u_n[(outcome, Parity.ODD)] is Pauli.I
            else:
                assert table.final_u_n[(outcome, Parity.EVEN)] is Pauli.I
                assert table.final_u_n[(outcome, Parity.ODD)] is Pauli.Z

    def test_derived_final_rule_is_variant_independent(self):
        for parity in Parity:
            reference = dict(derived_table(EprVariant.PHI_PLUS, parity).final_u_n)
            for variant in EprVariant:
                assert dict(derived_table(variant, parity).final_u_n) == reference

    def test_cells_enumerate_every_rule_exactly_once(self):
        table = derived_table(EprVariant.PSI_PLUS, Parity.ODD)
        cells = list(table.cells())
        assert len(cells) == 4 + 4 + 4 + 8
        assert len({cell for cell, _ in cells}) == 20

    def test_table_totality_is_enforced(self):
        partial = {PHI_P: Pauli.I, PHI_M: Pauli.Z, PSI_P: Pauli.X}
        with pytest.raises(ValueError):
            CorrectionTable(
                epr_variant=EprVariant.PHI_PLUS,
                provenance=TableProvenance.ORACLE_DERIVED,
                u_i=partial,
                u_n=PUBLISHED_U_N,
                u_c=PUBLISHED_U_C,
                final_u_n=dict(derived_table(EprVariant.PHI_PLUS, Parity.EVEN).final_u_n),
            )


class TestDualRoute:
    """Frozen tables must equal the live brute-force derivation."""

    @pytest.mark.parametrize("variant", list(EprVariant))
    @pytest.mark.parametrize("m", [1, 2])
    def test_oracle_reproduces_frozen_table(self, variant, m):
        config = ProtocolConfig(n=1, m=m, epr_variant=variant)
        oracle = derive_corrections(config)
        frozen = derived_table(variant, config.m_parity)
        assert dict(oracle.u_i) == dict(frozen.u_i)
        assert dict(oracle.u_n) == dict(frozen.u_n)
        assert dict(oracle.u_c) == dict(frozen.u_c)
        assert dict(oracle.final_u_n) == dict(frozen.final_u_n)
        assert oracle.m_parity is frozen.m_parity
