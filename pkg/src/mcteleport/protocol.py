"""Multiparty controlled teleportation of an N-qubit message.

Parties and registers
---------------------

Alice holds the message qubits A_1..A_N and the distributed halves
D_1..D_N; Bob holds B_1..B_N; controllers (Charlies) hold one GHZ qubit
C_1..C_M each. The channel is N-1 EPR pairs (D_i, B_i), all prepared in
one of the four Bell states (the channel variant), plus one (M+2)-qubit
GHZ state shared across (D_N, B_N, C_1..C_M).

Register layout: the full system is big-endian qubits
``A_1..A_N, D_1..D_N, B_1..B_N, C_1..C_M`` (``3N+M`` total).

Protocol steps
--------------

1. Prepare the channel and hand out the qubits.
2. Compose the message with the channel.
3. For i = 1..N-1: Alice Bell-measures (A_i, D_i), broadcasts the
   outcome, and Bob applies the pair rule to B_i.
4. Alice Bell-measures (A_N, D_N); Bob applies the step-4 rule to B_N
   and every controller applies the controller rule to their qubit.
5. Each controller applies a Hadamard to their qubit.
6. Each controller Z-measures and broadcasts one bit; Bob applies the
   final rule, keyed by the step-4 outcome and the bits' parity, to B_N.

After step 6 Bob's qubits B_1..B_N carry the message exactly (with the
correct rule set). Without step 6 the message is still locked to the
controllers: Bob's reduced state is mixed for any message that has
support on both Z-sectors of the last qubit.

A run is driven either by a random sampler or by a full set of forced
measurement outcomes; forced runs make every branch of the protocol
reachable deterministically, which the verification layer exploits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .statevector import (
    BellOutcome,
    MeasurementRecord,
    Pauli,
    StateVector,
    apply_hadamard,
    apply_pauli,
    bell_project,
    bell_sample,
    reduced_fidelity,
    tensor,
    z_project,
    z_sample,
)
from .tables import CorrectionTable, EprVariant, Parity, TableProvenance, derived_table, paper_table

SCHEMA_VERSION = "1"

# Hard cap on register width; 2**22 complex amplitudes is 64 MiB.
MAX_QUBITS = 22


class ImpossibleBranchError(ValueError):
    """A forced outcome has zero probability in the current state."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Shape of one protocol instance.

    ``n`` message qubits, ``m`` controllers, the EPR channel variant,
    and which rule set the parties follow.
    """

    n: int
    m: int
    epr_variant: EprVariant = EprVariant.PHI_PLUS
    table_source: TableProvenance = TableProvenance.ORACLE_DERIVED

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.num_qubits > MAX_QUBITS:
            raise ValueError(
                f"register of {self.num_qubits} qubits exceeds the cap of {MAX_QUBITS}"
            )

    @property
    def num_qubits(self) -> int:
        return 3 * self.n + self.m

    @property
    def m_parity(self) -> Parity:
        return Parity.EVEN if self.m % 2 == 0 else Parity.ODD

    def table(self) -> CorrectionTable:
        if self.table_source is TableProvenance.PAPER_STATED:
            return paper_table(self.epr_variant)
        return derived_table(self.epr_variant, self.m_parity)


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit indices of each block for a given (n, m)."""

    n: int
    m: int
    a: tuple[int, ...]
    d: tuple[int, ...]
    b: tuple[int, ...]
    c: tuple[int, ...]

    @classmethod
    def of(cls, n: int, m: int) -> "RegisterLayout":
        a = tuple(range(0, n))
        d = tuple(range(n, 2 * n))
        b = tuple(range(2 * n, 3 * n))
        c = tuple(range(3 * n, 3 * n + m))
        return cls(n=n, m=m, a=a, d=d, b=b, c=c)

    @property
    def num_qubits(self) -> int:
        return 3 * self.n + self.m


@dataclass(frozen=True)
class ForcedOutcomes:
    """Predetermined measurement results for a deterministic run.

    ``bell`` lists the N Bell outcomes in protocol order (pairs 1..N-1,
    then the GHZ measurement); ``bits`` the M controller bits. ``bits``
    may be omitted when the run stops after step 4.
    """

    bell: tuple[BellOutcome, ...]
    bits: tuple[int, ...] | None = None


@dataclass(frozen=True)
class CorrectionEvent:
    actor: str
    stage: str  # "pair", "ghz", "controller", "final"
    qubit: int
    pauli: Pauli


@dataclass
class Transcript:
    """Everything observable about one run, plus the resulting states.

    ``final_state`` (and ``pre_final_state``, the register just before
    the final correction) are full register states and are not part of
    the JSON form. A transcript replays through :func:`run` via
    :meth:`forced_outcomes`, bit-for-bit.
    """

    config: ProtocolConfig
    pair_records: list[MeasurementRecord] = field(default_factory=list)
    ghz_record: MeasurementRecord | None = None
    controller_records: list[MeasurementRecord] = field(default_factory=list)
    corrections: list[CorrectionEvent] = field(default_factory=list)
    parity: Parity | None = None
    final_correction: Pauli | None = None
    probability: float = 1.0
    fidelity: float | None = None
    stopped_after_step: int = 6
    pre_final_state: StateVector | None = None
    final_state: StateVector | None = None

    @property
    def controller_bits(self) -> tuple[int, ...]:
        return tuple(int(r.outcome) for r in self.controller_records)

    def bell_outcomes(self) -> tuple[BellOutcome, ...]:
        outcomes = [r.outcome for r in self.pair_records]
        if self.ghz_record is not None:
            outcomes.append(self.ghz_record.outcome)
        return tuple(outcomes)  # type: ignore[arg-type]

    def forced_outcomes(self) -> ForcedOutcomes:
        bits = self.controller_bits if self.stopped_after_step >= 6 else None
        return ForcedOutcomes(bell=self.bell_outcomes(), bits=bits)

    def to_dict(self) -> dict:
        events: list[dict] = []
        for i, rec in enumerate(self.pair_records):
            events.append(
                {
                    "event": "measure_bell",
                    "pair": i + 1,
                    "qubits": list(rec.qubits),
                    "outcome": rec.outcome_label(),
                    "probability": rec.probability,
                }
            )
            events.append(_correction_dict(self.corrections_at("pair", i)))
        if self.ghz_record is not None:
            events.append(
                {
                    "event": "measure_bell",
                    "pair": "ghz",
                    "qubits": list(self.ghz_record.qubits),
                    "outcome": self.ghz_record.outcome_label(),
                    "probability": self.ghz_record.probability,
                }
            )
            for ev in self.corrections:
                if ev.stage in ("ghz", "controller"):
                    events.append(_correction_dict(ev))
        if self.stopped_after_step >= 5:
            for j in range(self.config.m):
                events.append({"event": "hadamard", "controller": j + 1})
        for j, rec in enumerate(self.controller_records):
            events.append(
                {
                    "event": "measure_z",
                    "controller": j + 1,
                    "qubit": rec.qubits[0],
                    "bit": int(rec.outcome),
                    "probability": rec.probability,
                }
            )
        for ev in self.corrections:
            if ev.stage == "final":
                events.append(_correction_dict(ev))
        return {
            "config": {
                "n": self.config.n,
                "m": self.config.m,
                "epr_variant": self.config.epr_variant.value,
                "table_source": self.config.table_source.value,
            },
            "stopped_after_step": self.stopped_after_step,
            "events": events,
            "bell_outcomes": [o.value for o in self.bell_outcomes()],
            "controller_bits": list(self.controller_bits),
            "parity": None if self.parity is None else self.parity.value,
            "final_correction": (
                None if self.final_correction is None else self.final_correction.value
            ),
            "probability": self.probability,
            "fidelity": self.fidelity,
        }

    def corrections_at(self, stage: str, index: int) -> CorrectionEvent:
        found = [ev for ev in self.corrections if ev.stage == stage]
        return found[index]


def _correction_dict(ev: CorrectionEvent) -> dict:
    return {
        "event": "correction",
        "actor": ev.actor,
        "stage": ev.stage,
        "qubit": ev.qubit,
        "pauli": ev.pauli.value,
    }


def bit_parity(bits: Iterable[int]) -> Parity:
    """Parity of a bit collection; an empty collection is even."""
    total = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b}")
        total ^= b
    return Parity.ODD if total else Parity.EVEN


_SQRT_HALF = 1.0 / math.sqrt(2.0)

# (d_bit, b_bit, amplitude) terms of each EPR pair variant on (D_i, B_i).
_PAIR_TERMS = {
    EprVariant.PHI_PLUS: ((0, 0, _SQRT_HALF), (1, 1, _SQRT_HALF)),
    EprVariant.PHI_MINUS: ((0, 0, _SQRT_HALF), (1, 1, -_SQRT_HALF)),
    EprVariant.PSI_PLUS: ((0, 1, _SQRT_HALF), (1, 0, _SQRT_HALF)),
    EprVariant.PSI_MINUS: ((0, 1, _SQRT_HALF), (1, 0, -_SQRT_HALF)),
}


def prepare_channel(config: ProtocolConfig) -> StateVector:
    """Channel state on ``D_1..D_N, B_1..B_N, C_1..C_M`` (``2N+M`` qubits).

    Pairs (D_i, B_i) for i < N are in the configured Bell variant; the
    GHZ state spans (D_N, B_N, C_1..C_M). For N=1, M=0 the GHZ
    degenerates to a single phi+ pair on (D_1, B_1).
    """
    n, m = config.n, config.m
    width = 2 * n + m
    amps = np.zeros(1 << width, dtype=complex)
    terms = _PAIR_TERMS[config.epr_variant]
    weight = [1 << (width - 1 - q) for q in range(width)]
    for choice in itertools.product((0, 1), repeat=n - 1):
        index = 0
        amp = 1.0
        for i, pick in enumerate(choice):  # pair i+1 on D_{i+1}, B_{i+1}
            d_bit, b_bit, term_amp = terms[pick]
            index += d_bit * weight[i] + b_bit * weight[n + i]
            amp *= term_amp
        for g in (0, 1):  # GHZ component |g g ... g>
            ghz_index = index
            if g:
                ghz_index += weight[n - 1] + weight[2 * n - 1]
                for j in range(m):
                    ghz_index += weight[2 * n + j]
            amps[ghz_index] = amp * _SQRT_HALF
    return StateVector._wrap(amps, width)


def compose_system(
    message: StateVector, channel: StateVector, layout: RegisterLayout
) -> StateVector:
    """Join message and channel into the full register (A block first)."""
    if message.num_qubits != layout.n:
        raise ValueError(
            f"message has {message.num_qubits} qubits, layout expects {layout.n}"
        )
    if channel.num_qubits != 2 * layout.n + layout.m:
        raise ValueError(
            f"channel has {channel.num_qubits} qubits, layout expects {2 * layout.n + layout.m}"
        )
    return tensor(message, channel)


def random_message(n: int, rng: np.random.Generator) -> StateVector:
    """Dense Gaussian-random message state on ``n`` qubits."""
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    return StateVector(amps)


def run(
    config: ProtocolConfig,
    message: StateVector,
    *,
    rng: np.random.Generator | None = None,
    forced: ForcedOutcomes | None = None,
    stop_after_step: int = 6,
) -> Transcript:
    """Execute the protocol once and return its transcript.

    Exactly one of ``rng`` (sampled run) or ``forced`` (deterministic
    branch) must be given. ``stop_after_step=4`` truncates the run after
    the step-4 corrections, before the controllers act; the transcript
    then carries the truncated register as ``final_state`` and no
    fidelity. Forcing an outcome whose branch weight is zero raises
    :class:`ImpossibleBranchError`.
    """
    if (rng is None) == (forced is None):
        raise ValueError("provide exactly one of rng or forced")
    if stop_after_step not in (4, 6):
        raise ValueError(f"stop_after_step must be 4 or 6, got {stop_after_step}")
    if message.num_qubits != config.n:
        raise ValueError(f"message has {message.num_qubits} qubits, config.n is {config.n}")
    if forced is not None:
        if len(forced.bell) != config.n:
            raise ValueError(
                f"forced.bell must list {config.n} outcomes, got {len(forced.bell)}"
            )
        if stop_after_step >= 6:
            if forced.bits is None or len(forced.bits) != config.m:
                raise ValueError(f"forced.bits must list {config.m} bits")

    layout = RegisterLayout.of(config.n, config.m)
    table = config.table()
    state = compose_system(message, prepare_channel(config), layout)
    tr = Transcript(config=config, stopped_after_step=stop_after_step)

    def measure_bell(qa: int, qb: int, want: BellOutcome | None):
        if want is None:
            return bell_sample(state, qa, qb, rng)
        post, prob = bell_project(state, qa, qb, want)
        if post is None:
            raise ImpossibleBranchError(
                f"outcome {want.value} on qubits ({qa}, {qb}) has zero probability"
            )
        return want, post, prob

    # Step 3: pair measurements and Bob's pair corrections.
    for i in range(config.n - 1):
        want = forced.bell[i] if forced is not None else None
        outcome, state, prob = measure_bell(layout.a[i], layout.d[i], want)
        tr.pair_records.append(
            MeasurementRecord("bell", (layout.a[i], layout.d[i]), outcome, prob)
        )
        tr.probability *= prob
        pauli = table.u_i[outcome]
        state = apply_pauli(state, layout.b[i], pauli)
        tr.corrections.append(CorrectionEvent("bob", "pair", layout.b[i], pauli))

    # Step 4: GHZ-side measurement; Bob and every controller correct.
    want = forced.bell[config.n - 1] if forced is not None else None
    ghz_outcome, state, prob = measure_bell(layout.a[-1], layout.d[-1], want)
    tr.ghz_record = MeasurementRecord(
        "bell", (layout.a[-1], layout.d[-1]), ghz_outcome, prob
    )
    tr.probability *= prob
    pauli = table.u_n[ghz_outcome]
    state = apply_pauli(state, layout.b[-1], pauli)
    tr.corrections.append(CorrectionEvent("bob", "ghz", layout.b[-1], pauli))
    c_pauli = table.u_c[ghz_outcome]
    for j, cq in enumerate(layout.c):
        state = apply_pauli(state, cq, c_pauli)
        tr.corrections.append(CorrectionEvent(f"charlie_{j + 1}", "controller", cq, c_pauli))

    if stop_after_step == 4:
        tr.final_state = state
        return tr

    # Step 5: controllers rotate to the X basis.
    for cq in layout.c:
        state = apply_hadamard(state, cq)

    # Step 6: controllers measure and broadcast; Bob's final correction.
    bits: list[int] = []
    for j, cq in enumerate(layout.c):
        if forced is not None:
            bit = forced.bits[j]
            post, prob = z_project(state, cq, bit)
            if post is None:
                raise ImpossibleBranchError(
                    f"bit {bit} on controller qubit {cq} has zero probability"
                )
            state = post
        else:
            bit, state, prob = z_sample(state, cq, rng)
        bits.append(bit)
        tr.controller_records.append(MeasurementRecord("z", (cq,), bit, prob))
        tr.probability *= prob
    tr.parity = bit_parity(bits)
    tr.pre_final_state = state
    final = table.final_u_n[(ghz_outcome, tr.parity)]
    state = apply_pauli(state, layout.b[-1], final)
    tr.corrections.append(CorrectionEvent("bob", "final", layout.b[-1], final))
    tr.final_correction = final
    tr.final_state = state
    tr.fidelity = reduced_fidelity(state, layout.b, message)
    return tr
