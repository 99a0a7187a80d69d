"""Dense pure-state simulator for small qubit registers.

Conventions used throughout the package:

- Amplitudes are a flat ``complex128`` array of length ``2**num_qubits``.
- Qubit 0 is the most significant bit of the basis index, so for a
  3-qubit register the basis state ``|q0 q1 q2> = |110>`` sits at index 6.
- Operations never mutate their input; each returns a fresh state whose
  backing array is marked read-only.
- States are normalized: every public operation leaves the squared norm
  within ``NORM_TOL`` of 1 (projections renormalize explicitly).

Measurement here means projective measurement that leaves the measured
qubits in the register, collapsed onto the observed outcome. The register
never shrinks mid-protocol; callers that want a subsystem use
:func:`extract_subsystem` after measuring everything else.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-10
# A reduced state counts as pure when its top Schmidt weight is this close to 1.
PURITY_TOL = 1e-8
# Amplitudes loaded from user input may be off by this much before renormalizing.
LOAD_TOL = 1e-6
# Branch weights below this are treated as impossible outcomes.
ZERO_PROB_TOL = 1e-12


class SubsystemNotPureError(ValueError):
    """Raised when a requested subsystem is entangled with the rest."""


class Pauli(enum.Enum):
    """Single-qubit correction operators.

    ``IY`` is the real matrix i*sigma_y = [[0, 1], [-1, 0]]; keeping the
    factor of i makes every correction real and the group closed over
    real matrices, at the cost of a harmless global sign.
    """

    I = "I"
    X = "X"
    IY = "iY"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return _PAULI_MATRICES[self]


_PAULI_MATRICES = {
    Pauli.I: np.array([[1, 0], [0, 1]], dtype=complex),
    Pauli.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Pauli.IY: np.array([[0, 1], [-1, 0]], dtype=complex),
    Pauli.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}

_SQRT_HALF = 1.0 / math.sqrt(2.0)

_HADAMARD = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)


class BellOutcome(enum.Enum):
    """The four outcomes of a two-qubit Bell measurement."""

    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def vector(self) -> np.ndarray:
        """Bell state as a 4-vector; the first-listed qubit is the MSB."""
        return _BELL_VECTORS[self]


_BELL_VECTORS = {
    BellOutcome.PHI_PLUS: np.array([_SQRT_HALF, 0, 0, _SQRT_HALF], dtype=complex),
    BellOutcome.PHI_MINUS: np.array([_SQRT_HALF, 0, 0, -_SQRT_HALF], dtype=complex),
    BellOutcome.PSI_PLUS: np.array([0, _SQRT_HALF, _SQRT_HALF, 0], dtype=complex),
    BellOutcome.PSI_MINUS: np.array([0, _SQRT_HALF, -_SQRT_HALF, 0], dtype=complex),
}

for _v in _BELL_VECTORS.values():
    _v.flags.writeable = False


@dataclass(frozen=True)
class MeasurementRecord:
    """One projective measurement: which qubits, what came out, how likely."""

    kind: str  # "bell" or "z"
    qubits: tuple[int, ...]
    outcome: BellOutcome | int
    probability: float

    def outcome_label(self) -> str:
        if isinstance(self.outcome, BellOutcome):
            return self.outcome.value
        return str(self.outcome)


class StateVector:
    """Immutable pure state of ``num_qubits`` qubits.

    The constructor accepts any sequence of amplitudes whose squared norm
    is within ``LOAD_TOL`` of 1 and renormalizes exactly; this is the
    entry point for user-supplied amplitudes. Internal operations bypass
    the tolerance via :meth:`_wrap` since they preserve the norm by
    construction.
    """

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes: Sequence[complex] | np.ndarray):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1).copy()
        n = int(amps.size).bit_length() - 1
        if amps.size < 2 or amps.size != 1 << n:
            raise ValueError(f"amplitude count {amps.size} is not a power of two >= 2")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > LOAD_TOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {LOAD_TOL}")
        amps /= norm
        amps.flags.writeable = False
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("StateVector is immutable")

    @staticmethod
    def _wrap(amplitudes: np.ndarray, num_qubits: int) -> "StateVector":
        # Trusted path: amplitudes come from a norm-preserving operation.
        amps = np.ascontiguousarray(amplitudes, dtype=complex).reshape(-1)
        assert amps.size == 1 << num_qubits
        assert abs(np.linalg.norm(amps) - 1.0) < NORM_TOL
        amps.flags.writeable = False
        sv = object.__new__(StateVector)
        object.__setattr__(sv, "num_qubits", num_qubits)
        object.__setattr__(sv, "amplitudes", amps)
        return sv

    def amplitude(self, basis_index: int) -> complex:
        return complex(self.amplitudes[basis_index])

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"

    def _check_qubit(self, qubit: int) -> None:
        if not 0 <= qubit < self.num_qubits:
            raise ValueError(f"qubit {qubit} out of range for {self.num_qubits} qubits")


def make_basis_state(num_qubits: int, basis_index: int) -> StateVector:
    """Computational basis state ``|basis_index>`` on ``num_qubits`` qubits."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    dim = 1 << num_qubits
    if not 0 <= basis_index < dim:
        raise ValueError(f"basis_index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=complex)
    amps[basis_index] = 1.0
    return StateVector._wrap(amps, num_qubits)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product; ``a``'s qubits become the high-order block."""
    amps = np.kron(a.amplitudes, b.amplitudes)
    return StateVector._wrap(amps, a.num_qubits + b.num_qubits)


def _apply_single(state: StateVector, qubit: int, matrix: np.ndarray) -> StateVector:
    state._check_qubit(qubit)
    n = state.num_qubits
    t = state.amplitudes.reshape((2,) * n)
    # Contract the gate against the qubit's axis, then put the axis back.
    t = np.tensordot(matrix, t, axes=([1], [qubit]))
    t = np.moveaxis(t, 0, qubit)
    return StateVector._wrap(t.reshape(-1), n)


def apply_pauli(state: StateVector, qubit: int, pauli: Pauli) -> StateVector:
    if pauli is Pauli.I:
        return state
    return _apply_single(state, qubit, pauli.matrix)


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    return _apply_single(state, qubit, _HADAMARD)


def _pair_axes_front(state: StateVector, qubit_a: int, qubit_b: int) -> np.ndarray:
    """View with ``qubit_a`` as axis 0 and ``qubit_b`` as axis 1."""
    state._check_qubit(qubit_a)
    state._check_qubit(qubit_b)
    if qubit_a == qubit_b:
        raise ValueError("Bell measurement needs two distinct qubits")
    t = state.amplitudes.reshape((2,) * state.num_qubits)
    return np.moveaxis(t, (qubit_a, qubit_b), (0, 1))


def bell_project(
    state: StateVector, qubit_a: int, qubit_b: int, outcome: BellOutcome
) -> tuple[StateVector | None, float]:
    """Project ``(qubit_a, qubit_b)`` onto one Bell outcome.

    Returns ``(post_state, probability)`` where ``probability`` is the
    branch weight before renormalization and the post state has both
    measured qubits collapsed onto the Bell state, still in the register.
    For an impossible branch the state is ``None`` and the probability is
    whatever rounding noise remained (below ``ZERO_PROB_TOL``).
    """
    t = _pair_axes_front(state, qubit_a, qubit_b)
    v = outcome.vector.reshape(2, 2)
    # Residual amplitudes of the rest of the register in this branch.
    c = np.tensordot(v.conj(), t, axes=([0, 1], [0, 1]))
    prob = float(np.real(np.vdot(c, c)))
    if prob < ZERO_PROB_TOL:
        return None, prob
    out = np.multiply.outer(v, c / math.sqrt(prob))
    out = np.moveaxis(out, (0, 1), (qubit_a, qubit_b))
    return StateVector._wrap(out, state.num_qubits), prob


def bell_probabilities(state: StateVector, qubit_a: int, qubit_b: int) -> dict[BellOutcome, float]:
    """Branch weights of all four Bell outcomes; they sum to 1."""
    t = _pair_axes_front(state, qubit_a, qubit_b)
    probs: dict[BellOutcome, float] = {}
    for outcome in BellOutcome:
        v = outcome.vector.reshape(2, 2)
        c = np.tensordot(v.conj(), t, axes=([0, 1], [0, 1]))
        probs[outcome] = float(np.real(np.vdot(c, c)))
    total = sum(probs.values())
    assert abs(total - 1.0) < NORM_TOL, f"Bell branch weights sum to {total!r}"
    return probs


def bell_sample(
    state: StateVector, qubit_a: int, qubit_b: int, rng: np.random.Generator
) -> tuple[BellOutcome, StateVector, float]:
    """Sample a Bell measurement on ``(qubit_a, qubit_b)``."""
    probs = bell_probabilities(state, qubit_a, qubit_b)
    outcome = _draw(rng, list(probs.items()))
    post, prob = bell_project(state, qubit_a, qubit_b, outcome)
    assert post is not None  # a sampled outcome has positive weight
    return outcome, post, prob


def z_project(state: StateVector, qubit: int, bit: int) -> tuple[StateVector | None, float]:
    """Project one qubit onto ``|bit>``; same contract as :func:`bell_project`."""
    state._check_qubit(qubit)
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    t = state.amplitudes.reshape((2,) * state.num_qubits)
    t = np.moveaxis(t, qubit, 0)
    c = t[bit]
    prob = float(np.real(np.vdot(c, c)))
    if prob < ZERO_PROB_TOL:
        return None, prob
    out = np.zeros_like(t)
    out[bit] = c / math.sqrt(prob)
    out = np.moveaxis(out, 0, qubit)
    return StateVector._wrap(out, state.num_qubits), prob


def z_probabilities(state: StateVector, qubit: int) -> tuple[float, float]:
    state._check_qubit(qubit)
    t = state.amplitudes.reshape((2,) * state.num_qubits)
    t = np.moveaxis(t, qubit, 0)
    p0 = float(np.real(np.vdot(t[0], t[0])))
    p1 = float(np.real(np.vdot(t[1], t[1])))
    assert abs(p0 + p1 - 1.0) < NORM_TOL
    return p0, p1


def z_sample(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector, float]:
    p0, p1 = z_probabilities(state, qubit)
    bit = _draw(rng, [(0, p0), (1, p1)])
    post, prob = z_project(state, qubit, bit)
    assert post is not None
    return bit, post, prob


def _draw(rng: np.random.Generator, weighted: list) -> object:
    """Inverse-CDF draw over (value, weight) pairs; weights sum to ~1."""
    r = rng.random()
    acc = 0.0
    for value, weight in weighted:
        acc += weight
        if r < acc:
            return value
    return weighted[-1][0]  # r landed in the rounding slack at the top


def extract_subsystem(state: StateVector, keep: Iterable[int]) -> StateVector:
    """Pure state of the ``keep`` qubits, in the order given.

    The rest of the register must be disentangled from ``keep`` (e.g.
    fully measured); otherwise :class:`SubsystemNotPureError` is raised.
    The returned global phase is fixed by making the largest-magnitude
    amplitude real and positive, so repeated extractions are identical.
    """
    keep = tuple(keep)
    if len(keep) == 0:
        raise ValueError("keep must name at least one qubit")
    if len(set(keep)) != len(keep):
        raise ValueError(f"duplicate qubits in keep: {keep}")
    for q in keep:
        state._check_qubit(q)
    n = state.num_qubits
    rest = tuple(q for q in range(n) if q not in keep)
    t = state.amplitudes.reshape((2,) * n)
    mat = t.transpose(keep + rest).reshape(1 << len(keep), -1)
    if len(rest) == 0:
        vec = mat.reshape(-1)
    else:
        u, s, _ = np.linalg.svd(mat, full_matrices=False)
        if 1.0 - float(s[0]) ** 2 > PURITY_TOL:
            raise SubsystemNotPureError(
                f"subsystem {keep} is not pure (top Schmidt weight {float(s[0])**2:.6f})"
            )
        vec = u[:, 0]
    pivot = int(np.argmax(np.abs(vec)))
    phase = vec[pivot] / abs(vec[pivot])
    vec = vec * np.conj(phase)
    vec /= np.linalg.norm(vec)
    return StateVector._wrap(vec, len(keep))


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2`` for two states on the same number of qubits."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("fidelity needs states of equal size")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def reduced_fidelity(state: StateVector, keep: Sequence[int], target: StateVector) -> float:
    """``<target| rho_keep |target>`` without forming the density matrix.

    Equals :func:`fidelity` against :func:`extract_subsystem` when the
    subsystem is pure, but is defined (and cheap) for mixed subsystems too.
    """
    keep = tuple(keep)
    if len(keep) != target.num_qubits:
        raise ValueError("target size must match the kept subsystem")
    if len(set(keep)) != len(keep):
        raise ValueError(f"duplicate qubits in keep: {keep}")
    for q in keep:
        state._check_qubit(q)
    n = state.num_qubits
    rest = tuple(q for q in range(n) if q not in keep)
    t = state.amplitudes.reshape((2,) * n)
    mat = t.transpose(keep + rest).reshape(1 << len(keep), -1)
    overlap = target.amplitudes.conj() @ mat
    return float(np.real(np.vdot(overlap, overlap)))


def states_equal(a: StateVector, b: StateVector, tol: float = NORM_TOL) -> bool:
    """Element-wise equality up to a global phase."""
    if a.num_qubits != b.num_qubits:
        return False
    inner = np.vdot(a.amplitudes, b.amplitudes)
    if abs(inner) < tol:
        return False
    phase = inner / abs(inner)
    return bool(np.allclose(a.amplitudes * phase, b.amplitudes, atol=tol, rtol=0.0))


def save_state_file(state: StateVector, path) -> None:
    """Write amplitudes as ``re im`` per line, one line per basis index."""
    lines = [f"{float(a.real)!r} {float(a.imag)!r}" for a in state.amplitudes]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_state_file(path) -> StateVector:
    """Read a state written by :func:`save_state_file`.

    The file must hold ``2**N`` lines of ``re im`` float pairs with a
    squared norm within ``LOAD_TOL`` of 1; the state is renormalized.
    """
    amps: list[complex] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 're im', got {text!r}")
            try:
                re, im = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not a float pair: {text!r}") from exc
            amps.append(complex(re, im))
    if len(amps) < 2 or len(amps) & (len(amps) - 1):
        raise ValueError(f"{path}: {len(amps)} amplitudes is not a power of two >= 2")
    return StateVector(amps)
