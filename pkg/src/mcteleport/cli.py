"""Command-line harness for running and verifying the protocol.

Four modes, selected with ``--mode``:

- ``run``: one sampled protocol run; the transcript goes to the report.
- ``enumerate``: every measurement branch, with probabilities and final
  fidelities under both rule provenances; exits 2 if the selected rule
  set misses unit fidelity on any branch or the branch weights are not
  uniform.
- ``reconcile``: derive the correction rules from scratch and compare
  them cell by cell against the published ones.
- ``montecarlo``: many sampled runs; checks observed branch frequencies
  against the uniform expectation at five sigma.

With ``--out report.json`` the JSON report is written there, delimited
rows go to a ``.csv`` sibling and figures to a ``.png`` sibling
(``reconcile`` writes a ``.txt`` diff instead). Without ``--out`` the
report goes to stdout (``reconcile`` prints the text diff). Reports are
byte-identical for identical specs and seeds.

Exit codes: 0 success, 1 usage or input error, 2 verification failure
in enumerate mode.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import report as report_mod
from .protocol import (
    SCHEMA_VERSION,
    ProtocolConfig,
    random_message,
    run,
)
from .statevector import BellOutcome, StateVector, load_state_file
from .tables import EprVariant, TableProvenance, paper_table
from .verify import (
    FIDELITY_TOL,
    PROBABILITY_SUM_TOL,
    PROBABILITY_TOL,
    derive_corrections,
    enumerate_branches,
    expected_branch_probability,
    reconcile,
)

_EPR_CHOICES = [v.value for v in EprVariant]
_TABLE_CHOICES = [p.value for p in TableProvenance]
_MODES = ["run", "enumerate", "reconcile", "montecarlo"]

# Seed for the built-in demo message; fixed so reports are reproducible.
_EXAMPLE_SEED = 31415


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; we reserve that code
        raise _UsageError(message)


@dataclass(frozen=True)
class RunSpec:
    """Complete, replayable description of one CLI invocation."""

    mode: str
    n: int | None = None
    m: int | None = None
    epr: str = "phi+"
    table: str = "derived"
    seed: int = 0
    message: str = "random"
    trials: int = 10000
    branch_budget: int = 1 << 20
    figures: bool = True
    out: str | None = None

    def to_dict(self) -> dict:
        payload = asdict(self)
        del payload["out"]  # the destination is not part of the logical spec
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "RunSpec":
        return cls(**payload)

    def to_args(self) -> list[str]:
        args = ["--mode", self.mode]
        if self.n is not None:
            args += ["--n", str(self.n)]
        if self.m is not None:
            args += ["--m", str(self.m)]
        args += ["--epr", self.epr, "--table", self.table, "--seed", str(self.seed)]
        args += ["--message", self.message, "--trials", str(self.trials)]
        args += ["--branch-budget", str(self.branch_budget)]
        if not self.figures:
            args.append("--no-figures")
        if self.out is not None:
            args += ["--out", self.out]
        return args


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcteleport", description=__doc__.split("\n\n")[0])
    parser.add_argument("--mode", required=True, choices=_MODES)
    parser.add_argument("--n", type=int, help="message qubits")
    parser.add_argument("--m", type=int, help="controller count")
    parser.add_argument("--epr", choices=_EPR_CHOICES, default="phi+",
                        help="Bell state of the distributed pairs")
    parser.add_argument("--table", choices=_TABLE_CHOICES, default="derived",
                        help="which correction rules the parties follow")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--message", default="random",
                        help="'random', 'example3x2', or a path to an amplitude file")
    parser.add_argument("--trials", type=int, default=10000,
                        help="sampled runs in montecarlo mode")
    parser.add_argument("--branch-budget", type=int, default=1 << 20,
                        help="refuse enumerations beyond this many branches")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering next to --out")
    parser.add_argument("--out", default=None, help="report path (JSON)")
    return parser


def spec_from_args(argv: Sequence[str]) -> RunSpec:
    ns = build_parser().parse_args(list(argv))
    spec = RunSpec(
        mode=ns.mode,
        n=ns.n,
        m=ns.m,
        epr=ns.epr,
        table=ns.table,
        seed=ns.seed,
        message=ns.message,
        trials=ns.trials,
        branch_budget=ns.branch_budget,
        figures=not ns.no_figures,
        out=ns.out,
    )
    if spec.mode in ("run", "enumerate", "montecarlo"):
        if spec.n is None or spec.m is None:
            raise _UsageError(f"--mode {spec.mode} requires --n and --m")
    if spec.trials < 1:
        raise _UsageError("--trials must be >= 1")
    return spec


def example_message_3x2() -> StateVector:
    """Built-in 3-qubit demo message.

    Dense random amplitudes at a fixed seed, rebalanced so each Z-sector
    of the last qubit carries exactly half the weight. That way a wrong
    final-rule parity shows up as fidelity 0 rather than merely below 1.
    """
    rng = np.random.default_rng(_EXAMPLE_SEED)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    even = amps[0::2]
    odd = amps[1::2]
    amps[0::2] = even / (np.linalg.norm(even) * math.sqrt(2.0))
    amps[1::2] = odd / (np.linalg.norm(odd) * math.sqrt(2.0))
    return StateVector(amps)


def _resolve_message(spec: RunSpec, rng: np.random.Generator) -> tuple[StateVector, dict]:
    if spec.message == "random":
        state = random_message(spec.n, rng)
        info = {"source": "random", "seed": spec.seed}
    elif spec.message == "example3x2":
        if spec.n != 3:
            raise ValueError("message 'example3x2' is a 3-qubit state; pass --n 3")
        state = example_message_3x2()
        info = {"source": "example3x2"}
    else:
        state = load_state_file(spec.message)
        if state.num_qubits != spec.n:
            raise ValueError(
                f"message file holds {state.num_qubits} qubits, --n is {spec.n}"
            )
        info = {"source": "file", "path": spec.message}
    info["num_qubits"] = state.num_qubits
    return state, info


def _config(spec: RunSpec) -> ProtocolConfig:
    return ProtocolConfig(
        n=spec.n,
        m=spec.m,
        epr_variant=EprVariant(spec.epr),
        table_source=TableProvenance(spec.table),
    )


def _mode_run(spec: RunSpec) -> int:
    rng = np.random.default_rng(spec.seed)
    config = _config(spec)
    message, info = _resolve_message(spec, rng)
    transcript = run(config, message, rng=rng)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "runspec": spec.to_dict(),
        "message": info,
        "transcript": transcript.to_dict(),
    }
    report_mod.dump_json(payload, spec.out)
    return 0


def _mode_enumerate(spec: RunSpec) -> int:
    rng = np.random.default_rng(spec.seed)
    config = _config(spec)
    message, info = _resolve_message(spec, rng)
    reports = enumerate_branches(config, message, branch_budget=spec.branch_budget)
    expected = expected_branch_probability(config)
    selected = spec.table
    fid_of = (
        (lambda r: r.fidelity_derived) if selected == "derived" else (lambda r: r.fidelity_paper)
    )
    prob_sum = math.fsum(r.probability for r in reports)
    fid_violations = sum(1 for r in reports if fid_of(r) < 1.0 - FIDELITY_TOL)
    prob_violations = sum(1 for r in reports if abs(r.probability - expected) > PROBABILITY_TOL)
    fidelity_zero = sum(1 for r in reports if fid_of(r) <= FIDELITY_TOL)
    sum_ok = abs(prob_sum - 1.0) <= PROBABILITY_SUM_TOL
    ok = fid_violations == 0 and prob_violations == 0 and sum_ok
    payload = {
        "schema_version": SCHEMA_VERSION,
        "runspec": spec.to_dict(),
        "message": info,
        "summary": {
            "branch_count": len(reports),
            "expected_probability": expected,
            "probability_sum": prob_sum,
            "probability_violations": prob_violations,
            "selected_table": selected,
            "fidelity_violations": fid_violations,
            "fidelity_zero_branches": fidelity_zero,
            "min_fidelity_selected": min((fid_of(r) for r in reports), default=None),
            "pass": ok,
        },
        "branches": [
            {
                "branch_id": r.branch_id,
                "outcomes": [o.value for o in r.outcomes],
                "bits": list(r.bits),
                "parity": r.parity.value,
                "probability": r.probability,
                "fidelity_derived": r.fidelity_derived,
                "fidelity_paper": r.fidelity_paper,
                "final_derived": r.final_derived.value,
                "final_paper": r.final_paper.value,
            }
            for r in reports
        ],
    }
    report_mod.dump_json(payload, spec.out)
    if spec.out is not None:
        report_mod.write_enumerate_csv(reports, report_mod.sibling_path(spec.out, ".csv"))
        if spec.figures:
            report_mod.render_enumerate_figure(
                reports, expected, report_mod.sibling_path(spec.out, ".png")
            )
    return 0 if ok else 2


def _mode_reconcile(spec: RunSpec) -> int:
    variant = EprVariant(spec.epr)
    m = spec.m if spec.m is not None else 2
    # Smallest instance with the requested controller-count parity; the
    # final rule depends only on that parity.
    config = ProtocolConfig(n=1, m=m, epr_variant=variant)
    derived = derive_corrections(config)
    rec = reconcile(paper_table(variant), derived)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "runspec": spec.to_dict(),
        "reconciliation": rec.to_dict(),
    }
    if spec.out is None:
        report_mod.write_text(rec.to_text(), None)
    else:
        report_mod.dump_json(payload, spec.out)
        report_mod.write_text(rec.to_text(), report_mod.sibling_path(spec.out, ".txt"))
    return 0


def _mode_montecarlo(spec: RunSpec) -> int:
    rng = np.random.default_rng(spec.seed)
    config = _config(spec)
    message, info = _resolve_message(spec, rng)
    expected_p = expected_branch_probability(config)
    counts: dict[str, int] = {}
    min_fidelity = 1.0
    for _ in range(spec.trials):
        tr = run(config, message, rng=rng)
        outs = ":".join(o.value for o in tr.bell_outcomes())
        bits = "".join(str(b) for b in tr.controller_bits)
        counts[f"{outs}/{bits}"] = counts.get(f"{outs}/{bits}", 0) + 1
        if tr.fidelity is not None and tr.fidelity < min_fidelity:
            min_fidelity = tr.fidelity
    total_branches = (4 ** config.n) * (2 ** config.m)
    if total_branches <= 4096:
        universe = sorted(set(counts) | set(_all_branch_ids(config)))
    else:
        universe = sorted(counts)
    sigma = math.sqrt(spec.trials * expected_p * (1.0 - expected_p))
    rows = []
    for branch_id in universe:
        observed = counts.get(branch_id, 0)
        z = (observed - spec.trials * expected_p) / sigma
        rows.append(
            {
                "branch_id": branch_id,
                "observed": observed,
                "expected": spec.trials * expected_p,
                "zscore": z,
            }
        )
    max_abs_z = max((abs(row["zscore"]) for row in rows), default=0.0)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "runspec": spec.to_dict(),
        "message": info,
        "summary": {
            "trials": spec.trials,
            "branch_universe": total_branches,
            "branches_observed": len(counts),
            "expected_probability": expected_p,
            "max_abs_zscore": max_abs_z,
            "sigma_bound": 5.0,
            "within_bound": max_abs_z <= 5.0,
            "min_fidelity": min_fidelity,
        },
        "branches": rows,
    }
    report_mod.dump_json(payload, spec.out)
    if spec.out is not None:
        report_mod.write_montecarlo_csv(rows, report_mod.sibling_path(spec.out, ".csv"))
        if spec.figures:
            report_mod.render_montecarlo_figure(
                rows, spec.trials, report_mod.sibling_path(spec.out, ".png")
            )
    return 0


def _all_branch_ids(config: ProtocolConfig):
    for outs in itertools.product(BellOutcome, repeat=config.n):
        for bits in itertools.product("01", repeat=config.m):
            yield ":".join(o.value for o in outs) + "/" + "".join(bits)


_DISPATCH = {
    "run": _mode_run,
    "enumerate": _mode_enumerate,
    "reconcile": _mode_reconcile,
    "montecarlo": _mode_montecarlo,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        spec = spec_from_args(sys.argv[1:] if argv is None else argv)
        return _DISPATCH[spec.mode](spec)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
