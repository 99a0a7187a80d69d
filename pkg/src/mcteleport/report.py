"""Serialization of harness results: JSON, CSV, and rendered figures.

Reports are deterministic byte-for-byte for a fixed run spec: keys are
sorted, floats go through ``repr``, and nothing time- or host-dependent
is ever written. Figures are rendered with the Agg backend straight to
files; they sit alongside the delimited output, never on a screen.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path
from typing import Sequence

from .verify import BranchReport


def dump_json(payload: dict, out: str | None) -> None:
    """Write a report deterministically to ``out``, or stdout if None."""
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def sibling_path(out: str, suffix: str) -> str:
    return str(Path(out).with_suffix(suffix))


ENUMERATE_CSV_FIELDS = [
    "branch_id",
    "outcomes",
    "bits",
    "parity",
    "probability",
    "fidelity_derived",
    "fidelity_paper",
    "final_derived",
    "final_paper",
]


def write_enumerate_csv(reports: Sequence[BranchReport], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ENUMERATE_CSV_FIELDS)
        writer.writeheader()
        for r in reports:
            writer.writerow(
                {
                    "branch_id": r.branch_id,
                    "outcomes": ":".join(o.value for o in r.outcomes),
                    "bits": "".join(str(b) for b in r.bits),
                    "parity": r.parity.value,
                    "probability": repr(r.probability),
                    "fidelity_derived": repr(r.fidelity_derived),
                    "fidelity_paper": repr(r.fidelity_paper),
                    "final_derived": r.final_derived.value,
                    "final_paper": r.final_paper.value,
                }
            )


MONTECARLO_CSV_FIELDS = ["branch_id", "observed", "expected", "zscore"]


def write_montecarlo_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=MONTECARLO_CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    "branch_id": row["branch_id"],
                    "observed": row["observed"],
                    "expected": repr(row["expected"]),
                    "zscore": repr(row["zscore"]),
                }
            )


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_enumerate_figure(
    reports: Sequence[BranchReport], expected: float, path: str
) -> None:
    """Branch probabilities and per-branch infidelity under both rule sets."""
    plt = _pyplot()
    fig, (ax_p, ax_f) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True)
    idx = range(len(reports))
    ax_p.plot(idx, [r.probability for r in reports], ".", ms=3, color="tab:blue")
    ax_p.axhline(expected, color="black", lw=0.8, ls="--", label="uniform expectation")
    ax_p.set_ylabel("branch probability")
    ax_p.legend(loc="upper right", fontsize=8)

    floor = 1e-18  # keep exact zeros visible on the log axis
    inf_d = [max(1.0 - r.fidelity_derived, floor) for r in reports]
    inf_p = [max(1.0 - r.fidelity_paper, floor) for r in reports]
    ax_f.semilogy(idx, inf_d, ".", ms=3, color="tab:green", label="derived rules")
    ax_f.semilogy(idx, inf_p, ".", ms=3, color="tab:red", label="published rules")
    ax_f.axhline(1e-10, color="black", lw=0.8, ls=":", label="tolerance")
    ax_f.set_xlabel("branch index")
    ax_f.set_ylabel("1 - fidelity")
    ax_f.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_montecarlo_figure(rows: Sequence[dict], trials: int, path: str) -> None:
    """Observed branch counts against the uniform expectation, with z-scores."""
    plt = _pyplot()
    fig, (ax_c, ax_z) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True)
    idx = range(len(rows))
    ax_c.bar(idx, [row["observed"] for row in rows], width=0.8, color="tab:blue")
    if rows:
        ax_c.axhline(rows[0]["expected"], color="black", lw=0.8, ls="--", label="expected")
        ax_c.legend(loc="upper right", fontsize=8)
    ax_c.set_ylabel(f"observed counts ({trials} runs)")

    ax_z.plot(idx, [row["zscore"] for row in rows], ".", ms=4, color="tab:green")
    ax_z.axhline(5.0, color="tab:red", lw=0.8, ls=":")
    ax_z.axhline(-5.0, color="tab:red", lw=0.8, ls=":")
    ax_z.set_xlabel("branch index")
    ax_z.set_ylabel("z-score")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
