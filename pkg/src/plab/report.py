"""Deterministic report writers: CSV, JSON, gnuplot tables, and figures.

All delimited output is written with 17-significant-digit decimals and sorted
keys so identical runs produce identical bytes. Figures (PNG, via the Agg
backend) are rendered next to the delimited files when requested; they carry
no timestamps.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header_comments, columns, rows) -> None:
    """rows: iterable of tuples aligned with `columns`."""
    path = Path(path)
    with open(path, "w") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_table(path, header_comments, columns, rows) -> None:
    """Gnuplot-ready whitespace table with a commented header."""
    path = Path(path)
    with open(path, "w") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


class _JsonEncoder(json.JSONEncoder):
    def default(self, o):
        try:
            import numpy as np
            if isinstance(o, (np.floating, np.integer)):
                return o.item()
            if isinstance(o, np.ndarray):
                return o.tolist()
        except ImportError:  # pragma: no cover
            pass
        return super().default(o)


def write_json(path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=1, cls=_JsonEncoder,
                   allow_nan=True) + "\n")


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def decay_figure(path, chains, title) -> None:
    """Log-log oscillation profiles with their fitted slopes."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for chain in chains:
        radii = [r for r, o in zip(chain["radii"], chain["osc"]) if o > 0]
        osc = [o for o in chain["osc"] if o > 0]
        if not radii:
            continue
        label = f"beta={chain['beta']:.2f}" if chain.get("beta") == chain.get("beta") else None
        ax.loglog(radii, osc, "o-", ms=3, lw=0.9, alpha=0.75, label=label)
    ax.set_xlabel("ball radius t")
    ax.set_ylabel("oscillation")
    ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", lw=0.3, alpha=0.5)
    if 0 < len(chains) <= 6 and ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    _save(fig, path)


def seminorm_figure(path, rows, title) -> None:
    """Per-scale ladder terms a_j for each report row."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for row in rows:
        a = row.get("per_scale", [])
        if not a:
            continue
        ax.semilogy(range(len(a)), a, "s-", ms=3, lw=0.9,
                    label=f"s={row['s']:g} rho={row['rho']:g} q={row['q']:g}")
    ax.set_xlabel("dyadic scale index j")
    ax.set_ylabel("a_j")
    ax.set_title(title, fontsize=10)
    ax.grid(True, lw=0.3, alpha=0.5)
    ax.legend(fontsize=7)
    _save(fig, path)


def transfer_figure(path, rows, title) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ratios = [r["ratio"] for r in rows]
    ax.bar(range(len(ratios)), ratios, color="#4878d0")
    ax.set_xlabel("suite case")
    ax.set_ylabel("LHS / RHS")
    ax.set_title(title, fontsize=10)
    ax.grid(True, axis="y", lw=0.3, alpha=0.5)
    _save(fig, path)


def convergence_figure(path, record, title) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    its = [row["iter"] for row in record["iterations"]]
    res = [max(row["residual"], 1e-17) for row in record["iterations"]]
    ax.semilogy(its, res, "o-", ms=3)
    ax.set_xlabel("Newton iteration")
    ax.set_ylabel("flux-balance defect")
    ax.set_title(title, fontsize=10)
    ax.grid(True, lw=0.3, alpha=0.5)
    _save(fig, path)
