"""Deterministic report emission.

JSON reports are written through a canonical serializer: sorted keys and
every float printed at 17 significant digits, so identical inputs give
byte-identical files.  CSV companions and columnar plot data follow the
same float format.  Figures are rendered with the Agg backend next to the
delimited output.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np


def _fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(float(x), ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """JSON text with sorted keys and fixed-precision floats."""
    pad = " " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return canonical_json({"re": float(obj.real), "im": float(obj.imag)})
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return canonical_json(obj.tolist())
    if isinstance(obj, (list, tuple)):
        inner = ", ".join(canonical_json(x) for x in obj)
        return f"[{inner}]"
    if isinstance(obj, dict):
        items = []
        for k in sorted(obj.keys(), key=str):
            items.append(f'"{k}": ' + canonical_json(obj[k]))
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_report(outdir: str, payload: dict, name: str = "report.json") -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    with open(path, "w") as f:
        f.write(canonical_json(payload))
        f.write("\n")
    return path


def write_csv(outdir: str, name: str, header: list, rows) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for x in row:
                if isinstance(x, (float, np.floating)):
                    cells.append(format(float(x), ".17g"))
                else:
                    cells.append(str(x))
            f.write(",".join(cells) + "\n")
    return path


def write_plotdata(outdir: str, name: str, columns: dict) -> str:
    """Whitespace-delimited x/y columns under plotdata/."""
    pdir = os.path.join(outdir, "plotdata")
    os.makedirs(pdir, exist_ok=True)
    path = os.path.join(pdir, name)
    keys = list(columns.keys())
    arrays = [np.asarray(columns[k], dtype=float) for k in keys]
    with open(path, "w") as f:
        f.write("# " + " ".join(keys) + "\n")
        for i in range(len(arrays[0])):
            f.write(" ".join(format(a[i], ".17g") for a in arrays) + "\n")
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def figure_residual_curves(outdir: str, name: str, x, curves: dict, xlabel: str, ylabel: str, logy: bool = True) -> str:
    plt = _pyplot()
    os.makedirs(outdir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, y in curves.items():
        y = np.asarray(y, dtype=float)
        if logy:
            y = np.maximum(y, 1e-18)
            ax.semilogy(x, y, marker="o", label=label)
        else:
            ax.plot(x, y, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def figure_spectrum(outdir: str, name: str, intervals, discrete, eigenvalues) -> str:
    plt = _pyplot()
    os.makedirs(outdir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 2.8))
    for lo, hi in intervals:
        ax.axvspan(lo, hi, color="tab:blue", alpha=0.3)
    ev = np.asarray(eigenvalues, dtype=float)
    ax.plot(ev, np.zeros_like(ev), "k|", markersize=10, alpha=0.5)
    dv = np.asarray(discrete, dtype=float)
    if dv.size:
        ax.plot(dv, np.zeros_like(dv), "rv", markersize=8)
    ax.set_yticks([])
    ax.set_xlabel("energy")
    fig.tight_layout()
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
