"""File formats: subspaces and forms as JSON, semilattice dumps, twisted
elements as JSON headers plus little-endian complex64 payloads, operator
dumps as raw binaries with JSON sidecars, and representation descriptor
strings.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .reps import FiniteWeylRep, GridRep, RegularGridRep, grid_rep, regular_rep
from .semilattice import FiniteSemilattice, moebius
from .symplectic import Subspace, SymplecticSpace
from .twisted import DensityOnSubspace, DiracComb, TwistedElement


class SerializeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Subspaces


def space_to_json(space: SymplecticSpace) -> dict:
    return {"ambient_dim": space.dim, "form": space.form.ravel().tolist()}


def space_from_json(obj: dict) -> SymplecticSpace:
    n = int(obj["ambient_dim"])
    return SymplecticSpace(np.array(obj["form"], dtype=float).reshape(n, n))


def subspace_to_json(E: Subspace) -> dict:
    return {
        "ambient_dim": E.ambient.dim,
        "form": E.ambient.form.ravel().tolist(),
        "basis": E.basis.ravel().tolist(),
        "dim": E.dim,
    }


def subspace_from_json(obj: dict) -> Subspace:
    space = space_from_json(obj)
    k = int(obj["dim"])
    basis = np.array(obj["basis"], dtype=float).reshape(space.dim, k)
    return Subspace(space, basis)


# ---------------------------------------------------------------------------
# Semilattices


def semilattice_to_json(S: FiniteSemilattice) -> dict:
    mu = moebius(S)
    sparse = [
        [a, b, int(mu[a, b])]
        for a in range(len(S))
        for b in range(len(S))
        if S.leq[a, b] and mu[a, b] != 0
    ]
    return {
        "elements": [subspace_to_json(E) for E in S.elements],
        "order": S.leq.astype(int).tolist(),
        "join": S.join.tolist(),
        "moebius": sparse,
    }


def semilattice_from_json(obj: dict) -> FiniteSemilattice:
    elements = [subspace_from_json(e) for e in obj["elements"]]
    leq = np.array(obj["order"], dtype=bool)
    join = np.array(obj["join"], dtype=int)
    return FiniteSemilattice(elements=elements, leq=leq, join=join)


# ---------------------------------------------------------------------------
# Twisted elements: JSON header + one .bin per density


def save_twisted(mu: TwistedElement, prefix: str) -> str:
    header = {
        "ambient": space_to_json(mu.ambient),
        "atoms": {
            "points": mu.comb.points.ravel().tolist(),
            "coeffs_re": mu.comb.coeffs.real.tolist(),
            "coeffs_im": mu.comb.coeffs.imag.tolist(),
        },
        "densities": [],
    }
    for i, d in enumerate(mu.densities):
        binname = f"{os.path.basename(prefix)}.d{i:02d}.bin"
        arr = d.samples.astype("<c8")
        arr.tofile(f"{prefix}.d{i:02d}.bin")
        header["densities"].append(
            {
                "support": subspace_to_json(d.support),
                "count": d.count,
                "half_width": d.half_width,
                "offset": d.offset.tolist(),
                "bin": binname,
                "dtype": "complex64-le",
            }
        )
    path = f"{prefix}.json"
    with open(path, "w") as f:
        json.dump(header, f, indent=1, sort_keys=True)
    return path


def load_twisted(prefix: str) -> TwistedElement:
    with open(f"{prefix}.json") as f:
        header = json.load(f)
    space = space_from_json(header["ambient"])
    pts = np.array(header["atoms"]["points"], dtype=float).reshape(-1, space.dim)
    cs = np.array(header["atoms"]["coeffs_re"]) + 1j * np.array(
        header["atoms"]["coeffs_im"]
    )
    comb = DiracComb(space, pts, cs if cs.size else np.zeros(0, complex))
    dens = []
    dirname = os.path.dirname(prefix)
    for entry in header["densities"]:
        supp = subspace_from_json(entry["support"])
        binpath = os.path.join(dirname, entry["bin"]) if dirname else entry["bin"]
        raw = np.fromfile(binpath, dtype="<c8").astype(complex)
        dens.append(
            DensityOnSubspace(
                support=supp,
                count=int(entry["count"]),
                half_width=float(entry["half_width"]),
                samples=raw,
                offset=np.array(entry["offset"], dtype=float),
            )
        )
    return TwistedElement(comb=comb, densities=tuple(dens))


# ---------------------------------------------------------------------------
# Operator dumps: raw complex64 + JSON sidecar


def save_operator(matrix: np.ndarray, rep, prefix: str, flags: dict | None = None):
    arr = np.ascontiguousarray(matrix.astype("<c8"))
    arr.tofile(f"{prefix}.bin")
    sidecar = {
        "rep": rep.descriptor() if rep is not None else None,
        "shape": list(matrix.shape),
        "dtype": "complex64-le",
        "order": "row-major",
    }
    sidecar.update(flags or {})
    with open(f"{prefix}.json", "w") as f:
        json.dump(sidecar, f, indent=1, sort_keys=True)


def load_operator(prefix: str):
    with open(f"{prefix}.json") as f:
        sidecar = json.load(f)
    shape = tuple(sidecar["shape"])
    mat = np.fromfile(f"{prefix}.bin", dtype="<c8").reshape(shape).astype(complex)
    return mat, sidecar


# ---------------------------------------------------------------------------
# Representation descriptors


def format_descriptor(rep) -> str:
    d = rep.descriptor()
    if d["kind"] == "grid":
        return f"grid:d={d['d']},m={d['m']},L={d['L']:g}"
    if d["kind"] == "finweyl":
        return f"finweyl:N={d['N']},d={d['d']}"
    if d["kind"] == "regular":
        return f"regular:n={d['n']},m={d['m']},L={d['L']:g}"
    raise SerializeError(f"unknown representation kind {d['kind']!r}")


def parse_descriptor(text: str):
    try:
        kind, rest = text.split(":", 1)
        fields = dict(item.split("=", 1) for item in rest.split(","))
    except ValueError as exc:
        raise SerializeError(f"malformed representation descriptor {text!r}") from exc
    if kind == "grid":
        return grid_rep(
            d=int(fields["d"]), m=int(fields["m"]), half_width=float(fields["L"])
        )
    if kind == "finweyl":
        return FiniteWeylRep(N=int(fields["N"]), d=int(fields["d"]))
    if kind == "regular":
        return regular_rep(
            n=int(fields["n"]), m=int(fields["m"]), half_width=float(fields["L"])
        )
    raise SerializeError(f"unknown representation kind {kind!r}")
