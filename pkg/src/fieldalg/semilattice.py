"""Finite join-closed families of subspaces with Moebius inversion.

Elements are deduplicated by projector distance; order is inclusion and
join is subspace sum. The Moebius table is computed in exact integer
arithmetic so inversion of cumulative projection families is free of
floating error in the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symplectic import (
    Subspace,
    SymplecticError,
    lattice_sum,
    subspace_distance,
    subspace_leq,
    zero_subspace,
)

DEDUP_TOL = 1e-9
MAX_CLOSURE = 4096


class SemilatticeError(ValueError):
    pass


@dataclass
class FiniteSemilattice:
    """Join-closed list of subspaces with precomputed order and join tables."""

    elements: list[Subspace]
    leq: np.ndarray  # bool, leq[a, b] means elements[a] <= elements[b]
    join: np.ndarray  # int, join[a, b] = index of elements[a] + elements[b]

    def __post_init__(self):
        self.leq.setflags(write=False)
        self.join.setflags(write=False)

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, E: Subspace, tol: float = DEDUP_TOL) -> int:
        for i, X in enumerate(self.elements):
            if subspace_distance(X, E) <= tol:
                return i
        raise SemilatticeError("subspace is not an element of the semilattice")

    def max_index(self) -> int | None:
        n = len(self.elements)
        for w in range(n):
            if all(self.leq[a, w] for a in range(n)):
                return w
        return None

    def dims(self) -> list[int]:
        return [E.dim for E in self.elements]


def closure(seeds: list[Subspace]) -> FiniteSemilattice:
    """Smallest join-closed family containing the seeds and the zero subspace."""
    if not seeds:
        raise SemilatticeError("need at least one seed subspace")
    ambient = seeds[0].ambient
    elements: list[Subspace] = [zero_subspace(ambient)]

    def find(E: Subspace) -> int:
        for i, X in enumerate(elements):
            if subspace_distance(X, E) <= DEDUP_TOL:
                return i
        return -1

    def add(E: Subspace) -> int:
        i = find(E)
        if i >= 0:
            return i
        elements.append(E)
        if len(elements) > MAX_CLOSURE:
            raise SemilatticeError("join closure exceeded the size cap")
        return len(elements) - 1

    for E in seeds:
        add(E)
    # Worklist closure under pairwise joins.
    changed = True
    while changed:
        changed = False
        current = list(elements)
        for i, A in enumerate(current):
            for B in current[i + 1 :]:
                S = lattice_sum(A, B)
                if find(S) < 0:
                    add(S)
                    changed = True

    n = len(elements)
    leq = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(n):
            leq[a, b] = subspace_leq(elements[a], elements[b])
    join = np.zeros((n, n), dtype=int)
    for a in range(n):
        for b in range(a, n):
            idx = find(lattice_sum(elements[a], elements[b]))
            if idx < 0:
                raise SemilatticeError("closure failed to contain a pairwise join")
            join[a, b] = join[b, a] = idx
    return FiniteSemilattice(elements=elements, leq=leq, join=join)


@dataclass
class MoebiusTable:
    """Integer Moebius function mu(a, b), defined for a <= b (zero elsewhere)."""

    table: np.ndarray

    def __post_init__(self):
        self.table.setflags(write=False)

    def __getitem__(self, ab) -> int:
        a, b = ab
        return int(self.table[a, b])


def moebius(S: FiniteSemilattice) -> MoebiusTable:
    """Moebius function by the interval recursion mu(a,b) = -sum_{a<=c<b} mu(a,c)."""
    n = len(S)
    order = np.argsort([E.dim for E in S.elements], kind="stable")
    mu = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        mu[a, a] = 1
        for b in order:
            if b == a or not S.leq[a, b]:
                continue
            acc = 0
            for c in range(n):
                if c != b and S.leq[a, c] and S.leq[c, b]:
                    acc += mu[a, c]
            mu[a, b] = -acc
    return MoebiusTable(table=mu)


@dataclass
class SubIdeals:
    """Partition of a semilattice relative to one element."""

    below: list[int]  # indices b with b <= a
    not_below: list[int]
    co_atoms: list[int]  # co-atoms of the maximal element, if one exists
    max_index: int | None


def sub_ideals(S: FiniteSemilattice, a: int) -> SubIdeals:
    n = len(S)
    if not 0 <= a < n:
        raise SemilatticeError(f"index {a} is not an element of the semilattice")
    below = [b for b in range(n) if S.leq[b, a]]
    not_below = [b for b in range(n) if not S.leq[b, a]]
    w = S.max_index()
    co_atoms: list[int] = []
    if w is not None:
        for b in range(n):
            if b == w or not S.leq[b, w]:
                continue
            covered = any(
                c != b and c != w and S.leq[b, c] and S.leq[c, w] for c in range(n)
            )
            if not covered:
                co_atoms.append(b)
    return SubIdeals(below=below, not_below=not_below, co_atoms=co_atoms, max_index=w)


def moebius_invert(S: FiniteSemilattice, family=None):
    """Coefficients recovering graded components from cumulative maps.

    For a family of cumulative maps P_a = sum_{b <= a} C(b), the component
    at b is C(b) = sum_{a <= b} mu(a, b) P_a.  Returns, per element b, the
    integer coefficient dictionary {a: mu(a, b)} over {a : a <= b}.

    When `family` (a dict index -> matrix, defined on all of S) is given,
    the combination is applied and the recovered components are returned
    instead.
    """
    mu = moebius(S)
    n = len(S)
    coeffs = []
    for b in range(n):
        coeffs.append({a: mu[a, b] for a in range(n) if S.leq[a, b] and mu[a, b] != 0})
    if family is None:
        return coeffs
    missing = [a for a in range(n) if a not in family]
    if missing:
        raise SemilatticeError(f"family is missing elements at indices {missing}")
    recovered = {}
    for b in range(n):
        acc = None
        for a, c in coeffs[b].items():
            term = c * family[a]
            acc = term if acc is None else acc + term
        recovered[b] = acc
    return recovered


def cumulative_sums(S: FiniteSemilattice, components: dict) -> dict:
    """Zeta transform F(a) = sum_{b <= a} f(b) of a component family."""
    out = {}
    for a in range(len(S)):
        acc = None
        for b in range(len(S)):
            if S.leq[b, a] and b in components:
                acc = components[b] if acc is None else acc + components[b]
        if acc is None:
            raise SemilatticeError("component family is empty below some element")
        out[a] = acc
    return out
