"""Symplectic linear algebra over R^{2n}.

The ambient object is a real vector space of even dimension carrying a
nondegenerate antisymmetric bilinear form sigma(xi, eta) = xi^T J eta.
Subspaces are stored as matrices with Euclidean-orthonormal columns, so
rank tests and subspace comparisons reduce to stable projector algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

# Numerical rank threshold, relative to the largest singular value.
RANK_TOL = 1e-10
# Orthonormality defect allowed in stored bases.
ORTHO_TOL = 1e-12
# Two subspaces are considered equal below this projector distance.
PROJ_TOL = 1e-9


class SymplecticError(ValueError):
    """Violated precondition in a symplectic-structure computation."""


def standard_form(n: int) -> np.ndarray:
    """Form matrix of the phase space R^n + (R^n)* in (x, k) coordinates.

    With xi = (x, k) and eta = (y, l) the form is sigma(xi, eta) = <y,k> - <x,l>.
    """
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


@dataclass(frozen=True)
class SymplecticSpace:
    """Even-dimensional real vector space with an antisymmetric invertible form."""

    form: np.ndarray

    def __post_init__(self):
        J = np.array(self.form, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise SymplecticError("form must be a square matrix")
        if J.shape[0] % 2 != 0 or J.shape[0] == 0:
            raise SymplecticError("form dimension must be even and positive")
        if not np.array_equal(J, -J.T):
            raise SymplecticError("form must be exactly antisymmetric")
        scale = np.abs(J).max()
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-12 * scale:
            raise SymplecticError("form is numerically degenerate")
        J.setflags(write=False)
        object.__setattr__(self, "form", J)

    @property
    def dim(self) -> int:
        return self.form.shape[0]

    def sigma(self, xi: np.ndarray, eta: np.ndarray) -> float:
        """Evaluate the form on a pair of vectors.

        Computed in antisymmetrized shape so sigma(xi, xi) is exactly zero
        and sigma(xi, eta) = -sigma(eta, xi) holds at bit level.
        """
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if xi.shape != (self.dim,) or eta.shape != (self.dim,):
            raise SymplecticError(
                f"vectors must have length {self.dim}, got {xi.shape} and {eta.shape}"
            )
        return 0.5 * (float(xi @ self.form @ eta) - float(eta @ self.form @ xi))


def standard_space(n: int) -> SymplecticSpace:
    return SymplecticSpace(standard_form(n))


def _orthonormalize(columns: np.ndarray, dim: int, floor: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the column space, rank cut at RANK_TOL.

    `floor` is an absolute singular-value cutoff for callers whose inputs
    are unit-scale differences: without it a matrix of pure roundoff noise
    would pass the relative test with rank one.
    """
    cols = np.asarray(columns, dtype=float).reshape(dim, -1)
    if cols.shape[1] == 0:
        return np.zeros((dim, 0))
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((dim, 0))
    cut = max(RANK_TOL * s[0], floor)
    rank = int(np.sum(s > cut))
    return u[:, :rank]


@dataclass(frozen=True)
class Subspace:
    """Linear subspace given by a Euclidean-orthonormal basis matrix.

    The zero subspace is represented by a (2n, 0) basis.
    """

    ambient: SymplecticSpace
    basis: np.ndarray

    def __post_init__(self):
        B = np.array(self.basis, dtype=float).reshape(self.ambient.dim, -1)
        k = B.shape[1]
        if k > self.ambient.dim:
            raise SymplecticError("subspace dimension exceeds ambient dimension")
        if k > 0:
            gram = B.T @ B
            if np.abs(gram - np.eye(k)).max() > ORTHO_TOL:
                raise SymplecticError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains_vector(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=float)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            return True
        return np.linalg.norm(v - self.projector() @ v) <= tol * nrm


def subspace(ambient: SymplecticSpace, vectors) -> Subspace:
    """Subspace spanned by the given vectors (rows or list of vectors)."""
    arr = np.asarray(vectors, dtype=float)
    if arr.size == 0:
        return Subspace(ambient, np.zeros((ambient.dim, 0)))
    if arr.ndim == 1:
        arr = arr[None, :]
    return Subspace(ambient, _orthonormalize(arr.T, ambient.dim))


def zero_subspace(ambient: SymplecticSpace) -> Subspace:
    return Subspace(ambient, np.zeros((ambient.dim, 0)))


def full_subspace(ambient: SymplecticSpace) -> Subspace:
    return Subspace(ambient, np.eye(ambient.dim))


def subspace_distance(E: Subspace, F: Subspace) -> float:
    """Spectral distance between orthogonal projectors."""
    _check_same_ambient(E, F)
    return float(np.linalg.norm(E.projector() - F.projector(), 2))


def subspace_equal(E: Subspace, F: Subspace, tol: float = PROJ_TOL) -> bool:
    return subspace_distance(E, F) <= tol


def subspace_leq(E: Subspace, F: Subspace, tol: float = 1e-8) -> bool:
    """Inclusion E <= F, tested as ||(1 - P_F) B_E|| below tol."""
    _check_same_ambient(E, F)
    if E.dim == 0:
        return True
    if E.dim > F.dim:
        return False
    resid = E.basis - F.projector() @ E.basis
    return float(np.linalg.norm(resid, 2)) <= tol


def _check_same_ambient(E: Subspace, F: Subspace):
    if E.ambient.dim != F.ambient.dim or not np.array_equal(
        E.ambient.form, F.ambient.form
    ):
        raise SymplecticError("subspaces live in different ambient spaces")


def sigma(space: SymplecticSpace, xi, eta) -> float:
    return space.sigma(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))


def sigma_complement(E: Subspace) -> Subspace:
    """The sigma-orthogonal complement {xi : sigma(xi, eta) = 0 for all eta in E}."""
    space = E.ambient
    if E.dim == 0:
        return full_subspace(space)
    # xi in E^sigma iff (J B_E)^T xi = 0.
    A = (space.form @ E.basis).T
    ker = null_space(A, rcond=RANK_TOL)
    return Subspace(space, _orthonormalize(ker, space.dim))


def classify(E: Subspace) -> str:
    """One of 'lagrangian', 'symplectic', 'isotropic', 'involutive', 'generic'.

    A Lagrangian subspace is reported as such even though it is also
    isotropic and involutive; the trivial intersection test takes
    precedence over the inclusion tests so that 'symplectic' is returned
    exactly when E and E^sigma intersect trivially.
    """
    Es = sigma_complement(E)
    if subspace_equal(E, Es):
        return "lagrangian"
    if lattice_intersect(E, Es).dim == 0:
        return "symplectic"
    if subspace_leq(E, Es):
        return "isotropic"
    if subspace_leq(Es, E):
        return "involutive"
    return "generic"


def lattice_sum(E: Subspace, F: Subspace) -> Subspace:
    """Least upper bound E + F in the subspace lattice."""
    _check_same_ambient(E, F)
    cols = np.hstack([E.basis, F.basis])
    return Subspace(E.ambient, _orthonormalize(cols, E.ambient.dim))


def lattice_intersect(E: Subspace, F: Subspace) -> Subspace:
    """Greatest lower bound E ∩ F in the subspace lattice."""
    _check_same_ambient(E, F)
    if E.dim == 0 or F.dim == 0:
        return zero_subspace(E.ambient)
    # Solve B_E a = B_F b; the intersection is spanned by the B_E a parts.
    stacked = np.hstack([E.basis, -F.basis])
    ker = null_space(stacked, rcond=RANK_TOL)
    if ker.shape[1] == 0:
        return zero_subspace(E.ambient)
    vecs = E.basis @ ker[: E.dim, :]
    return Subspace(E.ambient, _orthonormalize(vecs, E.ambient.dim))


def symplectic_basis(space: SymplecticSpace) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairs (xi_i, eta_i) with sigma(xi_i, eta_j) = delta_ij and all
    other pairings zero, found by symplectic Gram-Schmidt.

    Ties are broken by picking the candidate of largest Euclidean norm
    after deflation; a final re-deflation pass scrubs the pairing
    residuals accumulated on badly conditioned forms.
    """
    J = space.form

    def deflate(vecs, xi, eta):
        sig_v_eta = vecs.T @ (J @ eta)
        sig_v_xi = vecs.T @ (J @ xi)
        return vecs - np.outer(xi, sig_v_eta) + np.outer(eta, sig_v_xi)

    cand = np.eye(space.dim)
    pairs = []
    while cand.shape[1] > 0:
        norms = np.linalg.norm(cand, axis=0)
        i = int(np.argmax(norms))
        xi = cand[:, i] / norms[i]
        svals = cand.T @ (J.T @ xi)  # sigma(xi, cand_j)
        j = int(np.argmax(np.abs(svals)))
        s = float(xi @ J @ cand[:, j])
        if abs(s) <= RANK_TOL:
            raise SymplecticError("form is degenerate on the residual subspace")
        eta = cand[:, j] / s  # sigma(xi, eta) = 1
        pairs.append((xi.copy(), eta.copy()))
        cand = _orthonormalize(deflate(cand, xi, eta), space.dim, floor=1e-10)

    for _ in range(2):  # quadratic cleanup of cross pairings
        for i in range(len(pairs)):
            xi, eta = pairs[i]
            eta = eta / space.sigma(xi, eta)
            for j in range(i + 1, len(pairs)):
                xj, ej = pairs[j]
                xj = deflate(xj[:, None], xi, eta)[:, 0]
                ej = deflate(ej[:, None], xi, eta)[:, 0]
                pairs[j] = (xj, ej)
            pairs[i] = (xi, eta)
    return pairs


@dataclass(frozen=True)
class PhaseSpaceSplit:
    """Holonomic decomposition Xi = X + X* into complementary Lagrangians.

    `pairing` realizes <x, k> = sigma(k, x) in the stored coordinates:
    for x = X.basis @ a and k = Xstar.basis @ b one has <x, k> = b^T pairing a.
    """

    X: Subspace
    Xstar: Subspace
    pairing: np.ndarray

    def __post_init__(self):
        P = np.array(self.pairing, dtype=float)
        P.setflags(write=False)
        object.__setattr__(self, "pairing", P)
        n = self.X.ambient.dim // 2
        if self.X.dim != n or self.Xstar.dim != n:
            raise SymplecticError("split factors must have half the ambient dimension")
        for S in (self.X, self.Xstar):
            G = S.basis.T @ self.X.ambient.form @ S.basis
            if np.abs(G).max() > 1e-12:
                raise SymplecticError("split factor is not Lagrangian")
        if lattice_intersect(self.X, self.Xstar).dim != 0:
            raise SymplecticError("split factors must intersect trivially")

    @property
    def ambient(self) -> SymplecticSpace:
        return self.X.ambient

    def coords(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates (a, b) of xi = X.basis @ a + Xstar.basis @ b."""
        M = np.hstack([self.X.basis, self.Xstar.basis])
        ab = np.linalg.solve(M, np.asarray(xi, dtype=float))
        n = self.X.dim
        return ab[:n], ab[n:]

    def assemble(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.X.basis @ np.asarray(a, float) + self.Xstar.basis @ np.asarray(b, float)


def holonomic_split(space: SymplecticSpace) -> PhaseSpaceSplit:
    """Split derived from a symplectic basis: X from the second members."""
    pairs = symplectic_basis(space)
    X = subspace(space, [eta for _, eta in pairs])
    Xstar = subspace(space, [xi for xi, _ in pairs])
    pairing = Xstar.basis.T @ space.form @ X.basis
    return PhaseSpaceSplit(X=X, Xstar=Xstar, pairing=pairing)


def standard_split(space: SymplecticSpace) -> PhaseSpaceSplit:
    """Coordinate split X = span(e_1..e_n), X* = span(e_{n+1}..e_{2n}).

    Valid whenever both factors are Lagrangian for the ambient form,
    in particular for `standard_space`.  The coordinate bases are kept
    verbatim so the pairing comes out as the identity there.
    """
    n = space.dim // 2
    X = Subspace(space, np.eye(space.dim)[:, :n])
    Xstar = Subspace(space, np.eye(space.dim)[:, n:])
    pairing = Xstar.basis.T @ space.form @ X.basis
    return PhaseSpaceSplit(X=X, Xstar=Xstar, pairing=pairing)


@dataclass(frozen=True)
class CentralizerSplit:
    """Decomposition Xi = E + F + K induced by a subspace E.

    Ec = E ∩ E^sigma is the centralizer, G and F are symplectic with
    E = G + Ec and E^sigma = F + Ec, and K is a Lagrangian complement
    of Ec inside the symplectic space (G + F)^sigma.
    """

    E: Subspace
    G: Subspace
    F: Subspace
    Ec: Subspace
    K: Subspace


def _complement_within(total: Subspace, part: Subspace) -> Subspace:
    """Euclidean-orthogonal complement of `part` inside `total`."""
    if part.dim == 0:
        return total
    resid = total.basis - part.projector() @ total.basis
    # unit-scale residuals: cut absolute noise, not just relative rank
    return Subspace(total.ambient, _orthonormalize(resid, total.ambient.dim, floor=1e-9))


def centralizer_split(E: Subspace) -> CentralizerSplit:
    space = E.ambient
    Es = sigma_complement(E)
    Ec = lattice_intersect(E, Es)
    G = _complement_within(E, Ec)
    F = _complement_within(Es, Ec)
    H = lattice_sum(G, F)
    Hs = sigma_complement(H)
    if Ec.dim == 0:
        K = zero_subspace(space)
    else:
        # Inside Hs the form is symplectic and Ec is Lagrangian. The
        # orthogonal polar factor Q of the restricted form satisfies
        # Q^2 = -1 and maps Ec onto a Lagrangian complement.
        A = Hs.basis.T @ space.form @ Hs.basis
        u, _, vt = np.linalg.svd(A)
        Q = u @ vt
        C = Hs.basis.T @ Ec.basis
        K = Subspace(space, _orthonormalize(Hs.basis @ (Q @ C), space.dim))
    return CentralizerSplit(E=E, G=G, F=F, Ec=Ec, K=K)
