"""Hamiltonians with cluster structure and their essential spectra.

The computed essential spectrum of a graded Hamiltonian is the union of
the spectra of its co-atom sub-Hamiltonians; on a finite grid this is a
definition under test, validated against independent large-box estimates
and against the dynamic strong-limit characterization of the projected
operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, eigsh

from .grading import direction_search, GradingError
from .reps import GridRep, frame_distance, gaussian_frame
from .semilattice import FiniteSemilattice, closure
from .symplectic import Subspace, sigma_complement, subspace


class SpectraError(ValueError):
    pass


HERMITICITY_TOL = 1e-8


def spectrum(H: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix."""
    H = np.asarray(H)
    scale = max(1.0, float(np.linalg.norm(H, np.inf)))
    if float(np.linalg.norm(H - H.conj().T, np.inf)) > tol * scale:
        raise SpectraError("matrix is not Hermitian within tolerance")
    if np.iscomplexobj(H) and np.abs(H.imag).max() <= 1e-14 * scale:
        H = H.real
    return np.sort(scipy.linalg.eigvalsh(0.5 * (H + H.conj().T)))


def laplacian_delta_e(rep: GridRep, E: Subspace, basis=None) -> np.ndarray:
    """Sum of squared field operators over an orthonormal basis of E.

    The result is basis independent: any two orthonormal bases of E give
    the same matrix up to roundoff.
    """
    from .reps import field_op

    if basis is None:
        basis = E.basis.T
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    gram = basis @ basis.T
    if np.abs(gram - np.eye(basis.shape[0])).max() > 1e-10:
        raise SpectraError("basis must be orthonormal")
    for v in basis:
        if not E.contains_vector(v):
            raise SpectraError("basis vectors must lie in the subspace")
    if basis.shape[0] != E.dim:
        raise SpectraError("basis must span the subspace")
    acc = np.zeros((rep.hilbert_dim, rep.hilbert_dim), dtype=complex)
    for v in basis:
        phi = field_op(rep, v)
        acc += phi @ phi
    return 0.5 * (acc + acc.conj().T)


# ---------------------------------------------------------------------------
# Cluster Hamiltonians


def kinetic_matrix(rep: GridRep, dispersion) -> np.ndarray:
    """Dense h(p) built by applying the Fourier multiplier to basis columns."""
    m, d, M = rep.m, rep.d, rep.hilbert_dim
    hvals = np.asarray(dispersion(rep.freq_mesh()), dtype=float).reshape((m,) * d)
    out = np.empty((M, M), dtype=complex)
    block = max(1, (1 << 22) // M)
    eye = np.eye(M)
    for start in range(0, M, block):
        stop = min(M, start + block)
        cols = eye[:, start:stop].reshape((m,) * d + (stop - start,))
        hat = np.fft.fftn(cols, axes=tuple(range(d)))
        hat *= hvals[..., None]
        out[:, start:stop] = np.fft.ifftn(hat, axes=tuple(range(d))).reshape(
            M, stop - start
        )
    return 0.5 * (out + out.conj().T)


@dataclass
class ClusterPotential:
    """One interaction term: multiplication by v composed with the quotient map."""

    name: str
    basis: np.ndarray  # (k, d) rows spanning Y inside X coordinates
    values: np.ndarray  # diagonal values on the position mesh
    mu: float  # form bound H(Y) >= -mu H_X - nu
    nu: float
    lattice_index: int  # index of Y^sigma in the semilattice


@dataclass
class GradedHamiltonian:
    rep: GridRep
    kinetic: np.ndarray
    kinetic_values: np.ndarray  # dispersion sampled on the momentum mesh
    clusters: list
    matrix: np.ndarray
    semilattice: FiniteSemilattice
    commutation_residuals: dict

    def sub_hamiltonian(self, name: str) -> np.ndarray:
        """H_Y = h(p) + sum of the potentials attached to clusters above Y."""
        target = None
        for c in self.clusters:
            if c.name == name:
                target = c
        if target is None:
            raise SpectraError(f"unknown cluster {name!r}")
        H = self.kinetic.copy()
        for c in self.clusters:
            if _contains_rows(c.basis, target.basis):
                H[np.diag_indices_from(H)] += c.values
        return H

    def cluster_names(self) -> list:
        return [c.name for c in self.clusters]


def _contains_rows(big: np.ndarray, small: np.ndarray) -> bool:
    """Row-space containment small <= big for row bases in X coordinates."""
    if small.shape[0] == 0:
        return True
    if big.shape[0] == 0:
        return False
    Pb = big.T @ np.linalg.pinv(big.T)
    resid = small.T - Pb @ small.T
    return float(np.linalg.norm(resid, 2)) <= 1e-8


def _orthonormal_rows(rows: np.ndarray, d: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=float).reshape(-1, d)
    if rows.shape[0] == 0:
        return rows
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
    return vt[:rank]


def _certify_form_bound(rep: GridRep, values: np.ndarray, kin_freqs: np.ndarray):
    """Record (mu, nu) with H(Y) >= -mu H_X - nu and certify it.

    Sampled potentials act by multiplication, so mu = 0 and nu = -min(V)
    is the recorded pair, and V + nu >= 0 is certified by its smallest
    eigenvalue, exact for a diagonal operator.  The Lanczos path handles a
    nonzero mu, where the bound couples to the kinetic part.
    """
    mu = 0.0
    nu = float(max(0.0, -values.min()))
    if mu == 0.0:
        lam_min = float(values.min() + nu)
    else:
        m, d, M = rep.m, rep.d, rep.hilbert_dim

        def matvec(v):
            v = v.astype(complex)
            out = (values + nu) * v
            vhat = np.fft.fftn(v.reshape((m,) * d), axes=tuple(range(d)))
            vhat *= (mu * kin_freqs).reshape((m,) * d)
            return out + np.fft.ifftn(vhat, axes=tuple(range(d))).reshape(-1)

        op = LinearOperator((rep.hilbert_dim,) * 2, matvec=matvec, dtype=complex)
        v0 = np.full(rep.hilbert_dim, 1.0 / np.sqrt(rep.hilbert_dim))
        lam = eigsh(op, k=1, which="SA", v0=v0, tol=1e-7, return_eigenvectors=False)
        lam_min = float(lam[0])
    if lam_min < -1e-9 * max(1.0, nu):
        raise SpectraError("certified form bound failed its eigenvalue check")
    return mu, nu


def nbody_hamiltonian(
    rep: GridRep,
    clusters,
    dispersion,
    potentials: dict,
    check_budget: bool = True,
) -> GradedHamiltonian:
    """Assemble h(p) + sum of cluster potentials with its graded structure.

    `clusters` is a list of (name, rows) with rows spanning a subspace Y of
    the configuration space in X coordinates; it must contain the full
    space and be closed under pairwise intersection.  `potentials` maps
    names to callables on the quotient coordinates (the projection of the
    position mesh onto the orthocomplement of Y); clusters without an entry
    contribute nothing.
    """
    d = rep.d
    named = [(name, _orthonormal_rows(rows, d)) for name, rows in clusters]
    if not any(B.shape[0] == d for _, B in named):
        raise SpectraError("the cluster list must contain the full configuration space")
    # Intersection closure check on row spaces.
    for i, (ni, Bi) in enumerate(named):
        for nj, Bj in named[i + 1 :]:
            inter = _row_intersection(Bi, Bj, d)
            if not any(_same_rowspace(inter, Bk) for _, Bk in named):
                raise SpectraError(
                    f"cluster list is not intersection-closed: {ni} ^ {nj} is missing"
                )

    mesh = rep.position_mesh()
    kin_freqs = np.asarray(dispersion(rep.freq_mesh()), dtype=float)
    kinetic = kinetic_matrix(rep, dispersion)

    # Ambient semilattice generated by the sigma-complements of the clusters.
    ambient_subspaces = []
    for name, B in named:
        vecs = (rep.split.X.basis @ B.T).T if B.shape[0] else np.zeros((0, rep.ambient.dim))
        Y = subspace(rep.ambient, vecs) if B.shape[0] else subspace(rep.ambient, [])
        ambient_subspaces.append((name, sigma_complement(Y)))
    S = closure([Ys for _, Ys in ambient_subspaces])

    cluster_objs = []
    total_mu = 0.0
    commutation = {}
    H = kinetic.copy()
    for name, B in named:
        fn = potentials.get(name)
        if fn is None:
            values = np.zeros(rep.hilbert_dim)
        else:
            proj = np.eye(d) - (B.T @ B if B.shape[0] else np.zeros((d, d)))
            values = np.asarray(fn(mesh @ proj.T), dtype=float).reshape(rep.hilbert_dim)
        mu_y, nu_y = (0.0, 0.0)
        if np.any(values != 0.0):
            mu_y, nu_y = _certify_form_bound(rep, values, kin_freqs)
        total_mu += mu_y
        idx = None
        for sname, Ys in ambient_subspaces:
            if sname == name:
                idx = S.index_of(Ys)
        cluster_objs.append(
            ClusterPotential(
                name=name, basis=B, values=values, mu=mu_y, nu=nu_y, lattice_index=idx
            )
        )
        H[np.diag_indices_from(H)] += values
        if np.any(values != 0.0) and B.shape[0] > 0:
            commutation[name] = _translation_commutation(rep, B, values)
    if check_budget and total_mu >= 1.0:
        offender = max(cluster_objs, key=lambda c: c.mu)
        raise SpectraError(
            f"form-bound budget exceeded (sum mu = {total_mu:.3f}); "
            f"largest contribution from cluster {offender.name!r}"
        )
    return GradedHamiltonian(
        rep=rep,
        kinetic=kinetic,
        kinetic_values=kin_freqs,
        clusters=cluster_objs,
        matrix=0.5 * (H + H.conj().T),
        semilattice=S,
        commutation_residuals=commutation,
    )


def _same_rowspace(A: np.ndarray, B: np.ndarray) -> bool:
    if A.shape[0] != B.shape[0]:
        return False
    if A.shape[0] == 0:
        return True
    return _contains_rows(A, B) and _contains_rows(B, A)


def _row_intersection(A: np.ndarray, B: np.ndarray, d: int) -> np.ndarray:
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((0, d))
    ns = scipy.linalg.null_space(np.hstack([A.T, -B.T]), rcond=1e-10)
    if ns.shape[1] == 0:
        return np.zeros((0, d))
    vecs = (A.T @ ns[: A.shape[0], :]).T
    return _orthonormal_rows(vecs, d)


def _translation_commutation(rep: GridRep, B: np.ndarray, values: np.ndarray) -> float:
    """Frame residual of [W(xi), V] for a lattice translation xi along Y."""
    frame = gaussian_frame(rep)
    h = rep.spacing
    worst = 0.0
    for row in B:
        steps = max(1, int(round(rep.half_width / (4 * h))))
        a = steps * h * row
        xi = rep.split.X.basis @ a
        WV = lambda u: rep.weyl_apply(xi, values * u)
        VW = lambda u: values * rep.weyl_apply(xi, u)
        worst = max(worst, frame_distance(WV, VW, frame))
    return worst


# ---------------------------------------------------------------------------
# HVZ essential spectrum


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    intervals: list  # [(lo, hi)] closed intervals
    per_coatom: list  # dicts: name, subspace dim, spectrum
    discrete_below: np.ndarray
    gap_threshold: float
    grid: dict
    essential_equals_full: bool
    dynamic_residuals: dict


def _cluster_intervals(values: np.ndarray, gap: float) -> list:
    vals = np.sort(values)
    if vals.size == 0:
        return []
    out = []
    lo = vals[0]
    prev = vals[0]
    for v in vals[1:]:
        if v - prev > gap:
            out.append((float(lo), float(prev)))
            lo = v
        prev = v
    out.append((float(lo), float(prev)))
    return out


def _merge_intervals(intervals: list) -> list:
    if not intervals:
        return []
    intervals = sorted(intervals)
    out = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def _eigh_once(H: np.ndarray):
    Hs = 0.5 * (H + H.conj().T)
    if np.iscomplexobj(Hs) and np.abs(Hs.imag).max() <= 1e-12 * max(
        1.0, np.abs(Hs).max()
    ):
        Hs = np.ascontiguousarray(Hs.real)
    return scipy.linalg.eigh(Hs, driver="evd")


def hvz_essential_spectrum(
    gh: GradedHamiltonian,
    dynamic_check: bool = False,
    schedule=None,
    seed: int = 0,
) -> SpectrumReport:
    """Union of co-atom sub-Hamiltonian spectra, with interval extraction.

    When the semilattice has no maximal element equal to the full space the
    essential spectrum equals the full spectrum and is reported as such.
    Eigenvalues are clustered into closed intervals with a gap threshold of
    three times the largest adjacent gap of the kinetic spectrum on the
    same grid (known analytically from the dispersion values).
    """
    rep = gh.rep
    S = gh.semilattice
    kin_spec = np.sort(gh.kinetic_values)
    gaps = np.diff(kin_spec)
    gap_threshold = 3.0 * float(gaps.max()) if gaps.size else 1.0

    ev_full, vec_full = _eigh_once(gh.matrix)
    eig_full = np.sort(ev_full)

    w = S.max_index()
    full = w is not None and S.elements[w].dim == rep.ambient.dim
    dynamic = {}
    if not full:
        intervals = _cluster_intervals(eig_full, gap_threshold)
        return SpectrumReport(
            eigenvalues=eig_full,
            intervals=intervals,
            per_coatom=[],
            discrete_below=np.zeros(0),
            gap_threshold=gap_threshold,
            grid=rep.descriptor(),
            essential_equals_full=True,
            dynamic_residuals=dynamic,
        )

    # Co-atoms of the semilattice; each must carry a cluster sub-Hamiltonian.
    from .semilattice import sub_ideals

    ideals = sub_ideals(S, w)
    per = []
    intervals = []
    for idx in ideals.co_atoms:
        cluster = None
        for c in gh.clusters:
            if c.lattice_index == idx:
                cluster = c
        if cluster is None:
            raise SpectraError(
                "co-atom of the semilattice does not match any cluster subspace"
            )
        HY = gh.sub_hamiltonian(cluster.name)
        ev_y, vec_y = _eigh_once(HY)
        spec_y = np.sort(ev_y)
        per.append(
            {
                "name": cluster.name,
                "lattice_index": idx,
                "subspace_dim": S.elements[idx].dim,
                "spectrum": spec_y,
            }
        )
        intervals.extend(_cluster_intervals(spec_y, gap_threshold))
        if dynamic_check:
            dynamic[cluster.name] = _dynamic_residuals(
                gh,
                idx,
                (ev_full, vec_full),
                (ev_y, vec_y),
                schedule=schedule,
                seed=seed,
            )
    intervals = _merge_intervals(intervals)
    inf_ess = min(lo for lo, _ in intervals)
    discrete = eig_full[eig_full < inf_ess - 1e-9]
    return SpectrumReport(
        eigenvalues=eig_full,
        intervals=intervals,
        per_coatom=per,
        discrete_below=discrete,
        gap_threshold=gap_threshold,
        grid=rep.descriptor(),
        essential_equals_full=False,
        dynamic_residuals=dynamic,
    )


def _spectral_resolvent(decomp, z: complex):
    evals, vecs = decomp
    real_basis = not np.iscomplexobj(vecs)

    def apply(v):
        if real_basis and np.iscomplexobj(v):
            # Two real products per side avoid promoting the basis matrix.
            cr = vecs.T @ v.real
            ci = vecs.T @ v.imag
            scaled = (cr + 1j * ci) / (evals - z)
            return vecs @ scaled.real + 1j * (vecs @ scaled.imag)
        return vecs @ ((vecs.conj().T @ v) / (evals - z))

    return apply


def _dynamic_residuals(gh, idx, decomp_full, decomp_y, schedule=None, seed: int = 0):
    """Frame distances of W(rw)* (H + i)^{-1} W(rw) to (H_Y + i)^{-1}."""
    rep = gh.rep
    S = gh.semilattice
    omega = direction_search(S, idx, seed=seed)
    if schedule is None:
        from .grading import default_schedule

        schedule = default_schedule(rep, omega)
    frame = gaussian_frame(rep)
    RH = _spectral_resolvent(decomp_full, -1j)
    RY = _spectral_resolvent(decomp_y, -1j)
    out = []
    for r in schedule:
        xi = r * omega
        worst = 0.0
        for j in range(frame.shape[1]):
            u = frame[:, j]
            lhs = rep.weyl_apply(-xi, RH(rep.weyl_apply(xi, u)))
            worst = max(worst, float(np.linalg.norm(lhs - RY(u))))
        out.append(worst)
    return {"schedule": list(map(float, schedule)), "residuals": out}


# ---------------------------------------------------------------------------
# Translation limits and the compactness diagnostic


@dataclass
class TranslationLimits:
    T_plus: np.ndarray | None
    T_minus: np.ndarray | None
    converged_plus: bool
    converged_minus: bool
    distance: float | None
    equal: bool | None
    step_plus: list
    step_minus: list
    tol: float


def translation_limits(
    rep: GridRep,
    T: np.ndarray,
    omega,
    schedule=None,
    frame=None,
    tol: float = 1e-3,
) -> TranslationLimits:
    """Two-sided conjugation limits along +r and -r, compared on the frame."""
    from .grading import conjugated, default_schedule, CONSECUTIVE_HITS

    omega = np.asarray(omega, dtype=float)
    if schedule is None:
        schedule = default_schedule(rep, omega)
    schedule = np.asarray(schedule, dtype=float)
    frame = gaussian_frame(rep) if frame is None else frame

    def one_side(sign):
        mats = [conjugated(rep, T, sign * r * omega) for r in schedule]
        steps = [frame_distance(mats[i + 1], mats[i], frame) for i in range(len(mats) - 1)]
        hits = 0
        conv = False
        for s in steps:
            hits = hits + 1 if s < tol else 0
            if hits >= CONSECUTIVE_HITS:
                conv = True
        return (mats[-1] if conv else None), conv, steps

    Tp, cp, sp = one_side(+1.0)
    Tm, cm, sm = one_side(-1.0)
    if cp and cm:
        dist = frame_distance(Tp, Tm, frame)
        return TranslationLimits(Tp, Tm, cp, cm, dist, bool(dist < tol), sp, sm, tol)
    return TranslationLimits(Tp, Tm, cp, cm, None, None, sp, sm, tol)


@dataclass
class DefectCurves:
    eps: np.ndarray
    weyl_modulus: np.ndarray
    tail_mass: np.ndarray
    empirical_constant: float


def compactness_defect(
    rep: GridRep,
    vectors: np.ndarray | None = None,
    T: np.ndarray | None = None,
    eps_list=None,
    n_probes: int = 6,
    seed: int = 3,
) -> DefectCurves:
    """Curves eps -> sup over |xi| < eps of the Weyl modulus, plus the
    position tail mass beyond radius 4/eps.

    For vectors the modulus is sup ||(W(xi) - 1) u||; for an operator it is
    ||(W(xi) - 1) T||.  The ratio tail/modulus is summarized by its largest
    observed value; it is reported, never asserted.
    """
    if (vectors is None) == (T is None):
        raise SpectraError("pass exactly one of vectors or T")
    if eps_list is None:
        eps_list = np.array([1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01])
    eps_list = np.asarray(eps_list, dtype=float)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_probes, rep.ambient.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    axes = np.eye(rep.ambient.dim)
    probes = np.vstack([dirs, axes])

    mesh = rep.position_mesh()
    radii = np.linalg.norm(mesh, axis=1)

    moduli = []
    tails = []
    for eps in eps_list:
        worst = 0.0
        for p in probes:
            W = rep.weyl(eps * p)
            if vectors is not None:
                for j in range(vectors.shape[1]):
                    u = vectors[:, j]
                    worst = max(worst, float(np.linalg.norm(W @ u - u)))
            else:
                worst = max(worst, float(np.linalg.norm(W @ T - T, 2)))
        moduli.append(worst)
        chi = (radii > 4.0 / eps).astype(float)
        if vectors is not None:
            tail = max(
                float(np.linalg.norm(chi * vectors[:, j]))
                for j in range(vectors.shape[1])
            )
        else:
            tail = float(np.linalg.norm(chi[:, None] * T, 2))
        tails.append(tail)
    moduli = np.array(moduli)
    tails = np.array(tails)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(moduli > 0, tails / moduli, 0.0)
    return DefectCurves(
        eps=eps_list,
        weyl_modulus=moduli,
        tail_mass=tails,
        empirical_constant=float(ratios.max()),
    )
