"""Twisted measure algebra: Dirac combs and sampled densities.

An element is a finite atomic part plus a list of absolutely continuous
parts, each sampled on a uniform midpoint grid over a box inside a
subspace.  Products follow the twisted convolution law

    (mu x nu)(f) = integral e^{(i/2) sigma(xi, eta)} f(xi + eta) dmu dnu,

so atom-times-atom is exact phase arithmetic, atom-times-density is an
exact phase translation, and density-times-density is a quadrature
deposit onto a grid over the sum subspace.

Densities carry an affine offset: translating a density on E by an atom
at xi moves its support to xi + E, which leaves the linear Grassmannian
but is required for the one-sided product identities to hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symplectic import Subspace, SymplecticSpace, lattice_sum, zero_subspace

ATOM_MERGE_TOL = 1e-12
PLANE_TOL = 1e-8


class TwistedError(ValueError):
    pass


@dataclass(frozen=True)
class DiracComb:
    """Atoms (point, complex coefficient); points within 1e-12 are merged."""

    ambient: SymplecticSpace
    points: np.ndarray  # (k, 2n)
    coeffs: np.ndarray  # (k,) complex

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.ambient.dim)
        cs = np.array(self.coeffs, dtype=complex).reshape(-1)
        if pts.shape[0] != cs.shape[0]:
            raise TwistedError("points and coefficients must have equal length")
        pts, cs = _merge_atoms(pts, cs)
        pts.setflags(write=False)
        cs.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coeffs", cs)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))


def _merge_atoms(pts: np.ndarray, cs: np.ndarray):
    merged_p: list[np.ndarray] = []
    merged_c: list[complex] = []
    for p, c in zip(pts, cs):
        for i, q in enumerate(merged_p):
            if np.abs(p - q).max() <= ATOM_MERGE_TOL:
                merged_c[i] += c
                break
        else:
            merged_p.append(p)
            merged_c.append(c)
    keep = [i for i, c in enumerate(merged_c) if abs(c) > 0.0]
    if not keep:
        return np.zeros((0, pts.shape[1] if pts.ndim == 2 else 0)), np.zeros(0, complex)
    return np.array([merged_p[i] for i in keep]), np.array([merged_c[i] for i in keep])


@dataclass(frozen=True)
class DensityOnSubspace:
    """Sampled density rho against Lebesgue measure of a subspace box.

    Samples live on the uniform midpoint grid with per-axis coordinates
    -L + (j + 1/2) h, h = 2L/m, expressed in the orthonormal basis of
    `support`.  The represented measure is rho(y) dlambda_E at the affine
    points offset + basis @ y.
    """

    support: Subspace
    count: int
    half_width: float
    samples: np.ndarray
    offset: np.ndarray = None

    def __post_init__(self):
        if self.support.dim < 1:
            raise TwistedError("density support must have dimension >= 1")
        if self.count < 1:
            raise TwistedError("per-axis sample count must be positive")
        if self.half_width <= 0:
            raise TwistedError("box half-width must be positive")
        k = self.support.dim
        arr = np.array(self.samples, dtype=complex).reshape((self.count,) * k)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        off = self.offset
        off = np.zeros(self.support.ambient.dim) if off is None else np.array(off, float)
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.count

    def axis_coords(self) -> np.ndarray:
        h = self.spacing
        return -self.half_width + (np.arange(self.count) + 0.5) * h

    def grid_coords(self) -> np.ndarray:
        """All in-plane coordinates, shape (count^k, k)."""
        k = self.support.dim
        axes = [self.axis_coords()] * k
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def points(self) -> np.ndarray:
        """Ambient positions of the grid cells, shape (count^k, 2n)."""
        return self.offset[None, :] + self.grid_coords() @ self.support.basis.T

    def cell_volume(self) -> float:
        return self.spacing**self.support.dim

    def l1(self) -> float:
        return float(np.sum(np.abs(self.samples)) * self.cell_volume())

    def mass(self) -> complex:
        return complex(np.sum(self.samples) * self.cell_volume())


@dataclass(frozen=True)
class ConvolveReport:
    """Quadrature diagnostics of one density-times-density product."""

    truncated_mass: float
    total_mass: float
    off_plane_leakage: float  # |mass| fraction deposited off the target plane

    @property
    def truncated_fraction(self) -> float:
        return self.truncated_mass / self.total_mass if self.total_mass > 0 else 0.0


@dataclass(frozen=True)
class TwistedElement:
    """Formal sum of a Dirac comb and finitely many sampled densities."""

    comb: DiracComb
    densities: tuple = ()
    reports: tuple = field(default_factory=tuple, compare=False)

    @property
    def ambient(self) -> SymplecticSpace:
        return self.comb.ambient

    def __add__(self, other: "TwistedElement") -> "TwistedElement":
        return TwistedElement(
            comb=DiracComb(
                self.ambient,
                np.vstack([self.comb.points, other.comb.points]),
                np.concatenate([self.comb.coeffs, other.comb.coeffs]),
            ),
            densities=self.densities + other.densities,
        )

    def __rmul__(self, c: complex) -> "TwistedElement":
        return TwistedElement(
            comb=DiracComb(self.ambient, self.comb.points, c * self.comb.coeffs),
            densities=tuple(
                DensityOnSubspace(d.support, d.count, d.half_width, c * d.samples, d.offset)
                for d in self.densities
            ),
        )


def comb_element(ambient: SymplecticSpace, atoms) -> TwistedElement:
    """Element from a list of (point, coefficient) pairs."""
    if not atoms:
        return TwistedElement(DiracComb(ambient, np.zeros((0, ambient.dim)), np.zeros(0)))
    pts = np.array([p for p, _ in atoms], dtype=float)
    cs = np.array([c for _, c in atoms], dtype=complex)
    return TwistedElement(DiracComb(ambient, pts, cs))


def unit_element(ambient: SymplecticSpace) -> TwistedElement:
    """The algebra unit, a Dirac measure at zero."""
    return comb_element(ambient, [(np.zeros(ambient.dim), 1.0)])


def density_element(density: DensityOnSubspace) -> TwistedElement:
    amb = density.support.ambient
    return TwistedElement(
        comb=DiracComb(amb, np.zeros((0, amb.dim)), np.zeros(0)),
        densities=(density,),
    )


def gaussian_density(
    support: Subspace,
    count: int,
    half_width: float,
    center=None,
    width: float = 1.0,
    amplitude: complex = 1.0,
) -> DensityOnSubspace:
    """Gaussian sampled in the in-plane coordinates of `support`."""
    k = support.dim
    center = np.zeros(k) if center is None else np.asarray(center, float)
    d = DensityOnSubspace(support, count, half_width, np.zeros((count,) * k))
    y = d.grid_coords()
    vals = amplitude * np.exp(-np.sum((y - center) ** 2, axis=1) / (2.0 * width**2))
    return DensityOnSubspace(support, count, half_width, vals.reshape((count,) * k))


def l1_norm(mu: TwistedElement) -> float:
    return mu.comb.l1() + sum(d.l1() for d in mu.densities)


def adjoint(mu: TwistedElement) -> TwistedElement:
    """Point reflection plus complex conjugation; an exact involution."""
    comb = DiracComb(mu.ambient, -mu.comb.points, np.conj(mu.comb.coeffs))
    dens = []
    for d in mu.densities:
        # Midpoint grids are symmetric, so reflection reverses every axis.
        flipped = np.conj(d.samples[(slice(None, None, -1),) * d.support.dim])
        dens.append(
            DensityOnSubspace(d.support, d.count, d.half_width, flipped, -d.offset)
        )
    return TwistedElement(comb=comb, densities=tuple(dens))


def _phase(space: SymplecticSpace, xi: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """exp((i/2) sigma(xi, pts)) for a batch of points."""
    return np.exp(0.5j * (pts @ (space.form.T @ xi)))


def _atom_times_density(xi, c, d: DensityOnSubspace) -> DensityOnSubspace:
    # delta_xi x mu = e^{(i/2) sigma(xi, .)} tau_xi mu, exact on the shifted grid.
    space = d.support.ambient
    shifted_pts = d.points() + xi[None, :]
    ph = _phase(space, xi, shifted_pts)
    samples = (c * ph).reshape(d.samples.shape) * d.samples
    return DensityOnSubspace(d.support, d.count, d.half_width, samples, d.offset + xi)


def _density_times_atom(d: DensityOnSubspace, eta, c) -> DensityOnSubspace:
    # mu x delta_eta multiplies by e^{(i/2) sigma(., eta)} then translates by eta.
    space = d.support.ambient
    ph = np.exp(0.5j * (d.points() @ (space.form @ eta)))
    samples = (c * ph).reshape(d.samples.shape) * d.samples
    return DensityOnSubspace(d.support, d.count, d.half_width, samples, d.offset + eta)


def _target_grid(a: DensityOnSubspace, b: DensityOnSubspace):
    supp = lattice_sum(a.support, b.support)
    L = a.half_width + b.half_width
    h = min(a.spacing, b.spacing)
    m = int(np.ceil(2.0 * L / h - 1e-12))
    m += m % 2  # keep counts even so symmetric grids stay aligned
    return supp, m, L


def _convolve_densities(
    a: DensityOnSubspace, b: DensityOnSubspace, chunk: int = 1 << 18
):
    """Quadrature of the twisted product onto a grid over the sum subspace."""
    space = a.support.ambient
    supp, m, L = _target_grid(a, b)
    kT = supp.dim
    hT = 2.0 * L / m
    offset = a.offset + b.offset
    samples = np.zeros((m,) * kT, dtype=complex)

    pts_a = a.points()
    pts_b = b.points()
    wa = a.samples.ravel() * a.cell_volume()
    wb = b.samples.ravel() * b.cell_volume()
    Jb = space.form @ pts_b.T  # (2n, NB)

    truncated = 0.0
    total = 0.0
    leak = 0.0
    flat = samples.reshape(-1)
    for start in range(0, pts_a.shape[0], max(1, chunk // max(1, pts_b.shape[0]))):
        stop = min(pts_a.shape[0], start + max(1, chunk // max(1, pts_b.shape[0])))
        A = pts_a[start:stop]
        phases = np.exp(0.5j * (A @ Jb))  # (na, NB)
        w = (wa[start:stop, None] * wb[None, :]) * phases
        P = A[:, None, :] + pts_b[None, :, :]  # summed ambient points
        rel = (P - offset[None, None, :]).reshape(-1, space.dim)
        y = rel @ supp.basis
        resid = rel - y @ supp.basis.T
        rnorm = np.linalg.norm(resid, axis=1)
        wflat = w.reshape(-1)
        absw = np.abs(wflat)
        total += float(absw.sum())
        scale = 1.0 + np.linalg.norm(rel, axis=1)
        on_plane = rnorm <= PLANE_TOL * scale
        leak += float(absw[~on_plane].sum())
        idx = np.floor((y + L) / hT).astype(int)
        inside = on_plane & np.all((idx >= 0) & (idx < m), axis=1)
        truncated += float(absw[on_plane & ~np.all((idx >= 0) & (idx < m), axis=1)].sum())
        if np.any(inside):
            lin = np.ravel_multi_index(tuple(idx[inside].T), (m,) * kT)
            np.add.at(flat, lin, wflat[inside] / hT**kT)

    report = ConvolveReport(
        truncated_mass=truncated,
        total_mass=total,
        off_plane_leakage=leak / total if total > 0 else 0.0,
    )
    return DensityOnSubspace(supp, m, L, samples, offset), report


def twisted_convolve(mu: TwistedElement, nu: TwistedElement) -> TwistedElement:
    """Twisted convolution product mu x nu."""
    if mu.ambient.dim != nu.ambient.dim or not np.array_equal(
        mu.ambient.form, nu.ambient.form
    ):
        raise TwistedError("elements live in different ambient spaces")
    space = mu.ambient

    # comb x comb: exact phase arithmetic.
    pts = []
    cs = []
    for p, c in zip(mu.comb.points, mu.comb.coeffs):
        for q, e in zip(nu.comb.points, nu.comb.coeffs):
            pts.append(p + q)
            cs.append(c * e * np.exp(0.5j * space.sigma(p, q)))
    comb = DiracComb(
        space,
        np.array(pts) if pts else np.zeros((0, space.dim)),
        np.array(cs) if cs else np.zeros(0, complex),
    )

    densities: list[DensityOnSubspace] = []
    reports: list[ConvolveReport] = []
    for p, c in zip(mu.comb.points, mu.comb.coeffs):
        for d in nu.densities:
            densities.append(_atom_times_density(p, c, d))
    for d in mu.densities:
        for q, e in zip(nu.comb.points, nu.comb.coeffs):
            densities.append(_density_times_atom(d, q, e))
    for da in mu.densities:
        for db in nu.densities:
            dens, rep = _convolve_densities(da, db)
            densities.append(dens)
            reports.append(rep)
    return TwistedElement(comb=comb, densities=tuple(densities), reports=tuple(reports))


def _standard_pairing_check(d: DensityOnSubspace) -> np.ndarray:
    space = d.support.ambient
    B = d.support.basis
    Jt = B.T @ space.form @ B
    n = space.dim // 2
    Jstd = np.zeros_like(Jt)
    Jstd[:n, n:] = -np.eye(n)
    Jstd[n:, :n] = np.eye(n)
    if np.abs(Jt - Jstd).max() > 1e-12:
        raise TwistedError(
            "symplectic Fourier transform requires samples in coordinates where "
            "the form takes the standard block shape"
        )
    return Jt


def symplectic_fourier(d: DensityOnSubspace) -> DensityOnSubspace:
    """Transform (2 pi)^{-n} integral e^{-i sigma(xi, eta)} rho(eta) deta.

    Defined for densities covering the full ambient space, sampled in
    coordinates where the form is standard; involutive on well-resolved
    inputs. Midpoint quadrature, evaluated at the grid points themselves.
    """
    space = d.support.ambient
    if d.support.dim != space.dim:
        raise TwistedError("transform is defined for full-space densities only")
    if np.linalg.norm(d.offset) > 1e-12:
        raise TwistedError("transform requires a centered density")
    if d.count & (d.count - 1):
        raise TwistedError("per-axis count must be a power of two")
    _standard_pairing_check(d)
    import string

    n = space.dim // 2
    t = d.axis_coords()
    h = d.spacing
    # Kernel per pair (j, n+j): e^{-i y_{n+j} y'_j} e^{+i y_j y'_{n+j}}.
    Km = np.exp(-1j * np.outer(t, t))
    Kp = np.exp(1j * np.outer(t, t))
    letters = string.ascii_lowercase
    in_idx = letters[: 2 * n]
    out_idx = letters[2 * n : 4 * n]
    terms = []
    operands = []
    for j in range(n):
        terms.append(out_idx[n + j] + in_idx[j])
        operands.append(Km)
        terms.append(out_idx[j] + in_idx[n + j])
        operands.append(Kp)
    terms.append(in_idx)
    operands.append(d.samples)
    spec = ",".join(terms) + "->" + out_idx
    out = np.einsum(spec, *operands, optimize=True)
    out = out * (h * h / (2.0 * np.pi)) ** n
    return DensityOnSubspace(d.support, d.count, d.half_width, out)


def cstar_norm_estimate(mu: TwistedElement, rep) -> float:
    """Largest singular value of the represented operator."""
    from . import reps

    return reps.measure_norm_estimate(rep, mu)
