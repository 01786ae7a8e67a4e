import numpy as np
import pytest

from fieldalg.symplectic import full_subspace, standard_space, subspace
from fieldalg.reps import gaussian_frame, grid_rep
from fieldalg.spectra import (
    SpectraError,
    compactness_defect,
    hvz_essential_spectrum,
    kinetic_matrix,
    laplacian_delta_e,
    nbody_hamiltonian,
    spectrum,
    translation_limits,
)

SP = standard_space(1)


class TestSpectrum:
    def test_sorted_diagonal(self):
        H = np.diag([3.0, 1.0, 2.0])
        assert np.allclose(spectrum(H), [1.0, 2.0, 3.0])

    def test_pauli_x(self):
        H = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(spectrum(H), [-1.0, 1.0])

    def test_residuals_random(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((128, 128)) + 1j * rng.standard_normal((128, 128))
        H = 0.5 * (A + A.conj().T)
        evals = spectrum(H)
        import scipy.linalg

        vals, vecs = scipy.linalg.eigh(H)
        for k in range(0, 128, 17):
            r = np.linalg.norm(H @ vecs[:, k] - vals[k] * vecs[:, k])
            assert r < 1e-9

    def test_nonhermitian_rejected(self):
        with pytest.raises(SpectraError):
            spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestLaplacian:
    def test_momentum_line_gives_dispersion(self):
        # the x-axis of phase space generates the momentum operator
        rep = grid_rep(m=64, half_width=8.0)
        E = subspace(SP, [1.0, 0.0])
        delta = laplacian_delta_e(rep, E)
        want = np.sort(rep.axis_freqs() ** 2)
        assert np.abs(spectrum(delta) - want).max() < 1e-8

    def test_harmonic_oscillator(self):
        rep = grid_rep(m=512, half_width=12.0)
        delta = laplacian_delta_e(rep, full_subspace(SP))
        ev = spectrum(delta)[:10]
        want = 2.0 * np.arange(10) + 1.0
        assert np.abs(ev - want).max() / want.max() < 0.01

    def test_basis_independence(self):
        rep = grid_rep(m=128, half_width=8.0)
        c, s = np.cos(0.41), np.sin(0.41)
        d1 = laplacian_delta_e(rep, full_subspace(SP), basis=np.eye(2))
        d2 = laplacian_delta_e(
            rep, full_subspace(SP), basis=np.array([[c, s], [-s, c]])
        )
        assert np.linalg.norm(d1 - d2, 2) < 1e-8

    def test_monotone_bound(self):
        # phi(e_k)^2 <= Delta_E as forms
        rep = grid_rep(m=64, half_width=8.0)
        from fieldalg.reps import field_op

        delta = laplacian_delta_e(rep, full_subspace(SP))
        phi = field_op(rep, np.array([1.0, 0.0]))
        gap = spectrum(delta - phi @ phi)[0]
        assert gap > -1e-8

    def test_nonorthonormal_rejected(self):
        rep = grid_rep(m=32)
        with pytest.raises(SpectraError):
            laplacian_delta_e(rep, full_subspace(SP), basis=np.array([[2.0, 0], [0, 1.0]]))


class TestNBody:
    def test_two_element_lattice(self):
        rep = grid_rep(m=128, half_width=8.0)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"origin": lambda y: -np.exp(-np.sum(y**2, axis=1))},
        )
        assert len(gh.clusters) == 2
        assert np.allclose(gh.sub_hamiltonian("X"), gh.kinetic)
        # semilattice {0, X, Xi}
        assert sorted(gh.semilattice.dims()) == [0, 1, 2]

    def test_zero_potentials(self):
        rep = grid_rep(m=64)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={},
        )
        assert np.abs(gh.matrix - gh.kinetic).max() < 1e-12

    def test_intersection_closure_enforced(self):
        rep = grid_rep(d=2, m=8, half_width=4.0)
        with pytest.raises(SpectraError):
            nbody_hamiltonian(
                rep,
                clusters=[
                    ("X", np.eye(2)),
                    ("a1", np.array([[1.0, 0.0]])),
                    ("a2", np.array([[0.0, 1.0]])),
                ],
                dispersion=lambda k: np.sum(k**2, axis=1),
                potentials={},
            )

    def test_form_bounds_recorded(self):
        rep = grid_rep(m=64)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"origin": lambda y: -3.0 * np.exp(-np.sum(y**2, axis=1))},
        )
        well = [c for c in gh.clusters if c.name == "origin"][0]
        assert well.mu == 0.0
        assert well.nu == pytest.approx(3.0, rel=1e-6)

    def test_commutation_residuals(self):
        rep = grid_rep(d=2, m=16, half_width=6.0)
        gh = nbody_hamiltonian(
            rep,
            clusters=[
                ("X", np.eye(2)),
                ("axis1", np.array([[0.0, 1.0]])),
                ("origin", np.zeros((0, 2))),
            ],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"axis1": lambda y: -np.exp(-np.sum(y**2, axis=1))},
        )
        # a potential constant along Y commutes with lattice translations in Y
        assert gh.commutation_residuals["axis1"] < 1e-10


class TestHVZ:
    def test_well_1d(self):
        rep = grid_rep(m=256, half_width=10.0)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"origin": lambda y: -5.0 * np.exp(-np.sum(y**2, axis=1))},
        )
        rpt = hvz_essential_spectrum(gh, dynamic_check=True)
        assert len(rpt.intervals) == 1
        lo, hi = rpt.intervals[0]
        assert abs(lo) < 1e-9
        assert hi == pytest.approx(np.sort(gh.kinetic_values)[-1])
        assert rpt.discrete_below.size >= 1
        assert all(e < 0 for e in rpt.discrete_below)
        for tr in rpt.dynamic_residuals.values():
            assert tr["residuals"][-1] < tr["residuals"][0]

    def test_zero_potentials_exact(self):
        rep = grid_rep(m=128)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={},
        )
        rpt = hvz_essential_spectrum(gh)
        assert np.allclose(rpt.eigenvalues, np.sort(gh.kinetic_values), atol=1e-9)
        assert rpt.discrete_below.size == 0

    def test_no_full_max_reports_whole_spectrum(self):
        # lattice without the zero subspace: max of S is X^sigma = X != Xi
        rep = grid_rep(m=64)
        gh = nbody_hamiltonian(
            rep,
            clusters=[("X", np.eye(1))],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={},
        )
        rpt = hvz_essential_spectrum(gh)
        assert rpt.essential_equals_full

    def test_two_body_toy_small(self):
        rep2 = grid_rep(d=2, m=32, half_width=8.0)
        v1 = lambda y: -3.0 * np.exp(-np.sum(y**2, axis=1))
        v2 = lambda y: -2.0 * np.exp(-0.7 * np.sum(y**2, axis=1))
        v12 = lambda y: -1.0 * np.exp(-np.sum(y**2, axis=1))
        gh = nbody_hamiltonian(
            rep2,
            clusters=[
                ("X", np.eye(2)),
                ("axis1", np.array([[0.0, 1.0]])),
                ("axis2", np.array([[1.0, 0.0]])),
                ("origin", np.zeros((0, 2))),
            ],
            dispersion=lambda k: np.sum(k**2, axis=1),
            potentials={"axis1": v1, "axis2": v2, "origin": v12},
        )
        rpt = hvz_essential_spectrum(gh)
        assert len(rpt.per_coatom) == 2
        inf_union = min(lo for lo, _ in rpt.intervals)
        # independent oracle: one-axis ground energy on a double box
        repo = grid_rep(d=1, m=128, half_width=16.0)
        grounds = []
        for v in (v1, v2):
            gho = nbody_hamiltonian(
                repo,
                clusters=[("X", np.eye(1)), ("origin", np.zeros((0, 1)))],
                dispersion=lambda k: np.sum(k**2, axis=1),
                potentials={"origin": v},
            )
            grounds.append(float(spectrum(gho.matrix)[0]))
        assert abs(inf_union - min(grounds)) / abs(min(grounds)) < 0.05
        # every co-atom spectrum is inside the computed union
        for entry in rpt.per_coatom:
            for e in entry["spectrum"]:
                assert any(lo - 1e-9 <= e <= hi + 1e-9 for lo, hi in rpt.intervals)
        # dropping the deeper co-atom strictly shrinks the bottom of the union
        bottoms = [entry["spectrum"][0] for entry in rpt.per_coatom]
        assert max(bottoms) > min(bottoms) + 1e-6


class TestTranslationLimits:
    def setup_method(self):
        self.rep = grid_rep(m=256, half_width=32.0)
        mesh = self.rep.position_mesh()[:, 0]
        self.kin = kinetic_matrix(self.rep, lambda k: np.sum(k**2, axis=1))
        self.eye = np.eye(self.rep.hilbert_dim)
        self.mesh = mesh
        self.frame = gaussian_frame(self.rep)
        self.omega = np.array([1.0, 0.0])

    def test_step_limits_differ(self):
        v = 0.5 * (1.0 + np.tanh(self.mesh))
        T = np.linalg.solve(self.kin + np.diag(v) + 1j * self.eye, self.eye)
        lim = translation_limits(self.rep, T, self.omega, frame=self.frame)
        assert lim.converged_plus and lim.converged_minus
        assert lim.distance > 0.1
        # the limits match the shifted free resolvents
        from fieldalg.reps import frame_distance

        Rp = np.linalg.solve(self.kin + self.eye + 1j * self.eye, self.eye)
        Rm = np.linalg.solve(self.kin + 1j * self.eye, self.eye)
        assert frame_distance(lim.T_plus, Rp, self.frame) < 1e-3
        assert frame_distance(lim.T_minus, Rm, self.frame) < 1e-3

    def test_bump_limits_agree(self):
        v = -np.exp(-self.mesh**2)
        T = np.linalg.solve(self.kin + np.diag(v) + 1j * self.eye, self.eye)
        lim = translation_limits(self.rep, T, self.omega, frame=self.frame)
        assert lim.converged_plus and lim.converged_minus
        assert lim.distance < 1e-3

    def test_momentum_function_invariant(self):
        T = np.linalg.solve(self.kin + 1j * self.eye, self.eye)
        lim = translation_limits(self.rep, T, self.omega, frame=self.frame)
        assert lim.distance < 1e-12


class TestCompactness:
    def test_gaussian_frame_curves(self):
        rep = grid_rep(m=128, half_width=8.0)
        frame = gaussian_frame(rep)
        curves = compactness_defect(rep, vectors=frame)
        assert curves.weyl_modulus[-1] < curves.weyl_modulus[0]
        assert curves.weyl_modulus[-1] < 0.05
        assert curves.tail_mass[-1] < 1e-10

    def test_oscillatory_vector_bounded_away(self):
        rep = grid_rep(m=128, half_width=8.0)
        osc = ((-1.0) ** np.arange(128)).astype(complex)
        osc /= np.linalg.norm(osc)
        curves = compactness_defect(rep, vectors=osc[:, None])
        assert curves.weyl_modulus.min() > 0.1

    def test_compact_operator_modulus_decays(self):
        rep = grid_rep(m=128, half_width=8.0)
        y = rep.axis_coords()
        K = np.exp(-(y[:, None] ** 2 + y[None, :] ** 2) / 2 - (y[:, None] - y[None, :]) ** 2 / 2)
        K = K / np.linalg.norm(K, 2)
        curves = compactness_defect(rep, T=K)
        assert curves.weyl_modulus[-1] < 0.05 * curves.weyl_modulus[0]

    def test_argument_validation(self):
        rep = grid_rep(m=32)
        with pytest.raises(SpectraError):
            compactness_defect(rep)
