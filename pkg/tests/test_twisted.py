import numpy as np
import pytest

from fieldalg.symplectic import full_subspace, standard_space, subspace
from fieldalg.twisted import (
    DensityOnSubspace,
    TwistedError,
    adjoint,
    comb_element,
    density_element,
    gaussian_density,
    l1_norm,
    symplectic_fourier,
    twisted_convolve,
    unit_element,
)

SP = standard_space(1)


def random_comb(rng, n=3):
    atoms = [
        (rng.standard_normal(2), rng.standard_normal() + 1j * rng.standard_normal())
        for _ in range(n)
    ]
    return comb_element(SP, atoms)


def comb_as_dict(el, digits=10):
    return {
        tuple(np.round(p, digits)): np.round(c, digits)
        for p, c in zip(el.comb.points, el.comb.coeffs)
    }


def assert_combs_equal(a, b, tol=1e-12):
    da, db = comb_as_dict(a), comb_as_dict(b)
    assert set(da) == set(db)
    for k in da:
        assert abs(da[k] - db[k]) < tol


class TestCombAlgebra:
    def test_standard_phase(self):
        mu = comb_element(SP, [(np.array([1.0, 0.0]), 1.0)])
        nu = comb_element(SP, [(np.array([0.0, 1.0]), 1.0)])
        prod = twisted_convolve(mu, nu)
        assert np.allclose(prod.comb.points, [[1.0, 1.0]])
        assert abs(prod.comb.coeffs[0] - np.exp(-0.5j)) < 1e-15

    def test_unit(self):
        rng = np.random.default_rng(0)
        mu = random_comb(rng)
        assert_combs_equal(twisted_convolve(unit_element(SP), mu), mu)
        assert_combs_equal(twisted_convolve(mu, unit_element(SP)), mu)

    def test_associativity_exact(self):
        rng = np.random.default_rng(1)
        a, b, c = (random_comb(rng) for _ in range(3))
        lhs = twisted_convolve(twisted_convolve(a, b), c)
        rhs = twisted_convolve(a, twisted_convolve(b, c))
        assert_combs_equal(lhs, rhs, tol=1e-12)

    def test_adjoint_reflects(self):
        mu = comb_element(SP, [(np.array([0.7, -0.3]), 2.0 + 1j)])
        st = adjoint(mu)
        assert np.allclose(st.comb.points, [[-0.7, 0.3]])
        assert st.comb.coeffs[0] == 2.0 - 1j

    def test_involution(self):
        rng = np.random.default_rng(2)
        mu = random_comb(rng)
        assert_combs_equal(adjoint(adjoint(mu)), mu, tol=1e-15)

    def test_product_adjoint_identity(self):
        rng = np.random.default_rng(3)
        mu, nu = random_comb(rng), random_comb(rng)
        lhs = adjoint(twisted_convolve(mu, nu))
        rhs = twisted_convolve(adjoint(nu), adjoint(mu))
        assert_combs_equal(lhs, rhs, tol=1e-12)

    def test_atom_merge(self):
        mu = comb_element(SP, [(np.zeros(2), 1.0), (np.full(2, 1e-14), -1.0)])
        assert mu.comb.size == 0


class TestDensities:
    def test_l1_norm_quadrature(self):
        E = subspace(SP, [1.0, 0.0])
        d = gaussian_density(E, 512, 8.0, width=1.0)
        # oracle: gaussian integral sqrt(2 pi)
        assert d.l1() == pytest.approx(np.sqrt(2 * np.pi), rel=1e-10)

    def test_element_norm_additive(self):
        E = subspace(SP, [1.0, 0.0])
        d = gaussian_density(E, 128, 6.0)
        el = density_element(d) + comb_element(SP, [(np.zeros(2), 2.0)])
        assert l1_norm(el) == pytest.approx(2.0 + d.l1())

    def test_atom_translation_exact(self):
        # delta_xi x mu x delta_{-xi} multiplies pointwise by e^{i sigma(xi, .)}
        E = subspace(SP, [1.0, 0.0])
        d = gaussian_density(E, 64, 5.0, width=1.2)
        mu = density_element(d)
        xi = np.array([0.4, -0.9])
        dxi = comb_element(SP, [(xi, 1.0)])
        dmx = comb_element(SP, [(-xi, 1.0)])
        conj = twisted_convolve(dxi, twisted_convolve(mu, dmx))
        out = conj.densities[0]
        assert np.linalg.norm(out.offset) < 1e-14
        expected = d.samples.ravel() * np.exp(
            1j * (d.points() @ (SP.form.T @ xi))
        )
        assert np.abs(out.samples.ravel() - expected).max() < 1e-14

    def test_density_product_mass_and_support(self):
        E = subspace(SP, [1.0, 0.0])
        F = subspace(SP, [0.0, 1.0])
        dE = gaussian_density(E, 128, 6.0, width=1.0)
        dF = gaussian_density(F, 128, 6.0, width=0.8)
        prod = twisted_convolve(density_element(dE), density_element(dF))
        assert len(prod.densities) == 1
        out = prod.densities[0]
        assert out.support.dim == 2
        rep = prod.reports[0]
        assert rep.truncated_fraction < 1e-12
        assert rep.off_plane_leakage < 1e-8
        # transverse lines: the l1 norms multiply exactly
        assert out.l1() == pytest.approx(dE.l1() * dF.l1(), rel=1e-12)

    def test_oblique_lines_support(self):
        L1 = subspace(SP, [1.0, 0.3])
        L2 = subspace(SP, [-0.2, 1.0])
        d1 = gaussian_density(L1, 96, 5.0, width=0.9)
        d2 = gaussian_density(L2, 96, 5.0, width=1.1)
        prod = twisted_convolve(density_element(d1), density_element(d2))
        rep = prod.reports[0]
        assert rep.off_plane_leakage < 1e-8
        assert prod.densities[0].support.dim == 2
        # mass bounded by the product (binning can only interfere downward)
        assert prod.densities[0].l1() <= d1.l1() * d2.l1() + 1e-9

    def test_norm_submultiplicative(self):
        rng = np.random.default_rng(4)
        mu, nu = random_comb(rng), random_comb(rng)
        assert l1_norm(twisted_convolve(mu, nu)) <= l1_norm(mu) * l1_norm(nu) + 1e-12


class TestSymplecticFourier:
    def test_gaussian_fixed_point(self):
        # closed form: width-s gaussian maps to s^2 e^{-|xi|^2 s^2 / 2}
        full = full_subspace(SP)
        for s in (1.0, 1.3):
            g = gaussian_density(full, 128, 10.0, width=s)
            Fg = symplectic_fourier(g)
            pts = Fg.grid_coords()
            oracle = s**2 * np.exp(-np.sum(pts**2, axis=1) * s**2 / 2.0)
            assert np.abs(Fg.samples.ravel() - oracle).max() < 1e-10

    def test_involution(self):
        full = full_subspace(SP)
        g = gaussian_density(full, 256, 10.0, center=(0.5, -0.3), width=1.1)
        FFg = symplectic_fourier(symplectic_fourier(g))
        assert np.abs(FFg.samples - g.samples).max() < 1e-8

    def test_delta_approximant_near_constant(self):
        full = full_subspace(SP)
        m = 64
        d0 = DensityOnSubspace(full, m, 8.0, np.zeros((m, m)))
        samples = np.zeros((m, m), dtype=complex)
        samples[m // 2, m // 2] = 1.0 / d0.cell_volume()
        d = DensityOnSubspace(full, m, 8.0, samples)
        F = symplectic_fourier(d)
        mods = np.abs(F.samples)
        assert mods.std() / mods.mean() < 1e-10
        assert mods.mean() == pytest.approx(1.0 / (2 * np.pi), rel=1e-6)

    def test_requires_full_support(self):
        E = subspace(SP, [1.0, 0.0])
        d = gaussian_density(E, 64, 4.0)
        with pytest.raises(TwistedError):
            symplectic_fourier(d)

    def test_requires_power_of_two(self):
        full = full_subspace(SP)
        d = gaussian_density(full, 48, 4.0)
        with pytest.raises(TwistedError):
            symplectic_fourier(d)
