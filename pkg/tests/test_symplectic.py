import numpy as np
import pytest

from fieldalg.symplectic import (
    CentralizerSplit,
    SymplecticError,
    SymplecticSpace,
    centralizer_split,
    classify,
    full_subspace,
    holonomic_split,
    lattice_intersect,
    lattice_sum,
    sigma,
    sigma_complement,
    standard_form,
    standard_space,
    standard_split,
    subspace,
    subspace_distance,
    subspace_equal,
    subspace_leq,
    symplectic_basis,
    zero_subspace,
)


def random_space(rng, n):
    # congruence-perturbed standard form: M^T J M stays antisymmetric invertible
    M = np.eye(2 * n) + 0.3 * rng.standard_normal((2 * n, 2 * n))
    J = M.T @ standard_form(n) @ M
    return SymplecticSpace(0.5 * (J - J.T))


def random_subspace(rng, space, k):
    return subspace(space, rng.standard_normal((k, space.dim)))


def gram_rank_classify(E):
    """Oracle: classification from the rank of the sigma Gram matrix."""
    B = E.basis
    G = B.T @ E.ambient.form @ B
    rank = np.linalg.matrix_rank(G, tol=1e-10) if E.dim else 0
    n2 = E.ambient.dim
    if rank == 0 and 2 * E.dim == n2:
        return "lagrangian"
    if rank == E.dim:
        return "symplectic"
    if rank == 0:
        return "isotropic"
    return None  # involutive/generic need inclusion tests; not covered here


class TestSigma:
    def test_standard_r2_pair(self):
        sp = standard_space(1)
        assert sigma(sp, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(-1.0)

    def test_antisymmetry_on_self(self):
        sp = standard_space(2)
        xi = np.array([0.3, -1.2, 0.7, 0.1])
        assert sigma(sp, xi, xi) == 0.0

    def test_antisymmetry_random(self):
        rng = np.random.default_rng(0)
        sp = standard_space(2)
        for _ in range(20):
            xi, eta = rng.standard_normal((2, 4))
            assert abs(sigma(sp, xi, eta) + sigma(sp, eta, xi)) < 1e-14

    def test_dimension_mismatch(self):
        sp = standard_space(1)
        with pytest.raises(SymplecticError):
            sigma(sp, [1.0, 0.0, 0.0], [0.0, 1.0])

    def test_degenerate_form_rejected(self):
        with pytest.raises(SymplecticError):
            SymplecticSpace(np.zeros((2, 2)))

    def test_nonantisymmetric_rejected(self):
        with pytest.raises(SymplecticError):
            SymplecticSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestComplement:
    def test_line_in_r2_is_lagrangian(self):
        sp = standard_space(1)
        E = subspace(sp, [1.0, 0.0])
        assert subspace_equal(sigma_complement(E), E)

    def test_zero_gives_full(self):
        sp = standard_space(2)
        assert sigma_complement(zero_subspace(sp)).dim == 4

    def test_double_complement_random(self):
        rng = np.random.default_rng(1)
        for trial in range(8):
            sp = random_space(rng, 2)
            E = random_subspace(rng, sp, 2)
            Ecc = sigma_complement(sigma_complement(E))
            assert subspace_distance(E, Ecc) < 1e-10

    def test_dimension_identity(self):
        rng = np.random.default_rng(2)
        sp = random_space(rng, 3)
        for k in range(7):
            E = random_subspace(rng, sp, k)
            assert E.dim + sigma_complement(E).dim == 6

    def test_de_morgan(self):
        rng = np.random.default_rng(3)
        sp = random_space(rng, 3)
        for _ in range(5):
            E = random_subspace(rng, sp, 2)
            F = random_subspace(rng, sp, 3)
            lhs = sigma_complement(lattice_intersect(E, F))
            rhs = lattice_sum(sigma_complement(E), sigma_complement(F))
            assert subspace_distance(lhs, rhs) < 1e-9
            lhs2 = sigma_complement(lattice_sum(E, F))
            rhs2 = lattice_intersect(sigma_complement(E), sigma_complement(F))
            assert subspace_distance(lhs2, rhs2) < 1e-9


class TestClassify:
    def test_lagrangian_line(self):
        sp = standard_space(1)
        assert classify(subspace(sp, [0.3, 0.8])) == "lagrangian"

    def test_full_space_symplectic(self):
        sp = standard_space(2)
        assert classify(full_subspace(sp)) == "symplectic"

    def test_coordinate_plane_r4(self):
        # span{e1, e3} pairs x1 with k1: symplectic
        sp = standard_space(2)
        E = subspace(sp, [[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
        assert classify(E) == "symplectic"
        assert gram_rank_classify(E) == "symplectic"

    def test_isotropic_plane_r4(self):
        sp = standard_space(2)
        E = subspace(sp, [[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        assert classify(E) == "lagrangian"
        assert gram_rank_classify(E) == "lagrangian"

    def test_symplectic_iff_trivial_intersection(self):
        rng = np.random.default_rng(4)
        sp = random_space(rng, 2)
        for k in (1, 2, 3):
            for _ in range(6):
                E = random_subspace(rng, sp, k)
                trivial = lattice_intersect(E, sigma_complement(E)).dim == 0
                assert (classify(E) == "symplectic") == trivial


class TestSymplecticBasis:
    def test_standard_r2(self):
        pairs = symplectic_basis(standard_space(1))
        assert len(pairs) == 1
        xi, eta = pairs[0]
        assert abs(abs(xi @ standard_form(1) @ eta) - 1.0) < 1e-12

    def test_standard_r4_two_pairs(self):
        assert len(symplectic_basis(standard_space(2))) == 2

    def test_gram_identities_perturbed(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            sp = random_space(rng, 3)
            pairs = symplectic_basis(sp)
            assert len(pairs) == 3
            for i, (xi, eta) in enumerate(pairs):
                for j, (xj, ej) in enumerate(pairs):
                    assert abs(sigma(sp, xi, xj)) < 1e-10
                    assert abs(sigma(sp, eta, ej)) < 1e-10
                    want = 1.0 if i == j else 0.0
                    assert abs(sigma(sp, xi, ej) - want) < 1e-10


class TestLattice:
    def test_identity_laws(self):
        sp = standard_space(2)
        rng = np.random.default_rng(6)
        E = random_subspace(rng, sp, 2)
        assert subspace_equal(lattice_sum(E, zero_subspace(sp)), E)
        assert subspace_equal(lattice_intersect(E, full_subspace(sp)), E)

    def test_two_lines_r2(self):
        sp = standard_space(1)
        L1 = subspace(sp, [1.0, 0.2])
        L2 = subspace(sp, [0.1, 1.0])
        assert lattice_sum(L1, L2).dim == 2
        assert lattice_intersect(L1, L2).dim == 0

    def test_dimension_identity_r6(self):
        rng = np.random.default_rng(7)
        sp = random_space(rng, 3)
        for _ in range(10):
            E = random_subspace(rng, sp, rng.integers(1, 4))
            F = random_subspace(rng, sp, rng.integers(1, 4))
            s = lattice_sum(E, F).dim + lattice_intersect(E, F).dim
            assert s == E.dim + F.dim

    def test_ambient_mismatch(self):
        E = subspace(standard_space(1), [1.0, 0.0])
        F = subspace(standard_space(2), [1.0, 0, 0, 0])
        with pytest.raises(SymplecticError):
            lattice_sum(E, F)


class TestCentralizerSplit:
    def check_invariants(self, cs: CentralizerSplit):
        sp = cs.E.ambient
        # direct sum ranks
        assert cs.G.dim + cs.Ec.dim == cs.E.dim
        stacked = np.hstack([cs.E.basis, cs.F.basis, cs.K.basis])
        assert np.linalg.matrix_rank(stacked, tol=1e-10) == sp.dim
        # G, F symplectic
        for S in (cs.G, cs.F):
            if S.dim:
                assert classify(S) == "symplectic"
        # sigma vanishes on Ec x (G + F)
        GF = lattice_sum(cs.G, cs.F)
        if cs.Ec.dim and GF.dim:
            M = cs.Ec.basis.T @ sp.form @ GF.basis
            assert np.abs(M).max() < 1e-10
        # K Lagrangian complement of Ec inside (G+F)^sigma
        Hs = sigma_complement(GF)
        assert subspace_leq(cs.K, Hs)
        assert lattice_intersect(cs.K, cs.Ec).dim == 0
        assert cs.K.dim == cs.Ec.dim
        if cs.K.dim:
            MK = cs.K.basis.T @ sp.form @ cs.K.basis
            assert np.abs(MK).max() < 1e-10

    def test_symplectic_input(self):
        sp = standard_space(2)
        E = subspace(sp, [[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
        cs = centralizer_split(E)
        assert cs.Ec.dim == 0 and cs.K.dim == 0
        assert subspace_equal(cs.G, E)
        assert subspace_equal(cs.F, sigma_complement(E))
        self.check_invariants(cs)

    def test_lagrangian_line_r2(self):
        sp = standard_space(1)
        E = subspace(sp, [0.6, -0.4])
        cs = centralizer_split(E)
        assert subspace_equal(cs.Ec, E)
        assert cs.G.dim == 0 and cs.F.dim == 0 and cs.K.dim == 1
        self.check_invariants(cs)

    def test_random_planes_r4(self):
        rng = np.random.default_rng(8)
        for trial in range(10):
            sp = random_space(rng, 2)
            E = random_subspace(rng, sp, 2)
            self.check_invariants(centralizer_split(E))

    def test_random_r6(self):
        rng = np.random.default_rng(9)
        sp = random_space(rng, 3)
        for k in (1, 2, 3, 4):
            self.check_invariants(centralizer_split(random_subspace(rng, sp, k)))


class TestSplits:
    def test_standard_split_pairing_identity(self):
        split = standard_split(standard_space(2))
        assert np.allclose(split.pairing, np.eye(2))

    def test_holonomic_split_random_form(self):
        rng = np.random.default_rng(10)
        sp = random_space(rng, 2)
        split = holonomic_split(sp)
        xi = rng.standard_normal(4)
        a, b = split.coords(xi)
        assert np.allclose(split.assemble(a, b), xi)

    def test_inclusion_order(self):
        sp = standard_space(2)
        E = subspace(sp, [1.0, 0, 0, 0])
        F = subspace(sp, [[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
        assert subspace_leq(E, F)
        assert not subspace_leq(F, E)
