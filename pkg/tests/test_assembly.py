"""Dirichlet stiffness/mass assembly: Gram-matrix identities and caps."""

import dataclasses

import numpy as np
import pytest

import nlap.fields as F
import nlap.kernels as K


def hard_kernel(dim=1):
    return K.normalize(K.make_kernel("truncated-power", dim, s=0.5,
                                     cutoff="hard"))


@pytest.fixture(scope="module")
def setup_1d():
    delta, h = 0.1, 1.0 / 64
    ker = K.rescale(hard_kernel(), delta, mode="vanishing")
    g = F.build_grid(F.Interval(0.0, 1.0), h, delta)
    return ker, g, F.assemble(g, ker)


@pytest.fixture(scope="module")
def setup_2d():
    delta, h = 0.25, 1.0 / 16
    ker = K.rescale(hard_kernel(dim=2), delta, mode="vanishing")
    g = F.build_grid(F.Rect((0.0, 0.0), (1.0, 1.0)), h, delta)
    return ker, g, F.assemble(g, ker)


class TestStiffness:
    def test_shape_and_mass(self, setup_1d):
        ker, g, op = setup_1d
        assert op.n_dof == 64
        assert op.stiffness.shape == (64, 64)
        assert np.all(op.mass_diag == g.h)

    def test_bitwise_symmetric(self, setup_1d):
        _, _, op = setup_1d
        A = op.stiffness
        assert np.array_equal(A, A.T)

    def test_positive_semidefinite(self, setup_1d):
        _, _, op = setup_1d
        w = np.linalg.eigvalsh(op.stiffness)
        assert w.min() >= -1e-10 * w.max()

    @pytest.mark.parametrize("which", ["1d", "2d"])
    def test_energy_matches_gradient_norm(self, which, setup_1d, setup_2d):
        """u^T A u equals h^n * sum over the box of |grad u|^2 with u
        extended by zero (the Gram identity behind the assembly)."""
        ker, g, op = setup_1d if which == "1d" else setup_2d
        rng = np.random.default_rng(42)
        for _ in range(5):
            v = rng.normal(size=op.n_dof)
            quad = float(v @ (op.stiffness @ v))
            u = F.Field(g, op.embed(v))
            grad = F.nl_gradient(u, ker, backend="spectral").values
            direct = g.h ** g.dim * float(np.sum(grad ** 2))
            np.testing.assert_allclose(quad, direct, rtol=1e-8)
            np.testing.assert_allclose(op.energy(v), direct, rtol=1e-8)

    def test_apply_matches_dense(self, setup_1d):
        _, _, op = setup_1d
        rng = np.random.default_rng(1)
        for _ in range(3):
            v = rng.normal(size=op.n_dof)
            np.testing.assert_allclose(op.apply(v), op.stiffness @ v,
                                       rtol=1e-10, atol=1e-12)

    def test_embed_restrict_roundtrip(self, setup_1d):
        _, g, op = setup_1d
        rng = np.random.default_rng(2)
        v = rng.normal(size=op.n_dof)
        assert np.array_equal(op.restrict(op.embed(v)), v)
        assert np.all(op.embed(v)[~g.domain_mask] == 0.0)

    def test_deterministic(self, setup_1d):
        ker, g, op = setup_1d
        again = F.assemble(g, ker)
        assert np.array_equal(op.stiffness, again.stiffness)

    def test_2d_symmetric_psd(self, setup_2d):
        _, _, op = setup_2d
        A = op.stiffness
        assert np.array_equal(A, A.T)
        w = np.linalg.eigvalsh(A)
        assert w.min() >= -1e-10 * w.max()


class TestGuards:
    def test_dense_cap(self, setup_1d):
        ker, g, _ = setup_1d
        with pytest.raises(ValueError):
            F.assemble(g, ker, dense_cap=10)

    def test_no_interior_nodes(self, setup_1d):
        ker, g, _ = setup_1d
        empty = dataclasses.replace(
            g, domain_mask=np.zeros(g.shape, dtype=bool))
        with pytest.raises(ValueError):
            F.assemble(empty, ker)

    def test_kernel_must_be_grid_ready(self, setup_1d):
        _, g, _ = setup_1d
        raw = K.make_kernel("truncated-power", 1, s=0.5, cutoff="hard")
        with pytest.raises(ValueError):
            F.assemble(g, raw)

    def test_matrix_free_any_size(self, setup_1d):
        ker, g, dense_op = setup_1d
        op = F.assemble_operator(g, ker)
        assert op.stiffness is None
        v = np.random.default_rng(3).normal(size=op.n_dof)
        np.testing.assert_allclose(op.apply(v), dense_op.stiffness @ v,
                                   rtol=1e-10, atol=1e-12)
