import math

import numpy as np
import pytest

import wavepencil as wp
from wavepencil import assembly_kernels as kernels
from wavepencil.spaces import SpaceError, build_spaces, zero_mean_transform

PI = math.pi


def test_minimal_grid_dof_counts():
    m = wp.generate_homogeneous_rect(PI, PI, 2, 2, PI / 2)
    sp = build_spaces(m)
    assert sp.n_pi == 1          # only the centre node survives Dirichlet
    assert sp.n_psi == 8         # 9 nodes minus the mean constraint
    assert sp.gram.shape == (9, 9)


def test_gram_blocks_match_unweighted_assembly(slab_spaces):
    a1 = wp.assemble_a1(slab_spaces, 1.0, 1.0)
    assert np.array_equal(a1, slab_spaces.gram)
    a2 = wp.assemble_a2(slab_spaces, 1.0, 1.0)
    assert np.array_equal(a2, slab_spaces.gram)


def test_gram_positive_definite_and_symmetric(slab_spaces):
    g = slab_spaces.gram
    assert np.abs(g - g.T).max() == 0.0
    evals = np.linalg.eigvalsh(g)
    assert evals[0] > 0.0


def test_null_basis_annihilates_mean(slab_spaces):
    z = slab_spaces.null_basis
    m = slab_spaces.mean_vector
    assert np.abs(m @ z).max() <= 1e-14 * np.linalg.norm(m)
    # orthonormal columns
    assert np.abs(z.T @ z - np.eye(z.shape[1])).max() <= 1e-13


def test_psi_vectors_have_zero_weighted_mean(slab_spaces):
    rng = np.random.default_rng(3)
    y = rng.standard_normal(slab_spaces.n_psi)
    psi = slab_spaces.psi_nodal(y)
    assert abs(slab_spaces.mean_vector @ psi) <= 1e-14 * np.linalg.norm(psi)


def test_constant_vector_outside_null_basis_range(slab_spaces):
    z = slab_spaces.null_basis
    ones = np.ones(z.shape[0])
    residual = ones - z @ (z.T @ ones)
    # projection defect equals |m^T 1| / ||m|| > 0: the constant is excluded
    m = slab_spaces.mean_vector
    expected = abs(m @ ones) / np.linalg.norm(m)
    assert np.linalg.norm(residual) == pytest.approx(expected, rel=1e-12)
    assert np.linalg.norm(residual) > 0.1


def test_zero_mean_transform_identity(slab_spaces):
    n = slab_spaces.mesh.n_nodes
    red = zero_mean_transform(slab_spaces, np.eye(n))
    assert red.shape == (n - 1, n - 1)
    assert np.abs(red - red.T).max() == 0.0
    assert np.linalg.eigvalsh(red)[0] > 0.99


def test_zero_mean_transform_kills_rank_one_mean(slab_spaces):
    m = slab_spaces.mean_vector
    red = zero_mean_transform(slab_spaces, np.outer(m, m))
    assert np.abs(red).max() <= 1e-14 * np.dot(m, m)


def test_zero_mean_transform_dimension_mismatch(slab_spaces):
    with pytest.raises(ValueError):
        zero_mean_transform(slab_spaces, np.eye(3))


def test_zero_mean_transform_accepts_sparse(slab_spaces):
    mass = kernels.nodal_mass(slab_spaces.mesh, 1.0, 1.0)
    red = zero_mean_transform(slab_spaces, mass)
    assert np.abs(red - red.T).max() == 0.0


def test_under_resolved_mesh_rejected():
    # every node of this two-triangle square lies on the shield
    text = "\n".join([
        "nodes 4", "0 0", "1 0", "1 1", "0 1",
        "triangles 2", "0 1 2 1", "0 2 3 2",
        "edges 5", "0 1 gamma0", "1 2 gamma0", "2 3 gamma0", "3 0 gamma0",
        "0 2 gamma",
    ]) + "\n"
    mesh = wp.load_mesh(text)
    with pytest.raises(SpaceError):
        build_spaces(mesh)


def test_slit_dof_counts(slit_mesh):
    sp = build_spaces(slit_mesh)
    # plain 4x4 slab has 9 interior nodes; the slit eliminates the
    # duplicated interior node (both copies) and the junction node
    plain = build_spaces(wp.generate_rect_slab(PI, PI, PI / 2, 4, 4))
    assert plain.n_pi == 9
    assert sp.n_pi == 7
    # the magnetic space gains exactly the duplicated node
    assert sp.n_psi == plain.n_psi + 1
