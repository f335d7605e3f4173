"""Discrete product space for the longitudinal field pair.

First-order nodal elements for both scalar fields:

* the electric longitudinal component lives in the space with zero trace
  on the shield (outer boundary and both slit sides), so those nodes are
  eliminated;
* the magnetic longitudinal component lives in the zero-mean space; the
  constraint is imposed through an explicit orthonormal null-space basis
  (Householder complement of the per-node mean vector), which keeps every
  reduced matrix congruent to its nodal origin.

The Gram matrix of the product space is the block-diagonal stiffness
(gradient) inner product; all operator bounds downstream are relative
to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import assembly_kernels as kernels
from .mesh import Mesh


class SpaceError(ValueError):
    """Mesh cannot support the constrained discrete spaces."""


@dataclass(frozen=True)
class FieldSpaces:
    """Degree-of-freedom maps and the Gram matrix of the product space.

    Attributes
    ----------
    mesh : Mesh
    pi_nodes : (n_pi,) int array
        Mesh nodes carrying electric-field unknowns (not on gamma0 or on
        a slit side), ascending.
    pi_index : (N,) int array
        Node -> electric dof index, -1 for eliminated nodes.
    mean_vector : (N,) float array
        Integral of each nodal basis function over the cross-section.
    null_basis : (N, N-1) float array
        Orthonormal columns spanning the complement of ``mean_vector``;
        magnetic-field coordinate vectors y map to nodal values
        ``null_basis @ y`` with exactly zero weighted mean.
    gram : (n, n) float array
        Block-diagonal gradient Gram matrix, electric block first.
    """

    mesh: Mesh
    pi_nodes: np.ndarray
    pi_index: np.ndarray
    mean_vector: np.ndarray
    null_basis: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        for arr in (self.pi_nodes, self.pi_index, self.mean_vector,
                    self.null_basis, self.gram):
            arr.setflags(write=False)

    @property
    def n_pi(self):
        return len(self.pi_nodes)

    @property
    def n_psi(self):
        return self.null_basis.shape[1]

    @property
    def n(self):
        return self.n_pi + self.n_psi

    def parity_signs(self):
        """Diagonal of the field-flip operator: -1 on the electric block."""
        signs = np.ones(self.n)
        signs[: self.n_pi] = -1.0
        return signs

    def psi_nodal(self, y):
        """Nodal values of a magnetic-field coordinate vector."""
        return self.null_basis @ y

    def split(self, v):
        """Split a product-space vector into (electric, magnetic) parts."""
        return v[: self.n_pi], v[self.n_pi:]

    def nodal_fields(self, v):
        """Expand a product-space vector to two full nodal vectors."""
        pi_part, psi_part = self.split(v)
        pi_nodal = np.zeros(self.mesh.n_nodes, dtype=v.dtype)
        pi_nodal[self.pi_nodes] = pi_part
        return pi_nodal, self.null_basis @ psi_part


def _householder_complement(m):
    """Orthonormal basis of the hyperplane orthogonal to m.

    Columns 2..N of the Householder reflector sending m to a multiple of
    the first unit vector.  m must have a positive first entry, which
    holds for mean vectors (every node owns positive patch area).
    """
    v = m.astype(float).copy()
    v[0] += np.sign(v[0]) * np.linalg.norm(m)
    h = np.eye(len(m)) - (2.0 / np.dot(v, v)) * np.outer(v, v)
    return h[:, 1:]


def build_spaces(mesh):
    """Construct DOF maps, the zero-mean basis and the Gram matrix.

    Raises
    ------
    SpaceError
        If no electric-field DOFs remain (under-resolved mesh).
    """
    eliminated = mesh.boundary_node_mask()
    pi_nodes = np.where(~eliminated)[0]
    if len(pi_nodes) == 0:
        raise SpaceError("no interior nodes left for the Dirichlet field; "
                         "mesh is under-resolved")
    pi_index = np.full(mesh.n_nodes, -1, dtype=int)
    pi_index[pi_nodes] = np.arange(len(pi_nodes))

    areas = mesh.triangle_areas()
    mean = np.zeros(mesh.n_nodes)
    for tri, area in zip(mesh.triangles, areas):
        mean[tri] += area / 3.0

    null_basis = _householder_complement(mean)

    stiff = kernels.nodal_stiffness(mesh, 1.0, 1.0)
    g_pi = stiff[np.ix_(pi_nodes, pi_nodes)].toarray()
    g_psi = null_basis.T @ (stiff @ null_basis)
    g_psi = 0.5 * (g_psi + g_psi.T)

    n_pi, n_psi = len(pi_nodes), null_basis.shape[1]
    gram = np.zeros((n_pi + n_psi, n_pi + n_psi))
    gram[:n_pi, :n_pi] = g_pi
    gram[n_pi:, n_pi:] = g_psi

    return FieldSpaces(
        mesh=mesh,
        pi_nodes=pi_nodes,
        pi_index=pi_index,
        mean_vector=mean,
        null_basis=null_basis,
        gram=gram,
    )


def _is_hermitian(m):
    if sparse.issparse(m):
        diff = (m - m.conjugate().T).tocoo()
        return diff.nnz == 0 or bool(np.all(diff.data == 0))
    m = np.asarray(m)
    return np.array_equal(m, m.conj().T)


def zero_mean_transform(spaces, nodal_matrix):
    """Reduce a full nodal matrix onto the zero-mean coordinates.

    Returns ``Z^H M Z`` with Z the stored null basis.  Hermiticity of the
    input is preserved exactly: the congruence of a Hermitian matrix is
    Hermitian, so the result is symmetrised to remove summation-order
    rounding.
    """
    z = spaces.null_basis
    if nodal_matrix.shape != (z.shape[0], z.shape[0]):
        raise ValueError(
            f"nodal matrix must be {z.shape[0]}x{z.shape[0]}, "
            f"got {nodal_matrix.shape}")
    reduced = z.conj().T @ (nodal_matrix @ z)
    if _is_hermitian(nodal_matrix):
        reduced = 0.5 * (reduced + reduced.conj().T)
    return reduced
