"""Sesquilinear forms of the eigenproblem as matrices over the product space.

Four Hermitian operators are assembled relative to the constrained
spaces: two weighted gradient forms, the weighted L2 form, and the
interface coupling between the two fields.  The coupling is assembled by
two independent routes -- a line integral over the oriented interface and
an equivalent signed volume form -- whose agreement is the regression
test for the orientation convention.

All assembly is real: the forms have real coefficients, so Hermiticity
checks are plain symmetry checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assembly_kernels as kernels
from .spaces import FieldSpaces, zero_mean_transform


class AssemblyError(ValueError):
    """Invalid material parameters or inconsistent interface data."""


@dataclass(frozen=True)
class PencilMatrices:
    """The four operator matrices with their permittivities and Gram matrix.

    Blocks are ordered electric field first, magnetic field second.  The
    gradient and L2 forms are block diagonal; the interface coupling is
    block off-diagonal and flips sign under the field-parity operator.
    """

    spaces: FieldSpaces
    eps1: float
    eps2: float
    k: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    s: np.ndarray

    @property
    def gram(self):
        return self.spaces.gram

    @property
    def eps_max(self):
        return max(self.eps1, self.eps2)

    @property
    def n(self):
        return self.spaces.n


def _check_eps(eps1, eps2):
    if not (eps1 >= 1.0 and eps2 >= 1.0):
        raise AssemblyError("relative permittivities must be real and >= 1")


def _block_diag(spaces, pi_block, psi_block):
    n_pi, n = spaces.n_pi, spaces.n
    out = np.zeros((n, n))
    out[:n_pi, :n_pi] = pi_block
    out[n_pi:, n_pi:] = psi_block
    return out


def _pi_restrict(spaces, nodal):
    return nodal[np.ix_(spaces.pi_nodes, spaces.pi_nodes)].toarray()


def assemble_a1(spaces, eps1, eps2):
    """Gradient form weighted by the permittivity on the electric block."""
    _check_eps(eps1, eps2)
    mesh = spaces.mesh
    weighted = kernels.nodal_stiffness(mesh, eps1, eps2)
    plain = kernels.nodal_stiffness(mesh, 1.0, 1.0)
    return _block_diag(spaces,
                       _pi_restrict(spaces, weighted),
                       zero_mean_transform(spaces, plain))


def assemble_a2(spaces, eps1, eps2):
    """Gradient form weighted by the inverse permittivity on the magnetic block."""
    _check_eps(eps1, eps2)
    mesh = spaces.mesh
    plain = kernels.nodal_stiffness(mesh, 1.0, 1.0)
    weighted = kernels.nodal_stiffness(mesh, 1.0 / eps1, 1.0 / eps2)
    return _block_diag(spaces,
                       _pi_restrict(spaces, plain),
                       zero_mean_transform(spaces, weighted))


def assemble_k(spaces, eps1, eps2):
    """L2 form, permittivity-weighted on the electric block.  Positive definite."""
    _check_eps(eps1, eps2)
    mesh = spaces.mesh
    weighted = kernels.nodal_mass(mesh, eps1, eps2)
    plain = kernels.nodal_mass(mesh, 1.0, 1.0)
    return _block_diag(spaces,
                       _pi_restrict(spaces, weighted),
                       zero_mean_transform(spaces, plain))


def _check_interface(spaces):
    mesh = spaces.mesh
    keys = {tuple(sorted(map(int, e))) for e in mesh.interface_edges}
    tagged = {tuple(sorted(map(int, e)))
              for e, tag in zip(mesh.edges, mesh.edge_tags) if tag == "gamma"}
    if keys != tagged or len(keys) != len(mesh.interface_edges):
        raise AssemblyError("inconsistent interface edge data")


def _couple(spaces, bottom_nodal, top_nodal):
    """Assemble the off-diagonal coupling from two nodal pairing matrices.

    ``bottom_nodal[i, j]`` pairs the magnetic test node i with the electric
    trial node j; ``top_nodal`` the electric test with the magnetic trial.
    Both blocks are assembled from the form itself, so an orientation
    fault in the mesh surfaces as a Hermiticity violation instead of being
    silently symmetrised away.
    """
    n_pi, n = spaces.n_pi, spaces.n
    z = spaces.null_basis
    bottom_left = z.T @ (bottom_nodal[:, spaces.pi_nodes].toarray())
    top_right = top_nodal[spaces.pi_nodes, :].toarray() @ z
    out = np.zeros((n, n))
    out[n_pi:, :n_pi] = bottom_left
    out[:n_pi, n_pi:] = top_right
    return out


def assemble_s_line(spaces):
    """Interface coupling from the oriented line integral.

    The electric trial derivative pairs against the magnetic test trace
    with a positive sign and vice versa with a negative one.  Endpoint
    terms vanish because the electric field carries no DOFs on the shield,
    which is exactly what makes the matrix Hermitian.
    """
    _check_interface(spaces)
    d = kernels.interface_line_matrix(spaces.mesh)
    return _couple(spaces, d, (-d).tocsr())


def assemble_s_volume(spaces):
    """Interface coupling from the signed volume form (no line integrals).

    Must agree with assemble_s_line entrywise to rounding on meshes
    without slits; the pair is the orientation-convention oracle.
    """
    v = kernels.volume_skew_matrix(spaces.mesh)
    return _couple(spaces, v, v.T.tocsr())


def assemble_matrices(spaces, eps1, eps2, s_route="line"):
    """Assemble all four operators; ``s_route`` picks 'line' or 'volume'."""
    _check_eps(eps1, eps2)
    s = assemble_s_line(spaces) if s_route == "line" else assemble_s_volume(spaces)
    return PencilMatrices(
        spaces=spaces,
        eps1=float(eps1),
        eps2=float(eps2),
        k=assemble_k(spaces, eps1, eps2),
        a1=assemble_a1(spaces, eps1, eps2),
        a2=assemble_a2(spaces, eps1, eps2),
        s=s,
    )


def write_triplets(matrix, stream):
    """Dump a dense matrix as 'row col value' lines (nonzeros only)."""
    matrix = np.asarray(matrix)
    rows, cols = np.nonzero(matrix)
    for i, j in zip(rows, cols):
        stream.write(f"{i} {j} {matrix[i, j]:.17g}\n")
