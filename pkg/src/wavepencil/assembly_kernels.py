"""Element-level assembly kernels over the full nodal basis.

Linear triangles with exact closed-form integration: gradients are
per-triangle constants, mass uses the (area/12)(1 + delta_ij) rule, and
the interface line matrix reduces to +-1/2 entries per oriented edge
(the edge length cancels between the constant tangential derivative and
the linear trace integral).

Matrices are returned in CSR form over all mesh nodes; constraints are
applied downstream.  The triplet accumulation order is fixed by the
element loop, so repeated assembly is bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse


def triangle_geometry(mesh):
    """Areas and constant P1 basis gradients per triangle.

    Returns
    -------
    areas : (M,) array
    grads : (M, 3, 2) array
        grads[t, a] is the gradient of the basis function of local node a.
    """
    p = mesh.nodes[mesh.triangles]
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    areas = 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    grads = np.empty((len(areas), 3, 2))
    for a in range(3):
        opp1 = p[:, (a + 1) % 3]
        opp2 = p[:, (a + 2) % 3]
        grads[:, a, 0] = opp1[:, 1] - opp2[:, 1]
        grads[:, a, 1] = opp2[:, 0] - opp1[:, 0]
    grads /= (2.0 * areas)[:, None, None]
    return areas, grads


def _region_weight(mesh, w1, w2):
    return np.where(mesh.regions == 1, w1, w2)


def _accumulate(mesh, local):
    """Scatter (M, 3, 3) element matrices into a CSR over all nodes."""
    n = mesh.n_nodes
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def nodal_stiffness(mesh, w1, w2):
    """Gradient form with a piecewise-constant region weight."""
    areas, grads = triangle_geometry(mesh)
    w = _region_weight(mesh, w1, w2) * areas
    local = np.einsum("t,tad,tbd->tab", w, grads, grads)
    return _accumulate(mesh, local)


def nodal_mass(mesh, w1, w2):
    """L2 form with a piecewise-constant region weight, exact quadrature."""
    areas, _ = triangle_geometry(mesh)
    w = _region_weight(mesh, w1, w2) * areas
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = w[:, None, None] * base
    return _accumulate(mesh, local)


def interface_line_matrix(mesh):
    """Line matrix D[i, j] = integral over the interface of (d phi_j / d tau) phi_i.

    Uses the stored edge orientation.  Per oriented edge (a, b) the exact
    contributions are D[a,a] = D[b,a] = -1/2 and D[a,b] = D[b,b] = +1/2,
    independent of the edge length.
    """
    n = mesh.n_nodes
    rows, cols, vals = [], [], []
    for a, b in mesh.interface_edges:
        rows.extend((a, a, b, b))
        cols.extend((a, b, a, b))
        vals.extend((-0.5, 0.5, -0.5, 0.5))
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return mat.tocsr()


def volume_skew_matrix(mesh):
    """Volume form equivalent of the interface coupling.

    V[i, j] = sum over triangles of (xi/2) * area *
              (d2 phi_j * d1 phi_i - d1 phi_j * d2 phi_i),
    with xi = +1 on region 1 and -1 on region 2.  Row index i is the test
    function, column j the trial function.
    """
    areas, grads = triangle_geometry(mesh)
    xi = np.where(mesh.regions == 1, 1.0, -1.0)
    w = 0.5 * xi * areas
    # local[a, b] pairs test a with trial b
    local = np.einsum("t,tb,ta->tab", w, grads[:, :, 1], grads[:, :, 0]) \
        - np.einsum("t,tb,ta->tab", w, grads[:, :, 0], grads[:, :, 1])
    return _accumulate(mesh, local)
