"""Triangulated waveguide cross-sections with region and boundary tags.

A cross-section is a bounded polygon split by a dielectric interface into
region 1 and region 2.  Boundary edges carry one of three tags:

* ``gamma0``      -- perfectly conducting shield (outer boundary),
* ``gamma``       -- dielectric interface between the two regions,
* ``gammaprime``  -- shielded part of the interface, realised as a slit
  with duplicated nodes so the two sides carry independent traces.

All coordinates are dimensionless (lengths are premultiplied by the free
space wavenumber).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

GAMMA0 = "gamma0"
GAMMA = "gamma"
GAMMA_PRIME = "gammaprime"

_KNOWN_TAGS = (GAMMA0, GAMMA, GAMMA_PRIME)


class MeshError(ValueError):
    """Invalid geometry parameters or a mesh violating its invariants."""


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation with region and boundary tagging.

    Attributes
    ----------
    nodes : (N, 2) float array
        Node coordinates.
    triangles : (M, 3) int array
        Node index triples, counterclockwise.
    regions : (M,) int array
        Region tag per triangle, 1 or 2.
    edges : (E, 2) int array
        Tagged boundary/interface edges as node index pairs.
    edge_tags : tuple of str
        Tag per row of ``edges``.
    interface_edges : (K, 2) int array
        The ``gamma`` edges in stored orientation: traversing ``i -> j``
        keeps region 1 on the left, so the normal obtained by rotating the
        tangent by +90 degrees points from region 2 into region 1.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    edges: np.ndarray
    edge_tags: tuple
    interface_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.regions, self.edges,
                    self.interface_edges):
            arr.setflags(write=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def triangle_areas(self):
        """Signed areas; positive for counterclockwise triangles."""
        p = self.nodes[self.triangles]
        v1 = p[:, 1] - p[:, 0]
        v2 = p[:, 2] - p[:, 0]
        return 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])

    def boundary_node_mask(self):
        """True for nodes lying on gamma0 or gammaprime edges."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        for (i, j), tag in zip(self.edges, self.edge_tags):
            if tag in (GAMMA0, GAMMA_PRIME):
                mask[i] = True
                mask[j] = True
        return mask

    def interface_node_mask(self):
        mask = np.zeros(self.n_nodes, dtype=bool)
        for i, j in self.interface_edges:
            mask[i] = True
            mask[j] = True
        return mask


def _edge_key(i, j):
    return (i, j) if i < j else (j, i)


def _edge_triangle_map(mesh):
    """Map undirected edge -> list of adjacent triangle indices."""
    adj = {}
    for t, tri in enumerate(mesh.triangles):
        for a in range(3):
            key = _edge_key(int(tri[a]), int(tri[(a + 1) % 3]))
            adj.setdefault(key, []).append(t)
    return adj


def validate(mesh):
    """Check all structural mesh invariants; raise MeshError on violation.

    Checked: index ranges, counterclockwise orientation (positive areas),
    every boundary edge tagged, gamma0/gammaprime edges on the boundary,
    gamma edges separating exactly one region-1 from one region-2 triangle,
    and every interior region-change edge being tagged gamma.
    """
    n = mesh.n_nodes
    if mesh.triangles.size and (mesh.triangles.min() < 0 or mesh.triangles.max() >= n):
        raise MeshError("triangle refers to a nonexistent node")
    if mesh.edges.size and (mesh.edges.min() < 0 or mesh.edges.max() >= n):
        raise MeshError("edge refers to a nonexistent node")
    if not np.all((mesh.regions == 1) | (mesh.regions == 2)):
        raise MeshError("region tags must be 1 or 2")
    for tag in mesh.edge_tags:
        if tag not in _KNOWN_TAGS:
            raise MeshError(f"unknown edge tag {tag!r}")

    areas = mesh.triangle_areas()
    if np.any(areas <= 0.0):
        raise MeshError("triangle with non-positive signed area (nodes must be CCW)")

    adj = _edge_triangle_map(mesh)

    tagged = {}
    for (i, j), tag in zip(mesh.edges, mesh.edge_tags):
        key = _edge_key(int(i), int(j))
        if key in tagged:
            raise MeshError(f"edge {key} tagged more than once")
        tagged[key] = tag

    for key, tag in tagged.items():
        tris = adj.get(key)
        if tris is None:
            raise MeshError(f"tagged edge {key} is not an edge of any triangle")
        if tag == GAMMA:
            if len(tris) != 2:
                raise MeshError(f"gamma edge {key} must separate two triangles")
            regs = {int(mesh.regions[t]) for t in tris}
            if regs != {1, 2}:
                raise MeshError(f"gamma edge {key} is interior to one region")
        else:
            if len(tris) != 1:
                raise MeshError(f"{tag} edge {key} must lie on the boundary")

    for key, tris in adj.items():
        if len(tris) == 1 and key not in tagged:
            raise MeshError(f"untagged boundary edge {key}")
        if len(tris) == 2:
            r0, r1 = int(mesh.regions[tris[0]]), int(mesh.regions[tris[1]])
            if r0 != r1 and tagged.get(key) != GAMMA:
                raise MeshError(f"region-change edge {key} not tagged gamma")
        if len(tris) > 2:
            raise MeshError(f"edge {key} shared by more than two triangles")

    gamma_keys = {k for k, tag in tagged.items() if tag == GAMMA}
    iface_keys = {_edge_key(int(i), int(j)) for i, j in mesh.interface_edges}
    if gamma_keys != iface_keys:
        raise MeshError("interface_edges and gamma-tagged edges disagree")
    return mesh


def interface_orientation_errors(mesh):
    """Return gamma edges whose stored orientation breaks the convention.

    For an edge stored as ``i -> j`` the normal n = rot90(tangent) must
    point from the region-2 triangle into the region-1 triangle; this is
    checked against the adjacent triangle centroids.
    """
    adj = _edge_triangle_map(mesh)
    bad = []
    for i, j in mesh.interface_edges:
        key = _edge_key(int(i), int(j))
        tris = adj[key]
        tau = mesh.nodes[j] - mesh.nodes[i]
        normal = np.array([-tau[1], tau[0]])
        mid = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
        for t in tris:
            centroid = mesh.nodes[mesh.triangles[t]].mean(axis=0)
            side = float(np.dot(normal, centroid - mid))
            reg = int(mesh.regions[t])
            if (reg == 1 and side < 0.0) or (reg == 2 and side > 0.0):
                bad.append((int(i), int(j)))
                break
    return bad


def _grid(width, height, nx, ny):
    xs = np.arange(nx + 1) * (width / nx)
    ys = np.arange(ny + 1) * (height / ny)
    nodes = np.empty(((nx + 1) * (ny + 1), 2))
    for iy in range(ny + 1):
        base = iy * (nx + 1)
        nodes[base:base + nx + 1, 0] = xs
        nodes[base:base + nx + 1, 1] = ys[iy]
    return nodes


def generate_rect_slab(width, height, slab_x, nx, ny):
    """Structured triangulation of [0,width]x[0,height] with a vertical slab.

    Region 2 occupies x < slab_x, region 1 the rest; slab_x is snapped to
    the nearest grid line.  Each grid cell is split along its lower-left to
    upper-right diagonal.  The outer boundary is tagged gamma0 and the
    slab line gamma; there is no gammaprime part.

    Raises
    ------
    MeshError
        For non-positive dimensions, nx or ny < 2, or slab_x outside
        (0, width) after snapping.
    """
    if width <= 0.0 or height <= 0.0:
        raise MeshError("width and height must be positive")
    if nx < 2 or ny < 2:
        raise MeshError("nx and ny must be at least 2")
    if not (0.0 < slab_x < width):
        raise MeshError("slab_x must lie strictly inside (0, width)")
    js = int(round(slab_x / (width / nx)))
    if js <= 0 or js >= nx:
        raise MeshError("slab_x snaps onto the outer boundary; refine the grid")

    nodes = _grid(width, height, nx, ny)

    def nid(ix, iy):
        return iy * (nx + 1) + ix

    triangles = []
    regions = []
    for iy in range(ny):
        for ix in range(nx):
            a = nid(ix, iy)
            b = nid(ix + 1, iy)
            c = nid(ix + 1, iy + 1)
            d = nid(ix, iy + 1)
            reg = 2 if ix < js else 1
            triangles.append((a, b, c))
            triangles.append((a, c, d))
            regions.extend((reg, reg))

    edges = []
    tags = []
    for ix in range(nx):
        edges.append((nid(ix, 0), nid(ix + 1, 0)))
        edges.append((nid(ix, ny), nid(ix + 1, ny)))
        tags.extend((GAMMA0, GAMMA0))
    for iy in range(ny):
        edges.append((nid(0, iy), nid(0, iy + 1)))
        edges.append((nid(nx, iy), nid(nx, iy + 1)))
        tags.extend((GAMMA0, GAMMA0))

    # Interface edges run top -> bottom so that region 1 (x > slab_x) lies
    # on the left of the tangent.
    interface = [(nid(js, iy + 1), nid(js, iy)) for iy in range(ny)]
    edges.extend(interface)
    tags.extend([GAMMA] * ny)

    mesh = Mesh(
        nodes=nodes,
        triangles=np.array(triangles, dtype=int),
        regions=np.array(regions, dtype=int),
        edges=np.array(edges, dtype=int),
        edge_tags=tuple(tags),
        interface_edges=np.array(interface, dtype=int),
    )
    return validate(mesh)


def generate_homogeneous_rect(width, height, nx, ny, interface_x):
    """Rectangle meshed like generate_rect_slab with the interface retained.

    Intended for homogeneous-filling runs: the caller assigns equal
    permittivities downstream, and the interface line keeps the coupling
    matrix assembled so its decoupling invariants stay testable.
    """
    return generate_rect_slab(width, height, interface_x, nx, ny)


def save_mesh(mesh):
    """Serialise a mesh to the line-oriented text format."""
    out = io.StringIO()
    out.write(f"nodes {mesh.n_nodes}\n")
    for x, y in mesh.nodes:
        out.write(f"{x:.17g} {y:.17g}\n")
    out.write(f"triangles {mesh.n_triangles}\n")
    for (i, j, k), reg in zip(mesh.triangles, mesh.regions):
        out.write(f"{i} {j} {k} {reg}\n")
    out.write(f"edges {len(mesh.edges)}\n")
    for (i, j), tag in zip(mesh.edges, mesh.edge_tags):
        out.write(f"{i} {j} {tag}\n")
    return out.getvalue()


def load_mesh(text):
    """Parse the text format and validate every mesh invariant.

    Gamma edges keep their file ordering as the stored interface
    orientation.  Slits (gammaprime) arrive as duplicated node pairs; no
    geometric deduplication is attempted.
    """
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            stripped = lines[pos].strip()
            pos += 1
            if stripped and not stripped.startswith("#"):
                return pos, stripped
        return pos, None

    def read_count(keyword):
        lineno, line = next_line()
        parts = line.split() if line else []
        if len(parts) != 2 or parts[0] != keyword:
            raise MeshError(f"line {lineno}: expected '{keyword} <count>'")
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshError(f"line {lineno}: malformed count {parts[1]!r}") from None
        if count < 0:
            raise MeshError(f"line {lineno}: negative count")
        return count

    n_nodes = read_count("nodes")
    nodes = np.empty((n_nodes, 2))
    for k in range(n_nodes):
        lineno, line = next_line()
        parts = line.split() if line else []
        if len(parts) != 2:
            raise MeshError(f"line {lineno}: expected 'x y'")
        try:
            nodes[k] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise MeshError(f"line {lineno}: malformed coordinate") from None

    n_tri = read_count("triangles")
    triangles = np.empty((n_tri, 3), dtype=int)
    regions = np.empty(n_tri, dtype=int)
    for k in range(n_tri):
        lineno, line = next_line()
        parts = line.split() if line else []
        if len(parts) != 4:
            raise MeshError(f"line {lineno}: expected 'i j k region'")
        try:
            triangles[k] = [int(p) for p in parts[:3]]
            regions[k] = int(parts[3])
        except ValueError:
            raise MeshError(f"line {lineno}: malformed triangle") from None

    n_edges = read_count("edges")
    edges = np.empty((n_edges, 2), dtype=int)
    tags = []
    interface = []
    for k in range(n_edges):
        lineno, line = next_line()
        parts = line.split() if line else []
        if len(parts) != 3:
            raise MeshError(f"line {lineno}: expected 'i j tag'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise MeshError(f"line {lineno}: malformed edge") from None
        tag = parts[2]
        if tag not in _KNOWN_TAGS:
            raise MeshError(f"line {lineno}: unknown edge tag {tag!r}")
        edges[k] = (i, j)
        tags.append(tag)
        if tag == GAMMA:
            interface.append((i, j))

    _, extra = next_line()
    if extra is not None:
        raise MeshError("trailing content after edge list")

    mesh = Mesh(
        nodes=nodes,
        triangles=triangles,
        regions=regions,
        edges=edges,
        edge_tags=tuple(tags),
        interface_edges=np.array(interface, dtype=int).reshape(-1, 2),
    )
    return validate(mesh)


def meshes_equal(a, b):
    """Node-for-node equality, used by the round-trip tests."""
    return (
        np.array_equal(a.nodes, b.nodes)
        and np.array_equal(a.triangles, b.triangles)
        and np.array_equal(a.regions, b.regions)
        and np.array_equal(a.edges, b.edges)
        and a.edge_tags == b.edge_tags
        and np.array_equal(a.interface_edges, b.interface_edges)
    )
