"""Structured triangulations of the unit square and their regularity metrics.

Meshes are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SUBDIVISIONS = 2
PATTERNS = ("diagonal", "crisscross")


class MeshError(ValueError):
    """Raised when a triangulation violates a validity check."""


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of the unit square.

    vertices : (V, 2) float array of coordinates in [0, 1]^2
    triangles : (T, 3) int array, counterclockwise vertex triples
    boundary_vertex_mask : (V,) bool
    edges : (E, 2) int array, each row sorted, lexicographic order
    boundary_edge_mask : (E,) bool, True where the edge lies on one triangle
    pattern : "diagonal" or "crisscross"
    level : number of uniform refinements applied since construction
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertex_mask: np.ndarray
    edges: np.ndarray
    boundary_edge_mask: np.ndarray
    pattern: str
    level: int

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class MeshMetrics:
    """Mesh-size and regularity summary.

    h_max / h_min are the largest and smallest triangle diameters,
    quasi_uniformity their ratio, and shape_regularity the worst
    diameter-to-inradius ratio (2*sqrt(3) for equilateral triangles).
    """

    h_max: float
    h_min: float
    quasi_uniformity: float
    shape_regularity: float


def _edge_table(triangles):
    """All undirected edges (rows sorted, lexicographic) with incidence counts."""
    pairs = np.vstack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    pairs = np.sort(pairs, axis=1)
    edges, counts = np.unique(pairs, axis=0, return_counts=True)
    return edges, counts


def _signed_areas(vertices, triangles):
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.cross(b - a, c - a)


def _make_mesh(vertices, triangles, pattern, level):
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    edges, counts = _edge_table(triangles)
    if counts.max(initial=0) > 2:
        raise MeshError("non-conforming mesh: an edge is shared by >2 triangles")
    boundary_edge_mask = counts == 1
    boundary_vertex_mask = np.zeros(len(vertices), dtype=bool)
    boundary_vertex_mask[edges[boundary_edge_mask].ravel()] = True
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_vertex_mask=boundary_vertex_mask,
        edges=edges,
        boundary_edge_mask=boundary_edge_mask,
        pattern=pattern,
        level=level,
    )
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh: Mesh) -> None:
    """Re-run all mesh validity checks; raises MeshError on the first failure."""
    if np.any(_signed_areas(mesh.vertices, mesh.triangles) <= 0.0):
        raise MeshError("triangle with non-positive signed area (orientation)")
    edges, counts = _edge_table(mesh.triangles)
    if not np.array_equal(edges, mesh.edges):
        raise MeshError("stored edge table inconsistent with triangles")
    if not np.array_equal(counts == 1, mesh.boundary_edge_mask):
        raise MeshError("stored boundary edge flags inconsistent")
    if np.any((counts != 1) & (counts != 2)):
        raise MeshError("edge incidence count outside {1, 2}")
    euler = mesh.num_vertices - mesh.num_edges + mesh.num_triangles
    if euler != 1:
        raise MeshError(f"Euler relation V-E+T=1 violated (got {euler})")
    if mesh.vertices.min() < -1e-12 or mesh.vertices.max() > 1.0 + 1e-12:
        raise MeshError("vertex coordinates outside the unit square")


def build_structured_mesh(n: int, pattern: str = "diagonal") -> Mesh:
    """Triangulate the unit square with n subdivisions per side.

    The diagonal pattern splits each cell into two right triangles along
    the cell diagonal; crisscross splits each cell into four triangles
    meeting at the cell center.  n >= 2 keeps interior velocity degrees
    of freedom for every supported element.
    """
    if n < MIN_SUBDIVISIONS:
        raise ValueError(
            f"n={n} below minimum: need n >= {MIN_SUBDIVISIONS} subdivisions per side"
        )
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; choose from {PATTERNS}")

    coords = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    if pattern == "diagonal":
        for j in range(n):
            for i in range(n):
                a, b = vid(i, j), vid(i + 1, j)
                c, d = vid(i + 1, j + 1), vid(i, j + 1)
                tris.append((a, b, c))
                tris.append((a, c, d))
    else:
        centers = np.empty((n * n, 2))
        for j in range(n):
            for i in range(n):
                centers[j * n + i] = ((i + 0.5) / n, (j + 0.5) / n)
        base = (n + 1) ** 2
        vertices = np.vstack([vertices, centers])
        for j in range(n):
            for i in range(n):
                sw, se = vid(i, j), vid(i + 1, j)
                ne, nw = vid(i + 1, j + 1), vid(i, j + 1)
                ctr = base + j * n + i
                tris.extend([(sw, se, ctr), (se, ne, ctr), (ne, nw, ctr), (nw, sw, ctr)])

    return _make_mesh(vertices, np.array(tris), pattern, level=0)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into 4 congruent children via edge midpoints."""
    midpoint_id = {tuple(e): mesh.num_vertices + k for k, e in enumerate(mesh.edges)}
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    def mid(a, b):
        return midpoint_id[(a, b) if a < b else (b, a)]

    tris = []
    for a, b, c in mesh.triangles:
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        tris.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])

    return _make_mesh(vertices, np.array(tris), mesh.pattern, mesh.level + 1)


def mesh_metrics(mesh: Mesh) -> MeshMetrics:
    """Exact per-triangle diameters and inradii from the vertex coordinates."""
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    lab = np.linalg.norm(b - a, axis=1)
    lbc = np.linalg.norm(c - b, axis=1)
    lca = np.linalg.norm(a - c, axis=1)
    diam = np.maximum(np.maximum(lab, lbc), lca)
    area = 0.5 * np.cross(b - a, c - a)
    inradius = 2.0 * area / (lab + lbc + lca)
    return MeshMetrics(
        h_max=float(diam.max()),
        h_min=float(diam.min()),
        quasi_uniformity=float(diam.max() / diam.min()),
        shape_regularity=float((diam / inradius).max()),
    )


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text mesh dump: 'V T E' header, vertex lines 'x y flag', triangle lines."""
    lines = [f"{mesh.num_vertices} {mesh.num_triangles} {mesh.num_edges}"]
    for (x, y), flag in zip(mesh.vertices, mesh.boundary_vertex_mask):
        lines.append(f"{x:.17g} {y:.17g} {int(flag)}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    return "\n".join(lines) + "\n"
