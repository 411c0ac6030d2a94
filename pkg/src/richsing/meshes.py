"""Subdivided icosahedron meshes of S^2.

Subdivision appends normalized edge midpoints after the parent vertices, so
level-L vertices are a prefix of level-(L+1) vertices and the midpoint of
edge k at level L is vertex V_L + k at level L+1.  The base icosahedron is
centrally symmetric and midpoints of antipodal edges are exact floating-point
negations, so every level carries an exact antipodal vertex involution.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def _edges_and_face_ids(faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographically sorted unique edges and the (F, 3) table mapping each
    face's edges (01, 12, 20) to rows of the edge array."""
    pairs = np.sort(
        np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]),
        axis=1,
    )
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    # pairs were stacked blockwise: edge 01 rows, then 12, then 20
    f = faces.shape[0]
    face_eids = np.column_stack([inverse[:f], inverse[f:2 * f], inverse[2 * f:]])
    return edges, face_eids


class SphereMesh:
    """Closed triangulated 2-sphere: unit vertices, faces, sorted edge table."""

    def __init__(self, level: int, vertices: np.ndarray, faces: np.ndarray):
        self.level = level
        self.vertices = vertices
        self.faces = faces
        self.edges, self.face_edge_ids = _edges_and_face_ids(faces)
        self._antipodal = None
        self._adjacency = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def edge_face_incidence_ok(self) -> bool:
        counts = np.bincount(self.face_edge_ids.ravel(), minlength=self.n_edges)
        return bool(np.all(counts == 2))

    def midpoints(self) -> np.ndarray:
        """Normalized edge midpoints; identical to the new vertices of the
        next subdivision level, in the same order."""
        mids = self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]]
        return mids / np.linalg.norm(mids, axis=1, keepdims=True)

    @property
    def antipodal_index(self) -> np.ndarray:
        """Permutation a with vertices[a[i]] == -vertices[i] exactly."""
        if self._antipodal is None:
            # adding 0.0 maps -0.0 to +0.0 so byte keys are canonical
            lookup = {(v + 0.0).tobytes(): i for i, v in enumerate(self.vertices)}
            anti = np.empty(self.n_vertices, dtype=np.int64)
            for i, v in enumerate(self.vertices):
                anti[i] = lookup[(-v + 0.0).tobytes()]
            self._antipodal = anti
        return self._antipodal

    @property
    def antipodal_edge_index(self) -> np.ndarray:
        """Permutation of edge rows induced by the antipodal map."""
        anti = self.antipodal_index
        mapped = np.sort(anti[self.edges], axis=1)
        nv = self.n_vertices
        keys = self.edges[:, 0] * nv + self.edges[:, 1]
        mkeys = mapped[:, 0] * nv + mapped[:, 1]
        pos = np.searchsorted(keys, mkeys)
        return pos

    @property
    def vertex_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR neighbor lists (indptr, indices)."""
        if self._adjacency is None:
            src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            order = np.argsort(src, kind="stable")
            src, dst = src[order], dst[order]
            indptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adjacency = (indptr, dst)
        return self._adjacency


def _base_icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1.0, phi, 0.0], [1.0, phi, 0.0], [-1.0, -phi, 0.0], [1.0, -phi, 0.0],
        [0.0, -1.0, phi], [0.0, 1.0, phi], [0.0, -1.0, -phi], [0.0, 1.0, -phi],
        [phi, 0.0, -1.0], [phi, 0.0, 1.0], [-phi, 0.0, -1.0], [-phi, 0.0, 1.0],
    ])
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [5, 4, 9], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return verts, faces


@lru_cache(maxsize=None)
def icosphere(level: int) -> SphereMesh:
    """Icosahedron subdivided ``level`` times; 10 * 4^level + 2 vertices."""
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    if level == 0:
        verts, faces = _base_icosahedron()
        return SphereMesh(0, verts, faces)
    parent = icosphere(level - 1)
    edges = parent.edges
    mids = parent.midpoints()
    verts = np.vstack([parent.vertices, mids])
    nv = parent.n_vertices
    eid = {(int(a), int(b)): nv + i for i, (a, b) in enumerate(edges)}
    faces = np.empty((4 * parent.n_faces, 3), dtype=np.int64)
    for f, (a, b, c) in enumerate(parent.faces):
        a, b, c = int(a), int(b), int(c)
        mab = eid[(a, b) if a < b else (b, a)]
        mbc = eid[(b, c) if b < c else (c, b)]
        mca = eid[(c, a) if c < a else (a, c)]
        faces[4 * f:4 * f + 4] = [[a, mab, mca], [b, mbc, mab], [c, mca, mbc], [mab, mbc, mca]]
    return SphereMesh(level, verts, faces)


_ICO_EDGE_ARC = 1.1071487177940904   # arc length of a base icosahedron edge
_VERTICES_PER_WAVELENGTH = 8.0


def level_for_degree(d: int) -> int:
    """Smallest subdivision level giving at least 8 vertices per wavelength
    2 pi / d of a degree-d polynomial."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    target = _VERTICES_PER_WAVELENGTH * _ICO_EDGE_ARC * d / (2.0 * math.pi)
    return max(1, math.ceil(math.log2(target)))
