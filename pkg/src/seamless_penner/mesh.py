"""Halfedge connectivity for closed, oriented triangle meshes.

Layout conventions used throughout the package:

* halfedge ``h = 3*f + s`` lives in face ``f``; ``next(h) = 3*f + (s+1) % 3``.
* corner ``c`` is identified with the halfedge of the same index: the corner
  sits at ``faces[f, s]`` and is *opposite* halfedge ``c``.
* halfedge ``3*f + s`` runs from ``faces[f, s+1]`` to ``faces[f, s+2]``.

Connectivity is a Delta-complex: self-adjacent faces and multiple edges
between the same pair of vertices are allowed, since intrinsic flips create
them.
"""

from __future__ import annotations

from collections import defaultdict, deque
from typing import NamedTuple

import numpy as np

from .errors import (
    BoundaryDetected,
    Disconnected,
    InconsistentOrientation,
    MeshError,
    NonManifoldEdge,
    NonManifoldVertex,
    UnflippableEdge,
)


class Corner(NamedTuple):
    face: int
    slot: int
    vertex: int
    edge: int  # opposite edge


def _next(h):
    return h - h % 3 + (h + 1) % 3


def _prev(h):
    return h - h % 3 + (h + 2) % 3


class Mesh:
    """Closed oriented triangle mesh in implicit-next halfedge form.

    Treat instances as immutable; connectivity changes go through
    :meth:`flipped`, which returns a new mesh.
    """

    __slots__ = ("faces", "twin", "edge", "edge_he", "n_vertices")

    def __init__(self, faces, twin, edge, edge_he, n_vertices):
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        self.twin = np.asarray(twin, dtype=np.int64)
        self.edge = np.asarray(edge, dtype=np.int64)
        self.edge_he = np.asarray(edge_he, dtype=np.int64)
        self.n_vertices = int(n_vertices)

    # sizes -----------------------------------------------------------------
    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edge_he)

    @property
    def n_halfedges(self) -> int:
        return 3 * len(self.faces)

    @property
    def n_corners(self) -> int:
        return 3 * len(self.faces)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_characteristic) // 2

    # halfedge navigation ---------------------------------------------------
    @staticmethod
    def next(h: int) -> int:
        return _next(h)

    @staticmethod
    def prev(h: int) -> int:
        return _prev(h)

    @staticmethod
    def face_of(h: int) -> int:
        return h // 3

    @property
    def corner_vertex(self) -> np.ndarray:
        """Vertex of every corner (flat view of ``faces``)."""
        return self.faces.reshape(-1)

    def tail(self, h: int) -> int:
        return int(self.faces.flat[_next(h)])

    def head(self, h: int) -> int:
        return int(self.faces.flat[_prev(h)])

    def corner(self, c: int) -> Corner:
        return Corner(c // 3, c % 3, int(self.faces.flat[c]), int(self.edge[c]))

    def edge_vertices(self) -> np.ndarray:
        """(N_e, 2) array of (tail, head) of each edge's reference halfedge."""
        h = self.edge_he
        nxt = h - h % 3 + (h + 1) % 3
        prv = h - h % 3 + (h + 2) % 3
        cv = self.corner_vertex
        return np.stack([cv[nxt], cv[prv]], axis=1)

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.corner_vertex, minlength=self.n_vertices)

    def copy(self) -> "Mesh":
        return Mesh(self.faces.copy(), self.twin.copy(), self.edge.copy(),
                    self.edge_he.copy(), self.n_vertices)

    def same_connectivity(self, other: "Mesh") -> bool:
        return (self.n_vertices == other.n_vertices
                and np.array_equal(self.faces, other.faces)
                and np.array_equal(self.twin, other.twin)
                and np.array_equal(self.edge, other.edge))

    def __repr__(self):
        return (f"Mesh(n_vertices={self.n_vertices}, n_edges={self.n_edges}, "
                f"n_faces={self.n_faces}, genus={self.genus})")

    # flips -----------------------------------------------------------------
    def is_flippable(self, e: int) -> bool:
        h = int(self.edge_he[e])
        return h // 3 != int(self.twin[h]) // 3

    def flipped(self, e: int) -> tuple["Mesh", dict[int, int]]:
        """Return the mesh with edge ``e`` flipped and the halfedge relabelling."""
        m = self.copy()
        hmap = m._flip_inplace(e)
        return m, hmap

    def _flip_inplace(self, e: int) -> dict[int, int]:
        # Quad: face f0 = (i -> j -> k), face f1 = (j -> i -> l), diagonal i-j.
        # After the flip f0 = (l -> j -> k) and f1 = (k -> i -> l), diagonal k-l.
        # Edge index e is reused for the new diagonal.
        h = int(self.edge_he[e])
        ho = int(self.twin[h])
        f0, f1 = h // 3, ho // 3
        if f0 == f1:
            raise UnflippableEdge(f"edge {e} has both sides in face {f0}")
        faces = self.faces
        k = int(faces.flat[h])
        l = int(faces.flat[ho])
        i = int(faces.flat[_next(h)])
        j = int(faces.flat[_prev(h)])
        hn, hp, hon, hop = _next(h), _prev(h), _next(ho), _prev(ho)

        hmap = {h: 3 * f0, ho: 3 * f1,
                hop: 3 * f0 + 1, hn: 3 * f0 + 2,
                hp: 3 * f1 + 1, hon: 3 * f1 + 2}
        old_twin = {x: int(self.twin[x]) for x in hmap}
        old_edge = {x: int(self.edge[x]) for x in hmap}

        faces[f0] = (j, k, l)
        faces[f1] = (i, l, k)
        a, b = 3 * f0, 3 * f1
        self.edge[a] = self.edge[b] = e
        self.twin[a], self.twin[b] = b, a
        self.edge_he[e] = a
        for x in (hn, hp, hon, hop):
            p = hmap[x]
            t = hmap.get(old_twin[x], old_twin[x])
            self.edge[p] = old_edge[x]
            self.twin[p] = t
            self.twin[t] = p
        # reference halfedges may have moved to a new slot
        for x in (hn, hp, hon, hop):
            ex = old_edge[x]
            if self.edge[self.edge_he[ex]] != ex:
                self.edge_he[ex] = hmap[x]
        return hmap

    def check(self) -> None:
        """Raise ``MeshError`` if any structural invariant fails."""
        nh = self.n_halfedges
        t = self.twin
        hs = np.arange(nh)
        if np.any(t[t] != hs) or np.any(t == hs):
            raise MeshError("twin is not a fixed-point-free involution")
        if np.any(self.edge[t] != self.edge):
            raise MeshError("twins disagree on edge index")
        nxt = hs - hs % 3 + (hs + 1) % 3
        prv = hs - hs % 3 + (hs + 2) % 3
        cv = self.corner_vertex
        if np.any(cv[nxt[t]] != cv[prv]):
            raise MeshError("twin does not reverse its halfedge")
        if np.any(self.edge[self.edge_he] != np.arange(self.n_edges)):
            raise MeshError("edge_he inconsistent with edge")
        if np.bincount(self.edge, minlength=self.n_edges).max() != 2:
            raise MeshError("edge multiplicity is not two")


def build_mesh(faces, twin=None) -> Mesh:
    """Build a :class:`Mesh` from triangles given as vertex-index triples.

    When two or more edges join the same vertex pair the gluing is
    ambiguous; pass ``twin`` (one opposite halfedge per ``3*f + s``) to
    resolve it. Otherwise repeated directed pairs are matched in order of
    appearance.
    """
    F = np.asarray(faces, dtype=np.int64)
    if F.ndim != 2 or F.shape[1] != 3 or len(F) == 0:
        raise MeshError("faces must be a non-empty (n, 3) integer array")
    if F.min() < 0:
        raise MeshError("negative vertex index")
    nv = int(F.max()) + 1
    nf = len(F)
    nh = 3 * nf
    cv = F.reshape(-1)
    hs = np.arange(nh)
    tails = cv[hs - hs % 3 + (hs + 1) % 3]
    heads = cv[hs - hs % 3 + (hs + 2) % 3]

    if twin is None:
        tw = _match_halfedges(tails, heads)
    else:
        tw = np.asarray(twin, dtype=np.int64).reshape(-1)
        if len(tw) != nh or tw.min() < 0 or tw.max() >= nh:
            raise MeshError("twin array has wrong size or out-of-range entries")
        if np.any(tw[tw] != hs) or np.any(tw == hs):
            raise NonManifoldEdge("twin is not a fixed-point-free involution")
        if np.any(tails[tw] != heads):
            raise InconsistentOrientation("glued halfedges do not run in opposite directions")

    # deterministic edge numbering by (min vertex, max vertex, first face, first halfedge)
    reps = hs[hs < tw]
    other = tw[reps]
    lo = np.minimum(tails[reps], heads[reps])
    hi = np.maximum(tails[reps], heads[reps])
    first_face = np.minimum(reps // 3, other // 3)
    order = np.lexsort((reps, first_face, hi, lo))
    reps, other = reps[order], other[order]
    ne = len(reps)
    edge = np.empty(nh, dtype=np.int64)
    edge[reps] = np.arange(ne)
    edge[other] = np.arange(ne)
    # reference halfedge runs from the lower to the higher vertex
    swap = tails[reps] > heads[reps]
    edge_he = np.where(swap, other, reps)

    mesh = Mesh(F.copy(), tw, edge, edge_he, nv)
    used = np.zeros(nv, dtype=bool)
    used[cv] = True
    if not used.all():
        raise Disconnected(f"vertices {np.flatnonzero(~used).tolist()} are not used by any face")
    _check_vertex_links(mesh)
    _check_connected(mesh)
    return mesh


def _match_halfedges(tails, heads) -> np.ndarray:
    directed = defaultdict(list)
    for h, (u, v) in enumerate(zip(tails.tolist(), heads.tolist())):
        if u == v:
            raise MeshError(f"degenerate face edge ({u}, {u})")
        directed[(u, v)].append(h)
    tw = np.full(len(tails), -1, dtype=np.int64)
    # the most severe defect wins: non-manifold, then orientation, then boundary
    defects = []
    for u, v in sorted({(min(k), max(k)) for k in directed}):
        fwd, back = directed.get((u, v), []), directed.get((v, u), [])
        total = len(fwd) + len(back)
        if len(fwd) == len(back):
            for a, b in zip(fwd, back):
                tw[a], tw[b] = b, a
        elif total == 1:
            defects.append((2, BoundaryDetected(f"edge ({u}, {v}) belongs to a single face")))
        elif total == 2:
            defects.append((1, InconsistentOrientation(
                f"faces sharing edge ({u}, {v}) have the same orientation")))
        else:
            defects.append((0, NonManifoldEdge(f"edge ({u}, {v}) is shared by {total} faces")))
    if defects:
        raise min(defects, key=lambda d: d[0])[1]
    return tw


def _check_vertex_links(mesh: Mesh) -> None:
    # rotation around the tail vertex: h -> twin(prev(h))
    nh = mesh.n_halfedges
    tw = mesh.twin
    seen = np.zeros(nh, dtype=bool)
    orbits = np.zeros(mesh.n_vertices, dtype=np.int64)
    for h0 in range(nh):
        if seen[h0]:
            continue
        h = h0
        while not seen[h]:
            seen[h] = True
            h = int(tw[_prev(h)])
        orbits[mesh.tail(h0)] += 1
    bad = np.flatnonzero(orbits != 1)
    if len(bad):
        raise NonManifoldVertex(f"vertices {bad.tolist()} have a disconnected link")


def _check_connected(mesh: Mesh) -> None:
    nf = mesh.n_faces
    seen = np.zeros(nf, dtype=bool)
    seen[0] = True
    queue = deque([0])
    tw = mesh.twin
    while queue:
        f = queue.popleft()
        for h in range(3 * f, 3 * f + 3):
            g = int(tw[h]) // 3
            if not seen[g]:
                seen[g] = True
                queue.append(g)
    if not seen.all():
        raise Disconnected(f"{int((~seen).sum())} faces unreachable from face 0")


def genus(mesh: Mesh) -> int:
    return mesh.genus


# I/O ------------------------------------------------------------------------

def read_obj(path):
    """Read vertex positions and triangles from a Wavefront OBJ file."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) != 3:
                    raise MeshError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append(idx)
    if not faces:
        raise MeshError(f"{path}: no faces")
    return np.asarray(verts, dtype=float).reshape(-1, 3), np.asarray(faces, dtype=np.int64)


def edge_lengths(mesh: Mesh, positions) -> np.ndarray:
    P = np.asarray(positions, dtype=float)
    ev = mesh.edge_vertices()
    return np.linalg.norm(P[ev[:, 1]] - P[ev[:, 0]], axis=1)


def log_lengths(mesh: Mesh, positions) -> np.ndarray:
    """Penner coordinates ``2 log l`` of the embedded edge lengths."""
    return 2.0 * np.log(edge_lengths(mesh, positions))


def write_connectivity(mesh: Mesh, path) -> None:
    """Plain-text dump: one face per line, then one edge per line."""
    ev = mesh.edge_vertices()
    with open(path, "w") as fh:
        fh.write(f"# faces {mesh.n_faces}\n")
        for f in mesh.faces:
            fh.write(f"{f[0]} {f[1]} {f[2]}\n")
        fh.write(f"# edges {mesh.n_edges}\n")
        for e in range(mesh.n_edges):
            h = int(mesh.edge_he[e])
            fh.write(f"{ev[e, 0]} {ev[e, 1]} {h} {int(mesh.twin[h])}\n")
