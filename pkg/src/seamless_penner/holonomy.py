"""Dual loops, holonomy signatures and the linear constraint system.

A dual loop is stored as the cyclic sequence of halfedges it crosses:
crossing ``h`` moves from face ``h // 3`` into the face of ``twin[h]``.
Between two crossings the loop turns around the vertex shared by the
entry and exit edges; that corner's angle enters the holonomy with sign
+1 for a counterclockwise (left) turn and -1 for a clockwise one.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidSignature, LoopInvalidated, SeamlessError
from .mesh import Mesh, _next, _prev

GAUSS_BONNET_VIOLATED = "GaussBonnetViolated"
NON_POSITIVE_CONE = "NonPositiveCone"
TWO_CONE_35 = "KnownInvalid_TwoCone35"
FLAT_TORUS_NONTRIVIAL_LOOP = "KnownInvalid_FlatTorusNontrivialLoop"
WRONG_SIZE = "WrongSize"


@dataclass(frozen=True)
class DualLoop:
    halfedges: tuple[int, ...]

    def __len__(self):
        return len(self.halfedges)

    def steps(self, mesh: Mesh) -> list[tuple[int, int]]:
        """(corner, sign) for every triangle visit, in loop order."""
        hs = self.halfedges
        n = len(hs)
        if n == 0:
            raise LoopInvalidated("empty dual loop")
        tw = mesh.twin
        out = []
        for m in range(n):
            g = int(tw[hs[m]])
            x = hs[(m + 1) % n]
            if x == _prev(g):
                out.append((_next(g), 1))
            elif x == _next(g):
                out.append((_prev(g), -1))
            else:
                raise LoopInvalidated(
                    f"crossings {hs[m]} -> {x} do not share a triangle or backtrack")
        return out

    def reversed(self, mesh: Mesh) -> "DualLoop":
        tw = mesh.twin
        return DualLoop(tuple(int(tw[h]) for h in reversed(self.halfedges)))

    def faces(self, mesh: Mesh) -> list[int]:
        """Triangle visited after each crossing."""
        return [int(mesh.twin[h]) // 3 for h in self.halfedges]

    def validate(self, mesh: Mesh) -> None:
        self.steps(mesh)


def homology_basis(mesh: Mesh) -> list[DualLoop]:
    """2g dual loops from a tree-cotree decomposition (BFS from vertex 0 / face 0)."""
    ne, nf = mesh.n_edges, mesh.n_faces
    tw = mesh.twin
    ev = mesh.edge_vertices()

    # primal spanning tree
    adj = [[] for _ in range(mesh.n_vertices)]
    for e in range(ne):
        u, v = int(ev[e, 0]), int(ev[e, 1])
        adj[u].append((e, v))
        adj[v].append((e, u))
    in_tree = np.zeros(ne, dtype=bool)
    seen = np.zeros(mesh.n_vertices, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for e, v in adj[u]:
            if not seen[v]:
                seen[v] = True
                in_tree[e] = True
                queue.append(v)

    # dual spanning tree avoiding primal tree edges
    parent_he = np.full(nf, -1, dtype=np.int64)  # crossing from f into its parent
    depth = np.zeros(nf, dtype=np.int64)
    in_cotree = np.zeros(ne, dtype=bool)
    fseen = np.zeros(nf, dtype=bool)
    fseen[0] = True
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for h in range(3 * f, 3 * f + 3):
            e = int(mesh.edge[h])
            if in_tree[e]:
                continue
            g = int(tw[h])
            fg = g // 3
            if not fseen[fg]:
                fseen[fg] = True
                in_cotree[e] = True
                parent_he[fg] = g
                depth[fg] = depth[f] + 1
                queue.append(fg)

    loops = []
    for e in np.flatnonzero(~in_tree & ~in_cotree):
        h = int(mesh.edge_he[e])
        f0, f1 = h // 3, int(tw[h]) // 3
        up, down = [], []
        a, b = f1, f0
        while a != b:
            if depth[a] >= depth[b]:
                up.append(int(parent_he[a]))
                a = int(tw[parent_he[a]]) // 3
            else:
                down.append(int(tw[parent_he[b]]))
                b = int(tw[parent_he[b]]) // 3
        loops.append(DualLoop(tuple([h] + up + down[::-1])))
    if len(loops) != 2 * mesh.genus:
        raise SeamlessError(f"tree-cotree produced {len(loops)} loops for genus {mesh.genus}")
    return loops


def holonomy_angle(mesh: Mesh, loop: DualLoop, alpha) -> float:
    """Signed sum of the corner angles turned by ``loop``."""
    alpha = np.asarray(alpha)
    return float(sum(s * alpha[c] for c, s in loop.steps(mesh)))


# signatures -------------------------------------------------------------------

@dataclass
class HolonomySignature:
    """Quarter-turn counts: ``k_vertex`` per vertex, ``k_loop`` per basis loop."""

    k_vertex: np.ndarray
    k_loop: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.k_vertex = _as_int_array(self.k_vertex, "k_vertex")
        self.k_loop = _as_int_array(self.k_loop, "k_loop")

    @property
    def vertex_targets(self) -> np.ndarray:
        return self.k_vertex * (np.pi / 2)

    @property
    def loop_targets(self) -> np.ndarray:
        return self.k_loop * (np.pi / 2)

    def theta(self, dropped: int) -> np.ndarray:
        tv = np.delete(self.vertex_targets, dropped)
        return np.concatenate([tv, self.loop_targets])


def _as_int_array(x, name):
    arr = np.asarray(x)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if arr.dtype.kind not in "iu":
        if arr.dtype.kind == "f" and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise InvalidSignature([f"{name} must contain integers"])
    return arr.astype(np.int64).reshape(-1)


@dataclass
class ValidationReport:
    valid: bool
    reasons: list[str]
    messages: list[str]

    def __bool__(self):
        return self.valid


def gauss_bonnet_total(mesh: Mesh) -> int:
    """Required sum of vertex quarter-turns: total angle is 2 pi (N_v - chi)."""
    return 4 * (mesh.n_vertices - mesh.euler_characteristic)


def validate_signature(mesh: Mesh, signature: HolonomySignature) -> ValidationReport:
    kv, kl = signature.k_vertex, signature.k_loop
    reasons, messages = [], []
    if len(kv) != mesh.n_vertices or len(kl) != 2 * mesh.genus:
        reasons.append(WRONG_SIZE)
        messages.append(f"expected {mesh.n_vertices} vertex and {2 * mesh.genus} loop entries, "
                        f"got {len(kv)} and {len(kl)}")
        return ValidationReport(False, reasons, messages)
    need = gauss_bonnet_total(mesh)
    if int(kv.sum()) != need:
        reasons.append(GAUSS_BONNET_VIOLATED)
        messages.append(f"vertex quarter-turns sum to {int(kv.sum())}, Gauss-Bonnet needs {need}")
    if np.any(kv <= 0):
        reasons.append(NON_POSITIVE_CONE)
        messages.append(f"non-positive cone at vertices {np.flatnonzero(kv <= 0).tolist()}")
    cones = kv[kv != 4]
    if len(cones) == 2 and sorted(cones.tolist()) == [3, 5]:
        reasons.append(TWO_CONE_35)
        messages.append("exactly two cones, of angles 3pi/2 and 5pi/2")
    if mesh.genus == 1 and np.all(kv == 4) and np.any(kl != 0):
        reasons.append(FLAT_TORUS_NONTRIVIAL_LOOP)
        messages.append("flat torus (no cones) with nonzero loop holonomy")
    return ValidationReport(not reasons, reasons, messages)


def auto_trivial_signature(mesh: Mesh, angle_sums) -> HolonomySignature:
    """Round each vertex angle sum to a positive multiple of pi/2, then repair
    Gauss-Bonnet with unit adjustments where the rounding slack is largest."""
    q = np.asarray(angle_sums, dtype=float) / (np.pi / 2)
    k = np.maximum(1, np.rint(q)).astype(np.int64)
    diff = gauss_bonnet_total(mesh) - int(k.sum())
    while diff != 0:
        slack = q - k
        if diff > 0:
            v = int(np.argmax(slack))
            k[v] += 1
            diff -= 1
        else:
            slack = np.where(k > 1, slack, np.inf)
            v = int(np.argmin(slack))
            if not np.isfinite(slack[v]):
                raise InvalidSignature([NON_POSITIVE_CONE])
            k[v] -= 1
            diff += 1
    return HolonomySignature(k, np.zeros(2 * mesh.genus, dtype=np.int64))


# constraint system --------------------------------------------------------------

@dataclass
class ConstraintSystem:
    mesh: Mesh
    signature: HolonomySignature
    loops: list[DualLoop]
    dropped: int
    C: sp.csr_matrix
    theta: np.ndarray

    @property
    def n_vertex_rows(self) -> int:
        return self.mesh.n_vertices - 1

    def rebuilt(self, mesh: Mesh, loops) -> "ConstraintSystem":
        """Same targets, reassembled on another connectivity with rerouted loops."""
        return build_constraints(mesh, self.signature, loops, check=False)

    def row_labels(self) -> list[tuple[str, int]]:
        labels = [("vertex", v) for v in range(self.mesh.n_vertices) if v != self.dropped]
        return labels + [("loop", j) for j in range(len(self.loops))]


def build_constraints(mesh: Mesh, signature: HolonomySignature, loops=None,
                      check: bool = True) -> ConstraintSystem:
    """Assemble ``C`` (rows: vertices except the last, then loops) and ``theta``.

    ``check=False`` skips signature validation; the caller takes
    responsibility for an unsatisfiable target.
    """
    if loops is None:
        loops = homology_basis(mesh)
    loops = list(loops)
    if check:
        report = validate_signature(mesh, signature)
        if not report.valid:
            raise InvalidSignature(report.reasons)
    elif len(signature.k_vertex) != mesh.n_vertices or len(signature.k_loop) != len(loops):
        raise InvalidSignature([WRONG_SIZE])
    nv = mesh.n_vertices
    dropped = nv - 1
    nc = mesh.n_corners
    cv = mesh.corner_vertex
    keep = np.flatnonzero(cv != dropped)
    rows = [cv[keep]]
    cols = [keep]
    vals = [np.ones(len(keep))]
    for j, loop in enumerate(loops):
        st = loop.steps(mesh)
        rows.append(np.full(len(st), nv - 1 + j))
        cols.append(np.array([c for c, _ in st], dtype=np.int64))
        vals.append(np.array([s for _, s in st], dtype=float))
    C = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nv - 1 + len(loops), nc)).tocsr()
    C.sum_duplicates()
    C.eliminate_zeros()
    return ConstraintSystem(mesh, signature, loops, dropped, C, signature.theta(dropped))


# rerouting under flips ----------------------------------------------------------

def reroute_loop_after_flip(loop: DualLoop, mesh_before: Mesh, mesh_after: Mesh, e: int,
                            hmap: dict[int, int] | None = None) -> DualLoop:
    """Homotopic copy of ``loop`` on ``mesh_after`` (``mesh_before`` with ``e`` flipped).

    Crossings outside the flipped quad are kept; every passage through the
    quad keeps its entry and exit sides and crosses the new diagonal only
    when those sides lie in different new triangles.
    """
    if hmap is None:
        check, hmap = mesh_before.flipped(e)
        if not check.same_connectivity(mesh_after):
            raise LoopInvalidated("mesh_after is not mesh_before flipped at the given edge")
    h = int(mesh_before.edge_he[e])
    old_diag = (h, int(mesh_before.twin[h]))
    return DualLoop(_reroute(loop.halfedges, old_diag, hmap, mesh_after, e))


def _reroute(crossings, old_diag, hmap, mesh_after: Mesh, e: int) -> tuple[int, ...]:
    ys = [hmap.get(x, x) for x in crossings if x not in old_diag]
    if not ys:
        raise LoopInvalidated("loop only crossed the flipped edge")
    tw = mesh_after.twin
    d0 = int(mesh_after.edge_he[e])
    d1 = int(tw[d0])
    quad = (d0 // 3, d1 // 3)
    out = []
    n = len(ys)
    for m in range(n):
        y = ys[m]
        out.append(y)
        here = int(tw[y]) // 3
        there = ys[(m + 1) % n] // 3
        if here != there:
            if here not in quad or there not in quad:
                raise LoopInvalidated("consecutive crossings do not share a triangle")
            out.append(d0 if here == quad[0] else d1)
    out = _cancel_backtracks(out, tw)
    if not out:
        raise LoopInvalidated("loop became contractible")
    return tuple(out)


def _cancel_backtracks(word, tw):
    stack = []
    for y in word:
        if stack and stack[-1] == int(tw[y]):
            stack.pop()
        else:
            stack.append(y)
    lo, hi = 0, len(stack)
    while hi - lo >= 2 and stack[hi - 1] == int(tw[stack[lo]]):
        lo += 1
        hi -= 1
    return stack[lo:hi]


# signature files ---------------------------------------------------------------

def _strict_int(x, what):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValueError(f"{what} must be an integer, got {x!r}")
    return x


def parse_signature(doc: dict, mesh: Mesh) -> tuple[HolonomySignature, list[DualLoop]]:
    """Decode a signature document (see README for the format)."""
    default = _strict_int(doc.get("vertex_default", 4), "vertex_default")
    kv = np.full(mesh.n_vertices, default, dtype=np.int64)
    for key, val in doc.get("vertices", {}).items():
        v = int(key, 10)
        if not 0 <= v < mesh.n_vertices:
            raise ValueError(f"vertex {v} out of range")
        kv[v] = _strict_int(val, f"k for vertex {v}")
    spec = doc.get("loops", {"basis": "auto", "k": [0] * (2 * mesh.genus)})
    if isinstance(spec, dict):
        if spec.get("basis", "auto") != "auto":
            raise ValueError("loops.basis must be 'auto' or an explicit loop list")
        loops = homology_basis(mesh)
        kl = [_strict_int(k, "loop k") for k in spec.get("k", [0] * len(loops))]
    else:
        loops, kl = [], []
        for item in spec:
            hs = tuple(_strict_int(h, "loop halfedge") for h in item["halfedges"])
            if any(not 0 <= h < mesh.n_halfedges for h in hs):
                raise ValueError("loop halfedge out of range")
            loop = DualLoop(hs)
            loop.validate(mesh)
            loops.append(loop)
            kl.append(_strict_int(item["k"], "loop k"))
    if len(kl) != len(loops):
        raise ValueError(f"{len(loops)} loops but {len(kl)} loop targets")
    return HolonomySignature(kv, np.asarray(kl, dtype=np.int64)), loops


def read_signature(path, mesh: Mesh):
    with open(path) as fh:
        doc = json.load(fh)
    return parse_signature(doc, mesh)


def signature_document(signature: HolonomySignature, loops=None, default: int = 4) -> dict:
    doc = {
        "format": "holonomy-signature/v1",
        "vertex_default": default,
        "vertices": {str(v): int(k) for v, k in enumerate(signature.k_vertex) if k != default},
    }
    if loops is None:
        doc["loops"] = {"basis": "auto", "k": [int(k) for k in signature.k_loop]}
    else:
        doc["loops"] = [{"halfedges": list(map(int, lp.halfedges)), "k": int(k)}
                        for lp, k in zip(loops, signature.k_loop)]
    return doc
