"""Distortion measures, planar layout of a solved metric, and exports."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFace
from .holonomy import ConstraintSystem
from .mesh import Mesh
from .metric import triangle_inequality_margin, vertex_angle_sums


def rmsre(lengths, lengths0) -> float:
    """Root mean squared relative error of ``lengths`` against ``lengths0``."""
    l = np.asarray(lengths, dtype=float)
    l0 = np.asarray(lengths0, dtype=float)
    if l.shape != l0.shape:
        raise ValueError("length vectors differ in shape")
    return float(np.sqrt(np.mean(((l - l0) / l0) ** 2)))


def symmetric_stretch(lengths, lengths0) -> np.ndarray:
    """Per-edge max(l/l0, l0/l)."""
    r = np.asarray(lengths, dtype=float) / np.asarray(lengths0, dtype=float)
    return np.maximum(r, 1.0 / r)


@dataclass
class LayoutResult:
    uv: np.ndarray  # (3 N_f, 2), per corner
    cut: np.ndarray  # bool per edge: True if not crossed by the layout tree
    orientation: np.ndarray  # +1 / -1 per face
    parent: np.ndarray  # halfedge through which each face was reached (-1 for the root)

    def face_areas(self) -> np.ndarray:
        p = self.uv.reshape(-1, 3, 2)
        u, v = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def _apex(P, Q, l_qr, l_pr):
    # third point of a triangle left of Q -> P, at distance l_qr from Q and l_pr from P
    base = P - Q
    L = float(np.hypot(*base))
    x = (L * L + l_qr * l_qr - l_pr * l_pr) / (2 * L)
    y2 = l_qr * l_qr - x * x
    if not L > 0 or not y2 > 0:
        raise DegenerateFace("cannot place triangle apex")
    t = base / L
    n = np.array([-t[1], t[0]])
    return Q + x * t + np.sqrt(y2) * n


def lay_out(mesh: Mesh, lam) -> LayoutResult:
    """Breadth-first unfolding of faces along a dual spanning tree from face 0."""
    lam = np.asarray(lam, dtype=float)
    bad = np.flatnonzero(triangle_inequality_margin(mesh, lam) <= 0)
    if len(bad):
        raise DegenerateFace(f"faces {bad[:8].tolist()} violate the triangle inequality")
    ell = np.exp(0.5 * (lam - lam.max()))  # scale so the longest edge is 1
    E, tw = mesh.edge, mesh.twin
    nf = mesh.n_faces
    uv = np.zeros((3 * nf, 2))
    placed = np.zeros(nf, dtype=bool)
    parent = np.full(nf, -1, dtype=np.int64)
    tree_edge = np.zeros(mesh.n_edges, dtype=bool)

    # root: corner 1 at the origin, corner 2 on the x axis
    l0, l1, l2 = ell[E[0]], ell[E[1]], ell[E[2]]
    uv[1] = (0.0, 0.0)
    uv[2] = (l0, 0.0)
    uv[0] = _apex(uv[2], uv[1], l2, l1)
    placed[0] = True
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for h in range(3 * f, 3 * f + 3):
            g = int(tw[h])
            fg = g // 3
            if placed[fg]:
                continue
            # h runs from corner next(h) to corner prev(h) of f; g runs the other way
            s = g % 3
            P = uv[3 * f + (h + 1) % 3]  # tail of h
            Q = uv[3 * f + (h + 2) % 3]  # head of h = tail of g
            uv[3 * fg + (s + 1) % 3] = Q
            uv[3 * fg + (s + 2) % 3] = P
            # apex r: prev(g) runs r -> tail(g), next(g) runs head(g) -> r
            uv[3 * fg + s] = _apex(P, Q, ell[E[3 * fg + (s + 2) % 3]], ell[E[3 * fg + (s + 1) % 3]])
            placed[fg] = True
            parent[fg] = g
            tree_edge[E[h]] = True
            queue.append(fg)
    res = LayoutResult(uv, ~tree_edge, np.zeros(nf, dtype=np.int64), parent)
    res.orientation = np.sign(res.face_areas()).astype(np.int64)
    if np.any(res.orientation <= 0):
        raise DegenerateFace("layout produced a non-positively oriented face")
    return res


@dataclass
class SeamlessnessReport:
    vertex_deviation: np.ndarray  # per constrained vertex
    loop_deviation: np.ndarray
    max_deviation: float
    mean_deviation: float
    dropped_vertex: int
    dropped_vertex_deviation: float
    layout_length_error: float | None = None

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "mean_deviation": self.mean_deviation,
            "vertex_deviation": self.vertex_deviation.tolist(),
            "loop_deviation": self.loop_deviation.tolist(),
            "dropped_vertex": self.dropped_vertex,
            "dropped_vertex_deviation": self.dropped_vertex_deviation,
            "layout_length_error": self.layout_length_error,
        }


def seamlessness_report(constraints: ConstraintSystem, alpha, layout: LayoutResult | None = None,
                        lam=None) -> SeamlessnessReport:
    """Realized vertex angle sums and loop holonomies against their targets.

    ``constraints`` must live on the connectivity ``alpha`` was computed on.
    Passing ``layout`` and ``lam`` adds the worst relative UV length error.
    """
    alpha = np.asarray(alpha, dtype=float)
    mesh = constraints.mesh
    dev = np.abs(constraints.C @ alpha - constraints.theta)
    nvr = constraints.n_vertex_rows
    sums = vertex_angle_sums(mesh, alpha)
    dv = constraints.dropped
    drop_dev = float(abs(sums[dv] - constraints.signature.vertex_targets[dv]))
    layout_err = None
    if layout is not None and lam is not None:
        layout_err = layout_length_error(mesh, lam, layout)
    return SeamlessnessReport(
        dev[:nvr], dev[nvr:],
        float(dev.max()) if len(dev) else 0.0,
        float(dev.mean()) if len(dev) else 0.0,
        dv, drop_dev, layout_err)


def layout_length_error(mesh: Mesh, lam, layout: LayoutResult) -> float:
    """Max relative mismatch between UV side lengths and intrinsic lengths."""
    lam = np.asarray(lam, dtype=float)
    scale = np.exp(0.5 * lam.max())
    c = np.arange(mesh.n_corners)
    a = layout.uv[c - c % 3 + (c + 1) % 3]
    b = layout.uv[c - c % 3 + (c + 2) % 3]
    uv_len = np.linalg.norm(b - a, axis=1) * scale
    ell = np.exp(0.5 * lam[mesh.edge])
    return float(np.max(np.abs(uv_len - ell) / ell))


# export -------------------------------------------------------------------------

def write_obj_with_uv(path, mesh: Mesh, layout: LayoutResult, positions=None) -> None:
    """OBJ with one ``vt`` per corner; ``v`` lines from ``positions`` when given,
    otherwise the UV plane (z = 0) with a separate vertex per corner."""
    uv = layout.uv
    with open(path, "w") as fh:
        if positions is not None:
            for p in np.asarray(positions, dtype=float):
                fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        else:
            for p in uv:
                fh.write(f"v {p[0]:.17g} {p[1]:.17g} 0\n")
        for p in uv:
            fh.write(f"vt {p[0]:.17g} {p[1]:.17g}\n")
        for f, tri in enumerate(mesh.faces):
            idx = []
            for s in range(3):
                c = 3 * f + s
                vi = int(tri[s]) if positions is not None else c
                idx.append(f"{vi + 1}/{c + 1}")
            fh.write("f " + " ".join(idx) + "\n")


def write_stretch_csv(path, mesh0: Mesh, lam_star, lam0) -> None:
    lam_star = np.asarray(lam_star, dtype=float)
    lam0 = np.asarray(lam0, dtype=float)
    l, l0 = np.exp(0.5 * lam_star), np.exp(0.5 * lam0)
    st = symmetric_stretch(l, l0)
    ev = mesh0.edge_vertices()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "v0", "v1", "lambda0", "lambda", "length0", "length", "stretch"])
        for e in range(mesh0.n_edges):
            w.writerow([e, int(ev[e, 0]), int(ev[e, 1]), f"{lam0[e]:.17g}", f"{lam_star[e]:.17g}",
                        f"{l0[e]:.17g}", f"{l[e]:.17g}", f"{st[e]:.17g}"])


def write_deviation_csv(path, constraints: ConstraintSystem, alpha) -> None:
    achieved = constraints.C @ np.asarray(alpha, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "kind", "index", "target", "achieved", "deviation"])
        for r, (kind, idx) in enumerate(constraints.row_labels()):
            t = constraints.theta[r]
            w.writerow([r, kind, idx, f"{t:.17g}", f"{achieved[r]:.17g}",
                        f"{abs(achieved[r] - t):.17g}"])
