"""Penner coordinates: angles, Delaunay test, Ptolemy flips and the
differentiable Delaunay map.

Coordinates are ``lam = 2 log l`` per edge of a reference connectivity.
They need not satisfy the triangle inequality; ``make_delaunay`` flips
until every edge is intrinsically Delaunay, at which point they do.
All length arithmetic subtracts a local maximum before exponentiating.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateAngle,
    FlipLimitExceeded,
    TriangleInequalityViolated,
    UnflippableEdge,
)
from .holonomy import ConstraintSystem, DualLoop, _reroute
from .mesh import Mesh, _next, _prev

EPS_DELAUNAY = 1e-12
EPS_DEGENERATE = 1e-12


# angles -----------------------------------------------------------------------

def _face_lengths(mesh: Mesh, lam) -> np.ndarray:
    L = np.asarray(lam, dtype=float)[mesh.edge].reshape(-1, 3)
    return np.exp(0.5 * (L - L.max(axis=1, keepdims=True)))


def triangle_inequality_margin(mesh: Mesh, lam) -> np.ndarray:
    """Per face, min over sides of (sum of other two - side), scale-normalized."""
    a = _face_lengths(mesh, lam)
    b = np.roll(a, -1, axis=1)
    c = np.roll(a, -2, axis=1)
    return (b + c - a).min(axis=1)


def _angles_cots(mesh: Mesh, lam):
    a = _face_lengths(mesh, lam)  # a[f, s] is opposite corner 3f+s
    b = np.roll(a, -1, axis=1)
    c = np.roll(a, -2, axis=1)
    sa, sb, sc = b + c - a, a + c - b, a + b - c  # 2(s - a) etc.
    bad = np.flatnonzero(((sa <= 0) | (sb <= 0) | (sc <= 0)).any(axis=1))
    if len(bad):
        raise TriangleInequalityViolated(bad.tolist())
    s2 = a + b + c
    alpha = 2.0 * np.arctan2(np.sqrt(sb * sc), np.sqrt(s2 * sa))
    area4 = np.sqrt(s2 * sa * sb * sc)  # 4 * area
    cot = (b * b + c * c - a * a) / area4
    return alpha.reshape(-1), cot.reshape(-1)


def corner_angles(mesh: Mesh, lam) -> np.ndarray:
    """Euclidean corner angles; corner ``c`` is opposite halfedge ``c``."""
    return _angles_cots(mesh, lam)[0]


def _gradient_from_cots(mesh: Mesh, cot, eps_deg) -> sp.csr_matrix:
    if eps_deg and np.any(np.abs(cot) > 1.0 / eps_deg):
        raise DegenerateAngle(f"cotangent exceeds {1.0 / eps_deg:g}")
    nc = mesh.n_corners
    c = np.arange(nc)
    nxt = c - c % 3 + (c + 1) % 3
    prv = c - c % 3 + (c + 2) % 3
    E = mesh.edge
    rows = np.concatenate([c, c, c])
    cols = np.concatenate([E[c], E[nxt], E[prv]])
    vals = 0.5 * np.concatenate([cot[nxt] + cot[prv], -cot[prv], -cot[nxt]])
    return sp.coo_matrix((vals, (rows, cols)), shape=(nc, mesh.n_edges)).tocsr()


def angle_gradient(mesh: Mesh, lam, eps_deg: float = EPS_DEGENERATE) -> sp.csr_matrix:
    """Sparse d(alpha)/d(lam), shape (3 N_f, N_e).

    For a corner with opposite edge a and the two other corners j, k
    (opposite edges b, c): d/da = (cot_j + cot_k)/2, d/db = -cot_k/2,
    d/dc = -cot_j/2.
    """
    _, cot = _angles_cots(mesh, lam)
    return _gradient_from_cots(mesh, cot, eps_deg)


def angles_and_gradient(mesh: Mesh, lam, eps_deg: float = EPS_DEGENERATE):
    alpha, cot = _angles_cots(mesh, lam)
    return alpha, _gradient_from_cots(mesh, cot, eps_deg)


def vertex_angle_sums(mesh: Mesh, alpha) -> np.ndarray:
    return np.bincount(mesh.corner_vertex, weights=alpha, minlength=mesh.n_vertices)


# Delaunay test and Ptolemy flip --------------------------------------------------

def _quad(mesh: Mesh, e: int):
    h = int(mesh.edge_he[e])
    ho = int(mesh.twin[h])
    E = mesh.edge
    return h, ho, int(E[_next(h)]), int(E[_prev(h)]), int(E[_next(ho)]), int(E[_prev(ho)])


def _delaunay_value(le, la, lb, lc, ld):
    m = max(le, la, lb, lc, ld)
    ee = math.exp(le - m)
    a2, b2, c2, d2 = (math.exp(x - m) for x in (la, lb, lc, ld))
    return ((a2 + b2 - ee) / (2.0 * math.sqrt(a2 * b2))
            + (c2 + d2 - ee) / (2.0 * math.sqrt(c2 * d2)))


def delaunay_value(mesh: Mesh, lam, e: int) -> float:
    """Sum of cosines of the two angles opposite ``e`` (>= 0 iff Delaunay)."""
    _, _, a, b, c, d = _quad(mesh, e)
    return _delaunay_value(lam[e], lam[a], lam[b], lam[c], lam[d])


def is_delaunay(mesh: Mesh, lam, e: int, eps: float = EPS_DELAUNAY) -> bool:
    return delaunay_value(mesh, lam, e) >= -eps


def ptolemy_lambda(le, la, lb, lc, ld) -> float:
    """New diagonal coordinate 2 log((l_a l_c + l_b l_d) / l_e)."""
    x, y = 0.5 * (la + lc), 0.5 * (lb + ld)
    m = max(x, y)
    return 2.0 * (m + math.log1p(math.exp(-abs(x - y)))) - le


def _euclidean_lambda(le, la, lb, lc, ld):
    # diagonal i-j on the x-axis; k (sides a=jk, b=ki) above, l (c=il, d=lj) below
    m = max(le, la, lb, lc, ld)
    e, a, b, c, d = (math.exp(0.5 * (x - m)) for x in (le, la, lb, lc, ld))
    xk = (e * e + b * b - a * a) / (2 * e)
    yk = math.sqrt(max(b * b - xk * xk, 0.0))
    xl = (e * e + c * c - d * d) / (2 * e)
    yl = -math.sqrt(max(c * c - xl * xl, 0.0))
    return 2.0 * math.log(math.hypot(xk - xl, yk - yl)) + m


def _sigmoid(s):
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    z = math.exp(s)
    return z / (1.0 + z)


def diff_ptolemy_row(le, la, lb, lc, ld) -> np.ndarray:
    """Derivatives of the flipped coordinate with respect to ``log l`` of (e, a, b, c, d).

    With shear t = l_a l_c / (l_b l_d) the row is
    (-2, 2t/(1+t), 2/(1+t), 2t/(1+t), 2/(1+t)). Since ``lam = 2 log l``, the
    derivative with respect to ``lam`` is half of it.
    """
    s = 0.5 * (la + lc - lb - ld)  # log t
    p, q = _sigmoid(s), _sigmoid(-s)
    return np.array([-2.0, 2 * p, 2 * q, 2 * p, 2 * q])


def ptolemy_flip(mesh: Mesh, lam, e: int) -> tuple[Mesh, np.ndarray]:
    """Flip ``e`` and replace its coordinate by the Ptolemy update."""
    if not mesh.is_flippable(e):
        raise UnflippableEdge(f"edge {e} cannot be flipped")
    lam = np.array(lam, dtype=float)
    _, _, a, b, c, d = _quad(mesh, e)
    new = ptolemy_lambda(lam[e], lam[a], lam[b], lam[c], lam[d])
    m, _ = mesh.flipped(e)
    lam[e] = new
    return m, lam


def euclidean_flip(mesh: Mesh, lam, e: int) -> tuple[Mesh, np.ndarray]:
    """Metric-preserving flip: the new diagonal's length is measured in the
    planar layout of the quad (requires a convex quad)."""
    if not mesh.is_flippable(e):
        raise UnflippableEdge(f"edge {e} cannot be flipped")
    lam = np.array(lam, dtype=float)
    _, _, a, b, c, d = _quad(mesh, e)
    new = _euclidean_lambda(lam[e], lam[a], lam[b], lam[c], lam[d])
    m, _ = mesh.flipped(e)
    lam[e] = new
    return m, lam


# flip algorithm -------------------------------------------------------------------

@dataclass
class FlipTrace:
    mesh: Mesh
    lam: np.ndarray
    flips: list[int] = field(default_factory=list)
    D: sp.csr_matrix | None = None
    loops: list[DualLoop] | None = None
    constraints: ConstraintSystem | None = None

    @property
    def n_flips(self) -> int:
        return len(self.flips)


def make_delaunay(mesh: Mesh, lam, eps: float = EPS_DELAUNAY, *, order: str = "fifo",
                  loops=None, jacobian: bool = False, rule: str = "ptolemy",
                  max_flips: int | None = None, on_flip=None) -> FlipTrace:
    """Flip non-Delaunay edges until none remain.

    ``order`` is ``"fifo"`` (queue) or ``"lifo"`` (stack). ``loops`` are
    rerouted through every flip. With ``jacobian=True`` the trace carries
    ``D = d(lam_out)/d(lam_in)``. ``rule="euclidean"`` uses metric-preserving
    flips instead of Ptolemy updates. ``on_flip(mesh_before, mesh_after, e,
    lam_before, lam_after, loops_before, loops_after)`` is called after each
    flip (it receives copies, so it is slow; meant for tests).
    """
    if order not in ("fifo", "lifo"):
        raise ValueError("order must be 'fifo' or 'lifo'")
    if rule not in ("ptolemy", "euclidean"):
        raise ValueError("rule must be 'ptolemy' or 'euclidean'")
    if jacobian and rule != "ptolemy":
        raise ValueError("the Jacobian is only defined for Ptolemy flips")
    M = mesh.copy()
    lamv = [float(x) for x in np.asarray(lam, dtype=float)]
    if not all(math.isfinite(x) for x in lamv):
        raise ValueError("non-finite Penner coordinates")
    ne = M.n_edges
    cap = 100 * ne if max_flips is None else max_flips
    cur_loops = None if loops is None else [tuple(lp.halfedges) for lp in loops]
    rows: dict[int, dict[int, float]] = {}
    flips: list[int] = []
    update = ptolemy_lambda if rule == "ptolemy" else _euclidean_lambda

    def nondelaunay(e):
        _, _, a, b, c, d = _quad(M, e)
        return _delaunay_value(lamv[e], lamv[a], lamv[b], lamv[c], lamv[d]) < -eps

    work = deque(e for e in range(ne) if nondelaunay(e))
    queued = [False] * ne
    for e in work:
        queued[e] = True
    pop = work.popleft if order == "fifo" else work.pop
    while work:
        e = pop()
        queued[e] = False
        if not nondelaunay(e):
            continue
        if len(flips) >= cap:
            raise FlipLimitExceeded(f"more than {cap} flips")
        h, ho, a, b, c, d = _quad(M, e)
        if h // 3 == ho // 3:
            raise UnflippableEdge(f"edge {e} is non-Delaunay but not flippable")
        before = None
        if on_flip is not None:
            before = (M.copy(), np.array(lamv), None if cur_loops is None
                      else [DualLoop(x) for x in cur_loops])
        if jacobian:
            w = diff_ptolemy_row(lamv[e], lamv[a], lamv[b], lamv[c], lamv[d]) * 0.5
            new_row: dict[int, float] = {}
            for x, wx in zip((e, a, b, c, d), w):
                src = rows.get(x)
                if src is None:
                    new_row[x] = new_row.get(x, 0.0) + wx
                else:
                    for col, val in src.items():
                        new_row[col] = new_row.get(col, 0.0) + wx * val
            rows[e] = new_row
        lamv[e] = update(lamv[e], lamv[a], lamv[b], lamv[c], lamv[d])
        hmap = M._flip_inplace(e)
        if cur_loops is not None:
            cur_loops = [_reroute(lp, (h, ho), hmap, M, e) for lp in cur_loops]
        flips.append(e)
        if on_flip is not None:
            on_flip(before[0], M.copy(), e, before[1], np.array(lamv), before[2],
                    None if cur_loops is None else [DualLoop(x) for x in cur_loops])
        for x in (a, b, c, d):
            if not queued[x]:
                queued[x] = True
                work.append(x)

    lam_out = np.array(lamv)
    bad = np.flatnonzero(triangle_inequality_margin(M, lam_out) <= 0)
    if len(bad):
        raise TriangleInequalityViolated(bad.tolist())
    D = None
    if jacobian:
        D = _assemble_jacobian(rows, ne)
    out_loops = None if cur_loops is None else [DualLoop(x) for x in cur_loops]
    return FlipTrace(M, lam_out, flips, D, out_loops)


def _assemble_jacobian(rows, ne) -> sp.csr_matrix:
    r, c, v = [], [], []
    for e in range(ne):
        row = rows.get(e)
        if row is None:
            r.append(e)
            c.append(e)
            v.append(1.0)
        else:
            for col, val in row.items():
                r.append(e)
                c.append(col)
                v.append(val)
    return sp.csr_matrix((v, (r, c)), shape=(ne, ne))


def diff_make_delaunay(mesh: Mesh, lam, constraints: ConstraintSystem | None = None,
                       eps: float = EPS_DELAUNAY, order: str = "fifo") -> FlipTrace:
    """``make_delaunay`` with the transition Jacobian and rerouted constraints."""
    loops = None if constraints is None else constraints.loops
    trace = make_delaunay(mesh, lam, eps, order=order, loops=loops, jacobian=True)
    if constraints is not None:
        trace.constraints = constraints.rebuilt(trace.mesh, trace.loops)
    return trace


def min_angle(mesh: Mesh, lam) -> float:
    return float(corner_angles(mesh, lam).min())
