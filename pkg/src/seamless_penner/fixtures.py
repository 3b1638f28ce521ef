"""Small closed meshes used by the tests, demos and acceptance suite."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, build_mesh


def tetrahedron() -> tuple[Mesh, np.ndarray]:
    P = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    F = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return build_mesh(F), P


def octahedron() -> tuple[Mesh, np.ndarray]:
    P = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
    F = [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
         [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    return build_mesh(F), P


def _grid_faces(n, m):
    def v(i, j):
        return (i % n) + n * (j % m)

    faces = []
    for j in range(m):
        for i in range(n):
            a, b, c, d = v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    return faces


def torus_grid(n: int = 2, m: int = 2) -> Mesh:
    """Periodic n x m grid of split squares.

    The gluing is given explicitly so that grids as small as 2 x 2 (where
    several edges join the same vertex pair) are well defined. With all
    Penner coordinates zero every triangle is equilateral, every vertex has
    degree six, and the metric is a flat torus.
    """
    if n < 2 or m < 2:
        raise ValueError("torus grid needs n, m >= 2")

    def sq(i, j):
        return (i % n) + n * (j % m)

    twin = np.empty(6 * n * m, dtype=np.int64)
    for j in range(m):
        for i in range(n):
            A, B = 2 * sq(i, j), 2 * sq(i, j) + 1
            # A = (a, b, c): h0 vertical x=i+1, h1 diagonal, h2 bottom horizontal
            # B = (a, c, d): h0 top horizontal, h1 vertical x=i, h2 diagonal
            pairs = [
                (3 * A + 1, 3 * B + 2),
                (3 * A + 2, 3 * (2 * sq(i, j - 1) + 1) + 0),
                (3 * A + 0, 3 * (2 * sq(i + 1, j) + 1) + 1),
            ]
            for x, y in pairs:
                twin[x], twin[y] = y, x
    return build_mesh(_grid_faces(n, m), twin=twin)


def torus_of_revolution(n: int = 8, m: int = 6, R: float = 2.0, r: float = 1.0):
    """Embedded torus (n around the axis, m around the tube), n, m >= 3."""
    if n < 3 or m < 3:
        raise ValueError("embedded torus needs n, m >= 3")
    theta = 2 * np.pi * np.arange(n) / n
    phi = 2 * np.pi * np.arange(m) / m
    T, Ph = np.meshgrid(theta, phi)  # index [j, i]
    x = (R + r * np.cos(Ph)) * np.cos(T)
    y = (R + r * np.cos(Ph)) * np.sin(T)
    z = r * np.sin(Ph)
    P = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    return build_mesh(_grid_faces(n, m)), P


def genus2() -> Mesh:
    """Two 3 x 3 grid tori glued along a triangle, plus one split face.

    16 vertices, 54 edges, 36 faces: chi = -2.
    """
    t1 = _grid_faces(3, 3)
    a, b, c = t1[0]
    rest1 = t1[1:]
    # second torus reversed so the glued boundary orientations cancel
    relabel = {a: a, b: b, c: c}
    nxt = 9
    for v in range(9):
        if v not in relabel:
            relabel[v] = nxt
            nxt += 1
    rest2 = [(relabel[x], relabel[z], relabel[y]) for (x, y, z) in _grid_faces(3, 3)[1:]]
    faces = rest1 + rest2
    # 1-to-3 split of the last face with a new vertex
    x, y, z = faces.pop()
    w = nxt
    faces += [(x, y, w), (y, z, w), (z, x, w)]
    return build_mesh(faces)
