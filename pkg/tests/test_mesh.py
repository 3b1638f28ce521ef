import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seamless_penner.errors import (
    BoundaryDetected,
    Disconnected,
    InconsistentOrientation,
    MeshError,
    NonManifoldEdge,
    NonManifoldVertex,
)
from seamless_penner.fixtures import genus2, torus_grid
from seamless_penner.mesh import build_mesh, edge_lengths, genus, log_lengths, read_obj, write_connectivity

TET_FACES = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]


def counts(m):
    return m.n_vertices, m.n_edges, m.n_faces, m.genus


def test_tetrahedron_counts(tet):
    assert counts(tet[0]) == (4, 6, 4, 0)


def test_torus_grid_counts(grid2):
    assert counts(grid2) == (4, 12, 8, 1)


def test_genus_values(tet, octa, grid3, torus, g2):
    assert genus(tet[0]) == 0
    assert genus(octa[0]) == 0
    assert genus(grid3) == 1
    assert genus(torus[0]) == 1
    # hand count: 16 vertices, 3 * 36 / 2 = 54 edges, 36 faces -> chi = -2
    assert (g2.n_vertices, g2.n_edges, g2.n_faces) == (16, 54, 36)
    assert genus(g2) == 2


def test_inconsistent_orientation():
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 3, 2]]  # last face reversed
    with pytest.raises(InconsistentOrientation):
        build_mesh(faces)


def test_two_faces_same_orientation_on_shared_edge():
    # a closed pair where the shared edge is traversed the same way twice
    with pytest.raises(MeshError):
        build_mesh([[0, 1, 2], [0, 1, 3]])


def test_boundary_detected():
    with pytest.raises(BoundaryDetected):
        build_mesh([[0, 1, 2]])


def test_non_manifold_edge():
    # edge (0, 1) shared by three faces; reported ahead of the boundary it also creates
    with pytest.raises(NonManifoldEdge):
        build_mesh([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(NonManifoldEdge):
        build_mesh(TET_FACES + [[1, 0, 4], [0, 1, 4], [0, 1, 5]])


def test_disconnected():
    with pytest.raises(Disconnected):
        build_mesh([[0, 1, 2], [0, 2, 1], [3, 4, 5], [3, 5, 4]])


def test_non_manifold_vertex():
    # two closed pillows sharing vertex 0
    with pytest.raises(NonManifoldVertex):
        build_mesh([[0, 1, 2], [0, 2, 1], [0, 3, 4], [0, 4, 3]])


def test_index_out_of_range_and_unused_vertex():
    with pytest.raises((MeshError, ValueError)):
        build_mesh([[0, 1, -1]])


def test_two_face_pillow_is_a_sphere():
    m = build_mesh([[0, 1, 2], [0, 2, 1]])
    assert counts(m) == (3, 3, 2, 0)


def check_invariants(m):
    h = np.arange(m.n_halfedges)
    nxt = 3 * (h // 3) + (h + 1) % 3
    assert np.array_equal(m.twin[m.twin], h)
    assert np.all(m.twin != h)
    assert np.array_equal(nxt[nxt[nxt]], h)
    # twin traverses the edge the other way
    for x in h:
        assert m.tail(int(m.twin[x])) == m.head(int(x))
        assert m.edge[m.twin[x]] == m.edge[x]
    deg = m.vertex_degrees()
    assert deg.sum() == 2 * m.n_edges == 3 * m.n_faces
    assert (m.n_vertices - m.n_edges + m.n_faces) % 2 == 0
    for c in range(m.n_corners):
        cr = m.corner(c)
        assert cr.face == c // 3 and cr.slot == c % 3
        assert cr.vertex == m.faces[cr.face, cr.slot]
        # the opposite edge joins the two other corners of the face
        assert cr.edge == m.edge[c]
    m.check()


def test_invariants_on_fixtures(tet, octa, grid2, grid3, torus, g2):
    for m in (tet[0], octa[0], grid2, grid3, torus[0], g2):
        check_invariants(m)


def test_corner_opposite_edge_not_incident_on_simplicial_mesh(torus):
    m = torus[0]
    ev = m.edge_vertices()
    for c in range(m.n_corners):
        assert m.corner(c).vertex not in ev[m.edge[c]]


def test_deterministic_numbering(torus):
    m = torus[0]
    m2 = build_mesh(m.faces.tolist())
    assert np.array_equal(m.edge, m2.edge)
    assert np.array_equal(m.twin, m2.twin)
    assert np.array_equal(m.edge_he, m2.edge_he)


def test_edges_sorted_by_vertex_pair(torus):
    ev = np.sort(torus[0].edge_vertices(), axis=1)
    keys = ev[:, 0] * 10_000 + ev[:, 1]
    assert np.all(np.diff(keys) >= 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=40))
def test_random_flips_preserve_invariants(picks):
    m = torus_grid(3, 3)
    for p in picks:
        e = p % m.n_edges
        if m.is_flippable(e):
            m, hmap = m.flipped(e)
            assert sorted(hmap) == sorted(hmap.values())
    check_invariants(m)


def test_flip_twice_restores_connectivity(grid3):
    m, _ = grid3.flipped(5)
    m, _ = m.flipped(5)
    # same combinatorial quad back; vertex pair of edge 5 restored
    assert sorted(m.edge_vertices()[5]) == sorted(grid3.edge_vertices()[5])
    check_invariants(m)


def test_multi_edges_allowed_after_flips(grid2):
    m = grid2
    for e in range(m.n_edges):
        if m.is_flippable(e):
            m, _ = m.flipped(e)
    check_invariants(m)


def test_obj_roundtrip_and_lengths(tmp_path, torus):
    m, P = torus
    path = tmp_path / "t.obj"
    with open(path, "w") as fh:
        fh.write("# torus\n")
        for p in P:
            fh.write(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for f in m.faces:
            fh.write("f " + " ".join(f"{i + 1}/1" for i in f) + "\n")
    V, F = read_obj(path)
    m2 = build_mesh(F)
    assert np.allclose(V, P)
    ev = m2.edge_vertices()
    ref = np.linalg.norm(V[ev[:, 0]] - V[ev[:, 1]], axis=1)
    assert np.allclose(edge_lengths(m2, V), ref)
    assert np.allclose(log_lengths(m2, V), 2 * np.log(ref))


def test_obj_rejects_quads(tmp_path):
    path = tmp_path / "q.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(MeshError):
        read_obj(path)


def test_write_connectivity(tmp_path, g2):
    path = tmp_path / "c.txt"
    write_connectivity(g2, path)
    text = path.read_text()
    assert str(g2.n_faces) in text
    data_lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    assert len(data_lines) >= g2.n_faces + g2.n_edges


def test_genus2_fixture_is_two_tori():
    m = genus2()
    assert m.euler_characteristic == -2
