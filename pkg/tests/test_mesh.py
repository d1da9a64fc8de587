"""Mesh format, validation, topology derivation, patch enumeration, and
the preset generators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svstokes.mesh import (MeshError, MeshFormatError, Triangulation,
                           build_topology, crossed, dump_mesh,
                           enumerate_patch, generate, load_mesh, ngon_patch,
                           perturbed_grid, three_lines, type1_diagonal)

TWO_TRI = "vertices 4\n0 0\n1 0\n1 1\n0 1\ntriangles 2\n0 1 2\n0 2 3\n"


def test_load_dump_round_trip():
    mesh = load_mesh(TWO_TRI)
    again = load_mesh(dump_mesh(mesh))
    assert np.array_equal(mesh.vertices, again.vertices)
    assert np.array_equal(mesh.triangles, again.triangles)


def test_load_ignores_comments_and_blank_lines():
    text = "# header\n\nvertices 4\n0 0\n1 0\n# mid\n1 1\n0 1\n" \
           "triangles 2\n0 1 2\n0 2 3\n"
    mesh = load_mesh(text)
    assert mesh.num_vertices == 4
    assert mesh.num_triangles == 2


@pytest.mark.parametrize("text, what", [
    ("vertices x\n", "count"),
    ("vertices 1\n0 zz\ntriangles 0\n", "coordinate"),
    ("vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 5\n", "index"),
    ("vertices 3\n0 0\n1 0\n0 1\ntriangles 2\n0 1 2\n", "end of file"),
    ("triangles 1\n0 1 2\n", "vertices"),
])
def test_load_rejects_malformed_input(text, what):
    with pytest.raises(MeshFormatError):
        load_mesh(text)


def test_duplicate_triangle_rejected():
    with pytest.raises(MeshError):
        load_mesh("vertices 3\n0 0\n1 0\n0 1\ntriangles 2\n0 1 2\n1 2 0\n")


def test_repeated_vertex_in_triangle_rejected():
    with pytest.raises(MeshError):
        load_mesh("vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 1\n")


def test_degenerate_triangle_rejected():
    with pytest.raises(MeshError):
        load_mesh("vertices 3\n0 0\n1 1\n2 2\ntriangles 1\n0 1 2\n")


def test_clockwise_triangles_reoriented():
    mesh = load_mesh("vertices 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\n")
    p = mesh.vertices[mesh.triangles[0]]
    u, v = p[1] - p[0], p[2] - p[0]
    assert u[0] * v[1] - u[1] * v[0] > 0


def test_nonmanifold_edge_rejected():
    text = ("vertices 5\n0 0\n1 0\n0 1\n1 1\n0.5 -1\n"
            "triangles 3\n0 1 2\n1 3 2\n0 4 1\n")
    mesh = load_mesh(text)
    topo = build_topology(mesh)  # edge (0,1) has 2 triangles: fine
    assert topo.T == 3
    bad = ("vertices 5\n0 0\n2 0\n1 1\n1 -1\n1 2\n"
           "triangles 3\n0 1 2\n0 3 1\n0 1 4\n")
    with pytest.raises(MeshError):
        build_topology(load_mesh(bad))


def test_hanging_vertex_rejected():
    # vertex 4 sits in the middle of edge (0, 1) of triangle (0, 1, 2)
    text = ("vertices 5\n0 0\n2 0\n1 2\n1 -2\n1 0\n"
            "triangles 3\n0 1 2\n0 4 3\n4 1 3\n")
    with pytest.raises(MeshError):
        build_topology(load_mesh(text))


def test_two_triangle_topology_counts():
    topo = build_topology(load_mesh(TWO_TRI))
    assert (topo.T, topo.E, topo.E0, topo.V, topo.V0) == (2, 5, 1, 4, 0)
    assert topo.euler_ok


def test_crossed_counts():
    for n in (1, 2, 3):
        topo = build_topology(crossed(n))
        assert topo.T == 4 * n * n
        assert topo.V == (n + 1) ** 2 + n * n
        assert topo.euler_ok
        # Euler for a disk: V - E + T = 1
        assert topo.V - topo.E + topo.T == 1
    topo = build_topology(crossed(1))
    assert (topo.V0, topo.E0, topo.T) == (1, 4, 4)


def test_type1_counts():
    for n in (2, 3):
        topo = build_topology(type1_diagonal(n))
        assert topo.T == 2 * n * n
        assert topo.V == (n + 1) ** 2
        assert topo.V - topo.E + topo.T == 1


def test_three_lines_counts():
    topo = build_topology(three_lines(2))
    assert topo.T == 8
    assert topo.V - topo.E + topo.T == 1
    # every interior vertex is a regular hexagon center
    for v in range(topo.V):
        if not topo.boundary_vertex[v]:
            patch = enumerate_patch(topo, v)
            assert patch.N == 6
            assert np.allclose(patch.theta, np.pi / 3.0)


def test_ngon_patch_structure():
    topo = build_topology(ngon_patch(6))
    assert topo.T == 6
    assert topo.V0 == 1
    patch = enumerate_patch(topo, 0)
    assert not patch.boundary
    assert patch.N == 6
    assert np.isclose(sum(patch.theta), 2 * np.pi)


def test_ngon_patch_rejects_bad_perturbations():
    with pytest.raises(MeshError):
        ngon_patch(3, angle_shift=[0.0, -2.0, 0.0])
    with pytest.raises(MeshError):
        ngon_patch(2)


def test_interior_patch_is_ccw_and_closed():
    topo = build_topology(crossed(2))
    for v in range(topo.V):
        if topo.boundary_vertex[v]:
            continue
        patch = enumerate_patch(topo, v)
        assert len(patch.spokes) == patch.N
        assert np.isclose(sum(patch.theta), 2 * np.pi)
        tris = topo.mesh.triangles
        for k in range(patch.N):
            t = patch.tris[k]
            assert v in tris[t]
            # triangle k is bounded by the incoming and outgoing spokes
            s_in, s_out = patch.tri_spokes(k)
            assert patch.spokes[s_in] in tris[t]
            assert patch.spokes[s_out] in tris[t]


def test_boundary_patch_has_extra_spoke():
    topo = build_topology(crossed(2))
    for v in range(topo.V):
        if not topo.boundary_vertex[v]:
            continue
        patch = enumerate_patch(topo, v)
        assert patch.boundary
        assert len(patch.spokes) == patch.N + 1
        assert sum(patch.theta) < 2 * np.pi - 1e-9


def test_generate_presets_and_errors():
    mesh = generate("crossed", n=2)
    assert mesh.num_triangles == 16
    with pytest.raises(MeshError):
        generate("no_such_preset")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4))
def test_perturbed_grid_always_valid(seed, n):
    topo = build_topology(perturbed_grid(n, seed=seed))
    assert topo.euler_ok
    assert topo.V - topo.E + topo.T == 1
    # each triangle contributes 3 vertex incidences
    assert sum(len(topo.vertex_tris[v]) for v in range(topo.V)) == 3 * topo.T
    for v in range(topo.V):
        patch = enumerate_patch(topo, v)
        total = sum(patch.theta)
        assert total <= 2 * np.pi + 1e-9


def test_triangulation_arrays_read_only():
    mesh = load_mesh(TWO_TRI)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 5.0
