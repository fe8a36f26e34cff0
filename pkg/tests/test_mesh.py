import numpy as np
import pytest

from swvd.errors import InvalidArgumentError, InvalidDataError, MeshError
from swvd.mesh import (TriMesh, build_uniform, dump_mesh, load_mesh, locate_uniform,
                       sample_bathymetry)


def test_uniform_counts_and_area(square):
    assert square.n_cells == 2 * 8 * 8
    assert square.n_vertices == 81
    assert square.area.sum() == pytest.approx(4.0, rel=1e-14)
    assert np.allclose(square.area, 4.0 / 128)


def test_neighbors_are_symmetric(square):
    nb, ne = square.neighbors, square.nbr_edge
    j, k = np.nonzero(nb >= 0)
    assert np.all(nb[nb[j, k], ne[j, k]] == j)
    assert np.all(ne[nb[j, k], ne[j, k]] == k)
    # boundary edges of an 8x8 square: 4 * 8
    assert np.count_nonzero(nb < 0) == 32


def test_normals_point_out_and_close(square):
    n = square.normals
    assert np.allclose(np.linalg.norm(n, axis=-1), 1.0)
    # sum of l_k n_k vanishes for a closed polygon
    s = (square.edge_len[..., None] * n).sum(axis=1)
    assert np.abs(s).max() < 1e-15
    # outward: the midpoint lies on the positive side relative to the barycentre
    assert np.all(np.einsum("jkd,jkd->jk", square.mid_off, n) > 0)


def test_opposite_normals_across_edge(square):
    j, k = np.nonzero(square.neighbors >= 0)
    nj = square.normals[j, k]
    nk = square.normals[square.neighbors[j, k], square.nbr_edge[j, k]]
    assert np.allclose(nj, -nk, atol=1e-15)


def test_altitude_relation(square):
    assert np.allclose(square.altitudes * square.edge_len, 2 * square.area[:, None])


def test_orientation_fixed():
    m = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
    assert m.area[0] == pytest.approx(0.5)


def test_degenerate_and_bad_index():
    with pytest.raises(MeshError):
        TriMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])
    with pytest.raises(MeshError):
        TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])


def test_non_manifold_edge():
    v = [[0, 0], [1, 0], [0, 1], [0, -1], [1, 1]]
    with pytest.raises(MeshError):
        TriMesh(v, [[0, 1, 2], [0, 3, 1], [0, 1, 4]])


def test_bad_arguments():
    with pytest.raises(InvalidArgumentError):
        build_uniform(0, 3)
    with pytest.raises(InvalidArgumentError):
        build_uniform(2, 2, (1, 0, 0, 1))


def test_locate_uniform_matches_bruteforce(square, rng):
    pts = rng.uniform(-0.999, 0.999, size=(200, 2))
    assert np.array_equal(locate_uniform(square.uniform, pts), square.locate(pts))


def test_bathymetry_well_defined_at_midpoints(humps_mesh):
    m, b = humps_mesh
    j, k = np.nonzero(m.neighbors >= 0)
    assert np.array_equal(b.midpoint[j, k], b.midpoint[m.neighbors[j, k], m.nbr_edge[j, k]])
    assert np.allclose(b.center, b.cell_vertex.mean(axis=1))


def test_bathymetry_plane_exact_for_linear(square):
    b = sample_bathymetry(lambda x, y: 0.3 * x - 0.2 * y + 1.0, square)
    assert np.allclose(b.grad, [0.3, -0.2])
    j = 17
    p = square.vertices[square.cells[j, 0]]
    assert b.evaluate(square, j, p) == pytest.approx(0.3 * p[0] - 0.2 * p[1] + 1.0)


def test_nonfinite_bathymetry(square):
    with pytest.raises(InvalidDataError):
        sample_bathymetry(lambda x, y: np.where(x > 0, np.nan, 0.0), square)


def test_dump_load_roundtrip(square, tmp_path):
    p = tmp_path / "m.txt"
    dump_mesh(square, p)
    m2 = load_mesh(p)
    assert np.array_equal(m2.vertices, square.vertices)
    assert np.array_equal(m2.cells, square.cells)


def test_load_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("vertices 2\n0 0\n")
    with pytest.raises(MeshError):
        load_mesh(p)
