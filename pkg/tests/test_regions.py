import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radflux.errors import EvaluationError, GeometryError, InvalidArgumentError
from radflux.regions import (
    Ball,
    Box,
    Tetrahedron,
    TriangleMesh,
    boundary_samples,
    gauss_residual,
    make_tetrahedron,
    volume,
    volume_integrate,
)

from conftest import unit

CUBE = Box((0, 0, 0), (1, 1, 1))
BALL = Ball((0, 0, 0), 1.0)
SIMPLEX = Tetrahedron([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
SCENES = __import__("pathlib").Path(__file__).resolve().parents[1] / "scenes"
MESH = TriangleMesh.from_file(SCENES / "unit_cube.tri")
SKEW = Tetrahedron([(0.1, -0.2, 0.3), (1.3, 0.1, -0.2), (0.2, 1.1, 0.4), (0.4, 0.3, 1.5)])
REGIONS = {"cube": CUBE, "ball": BALL, "simplex": SIMPLEX, "mesh": MESH, "skew": SKEW,
           "box": Box((-1, 0.5, 2), (0.5, 2.5, 2.25))}

CONST = lambda p: np.broadcast_to([1.0, -2.0, 0.5], p.shape)
IDENT = lambda p: p
SQUARE = lambda p: np.stack([p[:, 0] ** 2, 0 * p[:, 0], 0 * p[:, 0]], axis=1)
WAVY = lambda p: np.stack([np.sin(p[:, 1] + p[:, 0]), np.exp(0.3 * p[:, 2]) * p[:, 1], np.cos(p[:, 0] * p[:, 2])], axis=1)


def write_mesh(tmp_path, triangles, name="m.tri"):
    path = tmp_path / name
    path.write_text("\n".join(" ".join(repr(float(c)) for c in np.ravel(t)) for t in triangles) + "\n")
    return path


def cube_triangles():
    return MESH.triangles.copy()


# boundary samples ----------------------------------------------------------


def test_boundary_area_examples():
    assert abs(boundary_samples(CUBE).total_area - 6.0) <= 1e-9
    assert abs(boundary_samples(BALL).total_area - 4 * math.pi) <= 1e-4
    assert abs(boundary_samples(SIMPLEX).total_area - (1.5 + math.sqrt(3) / 2)) <= 1e-9
    assert abs(boundary_samples(MESH).total_area - 6.0) <= 1e-12


def test_samples_deterministic_and_positive():
    for region in REGIONS.values():
        s1 = region.boundary_samples()
        s2 = region.with_resolution(region.boundary_resolution).boundary_samples()
        assert np.array_equal(s1.points, s2.points) and np.array_equal(s1.weights, s2.weights)
        assert np.all(s1.weights > 0)
        assert np.allclose(np.linalg.norm(s1.normals, axis=1), 1.0, atol=1e-12)


def test_samples_refine_with_resolution():
    for region in (CUBE, BALL, SIMPLEX, MESH):
        n = len(region.boundary_samples())
        assert len(region.with_resolution(region.boundary_resolution * 2).boundary_samples()) > n


def test_flux_samples_iterate():
    s = SIMPLEX.boundary_samples()
    samples = list(s)
    assert len(samples) == len(s)
    assert all(x.area_weight > 0 for x in samples)


@pytest.mark.parametrize("name", sorted(REGIONS))
def test_closure(name):
    s = REGIONS[name].boundary_samples()
    assert np.linalg.norm(s.closure()) <= 1e-9 * s.total_area


# volume ---------------------------------------------------------------------


def test_volume_examples():
    assert volume(CUBE) == 1.0
    assert abs(volume(BALL) - 4 * math.pi / 3) <= 1e-4
    assert volume(SIMPLEX) == pytest.approx(1 / 6, rel=1e-15)
    assert volume(MESH) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("name", sorted(REGIONS))
def test_volume_matches_divergence_form(name):
    region = REGIONS[name]
    s = region.boundary_samples()
    div_form = float(np.sum(s.weights * np.sum(s.points * s.normals, axis=1))) / 3.0
    assert volume(region) > 0
    assert div_form == pytest.approx(volume(region), rel=1e-6)


# volume_integrate -------------------------------------------------------------


def test_volume_integrate_examples():
    assert abs(volume_integrate(CUBE, lambda p: np.ones(len(p))) - 1.0) <= 1e-12
    assert abs(volume_integrate(CUBE, lambda p: p[:, 0]) - 0.5) <= 1e-12
    assert abs(volume_integrate(BALL, lambda p: np.ones(len(p))) - 4 * math.pi / 3) <= 1e-3


@pytest.mark.parametrize("name", sorted(REGIONS))
def test_volume_integrate_affine_exact(name):
    region = REGIONS[name]
    s = region.boundary_samples()
    a = np.array([0.3, -1.1, 2.0])
    # oracle: int_R (c + a.x) dV = c |R| + a . int_R x dV, with int_R x_k dV = int_dR x_k^2 n_k / 2 dA
    moments = np.sum(s.weights[:, None] * s.points**2 * s.normals, axis=0) / 2.0
    expected = 1.5 * volume(region) + a @ moments
    got = volume_integrate(region, lambda p: 1.5 + p @ a)
    assert got == pytest.approx(expected, rel=1e-10)


def test_volume_integrate_non_finite():
    with pytest.raises(EvaluationError):
        volume_integrate(CUBE, lambda p: np.where(p[:, 0] > 0.5, np.nan, 1.0))


def test_ball_volume_rule_against_oracle():
    # int over the unit ball of x1^2 x2^2 = 4 pi / 105
    got = volume_integrate(BALL, lambda p: p[:, 0] ** 2 * p[:, 1] ** 2)
    assert got == pytest.approx(4 * math.pi / 105, rel=1e-12)


def test_tetra_rule_against_oracle():
    # int over the standard simplex of x1 x2 x3 = 1/720
    got = volume_integrate(SIMPLEX, lambda p: p[:, 0] * p[:, 1] * p[:, 2])
    assert got == pytest.approx(1 / 720, rel=1e-12)


# gauss residual -----------------------------------------------------------------


def test_gauss_residual_examples():
    assert gauss_residual(CUBE, CONST) <= 1e-10
    res, surf, vol = gauss_residual(CUBE, IDENT, parts=True)
    assert surf == pytest.approx(3.0, abs=1e-12) and vol == pytest.approx(3.0, abs=1e-8)
    assert res <= 1e-8
    res, surf, vol = gauss_residual(CUBE, SQUARE, parts=True)
    assert surf == pytest.approx(1.0, abs=1e-12) and vol == pytest.approx(1.0, abs=1e-6)
    assert res <= 1e-6


@pytest.mark.parametrize("name", sorted(REGIONS))
@pytest.mark.parametrize("field", [CONST, IDENT, SQUARE], ids=["const", "ident", "square"])
def test_gauss_residual_all_regions(name, field):
    assert gauss_residual(REGIONS[name], field) <= 1e-6


@pytest.mark.parametrize("name", ["cube", "ball", "simplex", "mesh"])
@pytest.mark.parametrize("field", [CONST, IDENT, SQUARE], ids=["const", "ident", "square"])
def test_refinement_does_not_increase_residual(name, field):
    region = REGIONS[name]
    r = region.boundary_resolution
    coarse = gauss_residual(region, field)
    fine = gauss_residual(region.with_resolution(2 * r), field)
    assert fine <= coarse + 1e-12


@pytest.mark.parametrize("name", ["cube", "ball", "simplex", "mesh"])
def test_refinement_non_polynomial_field(name):
    # quadrature error falls with refinement until the O(h_fd^2) difference
    # error of the divergence (~1e-9 here) takes over
    region = REGIONS[name]
    levels = [gauss_residual(region.with_resolution(r), WAVY) for r in (1, 2, 4, 8)]
    for coarse, fine in zip(levels, levels[1:]):
        assert fine <= max(coarse, 1e-9) + 1e-12


# region validation -------------------------------------------------------------


def test_invalid_regions():
    with pytest.raises(GeometryError):
        Box((0, 0, 0), (1, 0, 1))
    with pytest.raises(GeometryError):
        Ball((0, 0, 0), 0.0)
    with pytest.raises(GeometryError):
        Tetrahedron([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])


def test_tetrahedron_orientation_independent():
    flipped = Tetrahedron([(0, 0, 0), (0, 1, 0), (1, 0, 0), (0, 0, 1)])
    assert volume(flipped) == pytest.approx(1 / 6)
    s = flipped.boundary_samples()
    outward = np.sum((s.points - [0.25, 0.25, 0.25]) * s.normals, axis=1)
    assert np.all(outward > 0)


def test_mesh_file_roundtrip(tmp_path):
    mesh = TriangleMesh.from_file(write_mesh(tmp_path, cube_triangles()))
    assert volume(mesh) == pytest.approx(1.0)


def test_mesh_comments_and_blank_lines(tmp_path):
    path = write_mesh(tmp_path, cube_triangles())
    path.write_text("# unit cube\n\n" + path.read_text().replace("\n", "  # tri\n", 1))
    assert volume(TriangleMesh.from_file(path)) == pytest.approx(1.0)


def test_mesh_open(tmp_path):
    with pytest.raises(GeometryError, match="watertight"):
        TriangleMesh.from_file(write_mesh(tmp_path, cube_triangles()[:-1]))


def test_mesh_inward(tmp_path):
    tri = cube_triangles()[:, ::-1]
    with pytest.raises(GeometryError, match="inward"):
        TriangleMesh.from_file(write_mesh(tmp_path, tri))


def test_mesh_inconsistent_orientation(tmp_path):
    tri = cube_triangles()
    tri[0] = tri[0][::-1]
    with pytest.raises(GeometryError):
        TriangleMesh.from_file(write_mesh(tmp_path, tri))


def test_mesh_bad_line_reports_location(tmp_path):
    path = tmp_path / "bad.tri"
    path.write_text("0 0 0 1 0 0 0 1 0\n0 0 0 1 0\n")
    with pytest.raises(GeometryError, match=r"bad.tri:2"):
        TriangleMesh.from_file(path)
    path.write_text("0 0 0 1 0 0 0 1 x\n")
    with pytest.raises(GeometryError, match=r"bad.tri:1"):
        TriangleMesh.from_file(path)


def test_mesh_octahedron():
    v = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    faces = []
    for sx in (0, 1):
        for sy in (2, 3):
            for sz in (4, 5):
                t = [v[sx], v[sy], v[sz]]
                if np.linalg.det(np.array(t)) < 0:
                    t = t[::-1]
                faces.append(t)
    mesh = TriangleMesh(np.array(faces))
    assert volume(mesh) == pytest.approx(4 / 3)
    assert gauss_residual(mesh, SQUARE) <= 1e-6


# make_tetrahedron --------------------------------------------------------------


def closure(tet):
    return np.sum(tet.face_areas()[:, None] * tet.face_normals(), axis=0)


def test_make_tetrahedron_closure():
    tet = make_tetrahedron((0, 0, 0), 1.0, unit([1, 1, 1]))
    assert np.linalg.norm(closure(tet)) <= 1e-12
    assert np.allclose(tet.face_normals()[0], unit([1, 1, 1]), atol=1e-15)


def test_make_tetrahedron_scaling():
    n = unit([0.3, 0.5, 0.8])
    a, b = make_tetrahedron((1, 2, 3), 1.0, n), make_tetrahedron((1, 2, 3), 0.5, n)
    assert volume(b) == pytest.approx(volume(a) / 8, rel=1e-12)
    assert np.allclose(b.face_areas(), a.face_areas() / 4, rtol=1e-12)


@pytest.mark.parametrize("normal", [[0, 0, 1], [1, 0, 0], [0, -1, 0], [1, 1, 0], [1, 0, 1e-5]])
def test_make_tetrahedron_axis_aligned(normal):
    n = unit(normal)
    tet = make_tetrahedron((0.5, 0, 0), 1.0, n)
    assert volume(tet) > 0
    assert np.allclose(tet.face_normals()[0], n, atol=1e-15)
    assert np.linalg.norm(closure(tet)) <= 1e-12 * tet.face_areas()[0]
    assert np.all(tet.face_areas() > 1e-3 * tet.face_areas()[0])


@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.2),
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    st.floats(1e-3, 10),
)
def test_make_tetrahedron_properties(normal, x, h):
    n = unit(normal)
    tet = make_tetrahedron(x, h, n)
    A0 = tet.face_areas()[0]
    assert np.linalg.norm(closure(tet)) <= 1e-12 * A0
    assert np.allclose(tet.face_normals()[0], n, atol=1e-14)
    # contains x (its centroid)
    assert np.allclose(np.mean(tet.vertices, axis=0), x, atol=1e-12 * max(1.0, np.abs(x).max()))
    # the other three faces are mutually orthogonal (a rotated coordinate trihedron)
    N = tet.face_normals()[1:]
    assert np.allclose(N @ N.T, np.eye(3), atol=1e-12)


def test_make_tetrahedron_rejects_bad_h():
    for h in (0.0, -1.0, float("nan")):
        with pytest.raises(InvalidArgumentError):
            make_tetrahedron((0, 0, 0), h, [0, 0, 1])
