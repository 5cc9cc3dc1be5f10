import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperspec.errors import GeometryError, UsageError
from hyperspec.geometry import EuclideanBox, EuclideanDisk, GeodesicBall, HalfSpaceBox, Polygon2D
from hyperspec.mesh import generate, mesh_from_text, mesh_to_text, refine

UNIT = EuclideanBox((0, 0), (1, 1))


def incident_counts(m):
    return np.bincount(m.triangles.ravel(), minlength=m.n_vertices)


def test_coarsest_box_mesh():
    m = generate(UNIT, 1.5)
    assert (m.n_vertices, m.n_triangles) == (4, 2)
    assert m.boundary.all()


def test_three_by_three_grid():
    m = generate(UNIT, 0.5)
    assert (m.n_vertices, m.n_triangles, m.n_interior) == (9, 8, 1)


def test_refine_two_triangle_square():
    m = refine(generate(UNIT, 1.5))
    assert (m.n_vertices, m.n_triangles) == (9, 8)


def test_disk_area_converges():
    # inscribed-polygon area: each boundary chord subtends 2 pi / (6 rings)
    m = generate(EuclideanDisk((0, 0), 1.0), 0.05)
    rings = 20
    inscribed = 0.5 * 6 * rings * math.sin(2 * math.pi / (6 * rings))
    assert m.signed_areas().sum() == pytest.approx(inscribed, rel=1e-12)
    assert abs(m.signed_areas().sum() - math.pi) / math.pi < 0.005


@pytest.mark.parametrize(
    "d, h, edge_factor",
    [
        # grid spacing is target_h, so the cell diagonals reach sqrt(2) target_h
        (HalfSpaceBox((0, 1), (1, 2)), 0.2, math.sqrt(2)),
        (EuclideanBox((-1, 0), (2, 0.5)), 0.3, math.sqrt(2)),
        # ring spacing is target_h; zipper diagonals stay below 1.5 ring spacings
        (GeodesicBall(1.0), 0.3, 1.5),
        (EuclideanDisk((1, 1), 0.5), 0.1, 1.5),
        (Polygon2D([(0, 1), (2, 1), (2, 2), (1, 1.5), (0, 2)]), 0.25, 1.0),
    ],
)
def test_generated_meshes_satisfy_invariants(d, h, edge_factor):
    m = generate(d, h)
    m.check()
    assert m.h <= h * edge_factor + 1e-12
    assert np.all(incident_counts(m)[~m.boundary] >= 3)
    r = refine(m)
    r.check()
    assert np.array_equal(r.vertices[: m.n_vertices], m.vertices)
    assert np.all(incident_counts(r)[~r.boundary] >= 3)


def test_polygon_mesh_respects_target_and_area():
    poly = Polygon2D([(0, 1), (2, 1), (2, 2), (1, 1.5), (0, 2)])
    m = generate(poly, 0.2)
    assert m.h <= 0.2 + 1e-12
    assert m.signed_areas().sum() == pytest.approx(1.5, rel=1e-12)


@given(w=st.floats(0.2, 3), hgt=st.floats(0.2, 3), h=st.floats(0.05, 1.0))
@settings(max_examples=25, deadline=None)
def test_box_area_exact(w, hgt, h):
    m = generate(HalfSpaceBox((0, 1), (w, 1 + hgt)), h)
    assert m.signed_areas().sum() == pytest.approx(w * hgt, rel=1e-12)
    m.check()


def test_ball_mesh_stays_in_half_plane():
    m = refine(generate(GeodesicBall(2.0, 0.5), 0.2))
    assert m.vertices[:, 1].min() > 0


def test_refined_disk_boundary_on_circle():
    d = EuclideanDisk((0.3, -0.2), 1.3)
    m = refine(refine(generate(d, 0.4)))
    r = np.linalg.norm(m.vertices[m.boundary] - np.array(d.center), axis=1)
    assert np.allclose(r, d.radius, rtol=1e-14)


def test_mesh_text_round_trip():
    m = generate(GeodesicBall(0.5), 0.1)
    back = mesh_from_text(mesh_to_text(m), m.domain)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.array_equal(back.boundary, m.boundary)


def test_generation_is_deterministic():
    a = mesh_to_text(generate(Polygon2D([(0, 1), (3, 1), (1, 3)]), 0.3))
    b = mesh_to_text(generate(Polygon2D([(0, 1), (3, 1), (1, 3)]), 0.3))
    assert a == b


def test_bad_inputs():
    with pytest.raises(UsageError):
        generate(UNIT, 0.0)
    with pytest.raises(UsageError):
        mesh_from_text("3 1\n0 0 1\n")
    with pytest.raises(GeometryError):
        Polygon2D([(0, 0), (1, 1), (2, 2)])
