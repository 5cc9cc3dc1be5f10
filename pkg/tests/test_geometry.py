import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperspec.errors import DomainError, GeometryError, UsageError
from hyperspec.geometry import (
    EuclideanBox,
    EuclideanDisk,
    GeodesicBall,
    HalfSpaceBox,
    Polygon2D,
    ball_embed,
    conformal_factor,
    domain_from_dict,
    domain_to_dict,
    eps_cap,
    geometric_profile,
    hyperbolic_distance,
    hyperbolic_volume,
    minimal_slope_eps,
    slope_sum,
)


@pytest.mark.parametrize(
    "x, expected",
    [((0.3, 1.0), 1.0), ((0.0, 0.0, 2.0), 0.25), ((1.0, 0.5), 4.0)],
)
def test_conformal_factor_values(x, expected):
    assert conformal_factor(x) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("x", [(0.0, 0.0), (1.0, -0.5)])
def test_conformal_factor_rejects_boundary(x):
    with pytest.raises(DomainError):
        conformal_factor(x)


def test_box_volumes():
    assert hyperbolic_volume(HalfSpaceBox((0, 1), (1, 2))) == pytest.approx(0.5, rel=1e-12)
    assert hyperbolic_volume(HalfSpaceBox((0, 0, 1), (1, 1, 2))) == pytest.approx(0.375, rel=1e-12)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_ball_volume_matches_closed_form(r):
    # area of a hyperbolic disk: 2 pi (cosh r - 1)
    assert hyperbolic_volume(GeodesicBall(r)) == pytest.approx(2 * math.pi * (math.cosh(r) - 1), rel=1e-9)


def test_ball_volume_three_dimensions():
    # volume of a geodesic ball in H^3: pi (sinh 2r - 2r)
    r = 0.8
    assert hyperbolic_volume(GeodesicBall(r, dim=3)) == pytest.approx(math.pi * (math.sinh(2 * r) - 2 * r), rel=1e-9)


def test_polygon_volume_matches_box():
    sq = Polygon2D([(0, 1), (1, 1), (1, 2), (0, 2)])
    assert hyperbolic_volume(sq) == pytest.approx(0.5, rel=1e-10)


def test_volume_rejects_euclidean_domain():
    with pytest.raises(UsageError):
        hyperbolic_volume(EuclideanBox((0, 0), (1, 1)))


@pytest.mark.parametrize(
    "lo, hi, rho, s_max",
    [((0, 1), (1, 2), 4.0, 0.5), ((0, 10), (1, 11), 1.21, 1 / 101), ((-2, 1), (2, 2), 4.0, 0.8)],
)
def test_box_profiles(lo, hi, rho, s_max):
    prof = geometric_profile(HalfSpaceBox(lo, hi))
    assert prof.rho_ratio == pytest.approx(rho, rel=1e-14)
    assert prof.s_max == pytest.approx(s_max, rel=1e-14)
    assert prof.eps_cor == pytest.approx(rho - 1, rel=1e-14)


def test_unit_box_profile_eps():
    prof = geometric_profile(HalfSpaceBox((0, 1), (1, 2)))
    assert prof.eps_thm2 == pytest.approx(1.0, rel=1e-14)


def test_eps_none_beyond_cap():
    # s_max = 0.8 needs eps ~ 1.35 > 1, the two-dimensional cap
    assert geometric_profile(HalfSpaceBox((-2, 1), (2, 2))).eps_thm2 is None


@given(
    x0=st.floats(-3, 3), w=st.floats(0.1, 3), y0=st.floats(0.1, 3), hgt=st.floats(0.1, 3)
)
@settings(max_examples=30, deadline=None)
def test_box_rho_matches_grid_sampling(x0, w, y0, hgt):
    box = HalfSpaceBox((x0, y0), (x0 + w, y0 + hgt))
    g = np.linspace(0.0, 1.0, 100)
    ys = y0 + g * hgt
    sampled = ys.max() ** 2 / ys.min() ** 2
    assert geometric_profile(box).rho_ratio == pytest.approx(sampled, rel=1e-12)


@given(s=st.floats(1e-6, 5.0))
def test_minimal_eps_solves_defining_equation(s):
    e = minimal_slope_eps(s)
    assert e * e / (1 + e) == pytest.approx(s, rel=1e-12)


@given(x0=st.floats(-2, 2), w=st.floats(0.05, 2), y0=st.floats(0.3, 3), hgt=st.floats(0.05, 3))
@settings(max_examples=30, deadline=None)
def test_eps_thm2_equality_or_absent(x0, w, y0, hgt):
    prof = geometric_profile(HalfSpaceBox((x0, y0), (x0 + w, y0 + hgt)))
    if prof.eps_thm2 is not None:
        e = prof.eps_thm2
        assert e <= eps_cap(2) * (1 + 1e-12)
        assert e * e / (1 + e) == pytest.approx(prof.s_max, rel=1e-12)
    else:
        assert minimal_slope_eps(prof.s_max) > eps_cap(2)


def test_ball_embed_small_radius():
    c, rad = ball_embed(1e-12, 1.0)
    assert c == pytest.approx(1.0) and rad == pytest.approx(0.0, abs=1e-11)


@pytest.mark.parametrize("a", [1.0, 2.0, 0.3])
def test_ball_embed_boundary_is_at_distance_r(a):
    r = 1.0
    c, rad = ball_embed(r, a)
    assert c == pytest.approx(a * math.cosh(1.0)) and rad == pytest.approx(a * math.sinh(1.0))
    # independent check via cosh d = 1 + |x-y|^2 / (2 x_2 y_2)
    for phi in np.linspace(0, 2 * math.pi, 17):
        p = np.array([rad * math.cos(phi), c + rad * math.sin(phi)])
        q = np.array([0.0, a])
        d = math.acosh(1 + np.sum((p - q) ** 2) / (2 * p[1] * q[1]))
        assert d == pytest.approx(r, rel=1e-12)


@given(r=st.floats(1e-3, 60), a=st.floats(1e-3, 1e3))
def test_ball_embed_stays_in_half_space(r, a):
    try:
        c, rad = ball_embed(r, a)
    except DomainError:
        assert r > 15  # only balls whose bottom is below double resolution are refused
        return
    assert c - rad > 0
    # the bottom height is recovered up to the resolution of the radius
    assert abs((c - rad) - a * math.exp(-r)) <= 2 * np.spacing(rad)


def test_hyperbolic_distance_vertical():
    assert hyperbolic_distance((0.0, 1.0), (0.0, math.e)) == pytest.approx(1.0, rel=1e-14)


def test_ball_profile_closed_form():
    # for an axis-centred ball, sup of x_1^2/(x_1^2+x_2^2) is tanh^2 r
    for r in (0.5, 1.0):
        prof = geometric_profile(GeodesicBall(r))
        assert prof.rho_ratio == pytest.approx(math.exp(4 * r), rel=1e-12)
        assert prof.s_max == pytest.approx(math.tanh(r) ** 2, rel=1e-6)
        assert prof.sampling_resolution is not None


def test_slope_sum_values():
    assert slope_sum(np.array([1.0, 1.0])) == pytest.approx(0.5)
    assert slope_sum(np.array([0.0, 2.0, 1.0])) == pytest.approx(0.8)


def test_polygon_profile_matches_box():
    prof = geometric_profile(Polygon2D([(-2, 1), (2, 1), (2, 2), (-2, 2)]))
    assert prof.s_max == pytest.approx(0.8) and prof.rho_ratio == pytest.approx(4.0)


def test_polygon_rejects_self_intersection():
    with pytest.raises(GeometryError):
        Polygon2D([(0, 1), (1, 2), (1, 1), (0, 2)])


def test_polygon_reorients_clockwise_input():
    p = Polygon2D([(0, 1), (0, 2), (1, 2), (1, 1)])
    a = p.vertices
    area = 0.5 * sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(a, a[1:] + a[:1]))
    assert area > 0


@pytest.mark.parametrize(
    "d",
    [
        HalfSpaceBox((0, 1), (1, 2)),
        EuclideanBox((0, 0), (2, 1)),
        GeodesicBall(0.7, 1.5),
        Polygon2D([(0, 1), (2, 1), (1, 3)]),
        EuclideanDisk((0.5, 0.5), 2.0),
    ],
)
def test_domain_round_trip(d):
    assert domain_from_dict(domain_to_dict(d)) == d


def test_domain_from_dict_errors():
    with pytest.raises(UsageError):
        domain_from_dict({"kind": "torus"})
    with pytest.raises(UsageError):
        domain_from_dict({"kind": "geodesic_ball"})
    with pytest.raises(GeometryError):
        domain_from_dict({"kind": "half_space_box", "lo": [0, 0], "hi": [1, 1]})
