import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from predsafe.errors import InvalidPathError, OutOfPathExtentError
from predsafe.occupancy import GridSpec
from predsafe.path_frame import (
    NominalPath,
    PathRelativePoint,
    build_curvilinear_mesh,
    from_path_relative,
    polygon_area,
    project_points,
    project_to_path,
    quads_are_simple,
    unproject_points,
)

STRAIGHT = NominalPath(np.array([[0.0, 0.0], [100.0, 0.0]]))


def quarter_circle(radius=10.0, n=10_000):
    phi = np.linspace(0.0, math.pi / 2, n)
    # counterclockwise: the center (0, 0) is on the path's left
    return NominalPath(np.column_stack([radius * np.cos(phi - math.pi / 2), radius * np.sin(phi - math.pi / 2) + radius]))


def brute_force_projection(path, p):
    """Closest point by dense sampling of every segment (independent of the engine)."""
    best = (np.inf, None, None)
    s = path.cumulative_arclength
    v = path.vertices
    u = np.linspace(0.0, 1.0, 21)
    for k in range(len(v) - 1):
        pts = v[k] + u[:, None] * (v[k + 1] - v[k])
        dist = np.hypot(*(pts - p).T)
        i = int(np.argmin(dist))
        if dist[i] < best[0]:
            best = (dist[i], s[k] + u[i] * (s[k + 1] - s[k]), k)
    return best


def test_straight_identity_examples():
    assert project_to_path(STRAIGHT, 0.0, (5.0, 2.0)) == PathRelativePoint(5.0, 2.0)
    assert project_to_path(STRAIGHT, 0.0, (5.0, -2.0)) == PathRelativePoint(5.0, -2.0)
    np.testing.assert_allclose(from_path_relative(STRAIGHT, 0.0, PathRelativePoint(5.0, 2.0)), [5.0, 2.0])


def test_quarter_circle_projection_matches_numeric_oracle():
    path = quarter_circle()
    center = np.array([0.0, 10.0])
    # radius 12, 45 degrees around the arc: outside the curve, i.e. right of the path
    p = center + 12.0 * np.array([math.cos(-math.pi / 4), math.sin(-math.pi / 4)])
    pr = project_to_path(path, 0.0, p)
    dist, s_oracle, _ = brute_force_projection(path, p)
    assert pr.a == pytest.approx(s_oracle, abs=2e-3)
    assert pr.a == pytest.approx(10.0 * math.pi / 4, abs=1e-3)
    assert pr.c == pytest.approx(-2.0, abs=1e-6)
    assert abs(pr.c) == pytest.approx(dist, abs=1e-3)


def test_quarter_circle_inverse():
    path = quarter_circle()
    xy = from_path_relative(path, 0.0, PathRelativePoint(10.0 * math.pi / 4, -2.0))
    expected = np.array([0.0, 10.0]) + 12.0 * np.array([math.cos(-math.pi / 4), math.sin(-math.pi / 4)])
    np.testing.assert_allclose(xy, expected, atol=1e-6)


def test_tie_break_prefers_smaller_arclength():
    # a U-turn: the point midway between both legs is equidistant from them
    path = NominalPath(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 2.0], [0.0, 2.0]]))
    pr = project_to_path(path, 0.0, (5.0, 1.0))
    assert pr.a == pytest.approx(5.0)
    assert pr.c == pytest.approx(1.0)


def test_points_on_path_project_exactly():
    path = quarter_circle(n=200)
    s = path.cumulative_arclength
    a, c = project_points(path, path.vertices)
    np.testing.assert_allclose(a, s, atol=1e-9)
    np.testing.assert_allclose(c, 0.0, atol=1e-9)


def test_invalid_paths():
    with pytest.raises(InvalidPathError):
        NominalPath(np.array([[0.0, 0.0]]))
    with pytest.raises(InvalidPathError):
        NominalPath(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))


def test_out_of_extent_raises_unless_clamped(caplog):
    with pytest.raises(OutOfPathExtentError):
        unproject_points(STRAIGHT, np.array([150.0]), np.array([0.0]))
    xy = unproject_points(STRAIGHT, np.array([150.0]), np.array([0.0]), clamp=True)
    np.testing.assert_allclose(np.asarray(xy).reshape(-1), [100.0, 0.0])
    assert "clamp" in caplog.text.lower()


def test_straight_mesh_centers():
    spec = GridSpec()
    mesh = build_curvilinear_mesh(STRAIGHT, spec, 0.0)
    assert mesh.cell_centers.shape[:2] == (60, 20)
    i, j = np.meshgrid(np.arange(60), np.arange(20), indexing="ij")
    np.testing.assert_allclose(mesh.cell_centers[..., 0], (i + 0.5) * 0.5, atol=1e-12)
    np.testing.assert_allclose(mesh.cell_centers[..., 1], (j + 0.5) * 0.5 - 5.0, atol=1e-12)
    assert quads_are_simple(mesh.cell_polygons.reshape(-1, 4, 2)).all()
    assert not mesh.overlap_flag


def test_single_cell_mesh():
    spec = GridSpec(dx=1.0, dy=2.0, dt=1.0, along_extent=1.0, cross_extent=2.0, t_max=1.0)
    path = quarter_circle(radius=20.0, n=500)
    mesh = build_curvilinear_mesh(path, spec, 3.0)
    assert mesh.cell_centers.shape[:2] == (1, 1)
    expected = from_path_relative(path, 3.0, PathRelativePoint(0.5, 0.0))
    np.testing.assert_allclose(mesh.cell_centers[0, 0], expected, atol=1e-12)


@pytest.mark.parametrize("radius", [30.0, 50.0, 200.0])
def test_curved_mesh_area_shoelace(radius):
    phi = np.linspace(0.0, 60.0 / radius, 2000)
    path = NominalPath(np.column_stack([radius * np.sin(phi), radius * (1 - np.cos(phi))]))
    mesh = build_curvilinear_mesh(path, GridSpec(), 5.0)
    polys = mesh.cell_polygons.reshape(-1, 4, 2)
    # independent shoelace sum
    x, y = polys[..., 0], polys[..., 1]
    area = 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1))
    assert area.sum() == pytest.approx(300.0, rel=0.05)
    np.testing.assert_allclose(np.abs(polygon_area(polys)), area, rtol=1e-12)


def test_mesh_overrunning_path_raises():
    with pytest.raises(OutOfPathExtentError):
        build_curvilinear_mesh(STRAIGHT, GridSpec(), 80.0)


def test_tight_curve_flags_overlap():
    # radius 3 m is far smaller than the 5 m half width: inner cells fold over
    phi = np.linspace(0.0, 2 * math.pi * 0.9, 3000)
    path = NominalPath(np.column_stack([3.0 * np.sin(phi), 3.0 * (1 - np.cos(phi))]))
    spec = GridSpec(along_extent=10.0)
    mesh = build_curvilinear_mesh(path, spec, 0.0)
    assert mesh.overlap_flag


@given(
    radius=st.floats(20.0, 400.0),
    frac_a=st.floats(0.05, 0.95),
    rel_c=st.floats(-0.5, 0.5),
    turn=st.sampled_from([-1.0, 1.0]),
)
def test_round_trip_property(radius, frac_a, rel_c, turn):
    length = 60.0
    phi = np.linspace(0.0, length / radius, 1200)
    path = NominalPath(np.column_stack([radius * np.sin(phi), turn * radius * (1 - np.cos(phi))]))
    a = frac_a * path.length
    c = rel_c * min(radius, 10.0) * 0.99
    p = from_path_relative(path, 0.0, PathRelativePoint(a, c))
    back = project_to_path(path, 0.0, p)
    q = from_path_relative(path, 0.0, back)
    assert np.hypot(*(q - p)) < 1e-3
