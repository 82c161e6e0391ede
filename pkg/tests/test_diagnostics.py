import numpy as np
import pytest

from willmore.dgcore import l2_project
from willmore.exceptions import ConfigError
from willmore.grid import COPY_TRACE
from willmore.problems.diagnostics import (count_regions, energy, extract_contour, fit_circle,
                                           fitted_radius, hausdorff_distance, is_closed,
                                           isoperimetric_ratio, polygon_area, polygon_perimeter,
                                           sample_grid, summarize)
from willmore.problems.shapes import build_shape
from willmore.problems.studies import radius_history


def _shape_field(make_space, name, n=32):
    space = make_space(2, n, boundary=COPY_TRACE)
    shape = build_shape(name)
    return l2_project(shape.signed_distance, space)


def test_sample_grid_layout(make_space):
    space = make_space(2, 4, degree=1, boundary=COPY_TRACE)
    u = l2_project(lambda x: x[..., 0] + 10.0 * x[..., 1], space)
    grid, coords = sample_grid(u)
    assert grid.shape == (12, 12)
    expected = coords[0][:, None] + 10.0 * coords[1][None, :]
    np.testing.assert_allclose(grid, expected, atol=1e-12)


def test_sample_grid_needs_two_dimensions(make_space):
    with pytest.raises(ConfigError):
        sample_grid(l2_project(lambda x: x[..., 0], make_space(1, 8)))


def test_vertical_line_contour(make_space):
    space = make_space(2, 8, degree=1, boundary=COPY_TRACE)
    u = l2_project(lambda x: x[..., 0] - 1.0, space)
    polylines = extract_contour(u)
    assert len(polylines) == 1
    np.testing.assert_allclose(polylines[0][:, 0], 1.0, atol=1e-12)
    assert not is_closed(polylines[0])


def test_circle_contour(circle_field):
    polylines = extract_contour(circle_field)
    assert len(polylines) == 1
    contour = polylines[0]
    assert is_closed(contour)
    assert abs(fitted_radius(circle_field) - 1.0) < 0.25
    assert 0.99 < isoperimetric_ratio(contour) <= 1.0
    center, _ = fit_circle(contour)
    np.testing.assert_allclose(center, [2.0, 2.0], atol=0.05)


def test_region_counts(make_space):
    assert count_regions(_shape_field(make_space, "two-squares")) == 2
    assert count_regions(_shape_field(make_space, "ellipse")) == 1


def test_annulus_is_one_region_with_two_contours(make_space):
    u = _shape_field(make_space, "circle-in-ellipse")
    assert count_regions(u) == 1
    assert len(extract_contour(u)) == 2


def test_polygon_measures():
    square = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [0.0, 0.0]])
    assert polygon_area(square) == pytest.approx(4.0)
    assert polygon_perimeter(square) == pytest.approx(8.0)
    assert polygon_perimeter(square[:-1]) == pytest.approx(8.0)
    assert isoperimetric_ratio(square) == pytest.approx(np.pi / 4.0)


def test_circle_fit_recovers_exact_circle():
    theta = np.linspace(0.0, 2 * np.pi, 50)
    pts = np.stack([1.0 + 0.7 * np.cos(theta), -2.0 + 0.7 * np.sin(theta)], axis=-1)
    center, radius = fit_circle(pts)
    np.testing.assert_allclose(center, [1.0, -2.0], atol=1e-12)
    assert radius == pytest.approx(0.7)


def test_hausdorff_distance():
    a = [np.array([[0.0, 0.0], [1.0, 0.0]])]
    assert hausdorff_distance(a, a) == 0.0
    b = [np.array([[0.0, 0.1], [1.0, 0.1]]), np.array([[0.5, 0.4]])]
    assert hausdorff_distance(a, b) == pytest.approx(np.hypot(0.5, 0.4))


def test_flat_interface_has_zero_energy(make_space):
    space = make_space(2, 4, boundary=COPY_TRACE)
    u = l2_project(lambda x: x[..., 0] + x[..., 1] - 4.0, space)
    assert energy(u, 0.1) == pytest.approx(0.0, abs=1e-16)


def test_summary_of_a_circle(circle_field):
    summary = summarize(circle_field, 0.1)
    assert summary["contours"] == 1
    assert summary["regions"] == 1
    assert summary["energy"] > 0
    assert 0.99 < summary["isoperimetric_ratio"] <= 1.0


def test_radius_history_of_a_static_snapshot(circle_field):
    history = radius_history([(0.0, circle_field), (0.5, circle_field)])
    assert [t for t, _ in history] == [0.0, 0.5]
    assert all(abs(r - 1.0) < 0.25 for _, r in history)
