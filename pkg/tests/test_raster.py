import math

import numpy as np
import pytest

from cellseek.geometry import Ellipse
from cellseek.raster import EmptyPerimeter, PerimeterSet, midpoint_sign, rasterize


def brute_perimeter(r_max: int, r_min: int) -> set[tuple[int, int]]:
    """Independent oracle: exhaustively mark every pixel whose center lies
    within half a pixel of the implicit curve along the dominant gradient
    direction, in exact integer arithmetic.  No walking, no increments."""
    rx2, ry2 = r_max * r_max, r_min * r_min

    def f4_col(x: int, y: int) -> int:
        # 4 * f(x, y - 1/2) with f = ry^2 x^2 + rx^2 y^2 - rx^2 ry^2
        return 4 * ry2 * x * x + rx2 * (2 * y - 1) ** 2 - 4 * rx2 * ry2

    def f4_row(x: int, y: int) -> int:
        # 4 * f(x - 1/2, y)
        return ry2 * (2 * x - 1) ** 2 + 4 * rx2 * y * y - 4 * rx2 * ry2

    pts = set()
    for x in range(-r_max - 1, r_max + 2):
        for y in range(-r_min - 1, r_min + 2):
            ax, ay = abs(x), abs(y)
            if rx2 * ay >= ry2 * ax:  # vertical decision pixel
                ok = f4_col(ax, ay) < 0 <= f4_col(ax, ay + 1)
            else:  # horizontal decision pixel
                ok = f4_row(ax, ay) <= 0 < f4_row(ax + 1, ay)
            if ok:
                pts.add((x, y))
    return pts


def raster_set(e: Ellipse, frame=(512, 512)) -> set[tuple[int, int]]:
    return {(int(x), int(y)) for x, y in rasterize(e, frame).points}


def test_circle_r5_contains_axis_extremes():
    pts = raster_set(Ellipse(10.0, 10.0, 5.0, 5.0, 0.0), frame=(32, 32))
    assert {(15, 10), (5, 10), (10, 15), (10, 5)} <= pts


def test_circle_rotation_invariance():
    base = raster_set(Ellipse(40.0, 40.0, 9.0, 9.0, 0.0))
    for theta in (0.3, -1.2, math.pi / 3):
        assert raster_set(Ellipse(40.0, 40.0, 9.0, 9.0, theta)) == base


def test_matches_bruteforce_6_by_3():
    e = Ellipse(40.0, 40.0, 6.0, 3.0, 0.0)
    got = {(x - 40, y - 40) for x, y in raster_set(e)}
    assert got == brute_perimeter(6, 3)


@pytest.mark.parametrize("r_max", [1, 2, 3, 5, 8, 13, 21, 30])
def test_matches_bruteforce_across_aspects(r_max):
    for r_min in range(1, r_max + 1):
        e = Ellipse(64.0, 64.0, float(r_max), float(r_min), 0.0)
        got = {(x - 64, y - 64) for x, y in raster_set(e, frame=(128, 128))}
        assert got == brute_perimeter(r_max, r_min), (r_max, r_min)


def test_four_way_symmetry_integer_center():
    e = Ellipse(50.0, 60.0, 11.0, 4.0, 0.0)
    pts = raster_set(e)
    assert {(100 - x, y) for x, y in pts} == pts
    assert {(x, 120 - y) for x, y in pts} == pts


def test_clipping_to_frame():
    e = Ellipse(2.0, 2.0, 6.0, 6.0, 0.0)
    pts = rasterize(e, (10, 10)).points
    assert ((pts[:, 0] >= 0) & (pts[:, 0] < 10)).all()
    assert ((pts[:, 1] >= 0) & (pts[:, 1] < 10)).all()
    assert len(pts) > 0


def test_entirely_outside_frame_raises():
    with pytest.raises(EmptyPerimeter):
        rasterize(Ellipse(500.0, 500.0, 5.0, 4.0, 0.0), (32, 32))


def test_points_unique():
    e = Ellipse(30.0, 30.0, 14.5, 7.25, 0.9)
    pts = rasterize(e, (64, 64)).points
    assert len({(int(x), int(y)) for x, y in pts}) == len(pts)


def test_count_grows_with_circle_radius():
    counts = [len(rasterize(Ellipse(128.0, 128.0, float(r), float(r), 0.0), (256, 256))) for r in range(1, 40)]
    assert all(b > a for a, b in zip(counts, counts[1:]))


def test_subpixel_bound_along_decision_axis():
    # every canonical (theta=0) point is within half a pixel of the true curve
    # along its decision axis
    for r_max, r_min in [(9, 4), (17, 17), (25, 6)]:
        e = Ellipse(100.0, 100.0, float(r_max), float(r_min), 0.0)
        for x, y in raster_set(e, frame=(256, 256)):
            cx, cy = x - 100, y - 100
            if r_max * r_max * abs(cy) >= r_min * r_min * abs(cx):
                true_y = r_min * math.sqrt(max(0.0, 1.0 - (cx / r_max) ** 2))
                assert abs(abs(cy) - true_y) <= 0.5 + 1e-9
            else:
                true_x = r_max * math.sqrt(max(0.0, 1.0 - (cy / r_min) ** 2))
                assert abs(abs(cx) - true_x) <= 0.5 + 1e-9


def test_midpoint_sign_contract():
    e = Ellipse(0.0, 0.0, 7.0, 4.0, 0.0)
    assert midpoint_sign(e, 0.0, 0.0) == -1
    assert midpoint_sign(e, 7.0, 0.0) == 0
    assert midpoint_sign(e, 8.0, 0.0) == 1
    assert midpoint_sign(e, 0.0, 4.0) == 0
    assert midpoint_sign(e, 0.0, 4.5) == 1


def test_real_axes_handled():
    e = Ellipse(40.0, 40.0, 10.7, 5.3, 0.0)
    pts = raster_set(e)
    assert (51, 40) in pts  # round(40 + 10.7) = 51 extreme
    assert len(pts) > 30


def test_fractional_center_translation():
    pts = raster_set(Ellipse(40.5, 40.0, 5.0, 5.0, 0.0))
    # extreme x: 40.5 + 5 = 45.5 rounds away from zero to 46
    assert (46, 40) in pts
