"""Axis estimation and CRL line geometry: analytic scenes, rotation/translation
equivariance, and the side/extent identities."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from crlqa import raster
from crlqa.errors import DegenerateGeometryError, IsotropicAxisError, MissingStructureError
from crlqa.geometry import (
    CrlLine,
    Side,
    fit_crl_line,
    horizontal_extent,
    line_angle,
    principal_axis,
    side_of_line,
)


def disk_scene(centers, radius=20, size=(160, 100)):
    arr = np.zeros((size[1], size[0]), dtype=np.uint8)
    ys, xs = np.mgrid[0 : size[1], 0 : size[0]]
    for (cx, cy), lab in centers:
        arr[(xs - cx) ** 2 + (ys - cy) ** 2 <= radius**2] = lab
    return raster.LabelMask(arr)


def ellipse_scene(theta_deg, size=(200, 200)):
    """Two elongated ellipses (axis ratio ~3) along a line at theta_deg."""
    arr = np.zeros((size[1], size[0]), dtype=np.uint8)
    c = (size[0] / 2, size[1] / 2)
    r = math.radians(theta_deg)
    ys, xs = np.mgrid[0 : size[1], 0 : size[0]]
    for off, a, b, lab in ((-38, 34, 12, raster.HEAD), (30, 42, 14, raster.BODY)):
        cx, cy = c[0] + off * math.cos(r), c[1] + off * math.sin(r)
        dx, dy = xs - cx, ys - cy
        u = dx * math.cos(r) + dy * math.sin(r)
        v = -dx * math.sin(r) + dy * math.cos(r)
        arr[(u / a) ** 2 + (v / b) ** 2 <= 1] = lab
    return raster.LabelMask(arr)


finite_coord = st.floats(-1e4, 1e4, allow_nan=False, allow_infinity=False)


def lines():
    return st.tuples(finite_coord, finite_coord, finite_coord, finite_coord).filter(
        lambda t: math.hypot(t[2] - t[0], t[3] - t[1]) > 1e-3
    ).map(lambda t: CrlLine.from_endpoints((t[0], t[1]), (t[2], t[3])))


class TestPrincipalAxis:
    def test_horizontal_segment(self):
        pts = [(x, 5) for x in range(21)]
        centroid, direction = principal_axis(pts)
        assert centroid == (10.0, 5.0)
        assert direction == (1.0, 0.0)

    def test_diagonal_segment(self):
        pts = [(x, x) for x in range(21)]
        _, direction = principal_axis(pts)
        assert direction[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
        assert direction[1] == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    def test_rotated_ellipse_cloud(self):
        rng = np.random.default_rng(11)
        theta = math.radians(30)
        pts = []
        while len(pts) < 200:
            u = rng.uniform(-40, 40)
            v = rng.uniform(-8, 8)
            if (u / 40) ** 2 + (v / 8) ** 2 <= 1:
                pts.append((u * math.cos(theta) - v * math.sin(theta),
                            u * math.sin(theta) + v * math.cos(theta)))
        _, (dx, dy) = principal_axis(np.asarray(pts))
        assert abs(math.degrees(math.atan2(dy, dx)) - 30) < 2

    def test_coincident_pixels_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            principal_axis([(3, 4), (3, 4), (3, 4)])

    def test_single_pixel_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            principal_axis([(3, 4)])

    def test_isotropic_blob(self):
        pts = [(x, y) for x in range(10) for y in range(10)]
        with pytest.raises(IsotropicAxisError):
            principal_axis(pts)

    def test_orientation_convention(self):
        # vertical line: x-component 0, y-component must be positive
        _, direction = principal_axis([(5, y) for y in range(15)])
        assert direction == (0.0, 1.0)

    def test_accepts_a_set(self):
        centroid, _ = principal_axis({(0, 0), (2, 0), (4, 0)})
        assert centroid == (2.0, 0.0)


class TestFitCrlLine:
    def test_horizontal_disks(self):
        mask = disk_scene([((30, 50), raster.HEAD), ((120, 50), raster.BODY)])
        line = fit_crl_line(mask)
        assert abs(line.angle_deg) <= 1
        assert math.hypot(line.crown[0] - 10, line.crown[1] - 50) <= 2
        assert math.hypot(line.rump[0] - 140, line.rump[1] - 50) <= 2

    def test_disks_rotated_45(self):
        def rot(p, c, deg):
            r = math.radians(deg)
            dx, dy = p[0] - c[0], p[1] - c[1]
            return (c[0] + math.cos(r) * dx - math.sin(r) * dy,
                    c[1] + math.sin(r) * dx + math.cos(r) * dy)

        centers = [(rot((30, 50), (75, 75), 45), raster.HEAD),
                   (rot((120, 50), (75, 75), 45), raster.BODY)]
        line = fit_crl_line(disk_scene(centers, size=(170, 170)))
        assert abs(line.angle_deg - 45) <= 2

    def test_missing_body(self):
        mask = disk_scene([((30, 50), raster.HEAD)])
        with pytest.raises(MissingStructureError) as err:
            fit_crl_line(mask)
        assert err.value.structure == "body"

    def test_too_small_head(self):
        arr = np.zeros((60, 60), dtype=np.uint8)
        arr[10:12, 10:12] = raster.HEAD  # 4 px < default 50
        arr[25:45, 20:50] = raster.BODY
        with pytest.raises(MissingStructureError) as err:
            fit_crl_line(raster.LabelMask(arr))
        assert err.value.structure == "head"

    def test_crown_is_on_head_and_rump_on_body(self):
        mask = disk_scene([((30, 50), raster.HEAD), ((120, 50), raster.BODY)])
        line = fit_crl_line(mask)
        cx, cy = int(line.crown[0]), int(line.crown[1])
        rx, ry = int(line.rump[0]), int(line.rump[1])
        assert mask.labels[cy, cx] == raster.HEAD
        assert mask.labels[ry, rx] == raster.BODY

    @pytest.mark.parametrize("dx,dy", [(1, 0), (0, 1), (7, 3), (23, 11)])
    def test_translation_equivariance_is_exact(self, dx, dy):
        base = ellipse_scene(17, size=(200, 200))
        line = fit_crl_line(base)
        h, w = base.labels.shape
        moved = np.zeros((h + 20, w + 40), dtype=np.uint8)
        moved[dy : dy + h, dx : dx + w] = base.labels
        moved_line = fit_crl_line(raster.LabelMask(moved))
        assert moved_line.crown == (line.crown[0] + dx, line.crown[1] + dy)
        assert moved_line.rump == (line.rump[0] + dx, line.rump[1] + dy)
        assert moved_line.angle_deg == line.angle_deg

    @pytest.mark.parametrize("theta", range(-40, 45, 10))
    def test_rotation_recovers_angle_within_2_degrees(self, theta):
        line = fit_crl_line(ellipse_scene(theta))
        assert abs(line.angle_deg - theta) <= 2


class TestLineAngle:
    def test_horizontal(self):
        assert line_angle((0, 0), (100, 0)) == 0.0

    def test_descending_diagonal_is_positive(self):
        assert line_angle((0, 0), (100, 100)) == 45.0

    def test_vertical_and_fold_symmetry(self):
        assert line_angle((0, 0), (0, 100)) == 90.0
        assert line_angle((0, 100), (0, 0)) == 90.0

    @given(a=st.tuples(finite_coord, finite_coord), b=st.tuples(finite_coord, finite_coord))
    @settings(max_examples=100)
    def test_swap_symmetric_and_in_range(self, a, b):
        assume(a != b)
        ang = line_angle(a, b)
        assert -90 < ang <= 90
        assert line_angle(b, a) == pytest.approx(ang, abs=1e-9) or (
            ang == 90 and line_angle(b, a) == 90
        )

    def test_coincident_points(self):
        with pytest.raises(DegenerateGeometryError):
            line_angle((3, 3), (3, 3))


class TestHorizontalExtent:
    def test_simple(self):
        assert horizontal_extent(CrlLine.from_endpoints((10, 50), (110, 80))) == 100.0

    def test_vertical_line(self):
        assert horizontal_extent(CrlLine.from_endpoints((50, 0), (50, 90))) == 0.0

    @given(line=lines())
    @settings(max_examples=100)
    def test_trig_identity(self, line):
        expected = line.length_px * math.cos(math.radians(line.angle_deg))
        assert abs(horizontal_extent(line) - expected) <= 1e-6 * max(1.0, line.length_px)

    @given(line=lines())
    @settings(max_examples=100)
    def test_never_exceeds_length(self, line):
        assert horizontal_extent(line) <= line.length_px + 1e-12


class TestSideOfLine:
    def setup_method(self):
        self.horizontal = CrlLine.from_endpoints((0, 50), (100, 50))

    def test_smaller_y_is_above(self):
        assert side_of_line((30, 20), self.horizontal) is Side.ABOVE

    def test_larger_y_is_below(self):
        assert side_of_line((30, 80), self.horizontal) is Side.BELOW

    def test_midpoint_is_on(self):
        assert side_of_line((50, 50), self.horizontal) is Side.ON

    def test_independent_of_endpoint_order(self):
        flipped = CrlLine.from_endpoints((100, 50), (0, 50))
        assert side_of_line((30, 20), flipped) is Side.ABOVE

    @given(line=lines(), p=st.tuples(finite_coord, finite_coord))
    @settings(max_examples=150)
    def test_reflection_flips_side(self, line, p):
        ax, ay = line.crown
        bx, by = line.rump
        dx, dy = (bx - ax) / line.length_px, (by - ay) / line.length_px
        t = (p[0] - ax) * dx + (p[1] - ay) * dy
        foot = (ax + t * dx, ay + t * dy)
        dist = math.hypot(p[0] - foot[0], p[1] - foot[1])
        assume(dist > 1e-3 * line.length_px)
        mirrored = (2 * foot[0] - p[0], 2 * foot[1] - p[1])
        got, flipped = side_of_line(p, line), side_of_line(mirrored, line)
        assert {got, flipped} == {Side.ABOVE, Side.BELOW}


class TestCrlLineType:
    def test_invariants_hold_for_factory(self):
        line = CrlLine.from_endpoints((1, 2), (4, 6))
        assert line.length_px == 5.0
        folded = line_angle(line.crown, line.rump)
        assert abs(folded - line.angle_deg) <= 1e-9

    def test_inconsistent_angle_rejected(self):
        with pytest.raises(ValueError):
            CrlLine(crown=(0, 0), rump=(10, 0), length_px=10.0, angle_deg=5.0)

    def test_zero_length_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            CrlLine.from_endpoints((3, 3), (3, 3))
