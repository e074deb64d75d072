import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paraconcave.domain import ConvexDomain, boundary_distance, build_grid, contains
from paraconcave.errors import DimensionMismatchError, DomainError, GridTooCoarseError, OutsideDomainError

unit = st.floats(min_value=0.0, max_value=1.0)
lam = st.floats(min_value=0.0, max_value=1.0)
SHAPES = [
    ConvexDomain.interval(-1, 2),
    ConvexDomain.disk((0.5, -0.5), 1.5),
    ConvexDomain.polygon([(0, 0), (3, 0), (0, 2)]),
]


class TestContains:

    def test_interval_midpoint(self):
        assert contains(ConvexDomain.interval(0, 1), 0.5)

    def test_disk_boundary_is_excluded(self):
        assert not contains(ConvexDomain.disk((0, 0), 1), (1.0, 0.0))

    def test_square_center(self):
        assert contains(ConvexDomain.unit_square(), (0.5, 0.5))

    def test_interval_endpoint_is_excluded(self):
        assert not contains(ConvexDomain.interval(0, 1), 1e-13)

    def test_wrong_dimension(self):
        with pytest.raises(DimensionMismatchError):
            contains(ConvexDomain.unit_square(), 0.5)

    @pytest.mark.parametrize("dom", SHAPES, ids=lambda d: d.shape)
    @given(data=st.data())
    @settings(max_examples=100, deadline=None)
    def test_convex_combinations_of_interior_nodes(self, dom, data):
        pts = build_grid(dom, 0.125).interior_points
        i = data.draw(st.integers(0, len(pts) - 1))
        j = data.draw(st.integers(0, len(pts) - 1))
        t = data.draw(lam)
        assert contains(dom, (1 - t) * pts[i] + t * pts[j])


class TestBoundaryDistance:

    def test_interval(self):
        assert boundary_distance(ConvexDomain.interval(0, 1), 0.3) == pytest.approx(0.3)

    def test_disk(self):
        assert boundary_distance(ConvexDomain.disk((0, 0), 2), (1.0, 0.0)) == pytest.approx(1.0)

    def test_square(self):
        assert boundary_distance(ConvexDomain.unit_square(), (0.5, 0.25)) == pytest.approx(0.25)

    def test_boundary_point_is_zero(self):
        assert boundary_distance(ConvexDomain.unit_square(), (1.0, 0.5)) == pytest.approx(0.0, abs=1e-15)

    def test_outside_point(self):
        with pytest.raises(OutsideDomainError):
            boundary_distance(ConvexDomain.interval(0, 1), 1.5)

    @given(unit, unit, unit, unit, lam)
    @settings(max_examples=200, deadline=None)
    def test_distance_is_concave_on_square(self, x0, y0, x1, y1, t):
        dom = ConvexDomain.unit_square()
        mid = ((1 - t) * x0 + t * x1, (1 - t) * y0 + t * y1)
        lhs = boundary_distance(dom, mid)
        rhs = (1 - t) * boundary_distance(dom, (x0, y0)) + t * boundary_distance(dom, (x1, y1))
        assert lhs >= rhs - 1e-12

    @given(unit, unit, unit, unit)
    @settings(max_examples=200, deadline=None)
    def test_distance_is_one_lipschitz_on_square(self, x0, y0, x1, y1):
        dom = ConvexDomain.unit_square()
        gap = abs(boundary_distance(dom, (x0, y0)) - boundary_distance(dom, (x1, y1)))
        assert gap <= np.hypot(x1 - x0, y1 - y0) + 1e-12

    @given(unit, unit, lam)
    @settings(max_examples=200, deadline=None)
    def test_distance_is_concave_and_one_lipschitz_on_interval(self, x0, x1, t):
        dom = ConvexDomain.interval(0, 1)
        d0, d1 = boundary_distance(dom, x0), boundary_distance(dom, x1)
        assert boundary_distance(dom, (1 - t) * x0 + t * x1) >= (1 - t) * d0 + t * d1 - 1e-12
        assert abs(d0 - d1) <= abs(x1 - x0) + 1e-12

    @given(st.floats(0.0, 2 * np.pi), st.floats(0.0, 1.0), st.floats(0.0, 2 * np.pi), st.floats(0.0, 1.0), lam)
    @settings(max_examples=200, deadline=None)
    def test_distance_is_concave_and_one_lipschitz_on_disk(self, phi0, r0, phi1, r1, t):
        dom = ConvexDomain.disk((1.0, -1.0), 2.0)
        z0 = np.array([1.0, -1.0]) + 2.0 * r0 * np.array([np.cos(phi0), np.sin(phi0)])
        z1 = np.array([1.0, -1.0]) + 2.0 * r1 * np.array([np.cos(phi1), np.sin(phi1)])
        d0, d1 = boundary_distance(dom, z0), boundary_distance(dom, z1)
        assert boundary_distance(dom, (1 - t) * z0 + t * z1) >= (1 - t) * d0 + t * d1 - 1e-12
        assert abs(d0 - d1) <= np.linalg.norm(z1 - z0) + 1e-12


class TestDomainConstruction:

    def test_non_convex_polygon(self):
        with pytest.raises(DomainError):
            ConvexDomain.polygon([(0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)])

    def test_degenerate_polygon(self):
        with pytest.raises(DomainError):
            ConvexDomain.polygon([(0, 0), (1, 1), (2, 2)])

    def test_empty_interval(self):
        with pytest.raises(DomainError):
            ConvexDomain.interval(1, 1)

    def test_clockwise_polygon_is_reoriented(self):
        cw = ConvexDomain.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert contains(cw, (0.5, 0.5))
        assert boundary_distance(cw, (0.5, 0.25)) == pytest.approx(0.25)

    def test_inradius(self):
        assert ConvexDomain.unit_square().inradius == pytest.approx(0.5, abs=1e-9)
        assert ConvexDomain.disk((1, 1), 3).inradius == 3.0

    @pytest.mark.parametrize("dom", [
        ConvexDomain.interval(-1, 2),
        ConvexDomain.disk((0.5, -0.5), 1.5),
        ConvexDomain.polygon([(0, 0), (3, 0), (0, 2)]),
    ])
    def test_dict_roundtrip(self, dom):
        assert ConvexDomain.from_dict(dom.to_dict()) == dom

    def test_unknown_shape(self):
        with pytest.raises(DomainError):
            ConvexDomain.from_dict({"shape": "ellipse"})

    def test_missing_key(self):
        with pytest.raises(DomainError):
            ConvexDomain.from_dict({"shape": "disk", "radius": 1})


class TestBuildGrid:

    def test_interval_quarter(self):
        grid = build_grid(ConvexDomain.interval(0, 1), 0.25)
        np.testing.assert_allclose(grid.nodes[:, 0], [0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(grid.interior_points[:, 0], [0.25, 0.5, 0.75])

    def test_unit_square_half(self):
        grid = build_grid(ConvexDomain.unit_square(), 0.5)
        assert grid.n_interior == 1
        np.testing.assert_allclose(grid.interior_points, [[0.5, 0.5]])
        closure = grid.lattice_points[grid.closure.ravel()]
        assert len(closure) == 9

    def test_disk_interior_nodes_are_strictly_inside(self):
        grid = build_grid(ConvexDomain.disk((0, 0), 1), 0.5)
        pts = grid.interior_points
        assert np.all(np.linalg.norm(pts, axis=1) < 1.0)
        expected = {(x, y) for x in (-0.5, 0.0, 0.5) for y in (-0.5, 0.0, 0.5)}
        assert {tuple(np.round(p, 12)) for p in pts} == expected

    def test_interior_stencils_stay_active(self):
        grid = build_grid(ConvexDomain.disk((0, 0), 1), 0.1)
        for axis in range(2):
            for shift in (-1, 1):
                assert np.all(np.roll(grid.active, shift, axis=axis)[grid.interior])

    def test_too_coarse(self):
        with pytest.raises(GridTooCoarseError):
            build_grid(ConvexDomain.interval(0, 1), 0.75)

    def test_nonpositive_spacing(self):
        with pytest.raises(GridTooCoarseError):
            build_grid(ConvexDomain.interval(0, 1), 0.0)

    def test_interval_spacing_is_adjusted(self):
        grid = build_grid(ConvexDomain.interval(0, 1), 0.3)
        assert grid.h == pytest.approx(1 / 3)
        assert grid.nodes[-1, 0] == 1.0

    def test_node_distance(self):
        grid = build_grid(ConvexDomain.interval(0, 1), 0.25)
        np.testing.assert_allclose(grid.node_distance, [0, 0.25, 0.5, 0.25, 0])
