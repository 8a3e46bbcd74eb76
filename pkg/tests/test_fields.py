"""Grid construction, masks, nodal fields, and dump round trips."""

import numpy as np
import pytest

from nlap.fields import (Disk, Field, Grid, Interval, Rect, build_grid,
                         read_field, region_codes, write_field)


class TestBuildGrid:
    """Box layout and node classification."""

    def test_unit_interval_example(self):
        """(0,1) at h=1/64, delta=0.1: 64 domain nodes, box covering
        (-0.3, 1.3), cell-centered coordinates."""
        g = build_grid(Interval(0.0, 1.0), 1.0 / 64, 0.1)
        assert g.interior_count == 64
        lo = g.origin[0]
        hi = g.origin[0] + g.shape[0] * g.h
        assert lo <= -0.3 and hi >= 1.3
        x = g.axes()[0]
        inside = x[g.domain_mask]
        np.testing.assert_allclose(inside[0], 0.5 / 64, rtol=1e-14)
        np.testing.assert_allclose(inside[-1], 1.0 - 0.5 / 64, rtol=1e-14)

    def test_masks_partition(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 32, 0.1)
        total = (g.domain_mask.astype(int) + g.collar_mask.astype(int)
                 + g.exterior_mask.astype(int))
        assert np.all(total == 1)

    def test_collar_width(self):
        """Collar nodes extend at least 2*delta beyond the domain."""
        g = build_grid(Interval(0.0, 1.0), 1.0 / 64, 0.1)
        x = g.axes()[0]
        collar = x[g.collar_mask]
        assert collar.min() < -0.2 + g.h
        assert collar.max() > 1.2 - g.h

    def test_square_collar_on_all_sides(self):
        g = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), 1.0 / 32, 0.125)
        pts = g.points()
        cm = g.collar_mask
        for c, sign in ((0, -1), (0, 1), (1, -1), (1, 1)):
            side = pts[..., c] * sign > (0.0 if sign < 0 else 1.0) - \
                (1.0 if sign < 0 else 0.0)
            beyond = (pts[..., c] < 0.0) if sign < 0 else (pts[..., c] > 1.0)
            assert np.any(cm & beyond), f"no collar past side {c}/{sign}"

    def test_disk_masks(self):
        g = build_grid(Disk((0.0, 0.0), 0.5), 1.0 / 32, 0.125)
        pts = g.points()
        r = np.hypot(pts[..., 0], pts[..., 1])
        assert np.all(r[g.domain_mask] < 0.5)
        assert np.all(r[g.collar_mask] >= 0.5 - 1e-14)
        assert np.all(r[g.collar_mask] < 0.75)
        area = g.interior_count * g.h ** 2
        np.testing.assert_allclose(area, np.pi * 0.25, rtol=2e-2)

    def test_shapes_are_five_smooth(self):
        g = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), 1.0 / 32, 0.125)
        for n in g.shape:
            m = n
            for p in (2, 3, 5):
                while m % p == 0:
                    m //= p
            assert m == 1

    def test_padding_at_least_quarter_extent(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 64, 0.01)
        assert g.pad >= 0.25 - 1e-12

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            build_grid(Interval(0.0, 1.0), 1.0 / 64, 0.0)
        with pytest.raises(ValueError):
            build_grid(Interval(0.0, 1.0), -0.1, 0.1)
        with pytest.raises(ValueError):
            build_grid(Interval(0.0, 1.0), 2.0, 0.1)
        with pytest.raises(ValueError):
            build_grid(Interval(1.0, 1.0), 0.1, 0.1)

    def test_node_cap(self):
        with pytest.raises(ValueError):
            build_grid(Interval(0.0, 1.0), 1e-7, 0.1)

    def test_valid_mask_shrinks(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 64, 0.1)
        small = g.valid_mask(0.05)
        large = g.valid_mask(0.3)
        assert np.count_nonzero(large) < np.count_nonzero(small)
        assert np.all(small[large])


class TestField:
    def test_shape_validation(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 32, 0.1)
        with pytest.raises(ValueError):
            Field(g, np.zeros(g.shape[0] + 1))
        vec = Field.zeros(g, vector=True)
        assert vec.is_vector and vec.values.shape == g.shape + (1,)

    def test_from_function(self):
        g = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), 1.0 / 16, 0.2)
        f = Field.from_function(g, lambda x, y: x + 10.0 * y)
        pts = g.points()
        np.testing.assert_allclose(f.values, pts[..., 0] + 10.0 * pts[..., 1],
                                   rtol=1e-14)

    def test_dirichlet_admissible(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 32, 0.1)
        f = Field.zeros(g)
        f.values[g.domain_mask] = 1.0
        assert f.dirichlet_admissible()
        f.values[g.collar_mask] = 1e-9
        assert not f.dirichlet_admissible()


class TestFieldDumps:
    """Binary and text serialization with the region masks alongside."""

    @pytest.fixture()
    def example(self):
        g = build_grid(Interval(0.0, 1.0), 1.0 / 16, 0.2)
        rng = np.random.default_rng(11)
        return Field(g, rng.normal(size=g.shape))

    def test_binary_roundtrip_exact(self, example, tmp_path):
        p = tmp_path / "f.nlf"
        write_field(example, p, fmt="binary")
        values, header = read_field(p)
        assert np.array_equal(values, example.values)
        assert header["dim"] == 1 and header["kind"] == "scalar"
        assert header["shape"] == example.grid.shape
        np.testing.assert_allclose(header["h"], example.grid.h, rtol=0)
        np.testing.assert_allclose(header["origin"], example.grid.origin, rtol=0)
        assert np.array_equal(header["regions"], region_codes(example.grid))

    def test_text_roundtrip(self, example, tmp_path):
        p = tmp_path / "f.txt"
        write_field(example, p, fmt="text")
        values, header = read_field(p)
        np.testing.assert_allclose(values, example.values, rtol=1e-15)
        assert header["delta"] == example.grid.delta
        assert np.array_equal(header["regions"], region_codes(example.grid))

    def test_vector_roundtrip(self, tmp_path):
        g = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), 1.0 / 8, 0.25)
        rng = np.random.default_rng(5)
        f = Field(g, rng.normal(size=g.shape + (2,)))
        for fmt in ("binary", "text"):
            p = tmp_path / f"v.{fmt}"
            write_field(f, p, fmt=fmt)
            values, header = read_field(p)
            assert header["kind"] == "vector"
            np.testing.assert_allclose(values, f.values, rtol=1e-15)

    def test_unknown_format(self, example, tmp_path):
        with pytest.raises(ValueError):
            write_field(example, tmp_path / "f.x", fmt="json")

    def test_region_codes(self, example):
        codes = region_codes(example.grid)
        assert set(np.unique(codes)) == {0, 1, 2}
        assert np.all((codes == 0) == example.grid.domain_mask)
