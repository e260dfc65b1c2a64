import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grushin_harnack import geometry as geo

coord = st.floats(-2.0, 2.0, allow_nan=False)
point = st.tuples(coord, coord)
radius = st.floats(0.05, 1.5)
scale = st.floats(0.1, 10.0)


def test_dtilde_closed_forms():
    assert geo.dtilde((0.0, 0.0), (0.0, 1.0)) == 2.0
    assert geo.dtilde((1.0, 0.0), (1.0, 1.0)) == pytest.approx(math.sqrt(6) - math.sqrt(2))
    assert geo.dtilde((0.0, 0.0), (1.0, 1.0)) == pytest.approx(math.sqrt(5))
    assert geo.dtilde((0.3, -0.7), (0.3, -0.7)) == 0.0


@given(point, point)
def test_dtilde_symmetric_nonnegative(x, y):
    d = geo.dtilde(x, y)
    assert d >= 0
    assert d == pytest.approx(geo.dtilde(y, x), abs=1e-14)


@given(point, point, scale)
def test_kernels_are_homogeneous_under_dilation(x, y, t):
    dx, dy = geo.dilate(t, x), geo.dilate(t, y)
    for k in (geo.dtilde, geo.rho, geo.sigma):
        assert k(dx, dy) == pytest.approx(t * k(x, y), rel=1e-9, abs=1e-12)
    assert geo.box_gauge(dx, dy) == pytest.approx(t * geo.box_gauge(x, y), rel=1e-9, abs=1e-12)


@given(point, point)
def test_sigma4_splits_into_convex_part_plus_x2_term(x, y):
    a = (x[0] - y[0]) ** 2 * (x[0] ** 2 + 2 * x[0] * y[0] + 3 * y[0] ** 2)
    assert a >= -1e-12
    assert geo.sigma4(x, y) == pytest.approx(a + 4 * (x[1] - y[1]) ** 2, abs=1e-12)


def test_dilation_rejects_nonpositive_factor():
    with pytest.raises(geo.InvalidParameterError):
        geo.dilate(0.0, (1.0, 1.0))


def test_level_functions():
    y = (2.0, 0.0)
    x = (2.5, 0.3)
    r = 1.0
    assert geo.level_g(r, x, y) == pytest.approx(geo.rho4(x, y) ** 0.5 / 2.0)
    assert geo.level_h(r, x, y) == pytest.approx(geo.sigma4(x, y) ** 0.5 / 2.0)
    assert geo.level_g(r, (-1.0, 0.0), y) == math.inf
    # overlap x1*y1 = 0: finite branch
    assert math.isfinite(geo.level_g(r, (0.0, 0.0), y))
    near = (0.2, 0.0)
    assert geo.level_g(r, x, near) == pytest.approx(geo.rho(x, near))
    assert geo.level_h(r, x, near) == pytest.approx(geo.sigma(x, near))
    with pytest.raises(geo.InvalidParameterError):
        geo.level_h(0.0, x, y)


def test_region_descriptor_validation():
    with pytest.raises(geo.InvalidParameterError):
        geo.Box((0, 0), 0.0)
    with pytest.raises(geo.InvalidParameterError):
        geo.RingH((0, 0), 1.0, 1.0)
    with pytest.raises(geo.InvalidParameterError):
        geo.RegionDescriptor("Disk", (0, 0), 1.0)
    assert geo.RingH((0, 0), 1.0, 3.0).scale == 3.0


def test_box_measure_and_diameter():
    for c, r in [((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0), ((-0.5, 2.0), 0.3)]:
        est = geo.region_measure(geo.Box(c, r))
        assert est.value == pytest.approx(geo.box_area(c, r), rel=1e-3)
        assert abs(est.value - geo.box_area(c, r)) <= est.error_bound + 1e-12
    assert geo.box_area((1.0, 0.0), 1.0) == 8.0
    assert geo.region_diameter(geo.Box((0, 0), 1.0)).value == pytest.approx(2 * math.sqrt(2))
    assert geo.region_diameter(geo.Box((1, 0), 1.0)).value == pytest.approx(math.sqrt(20))
    with pytest.raises(geo.InvalidParameterError):
        geo.region_measure(geo.Box((0, 0), 1.0), resolution=10)


def test_measures_scale_with_homogeneous_dimension():
    for kind in ("BTilde", "H", "G"):
        m1 = geo.region_measure(geo.RegionDescriptor(kind, (0.0, 0.0), 0.5)).value
        m2 = geo.region_measure(geo.RegionDescriptor(kind, (0.0, 0.0), 1.0)).value
        assert m2 / m1 == pytest.approx(8.0, rel=2e-2)


def _samples_in_bbox(region, n=400, seed=0):
    rng = np.random.default_rng(seed)
    a, b, c, d = geo.bounding_box(region)
    pad1, pad2 = 0.5 * (b - a), 0.5 * (d - c)
    return np.column_stack([rng.uniform(a - pad1, b + pad1, n), rng.uniform(c - pad2, d + pad2, n)])


@given(point, radius)
def test_proven_box_bounds(y, r):
    bt = geo.BTilde(y, r)
    pts = _samples_in_bbox(bt)
    assert np.all(geo.box_gauge(y, pts[geo.contains(bt, pts)]) < r + 1e-12)
    for kind in ("G", "H"):
        reg = geo.RegionDescriptor(kind, y, r)
        pts = _samples_in_bbox(reg)
        inside = pts[geo.contains(reg, pts)]
        assert np.all(geo.box_gauge(y, inside) < 3 * r + 1e-12)
        if abs(y[0]) >= r and kind == "G":
            assert np.all(geo.box_gauge(y, inside) < r + 1e-12)


@given(point, radius, st.integers(0, 2**16))
def test_h_sets_are_convex(y, r, seed):
    # midpoints of boundary points stay in the closed sublevel set
    bs = geo.boundary_samples(geo.H(y, r), 128).points
    rng = np.random.default_rng(seed)
    i, j = rng.integers(0, len(bs), size=(2, 200))
    t = rng.uniform(size=(200, 1))
    mix = t * bs[i] + (1 - t) * bs[j]
    assert np.all(geo.level_h(r, mix, y) <= r * (1 + 1e-9))


def test_ring_membership():
    ring = geo.RingH((0.5, 0.0), 0.3, 0.9)
    assert not geo.contains(ring, (0.5, 0.0))
    bs = geo.boundary_samples(geo.H((0.5, 0.0), 0.6)).points
    assert np.all(geo.contains(ring, bs))


def test_boundary_samples_lie_on_level_sets():
    y, r = (0.7, -0.2), 0.4
    bs = geo.boundary_samples(geo.H(y, r))
    assert bs.star_shaped
    np.testing.assert_allclose(geo.level_h(r, bs.points, y), r, rtol=1e-12)
    bb = geo.boundary_samples(geo.BTilde(y, r)).points
    np.testing.assert_allclose(geo.dtilde(y, bb), r, rtol=1e-12)


def test_structure_constants_small_sample():
    rng = np.random.default_rng(0)
    centers = rng.uniform(-2, 2, size=(8, 2))
    radii = rng.uniform(0.05, 1.0, size=8)
    for kind in ("BTilde", "G", "H"):
        rep = geo.structure_constant(kind, centers, radii)
        assert 1.0 < rep.constant <= 16.0
        assert rep.outer_constant <= 3.0 * (1 + 1e-6)
        assert len(rep.witnesses) == 2
        assert rep.to_dict()["outer_kind"] == kind
    cc = geo.structure_constant("CC", centers, radii)
    assert cc.proxy is not None and cc.outer_kind == "BTilde"
    with pytest.raises(geo.InvalidParameterError):
        geo.structure_constant("Q", centers, radii)
    with pytest.raises(geo.InvalidParameterError):
        geo.structure_constant("H", centers, radii[:3])


def test_g_outer_bound_without_star_shape():
    # star-shapedness of G about y is only reported; the box bounds must hold regardless
    rep = geo.structure_constant("G", [(0.5, 0.0)], [1.0])
    assert rep.outer_constant <= 3.0


def test_dump_region_csv(tmp_path):
    p = tmp_path / "h.csv"
    geo.dump_region_csv(geo.H((0.0, 0.0), 1.0), p, n=60)
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,inside"
    assert len(lines) == 3601
    assert {ln.rsplit(",", 1)[1] for ln in lines[1:]} == {"0", "1"}


def test_euclidean_diameter_hull():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    pts = np.column_stack([np.cos(t), np.sin(t)])
    assert geo.euclidean_diameter(pts) == pytest.approx(2.0, rel=1e-3)
    assert geo.euclidean_diameter(pts[:1]) == 0.0
