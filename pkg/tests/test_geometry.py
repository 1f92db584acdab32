import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voronoi_blocks import (
    DuplicatePoints,
    EmptyInput,
    InputError,
    OutOfBounds,
    build_tessellation,
    build_tessellation_1d,
    make_point_set,
    validate_quantization,
)
from voronoi_blocks.geometry import auto_bounds, clip_polygon, polygon_area


def brute_owner(points, probes):
    d = ((probes[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    return d.argmin(axis=1)


def test_1d_midpoints(tess):
    cc = tess([1.0, 3.0, 7.0], [(0.0, 10.0)], quantum=1.0)
    assert cc.volumes.tolist() == [2.0, 3.0, 5.0]
    assert [c.vertices.tolist() for c in cc.cells] == [[0, 2], [2, 5], [5, 10]]
    assert cc.edges == [(0, 1), (1, 2)]


def test_1d_unsorted_input(tess):
    cc = tess([7.0, 1.0, 3.0], [(0.0, 10.0)], quantum=1.0)
    assert cc.volumes.tolist() == [5.0, 2.0, 3.0]
    assert cc.edges == [(0, 2), (1, 2)]


def test_1d_single_point(tess):
    cc = tess([4.0], [(0.0, 10.0)], quantum=1.0)
    assert cc.volumes.tolist() == [10.0]
    assert cc.edges == []


def test_1d_fractional_quantum(tess):
    cc = tess([0.5, 0.7], [(0.0, 1.0)], quantum=0.1)
    # independent arithmetic: midpoint 0.6, lengths 0.6 and 0.4
    lengths = np.diff([0.0, (0.5 + 0.7) / 2, 1.0])
    assert cc.volumes == pytest.approx(lengths / 0.1, rel=1e-12)
    assert cc.volumes == pytest.approx([6.0, 4.0], rel=1e-12)


def test_2d_single_point(tess):
    cc = tess([[0.3, 0.8]], [(0, 1), (0, 1)], quantum=(0.01, 0.01))
    assert cc.volumes[0] == pytest.approx(10000.0, rel=1e-12)
    assert cc.edges == []


def test_2d_two_points(tess):
    cc = tess([[0.25, 0.5], [0.75, 0.5]], [(0, 1), (0, 1)], quantum=1.0)
    assert cc.volumes == pytest.approx([0.5, 0.5], abs=1e-12)
    assert cc.edges == [(0, 1)]
    xs = sorted({round(x, 12) for x in cc.cells[0].vertices[:, 0]})
    assert xs == [0.0, 0.5]


def test_2d_four_squares_by_sampling(tess):
    pts = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
    cc = tess(pts, [(0, 1), (0, 1)], quantum=0.01)
    assert cc.volumes == pytest.approx([2500.0] * 4, rel=1e-12)
    assert cc.edges == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    # areas from a dense nearest-point grid
    g = (np.arange(400) + 0.5) / 400
    xx, yy = np.meshgrid(g, g)
    probes = np.column_stack([xx.ravel(), yy.ravel()])
    counts = np.bincount(brute_owner(pts, probes), minlength=4)
    assert counts / len(probes) == pytest.approx([0.25] * 4, abs=1e-12)
    for v in cc.cells[0].vertices:
        if np.allclose(v, [0.5, 0.5]):
            break
    else:
        pytest.fail("center vertex missing")


def test_2d_edge_mode_drops_corner_contacts(tess):
    pts = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
    cc = tess(pts, [(0, 1), (0, 1)], quantum=0.01, adjacency="edge")
    assert cc.edges == [(0, 1), (0, 2), (1, 3), (2, 3)]


def test_polygons_ccw_and_convex(tess, rng):
    cc = tess(rng.random((60, 2)), [(0, 1), (0, 1)])
    for c in cc.cells:
        v = c.vertices
        assert polygon_area(v) > 0
        e1 = np.roll(v, -1, axis=0) - v
        e2 = np.roll(e1, -1, axis=0)
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        assert np.all(cross >= -1e-12)


def test_validate_quantization_pass(tess):
    assert validate_quantization(tess([1.0, 3.0, 7.0], [(0.0, 10.0)], quantum=1.0)).passed


def test_validate_quantization_fail_with_suggestion(tess):
    cc = tess([1.0, 3.0], [(0.0, 10.0)], quantum=5.0)
    rep = validate_quantization(cc)
    assert not rep.passed
    assert [i for i, _ in rep.failing] == [0]
    assert rep.failing[0][1] == pytest.approx(0.4)
    assert cc.volumes[1] == pytest.approx(1.6)
    assert rep.suggested_quantum == pytest.approx((2.0,))


def test_auto_quantum_smallest_cell_is_one(tess, rng):
    cc = tess(rng.random((50, 2)), [(0, 2), (0, 1)])
    assert cc.volumes.min() == 1.0
    assert cc.quantum[0] == pytest.approx(2 * cc.quantum[1])
    assert validate_quantization(cc).passed


def test_duplicates_rejected():
    with pytest.raises(DuplicatePoints) as info:
        make_point_set([[0.1, 0.2], [0.5, 0.5], [0.1, 0.2]], bounds=[(0, 1), (0, 1)])
    assert info.value.indices == (0, 2)


def test_duplicates_jittered():
    ps = make_point_set([0.3, 0.3, 0.3, 0.8], bounds=[(0, 1)], quantum=0.01,
                        duplicates="jitter", random_state=0)
    assert len(np.unique(ps.points[:, 0])) == 4
    assert np.all(np.abs(ps.points[:3, 0] - 0.3) <= 0.001 + 1e-15)
    again = make_point_set([0.3, 0.3, 0.3, 0.8], bounds=[(0, 1)], quantum=0.01,
                           duplicates="jitter", random_state=0)
    assert np.array_equal(ps.points, again.points)


def test_builder_rejects_duplicates_directly():
    from voronoi_blocks import PointSet
    ps = PointSet(points=np.array([[1.0], [1.0]]), bounds=np.array([[0.0, 2.0]]), quantum=(1.0,))
    with pytest.raises(DuplicatePoints):
        build_tessellation_1d(ps)


@pytest.mark.parametrize("pts", [[], np.empty((0, 2))])
def test_empty_input(pts):
    with pytest.raises(EmptyInput):
        make_point_set(pts)


def test_out_of_bounds_point():
    with pytest.raises(OutOfBounds):
        make_point_set([0.5, 1.5], bounds=[(0, 1)])


def test_bad_inputs():
    with pytest.raises(InputError):
        make_point_set(np.zeros((3, 3)) + np.arange(3)[:, None])
    with pytest.raises(InputError):
        make_point_set([0.1, np.nan])
    with pytest.raises(InputError):
        make_point_set([0.1, 0.2], bounds=[(1, 0)])
    with pytest.raises(InputError):
        make_point_set([0.1, 0.2], quantum=-1.0)


def test_auto_bounds_padding():
    b = auto_bounds(np.array([[0.0, 5.0], [10.0, 5.0]]), expand=0.05)
    assert b[0].tolist() == [-0.5, 10.5]
    assert b[1, 0] < 5.0 < b[1, 1]


def test_collinear_points_allowed(tess):
    pts = np.column_stack([np.linspace(0.1, 0.9, 7), np.full(7, 0.5)])
    cc = tess(pts, [(0, 1), (0, 1)], quantum=0.001)
    assert cc.volumes.sum() == pytest.approx(1e6, rel=1e-9)
    assert cc.edges == [(i, i + 1) for i in range(6)]


def test_delaunay_matches_halfplane(tess, rng):
    pts = rng.random((300, 2)) * [3.0, 1.0]
    a = tess(pts, [(0, 3), (0, 1)], method="delaunay")
    b = tess(pts, [(0, 3), (0, 1)], method="halfplane")
    assert a.volumes == pytest.approx(b.volumes, rel=1e-9)
    assert a.edges == b.edges


def test_locate_and_contains(tess, rng):
    pts = rng.random((80, 2))
    cc = tess(pts, [(0, 1), (0, 1)])
    probes = rng.random((2000, 2))
    owner = cc.locate(probes)
    assert np.array_equal(owner, brute_owner(pts, probes))
    inside = np.array([cc.contains(o, q)[0] for o, q in zip(owner, probes)])
    assert inside.mean() >= 0.999
    with pytest.raises(OutOfBounds):
        cc.locate([[1.5, 0.5]])


def test_cells_json_dump(tess):
    d = tess([1.0, 3.0, 7.0], [(0.0, 10.0)], quantum=1.0).to_dict()
    assert [c["neighbors"] for c in d["cells"]] == [[1], [0, 2], [1]]
    assert d["cells"][1]["vertices"] == [2.0, 5.0]


# points on a 1e-3 lattice, as recorded data would be
coords = st.lists(st.integers(10, 990), min_size=1, max_size=30, unique=True).map(
    lambda xs: [x * 1e-3 for x in xs])


@given(coords, st.floats(-100, 100, allow_nan=False))
@settings(max_examples=60, deadline=None)
def test_1d_translation_invariance(xs, shift):
    a = build_tessellation(make_point_set(xs, bounds=[(0, 1)], quantum=1e-3))
    b = build_tessellation(make_point_set(np.array(xs) + shift, bounds=[(shift, 1 + shift)], quantum=1e-3))
    assert b.volumes == pytest.approx(a.volumes, rel=1e-6, abs=1e-6)
    assert a.edges == b.edges


pairs = st.lists(st.tuples(st.integers(0, 1000), st.integers(0, 2000)), min_size=1, max_size=40,
                 unique=True).map(lambda ps: [(x * 1e-3, y * 1e-3) for x, y in ps])


@given(pairs)
@settings(max_examples=60, deadline=None)
def test_2d_axis_swap_and_conservation(pts):
    pts = np.array(pts)
    a = build_tessellation(make_point_set(pts, bounds=[(0, 1), (0, 2)], quantum=0.01))
    b = build_tessellation(make_point_set(pts[:, ::-1], bounds=[(0, 2), (0, 1)], quantum=0.01))
    assert b.volumes == pytest.approx(a.volumes, rel=1e-9, abs=1e-9)
    assert a.volumes.sum() == pytest.approx(a.total_volume_quanta, rel=1e-9)
    assert np.all(a.volumes > 0)
    for i, c in enumerate(a.cells):
        assert i not in c.neighbors
        for j in c.neighbors:
            assert i in a.cells[j].neighbors


def test_zero_volume_cell_with_auto_quantum():
    from voronoi_blocks import QuantizationError
    with pytest.raises(QuantizationError):
        build_tessellation(make_point_set([[0.0, 0.0], [0.0, 1e-60]], bounds=[(0, 1), (0, 2)]))


def test_clip_polygon_half_square():
    square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    half = clip_polygon(square, (1.0, 0.0), 0.5)
    assert polygon_area(half) == pytest.approx(0.5)
    assert clip_polygon(square, (1.0, 0.0), -1.0) == []
    assert clip_polygon(square, (1.0, 1.0), 5.0) == square
