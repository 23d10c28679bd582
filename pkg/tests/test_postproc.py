"""Heatmap-to-polygon post-processing: normalization, percentile clipping
against a sort oracle, contour tracing against a BFS labeling oracle, chain
compression, polygonization, blade-mask filtering, and cross-tile merging.
"""

import numpy as np
import pytest
from conftest import bfs_label_count, ellipse_blob

from hairline.core import (
    FRAME_IMAGE,
    DetectionProposal,
    Polygon,
    Tile,
    rasterize_polygon,
)
from hairline.errors import ContractError
from hairline.postproc import (
    BitMask,
    Heatmap,
    PostprocConfig,
    binarize,
    clip_percentile,
    compress_chain,
    filter_by_mask,
    mask_overlap_ratio,
    merge_cross_tile,
    nearest_rank_percentile,
    normalize_heatmap,
    polygonize,
    trace_outer_contours,
)


def sort_oracle_clip(arr: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Independent clip_percentile: sort a copy, index the nearest rank."""
    flat = np.sort(arr.ravel())
    n = flat.size

    def pct(q):
        rank = int(np.ceil(q / 100.0 * n))
        return flat[max(rank - 1, 0)]

    p_lo, p_hi = pct(lo), pct(hi)
    if p_hi == p_lo:
        return np.zeros_like(arr)
    return (np.clip(arr, p_lo, p_hi) - p_lo) / (p_hi - p_lo)


class TestNormalize:
    def test_three_values(self):
        out = normalize_heatmap(Heatmap(np.array([[2.0, 4.0, 6.0]])))
        assert np.array_equal(out.array, [[0.0, 0.5, 1.0]])

    def test_constant_maps_to_zeros(self):
        out = normalize_heatmap(Heatmap(np.full((4, 4), 7.0)))
        assert not out.array.any()

    def test_unit_range_identity(self):
        arr = np.array([[0.0, 0.25], [0.75, 1.0]])
        assert np.array_equal(normalize_heatmap(Heatmap(arr)).array, arr)


class TestClipPercentile:
    def test_sequence_0_to_99_at_p98(self):
        arr = np.arange(100, dtype=np.float64).reshape(10, 10)
        assert nearest_rank_percentile(arr, 98.0) == 97.0
        out = clip_percentile(Heatmap(arr), lo=0.0, hi=98.0)
        # 98 and 99 clamp to 97, then renormalize by (97 - 0)
        assert out.array.max() == 1.0
        assert out.array.ravel()[98] == 1.0
        assert out.array.ravel()[99] == 1.0
        assert out.array.ravel()[97] == 1.0
        assert out.array.ravel()[50] == 50.0 / 97.0

    def test_full_range_is_identity_on_normalized(self):
        rng = np.random.default_rng(5)
        arr = rng.uniform(size=(20, 20))
        arr.ravel()[0] = 0.0
        arr.ravel()[1] = 1.0
        out = clip_percentile(Heatmap(arr), lo=0.0, hi=100.0)
        assert np.allclose(out.array, arr, rtol=0, atol=1e-15)

    def test_all_equal_maps_to_zeros(self):
        out = clip_percentile(Heatmap(np.full((5, 5), 3.0)), 0.0, 98.0)
        assert not out.array.any()

    def test_matches_sort_oracle_random(self, rng):
        for _ in range(30):
            h = int(rng.integers(1, 40))
            w = int(rng.integers(1, 40))
            arr = rng.uniform(0.0, 10.0, size=(h, w))
            lo = float(rng.uniform(0.0, 20.0))
            hi = float(rng.uniform(lo + 1.0, 100.0))
            got = clip_percentile(Heatmap(arr), lo, hi).array
            assert np.array_equal(got, sort_oracle_clip(arr, lo, hi))

    def test_large_input_exact(self, rng):
        arr = rng.uniform(size=(320, 320))  # >1e5 values
        got = clip_percentile(Heatmap(arr), 0.0, 98.0).array
        assert np.array_equal(got, sort_oracle_clip(arr, 0.0, 98.0))

    def test_invalid_band_rejected(self):
        h = Heatmap(np.ones((2, 2)))
        with pytest.raises(ContractError):
            clip_percentile(h, 50.0, 50.0)
        with pytest.raises(ContractError):
            clip_percentile(h, -1.0, 98.0)

    def test_output_stays_in_unit_interval(self, rng):
        for _ in range(20):
            arr = rng.uniform(0.0, 100.0, size=(16, 16))
            out = clip_percentile(normalize_heatmap(Heatmap(arr)), 0.0, 98.0)
            assert out.array.min() >= 0.0
            assert out.array.max() <= 1.0


class TestBinarize:
    def test_all_zero_empty(self):
        assert not binarize(Heatmap(np.zeros((8, 8)))).array.any()

    def test_solid_block_kept(self):
        arr = np.zeros((16, 16))
        arr[3:13, 2:12] = 1.0
        out = binarize(Heatmap(arr), threshold=0.5, min_component_area=16)
        assert np.array_equal(out.array, arr >= 0.5)

    def test_speck_removed(self):
        arr = np.zeros((16, 16))
        arr[4, 4] = 1.0
        arr[4, 5] = 1.0
        assert not binarize(Heatmap(arr), 0.5, 16).array.any()

    def test_threshold_boundary_included(self):
        arr = np.full((5, 5), 0.5)
        out = binarize(Heatmap(arr), threshold=0.5, min_component_area=1)
        assert out.array.all()


class TestContours:
    def test_single_pixel(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[3, 3] = True
        assert trace_outer_contours(BitMask(bits)) == [[(3, 3)]]

    def test_filled_3x3_square_clockwise(self):
        bits = np.zeros((6, 6), dtype=bool)
        bits[0:3, 0:3] = True
        chains = trace_outer_contours(BitMask(bits))
        assert len(chains) == 1
        assert chains[0] == [
            (0, 0),
            (1, 0),
            (2, 0),
            (2, 1),
            (2, 2),
            (1, 2),
            (0, 2),
            (0, 1),
        ]

    def test_two_blobs_two_chains(self):
        bits = np.zeros((12, 12), dtype=bool)
        bits[1:4, 1:4] = True
        bits[7:10, 7:10] = True
        assert len(trace_outer_contours(BitMask(bits))) == 2

    def test_component_count_matches_bfs_oracle(self, rng):
        for _ in range(60):
            h = int(rng.integers(1, 65))
            w = int(rng.integers(1, 65))
            bits = rng.random((h, w)) < rng.uniform(0.05, 0.6)
            chains = trace_outer_contours(BitMask(bits))
            assert len(chains) == bfs_label_count(bits)

    def test_chain_pixels_lie_on_component_border(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[2:8, 3:9] = True
        (chain,) = trace_outer_contours(BitMask(bits))
        for x, y in chain:
            assert bits[y, x]
            neighborhood = bits[max(y - 1, 0) : y + 2, max(x - 1, 0) : x + 2]
            assert neighborhood.size < 9 or not neighborhood.all()


class TestCompressChain:
    def test_rectangle_border_gives_corners(self):
        chain = (
            [(x, 0) for x in range(4)]
            + [(3, y) for y in range(1, 3)]
            + [(x, 2) for x in range(2, -1, -1)]
            + [(0, 1)]
        )
        assert compress_chain(chain) == [(0, 0), (3, 0), (3, 2), (0, 2)]

    def test_diagonal_staircase_two_endpoints(self):
        chain = [(i, i) for i in range(6)]
        assert compress_chain(chain) == [(0, 0), (5, 5)]

    def test_l_path_three_vertices(self):
        chain = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]
        assert compress_chain(chain) == [(0, 0), (2, 0), (2, 2)]

    def test_single_pixel_passthrough(self):
        assert compress_chain([(3, 3)]) == [(3, 3)]

    def test_empty_chain_rejected(self):
        with pytest.raises(ContractError):
            compress_chain([])


class TestPolygonize:
    def test_rectangle_corners_identity(self):
        corners = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]
        poly = polygonize(corners, eps=2.0, n_max=32)
        assert poly is not None
        assert np.array_equal(poly.vertices, corners)

    def test_collinear_ring_no_polygon(self):
        pts = [(x, 0.0) for x in range(50)] + [(x, 0.0) for x in range(48, 0, -1)]
        assert polygonize(pts) is None

    def test_too_few_distinct_no_polygon(self):
        assert polygonize([(0, 0), (0, 0), (1, 1)]) is None

    def test_noisy_square_four_vertices(self, rng):
        side = 30
        ring = []
        for t in range(side):  # top edge, left to right
            ring.append((float(t), rng.uniform(-0.5, 0.5)))
        for t in range(side):  # right edge
            ring.append((side + rng.uniform(-0.5, 0.5), float(t)))
        for t in range(side):  # bottom edge, right to left
            ring.append((float(side - t), side + rng.uniform(-0.5, 0.5)))
        for t in range(side):  # left edge
            ring.append((rng.uniform(-0.5, 0.5), float(side - t)))
        poly = polygonize(ring, eps=2.0, n_max=32)
        assert poly is not None
        assert len(poly.vertices) == 4

    def test_vertex_budget_enforced(self, rng):
        theta = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        r = 50.0 + rng.uniform(-1.0, 1.0, size=400)
        ring = np.stack([64 + r * np.cos(theta), 64 + r * np.sin(theta)], axis=1)
        poly = polygonize(ring, eps=0.01, n_max=8)
        assert poly is not None
        assert len(poly.vertices) <= 8

    def test_self_intersecting_simplification_falls_back_to_hull(self):
        # a ring whose DP-simplified form crosses itself: pinched dumbbell
        ring = [
            (0.0, 0.0),
            (10.0, 0.0),
            (10.0, 10.0),
            (5.1, 5.0),
            (0.0, 10.0),
            (0.0, 8.0),
            (4.9, 5.0),
            (0.0, 2.0),
        ]
        poly = polygonize(ring, eps=2.0, n_max=32)
        if poly is not None:
            from hairline.core import ring_is_simple

            assert ring_is_simple(poly.vertices)


class TestMaskOverlap:
    def test_fully_inside(self):
        blade = BitMask(np.ones((20, 20), dtype=bool))
        poly = Polygon([(3, 3), (8, 3), (8, 8), (3, 8)])
        assert mask_overlap_ratio(poly, blade) == 1.0

    def test_half_overlap(self):
        # 2x2 raster; blade covers the left column only
        blade_bits = np.zeros((4, 4), dtype=bool)
        blade_bits[:, 0] = True
        poly = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
        ox, oy, m = rasterize_polygon(poly)
        assert m.sum() == 4
        assert mask_overlap_ratio(poly, BitMask(blade_bits)) == 0.5

    def test_fully_outside(self):
        blade = BitMask(np.zeros((20, 20), dtype=bool))
        poly = Polygon([(3, 3), (8, 3), (8, 8), (3, 8)])
        assert mask_overlap_ratio(poly, blade) == 0.0

    def test_off_mask_pixels_count_against(self):
        blade = BitMask(np.ones((4, 4), dtype=bool))
        poly = Polygon([(2, 2), (9, 2), (9, 9), (2, 9)])
        ratio = mask_overlap_ratio(poly, blade)
        assert 0.0 < ratio < 1.0


class TestFilterByMask:
    def _ten_by_ten(self):
        # rasterizes to exactly the 100 lattice points 0..9 x 0..9
        return Polygon([(0, 0), (9, 0), (9, 9), (0, 9)])

    def _blade_with_k_hits(self, k):
        poly = self._ten_by_ten()
        ox, oy, m = rasterize_polygon(poly)
        assert (ox, oy, int(m.sum())) == (0, 0, 100)
        bits = np.zeros((12, 12), dtype=bool)
        ys, xs = np.nonzero(m)
        bits[ys[:k] + oy, xs[:k] + ox] = True
        return BitMask(bits)

    def test_exactly_half_kept(self):
        poly = self._ten_by_ten()
        kept = filter_by_mask([poly], self._blade_with_k_hits(50), 0.5)
        assert kept == [poly]

    def test_point49_removed(self):
        kept = filter_by_mask([self._ten_by_ten()], self._blade_with_k_hits(49), 0.5)
        assert kept == []

    def test_empty_list(self):
        blade = BitMask(np.ones((4, 4), dtype=bool))
        assert filter_by_mask([], blade) == []

    def test_keeps_are_subset(self, rng):
        blade_bits = rng.random((30, 30)) < 0.5
        polys = []
        for _ in range(8):
            x = float(rng.uniform(2, 20))
            y = float(rng.uniform(2, 20))
            s = float(rng.uniform(2, 6))
            polys.append(Polygon([(x, y), (x + s, y), (x + s, y + s), (x, y + s)]))
        kept = filter_by_mask(polys, BitMask(blade_bits), 0.5)
        assert len(kept) <= len(polys)
        assert all(any(p is q for q in polys) for p in kept)


def _proposal(pid, verts, conf, image_id="img-1"):
    tile = Tile(image_id=image_id, origin_x=0, origin_y=0, size=1024)
    return DetectionProposal(
        proposal_id=pid,
        image_id=image_id,
        source_tile=tile,
        polygon=Polygon(verts, frame=FRAME_IMAGE),
        confidence=conf,
    )


class TestMergeCrossTile:
    def test_identical_pair_merges_to_max_confidence(self):
        verts = [(10, 10), (20, 10), (20, 20), (10, 20)]
        a = _proposal("a", verts, 0.7)
        b = _proposal("b", verts, 0.9)
        out = merge_cross_tile([a, b])
        assert len(out) == 1
        assert out[0].confidence == 0.9

    def test_disjoint_pass_through(self):
        a = _proposal("a", [(0, 0), (5, 0), (5, 5), (0, 5)], 0.7)
        b = _proposal("b", [(50, 50), (55, 50), (55, 55), (50, 55)], 0.8)
        out = merge_cross_tile([a, b])
        assert len(out) == 2
        assert {p.proposal_id for p in out} == {"a", "b"}

    def test_transitive_chain_single_merge(self):
        a = _proposal("a", [(0, 0), (10, 0), (10, 10), (0, 10)], 0.5)
        b = _proposal("b", [(8, 0), (18, 0), (18, 10), (8, 10)], 0.6)
        c = _proposal("c", [(16, 0), (26, 0), (26, 10), (16, 10)], 0.7)
        out = merge_cross_tile([a, b, c])
        assert len(out) == 1
        assert out[0].confidence == 0.7

    def test_idempotent(self, rng):
        props = []
        for i in range(6):
            x = float(rng.uniform(0, 60))
            y = float(rng.uniform(0, 60))
            s = float(rng.uniform(4, 14))
            props.append(
                _proposal(f"p{i}", [(x, y), (x + s, y), (x + s, y + s), (x, y + s)], float(rng.uniform(0.5, 1.0)))
            )
        once = merge_cross_tile(props)
        twice = merge_cross_tile(once)
        assert len(once) == len(twice)
        for p, q in zip(once, twice):
            assert p.confidence == q.confidence
            assert np.array_equal(p.polygon.vertices, q.polygon.vertices)

    def test_empty_and_singleton(self):
        assert merge_cross_tile([]) == []
        a = _proposal("a", [(0, 0), (5, 0), (5, 5), (0, 5)], 0.7)
        assert merge_cross_tile([a]) == [a]


class TestFillEquivalence:
    def test_convex_blobs_recovered(self, rng):
        cfg = PostprocConfig()
        for _ in range(10):
            blob = ellipse_blob(rng, size=64)
            (chain,) = trace_outer_contours(BitMask(blob))
            poly = polygonize(
                compress_chain(chain), eps=cfg.simplify_tolerance, n_max=cfg.max_vertices
            )
            assert poly is not None
            ox, oy, m = rasterize_polygon(poly)
            got = set()
            ys, xs = np.nonzero(m)
            for x, y in zip(xs + ox, ys + oy):
                got.add((int(x), int(y)))
            want = {(int(x), int(y)) for y, x in zip(*np.nonzero(blob))}
            recovered = len(got & want) / len(want)
            extra = len(got - want) / len(want)
            assert recovered >= 0.9, f"recovered {recovered:.3f}"
            assert extra <= 0.1, f"extra {extra:.3f}"


class TestConfig:
    def test_defaults(self):
        cfg = PostprocConfig()
        assert cfg.percentile_hi == 98.0
        assert cfg.binarize_threshold == 0.5
        assert cfg.min_blade_overlap == 0.5
        assert cfg.max_vertices == 32

    def test_invalid_rejected(self):
        with pytest.raises(ContractError):
            PostprocConfig(percentile_lo=98.0, percentile_hi=2.0)
        with pytest.raises(ContractError):
            PostprocConfig(binarize_threshold=0.0)
        with pytest.raises(ContractError):
            PostprocConfig(max_vertices=2)

    def test_heatmap_rejects_negative(self):
        with pytest.raises(ContractError):
            Heatmap(np.array([[-0.1, 0.5]]))

    def test_bitmask_coerces_to_bool_and_rejects_non_2d(self):
        m = BitMask(np.array([[0, 2], [1, 0]], dtype=np.uint8))
        assert m.array.dtype == bool
        assert np.array_equal(m.array, [[False, True], [True, False]])
        with pytest.raises(ContractError):
            BitMask(np.zeros((3,), dtype=bool))
