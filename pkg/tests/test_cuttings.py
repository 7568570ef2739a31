"""Cutting covers: crossing definition, verifier, constructors, greedy fallback."""

import random

import pytest

from expd import (
    CuttingCover,
    FamilyError,
    Subset,
    box_grid_cutting,
    crosses,
    greedy_cutting,
    interval_cutting,
    verify_cutting,
)
from expd.instances import (
    Rect,
    identity_matching,
    interval_incidence,
    random_bipartite,
    random_interval_incidence,
    random_rectangle_incidence,
    rectangle_incidence,
)
from expd.relations import FiniteRelation2, Universe, build_relation2


def cover_from_cells(rel, cells, r, D=1):
    subs = tuple(Subset.from_indices(rel.v, c) for c in cells)
    counts = tuple(
        sum(1 for i in range(rel.u.size) if crosses(rel.rows[i], s.bits)) for s in subs
    )
    return CuttingCover(cells=subs, r=r, claimed_exponent=D, crossing_counts=counts)


class TestCrossingDefinition:
    def test_hand_example_interval_2_5_on_points_1_8(self):
        # points labelled 1..8 live at indices 0..7; the interval [2,5] is
        # the fiber {1,2,3,4}; blocks {1,2},{3,4},{5,6},{7,8} in label space
        rel = interval_incidence([(1, 4)], 8)
        fiber = rel.rows[0]
        blocks = [(0, 1), (2, 3), (4, 5), (6, 7)]
        masks = [(1 << a) | (1 << b) for a, b in blocks]
        assert [crosses(fiber, m) for m in masks] == [True, False, True, False]

    def test_singletons_never_crossed(self):
        rng = random.Random(5)
        for _ in range(10):
            m, n = rng.randint(1, 8), rng.randint(1, 8)
            pairs = {(rng.randrange(m), rng.randrange(n)) for _ in range(rng.randint(0, m * n))}
            rel = build_relation2(Universe("U", m), Universe("V", n), sorted(pairs))
            for j in range(n):
                for i in range(m):
                    assert not crosses(rel.rows[i], 1 << j)


class TestVerifyCutting:
    def test_single_cell_cover(self):
        # one cell = V; valid iff at most n/r fibers cross V
        rel = interval_incidence([(0, 3), (1, 2), (0, 1), (2, 3)], 4)
        a = Subset.full(rel.u)
        cover = cover_from_cells(rel, [[0, 1, 2, 3]], r=2)
        report = verify_cutting(rel, a, 2, cover)
        # fibers (1,2), (0,1), (2,3) cross V; (0,3) contains it
        assert report.max_crossing == 3
        assert not report.valid  # 3 > 4/2
        report_r1 = verify_cutting(rel, a, 1, cover_from_cells(rel, [[0, 1, 2, 3]], r=1))
        assert report_r1.valid

    def test_singleton_cells_always_valid(self):
        rel = random_bipartite(3, 10, 12, 60)
        a = Subset.full(rel.u)
        cover = cover_from_cells(rel, [[j] for j in range(12)], r=10)
        report = verify_cutting(rel, a, 10, cover)
        assert report.valid
        assert report.max_crossing == 0
        assert report.cell_count == 12

    def test_coverage_violation(self):
        rel = identity_matching(4)
        cover = cover_from_cells(rel, [[0, 1]], r=2)
        report = verify_cutting(rel, Subset.full(rel.u), 2, cover)
        assert not report.valid
        assert "cover" in report.failure

    def test_cap_violation_reports_first_cell(self):
        rel = interval_incidence([(0, 2), (1, 3), (2, 4), (1, 2)], 6)
        cover = cover_from_cells(rel, [[1, 2], [0, 3, 4, 5]], r=4)
        report = verify_cutting(rel, Subset.full(rel.u), 4, cover)
        assert not report.valid
        assert report.failure.startswith("cell ")

    def test_recorded_counts_mismatch_detected(self):
        rel = identity_matching(4)
        good = cover_from_cells(rel, [[0, 1], [2, 3]], r=2)
        tampered = CuttingCover(
            cells=good.cells,
            r=good.r,
            claimed_exponent=good.claimed_exponent,
            crossing_counts=(7, 7),
        )
        report = verify_cutting(rel, Subset.full(rel.u), 2, tampered)
        assert report.valid  # caps still hold on the recomputed counts
        assert not report.counts_match

    def test_fitted_c(self):
        rel = identity_matching(8)
        cover = cover_from_cells(rel, [[j] for j in range(8)], r=2, D=2)
        report = verify_cutting(rel, Subset.full(rel.u), 2, cover)
        assert report.fitted_c == 8 / 4


class TestIntervalCutting:
    def test_all_equal_intervals_single_cell(self):
        rel = interval_incidence([(0, 9)] * 6, 10)
        a = Subset.full(rel.u)
        cover = interval_cutting(rel, a, 4)
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.max_crossing == 0
        assert report.cell_count == 1

    def test_hand_instance_cells_are_blocks(self):
        rel = interval_incidence([(1, 4), (3, 8), (6, 11)], 12)
        a = Subset.full(rel.u)
        cover = interval_cutting(rel, a, 3)
        report = verify_cutting(rel, a, 3, cover)
        assert report.valid
        assert report.cell_count <= 6
        for cell in cover.cells:
            members = sorted(cell.members())
            assert members == list(range(members[0], members[-1] + 1))

    def test_fuzz_valid_and_within_2r(self):
        rng = random.Random(71)
        for trial in range(20):
            n_int = rng.randint(5, 80)
            n_pts = rng.randint(10, 300)
            rel = random_interval_incidence(500 + trial, n_int, n_pts)
            a = Subset.full(rel.u)
            for r in (2, 4, 8, 16):
                cover = interval_cutting(rel, a, r)
                report = verify_cutting(rel, a, r, cover)
                assert report.valid, (trial, r, report.failure)
                assert report.cell_count <= 2 * r
                assert report.counts_match

    def test_partial_a_subset(self):
        rel = random_interval_incidence(9, 40, 120)
        a = Subset.from_indices(rel.u, range(0, 40, 3))
        cover = interval_cutting(rel, a, 4)
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.cell_count <= 8

    def test_empty_a(self):
        rel = random_interval_incidence(9, 10, 50)
        a = Subset.empty(rel.u)
        cover = interval_cutting(rel, a, 4)
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.max_crossing == 0

    def test_non_contiguous_fiber_rejected(self):
        rel = build_relation2(Universe("U", 1), Universe("V", 5), [(0, 0), (0, 2)])
        with pytest.raises(FamilyError, match="contiguous"):
            interval_cutting(rel, Subset.full(rel.u), 2)

    def test_fitted_constant_at_most_2(self):
        rng = random.Random(73)
        for trial in range(10):
            rel = random_interval_incidence(900 + trial, rng.randint(16, 64), rng.randint(64, 256))
            a = Subset.full(rel.u)
            for r in (2, 4, 8, 16):
                report = verify_cutting(rel, a, r, interval_cutting(rel, a, r))
                assert report.valid
                assert report.fitted_c <= 2.0


class TestBoxGridCutting:
    def test_one_rect_covering_everything(self):
        points = [(x, y) for x in range(5) for y in range(5)]
        rel = rectangle_incidence([Rect(0, 4, 0, 4)], points)
        a = Subset.full(rel.u)
        cover = box_grid_cutting(rel, a, 2)
        report = verify_cutting(rel, a, 2, cover)
        assert report.valid
        assert report.max_crossing == 0

    def test_random_32_rects_16x16_r4(self):
        rel = random_rectangle_incidence(11, 32, 16)
        a = Subset.full(rel.u)
        cover = box_grid_cutting(rel, a, 4)
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.cell_count <= 16 * 16

    def test_empty_a_single_cell(self):
        rel = random_rectangle_incidence(11, 8, 8)
        a = Subset.empty(rel.u)
        cover = box_grid_cutting(rel, a, 4)
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.cell_count == 1

    def test_fuzz_valid_with_bounded_constant(self):
        rng = random.Random(77)
        for trial in range(8):
            rel = random_rectangle_incidence(700 + trial, rng.randint(24, 96), 20)
            a = Subset.full(rel.u)
            for r in (2, 4, 8):
                cover = box_grid_cutting(rel, a, r)
                report = verify_cutting(rel, a, r, cover)
                assert report.valid, (trial, r, report.failure)
                assert report.fitted_c <= 8.0
                assert cover.claimed_exponent == 2

    def test_non_rectangular_fiber_rejected(self):
        points = [(0, 0), (0, 1), (1, 0), (1, 1)]
        u = Universe("rects", 1)
        v = Universe("points", 4, tuple(f"{x},{y}" for x, y in points))
        rel = FiniteRelation2(u, v, [0b1001])  # diagonal pair, not a box
        with pytest.raises(FamilyError, match="rectangle"):
            box_grid_cutting(rel, Subset.full(u), 2)

    def test_missing_coordinates_rejected(self):
        rel = identity_matching(4)
        with pytest.raises(FamilyError, match="label"):
            box_grid_cutting(rel, Subset.full(rel.u), 2)


class TestGreedyCutting:
    def test_few_trace_classes_returned_with_zero_crossing(self):
        # fibers induce 4 trace classes over V: {0,1}, {2}, {3}, {4,5}
        rel = build_relation2(
            Universe("U", 2),
            Universe("V", 6),
            [(0, 0), (0, 1), (0, 2), (1, 2), (1, 3)],
        )
        a = Subset.full(rel.u)
        cover = greedy_cutting(rel, a, 2)
        assert cover is not None
        report = verify_cutting(rel, a, 2, cover)
        assert report.valid
        assert report.max_crossing == 0
        assert {tuple(sorted(c.members())) for c in cover.cells} == {
            (0, 1),
            (2,),
            (3,),
            (4, 5),
        }

    def test_identity_matching_singleton_blocks(self):
        rel = identity_matching(16)
        a = Subset.full(rel.u)
        cover = greedy_cutting(rel, a, 4, max_cells=16)
        assert cover is not None
        assert len(cover.cells) == 16
        report = verify_cutting(rel, a, 4, cover)
        assert report.valid
        assert report.max_crossing == 0

    def test_identity_matching_default_cap_merges_or_fails(self):
        rel = identity_matching(64)
        a = Subset.full(rel.u)
        cover = greedy_cutting(rel, a, 4)
        if cover is not None:
            assert verify_cutting(rel, a, 4, cover).valid

    def test_dense_random_dichotomy(self):
        # never an unverified cover: either verify_cutting passes or None
        rng = random.Random(83)
        outcomes = {"cover": 0, "failure": 0}
        for trial in range(60):
            m = rng.randint(8, 64)
            n = rng.randint(8, 64)
            rel = random_bipartite(8000 + trial, m, n, rng.randint(0, m * n))
            a = Subset.full(rel.u)
            r = rng.choice([2, 4, 8])
            cover = greedy_cutting(rel, a, r)
            if cover is None:
                outcomes["failure"] += 1
            else:
                outcomes["cover"] += 1
                assert verify_cutting(rel, a, r, cover).valid
        assert outcomes["cover"] > 0 and outcomes["failure"] > 0

    def test_max_cells_enforced(self):
        rel = random_bipartite(12, 32, 32, 512)
        a = Subset.full(rel.u)
        assert greedy_cutting(rel, a, 4, max_cells=2) is None
        wide = greedy_cutting(rel, a, 4, max_cells=10**6)
        assert wide is not None
        assert verify_cutting(rel, a, 4, wide).valid
