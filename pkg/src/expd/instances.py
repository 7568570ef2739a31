"""Concrete incidence instances used by experiments and tests.

All generators are deterministic given their arguments; randomized ones take
an explicit seed.  Planar point universes carry coordinate labels "x,y" so
the rectangle machinery can recover geometry from the relation alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import InputError
from .relations import FiniteRelation2, Universe, build_relation2


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    p = 2
    while p * p <= q:
        if q % p == 0:
            return False
        p += 1
    return True


def pg_incidence(q: int) -> FiniteRelation2:
    """Point-line incidence of the projective plane of prime order q.

    q²+q+1 points and lines, q+1 points per line, any two distinct points on
    exactly one common line, so the relation is K_{2,2}-free.
    """
    if not is_prime(q):
        raise InputError(f"projective plane generator needs a prime order, got {q}")
    # Normalized homogeneous coordinates: first nonzero entry is 1.
    reps = (
        [(1, a, b) for a in range(q) for b in range(q)]
        + [(0, 1, a) for a in range(q)]
        + [(0, 0, 1)]
    )
    n = q * q + q + 1
    labels = tuple(":".join(map(str, r)) for r in reps)
    points = Universe("points", n, labels)
    lines = Universe("lines", n, labels)
    pairs = []
    for i, pt in enumerate(reps):
        for j, ln in enumerate(reps):
            if (pt[0] * ln[0] + pt[1] * ln[1] + pt[2] * ln[2]) % q == 0:
                pairs.append((i, j))
    return build_relation2(points, lines, pairs)


def interval_incidence(intervals: list[tuple[int, int]], n_points: int) -> FiniteRelation2:
    """Left = intervals, right = ordered points 0..n_points-1; fiber a = [lo_a, hi_a]."""
    u = Universe("intervals", len(intervals))
    v = Universe("points", n_points)
    rows = []
    for lo, hi in intervals:
        if not (0 <= lo <= hi < n_points):
            raise InputError(f"interval [{lo}, {hi}] out of range for {n_points} points")
        rows.append(((1 << (hi - lo + 1)) - 1) << lo)
    return FiniteRelation2(u, v, rows)


def random_interval_incidence(
    seed: int, n_intervals: int, n_points: int, max_len: int | None = None
) -> FiniteRelation2:
    rng = random.Random(seed)
    if max_len is None:
        max_len = max(1, n_points // 3)
    intervals = []
    for _ in range(n_intervals):
        length = rng.randint(1, max_len)
        lo = rng.randint(0, n_points - length)
        intervals.append((lo, lo + length - 1))
    return interval_incidence(intervals, n_points)


@dataclass(frozen=True)
class Rect:
    x1: int
    x2: int
    y1: int
    y2: int

    def contains(self, x: int, y: int) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2


def rectangle_incidence(rects: list[Rect], points: list[tuple[int, int]]) -> FiniteRelation2:
    """Left = rectangles, right = planar points; fiber a = points inside rect a.

    Point labels are "x,y" so downstream cutting code can recover coordinates.
    """
    if len(set(points)) != len(points):
        raise InputError("planar points must be pairwise distinct")
    u = Universe("rects", len(rects))
    v = Universe("points", len(points), tuple(f"{x},{y}" for x, y in points))
    rows = []
    for rect in rects:
        row = 0
        for j, (x, y) in enumerate(points):
            if rect.contains(x, y):
                row |= 1 << j
        rows.append(row)
    return FiniteRelation2(u, v, rows)


def random_rectangle_incidence(
    seed: int, n_rects: int, grid_side: int, max_extent: int | None = None
) -> FiniteRelation2:
    """Rectangles with seeded corners over the full grid_side x grid_side point grid."""
    rng = random.Random(seed)
    if max_extent is None:
        max_extent = max(1, grid_side // 4)
    points = [(x, y) for x in range(grid_side) for y in range(grid_side)]
    rects = []
    for _ in range(n_rects):
        w = rng.randint(0, max_extent - 1)
        h = rng.randint(0, max_extent - 1)
        x1 = rng.randint(0, grid_side - 1 - w)
        y1 = rng.randint(0, grid_side - 1 - h)
        rects.append(Rect(x1, x1 + w, y1, y1 + h))
    return rectangle_incidence(rects, points)


def random_bipartite(seed: int, m: int, n: int, edges: int) -> FiniteRelation2:
    """A seeded random bipartite graph with exactly min(edges, m*n) distinct edges."""
    rng = random.Random(seed)
    edges = min(edges, m * n)
    u = Universe("U", m)
    v = Universe("V", n)
    chosen = set()
    while len(chosen) < edges:
        chosen.add((rng.randrange(m), rng.randrange(n)))
    return build_relation2(u, v, sorted(chosen))


def identity_matching(n: int) -> FiniteRelation2:
    u = Universe("U", n)
    v = Universe("V", n)
    return build_relation2(u, v, [(i, i) for i in range(n)])
