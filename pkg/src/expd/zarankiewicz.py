"""K_{s,t} patterns, the Kővári–Sós–Turán bound, and a certified counter.

The counting bound for a K_{s,t}-free bipartite graph on m x n vertices is

    kst_bound(s, t, m, n) = s^(1/t) * m^(1-1/t) * n + t * m.

Exponent arithmetic is exact rational: given a cutting exponent D, a
forbidden K_{s,t} and an admissible epsilon in (0, (t-1)/(t(Dt-1))),

    alpha = D(t-1)/(Dt-1) - epsilon,   beta = t(1-alpha),

and for t = 2 the gap below 3/2 is delta = 1/(2(2D-1)) - epsilon, so
alpha + beta + delta = 3/2 identically.

certified_count() runs the three-case recursion behind those exponents and
returns a certificate tree whose total is, by construction, an upper bound
for the exact grid count: small first sides and failed cuttings are counted
exactly, balanced-enough nodes take the (valid, since K_{s,t}-free) KST
bound, and the remaining nodes recurse through a verified cutting cover,
counting the non-crossing edge blocks exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .cuttings import CuttingCover, verify_cutting
from .errors import InputError, ParameterError
from .relations import FiniteRelation2, Subset, count_grid2

# --- exponent arithmetic ----------------------------------------------------


def epsilon_sup(D: int, t: int) -> Fraction:
    """Supremum of the admissible epsilon interval (0, (t-1)/(t(Dt-1)))."""
    return Fraction(t - 1, t * (D * t - 1))


def exponent_triple(
    D: int, t: int, epsilon: Fraction
) -> tuple[Fraction, Fraction, Optional[Fraction]]:
    """(alpha, beta, delta) by formula alone; no admissibility check.

    delta is populated only for t = 2.  alpha + beta + delta == 3/2 holds
    identically in rational arithmetic for every epsilon.
    """
    epsilon = Fraction(epsilon)
    alpha = Fraction(D * (t - 1), D * t - 1) - epsilon
    beta = t * (1 - alpha)
    delta = Fraction(1, 2 * (2 * D - 1)) - epsilon if t == 2 else None
    return alpha, beta, delta


@dataclass(frozen=True)
class ExponentParams:
    D: int
    t: int
    s: int
    epsilon: Fraction
    alpha: Fraction
    beta: Fraction
    delta: Optional[Fraction]


def exponent_params(D: int, t: int, s: int, epsilon) -> ExponentParams:
    """Validated exponent parameters; epsilon must lie in the open interval."""
    if D < 1:
        raise ParameterError(f"cutting exponent D must be >= 1, got {D}")
    if t < 2:
        raise ParameterError(f"t must be >= 2, got {t}")
    if s < 1:
        raise ParameterError(f"s must be >= 1, got {s}")
    epsilon = Fraction(epsilon)
    sup = epsilon_sup(D, t)
    if not 0 < epsilon < sup:
        raise ParameterError(
            f"epsilon = {epsilon} outside the admissible interval (0, {sup}) for D={D}, t={t}"
        )
    alpha, beta, delta = exponent_triple(D, t, epsilon)
    return ExponentParams(D=D, t=t, s=s, epsilon=epsilon, alpha=alpha, beta=beta, delta=delta)


def kst_bound(s: int, t: int, m: int, n: int) -> float:
    """s^(1/t) * m^(1-1/t) * n + t * m; an edge-count bound when K_{s,t}-free."""
    if s < 1 or t < 1:
        raise ParameterError(f"kst_bound needs s, t >= 1, got s={s}, t={t}")
    if m < 0 or n < 0:
        raise ParameterError(f"kst_bound needs m, n >= 0, got m={m}, n={n}")
    if m == 0 or n == 0:
        return 0.0
    return s ** (1.0 / t) * m ** (1.0 - 1.0 / t) * n + t * m


def distal_delta_bound(params: ExponentParams, n: int) -> float:
    """n^(3/2 - delta), the evaluation value used in report rows (t = 2 only)."""
    if params.t != 2 or params.delta is None:
        raise ParameterError("distal delta bound is defined for t = 2 only")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    return float(n) ** (1.5 - float(params.delta))


# --- K_{s,t} detection --------------------------------------------------------


@dataclass(frozen=True)
class KstWitness:
    s_side: tuple[int, ...]
    t_side: tuple[int, ...]


def _first_bits(bits: int, count: int) -> tuple[int, ...]:
    out = []
    while bits and len(out) < count:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return tuple(out)


def find_kst(rel: FiniteRelation2, s: int, t: int) -> Optional[KstWitness]:
    """Lexicographically least complete s x t block, or None.

    Least here means: the smallest s-tuple of left indices in lexicographic
    order, then the t smallest right indices of their common neighborhood.
    """
    if s < 1 or t < 1:
        raise ParameterError(f"find_kst needs s, t >= 1, got s={s}, t={t}")
    m = rel.u.size
    rows = rel.rows
    if s > m:
        return None
    if s == 2:
        # hot path: pairwise fiber intersections, early exit
        for i in range(m - 1):
            ri = rows[i]
            if ri.bit_count() < t:
                continue
            for j in range(i + 1, m):
                common = ri & rows[j]
                if common.bit_count() >= t:
                    return KstWitness((i, j), _first_bits(common, t))
        return None

    def search(start: int, chosen: list[int], common: int) -> Optional[KstWitness]:
        if len(chosen) == s:
            return KstWitness(tuple(chosen), _first_bits(common, t))
        remaining = s - len(chosen)
        for i in range(start, m - remaining + 1):
            narrowed = common & rows[i]
            if narrowed.bit_count() >= t:
                chosen.append(i)
                found = search(i + 1, chosen, narrowed)
                if found is not None:
                    return found
                chosen.pop()
        return None

    return search(0, [], (1 << rel.v.size) - 1)


@dataclass(frozen=True)
class DecompositionReport:
    """Greedy-colored classes of U; within a class all pairwise fiber
    intersections have size < t_cap, so each class x V is K_{2,t_cap}-free."""

    classes: tuple[Subset, ...]
    r: int
    t_cap: int


def kst_free_decomposition(rel: FiniteRelation2, infinite_threshold: int) -> DecompositionReport:
    """Color U so same-class fibers pairwise intersect in < threshold points.

    Vertices u, u' are adjacent when |E_u ∩ E_u'| >= threshold; the resulting
    graph has some max degree r and first-fit coloring uses <= r+1 classes.
    """
    if infinite_threshold < 1:
        raise ParameterError(f"threshold must be >= 1, got {infinite_threshold}")
    m = rel.u.size
    rows = rel.rows
    adj = [0] * m
    for i in range(m - 1):
        ri = rows[i]
        for j in range(i + 1, m):
            if (ri & rows[j]).bit_count() >= infinite_threshold:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    r = max((a.bit_count() for a in adj), default=0)
    color = [-1] * m
    n_colors = 0
    for i in range(m):
        used = {color[j] for j in _iter_set_bits(adj[i]) if color[j] >= 0}
        c = 0
        while c in used:
            c += 1
        color[i] = c
        n_colors = max(n_colors, c + 1)
    classes = []
    for c in range(n_colors):
        bits = 0
        for i in range(m):
            if color[i] == c:
                bits |= 1 << i
        classes.append(Subset(rel.u, bits))
    return DecompositionReport(classes=tuple(classes), r=r, t_cap=infinite_threshold)


def _iter_set_bits(bits: int):
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


# --- certified counting -------------------------------------------------------

CASE_SMALL = "Case1_small_m"
CASE_UNBALANCED = "Case2_unbalanced"
CASE_RECURSE = "Case3_recurse"
CASE_LEAF = "LeafExact"

CutterFn = Callable[[FiniteRelation2, Subset, int], Optional[CuttingCover]]


@dataclass(frozen=True)
class BoundCertificate:
    case: str
    m: int
    n: int
    r: int
    contribution: int
    children: tuple["BoundCertificate", ...]
    total: int
    degraded: bool = False

    def to_obj(self) -> dict:
        obj = {
            "case": self.case,
            "m": self.m,
            "n": self.n,
            "r": self.r,
            "contribution": self.contribution,
            "children": [c.to_obj() for c in self.children],
            "total": self.total,
        }
        if self.degraded:
            obj["degraded"] = True
        return obj

    @staticmethod
    def from_obj(obj: dict) -> "BoundCertificate":
        return BoundCertificate(
            case=obj["case"],
            m=obj["m"],
            n=obj["n"],
            r=obj["r"],
            contribution=obj["contribution"],
            children=tuple(BoundCertificate.from_obj(c) for c in obj.get("children", [])),
            total=obj["total"],
            degraded=obj.get("degraded", False),
        )


def _case2_applies(params: ExponentParams, r: int, m: int, n: int) -> bool:
    # r^(D/(1-alpha)) * m >= n^t, compared in log space
    if m == 0:
        return False
    one_minus_alpha = float(1 - params.alpha)
    lhs = (params.D / one_minus_alpha) * math.log(r) + math.log(m)
    return lhs >= params.t * math.log(n) - 1e-12


def certified_count(
    rel: FiniteRelation2,
    a: Subset,
    b: Subset,
    params: ExponentParams,
    cutter: Optional[CutterFn],
    r: int,
    leaf_size: int = 32,
) -> BoundCertificate:
    """Certificate tree whose total upper-bounds |E ∩ A×B|.

    Caller guarantees the restriction of rel to A x B is K_{s,t}-free for
    params' (s, t) (check with find_kst); only Case 2 nodes rely on that.
    Cutter failures degrade the node to an exact count, which keeps the
    certificate sound.
    """
    if rel.u != a.universe or rel.v != b.universe:
        raise InputError("certified_count: subsets do not match the relation's universes")
    if r <= 1:
        raise ParameterError(f"cutting parameter r must be > 1, got {r}")
    if leaf_size < 1:
        raise ParameterError(f"leaf_size must be >= 1, got {leaf_size}")

    rows = rel.rows

    def exact(a_bits: int, b_bits: int) -> int:
        return sum((rows[i] & b_bits).bit_count() for i in _iter_set_bits(a_bits))

    def node(a_bits: int, b_bits: int) -> BoundCertificate:
        m = a_bits.bit_count()
        n = b_bits.bit_count()
        if m <= max(r, leaf_size) or n == 0:
            value = exact(a_bits, b_bits)
            return BoundCertificate(CASE_SMALL, m, n, r, value, (), value)
        if _case2_applies(params, r, m, n):
            value = math.ceil(kst_bound(params.s, params.t, m, n))
            return BoundCertificate(CASE_UNBALANCED, m, n, r, value, (), value)
        a_subset = Subset(rel.u, a_bits)
        cover = cutter(rel, a_subset, r) if cutter is not None else None
        report = verify_cutting(rel, a_subset, r, cover) if cover is not None else None
        if report is None or not report.valid:
            value = exact(a_bits, b_bits)
            return BoundCertificate(CASE_LEAF, m, n, r, value, (), value, degraded=True)
        children = []
        local = 0
        assigned = 0
        for cell in cover.cells:
            b_i = cell.bits & b_bits & ~assigned
            assigned |= b_i
            if b_i == 0:
                continue
            a_i = 0
            for i in _iter_set_bits(a_bits):
                fiber = rows[i]
                if fiber & cell.bits and cell.bits & ~fiber:
                    a_i |= 1 << i
            children.append(node(a_i, b_i))
            local += exact(a_bits & ~a_i, b_i)
        total = local + sum(child.total for child in children)
        return BoundCertificate(CASE_RECURSE, m, n, r, local, tuple(children), total)

    return node(a.bits, b.bits)


def certificate_is_sound(rel: FiniteRelation2, a: Subset, b: Subset, cert: BoundCertificate) -> bool:
    """total >= the exact count on the certified grid."""
    return cert.total >= count_grid2(rel, a, b)
