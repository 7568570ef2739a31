"""Ternary relation analysis: bounded fibering, cylinders, and the derived
pair relation.

For F ⊆ X×Y×Z the operations here compute, exactly:

  * the per-pairing fiber maxima and the bounded degree d (every pair of
    coordinates determines the third up to at most d values);
  * complete k x k blocks after flattening one axis against the product of
    the other two (the finite test for cylindricality);
  * the derived relation on ordered pairs,
      G = {(y,y',z,z') : ∃x (x,y,z) ∈ F and (x,y',z') ∈ F},
    viewed as a bipartite relation over Y² x Z²;
  * the fiber law |{z' : (y,y',z,z') ∈ G}| <= d² (and symmetrically), its
    summed form |G ∩ ({(y,y')} x C²)| <= d²|C|, and the count transfer
      |F ∩ A×B×C|  <=  d · |A|^(1/2) · |G ∩ (B²×C²)|^(1/2),
    which goes through the 5-ary intermediary
      W = {(x,y,y',z,z') : (x,y,z) ∈ F and (x,y',z') ∈ F}
    via |F'| = Σ_a |F'_a|, |W'| = Σ_a |F'_a|² and Cauchy–Schwarz.

Instance families for scaling experiments live here too: abelian-group
graphs (x+y+z = 0 in Z/n, or x·y·z = 1 in the units mod p) composed with
per-coordinate bijective twists, planted-block cylindrical relations with
sparse noise, and DSL-defined polynomial grids.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

from .dsl import GridSpec, instantiate3, parse, parse_grid
from .errors import CapacityError, InputError, ParameterError
from .relations import (
    FiniteRelation2,
    FiniteRelation3,
    Subset,
    Universe,
    build_relation3,
    count_grid2,
    pair_universe,
)
from .zarankiewicz import KstWitness, find_kst

DEFAULT_BUDGET_CELLS = 10**8


# --- bounded fibering ---------------------------------------------------------


@dataclass(frozen=True)
class DeltaDegree:
    """d is present iff all three pairing maxima are <= threshold; then it is
    their max.  Maxima order: (xy -> z, xz -> y, yz -> x)."""

    d: Optional[int]
    pairing_maxima: tuple[int, int, int]
    threshold: int


def pairing_maxima(rel: FiniteRelation3) -> tuple[int, int, int]:
    m_z = max((len(v) for v in rel.by_xy().values()), default=0)
    m_y = max((len(v) for v in rel.by_xz().values()), default=0)
    m_x = max((len(v) for v in rel.by_yz().values()), default=0)
    return (m_z, m_y, m_x)


def delta_degree(rel: FiniteRelation3, threshold: int) -> DeltaDegree:
    """Exact pairing maxima by full enumeration; d if all are <= threshold."""
    if threshold < 1:
        raise ParameterError(f"threshold must be >= 1, got {threshold}")
    maxima = pairing_maxima(rel)
    d = max(maxima) if all(m <= threshold for m in maxima) else None
    return DeltaDegree(d=d, pairing_maxima=maxima, threshold=threshold)


# --- cylindricality ------------------------------------------------------------


@dataclass(frozen=True)
class CylindricalWitness:
    axis: int  # 1 = X against Y×Z, 2 = Y against X×Z, 3 = Z against X×Y
    block: KstWitness


def _axis_flatten(rel: FiniteRelation3, axis: int) -> FiniteRelation2:
    nx, ny, nz = rel.x.size, rel.y.size, rel.z.size
    if axis == 1:
        left, rn, rs = rel.x, "Y*Z", ny * nz
        key = lambda i, j, k: (i, j * nz + k)
    elif axis == 2:
        left, rn, rs = rel.y, "X*Z", nx * nz
        key = lambda i, j, k: (j, i * nz + k)
    else:
        left, rn, rs = rel.z, "X*Y", nx * ny
        key = lambda i, j, k: (k, i * ny + j)
    rows = [0] * left.size
    for i, j, k in rel.triples:
        a, b = key(i, j, k)
        rows[a] |= 1 << b
    return FiniteRelation2(Universe(left.name, left.size), Universe(rn, rs), rows)


def cylindrical_witness(
    rel: FiniteRelation3, k: int, budget_cells: int = DEFAULT_BUDGET_CELLS
) -> Optional[CylindricalWitness]:
    """First complete k x k block between an axis and the product of the other
    two, scanning axes 1, 2, 3 in order; None when every split is K_{k,k}-free."""
    if k < 2:
        raise ParameterError(f"cylindrical witness needs k >= 2, got {k}")
    sizes = (rel.x.size, rel.y.size, rel.z.size)
    product = sizes[0] * sizes[1] * sizes[2]
    if product > budget_cells:
        raise CapacityError(
            f"flattened axis relations need {product} cells; budget is {budget_cells}"
        )
    for axis in (1, 2, 3):
        flat = _axis_flatten(rel, axis)
        witness = find_kst(flat, k, k)
        if witness is not None:
            return CylindricalWitness(axis=axis, block=witness)
    return None


# --- the derived pair relation -------------------------------------------------


def derive_g(rel: FiniteRelation3, budget_cells: int = DEFAULT_BUDGET_CELLS) -> FiniteRelation2:
    """Materialize G over Y² x Z² (row-major pair indices) by grouping on x."""
    ny, nz = rel.y.size, rel.z.size
    py, pz = ny * ny, nz * nz
    if py > budget_cells or pz > budget_cells or py * pz > budget_cells:
        raise CapacityError(
            f"pair relation needs {py} x {pz} cells; budget is {budget_cells}"
        )
    rows = [0] * py
    for entries in rel.group_by_x().values():
        for j, k in entries:
            base_y = j * ny
            base_z = k * nz
            for j2, k2 in entries:
                rows[base_y + j2] |= 1 << (base_z + k2)
    return FiniteRelation2(pair_universe(rel.y), pair_universe(rel.z), rows)


def g_edge_count(rel: FiniteRelation3) -> tuple[int, int, int]:
    """(|G|, max (y,y',z) fiber, max (z,z',y) fiber) without materializing the
    pair matrix; the sparse grouped-by-x form is deduplicated in a key set."""
    ny, nz = rel.y.size, rel.z.size
    keys: set[int] = set()
    for entries in rel.group_by_x().values():
        for j, k in entries:
            for j2, k2 in entries:
                keys.add(((j * ny + j2) * nz + k) * nz + k2)
    zz_fibers: dict[tuple[int, int], int] = {}
    yy_fibers: dict[tuple[int, int], int] = {}
    for key in keys:
        k2 = key % nz
        rest = key // nz
        k = rest % nz
        ypair = rest // nz
        j = ypair // ny
        key_zz = (ypair, k)
        zz_fibers[key_zz] = zz_fibers.get(key_zz, 0) + 1
        key_yy = (k * nz + k2, j)
        yy_fibers[key_yy] = yy_fibers.get(key_yy, 0) + 1
    max_zz = max(zz_fibers.values(), default=0)
    max_yy = max(yy_fibers.values(), default=0)
    return len(keys), max_zz, max_yy


@dataclass(frozen=True)
class PointCountCheck:
    kind: str  # 'full' or 'sample'
    c_size: int
    bound: int
    max_observed: int
    ok: bool


@dataclass(frozen=True)
class FiberBoundReport:
    d: int
    bound: int
    max_zz_fiber: int
    max_yy_fiber: int
    point_counts: tuple[PointCountCheck, ...]
    ok: bool


def check_g_fiber_bounds(
    rel: FiniteRelation3,
    g: FiniteRelation2,
    d: int,
    samples: int = 8,
    sample_seed: int = 0,
) -> FiberBoundReport:
    """Verify the d² fiber law on G and the d²|C| point-set counts.

    Checks every (y,y',z) fiber and every (z,z',y) fiber against d², then
    |G ∩ ({(y,y')} x C²)| <= d²|C| for C = Z and for seeded sampled C.
    """
    if d < 1:
        raise ParameterError("fiber bound checks need the bounded degree d (>= 1)")
    ny, nz = rel.y.size, rel.z.size
    if g.u.size != ny * ny or g.v.size != nz * nz:
        raise InputError("check_g_fiber_bounds: G does not match the pair universes of F")
    bound = d * d
    zz_fibers: dict[tuple[int, int], int] = {}
    yy_fibers: dict[tuple[int, int], int] = {}
    for ypair, row in enumerate(g.rows):
        bits = row
        while bits:
            low = bits & -bits
            zpair = low.bit_length() - 1
            bits ^= low
            z1 = zpair // nz
            y1 = ypair // ny
            kz = (ypair, z1)
            zz_fibers[kz] = zz_fibers.get(kz, 0) + 1
            ky = (zpair, y1)
            yy_fibers[ky] = yy_fibers.get(ky, 0) + 1
    max_zz = max(zz_fibers.values(), default=0)
    max_yy = max(yy_fibers.values(), default=0)

    checks = []
    full_max = max((row.bit_count() for row in g.rows), default=0)
    checks.append(
        PointCountCheck("full", nz, bound * nz, full_max, full_max <= bound * nz)
    )
    rng = random.Random(sample_seed)
    for _ in range(samples):
        size = rng.randint(1, nz)
        chosen = rng.sample(range(nz), size)
        mask = 0
        for z1 in chosen:
            for z2 in chosen:
                mask |= 1 << (z1 * nz + z2)
        observed = max(((row & mask).bit_count() for row in g.rows), default=0)
        checks.append(
            PointCountCheck("sample", size, bound * size, observed, observed <= bound * size)
        )
    ok = max_zz <= bound and max_yy <= bound and all(c.ok for c in checks)
    return FiberBoundReport(
        d=d,
        bound=bound,
        max_zz_fiber=max_zz,
        max_yy_fiber=max_yy,
        point_counts=tuple(checks),
        ok=ok,
    )


# --- the count transfer ---------------------------------------------------------


@dataclass(frozen=True)
class CauchySchwarzReport:
    f_count: int  # |F ∩ A×B×C|
    w_count: int  # |W ∩ A×B²×C²|
    g_count: int  # |G ∩ B²×C²|
    d: int
    a_size: int
    rhs: float  # d * |A|^(1/2) * |G'|^(1/2)
    slack: float
    cs_ok: bool  # |F'|² <= |A| · |W'|
    fiber_ok: bool  # |W'| <= d · |G'|
    composed_ok: bool  # |F'|² <= d² · |A| · |G'|

    @property
    def ok(self) -> bool:
        return self.cs_ok and self.fiber_ok and self.composed_ok


def cauchy_schwarz_check(
    rel: FiniteRelation3,
    a: Subset,
    b: Subset,
    c: Subset,
    threshold: Optional[int] = None,
) -> CauchySchwarzReport:
    """Exact check of the two-step count transfer on a concrete grid.

    All three inequalities are tested in exact integer arithmetic (squared
    forms); the reported rhs is the float evaluation for humans.
    """
    if a.universe != rel.x or b.universe != rel.y or c.universe != rel.z:
        raise InputError("cauchy_schwarz_check: subsets must match the relation's universes")
    if threshold is not None:
        dd = delta_degree(rel, threshold)
        if dd.d is None:
            raise ParameterError(
                f"relation is not degree-bounded at threshold {threshold}: maxima {dd.pairing_maxima}"
            )
        d = dd.d
    else:
        d = max(pairing_maxima(rel))
    ny, nz = rel.y.size, rel.z.size
    abits, bbits, cbits = a.bits, b.bits, c.bits
    per_x_restricted: dict[int, int] = {}
    g_keys: set[int] = set()
    for x, entries in rel.group_by_x().items():
        kept = [(j, k) for j, k in entries if bbits >> j & 1 and cbits >> k & 1]
        if not kept:
            continue
        if abits >> x & 1:
            per_x_restricted[x] = len(kept)
        for j, k in kept:
            for j2, k2 in kept:
                g_keys.add(((j * ny + j2) * nz + k) * nz + k2)
    f_count = sum(per_x_restricted.values())
    w_count = sum(v * v for v in per_x_restricted.values())
    g_count = len(g_keys)
    a_size = a.cardinality()
    cs_ok = f_count * f_count <= a_size * w_count
    fiber_ok = w_count <= d * g_count
    composed_ok = f_count * f_count <= d * d * a_size * g_count
    rhs = d * (a_size**0.5) * (g_count**0.5)
    return CauchySchwarzReport(
        f_count=f_count,
        w_count=w_count,
        g_count=g_count,
        d=d,
        a_size=a_size,
        rhs=rhs,
        slack=rhs - f_count,
        cs_ok=cs_ok,
        fiber_ok=fiber_ok,
        composed_ok=composed_ok,
    )


# --- exceptional-set trimming ----------------------------------------------------


def pair_subset(base: Subset, pair_u: Universe) -> Subset:
    """B ⊆ Y lifted to B² ⊆ Y² (row-major pair indices)."""
    n = base.universe.size
    if pair_u.size != n * n:
        raise InputError("pair_subset: pair universe does not match the base universe")
    bits = 0
    for i in base.members():
        for j in base.members():
            bits |= 1 << (i * n + j)
    return Subset(pair_u, bits)


@dataclass(frozen=True)
class TrimReport:
    count_full: int  # |G ∩ B²×C²|
    count_core: int  # |G ∩ (B²∖Y0)×(C²∖Z0)|
    boundary: int
    boundary_bound: int  # d²(|B²∩Y0||C| + |C²∩Z0||B|)
    y0_rows: int  # |B² ∩ Y0|
    z0_cols: int  # |C² ∩ Z0|
    decomposition_exact: bool
    ok: bool


def large_subset_trim(
    g: FiniteRelation2,
    b: Subset,
    c: Subset,
    y0: Subset,
    z0: Subset,
    d: int,
) -> TrimReport:
    """Split |G ∩ B²×C²| into a trimmed core plus boundary terms and verify the
    boundary obeys the d²-per-row law: boundary <= d²(|B²∩Y0||C| + |C²∩Z0||B|)."""
    if y0.universe != g.u or z0.universe != g.v:
        raise InputError("large_subset_trim: Y0/Z0 must live on G's pair universes")
    bsq = pair_subset(b, g.u)
    csq = pair_subset(c, g.v)
    bprime = Subset(g.u, bsq.bits & ~y0.bits)
    cprime = Subset(g.v, csq.bits & ~z0.bits)
    count_full = count_grid2(g, bsq, csq)
    count_core = count_grid2(g, bprime, cprime)
    boundary = count_full - count_core
    in_y0 = Subset(g.u, bsq.bits & y0.bits)
    in_z0 = Subset(g.v, csq.bits & z0.bits)
    part_y = count_grid2(g, in_y0, csq)
    part_z = count_grid2(g, bprime, in_z0)
    bound = d * d * (in_y0.cardinality() * c.cardinality() + in_z0.cardinality() * b.cardinality())
    return TrimReport(
        count_full=count_full,
        count_core=count_core,
        boundary=boundary,
        boundary_bound=bound,
        y0_rows=in_y0.cardinality(),
        z0_cols=in_z0.cardinality(),
        decomposition_exact=count_full == count_core + part_y + part_z,
        ok=boundary <= bound,
    )


# --- instance families -------------------------------------------------------------

TwistDescriptor = object  # "identity" | ("seeded", seed) | ("perm", tuple)


@dataclass(frozen=True)
class FamilySpec:
    """kind 'group_like' (cyclic or unit group mod a prime, with twists),
    'cylindrical' (planted k x k block plus sparse noise), or 'dsl'."""

    kind: str
    group: Optional[tuple] = None  # ("cyclic", None) or ("unit_group_mod", p)
    twists: tuple = ("identity", "identity", "identity")
    block: Optional[int] = None  # cylindrical block side; None means k(n) = n
    seed: int = 0
    expr: Optional[str] = None
    grids: tuple[str, str, str] = ("range:0:{n}:1", "range:0:{n}:1", "range:0:{n}:1")


@dataclass(frozen=True)
class FamilyInstance:
    rel: FiniteRelation3
    a: Subset
    b: Subset
    c: Subset


@dataclass(frozen=True)
class RelationFamily:
    name: str
    builder: Callable[[int], FamilyInstance]

    def build(self, n: int) -> FamilyInstance:
        if n < 1:
            raise InputError(f"family size must be >= 1, got {n}")
        return self.builder(n)


def _twist_map(descriptor, size: int, child_seed: int) -> list[int]:
    """The map index -> group element; must be a bijection onto 0..size-1."""
    if descriptor == "identity":
        return list(range(size))
    if isinstance(descriptor, tuple) and len(descriptor) == 2:
        tag, payload = descriptor
        if tag == "seeded":
            rng = random.Random(int(payload) * 1000003 + child_seed)
            perm = list(range(size))
            rng.shuffle(perm)
            return perm
        if tag == "perm":
            perm = list(payload)
            if sorted(perm) != list(range(size)):
                raise InputError(f"invalid twist: {payload!r} is not a bijection on 0..{size - 1}")
            return perm
    raise InputError(f"unknown twist descriptor {descriptor!r}")


def _group_like_instance(spec: FamilySpec, n: int) -> FamilyInstance:
    gkind, gparam = spec.group
    if gkind == "cyclic":
        size = n
        elements = list(range(n))
        def third(e1: int, e2: int) -> int:
            return (-e1 - e2) % n
    elif gkind == "unit_group_mod":
        p = gparam
        if n != p - 1:
            raise InputError(
                f"unit_group_mod({p}) family has the single size {p - 1}, got {n}"
            )
        size = p - 1
        elements = list(range(1, p))
        def third(e1: int, e2: int) -> int:
            return pow(e1 * e2, p - 2, p)
    else:
        raise InputError(f"unknown group kind {gkind!r}")
    maps = [
        _twist_map(spec.twists[i], size, child_seed=i) for i in range(3)
    ]
    # triple (i, j, k) is in F iff g(i) * g(j) * g(k) = identity, where g maps
    # indices through the twist to group elements
    elem_of = [[elements[m] for m in mp] for mp in maps]
    inv3 = {elements[mp]: idx for idx, mp in enumerate(maps[2])}
    triples = []
    for i in range(size):
        e1 = elem_of[0][i]
        for j in range(size):
            k = inv3[third(e1, elem_of[1][j])]
            triples.append((i, j, k))
    ux = Universe("X", size, tuple(elem_of[0]) if gkind == "unit_group_mod" else None)
    uy = Universe("Y", size, tuple(elem_of[1]) if gkind == "unit_group_mod" else None)
    uz = Universe("Z", size, tuple(elem_of[2]) if gkind == "unit_group_mod" else None)
    rel = build_relation3(ux, uy, uz, triples)
    return FamilyInstance(rel, Subset.full(ux), Subset.full(uy), Subset.full(uz))


def _cylindrical_instance(spec: FamilySpec, n: int) -> FamilyInstance:
    k = n if spec.block is None else min(spec.block, n)
    triples = [(i, j, j) for i in range(k) for j in range(k)]
    rng = random.Random(spec.seed * 1000003 + n)
    for _ in range(n):
        triples.append((rng.randrange(n), rng.randrange(n), rng.randrange(n)))
    ux, uy, uz = Universe("X", n), Universe("Y", n), Universe("Z", n)
    rel = build_relation3(ux, uy, uz, triples)
    return FamilyInstance(rel, Subset.full(ux), Subset.full(uy), Subset.full(uz))


def _dsl_instance(spec: FamilySpec, n: int) -> FamilyInstance:
    expr = parse(spec.expr)
    grids = [parse_grid(g.format(n=n), seed=spec.seed) for g in spec.grids]
    rel, _ = instantiate3(expr, *grids)
    return FamilyInstance(
        rel, Subset.full(rel.x), Subset.full(rel.y), Subset.full(rel.z)
    )


def make_family(spec: FamilySpec) -> RelationFamily:
    if spec.kind == "group_like":
        if spec.group is None:
            raise InputError("group_like family needs a group")
        for t in spec.twists:
            if t != "identity" and not (isinstance(t, tuple) and len(t) == 2):
                raise InputError(f"unknown twist descriptor {t!r}")
        name = f"group_like_{spec.group[0]}"
        return RelationFamily(name, lambda n: _group_like_instance(spec, n))
    if spec.kind == "cylindrical":
        return RelationFamily("cylindrical", lambda n: _cylindrical_instance(spec, n))
    if spec.kind == "dsl":
        if spec.expr is None:
            raise InputError("dsl family needs an expression")
        parse(spec.expr)  # fail fast on syntax errors
        return RelationFamily(f"dsl:{spec.expr}", lambda n: _dsl_instance(spec, n))
    raise InputError(f"unknown family kind {spec.kind!r}")


def top_frequent_family(expr_text: str) -> RelationFamily:
    """A = B = {0..n-1}; C = the n most frequent values of the solved side.

    The expression must isolate z on one side; ties in the frequency order
    break by value, so instances are deterministic.
    """
    expr = parse(expr_text)
    from .dsl import Var, variables_in

    solved_side = None
    for side, other in ((expr.lhs, expr.rhs), (expr.rhs, expr.lhs)):
        if isinstance(side, Var) and side.name == "z" and "z" not in variables_in(other):
            solved_side = other
    if solved_side is None:
        raise InputError("top-frequent family needs an expression solved for z")

    def build(n: int) -> FamilyInstance:
        from .dsl import eval_node

        counts: dict[int, int] = {}
        for xv in range(n):
            for yv in range(n):
                v = eval_node(solved_side, {"x": xv, "y": yv})
                if expr.modulus is not None:
                    v %= expr.modulus
                counts[v] = counts.get(v, 0) + 1
        top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
        c_values = sorted(v for v, _ in top)
        rel, _ = instantiate3(
            expr,
            GridSpec.range_(0, n),
            GridSpec.range_(0, n),
            GridSpec.explicit(c_values),
        )
        return FamilyInstance(
            rel, Subset.full(rel.x), Subset.full(rel.y), Subset.full(rel.z)
        )

    return RelationFamily(f"topz:{expr_text}", build)
