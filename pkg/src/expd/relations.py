"""Exact finite relations over indexed universes.

A Universe is an indexed finite set 0..size-1, optionally carrying element
labels.  Binary relations are stored as dense bit matrices (one Python int
per left element, bit j set iff (i, j) is an edge); ternary relations as a
deduplicated sorted tuple of index triples with per-pairing fiber maps built
lazily.  All counting here is pure integer arithmetic.

Subsets of a universe are bit vectors.  Grid counts |E ∩ A×B| and
|F ∩ A×B×C| are exact and deterministic.

Everything is immutable after construction except the memoized fiber maps of
ternary relations, which are built at most once (assignment of a fully built
dict is atomic, so concurrent readers see either nothing or the final map).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import CapacityError, InputError

Label = Union[int, str]

# Pair universes index (i, j) as i*size + j; cap keeps those indices sane.
MAX_PAIR_BASE = 1 << 20


@dataclass(frozen=True)
class Universe:
    """An indexed finite set, elements 0..size-1, with optional labels."""

    name: str
    size: int
    labels: Optional[tuple[Label, ...]] = None

    def __post_init__(self):
        if self.size < 0:
            raise InputError(f"universe {self.name!r}: negative size {self.size}")
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise InputError(
                    f"universe {self.name!r}: {len(self.labels)} labels for size {self.size}"
                )
            if len(set(self.labels)) != self.size:
                raise InputError(f"universe {self.name!r}: labels are not pairwise distinct")

    def label_of(self, index: int) -> Label:
        self.check_index(index)
        return self.labels[index] if self.labels is not None else index

    def check_index(self, index: int) -> None:
        if not 0 <= index < self.size:
            raise InputError(f"index {index} out of range for universe {self.name!r} of size {self.size}")


def pair_universe(u: Universe) -> Universe:
    """The universe of ordered pairs of u, indexed row-major: (i,j) <-> i*size+j."""
    if u.size > MAX_PAIR_BASE:
        raise CapacityError(
            f"pair universe over {u.name!r} needs {u.size}^2 indices; base cap is {MAX_PAIR_BASE}"
        )
    return Universe(name=f"{u.name}^2", size=u.size * u.size)


def pair_encode(base_size: int, i: int, j: int) -> int:
    if not (0 <= i < base_size and 0 <= j < base_size):
        raise InputError(f"pair ({i},{j}) out of range for base size {base_size}")
    return i * base_size + j


def pair_decode(base_size: int, p: int) -> tuple[int, int]:
    if not 0 <= p < base_size * base_size:
        raise InputError(f"pair index {p} out of range for base size {base_size}")
    return divmod(p, base_size)


def _iter_bits(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


@dataclass(frozen=True)
class Subset:
    """A subset of a universe as a bit vector (bit i set iff element i is in)."""

    universe: Universe
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.universe.size:
            raise InputError(f"subset bits out of range for universe {self.universe.name!r}")

    @staticmethod
    def from_indices(universe: Universe, indices: Iterable[int]) -> "Subset":
        bits = 0
        for i in indices:
            universe.check_index(i)
            bits |= 1 << i
        return Subset(universe, bits)

    @staticmethod
    def full(universe: Universe) -> "Subset":
        return Subset(universe, (1 << universe.size) - 1)

    @staticmethod
    def empty(universe: Universe) -> "Subset":
        return Subset(universe, 0)

    def cardinality(self) -> int:
        return self.bits.bit_count()

    def members(self) -> Iterator[int]:
        return _iter_bits(self.bits)

    def contains(self, index: int) -> bool:
        self.universe.check_index(index)
        return bool(self.bits >> index & 1)

    def complement(self) -> "Subset":
        return Subset(self.universe, ~self.bits & (1 << self.universe.size) - 1)

    def __len__(self) -> int:
        return self.cardinality()


class FiniteRelation2:
    """A bipartite relation E ⊆ U×V backed by a dense bit matrix.

    rows[i] is the fiber E_i as a bit vector over V.  Column fibers are
    derived on demand and cached.
    """

    __slots__ = ("u", "v", "rows", "edge_count", "_cols")

    def __init__(self, u: Universe, v: Universe, rows: Sequence[int]):
        if len(rows) != u.size:
            raise InputError(f"relation rows ({len(rows)}) do not match |{u.name}| = {u.size}")
        mask = (1 << v.size) - 1
        for i, row in enumerate(rows):
            if row < 0 or row & ~mask:
                raise InputError(f"row {i} has bits outside universe {v.name!r}")
        self.u = u
        self.v = v
        self.rows = tuple(rows)
        self.edge_count = sum(row.bit_count() for row in self.rows)
        self._cols: Optional[tuple[int, ...]] = None

    def columns(self) -> tuple[int, ...]:
        cols = self._cols
        if cols is None:
            built = [0] * self.v.size
            for i, row in enumerate(self.rows):
                bit = 1 << i
                for j in _iter_bits(row):
                    built[j] |= bit
            cols = tuple(built)
            self._cols = cols
        return cols

    def edges(self) -> Iterator[tuple[int, int]]:
        for i, row in enumerate(self.rows):
            for j in _iter_bits(row):
                yield (i, j)

    def restrict_rows(self, a: Subset) -> Iterator[tuple[int, int]]:
        for i in a.members():
            yield i, self.rows[i]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteRelation2)
            and self.u == other.u
            and self.v == other.v
            and self.rows == other.rows
        )

    def __repr__(self) -> str:
        return f"FiniteRelation2({self.u.name}:{self.u.size} x {self.v.name}:{self.v.size}, {self.edge_count} edges)"


class FiniteRelation3:
    """A ternary relation F ⊆ X×Y×Z as a deduplicated sorted triple list.

    Fiber maps for the three coordinate pairings are built on first use:
    xy -> sorted z list, xz -> sorted y list, yz -> sorted x list.
    """

    __slots__ = ("x", "y", "z", "triples", "_by_xy", "_by_xz", "_by_yz")

    def __init__(self, x: Universe, y: Universe, z: Universe, triples: Iterable[tuple[int, int, int]]):
        dedup = set()
        for t in triples:
            i, j, k = t
            x.check_index(i)
            y.check_index(j)
            z.check_index(k)
            dedup.add((i, j, k))
        self.x = x
        self.y = y
        self.z = z
        self.triples = tuple(sorted(dedup))
        self._by_xy = None
        self._by_xz = None
        self._by_yz = None

    def __len__(self) -> int:
        return len(self.triples)

    def _pairing(self, which: str) -> dict:
        cached = getattr(self, "_by_" + which)
        if cached is not None:
            return cached
        built: dict = {}
        if which == "xy":
            for i, j, k in self.triples:
                built.setdefault((i, j), []).append(k)
        elif which == "xz":
            for i, j, k in self.triples:
                built.setdefault((i, k), []).append(j)
        else:
            for i, j, k in self.triples:
                built.setdefault((j, k), []).append(i)
        setattr(self, "_by_" + which, built)
        return built

    def by_xy(self) -> dict:
        return self._pairing("xy")

    def by_xz(self) -> dict:
        return self._pairing("xz")

    def by_yz(self) -> dict:
        return self._pairing("yz")

    def group_by_x(self) -> dict[int, list[tuple[int, int]]]:
        groups: dict[int, list[tuple[int, int]]] = {}
        for i, j, k in self.triples:
            groups.setdefault(i, []).append((j, k))
        return groups

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteRelation3)
            and (self.x, self.y, self.z) == (other.x, other.y, other.z)
            and self.triples == other.triples
        )

    def __repr__(self) -> str:
        return (
            f"FiniteRelation3({self.x.name}:{self.x.size} x {self.y.name}:{self.y.size}"
            f" x {self.z.name}:{self.z.size}, {len(self.triples)} triples)"
        )


def build_relation2(u: Universe, v: Universe, pairs: Iterable[tuple[int, int]]) -> FiniteRelation2:
    """Build E ⊆ U×V from index pairs; duplicates collapse, bad indices raise."""
    rows = [0] * u.size
    for pair in pairs:
        i, j = pair
        if not 0 <= i < u.size or not 0 <= j < v.size:
            raise InputError(f"pair {(i, j)} out of range for {u.size} x {v.size}")
        rows[i] |= 1 << j
    return FiniteRelation2(u, v, rows)


def build_relation3(
    x: Universe, y: Universe, z: Universe, triples: Iterable[tuple[int, int, int]]
) -> FiniteRelation3:
    """Build F ⊆ X×Y×Z from index triples; duplicates collapse, bad indices raise."""
    checked = []
    for t in triples:
        i, j, k = t
        if not 0 <= i < x.size or not 0 <= j < y.size or not 0 <= k < z.size:
            raise InputError(f"triple {(i, j, k)} out of range for {x.size} x {y.size} x {z.size}")
        checked.append((i, j, k))
    return FiniteRelation3(x, y, z, checked)


def fiber2(rel: FiniteRelation2, side: str, index: int) -> Subset:
    """The fiber E_a = {b : (a,b) ∈ E} (side='left') or E_b (side='right')."""
    if side == "left":
        rel.u.check_index(index)
        return Subset(rel.v, rel.rows[index])
    if side == "right":
        rel.v.check_index(index)
        return Subset(rel.u, rel.columns()[index])
    raise InputError(f"side must be 'left' or 'right', not {side!r}")


def _check_universe(sub: Subset, universe: Universe, what: str) -> None:
    if sub.universe != universe:
        raise InputError(f"{what}: subset over {sub.universe.name!r} does not match {universe.name!r}")


def count_grid2(rel: FiniteRelation2, a: Subset, b: Subset) -> int:
    """Exact |E ∩ A×B|."""
    _check_universe(a, rel.u, "count_grid2")
    _check_universe(b, rel.v, "count_grid2")
    bbits = b.bits
    return sum((rel.rows[i] & bbits).bit_count() for i in a.members())


def count_grid3(rel: FiniteRelation3, a: Subset, b: Subset, c: Subset) -> int:
    """Exact |F ∩ A×B×C|."""
    _check_universe(a, rel.x, "count_grid3")
    _check_universe(b, rel.y, "count_grid3")
    _check_universe(c, rel.z, "count_grid3")
    abits, bbits, cbits = a.bits, b.bits, c.bits
    return sum(
        1
        for i, j, k in rel.triples
        if abits >> i & 1 and bbits >> j & 1 and cbits >> k & 1
    )


# --- relation file format -------------------------------------------------
#
# One JSON object per file:
#   {"kind": "rel2"|"rel3",
#    "universes": [{"name":..., "size":..., "labels": [...]?}, ...],
#    "pairs": [[i,j],...]  or  "triples": [[i,j,k],...]}
# Indices, never labels.  Readers reject out-of-range indices.


def _universe_to_obj(u: Universe) -> dict:
    obj: dict = {"name": u.name, "size": u.size}
    if u.labels is not None:
        obj["labels"] = list(u.labels)
    return obj


def _universe_from_obj(obj: dict) -> Universe:
    try:
        name = obj["name"]
        size = obj["size"]
    except KeyError as exc:
        raise InputError(f"universe object missing field {exc}") from None
    labels = obj.get("labels")
    return Universe(name=name, size=size, labels=tuple(labels) if labels is not None else None)


def relation_to_obj(rel: Union[FiniteRelation2, FiniteRelation3]) -> dict:
    if isinstance(rel, FiniteRelation2):
        return {
            "kind": "rel2",
            "universes": [_universe_to_obj(rel.u), _universe_to_obj(rel.v)],
            "pairs": [[i, j] for i, j in rel.edges()],
        }
    return {
        "kind": "rel3",
        "universes": [_universe_to_obj(rel.x), _universe_to_obj(rel.y), _universe_to_obj(rel.z)],
        "triples": [list(t) for t in rel.triples],
    }


def relation_from_obj(obj: dict) -> Union[FiniteRelation2, FiniteRelation3]:
    kind = obj.get("kind")
    if kind == "rel2":
        universes = obj.get("universes", [])
        if len(universes) != 2:
            raise InputError("rel2 file needs exactly 2 universes")
        u, v = (_universe_from_obj(o) for o in universes)
        return build_relation2(u, v, [tuple(p) for p in obj.get("pairs", [])])
    if kind == "rel3":
        universes = obj.get("universes", [])
        if len(universes) != 3:
            raise InputError("rel3 file needs exactly 3 universes")
        x, y, z = (_universe_from_obj(o) for o in universes)
        return build_relation3(x, y, z, [tuple(t) for t in obj.get("triples", [])])
    raise InputError(f"unknown relation kind {kind!r}")


def write_relation(path: str, rel: Union[FiniteRelation2, FiniteRelation3]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(relation_to_obj(rel), fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def read_relation(path: str) -> Union[FiniteRelation2, FiniteRelation3]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return relation_from_obj(obj)
