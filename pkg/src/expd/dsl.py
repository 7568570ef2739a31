"""Polynomial relation definitions over ℤ, ℤ/m, or a prime field.

Grammar (whitespace-insensitive):

    expr   := poly "=" poly ["mod" int]
    poly   := term (("+"|"-") term)*
    term   := factor ("*" factor)*
    factor := atom ["^" uint]
    atom   := var | int | "(" poly ")"

Ternary definitions use variables {x, y, z}; binary ones use {y, z}.
Evaluation is exact arbitrary-precision integer arithmetic, reduced mod m
when a modulus is declared.  Instantiation on grids produces FiniteRelation3
or FiniteRelation2 instances with grid values as element labels.

Grid mini-syntax (CLI):  range:lo:hi:step (half-open, like Python range),
geom:base:count, list:v1,v2,..., rand:count:lo:hi (distinct, seeded),
fullmod (all residues 0..m-1; needs a declared modulus).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Union

from .errors import InputError, SyntaxError_
from .relations import FiniteRelation2, FiniteRelation3, Universe, build_relation2, build_relation3

# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Var, Const, BinOp, Pow]


@dataclass(frozen=True)
class RelationExpr:
    """A top-level definition lhs = rhs [mod m] over a declared variable set."""

    lhs: Node
    rhs: Node
    modulus: Optional[int]
    variables: tuple[str, ...]

    def holds(self, env: dict[str, int]) -> bool:
        diff = eval_node(self.lhs, env) - eval_node(self.rhs, env)
        if self.modulus is not None:
            return diff % self.modulus == 0
        return diff == 0


def eval_node(node: Node, env: dict[str, int]) -> int:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Pow):
        return eval_node(node.base, env) ** node.exponent
    a = eval_node(node.left, env)
    b = eval_node(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    return a * b


def variables_in(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Pow):
        return variables_in(node.base)
    return variables_in(node.left) | variables_in(node.right)


# --- tokenizer / parser ----------------------------------------------------

TERNARY_VARS = ("x", "y", "z")
BINARY_VARS = ("y", "z")

_PUNCT = set("+-*^()=")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'int' | 'name' | punct character | 'end'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, line, col))
            col += 1
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise SyntaxError_(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], variables: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> None:
        tok = self.peek()
        raise SyntaxError_(message, tok.line, tok.col)

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}, found {tok.text or 'end of input'!r}")
        return self.advance()

    def parse_expr(self) -> RelationExpr:
        lhs = self.parse_poly()
        self.expect("=")
        rhs = self.parse_poly()
        modulus = None
        tok = self.peek()
        if tok.kind == "name" and tok.text == "mod":
            self.advance()
            m_tok = self.expect("int")
            modulus = int(m_tok.text)
            if modulus < 2:
                raise SyntaxError_(f"modulus must be >= 2, got {modulus}", m_tok.line, m_tok.col)
        if self.peek().kind != "end":
            self.fail(f"unexpected trailing input {self.peek().text!r}")
        return RelationExpr(lhs=lhs, rhs=rhs, modulus=modulus, variables=self.variables)

    def parse_poly(self) -> Node:
        node = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while self.peek().kind == "*":
            self.advance()
            node = BinOp("*", node, self.parse_factor())
        return node

    def parse_factor(self) -> Node:
        atom = self.parse_atom()
        if self.peek().kind == "^":
            self.advance()
            tok = self.peek()
            if tok.kind == "-":
                raise SyntaxError_("exponent must be a nonnegative integer", tok.line, tok.col)
            exp_tok = self.expect("int")
            return Pow(atom, int(exp_tok.text))
        return atom

    def parse_atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return Const(int(tok.text))
        if tok.kind == "name":
            if tok.text in self.variables:
                self.advance()
                return Var(tok.text)
            raise SyntaxError_(
                f"unknown variable {tok.text!r} (declared: {', '.join(self.variables)})",
                tok.line,
                tok.col,
            )
        if tok.kind == "(":
            self.advance()
            node = self.parse_poly()
            self.expect(")")
            return node
        self.fail(f"expected a variable, integer or '(', found {tok.text or 'end of input'!r}")


def parse(expr_text: str, variables: tuple[str, ...] = TERNARY_VARS) -> RelationExpr:
    """Parse a relation definition; errors carry line and column."""
    return _Parser(_tokenize(expr_text), tuple(variables)).parse_expr()


# --- canonical printer -----------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2}


def _print_node(node: Node, parent_prec: int) -> str:
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Pow):
        if isinstance(node.base, (Var, Const)):
            return f"{_print_node(node.base, 0)}^{node.exponent}"
        return f"({_print_node(node.base, 0)})^{node.exponent}"
    prec = _PREC[node.op]
    # chains associate left; a right child of equal precedence keeps parens
    # so the reparse reproduces the tree
    left = _print_node(node.left, prec)
    right = _print_node(node.right, prec + 1)
    sep = f" {node.op} " if node.op in "+-" else node.op
    text = f"{left}{sep}{right}"
    return f"({text})" if prec < parent_prec else text


def to_text(expr: RelationExpr) -> str:
    """Canonical form; parse(to_text(parse(s))) == parse(s)."""
    out = f"{_print_node(expr.lhs, 0)} = {_print_node(expr.rhs, 0)}"
    if expr.modulus is not None:
        out += f" mod {expr.modulus}"
    return out


# --- grids -------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """One coordinate grid: range / geometric / explicit / random / full_mod."""

    kind: str
    lo: int = 0
    hi: int = 0
    step: int = 1
    base: int = 2
    count: int = 0
    values: tuple[int, ...] = ()
    seed: Optional[int] = None

    @staticmethod
    def range_(lo: int, hi: int, step: int = 1) -> "GridSpec":
        return GridSpec(kind="range", lo=lo, hi=hi, step=step)

    @staticmethod
    def geometric(base: int, count: int) -> "GridSpec":
        return GridSpec(kind="geometric", base=base, count=count)

    @staticmethod
    def explicit(values) -> "GridSpec":
        return GridSpec(kind="explicit", values=tuple(values))

    @staticmethod
    def random_(seed: int, count: int, lo: int, hi: int) -> "GridSpec":
        return GridSpec(kind="random", seed=seed, count=count, lo=lo, hi=hi)

    @staticmethod
    def full_mod() -> "GridSpec":
        return GridSpec(kind="full_mod")

    def resolve(self, modulus: Optional[int] = None) -> list[int]:
        """Materialize the grid values; always pairwise distinct."""
        if self.kind == "range":
            if self.step == 0:
                raise InputError("grid range step must be nonzero")
            return list(range(self.lo, self.hi, self.step))
        if self.kind == "geometric":
            if self.base < 2:
                raise InputError(f"geometric grid base must be >= 2, got {self.base}")
            return [self.base**i for i in range(self.count)]
        if self.kind == "explicit":
            values = list(self.values)
            if len(set(values)) != len(values):
                raise InputError("explicit grid values must be pairwise distinct")
            return values
        if self.kind == "random":
            if self.seed is None:
                raise InputError("random grid needs a seed")
            span = self.hi - self.lo + 1
            if span < self.count:
                raise InputError(
                    f"cannot draw {self.count} distinct values from [{self.lo}, {self.hi}]"
                )
            rng = random.Random(self.seed)
            return rng.sample(range(self.lo, self.hi + 1), self.count)
        if self.kind == "full_mod":
            if modulus is None:
                raise InputError("full_mod grid requires an expression with a declared modulus")
            return list(range(modulus))
        raise InputError(f"unknown grid kind {self.kind!r}")


def parse_grid(text: str, seed: Optional[int] = None) -> GridSpec:
    """Parse the CLI grid mini-syntax."""
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "range" and len(parts) == 4:
            return GridSpec.range_(int(parts[1]), int(parts[2]), int(parts[3]))
        if kind == "geom" and len(parts) == 3:
            return GridSpec.geometric(int(parts[1]), int(parts[2]))
        if kind == "list" and len(parts) == 2:
            return GridSpec.explicit(int(v) for v in parts[1].split(","))
        if kind == "rand" and len(parts) == 4:
            if seed is None:
                raise InputError("rand:... grid requires --seed")
            return GridSpec.random_(seed, int(parts[1]), int(parts[2]), int(parts[3]))
        if kind == "fullmod" and len(parts) == 1:
            return GridSpec.full_mod()
    except ValueError as exc:
        raise InputError(f"bad grid spec {text!r}: {exc}") from None
    raise InputError(f"bad grid spec {text!r}")


# --- instantiation -----------------------------------------------------------


def _solved_variable(expr: RelationExpr) -> Optional[str]:
    """Name of a variable isolated on one side and absent from the other."""
    for side, other in ((expr.lhs, expr.rhs), (expr.rhs, expr.lhs)):
        if isinstance(side, Var) and side.name not in variables_in(other):
            return side.name
    return None


def _value_index(values: list[int], modulus: Optional[int]) -> dict[int, list[int]]:
    index: dict[int, list[int]] = {}
    for i, v in enumerate(values):
        key = v % modulus if modulus is not None else v
        index.setdefault(key, []).append(i)
    return index


def _check_grids(expr: RelationExpr, names: tuple[str, ...], grids) -> list[list[int]]:
    resolved = []
    for name, grid in zip(names, grids):
        values = grid.resolve(expr.modulus)
        if not values:
            raise InputError(f"grid for {name} is empty")
        resolved.append(values)
    return resolved


def instantiate3(
    expr: RelationExpr, gx: GridSpec, gy: GridSpec, gz: GridSpec
) -> tuple[FiniteRelation3, dict[str, list[int]]]:
    """All (i,j,k) with the definition true at the labeled grid values."""
    if tuple(expr.variables) != TERNARY_VARS:
        raise InputError("instantiate3 needs an expression over variables x, y, z")
    vx, vy, vz = _check_grids(expr, TERNARY_VARS, (gx, gy, gz))
    ux = Universe("X", len(vx), tuple(vx))
    uy = Universe("Y", len(vy), tuple(vy))
    uz = Universe("Z", len(vz), tuple(vz))
    solved = _solved_variable(expr)
    triples: list[tuple[int, int, int]] = []
    if solved is not None:
        # One side is a bare variable: evaluate the other side on the
        # remaining grid square and look the value up.
        order = {"x": (vy, vz, "y", "z"), "y": (vx, vz, "x", "z"), "z": (vx, vy, "x", "y")}
        g1, g2, n1, n2 = order[solved]
        target = {"x": vx, "y": vy, "z": vz}[solved]
        lookup = _value_index(target, expr.modulus)
        other = expr.rhs if isinstance(expr.lhs, Var) and expr.lhs.name == solved else expr.lhs
        env: dict[str, int] = {}
        for i1, a in enumerate(g1):
            env[n1] = a
            for i2, b in enumerate(g2):
                env[n2] = b
                value = eval_node(other, env)
                key = value % expr.modulus if expr.modulus is not None else value
                for i3 in lookup.get(key, ()):
                    idx = {n1: i1, n2: i2, solved: i3}
                    triples.append((idx["x"], idx["y"], idx["z"]))
    else:
        holds = expr.holds
        for i, a in enumerate(vx):
            for j, b in enumerate(vy):
                for k, c in enumerate(vz):
                    if holds({"x": a, "y": b, "z": c}):
                        triples.append((i, j, k))
    rel = build_relation3(ux, uy, uz, triples)
    return rel, {"x": vx, "y": vy, "z": vz}


def instantiate2(expr: RelationExpr, gy: GridSpec, gz: GridSpec) -> FiniteRelation2:
    """All (j,k) with the binary definition true at the labeled grid values."""
    if tuple(expr.variables) != BINARY_VARS:
        raise InputError("instantiate2 needs an expression over variables y, z")
    vy, vz = _check_grids(expr, BINARY_VARS, (gy, gz))
    uy = Universe("Y", len(vy), tuple(vy))
    uz = Universe("Z", len(vz), tuple(vz))
    pairs = []
    holds = expr.holds
    for j, b in enumerate(vy):
        for k, c in enumerate(vz):
            if holds({"y": b, "z": c}):
                pairs.append((j, k))
    return build_relation2(uy, uz, pairs)
