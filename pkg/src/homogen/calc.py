"""Mod-10 calculator expressions: AST, evaluation, rendering, parsing,
samplers, and salient features of the rendered text.

Expressions are built from single digits and the binary operators ``+``,
``-`` and ``*`` with the usual precedence (``*`` binds tighter; equal
precedence associates left). Every intermediate value is reduced mod 10, so
labels always land in 0..9. ``render`` emits the minimal parenthesisation:
a child is wrapped only when its operator binds looser than its parent's,
or, for the right child, equally loose (which preserves the tree through a
re-parse). ``parse_expr(render(e)) == e`` holds for every expression.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .homogenizer import SalientSpec

OPS = ("+", "-", "*")
_PRECEDENCE = {"+": 1, "-": 1, "*": 2}


@dataclass(frozen=True)
class Digit:
    value: int

    def __post_init__(self) -> None:
        if not (isinstance(self.value, int) and 0 <= self.value <= 9):
            raise ValueError("digit must be an int in 0..9")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "CalcExpr"
    right: "CalcExpr"

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")


CalcExpr = Digit | BinOp


def eval_mod10(expr: CalcExpr) -> int:
    """Value of the expression with every intermediate reduced mod 10."""
    match expr:
        case Digit(value=v):
            return v
        case BinOp(op="+", left=l, right=r):
            return (eval_mod10(l) + eval_mod10(r)) % 10
        case BinOp(op="-", left=l, right=r):
            return (eval_mod10(l) - eval_mod10(r)) % 10
        case BinOp(op="*", left=l, right=r):
            return (eval_mod10(l) * eval_mod10(r)) % 10
    raise TypeError(f"not a calculator expression: {expr!r}")


def render(expr: CalcExpr) -> str:
    """Minimal-parenthesis text for the expression."""
    parts: list[str] = []
    _render(expr, parts)
    return "".join(parts)


def _render(expr: CalcExpr, out: list[str]) -> None:
    if isinstance(expr, Digit):
        out.append(str(expr.value))
        return
    prec = _PRECEDENCE[expr.op]
    _render_child(expr.left, out, needs_parens=_child_prec(expr.left) < prec)
    out.append(expr.op)
    _render_child(expr.right, out, needs_parens=_child_prec(expr.right) <= prec)


def _child_prec(expr: CalcExpr) -> int:
    # Digits never need wrapping; treat them as binding tightest.
    return _PRECEDENCE[expr.op] if isinstance(expr, BinOp) else 3


def _render_child(expr: CalcExpr, out: list[str], needs_parens: bool) -> None:
    if needs_parens:
        out.append("(")
        _render(expr, out)
        out.append(")")
    else:
        _render(expr, out)


class CalcParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str | None:
        return self.text[self.pos] if self.pos < len(self.text) else None

    def sum_expr(self) -> CalcExpr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> CalcExpr:
        node = self.atom()
        while self.peek() == "*":
            self.pos += 1
            node = BinOp("*", node, self.atom())
        return node

    def atom(self) -> CalcExpr:
        ch = self.peek()
        if ch is None:
            raise CalcParseError("unexpected end of input", self.pos)
        if ch.isdigit():
            self.pos += 1
            return Digit(int(ch))
        if ch == "(":
            self.pos += 1
            node = self.sum_expr()
            if self.peek() != ")":
                raise CalcParseError("expected ')'", self.pos)
            self.pos += 1
            return node
        raise CalcParseError(f"unexpected character {ch!r}", self.pos)


def parse_expr(text: str) -> CalcExpr:
    """Parse expression text; raises :class:`CalcParseError` with a position."""
    parser = _Parser(text)
    expr = parser.sum_expr()
    if parser.pos != len(text):
        raise CalcParseError(f"unexpected character {text[parser.pos]!r}", parser.pos)
    return expr


# ---------------------------------------------------------------------------
# Samplers. Each documents its RNG call order so runs are reproducible.


@dataclass(frozen=True)
class Dcfg:
    """Grammar walk: digit with probability 1-p, else an operator node with
    two recursive children. RNG order per node: the branch coin, then either
    the digit value or (operator, left subtree, right subtree). Values of p
    at 0.5 or above make the expected size infinite; the default stays well
    below that.
    """

    p: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")


@dataclass(frozen=True)
class T2t:
    """Exact-depth tree builder. Draws a depth d (uniform over
    1..max_depth unless ``depth`` pins it), then recursively forces a random
    side to depth d-1 while the other side gets an independent depth from
    U{0..d-1}; depth 0 is a digit. RNG order per node: digit value at depth
    0, else (operator, side coin, other-side depth, forced side, other side).
    """

    max_depth: int = 8
    depth: int | None = None

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.depth is not None and self.depth < 0:
            raise ValueError("depth must be >= 0 when pinned")


@dataclass(frozen=True)
class Rcfg:
    """Grammar walk with operator runs: digit with probability 1-p, else an
    operator; ``+`` and ``*`` expand to a run of k children (k drawn from
    ``run_lengths``) combined left-associatively, ``-`` stays binary. RNG
    order per node: the branch coin, then either the digit value or
    (operator, run length when applicable, children left to right).
    """

    p: float = 0.3
    run_lengths: tuple[int, ...] = (2, 3, 4)

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must be in (0, 1)")
        if not self.run_lengths or any(k < 2 for k in self.run_lengths):
            raise ValueError("run lengths must all be >= 2")


@dataclass(frozen=True)
class Bal:
    """Complete binary tree of a depth drawn uniformly from ``depths``;
    every internal node gets an independent uniform operator. RNG order:
    the depth, then nodes in root-left-right order.
    """

    depths: tuple[int, ...] = (1, 2, 3, 4, 5, 6)

    def __post_init__(self) -> None:
        if not self.depths or any(d < 0 for d in self.depths):
            raise ValueError("depths must be non-negative")


CalcSampler = Dcfg | T2t | Rcfg | Bal


def sample_expr(rng: random.Random, sampler: CalcSampler) -> CalcExpr:
    match sampler:
        case Dcfg(p=p):
            return _sample_dcfg(rng, p)
        case T2t(max_depth=max_depth, depth=depth):
            d = depth if depth is not None else rng.randint(1, max_depth)
            return _sample_t2t(rng, d)
        case Rcfg(p=p, run_lengths=runs):
            return _sample_rcfg(rng, p, runs)
        case Bal(depths=depths):
            return _sample_bal(rng, depths[rng.randrange(len(depths))])
    raise TypeError(f"unknown sampler: {sampler!r}")


def _sample_dcfg(rng: random.Random, p: float) -> CalcExpr:
    if rng.random() >= p:
        return Digit(rng.randrange(10))
    op = OPS[rng.randrange(3)]
    left = _sample_dcfg(rng, p)
    right = _sample_dcfg(rng, p)
    return BinOp(op, left, right)


def _sample_t2t(rng: random.Random, depth: int) -> CalcExpr:
    if depth == 0:
        return Digit(rng.randrange(10))
    op = OPS[rng.randrange(3)]
    force_left = rng.random() < 0.5
    other_depth = rng.randrange(depth)
    if force_left:
        return BinOp(op, _sample_t2t(rng, depth - 1), _sample_t2t(rng, other_depth))
    return BinOp(op, _sample_t2t(rng, other_depth), _sample_t2t(rng, depth - 1))


def _sample_rcfg(rng: random.Random, p: float, runs: tuple[int, ...]) -> CalcExpr:
    if rng.random() >= p:
        return Digit(rng.randrange(10))
    op = OPS[rng.randrange(3)]
    if op == "-":
        return BinOp("-", _sample_rcfg(rng, p, runs), _sample_rcfg(rng, p, runs))
    k = runs[rng.randrange(len(runs))]
    node = _sample_rcfg(rng, p, runs)
    for _ in range(k - 1):
        node = BinOp(op, node, _sample_rcfg(rng, p, runs))
    return node


def _sample_bal(rng: random.Random, depth: int) -> CalcExpr:
    if depth == 0:
        return Digit(rng.randrange(10))
    op = OPS[rng.randrange(3)]
    left = _sample_bal(rng, depth - 1)
    right = _sample_bal(rng, depth - 1)
    return BinOp(op, left, right)


def sample_record(rng: random.Random, sampler: CalcSampler) -> dict:
    """One dataset row: rendered expression plus its mod-10 label."""
    expr = sample_expr(rng, sampler)
    return {"expr": render(expr), "label": eval_mod10(expr)}


# ---------------------------------------------------------------------------
# Salient features of the rendered text.

LENGTH_DOMAIN = tuple(range(2, 121, 2))
NUM_OPS_DOMAIN = tuple(range(0, 61))
NUM_PARENS_DOMAIN = tuple(range(0, 31))
MEAN_DEPTH_DOMAIN = tuple(range(0, 41))
MAX_DEPTH_DOMAIN = tuple(range(0, 16))


@dataclass(frozen=True)
class CalcSalients:
    """Features of an expression string, clamped into fixed finite domains.

    ``length_even`` is the character count rounded up to an even number.
    Depths count enclosing parenthesis pairs around each digit;
    ``mean_depth_bin`` is the mean over digits scaled by 4 and rounded.
    """

    length_even: int
    num_ops: int
    num_paren_pairs: int
    mean_depth_bin: int
    max_depth: int


def calc_salients(text: str) -> CalcSalients:
    """Salient features of expression text; malformed text is a parse error."""
    parse_expr(text)
    return _salients_of_text(text)


def _salients_of_text(text: str) -> CalcSalients:
    # Shared with the salient-spec extractors, which skip re-validating
    # strings they just rendered.
    length = len(text)
    length_even = length + (length % 2)
    ops = 0
    parens = 0
    depth = 0
    depth_sum = 0
    max_depth = 0
    digits = 0
    for ch in text:
        if ch == "(":
            parens += 1
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch.isdigit():
            digits += 1
            depth_sum += depth
            if depth > max_depth:
                max_depth = depth
        elif ch in _PRECEDENCE:
            ops += 1
    mean_depth = depth_sum / digits if digits else 0.0
    return CalcSalients(
        length_even=_clamp(length_even, 2, 120),
        num_ops=_clamp(ops, 0, 60),
        num_paren_pairs=_clamp(parens, 0, 30),
        mean_depth_bin=_clamp(int(round(4.0 * mean_depth)), 0, 40),
        max_depth=_clamp(max_depth, 0, 15),
    )


def _clamp(value: int, low: int, high: int) -> int:
    return min(max(value, low), high)


def salient_specs() -> dict[str, SalientSpec]:
    """Named salient variables over rendered expression strings."""
    return {
        "length": SalientSpec(
            "length", LENGTH_DOMAIN, lambda s: _salients_of_text(s).length_even
        ),
        "num_ops": SalientSpec(
            "num_ops", NUM_OPS_DOMAIN, lambda s: _salients_of_text(s).num_ops
        ),
        "num_parens": SalientSpec(
            "num_parens", NUM_PARENS_DOMAIN, lambda s: _salients_of_text(s).num_paren_pairs
        ),
        "mean_depth": SalientSpec(
            "mean_depth", MEAN_DEPTH_DOMAIN, lambda s: _salients_of_text(s).mean_depth_bin
        ),
        "max_depth": SalientSpec(
            "max_depth", MAX_DEPTH_DOMAIN, lambda s: _salients_of_text(s).max_depth
        ),
    }
