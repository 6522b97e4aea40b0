"""Karel program syntax: AST, tokenization, parsing and emission.

Programs are a single ``def main ( ) :`` followed by one statement.
Statements are actions, sequences joined by ``;``, conditionals, ``while``
loops and ``repeat`` loops with a constant trip count in 0..19. Conditions
are four sensor predicates, optionally wrapped in ``not``.

``emit_tokens`` produces a canonical form: compound bodies are always braced
``{ ... }``, sequence chains are emitted flat, and the top-level statement is
unbraced. The parser also accepts an unbraced single-statement body, and it
nests sequences to the right, so ``parse_program(emit_tokens(p)) == p`` for
any program built from right-nested sequences (everything this package
samples or parses).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ACTIONS = ("move", "turnLeft", "turnRight", "pickMarker", "putMarker")
PREDICATES = ("frontIsClear", "leftIsClear", "rightIsClear", "markersPresent")
MAX_REPEAT = 19


@dataclass(frozen=True)
class Pred:
    name: str

    def __post_init__(self) -> None:
        if self.name not in PREDICATES:
            raise ValueError(f"unknown predicate {self.name!r}")


@dataclass(frozen=True)
class Not:
    cond: "Cond"


Cond = Pred | Not


@dataclass(frozen=True)
class Action:
    name: str

    def __post_init__(self) -> None:
        if self.name not in ACTIONS:
            raise ValueError(f"unknown action {self.name!r}")


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    rest: "Stmt"


@dataclass(frozen=True)
class If:
    cond: Cond
    body: "Stmt"


@dataclass(frozen=True)
class IfElse:
    cond: Cond
    then_body: "Stmt"
    else_body: "Stmt"


@dataclass(frozen=True)
class While:
    cond: Cond
    body: "Stmt"


@dataclass(frozen=True)
class Repeat:
    times: int
    body: "Stmt"

    def __post_init__(self) -> None:
        if not (isinstance(self.times, int) and 0 <= self.times <= MAX_REPEAT):
            raise ValueError(f"repeat count must be in 0..{MAX_REPEAT}")


Stmt = Action | Seq | If | IfElse | While | Repeat


@dataclass(frozen=True)
class KarelProgram:
    body: Stmt


class KarelSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at {position}")
        self.position = position


_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*|\d+|[(){}:;]|\S")


def _lex(text: str) -> list[tuple[str, int]]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*|\d+|[(){}:;]", tok):
            raise KarelSyntaxError(f"unexpected character {tok!r}", m.start())
        tokens.append((tok, m.start()))
    return tokens


def emit_tokens(program: KarelProgram) -> list[str]:
    """Canonical token sequence for the program."""
    out = ["def", "main", "(", ")", ":"]
    _emit_stmt(program.body, out)
    return out


def program_to_text(program: KarelProgram) -> str:
    return " ".join(emit_tokens(program))


def _emit_stmt(stmt: Stmt, out: list[str]) -> None:
    match stmt:
        case Action(name=name):
            out += [name, "(", ")"]
        case Seq(first=first, rest=rest):
            _emit_stmt(first, out)
            out.append(";")
            _emit_stmt(rest, out)
        case If(cond=cond, body=body):
            out += ["if", "("]
            _emit_cond(cond, out)
            out += [")", ":"]
            _emit_block(body, out)
        case IfElse(cond=cond, then_body=then_body, else_body=else_body):
            out += ["if", "("]
            _emit_cond(cond, out)
            out += [")", ":"]
            _emit_block(then_body, out)
            out += ["else", ":"]
            _emit_block(else_body, out)
        case While(cond=cond, body=body):
            out += ["while", "("]
            _emit_cond(cond, out)
            out += [")", ":"]
            _emit_block(body, out)
        case Repeat(times=times, body=body):
            out += ["repeat", "(", str(times), ")", ":"]
            _emit_block(body, out)
        case _:
            raise TypeError(f"not a statement: {stmt!r}")


def _emit_block(stmt: Stmt, out: list[str]) -> None:
    out.append("{")
    _emit_stmt(stmt, out)
    out.append("}")


def _emit_cond(cond: Cond, out: list[str]) -> None:
    match cond:
        case Pred(name=name):
            out += [name, "(", ")"]
        case Not(cond=inner):
            out += ["not", "("]
            _emit_cond(inner, out)
            out.append(")")
        case _:
            raise TypeError(f"not a condition: {cond!r}")


class _Parser:
    def __init__(self, tokens: list[tuple[str, int]]):
        self.tokens = tokens
        self.index = 0

    def peek(self) -> str | None:
        return self.tokens[self.index][0] if self.index < len(self.tokens) else None

    def here(self) -> int:
        if self.index < len(self.tokens):
            return self.tokens[self.index][1]
        return self.tokens[-1][1] + 1 if self.tokens else 0

    def advance(self) -> str:
        tok = self.peek()
        if tok is None:
            raise KarelSyntaxError("unexpected end of program", self.here())
        self.index += 1
        return tok

    def expect(self, wanted: str) -> None:
        tok = self.peek()
        if tok != wanted:
            found = "end of program" if tok is None else repr(tok)
            raise KarelSyntaxError(f"expected {wanted!r}, found {found}", self.here())
        self.index += 1

    def program(self) -> KarelProgram:
        for tok in ("def", "main", "(", ")", ":"):
            self.expect(tok)
        body = self.stmt_seq()
        if self.peek() is not None:
            raise KarelSyntaxError(f"unexpected token {self.peek()!r}", self.here())
        return KarelProgram(body)

    def stmt_seq(self) -> Stmt:
        stmts = [self.stmt()]
        while self.peek() == ";":
            self.index += 1
            stmts.append(self.stmt())
        node = stmts[-1]
        for s in reversed(stmts[:-1]):
            node = Seq(s, node)
        return node

    def stmt(self) -> Stmt:
        tok = self.peek()
        if tok in ACTIONS:
            self.index += 1
            self.expect("(")
            self.expect(")")
            return Action(tok)
        if tok == "while":
            self.index += 1
            self.expect("(")
            cond = self.cond()
            self.expect(")")
            self.expect(":")
            return While(cond, self.body())
        if tok == "repeat":
            self.index += 1
            self.expect("(")
            times = self.repeat_count()
            self.expect(")")
            self.expect(":")
            return Repeat(times, self.body())
        if tok == "if":
            self.index += 1
            self.expect("(")
            cond = self.cond()
            self.expect(")")
            self.expect(":")
            then_body = self.body()
            if self.peek() == "else":
                self.index += 1
                self.expect(":")
                return IfElse(cond, then_body, self.body())
            return If(cond, then_body)
        found = "end of program" if tok is None else repr(tok)
        raise KarelSyntaxError(f"expected a statement, found {found}", self.here())

    def body(self) -> Stmt:
        # Braced bodies may hold a sequence; an unbraced body is one statement.
        if self.peek() == "{":
            self.index += 1
            inner = self.stmt_seq()
            self.expect("}")
            return inner
        return self.stmt()

    def repeat_count(self) -> int:
        pos = self.here()
        tok = self.advance()
        if not tok.isdigit():
            raise KarelSyntaxError(f"expected a repeat count, found {tok!r}", pos)
        times = int(tok)
        if times > MAX_REPEAT:
            raise KarelSyntaxError(f"repeat count must be in 0..{MAX_REPEAT}", pos)
        return times

    def cond(self) -> Cond:
        tok = self.peek()
        if tok == "not":
            self.index += 1
            self.expect("(")
            inner = self.cond()
            self.expect(")")
            return Not(inner)
        if tok in PREDICATES:
            self.index += 1
            self.expect("(")
            self.expect(")")
            return Pred(tok)
        found = "end of program" if tok is None else repr(tok)
        raise KarelSyntaxError(f"expected a condition, found {found}", self.here())


def parse_program(text: str | list[str] | tuple[str, ...]) -> KarelProgram:
    """Parse program text or a pre-tokenized sequence.

    Errors carry a character offset for text input and a token index for
    token input.
    """
    if isinstance(text, str):
        tokens = _lex(text)
    else:
        tokens = [(tok, i) for i, tok in enumerate(text)]
    return _Parser(tokens).program()


def program_salients(program: KarelProgram) -> dict[str, int]:
    """Size in tokens, control-flow node count, and control-flow nesting depth."""
    return {
        "size": len(emit_tokens(program)),
        "control_flow_count": _count_control(program.body),
        "nesting_depth": _control_depth(program.body),
    }


def _count_control(stmt: Stmt) -> int:
    match stmt:
        case Action():
            return 0
        case Seq(first=first, rest=rest):
            return _count_control(first) + _count_control(rest)
        case If(body=body) | While(body=body) | Repeat(body=body):
            return 1 + _count_control(body)
        case IfElse(then_body=then_body, else_body=else_body):
            return 1 + _count_control(then_body) + _count_control(else_body)
    raise TypeError(f"not a statement: {stmt!r}")


def _control_depth(stmt: Stmt) -> int:
    match stmt:
        case Action():
            return 0
        case Seq(first=first, rest=rest):
            return max(_control_depth(first), _control_depth(rest))
        case If(body=body) | While(body=body) | Repeat(body=body):
            return 1 + _control_depth(body)
        case IfElse(then_body=then_body, else_body=else_body):
            return 1 + max(_control_depth(then_body), _control_depth(else_body))
    raise TypeError(f"not a statement: {stmt!r}")
