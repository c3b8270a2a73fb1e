"""Guard, update and query-predicate expressions.

Predicate grammar (lowest precedence first)::

    expr    := or ( ("imply" | "->") expr )?
    or      := and ( ("||" | "or") and )*
    and     := unary ( ("&&" | "and") unary )*
    unary   := ("!" | "not") unary | primary
    primary := "(" expr ")" | "true" | "false" | "deadlock"
             | NAME                      # location test, Automaton.Location
             | NAME CMP (INT | NAME)     # clock or variable comparison

Updates are comma-separated ``name := value`` items where value is an
integer, a name, or ``name +/- integer``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

CMP_OPS = ("<=", ">=", "==", "!=", "<", ">")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)"
    r"|(?P<op><=|>=|==|!=|:=|&&|\|\||->|[<>!()=+\-,]))"
)

_KEYWORDS = {"and", "or", "not", "imply", "true", "false", "deadlock"}


class ExprError(ValueError):
    pass


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos:].strip()[:1]!r} in {text!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Deadlock:
    pass


@dataclass(frozen=True)
class AtLocation:
    automaton: str
    location: str


@dataclass(frozen=True)
class Compare:
    name: str
    op: str
    value: Union[int, str]


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Imply:
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Deadlock, AtLocation, Compare, Not, And, Or, Imply]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Optional[tuple[str, str]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def accept(self, *values: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[1] in values:
            self.i += 1
            return True
        return False

    def expect_end(self) -> None:
        if self.peek() is not None:
            raise ExprError(f"unexpected {self.peek()[1]!r} in {self.text!r}")

    def expr(self) -> Expr:
        left = self.or_()
        if self.accept("imply", "->"):
            return Imply(left, self.expr())
        return left

    def or_(self) -> Expr:
        args = [self.and_()]
        while self.accept("||", "or"):
            args.append(self.and_())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def and_(self) -> Expr:
        args = [self.unary()]
        while self.accept("&&", "and"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Expr:
        if self.accept("!", "not"):
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ExprError(f"unexpected end of {self.text!r}")
        if self.accept("("):
            inner = self.expr()
            if not self.accept(")"):
                raise ExprError(f"missing ')' in {self.text!r}")
            return inner
        if self.accept("true"):
            return Const(True)
        if self.accept("false"):
            return Const(False)
        if self.accept("deadlock"):
            return Deadlock()
        kind, value = tok
        if kind != "name" or value in _KEYWORDS:
            raise ExprError(f"unexpected {value!r} in {self.text!r}")
        self.i += 1
        nxt = self.peek()
        if nxt is not None and nxt[1] in CMP_OPS:
            self.i += 1
            sign = -1 if self.accept("-") else 1
            rhs = self.peek()
            if rhs is None or rhs[0] not in ("num", "name") or (sign < 0 and rhs[0] != "num"):
                raise ExprError(f"comparison needs a value in {self.text!r}")
            self.i += 1
            return Compare(value, nxt[1], sign * int(rhs[1]) if rhs[0] == "num" else rhs[1])
        if "." in value:
            aut, loc = value.split(".", 1)
            return AtLocation(aut, loc)
        raise ExprError(f"bare name {value!r} is neither a location nor a comparison")


def parse_expr(text: str) -> Expr:
    if not text or not text.strip():
        return Const(True)
    p = _Parser(text)
    result = p.expr()
    p.expect_end()
    return result


def conjuncts(expr: Expr) -> list[Expr]:
    if isinstance(expr, Const) and expr.value:
        return []
    if isinstance(expr, And):
        out: list[Expr] = []
        for arg in expr.args:
            out.extend(conjuncts(arg))
        return out
    return [expr]


@dataclass(frozen=True)
class Assignment:
    target: str
    source: Optional[str]  # variable read, or None for a constant
    offset: Union[int, str]  # integer or named constant


def parse_update(text: str) -> list[Assignment]:
    if not text or not text.strip():
        return []
    out = []
    tokens = tokenize(text)
    i = 0

    def take() -> tuple[str, str]:
        nonlocal i
        if i >= len(tokens):
            raise ExprError(f"unexpected end of update {text!r}")
        tok = tokens[i]
        i += 1
        return tok

    while i < len(tokens):
        kind, target = take()
        if kind != "name":
            raise ExprError(f"update target expected in {text!r}")
        op = take()[1]
        if op not in (":=", "="):
            raise ExprError(f"':=' expected in {text!r}")
        kind, value = take()
        if value == "-":
            kind, value = take()
            if kind != "num":
                raise ExprError(f"integer expected after '-' in {text!r}")
            value = "-" + value
        if kind == "num":
            out.append(Assignment(target, None, int(value)))
        elif kind == "name":
            if i < len(tokens) and tokens[i][1] in ("+", "-"):
                sign = -1 if take()[1] == "-" else 1
                k2, v2 = take()
                if k2 != "num":
                    raise ExprError(f"integer expected after '+'/'-' in {text!r}")
                out.append(Assignment(target, value, sign * int(v2)))
            else:
                # either a named constant or a variable copy, resolved later
                out.append(Assignment(target, value, 0))
        else:
            raise ExprError(f"bad value {value!r} in {text!r}")
        if i < len(tokens):
            if take()[1] != ",":
                raise ExprError(f"',' expected between updates in {text!r}")
    return out


def parse_sync(text: Optional[str]) -> Optional[tuple[str, str]]:
    if text is None or not str(text).strip():
        return None
    text = str(text).strip()
    if text[-1] not in "!?" or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*[!?]", text):
        raise ExprError(f"sync must look like 'chan!' or 'chan?', got {text!r}")
    return text[:-1], text[-1]
