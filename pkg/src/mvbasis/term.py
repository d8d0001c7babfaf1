"""First-order terms: construction, parsing, printing, substitution and matching.

Terms are immutable. A term is either a :class:`Var` or an :class:`App`
(an operator applied to a tuple of argument terms). Constants are 0-ary
applications and are written without parentheses, e.g. ``zero``.

Positions are tuples of 0-based argument indices; ``()`` is the root.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class App:
    op: str
    args: tuple = ()

    def __str__(self) -> str:
        return format_term(self)


Term = Var | App
Position = tuple
Substitution = Mapping[str, Term]


class TermError(ValueError):
    """Base class for malformed term input."""


class TermSyntaxError(TermError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{msg} at offset {pos}")


class ArityError(TermError):
    pass


class PositionError(IndexError):
    pass


_TOKEN = re.compile(r"\s*(?:(#[^\n]*)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    for m in _TOKEN.finditer(text):
        comment, ident, other = m.groups()
        if comment is not None:
            continue
        if ident is not None:
            toks.append(("id", ident, m.start(2)))
        elif other is not None:
            if other not in "(),":
                raise TermSyntaxError(f"unexpected character {other!r}", m.start(3), text)
            toks.append((other, other, m.start(3)))
    toks.append(("eof", "", len(text)))
    return toks


def _arity(sig, name: str) -> Optional[int]:
    if sig is None:
        return None
    if isinstance(sig, Mapping):
        return sig.get(name)
    return sig.arity(name)


class _Parser:
    def __init__(self, text: str, sig):
        self.text = text
        self.sig = sig
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def expect(self, kind: str):
        tok = self.toks[self.i]
        if tok[0] != kind:
            shown = tok[1] or "end of input"
            raise TermSyntaxError(f"expected {kind!r}, found {shown!r}", tok[2], self.text)
        self.i += 1
        return tok

    def term(self) -> Term:
        _, name, pos = self.expect("id")
        arity = _arity(self.sig, name)
        if self.peek()[0] != "(":
            if arity is None:
                return Var(name)
            if arity != 0:
                raise ArityError(f"operator {name!r} expects {arity} argument(s), got 0 (offset {pos})")
            return App(name)
        self.i += 1
        args = [self.term()]
        while self.peek()[0] == ",":
            self.i += 1
            args.append(self.term())
        self.expect(")")
        if arity is None:
            raise ArityError(f"undeclared operator {name!r} applied to arguments (offset {pos})")
        if arity != len(args):
            raise ArityError(
                f"operator {name!r} expects {arity} argument(s), got {len(args)} (offset {pos})")
        return App(name, tuple(args))


def parse_term(text: str, sig=None) -> Term:
    """Parse prefix notation like ``neg(plus(x,y))``.

    ``sig`` maps operator names to arities (a dict or a Signature). Any
    identifier it does not declare is a variable.
    """
    p = _Parser(text, sig)
    t = p.term()
    p.expect("eof")
    return t


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.op
    return t.op + "(" + ",".join(format_term(a) for a in t.args) + ")"


def variables(t: Term) -> list[str]:
    """Variable names of ``t`` in order of first occurrence."""
    seen: dict[str, None] = {}

    def walk(s):
        if isinstance(s, Var):
            seen.setdefault(s.name, None)
        else:
            for a in s.args:
                walk(a)

    walk(t)
    return list(seen)


def operators(t: Term) -> set[tuple[str, int]]:
    out = set()

    def walk(s):
        if isinstance(s, App):
            out.add((s.op, len(s.args)))
            for a in s.args:
                walk(a)

    walk(t)
    return out


def size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(size(a) for a in t.args)


def substitute(t: Term, s: Substitution) -> Term:
    """Simultaneous substitution; unmapped variables are left alone."""
    if isinstance(t, Var):
        return s.get(t.name, t)
    if not t.args:
        return t
    return App(t.op, tuple(substitute(a, s) for a in t.args))


def compose(first: Substitution, then: Substitution) -> dict[str, Term]:
    """Substitution equivalent to applying ``first`` and then ``then``."""
    out = {k: substitute(v, then) for k, v in first.items()}
    for k, v in then.items():
        out.setdefault(k, v)
    return out


def match_term(pattern: Term, subject: Term, binding: Optional[Substitution] = None):
    """One-sided matching. Returns the unique substitution or None.

    An optional starting ``binding`` is extended (not mutated).
    """
    s = dict(binding) if binding else {}
    stack = [(pattern, subject)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            bound = s.get(p.name)
            if bound is None:
                s[p.name] = t
            elif bound != t:
                return None
        elif isinstance(t, Var) or p.op != t.op or len(p.args) != len(t.args):
            return None
        else:
            stack.extend(zip(p.args, t.args))
    return s


def subterm_at(t: Term, p: Position) -> Term:
    for depth, i in enumerate(p):
        if isinstance(t, Var) or not 0 <= i < len(t.args):
            raise PositionError(f"position {list(p)} invalid at depth {depth}")
        t = t.args[i]
    return t


def replace_at(t: Term, p: Position, r: Term) -> Term:
    if not p:
        return r
    i = p[0]
    if isinstance(t, Var) or not 0 <= i < len(t.args):
        raise PositionError(f"position {list(p)} invalid")
    args = list(t.args)
    args[i] = replace_at(args[i], p[1:], r)
    return App(t.op, tuple(args))


def positions(t: Term) -> Iterator[Position]:
    """All positions of ``t``, leftmost-outermost (pre-order)."""
    yield ()
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            for q in positions(a):
                yield (i,) + q


def rename_vars(t: Term, mapping: Mapping[str, str]) -> Term:
    return substitute(t, {k: Var(v) for k, v in mapping.items()})
