"""Signatures, identities, theories and the bundled theory catalog."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from .term import Term, format_term, parse_term, rename_vars, variables, TermError


@dataclass(frozen=True)
class Signature:
    name: str
    ops: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [op for op, _ in self.ops]
        if len(set(names)) != len(names):
            raise TheoryError(f"duplicate operator in signature {self.name!r}")

    def arity(self, op: str) -> Optional[int]:
        for name, k in self.ops:
            if name == op:
                return k
        return None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(op for op, _ in self.ops)

    def extend(self, op: str, arity: int, name: Optional[str] = None) -> "Signature":
        return Signature(name or f"{self.name}+{op}", self.ops + ((op, arity),))

    def without(self, op: str, name: Optional[str] = None) -> "Signature":
        return Signature(name or f"{self.name}-{op}", tuple(o for o in self.ops if o[0] != op))

    def same_ops(self, other: "Signature") -> bool:
        return self.ops == other.ops


@dataclass(frozen=True)
class Identity:
    name: str
    lhs: Term
    rhs: Term

    def variables(self) -> list[str]:
        """Sorted variable names occurring on either side."""
        return sorted(set(variables(self.lhs)) | set(variables(self.rhs)))

    def text(self) -> str:
        return f"{format_term(self.lhs)} = {format_term(self.rhs)}"

    def __str__(self) -> str:
        return f"{self.name}: {self.text()}"


@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    identities: tuple[Identity, ...] = field(default_factory=tuple)

    def __post_init__(self):
        names = [i.name for i in self.identities]
        if len(set(names)) != len(names):
            raise TheoryError(f"duplicate identity name in theory {self.name!r}")

    def __getitem__(self, name: str) -> Identity:
        for i in self.identities:
            if i.name == name:
                return i
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(i.name == name for i in self.identities)

    def __len__(self) -> int:
        return len(self.identities)

    @property
    def names(self) -> list[str]:
        return [i.name for i in self.identities]

    def plus(self, *extra: Identity, name: Optional[str] = None) -> "Theory":
        return Theory(name or self.name, self.signature, self.identities + tuple(extra))

    def select(self, names: Iterable[str], name: Optional[str] = None) -> "Theory":
        return Theory(name or self.name, self.signature, tuple(self[n] for n in names))


class TheoryError(ValueError):
    pass


class TheoryParseError(TheoryError):
    def __init__(self, msg: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {msg}")


def parse_identity(name: str, text: str, sig) -> Identity:
    if text.count("=") != 1:
        raise TermError(f"identity {name!r} must contain exactly one '='")
    lhs, rhs = text.split("=")
    return Identity(name, parse_term(lhs, sig), parse_term(rhs, sig))


def parse_theory(text: str, known: Optional[dict[str, Signature]] = None):
    """Parse a theory file. Returns ``(signatures, theories)`` as two dicts.

    ``known`` supplies signatures declared elsewhere that ``over`` may refer to.
    """
    sigs: dict[str, Signature] = {}
    theories: dict[str, Theory] = {}
    ops: list[tuple[str, int]] = []
    idents: list[Identity] = []
    block = None  # ("signature", name) | ("theory", name, sig)

    def close():
        if block is None:
            return
        if block[0] == "signature":
            try:
                sigs[block[1]] = Signature(block[1], tuple(ops))
            except TheoryError as e:
                raise TheoryParseError(str(e), block[2]) from None
        else:
            try:
                theories[block[1]] = Theory(block[1], block[2], tuple(idents))
            except TheoryError as e:
                raise TheoryParseError(str(e), block[3]) from None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        indented = line[0].isspace()
        if not indented and words[0] == "signature":
            if len(words) != 2:
                raise TheoryParseError("expected 'signature <name>'", lineno)
            close()
            if words[1] in sigs:
                raise TheoryParseError(f"duplicate signature {words[1]!r}", lineno)
            block, ops = ("signature", words[1], lineno), []
        elif not indented and words[0] == "theory":
            if len(words) != 4 or words[2] != "over":
                raise TheoryParseError("expected 'theory <name> over <signature>'", lineno)
            close()
            if words[1] in theories:
                raise TheoryParseError(f"duplicate theory {words[1]!r}", lineno)
            sig = sigs.get(words[3]) or (known or {}).get(words[3])
            if sig is None:
                raise TheoryParseError(f"undeclared signature {words[3]!r}", lineno)
            block, idents = ("theory", words[1], sig, lineno), []
        elif indented and block is not None and block[0] == "signature":
            if len(words) != 3 or words[0] != "op" or not words[2].isdigit():
                raise TheoryParseError("expected 'op <ident> <arity>'", lineno)
            if any(words[1] == o for o, _ in ops):
                raise TheoryParseError(f"duplicate operator {words[1]!r}", lineno)
            ops.append((words[1], int(words[2])))
        elif indented and block is not None and block[0] == "theory":
            name, sep, body = line.strip().partition(":")
            if not sep or not name.isidentifier():
                raise TheoryParseError("expected '<name>: <term> = <term>'", lineno)
            if any(i.name == name for i in idents):
                raise TheoryParseError(f"duplicate identity {name!r}", lineno)
            try:
                idents.append(parse_identity(name, body, block[2]))
            except TermError as e:
                raise TheoryParseError(str(e), lineno) from None
        else:
            raise TheoryParseError(f"unexpected line {raw.strip()!r}", lineno)
    close()
    return sigs, theories


def format_theory(sigs: Iterable[Signature], theories: Iterable[Theory]) -> str:
    out = []
    for s in sigs:
        out.append(f"signature {s.name}")
        out.extend(f"  op {op} {k}" for op, k in s.ops)
    for t in theories:
        out.append(f"theory {t.name} over {t.signature.name}")
        out.extend(f"  {i}" for i in t.identities)
    return "\n".join(out) + "\n"


def rename_apart(i: Identity, avoid: Iterable[str]) -> Identity:
    """Alpha-rename ``i`` so that none of its variables is in ``avoid``."""
    avoid = set(avoid)
    vs = variables(i.lhs) + [v for v in variables(i.rhs) if v not in variables(i.lhs)]
    if not avoid.intersection(vs):
        return i
    taken = avoid | set(vs)
    mapping = {}
    for v in vs:
        k = 0
        while f"{v}{k}" in taken:
            k += 1
        mapping[v] = f"{v}{k}"
        taken.add(mapping[v])
    return Identity(i.name, rename_vars(i.lhs, mapping), rename_vars(i.rhs, mapping))


def data_text(*parts: str) -> str:
    return resources.files("mvbasis").joinpath("data", *parts).read_text()


@lru_cache(maxsize=None)
def _catalog():
    return parse_theory(data_text("theories.thy"))


def builtin_signatures() -> dict[str, Signature]:
    return dict(_catalog()[0])


def builtin_theories() -> dict[str, Theory]:
    """Name -> Theory for every bundled axiom system and derived catalog."""
    return dict(_catalog()[1])


def get_theory(name: str) -> Optional[Theory]:
    return _catalog()[1].get(name)


def derived_identity(name: str) -> Optional[Identity]:
    """Look up a numbered identity from the derived catalogs."""
    for cat in ("DERIVED_MV", "DERIVED_BCK"):
        t = _catalog()[1][cat]
        if name in t:
            return t[name]
    return None
