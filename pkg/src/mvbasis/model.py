"""Finite algebras given by operation tables.

Elements of an n-element algebra are the integers ``0..n-1``. For a
Lukasiewicz chain the element ``i`` stands for the truth value ``i/(n-1)``;
the fraction itself is never stored.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .term import App, Term, Var, variables
from .theory import Identity, Signature, Theory, builtin_signatures, get_theory


class ModelError(ValueError):
    pass


class SignatureMismatch(ModelError):
    pass


@dataclass(frozen=True)
class FiniteAlgebra:
    """Carrier ``range(size)`` with one row-major table per operator."""

    signature: Signature
    size: int
    tables: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        if self.size < 1:
            raise ModelError("carrier must be nonempty")
        if len(self.tables) != len(self.signature.ops):
            raise ModelError("one table per operator required")
        for (op, k), tab in zip(self.signature.ops, self.tables):
            if len(tab) != self.size ** k:
                raise ModelError(f"table {op!r} needs {self.size ** k} entries, has {len(tab)}")
            if any(not 0 <= v < self.size for v in tab):
                raise ModelError(f"table {op!r} has an entry outside 0..{self.size - 1}")

    def __eq__(self, other):
        # name is a label only
        return (isinstance(other, FiniteAlgebra) and self.size == other.size
                and self.signature.ops == other.signature.ops and self.tables == other.tables)

    def __hash__(self):
        return hash((self.size, self.signature.ops, self.tables))

    def table(self, op: str) -> tuple[int, ...]:
        return self.tables[self.signature.names.index(op)]

    def op(self, name: str, *args: int) -> int:
        idx = 0
        for a in args:
            idx = idx * self.size + a
        return self.table(name)[idx]

    @property
    def key(self) -> tuple[int, ...]:
        """Flat concatenation of all tables; the search's lexicographic order."""
        return tuple(v for tab in self.tables for v in tab)

    @classmethod
    def from_funcs(cls, signature: Signature, size: int, funcs: dict, name: str = ""):
        tabs = []
        for op, k in signature.ops:
            f = funcs[op]
            if k == 0:
                tabs.append((f() if callable(f) else f,))
            else:
                tabs.append(tuple(f(*args) for args in itertools.product(range(size), repeat=k)))
        return cls(signature, size, tuple(tabs), name)

    def relabel(self, perm: Sequence[int]) -> "FiniteAlgebra":
        """Isomorphic copy in which old element ``i`` is renamed ``perm[i]``."""
        n = self.size
        inv = [0] * n
        for i, p in enumerate(perm):
            inv[p] = i
        tabs = []
        for (op, k), tab in zip(self.signature.ops, self.tables):
            new = []
            for args in itertools.product(range(n), repeat=k):
                idx = 0
                for a in args:
                    idx = idx * n + inv[a]
                new.append(perm[tab[idx]])
            tabs.append(tuple(new))
        return FiniteAlgebra(self.signature, n, tuple(tabs), self.name)

    def reduct(self, signature: Signature) -> "FiniteAlgebra":
        """Forget operators not in ``signature`` (which must be a sub-signature)."""
        tabs = []
        for op, k in signature.ops:
            if self.signature.arity(op) != k:
                raise SignatureMismatch(f"{op}/{k} not in {self.signature.name}")
            tabs.append(self.table(op))
        return FiniteAlgebra(signature, self.size, tuple(tabs), self.name)

    def expand(self, signature: Signature, op: str, value: int) -> "FiniteAlgebra":
        """Add a constant ``op`` with the given value; ``signature`` fixes the order."""
        tabs = []
        for name, k in signature.ops:
            tabs.append((value,) if name == op else self.table(name))
        return FiniteAlgebra(signature, self.size, tuple(tabs), self.name)


def expand_by_definition(a: FiniteAlgebra, signature: Signature, op: str, body: Term) -> FiniteAlgebra:
    """Add constant ``op`` interpreted as ``body`` with every variable at 0.

    Meaningful when ``body`` is constant in ``a``; callers check that separately.
    """
    value = eval_term(a, body, {x: 0 for x in variables(body)})
    return a.expand(signature, op, value)


def _check_sig(a: FiniteAlgebra, t: Term):
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, App):
            if a.signature.arity(s.op) != len(s.args):
                raise SignatureMismatch(
                    f"operator {s.op}/{len(s.args)} not in signature {a.signature.name}")
            stack.extend(s.args)


def compile_term(a: FiniteAlgebra, t: Term, order: Sequence[str]) -> Callable[[Sequence[int]], int]:
    """Turn ``t`` into a function of a value tuple indexed like ``order``."""
    _check_sig(a, t)
    n = a.size
    slot = {v: i for i, v in enumerate(order)}

    def build(s):
        if isinstance(s, Var):
            if s.name not in slot:
                raise ModelError(f"unbound variable {s.name!r}")
            i = slot[s.name]
            return lambda env: env[i]
        tab = a.table(s.op)
        if not s.args:
            c = tab[0]
            return lambda env: c
        if len(s.args) == 1:
            f = build(s.args[0])
            return lambda env: tab[f(env)]
        if len(s.args) == 2:
            f, g = build(s.args[0]), build(s.args[1])
            return lambda env: tab[f(env) * n + g(env)]
        fs = [build(x) for x in s.args]

        def go(env):
            idx = 0
            for f in fs:
                idx = idx * n + f(env)
            return tab[idx]
        return go

    return build(t)


def eval_term(a: FiniteAlgebra, t: Term, v: dict) -> int:
    """Value of ``t`` in ``a`` under the assignment ``v`` (variable -> element)."""
    order = variables(t)
    missing = [x for x in order if x not in v]
    if missing:
        raise ModelError(f"unbound variable(s) {missing}")
    for x in order:
        if not 0 <= v[x] < a.size:
            raise ModelError(f"value of {x!r} outside carrier")
    return compile_term(a, t, order)([v[x] for x in order])


@dataclass(frozen=True)
class Counterexample:
    assignment: dict
    lhs_value: int
    rhs_value: int


@dataclass(frozen=True)
class SatReport:
    identity: str
    holds: bool
    counterexample: Optional[Counterexample] = None
    all_counterexamples: tuple = ()

    def to_dict(self) -> dict:
        d = {"identity": self.identity, "holds": self.holds}
        if self.counterexample is not None:
            c = self.counterexample
            d["counterexample"] = {"assignment": c.assignment, "lhs": c.lhs_value, "rhs": c.rhs_value}
        if self.all_counterexamples:
            d["all_counterexamples"] = [c.assignment for c in self.all_counterexamples]
        return d


def satisfies(a: FiniteAlgebra, i: Identity, exhaustive: bool = False, cap: int = 1000) -> SatReport:
    """Check ``i`` over every assignment, variables sorted by name.

    Stops at the first counterexample unless ``exhaustive``, which collects
    up to ``cap`` of them.
    """
    order = i.variables()
    lhs = compile_term(a, i.lhs, order)
    rhs = compile_term(a, i.rhs, order)
    found = []
    for env in itertools.product(range(a.size), repeat=len(order)):
        l, r = lhs(env), rhs(env)
        if l != r:
            found.append(Counterexample(dict(zip(order, env)), l, r))
            if not exhaustive or len(found) >= cap:
                break
    if not found:
        return SatReport(i.name, True)
    return SatReport(i.name, False, found[0], tuple(found) if exhaustive else ())


def satisfies_theory(a: FiniteAlgebra, t: Theory, exhaustive: bool = False) -> list[SatReport]:
    return [satisfies(a, i, exhaustive) for i in t.identities]


def models_theory(a: FiniteAlgebra, t: Theory) -> bool:
    return all(satisfies(a, i).holds for i in t.identities)


def lukasiewicz_chain(n: int) -> FiniteAlgebra:
    """The n-element MV chain: truncated addition, complement, bottom."""
    if n < 2:
        raise ModelError("a Lukasiewicz chain needs n >= 2")
    top = n - 1
    return FiniteAlgebra.from_funcs(
        builtin_signatures()["MV210"], n,
        {"plus": lambda i, j: min(top, i + j), "neg": lambda i: top - i, "zero": 0},
        name=f"L{n}")


def bck_reduct(a: FiniteAlgebra, keep_constants: bool = False) -> FiniteAlgebra:
    """Implication reduct ``imp(x,y) = plus(neg(x),y)``, optionally with ``one = neg(zero)``."""
    mv = get_theory("MV_A")
    if not a.signature.same_ops(mv.signature):
        raise SignatureMismatch("bck_reduct needs an algebra over (plus, neg, zero)")
    bad = [r.identity for r in satisfies_theory(a, mv) if not r.holds]
    if bad:
        raise ModelError(f"not an MV-algebra: fails {', '.join(bad)}")
    sigs = builtin_signatures()
    sig = sigs["BCK20"] if keep_constants else sigs["BCK2"]
    neg, plus = a.table("neg"), a.table("plus")
    n = a.size
    funcs = {"imp": lambda i, j: plus[neg[i] * n + j], "one": neg[a.table("zero")[0]]}
    return FiniteAlgebra.from_funcs(sig, n, funcs, name=f"{a.name}->" if a.name else "")


@dataclass(frozen=True)
class IsoResult:
    bijection: Optional[tuple[int, ...]]
    reason: str = ""

    def __bool__(self):
        return self.bijection is not None


def is_isomorphic(a: FiniteAlgebra, b: FiniteAlgebra) -> IsoResult:
    """First bijection (lexicographic) mapping ``a`` onto ``b``, if any."""
    if not a.signature.same_ops(b.signature):
        return IsoResult(None, "signature mismatch")
    if a.size != b.size:
        return IsoResult(None, "size mismatch")
    if a.size > 8:
        raise ModelError("is_isomorphic is brute force; size <= 8 only")
    for perm in itertools.permutations(range(a.size)):
        if a.relabel(perm).tables == b.tables:
            return IsoResult(tuple(perm))
    return IsoResult(None, "no bijection")


# model files

def parse_models(text: str, sigs: Optional[dict] = None) -> list[FiniteAlgebra]:
    """Parse one or more ``model <name> over <sig>`` records."""
    sigs = sigs if sigs is not None else builtin_signatures()
    out = []
    cur = None

    def finish():
        if cur is None:
            return
        name, sig, n, tabs, lineno = cur
        missing = [op for op in sig.names if op not in tabs]
        if missing or n is None:
            raise ModelError(f"model {name!r} (line {lineno}): missing size or table(s) {missing}")
        out.append(FiniteAlgebra(sig, n, tuple(tuple(tabs[op]) for op in sig.names), name))

    current_op = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "model":
            finish()
            if len(words) != 4 or words[2] != "over":
                raise ModelError(f"line {lineno}: expected 'model <name> over <signature>'")
            if words[3] not in sigs:
                raise ModelError(f"line {lineno}: unknown signature {words[3]!r}")
            cur = [words[1], sigs[words[3]], None, {}, lineno]
            current_op = None
        elif cur is None:
            raise ModelError(f"line {lineno}: expected a model header")
        elif words[0] == "size":
            cur[2] = int(words[1])
        elif words[0] == "table":
            if len(words) != 2 or cur[1].arity(words[1]) is None:
                raise ModelError(f"line {lineno}: bad table header {line!r}")
            current_op = words[1]
            cur[3][current_op] = []
        elif current_op is not None:
            try:
                cur[3][current_op].extend(int(w) for w in words)
            except ValueError:
                raise ModelError(f"line {lineno}: non-integer table entry") from None
        else:
            raise ModelError(f"line {lineno}: unexpected {line!r}")
    finish()
    return out


def format_model(a: FiniteAlgebra, name: Optional[str] = None) -> str:
    lines = [f"model {name or a.name or 'M'} over {a.signature.name}", f"size {a.size}"]
    n = a.size
    for (op, k), tab in zip(a.signature.ops, a.tables):
        lines.append(f"table {op}")
        if k == 0:
            lines.append(str(tab[0]))
        else:
            for r in range(0, len(tab), n):
                lines.append(" ".join(map(str, tab[r:r + n])))
    return "\n".join(lines) + "\n"


def load_model(name: str) -> FiniteAlgebra:
    from .theory import data_text
    [m] = parse_models(data_text("models", f"{name}.model"))
    return m


INDEPENDENCE_MODELS = ("mv_indep_A", "mv_indep_B", "bck_indep_proj", "bck_indep_const")


def independence_models() -> dict[str, FiniteAlgebra]:
    return {n: load_model(n) for n in INDEPENDENCE_MODELS}
