"""Finite model enumeration, variety comparison and independence checks.

Models are found by depth-first filling of table cells in one fixed order
(operators in signature order, each table row-major, values ascending). Every
ground instance of every identity is compiled once per size. An instance sits
on the watch list of the first undefined cell its evaluation needs; when that
cell gets a value the instance is re-evaluated, and a violated instance prunes
the branch. Because cells and values are visited in order, models come out in
lexicographic order of their flat table key.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .model import FiniteAlgebra, SatReport, SignatureMismatch, expand_by_definition, satisfies
from .term import App, Term, Var
from .theory import Identity, Signature, Theory

OK, VIOLATED = -1, -2
MAX_ISO_SIZE = 6


class SearchError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised cooperatively when a search runs past its wall-clock budget."""

    def __init__(self, seconds: float, nodes: int, found: int):
        self.seconds = seconds
        self.nodes = nodes
        self.found = found
        super().__init__(f"budget of {seconds:g}s exceeded after {nodes} nodes, {found} models")


@dataclass(frozen=True)
class SearchConfig:
    up_to_iso: bool = False
    workers: int = 1
    budget_secs: Optional[float] = None
    # number of leading cells fixed per work unit when workers > 1
    split_cells: int = 2


@dataclass
class SearchStats:
    nodes: int = 0
    pruned: int = 0
    models: int = 0
    seconds: float = 0.0


@dataclass
class PartialAlgebra:
    """Search state: each operator's table with ``None`` for undefined cells."""

    signature: Signature
    size: int
    tables: list[list[Optional[int]]]

    @classmethod
    def empty(cls, signature: Signature, n: int) -> "PartialAlgebra":
        return cls(signature, n, [[None] * n ** k for _, k in signature.ops])

    @classmethod
    def from_cells(cls, signature: Signature, n: int, cells: Sequence[int]) -> "PartialAlgebra":
        tabs, at = [], 0
        for _, k in signature.ops:
            w = n ** k
            tabs.append([None if v < 0 else v for v in cells[at:at + w]])
            at += w
        return cls(signature, n, tabs)

    def __post_init__(self):
        for tab in self.tables:
            for v in tab:
                if v is not None and not 0 <= v < self.size:
                    raise SearchError(f"entry {v} outside 0..{self.size - 1}")

    @property
    def complete(self) -> bool:
        return all(v is not None for tab in self.tables for v in tab)

    def to_algebra(self, name: str = "") -> FiniteAlgebra:
        if not self.complete:
            raise SearchError("partial algebra has undefined cells")
        return FiniteAlgebra(self.signature, self.size, tuple(tuple(t) for t in self.tables), name)

    def evaluate(self, t: Term, env: dict) -> Optional[int]:
        """Value of ``t`` under ``env``, or None if an undefined cell is needed."""
        if isinstance(t, Var):
            return env[t.name]
        vals = []
        for a in t.args:
            v = self.evaluate(a, env)
            if v is None:
                return None
            vals.append(v)
        idx = 0
        for v in vals:
            idx = idx * self.size + v
        return self.tables[self.signature.names.index(t.op)][idx]


# compilation of ground instances

def _cell_layout(sig: Signature, n: int) -> tuple[dict[str, int], int]:
    offsets, at = {}, 0
    for op, k in sig.ops:
        offsets[op] = at
        at += n ** k
    return offsets, at


def _compile_identity(i: Identity, sig: Signature, n: int, offsets: dict[str, int]):
    """Python function ``f(V, *values)`` over the flat cell array ``V``.

    Returns OK, VIOLATED, a cell index ``c >= 0`` the instance is waiting on,
    or ``_force_code(c, v)`` when one side is known and the other lacks only
    its root cell ``c``, which must then equal ``v``.
    """
    order = i.variables()
    args = {v: f"a{j}" for j, v in enumerate(order)}
    lines: list[str] = []
    memo: dict[Term, str] = {}
    roots: set[str] = set()  # values not yet checked for being undefined

    def emit(t: Term, root: bool = False) -> str:
        if isinstance(t, Var):
            return args[t.name]
        if t in memo:
            name = memo[t]
            if name in roots and not root:
                lines.append(f"if {name} < 0: return c{name[1:]}")
                roots.discard(name)
            return name
        k = sig.arity(t.op)
        if k is None or k != len(t.args):
            raise SignatureMismatch(f"operator {t.op}/{len(t.args)} not in {sig.name}")
        subs = [emit(a) for a in t.args]
        j = len(memo)
        terms = [str(offsets[t.op])] + [f"{s}*{n ** (k - 1 - p)}" for p, s in enumerate(subs)]
        lines.append(f"c{j} = {'+'.join(terms)}")
        lines.append(f"t{j} = V[c{j}]")
        if root:
            roots.add(f"t{j}")
        else:
            lines.append(f"if t{j} < 0: return c{j}")
        memo[t] = f"t{j}"
        return memo[t]

    l = emit(i.lhs, root=True)
    r = emit(i.rhs, root=True)
    if l == r:
        lines.append(f"return {OK}")
    else:
        if l in roots:
            lines.append(f"if {l} < 0:")
            if r in roots:
                lines.append(f"    if {r} < 0: return c{l[1:]}")
            lines.append(f"    return -3 - c{l[1:]}*{n} - {r}")
        if r in roots:
            lines.append(f"if {r} < 0: return -3 - c{r[1:]}*{n} - {l}")
        lines.append(f"return {OK} if {l} == {r} else {VIOLATED}")
    src = f"def f({', '.join(['V'] + list(args.values()))}):\n" + \
        "".join(f"    {ln}\n" for ln in lines)
    scope: dict = {}
    exec(compile(src, f"<identity {i.name}>", "exec"), scope)
    return scope["f"], len(order)


@dataclass(frozen=True)
class _Instance:
    f: Callable
    args: tuple
    identity: str


def _instances(t: Theory, n: int, offsets) -> list[_Instance]:
    out = []
    for i in t.identities:
        f, k = _compile_identity(i, t.signature, n, offsets)
        for env in itertools.product(range(n), repeat=k):
            out.append(_Instance(f, env, i.name))
    return out


class _Search:
    def __init__(self, t: Theory, n: int, deadline: Optional[float] = None,
                 budget: Optional[float] = None, on_prune=None):
        if n < 1:
            raise SearchError("model size must be at least 1")
        self.theory, self.n = t, n
        self.offsets, self.ncells = _cell_layout(t.signature, n)
        self.instances = _instances(t, n, self.offsets)
        self.deadline, self.budget = deadline, budget
        self.on_prune = on_prune
        self.stats = SearchStats()

    def run(self, prefix: Sequence[int] = ()) -> Iterator[tuple[int, ...]]:
        n, C = self.n, self.ncells
        V = [-1] * C
        forced = [-1] * C
        watch: list[list[_Instance]] = [[] for _ in range(C)]
        stats = self.stats
        deadline = self.deadline
        domains = [tuple(range(n))] * C
        for c, v in enumerate(prefix):
            domains[c] = (v,)

        forced_by: list[Optional[_Instance]] = [None] * C

        def settle(insts, moved, pinned):
            """Re-evaluate ``insts``; on a contradiction return ``(instance, cell)``.

            ``cell`` is None for a violated instance, else the cell two
            instances force to different values.
            """
            for inst in insts:
                r = inst.f(V, *inst.args)
                if r >= 0:
                    watch[r].append(inst)
                    moved.append(r)
                elif r == VIOLATED:
                    return inst, None
                elif r != OK:
                    c, v = divmod(-3 - r, n)
                    if forced[c] < 0:
                        forced[c] = v
                        forced_by[c] = inst
                        pinned.append(c)
                    elif forced[c] != v:
                        return inst, c
            return None

        moved0, pinned0 = [], []
        bad = settle(self.instances, moved0, pinned0)
        if bad is not None:
            self._pruned(V, bad, forced, forced_by)
            return

        def dfs(c: int):
            if c == C:
                stats.models += 1
                yield tuple(V)
                return
            dom = domains[c]
            if forced[c] >= 0:
                dom = (forced[c],) if forced[c] in dom else ()
            for val in dom:
                stats.nodes += 1
                if deadline is not None and stats.nodes & 1023 == 0 and time.monotonic() > deadline:
                    raise BudgetExceeded(self.budget or 0.0, stats.nodes, stats.models)
                V[c] = val
                moved: list[int] = []
                pinned: list[int] = []
                bad = settle(watch[c], moved, pinned)
                if bad is None:
                    yield from dfs(c + 1)
                else:
                    stats.pruned += 1
                    if self.on_prune is not None:
                        self._pruned(V, bad, forced, forced_by)
                for r in moved:
                    watch[r].pop()
                for r in pinned:
                    forced[r] = -1
                    forced_by[r] = None
            V[c] = -1

        yield from dfs(0)

    def _pruned(self, V, bad, forced, forced_by):
        if self.on_prune is None:
            return
        inst, cell = bad
        t = self.theory
        i = t[inst.identity]
        forcing = None
        if cell is not None:
            j = t[forced_by[cell].identity]
            forcing = (cell, forced[cell], j, dict(zip(j.variables(), forced_by[cell].args)))
        self.on_prune(PruneWitness(t.signature, self.n, tuple(V), i,
                                   dict(zip(i.variables(), inst.args)), forcing))


@dataclass(frozen=True)
class PruneWitness:
    """Why a branch was cut: a ground instance that fails on the branch.

    When ``forcing`` is ``(cell, value, identity, env)``, that instance pins
    ``cell`` to ``value`` while ``identity``/``env`` demands another value.
    """

    signature: Signature
    size: int
    cells: tuple[int, ...]
    identity: Identity
    env: dict
    forcing: Optional[tuple] = None

    def recheck(self) -> bool:
        """Confirm on demand that no completion of the branch survives."""
        def violated(cells, i, env):
            pa = PartialAlgebra.from_cells(self.signature, self.size, cells)
            l, r = pa.evaluate(i.lhs, env), pa.evaluate(i.rhs, env)
            return l is not None and r is not None and l != r

        if self.forcing is None:
            return violated(self.cells, self.identity, self.env)
        cell, _, j, jenv = self.forcing
        for w in range(self.size):
            cells = list(self.cells)
            cells[cell] = w
            if not (violated(cells, self.identity, self.env) or violated(cells, j, jenv)):
                return False
        return True


def key_to_algebra(sig: Signature, n: int, key: Sequence[int]) -> FiniteAlgebra:
    tabs, at = [], 0
    for _, k in sig.ops:
        w = n ** k
        tabs.append(tuple(key[at:at + w]))
        at += w
    return FiniteAlgebra(sig, n, tuple(tabs))


# isomorphism reduction

def _relabel_key(sig: Signature, n: int, key: Sequence[int], perm: Sequence[int]) -> tuple:
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    out, at = [], 0
    for _, k in sig.ops:
        for args in itertools.product(range(n), repeat=k):
            idx = 0
            for a in args:
                idx = idx * n + inv[a]
            out.append(perm[key[at + idx]])
        at += n ** k
    return tuple(out)


def canonical_key(sig: Signature, n: int, key: Sequence[int]) -> tuple:
    """Lexicographically least table key over all relabelings."""
    if n > MAX_ISO_SIZE:
        raise SearchError(f"isomorphism reduction is limited to size <= {MAX_ISO_SIZE}")
    return min(_relabel_key(sig, n, key, p) for p in itertools.permutations(range(n)))


def is_canonical(sig: Signature, n: int, key: Sequence[int]) -> bool:
    if n > MAX_ISO_SIZE:
        raise SearchError(f"isomorphism reduction is limited to size <= {MAX_ISO_SIZE}")
    key = tuple(key)
    return all(_relabel_key(sig, n, key, p) >= key for p in itertools.permutations(range(n)))


# enumeration front ends

def _prefixes(n: int, ncells: int, k: int) -> list[tuple[int, ...]]:
    k = max(0, min(k, ncells))
    return list(itertools.product(range(n), repeat=k))


def _worker(args):
    t, n, prefix, deadline, budget = args
    s = _Search(t, n, deadline, budget)
    try:
        keys = list(s.run(prefix))
    except BudgetExceeded as e:
        return ("budget", e.nodes, e.found)
    return ("ok", keys, s.stats)


def model_keys(t: Theory, n: int, config: Optional[SearchConfig] = None,
               stats: Optional[SearchStats] = None, on_prune=None) -> list[tuple[int, ...]]:
    """Sorted flat table keys of all models of ``t`` on ``range(n)``.

    With ``config.up_to_iso`` only lexicographically least representatives
    are kept.
    """
    cfg = config or SearchConfig()
    memo_key = (t, n, cfg.up_to_iso)
    if stats is None and on_prune is None and memo_key in _KEY_CACHE:
        return list(_KEY_CACHE[memo_key])
    start = time.monotonic()
    deadline = start + cfg.budget_secs if cfg.budget_secs is not None else None
    if cfg.up_to_iso and n > MAX_ISO_SIZE:
        raise SearchError(f"isomorphism reduction is limited to size <= {MAX_ISO_SIZE}")
    agg = stats if stats is not None else SearchStats()
    if cfg.workers <= 1 or on_prune is not None:
        s = _Search(t, n, deadline, cfg.budget_secs, on_prune)
        try:
            keys = list(s.run())
        finally:
            agg.nodes += s.stats.nodes
            agg.pruned += s.stats.pruned
    else:
        _, ncells = _cell_layout(t.signature, n)
        jobs = [(t, n, p, deadline, cfg.budget_secs) for p in _prefixes(n, ncells, cfg.split_cells)]
        keys = []
        over = None
        with ProcessPoolExecutor(cfg.workers, mp_context=get_context("fork")) as ex:
            for res in ex.map(_worker, jobs):
                if res[0] == "budget":
                    agg.nodes += res[1]
                    over = over or res
                    continue
                keys.extend(res[1])
                agg.nodes += res[2].nodes
                agg.pruned += res[2].pruned
        if over is not None:
            raise BudgetExceeded(cfg.budget_secs or 0.0, agg.nodes, len(keys))
        keys.sort()
    if cfg.up_to_iso:
        keys = [k for k in keys if is_canonical(t.signature, n, k)]
    agg.models += len(keys)
    agg.seconds += time.monotonic() - start
    if on_prune is None:
        _KEY_CACHE[memo_key] = tuple(keys)
    return keys


# completed enumerations, keyed by (theory, size, up_to_iso)
_KEY_CACHE: dict = {}


def clear_cache():
    _KEY_CACHE.clear()


def enumerate_models(t: Theory, n: int, up_to_iso: bool = False,
                     config: Optional[SearchConfig] = None,
                     stats: Optional[SearchStats] = None) -> Iterator[FiniteAlgebra]:
    """Stream the models of ``t`` of size ``n`` in table-key order.

    Single-worker runs without isomorphism reduction are lazy; otherwise the
    keys are collected first.
    """
    cfg = config or SearchConfig(up_to_iso=up_to_iso)
    if up_to_iso and not cfg.up_to_iso:
        cfg = SearchConfig(True, cfg.workers, cfg.budget_secs, cfg.split_cells)
    if cfg.workers <= 1 and not cfg.up_to_iso:
        deadline = time.monotonic() + cfg.budget_secs if cfg.budget_secs is not None else None
        s = _Search(t, n, deadline, cfg.budget_secs)
        try:
            for key in s.run():
                yield key_to_algebra(t.signature, n, key)
        finally:
            if stats is not None:
                stats.nodes += s.stats.nodes
                stats.pruned += s.stats.pruned
                stats.models += s.stats.models
        return
    for key in model_keys(t, n, cfg, stats):
        yield key_to_algebra(t.signature, n, key)


# comparisons

EQUAL, LEFT_NOT_RIGHT, RIGHT_NOT_LEFT = "equal", "left-not-right", "right-not-left"
SAME_SIGNATURE, CONSTANT_EXPANSION = "same-signature", "constant-expansion"


@dataclass(frozen=True)
class ComparisonReport:
    left: str
    right: str
    size: int
    mode: str
    verdict: str
    witness: Optional[FiniteAlgebra]
    left_count: int
    right_count: int
    constant: Optional[str] = None

    @property
    def equal(self) -> bool:
        return self.verdict == EQUAL

    def to_dict(self) -> dict:
        d = {"left": self.left, "right": self.right, "size": self.size, "mode": self.mode,
             "verdict": self.verdict, "left_count": self.left_count,
             "right_count": self.right_count}
        if self.constant is not None:
            d["constant"] = self.constant
        if self.witness is not None:
            d["witness"] = algebra_dict(self.witness)
        return d


def algebra_dict(a: FiniteAlgebra) -> dict:
    return {"signature": a.signature.name, "size": a.size,
            "tables": {op: list(tab) for (op, _), tab in zip(a.signature.ops, a.tables)}}


def compare_same_signature(t1: Theory, t2: Theory, n: int,
                           config: Optional[SearchConfig] = None) -> ComparisonReport:
    if not t1.signature.same_ops(t2.signature):
        raise SignatureMismatch(f"{t1.name} and {t2.name} have different signatures")
    cfg = config or SearchConfig()
    cfg = SearchConfig(False, cfg.workers, cfg.budget_secs, cfg.split_cells)
    a = model_keys(t1, n, cfg)
    b = model_keys(t2, n, cfg)
    only_a, only_b = sorted(set(a) - set(b)), sorted(set(b) - set(a))
    verdict, witness = EQUAL, None
    if only_a and (not only_b or only_a[0] <= only_b[0]):
        verdict, witness = LEFT_NOT_RIGHT, key_to_algebra(t1.signature, n, only_a[0])
    elif only_b:
        verdict, witness = RIGHT_NOT_LEFT, key_to_algebra(t2.signature, n, only_b[0])
    return ComparisonReport(t1.name, t2.name, n, SAME_SIGNATURE, verdict, witness, len(a), len(b))


def _extra_constant(big: Signature, small: Signature) -> str:
    extra = [(op, k) for op, k in big.ops if small.arity(op) != k]
    if len(extra) != 1 or extra[0][1] != 0 or len(big.ops) != len(small.ops) + 1:
        raise SignatureMismatch(
            f"{big.name} must be {small.name} plus exactly one constant")
    if big.without(extra[0][0]).ops != small.ops:
        raise SignatureMismatch(f"{big.name} and {small.name} list their operators differently")
    return extra[0][0]


def compare_with_constant_expansion(t_big: Theory, t_small: Theory, n: int,
                                    config: Optional[SearchConfig] = None) -> ComparisonReport:
    """Compare a theory with a constant against one over the constant-free signature.

    Equal iff every reduct of a model of ``t_big`` models ``t_small`` and every
    model of ``t_small`` has some value for the constant whose expansion
    models ``t_big``.
    """
    c = _extra_constant(t_big.signature, t_small.signature)
    cfg = config or SearchConfig()
    cfg = SearchConfig(False, cfg.workers, cfg.budget_secs, cfg.split_cells)
    big = model_keys(t_big, n, cfg)
    small = model_keys(t_small, n, cfg)
    big_set, small_set = set(big), set(small)
    pos = _cell_layout(t_big.signature, n)[0][c]

    def reduct(key):
        return key[:pos] + key[pos + 1:]

    def expansions(key):
        return [key[:pos] + (v,) + key[pos:] for v in range(n)]

    bad_big = [k for k in big if reduct(k) not in small_set]
    bad_small = [k for k in small if not any(e in big_set for e in expansions(k))]
    verdict, witness = EQUAL, None
    if bad_big:
        verdict, witness = LEFT_NOT_RIGHT, key_to_algebra(t_big.signature, n, bad_big[0])
    elif bad_small:
        verdict, witness = RIGHT_NOT_LEFT, key_to_algebra(t_small.signature, n, bad_small[0])
    return ComparisonReport(t_big.name, t_small.name, n, CONSTANT_EXPANSION, verdict, witness,
                            len(big), len(small), constant=c)


def smallest_separating_size(t1: Theory, t2: Theory, sizes: Iterable[int],
                             config: Optional[SearchConfig] = None) -> Optional[ComparisonReport]:
    """First size at which the two same-signature theories differ, or None."""
    for n in sizes:
        rep = compare_same_signature(t1, t2, n, config)
        if not rep.equal:
            return rep
    return None


# independence

@dataclass(frozen=True)
class IndependenceReport:
    theory: str
    model: str
    must_hold: tuple[str, ...]
    must_fail: tuple[str, ...]
    results: tuple[SatReport, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        want = {**{h: True for h in self.must_hold}, **{f: False for f in self.must_fail}}
        return all(r.holds == want[r.identity] for r in self.results)

    def to_dict(self) -> dict:
        return {"theory": self.theory, "model": self.model, "must_hold": list(self.must_hold),
                "must_fail": list(self.must_fail), "passed": self.passed,
                "results": [r.to_dict() for r in self.results]}


def verify_independence(t: Theory, m: FiniteAlgebra, must_hold: Iterable[str],
                        must_fail: Iterable[str]) -> IndependenceReport:
    must_hold, must_fail = tuple(must_hold), tuple(must_fail)
    if not m.signature.same_ops(t.signature):
        raise SignatureMismatch(f"model over {m.signature.name}, theory over {t.signature.name}")
    named = list(must_hold) + list(must_fail)
    unknown = [x for x in named if x not in t]
    if unknown:
        raise KeyError(f"unknown identity {unknown[0]!r} in {t.name}")
    if sorted(named) != sorted(t.names):
        raise SearchError("must_hold and must_fail must partition the theory's identities")
    results = tuple(satisfies(m, t[x]) for x in named)
    return IndependenceReport(t.name, m.name, must_hold, must_fail, results)


# soundness of replayed proofs against enumerated models

@dataclass(frozen=True)
class SoundnessViolation:
    script: str
    theory: str
    size: int
    model: FiniteAlgebra
    report: SatReport


@dataclass
class SoundnessSummary:
    checks: int = 0
    models: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def soundness_check(library, sizes: Iterable[int] = (2, 3),
                    config: Optional[SearchConfig] = None) -> SoundnessSummary:
    """Every verified goal must hold in every model of its ambient theory.

    Constants introduced by definition are interpreted by evaluating their
    body; the constancy lemmas are among the goals, so a body that is not
    constant in some model shows up as a violation.
    """
    out = SoundnessSummary()
    by_theory: dict[str, list] = {}
    for name, rep in library.reports.items():
        if rep.ok and library.scripts[name].kind == "lemma":
            by_theory.setdefault(library.scripts[name].theory, []).append(name)
    for th, names in sorted(by_theory.items()):
        ambient = library.ambient(th)
        defs = list(library.definitions.get(th, {}).values())
        for n in sizes:
            models = []
            for a in enumerate_models(ambient, n, config=config):
                sig = a.signature
                for d in defs:
                    sig = sig.extend(d.op, 0, sig.name)
                    a = expand_by_definition(a, sig, d.op, d.body)
                models.append(a)
            out.models[(th, n)] = len(models)
            for name in names:
                goal = library.scripts[name].provides
                for a in models:
                    out.checks += 1
                    rep = satisfies(a, goal)
                    if not rep.holds:
                        out.violations.append(SoundnessViolation(name, th, n, a, rep))
    return out


# bundled expectations

THEOREM_COMPARISONS = (
    ("MV", CONSTANT_EXPANSION, "MV_A", "MV_M"),
    ("CBCK", SAME_SIGNATURE, "CBCK_C", "CBCK_B_elim"),
    ("LBCK", SAME_SIGNATURE, "LBCK_L", "LBCK_B_elim"),
)

INDEPENDENCE_CASES = (
    ("mv_indep_A", "MV_M", ("M1",), ("M2",)),
    ("mv_indep_B", "MV_M", ("M2",), ("M1",)),
    ("bck_indep_proj", "CBCK_C", ("C1",), ("C2",)),
    ("bck_indep_proj", "LBCK_L", ("L1",), ("L2",)),
    ("bck_indep_const", "CBCK_C", ("C2",), ("C1",)),
    ("bck_indep_const", "LBCK_L", ("L2",), ("L1",)),
)
