"""Replayable equational proofs.

A lemma script is a chain of terms; each link is justified by exactly one
application of a named identity (an axiom of the ambient theory, an earlier
lemma of the same theory, or a definition equation), in either direction,
at one position. The checker finds the position and substitution itself by
matching the identity's two sides against the current term and the target.

A definition script introduces a new constant ``c := body``. It is accepted
only after a lemma ``L = R`` has been verified in which ``L`` and ``R`` share
no variables and ``body`` is one of the two sides up to renaming; that lemma
shows ``body`` does not depend on its variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .term import (App, Term, TermError, Var, format_term, match_term, parse_term,
                   positions, replace_at, subterm_at, substitute, variables)
from .theory import Identity, Signature, Theory, builtin_theories, data_text

LR, RL, EITHER = "lr", "rl", "either"


class ProofError(Exception):
    pass


class ProofParseError(ProofError):
    def __init__(self, msg: str, line: int, source: str = ""):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {msg}")


class RedexMismatch(ProofError):
    pass


@dataclass(frozen=True)
class ProofStep:
    target: Term
    justification: str
    direction: str = EITHER
    position: Optional[tuple] = None
    line: int = 0


@dataclass(frozen=True)
class Lemma:
    goal: Identity
    start: Term
    steps: tuple[ProofStep, ...]


@dataclass(frozen=True)
class Definition:
    op: str
    body: Term
    constancy: str

    @property
    def equation(self) -> Identity:
        return Identity(f"{self.op}_def", App(self.op), self.body)


@dataclass(frozen=True)
class ProofScript:
    name: str
    theory: str
    body: Lemma | Definition
    source: str = ""

    @property
    def kind(self) -> str:
        return "lemma" if isinstance(self.body, Lemma) else "definition"

    @property
    def provides(self) -> Identity:
        """The identity this script makes available to later scripts."""
        return self.body.goal if isinstance(self.body, Lemma) else self.body.equation


@dataclass(frozen=True)
class Witness:
    position: tuple
    substitution: dict
    direction: str

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "direction": self.direction,
            "substitution": {k: format_term(v) for k, v in sorted(self.substitution.items())},
        }


class StepFailure(ProofError):
    def __init__(self, msg: str, near_misses: Sequence = ()):
        self.near_misses = list(near_misses)
        super().__init__(msg)


def _sides(i: Identity, direction: str):
    return (i.lhs, i.rhs) if direction == LR else (i.rhs, i.lhs)


def apply_identity(t: Term, i: Identity, direction: str, p: tuple, s: dict) -> Term:
    """Rewrite the instance of one side of ``i`` at ``p`` into the other side."""
    src, dst = _sides(i, direction)
    if substitute(src, s) != subterm_at(t, p):
        raise RedexMismatch(f"{i.name} ({direction}) does not occur at {list(p)}")
    return replace_at(t, p, substitute(dst, s))


def _same_outside(a: Term, b: Term, p: tuple) -> bool:
    """True if ``a`` and ``b`` agree everywhere except inside position ``p``."""
    for i in p:
        if isinstance(b, Var) or not isinstance(a, App):
            return False
        if a.op != b.op or len(a.args) != len(b.args):
            return False
        if any(x != y for k, (x, y) in enumerate(zip(a.args, b.args)) if k != i):
            return False
        a, b = a.args[i], b.args[i]
    return True


def verify_step(current: Term, step: ProofStep, env: dict) -> Witness:
    """First (leftmost-outermost, lr before rl) witness for one rewrite step.

    ``env`` maps identity names to identities. Raises StepFailure listing the
    positions where a side matched but the rewrite gave a different term.
    """
    ident = env.get(step.justification)
    if ident is None:
        raise StepFailure(f"unresolved justification {step.justification!r}")
    dirs = (LR, RL) if step.direction == EITHER else (step.direction,)
    target = step.target
    cands = [step.position] if step.position is not None else positions(current)
    near = []
    for p in cands:
        try:
            here = subterm_at(current, p)
        except IndexError:
            raise StepFailure(f"position {list(p)} invalid in current term") from None
        if not _same_outside(current, target, p):
            continue
        there = subterm_at(target, p)
        for d in dirs:
            src, dst = _sides(ident, d)
            s = match_term(src, here)
            if s is None:
                continue
            s2 = match_term(dst, there, s)
            if s2 is not None:
                return Witness(tuple(p), s2, d)
            near.append((tuple(p), d))
    msg = f"no single application of {step.justification} yields the target"
    if near:
        msg += "; side matched at " + ", ".join(f"{list(p)} {d}" for p, d in near)
    raise StepFailure(msg, near)


@dataclass
class StepVerdict:
    index: int
    line: int
    justification: str
    ok: bool
    witness: Optional[Witness] = None
    reason: str = ""

    def to_dict(self) -> dict:
        d = {"index": self.index, "line": self.line, "by": self.justification, "ok": self.ok}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        if self.reason:
            d["reason"] = self.reason
        return d


@dataclass
class CheckReport:
    script: str
    theory: str
    kind: str
    goal: str
    ok: bool
    steps: list[StepVerdict] = field(default_factory=list)
    dependencies: list[str] = field(default_factory=list)
    error: str = ""

    @property
    def failed_step(self) -> Optional[int]:
        for v in self.steps:
            if not v.ok:
                return v.index
        return None

    def to_dict(self) -> dict:
        return {
            "script": self.script,
            "theory": self.theory,
            "kind": self.kind,
            "goal": self.goal,
            "verified": self.ok,
            "dependencies": self.dependencies,
            "error": self.error,
            "steps": [v.to_dict() for v in self.steps],
        }


def _is_renaming(a: Term, b: Term) -> bool:
    s = match_term(a, b)
    if s is None or not all(isinstance(v, Var) for v in s.values()):
        return False
    return len({v.name for v in s.values()}) == len(s)


class ProofLibrary:
    """Verified lemmas and definitions, per ambient theory.

    ``rebase`` maps a theory name to another theory whose axioms stand in
    for it when replaying, e.g. ``{"MV_M": "MV_3base"}``.
    """

    def __init__(self, theories: Optional[dict[str, Theory]] = None,
                 rebase: Optional[dict[str, str]] = None):
        self.theories = theories if theories is not None else builtin_theories()
        self.rebase = dict(rebase or {})
        self.reports: dict[str, CheckReport] = {}
        self.scripts: dict[str, ProofScript] = {}
        self.proven: dict[str, dict[str, Identity]] = {}
        self.definitions: dict[str, dict[str, Definition]] = {}

    def ambient(self, theory: str) -> Theory:
        name = self.rebase.get(theory, theory)
        if name not in self.theories:
            raise ProofError(f"unknown theory {name!r}")
        return self.theories[name]

    def env(self, theory: str) -> dict[str, Identity]:
        env = {i.name: i for i in self.ambient(theory).identities}
        for d in self.definitions.get(theory, {}).values():
            env[d.equation.name] = d.equation
        env.update(self.proven.get(theory, {}))
        return env

    def axioms(self, theory: str) -> set[str]:
        return set(self.ambient(theory).names)

    def check(self, script: ProofScript) -> CheckReport:
        """Check one script and, if it verifies, make its result available."""
        if script.name in self.reports:
            raise ProofError(f"script {script.name!r} checked twice")
        try:
            env = self.env(script.theory)
        except ProofError as e:
            rep = CheckReport(script.name, script.theory, script.kind, script.provides.name, False,
                              error=str(e))
            self.reports[script.name] = rep
            return rep
        if isinstance(script.body, Lemma):
            rep = self._check_lemma(script, env)
        else:
            rep = self._check_definition(script, env)
        if rep.ok:
            provided = script.provides
            if provided.name in env:
                rep.ok = False
                rep.error = f"{provided.name!r} already names an available identity"
            elif isinstance(script.body, Definition):
                self.definitions.setdefault(script.theory, {})[script.body.op] = script.body
            else:
                self.proven.setdefault(script.theory, {})[provided.name] = provided
        self.reports[script.name] = rep
        self.scripts[script.name] = script
        return rep

    def _check_lemma(self, script: ProofScript, env) -> CheckReport:
        lem = script.body
        rep = CheckReport(script.name, script.theory, "lemma", lem.goal.name, False)
        if lem.start != lem.goal.lhs:
            rep.error = "chain does not start at the goal's left side"
            return rep
        cur = lem.start
        used = set()
        for k, step in enumerate(lem.steps):
            try:
                w = verify_step(cur, step, env)
            except StepFailure as e:
                rep.steps.append(StepVerdict(k, step.line, step.justification, False, reason=str(e)))
                rep.error = f"step {k} (line {step.line}) failed: {e}"
                rep.dependencies = sorted(used)
                return rep
            rep.steps.append(StepVerdict(k, step.line, step.justification, True, w))
            used.add(step.justification)
            cur = step.target
        rep.dependencies = sorted(used)
        if cur != lem.goal.rhs:
            rep.error = "chain does not end at the goal's right side"
            return rep
        rep.ok = True
        return rep

    def _check_definition(self, script: ProofScript, env) -> CheckReport:
        d = script.body
        rep = CheckReport(script.name, script.theory, "definition", d.equation.name, False,
                          dependencies=[d.constancy])
        lemma = self.proven.get(script.theory, {}).get(d.constancy)
        if lemma is None:
            rep.error = f"constancy lemma {d.constancy!r} not verified in {script.theory}"
            return rep
        if set(variables(lemma.lhs)) & set(variables(lemma.rhs)):
            rep.error = f"constancy lemma {d.constancy!r} shares variables between its sides"
            return rep
        if not (_is_renaming(lemma.lhs, d.body) or _is_renaming(lemma.rhs, d.body)):
            rep.error = f"body is not a side of constancy lemma {d.constancy!r}"
            return rep
        if d.op in env or any(d.op == op for op, _ in self.ambient(script.theory).signature.ops):
            rep.error = f"{d.op!r} is already declared"
            return rep
        rep.ok = True
        return rep

    def check_all(self, scripts: Iterable[ProofScript]) -> list[CheckReport]:
        return [self.check(s) for s in scripts]

    def goal_owner(self, theory: str, name: str) -> Optional[str]:
        for sname, s in self.scripts.items():
            if s.theory == theory and s.provides.name == name and self.reports[sname].ok:
                return sname
        return None


def check_script(script: ProofScript, library: ProofLibrary) -> CheckReport:
    return library.check(script)


def dependency_closure(library: ProofLibrary, root: str, assumed: Iterable[str] = ()) -> set[str]:
    """Axioms (or ``assumed`` names) that transitively ground ``root``.

    ``root`` is a script name or an axiom name.
    """
    assumed = set(assumed)
    if root not in library.reports:
        for t in {s.theory for s in library.scripts.values()}:
            if root in library.axioms(t):
                return {root}
        raise ProofError(f"unknown root {root!r}")
    if not library.reports[root].ok:
        raise ProofError(f"root {root!r} is not verified")
    theory = library.scripts[root].theory
    axioms = library.axioms(theory)
    out: set[str] = set()
    seen: set[str] = set()

    def visit_script(sname: str):
        if sname in seen:
            return
        seen.add(sname)
        for dep in library.reports[sname].dependencies:
            visit_name(dep)

    def visit_name(name: str):
        if name in assumed or name in axioms:
            out.add(name)
            return
        owner = library.goal_owner(theory, name)
        if owner is None:
            raise ProofError(f"{name!r} has no verified provenance in {theory}")
        visit_script(owner)

    if library.scripts[root].provides.name in assumed:
        return {library.scripts[root].provides.name}
    visit_script(root)
    return out


# proof files

_STEP = re.compile(r"^=\s*(?P<term>.+?)\s+by\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
                   r"(?:\s+(?P<dir>lr|rl))?(?:\s+at\s+\[(?P<pos>[0-9,\s]*)\])?\s*$")


class ProofParser:
    """Parses proof files; remembers constants defined in earlier blocks."""

    def __init__(self, theories: Optional[dict[str, Theory]] = None):
        self.theories = theories if theories is not None else builtin_theories()
        self.defined: dict[str, list[tuple[str, int]]] = {}

    def signature(self, theory: str) -> Signature:
        sig = self.theories[theory].signature
        for op, k in self.defined.get(theory, []):
            sig = sig.extend(op, k, sig.name)
        return sig

    def parse(self, text: str, source: str = "") -> list[ProofScript]:
        scripts = []
        cur = None

        def err(msg, lineno):
            return ProofParseError(msg, lineno, source)

        def finish():
            if cur is None:
                return
            if cur["define"] is not None:
                scripts.append(ProofScript(cur["name"], cur["theory"], cur["define"], source))
                return
            if cur["goal"] is None or cur["start"] is None:
                raise err(f"proof {cur['name']!r} needs a goal and a chain", cur["line"])
            scripts.append(ProofScript(cur["name"], cur["theory"],
                                       Lemma(cur["goal"], cur["start"], tuple(cur["steps"])), source))

        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            words = line.split()
            if words[0] == "proof":
                finish()
                if len(words) != 4 or words[2] != "in":
                    raise err("expected 'proof <name> in <theory>'", lineno)
                if words[3] not in self.theories:
                    raise err(f"unknown theory {words[3]!r}", lineno)
                cur = dict(name=words[1], theory=words[3], goal=None, chain=False, start=None,
                           steps=[], define=None, line=lineno)
                continue
            if cur is None:
                raise err("expected 'proof <name> in <theory>'", lineno)
            sig = self.signature(cur["theory"])
            try:
                if words[0] == "goal" or words[0].startswith("goal"):
                    head, sep, body = line.partition(":")
                    hw = head.split()
                    if not sep or hw[0] != "goal" or len(hw) > 2:
                        raise err("expected 'goal [<name>]: <term> = <term>'", lineno)
                    gname = hw[1] if len(hw) == 2 else cur["name"]
                    if body.count("=") != 1:
                        raise err("goal must contain exactly one '='", lineno)
                    l, r = body.split("=")
                    cur["goal"] = Identity(gname, parse_term(l, sig), parse_term(r, sig))
                elif line == "chain:":
                    cur["chain"] = True
                elif words[0] == "define":
                    m = re.match(r"^define\s+([A-Za-z_]\w*)\s*:=\s*(.+?)\s+constancy\s+([A-Za-z_]\w*)$",
                                 line)
                    if not m:
                        raise err("expected 'define <ident> := <term> constancy <lemma>'", lineno)
                    op, body, lemma = m.groups()
                    if sig.arity(op) is not None:
                        raise err(f"{op!r} is already declared", lineno)
                    cur["define"] = Definition(op, parse_term(body, sig), lemma)
                    self.defined.setdefault(cur["theory"], []).append((op, 0))
                elif cur["chain"] and line.startswith("="):
                    m = _STEP.match(line)
                    if not m:
                        raise err("expected '= <term> by <name> [lr|rl] [at [i,...]]'", lineno)
                    pos = None
                    if m["pos"] is not None:
                        pos = tuple(int(x) for x in m["pos"].replace(",", " ").split())
                    cur["steps"].append(ProofStep(parse_term(m["term"], sig), m["name"],
                                                  m["dir"] or EITHER, pos, lineno))
                elif cur["chain"] and cur["start"] is None:
                    cur["start"] = parse_term(line, sig)
                else:
                    raise err(f"unexpected line {line!r}", lineno)
            except TermError as e:
                raise err(str(e), lineno) from None
        finish()
        return scripts


def parse_proofs(*texts: str) -> list[ProofScript]:
    p = ProofParser()
    out = []
    for t in texts:
        out.extend(p.parse(t))
    return out


def format_script(s: ProofScript) -> str:
    lines = [f"proof {s.name} in {s.theory}"]
    if isinstance(s.body, Definition):
        d = s.body
        lines.append(f"  define {d.op} := {format_term(d.body)} constancy {d.constancy}")
    else:
        g = s.body.goal
        lines.append(f"  goal {g.name}: {format_term(g.lhs)} = {format_term(g.rhs)}")
        lines.append("  chain:")
        lines.append(f"    {format_term(s.body.start)}")
        for st in s.body.steps:
            extra = "" if st.direction == EITHER else f" {st.direction}"
            if st.position is not None:
                extra += " at [" + ",".join(map(str, st.position)) + "]"
            lines.append(f"    = {format_term(st.target)}  by {st.justification}{extra}")
    return "\n".join(lines) + "\n"


# replay order matters: each file may use results of the ones before it
PROOF_FILES = ("mv_satisfies_m.proof", "m_axioms_give_mv.proof", "cbck_satisfies_c.proof",
               "c_axioms_give_cbck.proof", "lbck_satisfies_l.proof", "l_axioms_give_lbck.proof")


def bundled_scripts() -> list[ProofScript]:
    p = ProofParser()
    out = []
    for f in PROOF_FILES:
        out.extend(p.parse(data_text("proofs", f), f))
    return out


def check_corpus(scripts: Iterable[ProofScript], rebase: Optional[dict] = None,
                 skip: Iterable[str] = ()) -> tuple[ProofLibrary, list[CheckReport]]:
    """Check scripts in order; ``skip`` names scripts left out (e.g. when rebased)."""
    lib = ProofLibrary(rebase=rebase)
    skip = set(skip)
    reps = [lib.check(s) for s in scripts if s.name not in skip]
    return lib, reps
