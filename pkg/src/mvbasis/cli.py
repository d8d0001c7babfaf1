"""Command-line front end.

Exit status: 0 all checks pass, 1 a verification failed, 2 usage or parse
error, 3 search budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import model as M
from . import proof as P
from . import search as S
from .term import TermError, format_term, parse_term, size, variables
from .theory import (Identity, TheoryError, builtin_signatures, builtin_theories,
                     data_text, derived_identity, get_theory, parse_identity)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
MAX_SIZE, MAX_STRETCH_SIZE = 3, 6
STRETCH_BUDGET = 300.0


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    paths: list[str] = field(default_factory=list)
    size: Optional[int] = None
    json: bool = False
    up_to_iso: bool = False
    count_only: bool = False
    exhaustive: bool = False
    workers: int = 1
    seed: int = 0
    budget_secs: Optional[float] = None
    stretch: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(ns.command, list(getattr(ns, "paths", []) or []), getattr(ns, "size", None),
                  ns.json, getattr(ns, "up_to_iso", False), getattr(ns, "count_only", False),
                  getattr(ns, "exhaustive", False), ns.workers, ns.seed, ns.budget_secs, ns.stretch)
        cfg.validate()
        return cfg

    def validate(self):
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.budget_secs is not None and self.budget_secs <= 0:
            raise UsageError("--budget-secs must be positive")
        if self.size is not None:
            hi = MAX_STRETCH_SIZE if self.stretch else MAX_SIZE
            if not 1 <= self.size <= hi:
                extra = "" if self.stretch else " (use --stretch for larger sizes)"
                raise UsageError(f"--size must be between 1 and {hi}{extra}")
        if self.stretch and self.budget_secs is None:
            self.budget_secs = STRETCH_BUDGET

    def search_config(self, up_to_iso: bool = False) -> S.SearchConfig:
        return S.SearchConfig(up_to_iso, self.workers, self.budget_secs)


def _emit(cfg: RunConfig, doc: dict, text: str):
    if cfg.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text.rstrip("\n"))


def _theory(name: str):
    t = get_theory(name)
    if t is None:
        raise UsageError(f"unknown theory {name!r}; known: {', '.join(sorted(builtin_theories()))}")
    return t


def _load_model(spec: str) -> M.FiniteAlgebra:
    p = Path(spec)
    if p.exists():
        ms = M.parse_models(p.read_text(), builtin_signatures())
        if len(ms) != 1:
            raise UsageError(f"{spec}: expected exactly one model, found {len(ms)}")
        return ms[0]
    if spec in M.INDEPENDENCE_MODELS:
        return M.load_model(spec)
    raise UsageError(f"no model file or bundled model named {spec!r}")


def _identity(text: str, a: M.FiniteAlgebra, theory: Optional[str]) -> Identity:
    if "=" in text:
        return parse_identity("goal", text, a.signature)
    if theory:
        t = _theory(theory)
        if text not in t:
            raise UsageError(f"{theory} has no identity {text!r}")
        return t[text]
    for t in builtin_theories().values():
        if text in t and t.signature.same_ops(a.signature):
            return t[text]
    found = derived_identity(text)
    if found is None:
        raise UsageError(f"unknown identity {text!r}")
    return found


# commands

def cmd_term(cfg: RunConfig, ns) -> int:
    if ns.sig:
        sig = builtin_signatures().get(ns.sig)
        if sig is None:
            raise UsageError(f"unknown signature {ns.sig!r}")
    else:
        # every bundled operator; a clash in arity would be a catalog bug
        sig = {op: k for s in builtin_signatures().values() for op, k in s.ops}
    t = parse_term(ns.text, sig)
    _emit(cfg, {"term": format_term(t), "variables": variables(t), "size": size(t)}, format_term(t))
    return EXIT_OK


def cmd_check_proof(cfg: RunConfig, ns) -> int:
    if not cfg.paths and not ns.bundled:
        raise UsageError("check-proof needs at least one proof file (or --bundled)")
    parser = P.ProofParser()
    scripts: list[P.ProofScript] = []
    if ns.bundled:
        for f in P.PROOF_FILES:
            scripts.extend(parser.parse(data_text("proofs", f), f))
    for path in cfg.paths:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise UsageError(f"{path}: {e.strerror}") from None
        scripts.extend(parser.parse(text, path))
    rebase = dict(r.split("=", 1) for r in ns.rebase) if ns.rebase else None
    lib, reports = P.check_corpus(scripts, rebase=rebase, skip=ns.skip or ())
    ok = all(r.ok for r in reports)
    lines = []
    for r in reports:
        if r.ok:
            lines.append(f"ok    {r.script}: {r.goal}  [{', '.join(r.dependencies)}]")
        else:
            where = f" step {r.failed_step}" if r.failed_step is not None else ""
            lines.append(f"FAIL  {r.script}{where}: {r.error}")
    lines.append(f"{sum(r.ok for r in reports)}/{len(reports)} scripts verified")
    _emit(cfg, {"ok": ok, "reports": [r.to_dict() for r in reports]}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_eval(cfg: RunConfig, ns) -> int:
    a = _load_model(ns.model)
    i = _identity(ns.identity, a, ns.theory)
    rep = M.satisfies(a, i, exhaustive=cfg.exhaustive)
    text = f"{i.name}: {'holds' if rep.holds else 'fails'}"
    if rep.counterexample is not None:
        c = rep.counterexample
        env = ", ".join(f"{k}={v}" for k, v in c.assignment.items())
        text += f"  (counterexample {env}: lhs={c.lhs_value}, rhs={c.rhs_value})"
    _emit(cfg, rep.to_dict(), text)
    return EXIT_OK if rep.holds else EXIT_FAIL


def cmd_chain(cfg: RunConfig, ns) -> int:
    if not 2 <= ns.n <= 64:
        raise UsageError("--n must be between 2 and 64")
    a = M.lukasiewicz_chain(ns.n)
    if ns.reduct:
        a = M.bck_reduct(a, keep_constants=ns.constants)
    name = f"L{ns.n}" + ("_imp" if ns.reduct else "")
    _emit(cfg, {"name": name, **S.algebra_dict(a)}, M.format_model(a, name))
    return EXIT_OK


def cmd_models(cfg: RunConfig, ns) -> int:
    t = _theory(ns.theory)
    if cfg.size is None:
        raise UsageError("models needs --size")
    stats = S.SearchStats()
    keys = S.model_keys(t, cfg.size, cfg.search_config(cfg.up_to_iso), stats)
    algs = [S.key_to_algebra(t.signature, cfg.size, k) for k in keys]
    doc = {"theory": t.name, "size": cfg.size, "up_to_iso": cfg.up_to_iso, "count": len(algs),
           "nodes": stats.nodes, "seconds": round(stats.seconds, 3)}
    if not cfg.count_only:
        doc["models"] = [S.algebra_dict(a) for a in algs]
    if cfg.count_only:
        text = f"{t.name} n={cfg.size}: {len(algs)} model(s)"
    else:
        text = "\n".join(M.format_model(a, f"{t.name}_{cfg.size}_{j}") for j, a in enumerate(algs))
        text += f"# {len(algs)} model(s)\n"
    _emit(cfg, doc, text)
    return EXIT_OK


def _compare(left: str, right: str, n: int, sc: S.SearchConfig) -> S.ComparisonReport:
    a, b = _theory(left), _theory(right)
    if a.signature.same_ops(b.signature):
        return S.compare_same_signature(a, b, n, sc)
    return S.compare_with_constant_expansion(a, b, n, sc)


def _comparison_line(r: S.ComparisonReport) -> str:
    return (f"{r.left} vs {r.right} n={r.size} ({r.mode}): {r.verdict}"
            f"  [{r.left_count}/{r.right_count} models]")


def cmd_compare(cfg: RunConfig, ns) -> int:
    if cfg.size is None:
        raise UsageError("compare needs --size")
    r = _compare(ns.left, ns.right, cfg.size, cfg.search_config())
    text = _comparison_line(r)
    if r.witness is not None:
        text += "\n" + M.format_model(r.witness, "witness")
    _emit(cfg, r.to_dict(), text)
    return EXIT_OK if r.equal else EXIT_FAIL


def _independence_cases(ns):
    if ns.model is None:
        return [(m, th, h, f) for m, th, h, f in S.INDEPENDENCE_CASES]
    if ns.theory is None:
        raise UsageError("independence with a model needs --theory")
    return [(ns.model, ns.theory, tuple(ns.hold or ()), tuple(ns.fail or ()))]


def _run_independence(cases) -> list[S.IndependenceReport]:
    out = []
    for m, th, hold, fail in cases:
        a = _load_model(m)
        a = M.FiniteAlgebra(a.signature, a.size, a.tables, a.name or Path(m).stem)
        out.append(S.verify_independence(_theory(th), a, hold, fail))
    return out


def _independence_line(r: S.IndependenceReport) -> str:
    parts = []
    for s in r.results:
        parts.append(f"{s.identity} {'holds' if s.holds else 'fails'}")
    return f"{'pass' if r.passed else 'FAIL'}  {r.model} in {r.theory}: {', '.join(parts)}"


def cmd_independence(cfg: RunConfig, ns) -> int:
    try:
        reps = _run_independence(_independence_cases(ns))
    except (KeyError, S.SearchError) as e:
        raise UsageError(str(e).strip("'\"")) from None
    ok = all(r.passed for r in reps)
    _emit(cfg, {"ok": ok, "reports": [r.to_dict() for r in reps]},
          "\n".join(_independence_line(r) for r in reps))
    return EXIT_OK if ok else EXIT_FAIL


def _closure_spot_check(theory_name: str, n: int, keys: list, rng: random.Random, k: int = 4) -> bool:
    """Relabel a few models by random bijections and check they stay models."""
    t = _theory(theory_name)
    for key in rng.sample(keys, min(k, len(keys))):
        perm = list(range(n))
        rng.shuffle(perm)
        a = S.key_to_algebra(t.signature, n, key).relabel(perm)
        if not M.models_theory(a, t):
            return False
    return True


def cmd_verify_theorems(cfg: RunConfig, ns) -> int:
    n = cfg.size if cfg.size is not None else 2
    sc = cfg.search_config()
    rng = random.Random(cfg.seed)
    doc: dict = {"size": n, "seed": cfg.seed, "comparisons": [], "independence": []}
    lines = []
    status = EXIT_OK
    for label, mode, left, right in S.THEOREM_COMPARISONS:
        try:
            r = _compare(left, right, n, sc)
        except S.BudgetExceeded as e:
            doc["comparisons"].append({"theorem": label, "left": left, "right": right, "size": n,
                                       "verdict": "budget-exceeded", "nodes": e.nodes})
            lines.append(f"{label:5} {left} vs {right} n={n}: budget exceeded ({e})")
            status = EXIT_BUDGET
            continue
        d = {"theorem": label, **r.to_dict()}
        keys = S.model_keys(_theory(right), n, S.SearchConfig(False, cfg.workers, cfg.budget_secs))
        d["closure_spot_check"] = _closure_spot_check(right, n, keys, rng)
        doc["comparisons"].append(d)
        lines.append(f"{label:5} {_comparison_line(r)}")
        if (not r.equal or not d["closure_spot_check"]) and status == EXIT_OK:
            status = EXIT_FAIL
    for r in _run_independence(S.INDEPENDENCE_CASES):
        doc["independence"].append(r.to_dict())
        lines.append(f"indep {_independence_line(r)}")
        if not r.passed and status == EXIT_OK:
            status = EXIT_FAIL
    doc["status"] = status
    lines.append({EXIT_OK: "all verdicts match", EXIT_FAIL: "verification FAILED",
                  EXIT_BUDGET: "budget exceeded"}[status])
    _emit(cfg, doc, "\n".join(lines))
    return status


COMMANDS = {
    "term": cmd_term,
    "check-proof": cmd_check_proof,
    "eval": cmd_eval,
    "chain": cmd_chain,
    "models": cmd_models,
    "compare": cmd_compare,
    "independence": cmd_independence,
    "verify-theorems": cmd_verify_theorems,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON document")
    common.add_argument("--workers", type=int, default=1, help="parallel search workers")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks")
    common.add_argument("--budget-secs", type=float, default=None, help="wall-clock search budget")
    common.add_argument("--stretch", action="store_true",
                        help=f"allow sizes up to {MAX_STRETCH_SIZE} (default budget {STRETCH_BUDGET:g}s)")

    p = _Parser(prog="mvbasis", description="Proof replay and finite-model checks for "
                "short bases of MV-, commutative BCK- and Lukasiewicz BCK-algebras.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("term", parents=[common], help="parse and echo a term")
    q.add_argument("text")
    q.add_argument("--sig", help="signature name; undeclared identifiers are variables")

    q = sub.add_parser("check-proof", parents=[common], help="replay proof files")
    q.add_argument("paths", nargs="*")
    q.add_argument("--bundled", action="store_true", help="check the bundled corpus first")
    q.add_argument("--rebase", action="append", metavar="THEORY=OTHER",
                   help="replay THEORY's scripts over OTHER's axioms")
    q.add_argument("--skip", action="append", metavar="SCRIPT", help="leave a script out")

    q = sub.add_parser("eval", parents=[common], help="check an identity in a model")
    q.add_argument("model", help="model file or bundled model name")
    q.add_argument("identity", help="identity name or 'lhs = rhs'")
    q.add_argument("--theory", help="theory the identity name refers to")
    q.add_argument("--exhaustive", action="store_true", help="collect all counterexamples")

    q = sub.add_parser("chain", parents=[common], help="emit a Lukasiewicz chain")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--reduct", action="store_true", help="implication reduct instead")
    q.add_argument("--constants", action="store_true", help="keep one in the reduct")

    q = sub.add_parser("models", parents=[common], help="enumerate models of a theory")
    q.add_argument("theory")
    q.add_argument("--size", type=int, required=True)
    q.add_argument("--up-to-iso", action="store_true")
    q.add_argument("--count-only", action="store_true")

    q = sub.add_parser("compare", parents=[common], help="compare two theories at one size")
    q.add_argument("left")
    q.add_argument("right")
    q.add_argument("--size", type=int, required=True)

    q = sub.add_parser("independence", parents=[common], help="check independence models")
    q.add_argument("model", nargs="?", help="model file or bundled name (default: all fixtures)")
    q.add_argument("--theory")
    q.add_argument("--hold", action="append")
    q.add_argument("--fail", action="append")

    q = sub.add_parser("verify-theorems", parents=[common],
                       help="all three basis comparisons plus the independence fixtures")
    q.add_argument("--size", type=int, default=2)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg, ns)
    except UsageError as e:
        print(f"mvbasis: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TermError, TheoryError, P.ProofError, M.ModelError) as e:
        print(f"mvbasis: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except S.BudgetExceeded as e:
        print(f"mvbasis: {e}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
