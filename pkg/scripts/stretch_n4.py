"""Size-4 stretch run: each comparison under its own wall-clock budget.

Enumerations that overrun are reported as such rather than as a verdict.
"""

import argparse
import time
from dataclasses import dataclass

from mvbasis.search import (THEOREM_COMPARISONS, CONSTANT_EXPANSION, BudgetExceeded,
                            SearchConfig, SearchStats, model_keys)
from mvbasis.search import compare_same_signature, compare_with_constant_expansion
from mvbasis.theory import get_theory


@dataclass(frozen=True)
class Config:
    size: int = 4
    budget_secs: float = 60.0
    workers: int = 1


def count(name: str, cfg: Config) -> str:
    stats = SearchStats()
    t0 = time.perf_counter()
    try:
        keys = model_keys(get_theory(name), cfg.size,
                          SearchConfig(workers=cfg.workers, budget_secs=cfg.budget_secs), stats)
    except BudgetExceeded as e:
        return f"{name:12} budget exceeded after {e.nodes} nodes ({cfg.budget_secs:g}s)"
    return f"{name:12} {len(keys):4} models  {stats.nodes:9} nodes  {time.perf_counter() - t0:7.2f}s"


def run(cfg: Config) -> int:
    status = 0
    sc = SearchConfig(workers=cfg.workers, budget_secs=cfg.budget_secs)
    for label, mode, left, right in THEOREM_COMPARISONS:
        print(count(left, cfg))
        print(count(right, cfg))
        cmp = compare_with_constant_expansion if mode == CONSTANT_EXPANSION else compare_same_signature
        try:
            r = cmp(get_theory(left), get_theory(right), cfg.size, sc)
        except BudgetExceeded:
            print(f"  {label}: no verdict (budget exceeded)")
            status = max(status, 3)
            continue
        print(f"  {label}: {r.verdict}")
        if not r.equal:
            status = 1
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=Config.size)
    ap.add_argument("--budget-secs", type=float, default=Config.budget_secs)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    raise SystemExit(run(Config(a.size, a.budget_secs, a.workers)))
