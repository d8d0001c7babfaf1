"""Run the three basis comparisons and the independence fixtures at one or more sizes."""

import argparse
import time
from dataclasses import dataclass

from mvbasis.model import load_model
from mvbasis.search import (INDEPENDENCE_CASES, THEOREM_COMPARISONS, CONSTANT_EXPANSION,
                            SearchConfig, compare_same_signature, compare_with_constant_expansion,
                            verify_independence)
from mvbasis.theory import get_theory


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...] = (1, 2, 3)
    workers: int = 1


def run(cfg: Config) -> bool:
    sc = SearchConfig(workers=cfg.workers)
    ok = True
    for n in cfg.sizes:
        for label, mode, left, right in THEOREM_COMPARISONS:
            t0 = time.perf_counter()
            cmp = compare_with_constant_expansion if mode == CONSTANT_EXPANSION else compare_same_signature
            r = cmp(get_theory(left), get_theory(right), n, sc)
            ok &= r.equal
            print(f"n={n} {label:5} {left:8} vs {right:12} {r.verdict:15} "
                  f"{r.left_count:3}/{r.right_count:<3} {time.perf_counter() - t0:6.2f}s")
    for m, th, hold, fail in INDEPENDENCE_CASES:
        r = verify_independence(get_theory(th), load_model(m), hold, fail)
        ok &= r.passed
        print(f"independence {m:16} in {th:7} hold={','.join(hold)} fail={','.join(fail)}: "
              f"{'pass' if r.passed else 'FAIL'}")
    return ok


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    raise SystemExit(0 if run(Config(tuple(a.sizes), a.workers)) else 1)
