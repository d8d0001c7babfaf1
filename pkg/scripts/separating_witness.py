"""Find the smallest algebra satisfying C1, C2 but not L2 (equivalently not B5)."""

import argparse
from dataclasses import dataclass

from mvbasis.model import format_model, satisfies
from mvbasis.search import smallest_separating_size
from mvbasis.theory import get_theory


@dataclass(frozen=True)
class Config:
    left: str = "CBCK_C"
    right: str = "LBCK_L"
    max_size: int = 4


def run(cfg: Config) -> int:
    rep = smallest_separating_size(get_theory(cfg.left), get_theory(cfg.right),
                                   range(1, cfg.max_size + 1))
    if rep is None:
        print(f"{cfg.left} and {cfg.right} agree up to size {cfg.max_size}")
        return 1
    print(f"first difference at n={rep.size}: {rep.verdict} "
          f"({rep.left_count} vs {rep.right_count} models)")
    print(format_model(rep.witness, "witness"), end="")
    b5 = get_theory("LBCK_B_elim")["B5"]
    r = satisfies(rep.witness, b5)
    if r.counterexample is not None:
        print(f"B5 fails at {r.counterexample.assignment}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--left", default=Config.left)
    ap.add_argument("--right", default=Config.right)
    ap.add_argument("--max-size", type=int, default=Config.max_size)
    a = ap.parse_args()
    raise SystemExit(run(Config(a.left, a.right, a.max_size)))
