"""Check every proved goal in every enumerated model of its ambient theory."""

import argparse
from dataclasses import dataclass, field

from mvbasis.proof import bundled_scripts, check_corpus
from mvbasis.search import soundness_check


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...] = (2, 3)
    rebase: dict = field(default_factory=dict)
    skip: tuple[str, ...] = ()


def run(cfg: Config) -> int:
    lib, reps = check_corpus(bundled_scripts(), rebase=cfg.rebase or None, skip=cfg.skip)
    if not all(r.ok for r in reps):
        print("corpus does not verify")
        return 1
    s = soundness_check(lib, cfg.sizes)
    for (th, n), k in sorted(s.models.items()):
        print(f"{th:8} n={n}: {k} models")
    print(f"{s.checks} goal/model checks, {len(s.violations)} violations")
    for v in s.violations[:5]:
        print(f"  {v.script} fails in a size-{v.size} model of {v.theory}")
    return 0 if s.ok else 1


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    ap.add_argument("--three-base", action="store_true",
                    help="replay the MV scripts over M1, eq9, eq13")
    a = ap.parse_args()
    cfg = Config(tuple(a.sizes))
    if a.three_base:
        cfg = Config(tuple(a.sizes), {"MV_M": "MV_3base"}, ("eq9", "eq13"))
    raise SystemExit(run(cfg))
