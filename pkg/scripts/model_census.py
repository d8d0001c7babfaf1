"""Labelled and up-to-isomorphism model counts for every bundled theory."""

import argparse
from dataclasses import dataclass

from mvbasis.search import SearchConfig, model_keys
from mvbasis.theory import builtin_theories


@dataclass(frozen=True)
class Config:
    sizes: tuple[int, ...] = (1, 2, 3)


def run(cfg: Config) -> None:
    head = "".join(f"  n={n:<7}" for n in cfg.sizes)
    print(f"{'theory':12}{head}")
    for name, t in sorted(builtin_theories().items()):
        cells = []
        for n in cfg.sizes:
            lab = len(model_keys(t, n))
            iso = len(model_keys(t, n, SearchConfig(up_to_iso=True)))
            cells.append(f"  {f'{lab}/{iso}':9}")
        print(f"{name:12}{''.join(cells)}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    run(Config(tuple(ap.parse_args().sizes)))
