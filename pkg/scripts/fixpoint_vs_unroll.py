"""Compare the loop engine with plain unrolling on random Iter programs.

Prints, per semiring, how many programs matched and the distribution of
the unrolling index at which the partial sum reaches the loop's value.

    python scripts/fixpoint_vs_unroll.py [--count 200] [--seed 0]
"""
import argparse
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass, field

from wol.randprog import fixpoint_vs_unroll, random_iter_program


@dataclass
class Config:
    count: int = 200
    seed: int = 0
    size: int = 8
    semirings: list = field(default_factory=lambda: ["bool", "det", "nat", "prob", "trop", "lang"])


def run(cfg: Config):
    rng = random.Random(cfg.seed)
    failures = 0
    for sr in cfg.semirings:
        t0 = time.perf_counter()
        idx = Counter()
        bad = []
        for _ in range(cfg.count):
            C, s = random_iter_program(rng, sr, cfg.size)
            ok, n, detail = fixpoint_vs_unroll(C, s, sr)
            if ok:
                idx[n] += 1
            else:
                bad.append(detail)
        failures += len(bad)
        spread = ", ".join(f"{n}:{c}" for n, c in sorted(idx.items()))
        print(f"{sr:5} {cfg.count - len(bad)}/{cfg.count} match  "
              f"[{time.perf_counter() - t0:.2f}s]  index histogram {{{spread}}}")
        for d in bad[:3]:
            print("      " + d)
    return failures


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=Config.count)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--size", type=int, default=Config.size, help="values of x range over 0..size-1")
    args = ap.parse_args(argv)
    return 1 if run(Config(args.count, args.seed, args.size)) else 0


if __name__ == "__main__":
    sys.exit(main())
