"""Check every shipped case study and print one line per triple or rule instance.

    python scripts/case_studies.py [--soundness] [--dir DIR]
"""
import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import wol
from wol.rules import apply_rule, check_soundness_sample, load_instances, meets_expectation
from wol.triples import check_triple, load_specs


@dataclass
class Config:
    root: Path = Path(wol.__file__).parent / "casestudies"
    soundness: bool = False


def run(cfg: Config):
    bad = 0
    for path in sorted((cfg.root / "specs").glob("*.wspec")):
        for spec in load_specs(path):
            t0 = time.perf_counter()
            rep = check_triple(spec)
            ok = spec.expect is None or rep.status.value == spec.expect
            bad += not ok
            print(f"{'ok ' if ok else 'BAD'} {path.stem:16} {rep.summary()} "
                  f"[{time.perf_counter() - t0:.2f}s]")
    for path in sorted((cfg.root / "rules").glob("*.wrule")):
        for inst in load_instances(path):
            res = apply_rule(inst)
            ok = meets_expectation(res)
            line = res.summary()
            if cfg.soundness and res.accepted:
                rep = check_soundness_sample(res)
                ok &= rep.status.value == "Holds"
                line += f"; conclusion {rep.status.value}"
            bad += not ok
            print(f"{'ok ' if ok else 'BAD'} {path.stem:16} {line}")
    return bad


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dir", type=Path, default=Config.root, help="case-study directory")
    ap.add_argument("--soundness", action="store_true", help="also check accepted conclusions")
    args = ap.parse_args(argv)
    bad = run(Config(args.dir, args.soundness))
    print(f"{bad} unexpected result(s)")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
