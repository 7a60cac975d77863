"""Command-line front end: ``wol run|check|rule|spost``.

Exit codes: 0 Holds/Accepted/converged, 1 Fails/Rejected, 2 Undecided or
not converged, 3 parse or configuration error, 4 partiality error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from .assertions import Status, spost
from .parser import ParseError, load_program, parse_block_file, _sub
from .rules import apply_rule, check_soundness_sample, instances_from_blockfile
from .semantics import Evaluator
from .semiring import PartialityError, default_policy, get_semiring
from .triples import SpecError, check_triple, parse_generator, specs_from_blockfile

EXIT_OK, EXIT_FAIL, EXIT_UNDECIDED, EXIT_PARSE, EXIT_PARTIAL = 0, 1, 2, 3, 4
EXIT_BY_STATUS = {Status.HOLDS: EXIT_OK, Status.FAILS: EXIT_FAIL, Status.UNDECIDED: EXIT_UNDECIDED}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    semiring: str | None = None
    init: dict | None = None
    max_iter: int | None = None
    epsilon: Fraction | None = None
    trace: bool = False
    format: str = "text"

    def validate(self, sr):
        if self.epsilon is not None and get_semiring(sr).name != "prob":
            raise ConfigError("--epsilon only applies to the prob semiring")
        if self.format not in ("text", "records"):
            raise ConfigError(f"unknown format {self.format!r}")

    def policy(self, sr):
        self.validate(sr)
        cap = self.max_iter
        if cap is None and os.environ.get("WOL_MAX_ITER"):
            try:
                cap = int(os.environ["WOL_MAX_ITER"])
            except ValueError:
                raise ConfigError("WOL_MAX_ITER must be an integer") from None
        return default_policy(sr, cap=cap, epsilon=self.epsilon)


def parse_init(text):
    """'x=0,y=0' -> {'x': 0, 'y': 0}; 'n=m=2' sets both."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        parts = [p.strip() for p in item.split("=")]
        if len(parts) < 2 or not all(parts):
            raise ConfigError(f"bad --init item {item!r}; expected name=integer")
        try:
            v = int(parts[-1])
        except ValueError:
            raise ConfigError(f"--init value {parts[-1]!r} is not an integer") from None
        for name in parts[:-1]:
            out[name] = v
    return out


def parse_epsilon(text):
    try:
        e = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad --epsilon {text!r}; expected a/b") from None
    if e <= 0:
        raise ConfigError("--epsilon must be positive")
    return e


def _records(kind, **kw):
    return kind + "".join(f"\t{k}={v}" for k, v in kw.items())


# ------------------------------------------------------------------ commands

def cmd_run(path, cfg: RunConfig, out=print):
    srname = cfg.semiring or "bool"
    policy = cfg.policy(srname)
    sr = get_semiring(srname)
    prog = load_program(path, sr)
    try:
        s = prog.state(cfg.init)
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from None
    trace = None
    if cfg.trace:
        def trace(C, k, wf):
            out(_records("approx", k=k, wf=wf.render()) if cfg.format == "records"
                else f"approximant {k}: {wf.render()}")
    res = Evaluator(sr, policy, trace).run(prog.body, s)
    status = "converged" if res.converged else "not converged"
    if cfg.format == "records":
        out(_records("run", semiring=sr.name, converged=str(res.converged).lower(),
                     iterations=res.iterations, mass=sr.render(res.wf.mass()),
                     residual=res.residual))
        for st, w in res.wf.items():
            out(_records("out", **{n: v for n, v in zip(st.names, st.values)}, weight=sr.render(w)))
    else:
        out(res.wf.render())
        line = f"{status} after {res.iterations} iteration(s)"
        if sr.name == "prob" and res.residual:
            line += f", residual {res.residual}"
        out(line)
    return EXIT_OK if res.converged else EXIT_UNDECIDED


def _load_blocks(path):
    with open(path, encoding="utf-8") as f:
        return parse_block_file(f.read(), str(path))


def cmd_check(path, cfg: RunConfig, out=print):
    bf = _load_blocks(path)
    specs = specs_from_blockfile(bf, cfg.semiring)
    code = EXIT_OK
    for spec in specs:
        policy = cfg.policy(spec.sr)
        rep = check_triple(spec, policy)
        if cfg.format == "records":
            out(_records("triple", name=spec.name or "-", status=rep.status.value,
                         models=len(rep.records)))
            if rep.verdict.witness is not None:
                out(_records("witness", name=spec.name or "-", model=rep.verdict.witness.render()))
        else:
            out(rep.summary())
            for n in rep.notes:
                out("  note: " + n)
        code = max(code, EXIT_BY_STATUS[rep.status])
    return code


def cmd_rule(path, cfg: RunConfig, out=print, soundness=False):
    bf = _load_blocks(path)
    insts = instances_from_blockfile(bf, cfg.semiring)
    code = EXIT_OK
    for inst in insts:
        policy = cfg.policy(inst.sr)
        res = apply_rule(inst, policy)
        if cfg.format == "records":
            out(_records("rule", name=inst.name or "-", schema=inst.rule, status=res.status,
                         obligations=len(res.obligations)))
            for o in res.failed():
                out(_records("obligation", name=inst.name or "-", kind=o.kind,
                             status=o.verdict.status.value, what=o.what))
        else:
            out(res.summary())
            out("  conclusion: " + res.conclusion.render())
            for o in res.failed():
                out("  " + o.render())
        code = max(code, {"Accepted": EXIT_OK, "Rejected": EXIT_FAIL}.get(res.status, EXIT_UNDECIDED))
        if soundness and res.accepted:
            rep = check_soundness_sample(res, policy=policy)
            out(("  " if cfg.format == "text" else "") + (
                _records("soundness", name=inst.name or "-", status=rep.status.value)
                if cfg.format == "records" else "soundness: " + rep.summary()))
            code = max(code, EXIT_BY_STATUS[rep.status])
    return code


def cmd_spost(path, models_text, cfg: RunConfig, out=print):
    srname = cfg.semiring or "bool"
    policy = cfg.policy(srname)
    sr = get_semiring(srname)
    prog = load_program(path, sr)
    if models_text:
        p = _sub(models_text, prog.vars, prog.graph, sr=sr)
        gen = parse_generator(p)
        if p.tok.kind != "eof":
            p.error(f"unexpected {p.tok.text!r}")
        models = gen.models(sr, prog.vars)
    else:
        try:
            s = prog.state(cfg.init)
        except KeyError as e:
            raise ConfigError(str(e.args[0])) from None
        from .weighting import unit
        models = [unit(sr, s)]
    res = spost(prog.body, models, policy)
    for m_out in res.models:
        out(_records("post", model=m_out.render()) if cfg.format == "records" else m_out.render())
    if cfg.format == "records":
        out(_records("spost", models=len(res.models), converged=str(res.converged).lower()))
    else:
        out(f"{len(res.models)} distinct output model(s) from {len(models)} input(s)"
            + ("" if res.converged else ", not converged"))
    return EXIT_OK if res.converged else EXIT_UNDECIDED


# ---------------------------------------------------------------------- main

def build_parser():
    ap = argparse.ArgumentParser(prog="wol", description="Weighted programs and outcome triples.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--semiring", help="bool, det, nat, prob, trop or lang")
        p.add_argument("--init", help="initial state, e.g. x=0,y=0")
        p.add_argument("--max-iter", type=int, help="loop iteration cap (default: $WOL_MAX_ITER)")
        p.add_argument("--epsilon", help="prob truncation threshold a/b")
        p.add_argument("--trace", action="store_true", help="print each loop approximant")
        p.add_argument("--format", choices=("text", "records"), default="text")

    p = sub.add_parser("run", help="evaluate a program from one state")
    p.add_argument("file")
    common(p)
    p = sub.add_parser("check", help="validate the triples of a spec file")
    p.add_argument("file")
    common(p)
    p = sub.add_parser("rule", help="check the rule instances of a .wrule file")
    p.add_argument("args", nargs="+", metavar="[check] file")
    p.add_argument("--soundness", action="store_true",
                   help="also validate accepted conclusions semantically")
    common(p)
    p = sub.add_parser("spost", help="strongest postcondition on a set of models")
    p.add_argument("file")
    p.add_argument("models", nargs="?", help="model generator, e.g. 'states(x in 0..3)'")
    common(p)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.semiring, parse_init(args.init), args.max_iter,
                        parse_epsilon(args.epsilon) if args.epsilon else None, args.trace,
                        args.format)
        if cfg.semiring is not None:
            get_semiring(cfg.semiring)
        if args.command == "run":
            return cmd_run(args.file, cfg)
        if args.command == "check":
            return cmd_check(args.file, cfg)
        if args.command == "rule":
            rest = args.args[1:] if args.args[0] == "check" and len(args.args) > 1 else args.args
            if len(rest) != 1:
                raise ConfigError("rule expects exactly one instance file")
            return cmd_rule(rest[0], cfg, soundness=args.soundness)
        return cmd_spost(args.file, args.models, cfg)
    except (ParseError, SpecError, ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except PartialityError as e:
        print(f"partiality error: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
