"""Semiring-weighted imperative programs and outcome-triple checking.

Submodules: ``semiring`` (weight algebras), ``weighting`` (states and
weighting functions), ``syntax``/``parser``/``pretty`` (the language),
``semantics`` (the interpreter), ``assertions`` (outcome assertions),
``triples`` (validation and oracles), ``rules`` (proof-rule instances),
``hyper`` (hyper-assertion transformers) and ``cli``.
"""
from .assertions import HOLDS, SatOptions, Status, Verdict, satisfies, spost
from .parser import ParseError, load_program, parse_assertion, parse_program, parse_test
from .semantics import EvalResult, Evaluator, eval_on, evaluate, unroll_sum
from .semiring import (BOOL, DET, LANG, NAT, PROB, TROP, ConvergencePolicy, PartialityError,
                       default_policy, get_semiring)
from .triples import TripleSpec, check_hoare, check_lisbon, check_triple, load_specs
from .weighting import State, WeightingFunction, unit

__version__ = "0.1.0"

__all__ = [
    "BOOL", "DET", "NAT", "PROB", "TROP", "LANG", "get_semiring", "default_policy",
    "ConvergencePolicy", "PartialityError", "State", "WeightingFunction", "unit",
    "Evaluator", "EvalResult", "evaluate", "eval_on", "unroll_sum", "ParseError",
    "parse_program", "load_program", "parse_assertion", "parse_test", "Status", "Verdict",
    "HOLDS", "SatOptions", "satisfies", "spost", "TripleSpec", "check_triple", "check_hoare",
    "check_lisbon", "load_specs",
]
