"""Command-line front end.

Exit codes: 0 ok, 1 invalid strings found (validate) or other failure,
2 grammar/usage error, 3 empty language or corpus too short, 4 I/O error,
5 state-space cap exceeded, 70 automaton/oracle disagreement (a bug).
Diagnostics go to stderr; stdout only carries machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .automaton import DEFAULT_STATE_CAP, EmptyLanguageError, StateCapError, accepts, compile_grammar
from .experiment import RecipeError, load_recipe, resolve_recipe, run_recipe
from .generator import Corpus, LengthPlan, generate_dataset, read_dataset_file, split_dataset
from .grammar import GrammarError, oracle_is_valid, read_grammar
from .mi import ESTIMATORS, ldd_profile

EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_EMPTY = 3
EXIT_IO = 4
EXIT_STATE_CAP = 5
EXIT_INTERNAL = 70

OUT_ENV = "SPKLDD_OUT"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _warn(msg: str) -> None:
    print(f"spkldd: {msg}", file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return tuple(parts)


def _default_out() -> str:
    return os.environ.get(OUT_ENV, ".")


def cmd_generate(args) -> int:
    g = read_grammar(args.grammar)
    plan = LengthPlan(args.min_len, args.max_len, args.count)
    d = generate_dataset(g, plan, args.seed, workers=args.threads, state_cap=args.state_cap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = [str(d.write(out / f"{args.name}.txt"))]
    if args.split:
        for part in split_dataset(d, args.split):
            files.append(str(part.write(out / f"{args.name}.{part.part}.txt")))
    _emit({"strings": len(d), "symbols": d.n_symbols, "fingerprint": d.fingerprint, "files": files})
    return 0


def _read_corpus(args):
    header, strings = read_dataset_file(args.input)
    symbols = None
    if args.grammar:
        g = read_grammar(args.grammar)
        symbols = g.alphabet.symbols
    corpus = Corpus.from_strings(strings, symbols, args.separator)
    return header, corpus


def cmd_profile(args) -> int:
    header, corpus = _read_corpus(args)
    if len(corpus) < 2:
        raise CliError(f"corpus has {len(corpus)} symbols; at least 2 are needed", EXIT_EMPTY)
    max_distance = args.max_distance
    if max_distance is None:
        if "plan" not in header:
            raise CliError("--max-distance is required for corpora without a generation header", EXIT_USAGE)
        max_distance = 4 * LengthPlan.parse(header["plan"]).max_len
        max_distance = min(max_distance, len(corpus) - 1)
    if not 1 <= max_distance <= len(corpus) - 1:
        raise CliError(f"--max-distance must be in 1..{len(corpus) - 1}", EXIT_USAGE)
    profile = ldd_profile(corpus, max_distance, args.estimator, workers=args.threads, corpus_id=str(args.input))
    text = profile.to_csv(log_floor=args.log_floor)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        _emit({"rows": len(profile), "symbols": len(corpus), "estimator": args.estimator, "out": args.out})
    return 0


def cmd_validate(args) -> int:
    g = read_grammar(args.grammar)
    dfa = compile_grammar(g, args.state_cap)
    _, strings = read_dataset_file(args.input)
    if not strings:
        _warn(f"{args.input}: no strings to validate")
    invalid = []
    disagreements = []
    for lineno, s in enumerate(strings, 1):
        try:
            ids = g.alphabet.encode(s)
        except GrammarError:
            invalid.append(lineno)
            continue
        by_dfa = accepts(dfa, ids)
        by_oracle = oracle_is_valid(g, ids)
        if by_dfa != by_oracle:
            disagreements.append(lineno)
        if not by_oracle:
            invalid.append(lineno)
    for lineno in invalid[:20]:
        _warn(f"invalid string on data line {lineno}")
    for lineno in disagreements[:20]:
        _warn(f"INTERNAL: automaton and oracle disagree on data line {lineno}")
    _emit({"strings": len(strings), "invalid": len(invalid), "disagreements": len(disagreements)})
    if disagreements:
        return EXIT_INTERNAL
    return EXIT_INVALID if invalid else 0


def cmd_experiment(args) -> int:
    recipe = load_recipe(resolve_recipe(args.recipe), seed=args.seed)
    out = Path(args.out) / recipe.name
    log = None if args.quiet else _warn
    paths = run_recipe(recipe, out, workers=args.threads, keep_datasets=args.keep_datasets,
                       state_cap=args.state_cap, log=log)
    _emit({"recipe": recipe.name, "files": [str(p) for p in paths]})
    return 0


def cmd_dump_dfa(args) -> int:
    dfa = compile_grammar(read_grammar(args.grammar), args.state_cap)
    sys.stdout.write(dfa.dump())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spkldd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, threads=True):
        sp.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP,
                        help="abort if the automaton could exceed this many states")
        if threads:
            sp.add_argument("--threads", type=int, default=1, help="worker count; does not change output")

    gen = sub.add_parser("generate", help="sample a dataset from a grammar file")
    gen.add_argument("--grammar", required=True)
    gen.add_argument("--min-len", type=int, required=True)
    gen.add_argument("--max-len", type=int, required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=_default_out(), help=f"output directory (default ${OUT_ENV} or .)")
    gen.add_argument("--name", default="corpus", help="file stem (default: corpus)")
    gen.add_argument("--split", type=_fractions, help="train,valid,test fractions, e.g. 0.8,0.1,0.1")
    common(gen)
    gen.set_defaults(func=cmd_generate)

    prof = sub.add_parser("profile", help="mutual information vs distance of a corpus file")
    prof.add_argument("--input", required=True)
    prof.add_argument("--max-distance", type=int)
    prof.add_argument("--estimator", choices=ESTIMATORS, default="grassberger")
    prof.add_argument("--log-floor", type=float, help="clamp MI to this floor (for log-scale plots)")
    prof.add_argument("--separator", help="symbol inserted between consecutive lines")
    prof.add_argument("--grammar", help="take the symbol order from this grammar's alphabet")
    prof.add_argument("--out", help="CSV path (default: stdout)")
    common(prof)
    prof.set_defaults(func=cmd_profile)

    val = sub.add_parser("validate", help="check every line of a dataset against a grammar")
    val.add_argument("--grammar", required=True)
    val.add_argument("--input", required=True)
    common(val, threads=False)
    val.set_defaults(func=cmd_validate)

    exp = sub.add_parser("experiment", help="run a recipe (bundled: fig2..fig6, fig2_stretch)")
    exp.add_argument("--recipe", required=True)
    exp.add_argument("--out", default=_default_out())
    exp.add_argument("--seed", type=int, help="override the recipe seed")
    exp.add_argument("--keep-datasets", action="store_true")
    exp.add_argument("--quiet", action="store_true")
    common(exp)
    exp.set_defaults(func=cmd_experiment)

    dump = sub.add_parser("dump-dfa", help="print the compiled automaton's edges")
    dump.add_argument("--grammar", required=True)
    common(dump, threads=False)
    dump.set_defaults(func=cmd_dump_dfa)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _warn(str(exc))
        return exc.code
    except EmptyLanguageError as exc:
        _warn(str(exc))
        return EXIT_EMPTY
    except StateCapError as exc:
        _warn(str(exc))
        return EXIT_STATE_CAP
    except (GrammarError, RecipeError) as exc:
        _warn(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _warn(str(exc))
        return EXIT_IO
    except ValueError as exc:
        _warn(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
