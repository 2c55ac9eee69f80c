"""``filtermin`` command line.

Exit codes: 0 success, 1 the checked property fails, 2 bad usage or input,
3 the result is valid but minimality was not certified (a solver timeout).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
from pathlib import Path

from . import __version__
from .compat import ComplexTooLarge, compatibility_graph
from .encode import MODES, MINIMAL_NONFACE, EncodeOptions, EncodingError, encode_k_cover
from .filter import FilterError, PFilter, dumps, loads, prune_unreachable, to_dot
from .instances import BUILTIN_NAMES, UnknownInstance, builtin, gen_grid, gen_nxm
from .minimize import MinimizeOptions, SoundnessError, build_complex, minimize, prepare
from .oracle import OracleTooLarge, brute_force_minimize, random_filter, verify_solution
from .solvers import SolverError, get_solver
from .zipper import TooManyZippers, generate_zippers, zippers_to_text

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNCERTIFIED = 0, 1, 2, 3
DEFAULT_SEED = 0

log = logging.getLogger("filtermin")


class UsageError(Exception):
    pass


def _read_filter(path: str | None) -> PFilter:
    try:
        text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        return loads(text)
    except (FilterError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid filter file {path or '<stdin>'}: {exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--solver",
        default=None,
        help="auto | builtin | pysat[:name] | exec:<path> (default: $FILTERMIN_SOLVER, then auto)",
    )
    p.add_argument("--timeout", type=float, default=None, help="seconds per SAT call")


def _minimize_options(args) -> MinimizeOptions:
    return MinimizeOptions(
        mode=args.mode,
        encoding=args.encoding,
        symmetry_breaking=args.symmetry_breaking,
        binary_search=args.binary_search,
        timeout=args.timeout,
        bounds=args.bounds,
    )


# -- commands -----------------------------------------------------------------------


def cmd_minimize(args) -> int:
    F = _read_filter(args.input)
    report = minimize(F, get_solver(args.solver), _minimize_options(args))
    if args.out:
        _write(args.out, dumps(report.minimal_filter))
    if args.dot:
        _write(args.dot, to_dot(report.minimal_filter))
    summary = report.summary()
    text = json.dumps(summary, indent=2) + "\n"
    if args.report:
        _write(args.report, text)
    # when the filter itself goes to stdout the report moves to stderr
    (sys.stderr if args.out == "-" else sys.stdout).write(text)
    return EXIT_OK if report.certified else EXIT_UNCERTIFIED


def cmd_encode(args) -> int:
    F = prepare(_read_filter(args.input))
    opts = MinimizeOptions(mode=args.mode)
    cx, _ = build_complex(F, opts)
    zippers = generate_zippers(F, cx)
    k = args.k if args.k is not None else len(F)
    cnf = encode_k_cover(cx, zippers, k, EncodeOptions(args.encoding, args.symmetry_breaking))
    _write(args.out, cnf.dimacs())
    if args.map:
        _write(args.map, cnf.var_map_text())
    sys.stderr.write(
        f"k={k} vars={cnf.num_vars} clauses={cnf.num_clauses} groups={json.dumps(cnf.group_sizes)}\n"
    )
    return EXIT_OK


def cmd_zippers(args) -> int:
    F = prepare(_read_filter(args.input))
    cx, _ = build_complex(F, MinimizeOptions(mode=args.mode))
    zippers = generate_zippers(F, cx)
    _write(args.out, zippers_to_text(zippers) + f"count {len(zippers)}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    ref = _read_filter(args.reference)
    cand = _read_filter(args.candidate)
    verdict = verify_solution(ref, cand)
    result = {
        "deterministic": verdict.deterministic,
        "output_simulates": verdict.simulation.holds,
        "size": verdict.size,
    }
    if not verdict.simulation.holds:
        result["counterexample"] = list(verdict.simulation.counterexample or ())
        result["reason"] = verdict.simulation.reason
    sys.stdout.write(json.dumps(result) + "\n")
    return EXIT_OK if verdict.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    F = _read_filter(args.input)
    try:
        res = brute_force_minimize(F, size_limit=args.max_states)
    except OracleTooLarge as exc:
        raise UsageError(str(exc)) from exc
    out = {
        "minimal_size": res.minimal_size,
        "cover": [sorted(p) for p in res.witness_cover],
        "explored": res.explored,
    }
    sys.stdout.write(json.dumps(out) + "\n")
    return EXIT_OK


def _generate(args) -> PFilter:
    family = args.family
    if family == "nxm":
        return gen_nxm(args.n, args.m)
    if family == "grid":
        return gen_grid(args.n)
    if family == "random":
        rng = random.Random(args.seed)
        return random_filter(rng, args.n, multi=args.multi)
    if family.startswith("builtin:"):
        return builtin(family.split(":", 1)[1])[0]
    raise UsageError(f"unknown family {family!r}; use nxm, grid, random or builtin:<name>")


def cmd_gen(args) -> int:
    F = _generate(args)
    _write(args.out, dumps(F))
    if args.dot:
        _write(args.dot, to_dot(F))
    if args.graph_dot:
        _write(args.graph_dot, compatibility_graph(prune_unreachable(F, warn=False)).to_dot())
    return EXIT_OK


BENCH_COLUMNS = ["instance", "states_in", "states_out", "zipper_count", "t_zipper", "t_encode", "t_solve", "certified"]


def _bench_instances(args):
    if args.family == "nxm":
        sizes = args.sizes or ["4x4", "4x5", "4x6", "5x4", "5x5", "5x6", "6x4", "6x5", "6x6"]
        for s in sizes:
            n, m = (int(x) for x in s.lower().split("x"))
            yield f"nxm-{n}x{m}", lambda n=n, m=m: gen_nxm(n, m)
    elif args.family == "grid":
        sizes = args.sizes or ["6", "8", "10"]
        for s in sizes:
            yield f"grid-{s}", lambda n=int(s): gen_grid(n)
    else:
        raise UsageError("bench supports --family nxm or grid")


def cmd_bench(args) -> int:
    solver = get_solver(args.solver)
    opts = MinimizeOptions(timeout=args.timeout, bounds=args.bounds)
    fh = sys.stdout if args.csv in (None, "-") else open(args.csv, "w", newline="")
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        all_certified = True
        for name, make in _bench_instances(args):
            F = make()
            report = minimize(F, solver, opts)
            s = report.summary()
            all_certified &= report.certified
            writer.writerow(
                {
                    "instance": name,
                    "states_in": s["states_in"],
                    "states_out": s["states_out"],
                    "zipper_count": s["zipper_count"],
                    "t_zipper": f"{s['t_zipper']:.6f}",
                    "t_encode": f"{s['t_encode']:.6f}",
                    "t_solve": f"{s['t_solve']:.6f}",
                    "certified": s["certified"],
                }
            )
            fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK if all_certified else EXIT_UNCERTIFIED


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filtermin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def cover_flags(p, with_encoding=True):
        p.add_argument("--input", "-i", help="filter JSON (default: stdin)")
        p.add_argument("--mode", choices=["auto", "so", "mo"], default="auto")
        if with_encoding:
            p.add_argument("--encoding", choices=MODES, default=MINIMAL_NONFACE)

    p = sub.add_parser("minimize", help="compute a minimal equivalent filter")
    cover_flags(p)
    p.add_argument("--out", "-o", help="write the minimal filter here ('-' for stdout)")
    p.add_argument("--report", help="also write the JSON report to this file")
    p.add_argument("--binary-search", action="store_true")
    p.add_argument(
        "--symmetry-breaking",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="pin pairwise-incompatible states to distinct parts (default on)",
    )
    p.add_argument(
        "--bounds",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="use the maximal-face cover and disjoint-states floor to skip SAT calls (default on)",
    )
    p.add_argument("--dot", help="write the minimal filter as DOT")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("encode", help="emit the k-cover CNF in DIMACS format")
    cover_flags(p)
    p.add_argument("--k", type=int, help="number of parts (default: number of states)")
    p.add_argument("--out", "-o", help="DIMACS output (default: stdout)")
    p.add_argument("--map", help="write the variable map sidecar here")
    p.add_argument("--symmetry-breaking", action="store_true")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("zippers", help="list zipper constraints")
    cover_flags(p, with_encoding=False)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_zippers)

    p = sub.add_parser("verify", help="check a candidate against a reference filter")
    p.add_argument("--reference", "-r", required=True)
    p.add_argument("--candidate", "-c", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force minimal size (small filters only)")
    p.add_argument("--input", "-i")
    p.add_argument("--max-states", type=int, default=10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument(
        "--family", required=True, help=f"nxm | grid | random | builtin:<{'|'.join(BUILTIN_NAMES)}>"
    )
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--multi", action="store_true", help="random family: allow multi-output states")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", "-o")
    p.add_argument("--dot", help="write the filter as DOT")
    p.add_argument("--graph-dot", help="write the compatibility graph as DOT")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="timing sweep over a parametric family, as CSV")
    p.add_argument("--family", choices=["nxm", "grid"], required=True)
    p.add_argument("--sizes", nargs="*", help="e.g. 4x4 5x5 for nxm, 6 8 10 for grid")
    p.add_argument("--csv", help="output file (default: stdout)")
    p.add_argument(
        "--bounds",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="let cheap bounds skip SAT calls (default off, so every phase is timed)",
    )
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, UnknownInstance, EncodingError, SolverError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"filtermin: {msg}\n")
        return EXIT_USAGE
    except (ComplexTooLarge, TooManyZippers) as exc:
        sys.stderr.write(f"filtermin: instance too large: {exc}\n")
        return EXIT_USAGE
    except SoundnessError as exc:
        sys.stderr.write(f"filtermin: internal soundness check failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
