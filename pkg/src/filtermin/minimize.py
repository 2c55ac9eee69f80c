"""End-to-end minimization: complex, zippers, CNF, SAT, decode, induce.

The search walks k downward from the number of states. Each satisfying
model is decoded and re-validated; because the decoded cover may use fewer
than k parts, the next k tried is one below the cover actually found. The
search stops at the first UNSAT, which certifies minimality; a solver
timeout stops it without certification.

Two cheap bounds (on by default) skip probes whose answer is already known.
The maximal faces themselves form a valid cover, so when there are fewer of
them than states the search starts below that count. States that pairwise
share no face must sit in distinct parts, so reaching that many parts
certifies minimality without a final UNSAT call.
"""

from __future__ import annotations

import itertools
import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

from .compat import (
    DEFAULT_FACE_CAP,
    GroupChecker,
    SimplicialComplex,
    compatibility_complex,
    compatibility_graph,
)
from .cover import Cover, induce_filter
from .encode import (
    MINIMAL_NONFACE,
    PAPER_EXACT,
    EncodeOptions,
    EncodingError,
    decode_cover,
    encode_k_cover,
    enumerate_all_nonfaces,
    enumerate_minimal_nonfaces,
    independent_states,
    paper_variable_count,
)
from .filter import (
    PFilter,
    determinize,
    is_deterministic,
    output_simulates,
    prune_unreachable,
)
from .solvers import SAT, TIMEOUT, UNSAT, Solver, get_solver
from .zipper import DEFAULT_ZIPPER_CAP, ZipperConstraint, cover_satisfies, generate_zippers

log = logging.getLogger(__name__)


TOO_LARGE = "TOO_LARGE"


class SoundnessError(AssertionError):
    """A produced filter failed the determinism/simulation gate."""


@dataclass(frozen=True)
class KOutcome:
    k: int
    status: str
    num_vars: int
    num_clauses: int
    t_encode: float
    t_solve: float
    cover_size: int | None = None
    # "solver", "faces" (the cover by all maximal faces) or "bound"
    # (ruled out by states that pairwise share no face)
    source: str = "solver"


@dataclass
class MinimizeReport:
    input_filter: PFilter
    minimal_filter: PFilter
    cover: Cover
    certified: bool
    outcomes: list[KOutcome] = field(default_factory=list)
    zipper_count: int = 0
    face_count: int = 0
    t_zipper: float = 0.0
    t_encode: float = 0.0
    t_solve: float = 0.0
    t_complex: float = 0.0
    mode: str = "so"

    @property
    def minimal_size(self) -> int:
        return len(self.minimal_filter)

    @property
    def input_size(self) -> int:
        return len(self.input_filter)

    def summary(self) -> dict:
        return {
            "states_in": self.input_size,
            "states_out": self.minimal_size,
            "certified": self.certified,
            "mode": self.mode,
            "zipper_count": self.zipper_count,
            "maximal_faces": self.face_count,
            "t_complex": round(self.t_complex, 6),
            "t_zipper": round(self.t_zipper, 6),
            "t_encode": round(self.t_encode, 6),
            "t_solve": round(self.t_solve, 6),
            "per_k": [
                {
                    "k": o.k,
                    "status": o.status,
                    "vars": o.num_vars,
                    "clauses": o.num_clauses,
                    "cover_size": o.cover_size,
                    "source": o.source,
                    "t_encode": round(o.t_encode, 6),
                    "t_solve": round(o.t_solve, 6),
                }
                for o in self.outcomes
            ],
            "cover": [sorted(p) for p in self.cover.parts],
        }


@dataclass(frozen=True)
class MinimizeOptions:
    mode: str = "auto"  # auto | so | mo
    encoding: str = MINIMAL_NONFACE
    # unit clauses pinning mutually incompatible states to distinct parts;
    # without them UNSAT proofs below the optimum can blow up on ~15 states
    symmetry_breaking: bool = True
    binary_search: bool = False
    timeout: float | None = None  # per SAT call, seconds
    max_faces: int = DEFAULT_FACE_CAP
    max_zippers: int = DEFAULT_ZIPPER_CAP
    # skip zippers implied by a smaller U with the same y and W; the
    # reported zipper_count then counts only the remaining ones
    prune_zippers: bool = True
    # seed with the cover by maximal faces and stop at the disjoint-states floor
    bounds: bool = True
    # probes whose CNF would exceed this many variables are skipped
    max_cnf_vars: int = 3_000_000


def prepare(F: PFilter) -> PFilter:
    """Deterministic, fully reachable version of the input."""
    if not is_deterministic(F):
        warnings.warn("input filter is not deterministic; determinizing first", stacklevel=3)
        F = determinize(F)
    return prune_unreachable(F)


def build_complex(F: PFilter, opts: MinimizeOptions) -> tuple[SimplicialComplex, str]:
    """Complex for the cover problem plus the path used ("so" or "mo").

    The clique path is taken for single-outputting inputs after checking that
    each maximal clique is group compatible, as the theory promises.
    """
    mode = opts.mode
    if mode == "auto":
        mode = "so" if F.is_single_outputting else "mo"
    if mode == "so":
        if not F.is_single_outputting:
            raise ValueError("mode 'so' requires a single-outputting filter")
        cx = compatibility_complex(F, max_faces=opts.max_faces, single_output=True)
        check = GroupChecker(F)
        if all(check(face) for face in cx.maximal_faces):
            return cx, "so"
        log.warning("clique faces failed the group test; falling back to the general complex")
    return compatibility_complex(F, max_faces=opts.max_faces, single_output=False), "mo"


def validate_cover(F: PFilter, cx: SimplicialComplex, zippers: Sequence[ZipperConstraint], cover: Cover) -> None:
    if cover.support != F.states:
        raise SoundnessError(f"decoded cover misses {sorted(F.states - cover.support)}")
    for p in cover.parts:
        if not cx.is_face(p):
            raise SoundnessError(f"decoded part {sorted(p)} is not a face")
    ok, bad = cover_satisfies(cover.parts, zippers)
    if not ok:
        raise SoundnessError(f"decoded cover violates {bad}")


def check_solution(F: PFilter, G: PFilter) -> None:
    if not is_deterministic(G):
        raise SoundnessError("minimized filter is not deterministic")
    verdict = output_simulates(G, F)
    if not verdict.holds:
        raise SoundnessError(f"minimized filter fails output simulation on {verdict.counterexample}")


def minimize(F: PFilter, solver: Solver | str | None = None, opts: MinimizeOptions = MinimizeOptions()) -> MinimizeReport:
    if solver is None or isinstance(solver, str):
        solver = get_solver(solver)
    F = prepare(F)

    t0 = time.perf_counter()
    cx, path = build_complex(F, opts)
    t_complex = time.perf_counter() - t0

    t0 = time.perf_counter()
    zippers = generate_zippers(F, cx, max_constraints=opts.max_zippers, implied=not opts.prune_zippers)
    t_zipper = time.perf_counter() - t0

    enc = EncodeOptions(mode=opts.encoding, symmetry_breaking=opts.symmetry_breaking)
    t0 = time.perf_counter()
    if enc.mode == PAPER_EXACT:
        if 2 ** len(F) > enc.exact_cap:
            encode_k_cover(cx, zippers, 1, enc, forbidden=())  # raises with guidance
        forbidden = enumerate_all_nonfaces(cx)
    else:
        forbidden = enumerate_minimal_nonfaces(cx)
    t_forbidden = time.perf_counter() - t0

    report = MinimizeReport(
        input_filter=F,
        minimal_filter=F,
        cover=Cover.singletons(F.states),
        certified=False,
        zipper_count=len(zippers),
        face_count=len(cx.maximal_faces),
        t_zipper=t_zipper,
        t_encode=t_forbidden,
        t_complex=t_complex,
        mode=path,
    )
    best: Cover | None = None

    def probe(k: int) -> str:
        nonlocal best
        need = paper_variable_count(len(F), k, zippers)
        if need > opts.max_cnf_vars:
            log.warning("k=%d needs %d variables (cap %d); not probed", k, need, opts.max_cnf_vars)
            report.outcomes.append(KOutcome(k, TOO_LARGE, need, 0, 0.0, 0.0))
            return TOO_LARGE
        t0 = time.perf_counter()
        cnf = encode_k_cover(cx, zippers, k, enc, forbidden=forbidden)
        t_enc = time.perf_counter() - t0
        result = solver.solve(cnf, opts.timeout)
        size = None
        if result.status == SAT:
            cover = decode_cover(result.model, cnf)
            validate_cover(F, cx, zippers, cover)
            size = len(cover)
            if best is None or size < len(best):
                best = cover
        report.outcomes.append(KOutcome(k, result.status, cnf.num_vars, cnf.num_clauses, t_enc, result.seconds, size))
        report.t_encode += t_enc
        report.t_solve += result.seconds
        log.info("k=%d: %s (%d vars, %d clauses)", k, result.status, cnf.num_vars, cnf.num_clauses)
        return result.status

    t = len(F)
    # k below the number of pairwise face-disjoint states is infeasible
    floor = len(independent_states(cx)) if opts.bounds else 1
    # the maximal faces always form a valid cover: a face's successors are a face
    faces_cover = Cover(cx.maximal_faces)
    if opts.bounds and len(faces_cover) < t:
        validate_cover(F, cx, zippers, faces_cover)
        best = faces_cover
        report.outcomes.append(KOutcome(len(best), SAT, 0, 0, 0.0, 0.0, len(best), "faces"))

    def first_probe() -> None:
        if best is None:
            status = probe(t)
            if status == TOO_LARGE:
                raise EncodingError(
                    f"the k={t} formula exceeds {opts.max_cnf_vars} variables ({len(zippers)} zippers)"
                )
            if status != SAT:
                raise SoundnessError(f"k={t} must be satisfiable, solver said {status}")

    def floor_reached() -> bool:
        if len(best) > floor:
            return False
        if len(best) > 1:
            report.outcomes.append(KOutcome(len(best) - 1, UNSAT, 0, 0, 0.0, 0.0, None, "bound"))
        return True

    if opts.binary_search:
        first_probe()
        lo, hi = max(floor, 1), len(best)
        certified = True
        while lo < hi:
            mid = (lo + hi) // 2
            status = probe(mid)
            if status == SAT:
                hi = len(best)
            elif status == UNSAT:
                lo = mid + 1
            else:
                certified = False
                break
        report.certified = certified and lo == hi
    else:
        first_probe()
        while True:
            if floor_reached():
                report.certified = True
                break
            status = probe(len(best) - 1)
            if status != SAT:
                report.certified = status == UNSAT
                break

    report.cover = best
    G = induce_filter(F, best)
    check_solution(F, G)
    report.minimal_filter = G
    return report


# -- output-choice enumeration (baseline for multi-outputting inputs) -------------


def output_choices(F: PFilter):
    """Every single-outputting restriction of F, with the choice made."""
    order = F.sorted_states
    options = [sorted(F.outputs[v]) for v in order]
    for combo in itertools.product(*options):
        choice = dict(zip(order, combo))
        yield choice, PFilter(
            states=F.states,
            initial=F.initial,
            alphabet=F.alphabet,
            transitions=F.transitions,
            outputs={v: frozenset([choice[v]]) for v in order},
        )


@dataclass
class ChoiceReport:
    best: MinimizeReport
    best_choice: dict
    sizes: list[tuple[dict, int]]

    @property
    def minimal_size(self) -> int:
        return self.best.minimal_size


def minimize_so_by_choice_enumeration(
    F: PFilter, solver: Solver | str | None = None, opts: MinimizeOptions = MinimizeOptions()
) -> ChoiceReport:
    """Fix one output per state in every possible way and minimize each
    single-outputting filter separately; keep the smallest."""
    F = prepare(F)
    solver = get_solver(solver) if solver is None or isinstance(solver, str) else solver
    so_opts = replace(opts, mode="so")
    sizes = []
    best = None
    best_choice = None
    for choice, G in output_choices(F):
        rep = minimize(G, solver, so_opts)
        sizes.append((choice, rep.minimal_size))
        if best is None or rep.minimal_size < best.minimal_size:
            best, best_choice = rep, choice
    return ChoiceReport(best, best_choice, sizes)


# -- greedy step-wise baseline ---------------------------------------------------------


@dataclass
class BaselineResult:
    filter: PFilter
    coloring: dict
    rounds: int
    deterministic: bool
    simulates: bool

    @property
    def size(self) -> int:
        return len(self.filter)

    @property
    def valid(self) -> bool:
        return self.deterministic and self.simulates


def _greedy_color(order: Sequence[str], conflicts: set[frozenset]) -> dict[str, int]:
    color: dict[str, int] = {}
    for v in order:
        used = {color[u] for u in color if frozenset((u, v)) in conflicts}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return color


def merge_by_color(F: PFilter, color: dict[str, int]) -> PFilter:
    """Quotient filter: one state per color class, edges and outputs inherited."""
    classes: dict[int, list[str]] = {}
    for v in F.sorted_states:
        classes.setdefault(color[v], []).append(v)
    name = {c: "+".join(vs) for c, vs in classes.items()}
    transitions: dict[tuple[str, str], set] = {}
    for (v, w), obs in F.transitions.items():
        transitions.setdefault((name[color[v]], name[color[w]]), set()).update(obs)
    outputs = {}
    for c, vs in classes.items():
        outputs[name[c]] = frozenset().union(*(F.outputs[v] for v in vs))
    return PFilter(
        states=frozenset(name.values()),
        initial=frozenset(name[color[v]] for v in F.initial),
        alphabet=F.alphabet,
        transitions={e: frozenset(o) for e, o in transitions.items()},
        outputs=outputs,
    )


def baseline_stepwise_heuristic(F: PFilter, refine: str = "coloring") -> BaselineResult:
    """Greedy conflict-refinement heuristic for single-outputting filters.

    Conflicts start as pairs with different outputs. Each round greedily
    colors the conflict graph, then marks a non-conflicting pair as
    conflicting when some shared observation leads it to a conflicting pair.

    With ``refine="coloring"`` every pair of differently colored states also
    becomes a conflict after each coloring, so the final classes respect
    every transition and the merge is a valid (possibly non-minimal) filter.
    With ``refine="relation"`` only the conflict relation itself is
    propagated; this merges compatible states without regard to where their
    successors end up and may yield a nondeterministic filter.
    """
    if refine not in ("coloring", "relation"):
        raise ValueError(f"unknown refinement {refine!r}")
    F = prepare(F)
    order = F.sorted_states
    conflicts = {
        frozenset((a, b))
        for a, b in itertools.combinations(order, 2)
        if F.outputs[a] != F.outputs[b]
    }
    rounds = 0
    while True:
        rounds += 1
        color = _greedy_color(order, conflicts)
        if refine == "coloring":
            conflicts |= {
                frozenset((a, b)) for a, b in itertools.combinations(order, 2) if color[a] != color[b]
            }
        added = set()
        for a, b in itertools.combinations(order, 2):
            pair = frozenset((a, b))
            if pair in conflicts:
                continue
            da, db = F.delta[a], F.delta[b]
            for y in da.keys() & db.keys():
                (a2,), (b2,) = da[y], db[y]
                if a2 != b2 and frozenset((a2, b2)) in conflicts:
                    added.add(pair)
                    break
        if not added:
            break
        conflicts |= added
    G = merge_by_color(F, color)
    return BaselineResult(
        filter=G,
        coloring=color,
        rounds=rounds,
        deterministic=is_deterministic(G),
        simulates=output_simulates(G, F).holds,
    )


def class_quotient(F: PFilter) -> PFilter:
    """Merge states by connected components of the compatibility graph."""
    graph = compatibility_graph(F)
    comp: dict[str, int] = {}
    for v in F.sorted_states:
        if v in comp:
            continue
        stack = [v]
        comp[v] = len(set(comp.values()))
        label = comp[v]
        while stack:
            u = stack.pop()
            for w in graph.adjacency[u]:
                if w not in comp:
                    comp[w] = label
                    stack.append(w)
    return merge_by_color(F, comp)
