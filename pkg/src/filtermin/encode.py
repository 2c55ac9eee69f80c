"""CNF encoding of "is there a cover with at most k parts satisfying the zippers?".

Variables ``R(v, i)`` put state ``v`` into part ``i`` (``1 <= i <= k``).
Three clause groups:

1. every state lies in some part;
2. no part contains a forbidden (non-face) set;
3. per zipper ``(U, W)_y`` and part ``i``: either ``U`` is not inside part
   ``i`` or ``W`` is inside some part ``j``. The disjunction is expanded with
   ``k + |U|`` auxiliary variables ``Z(c, i, l)``: ``Z(c,i,j) -> R(w,j)`` for
   every ``w`` in ``W`` (``j <= k``), and ``Z(c,i,k+q) -> not R(u_q, i)``.

Group 2 ranges either over every non-face (``paper-exact``, exponential in
the number of states) or over inclusion-minimal non-faces only
(``minimal-nonface``), which suffices because faces are closed under subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence, TextIO

from .compat import SimplicialComplex
from .cover import Cover
from .filter import State
from .zipper import ZipperConstraint

PAPER_EXACT = "paper-exact"
MINIMAL_NONFACE = "minimal-nonface"
MODES = (MINIMAL_NONFACE, PAPER_EXACT)


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class EncodeOptions:
    mode: str = MINIMAL_NONFACE
    symmetry_breaking: bool = False
    exact_cap: int = 2**16  # max 2^t for paper-exact mode

    def __post_init__(self):
        if self.mode not in MODES:
            raise EncodingError(f"unknown encoding mode {self.mode!r}; expected one of {MODES}")


@dataclass
class CnfInstance:
    k: int
    states: tuple[State, ...]
    zippers: tuple[ZipperConstraint, ...]
    num_vars: int
    clauses: list[list[int]]
    var_map: dict[int, tuple]
    group_sizes: dict[str, int] = field(default_factory=dict)
    zipper_clause_counts: list[int] = field(default_factory=list)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def r_var(self, v: State, i: int) -> int:
        return self.states.index(v) * self.k + i

    @property
    def num_r_vars(self) -> int:
        return sum(1 for role in self.var_map.values() if role[0] == "R")

    def write_dimacs(self, fh: TextIO) -> None:
        fh.write(f"c k={self.k} states={len(self.states)} zippers={len(self.zippers)}\n")
        fh.write(f"p cnf {self.num_vars} {self.num_clauses}\n")
        for clause in self.clauses:
            fh.write(" ".join(map(str, clause)))
            fh.write(" 0\n")

    def dimacs(self) -> str:
        import io

        buf = io.StringIO()
        self.write_dimacs(buf)
        return buf.getvalue()

    def var_map_text(self) -> str:
        lines = []
        for var in sorted(self.var_map):
            role = self.var_map[var]
            lines.append(" ".join(map(str, role + (var,))))
        return "\n".join(lines) + "\n"


def enumerate_minimal_nonfaces(complex: SimplicialComplex) -> list[frozenset[State]]:
    """All inclusion-minimal sets of states that are not faces.

    Pairs outside the 1-skeleton come first; larger ones are found by growing
    faces along skeleton edges (in vertex order) until the first non-face,
    which is minimal iff dropping any one member leaves a face.
    """
    n = len(complex.order)
    is_face = complex.is_face_mask
    adj = [0] * n
    for f in complex.face_masks:
        for i in range(n):
            if f >> i & 1:
                adj[i] |= f
    for i in range(n):
        adj[i] &= ~(1 << i)

    found: list[int] = []
    for a, b in combinations(range(n), 2):
        if not adj[a] >> b & 1:
            found.append(1 << a | 1 << b)

    def grow(face: int, cand: int) -> None:
        # every extension of face by candidates is a face: nothing to find
        if is_face(face | cand):
            return
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand &= ~low
            T = face | low
            if is_face(T):
                grow(T, cand & adj[v])
            elif face & (face - 1):  # |T| >= 3; pairs handled above
                rest = face
                minimal = True
                while rest:
                    bit = rest & -rest
                    rest &= ~bit
                    if not is_face(T & ~bit):
                        minimal = False
                        break
                if minimal:
                    found.append(T)

    for v in range(n):
        higher = adj[v] & ~((1 << (v + 1)) - 1)
        grow(1 << v, higher)
    return sorted((complex.unmask(m) for m in found), key=lambda s: (len(s), sorted(s)))


def enumerate_all_nonfaces(complex: SimplicialComplex) -> list[frozenset[State]]:
    n = len(complex.order)
    is_face = complex.is_face_mask
    masks = [m for m in range(1, 1 << n) if not is_face(m)]
    return [complex.unmask(m) for m in masks]


def independent_states(complex: SimplicialComplex) -> list[State]:
    """Greedy set of states no two of which share a face, low degree first."""
    neighbours = {v: set() for v in complex.order}
    for a, b in complex.skeleton_edges():
        neighbours[a].add(b)
        neighbours[b].add(a)
    chosen: list[State] = []
    blocked: set[State] = set()
    for v in sorted(complex.order, key=lambda v: (len(neighbours[v]), complex.index[v])):
        if v not in blocked:
            chosen.append(v)
            blocked |= neighbours[v]
    return chosen


def encode_k_cover(
    complex: SimplicialComplex,
    zippers: Sequence[ZipperConstraint],
    k: int,
    opts: EncodeOptions = EncodeOptions(),
    forbidden: Sequence[frozenset[State]] | None = None,
) -> CnfInstance:
    """Build the CNF for a cover with at most ``k`` parts.

    ``forbidden`` lets callers reuse a precomputed non-face list across
    values of ``k``.
    """
    if k < 1:
        raise EncodingError("k must be at least 1")
    states = complex.order
    t = len(states)
    if opts.mode == PAPER_EXACT and 2**t > opts.exact_cap:
        raise EncodingError(
            f"paper-exact mode enumerates 2^{t} subsets, above the cap {opts.exact_cap}; "
            f"use --encoding {MINIMAL_NONFACE}"
        )
    if forbidden is None:
        if opts.mode == PAPER_EXACT:
            forbidden = enumerate_all_nonfaces(complex)
        else:
            forbidden = enumerate_minimal_nonfaces(complex)

    index = {v: n for n, v in enumerate(states)}
    var_map: dict[int, tuple] = {}

    def R(v: State, i: int) -> int:
        return index[v] * k + i

    for v in states:
        for i in range(1, k + 1):
            var_map[R(v, i)] = ("R", v, i)
    next_var = t * k + 1

    clauses: list[list[int]] = []
    for v in states:
        clauses.append([R(v, i) for i in range(1, k + 1)])
    n_cover = len(clauses)

    for S in forbidden:
        members = sorted(S, key=index.__getitem__)
        for i in range(1, k + 1):
            clauses.append([-R(u, i) for u in members])
    n_nonface = len(clauses) - n_cover

    per_zipper: list[int] = []
    for c, z in enumerate(zippers):
        U = sorted(z.u_set, key=index.__getitem__)
        W = sorted(z.w_set, key=index.__getitem__)
        m = len(U)
        before = len(clauses)
        for i in range(1, k + 1):
            zs = []
            for ell in range(1, k + m + 1):
                var_map[next_var] = ("Z", c, i, ell)
                zs.append(next_var)
                next_var += 1
            clauses.append(list(zs))
            for j in range(1, k + 1):
                for w in W:
                    clauses.append([-zs[j - 1], R(w, j)])
            for q, u in enumerate(U, start=1):
                clauses.append([-zs[k + q - 1], -R(u, i)])
        per_zipper.append(len(clauses) - before)

    n_sym = 0
    if opts.symmetry_breaking:
        for j, v in enumerate(independent_states(complex)[:k], start=1):
            clauses.append([R(v, j)])
            n_sym += 1

    return CnfInstance(
        k=k,
        states=tuple(states),
        zippers=tuple(zippers),
        num_vars=next_var - 1,
        clauses=clauses,
        var_map=var_map,
        group_sizes={"cover": n_cover, "nonface": n_nonface, "zipper": sum(per_zipper), "symmetry": n_sym},
        zipper_clause_counts=per_zipper,
    )


def paper_variable_count(t: int, k: int, zippers: Iterable[ZipperConstraint]) -> int:
    """``t*k`` assignment variables plus ``k*(k+|U|)`` per zipper."""
    return t * k + sum(k * (k + len(z.u_set)) for z in zippers)


def _truth(assignment: Mapping[int, bool] | Iterable[int]) -> dict[int, bool]:
    if isinstance(assignment, Mapping):
        return {abs(v): bool(b) for v, b in assignment.items()}
    return {abs(lit): lit > 0 for lit in assignment}


def decode_cover(assignment: Mapping[int, bool] | Iterable[int], cnf: CnfInstance) -> Cover:
    """Parts ``{v : R(v, i) true}`` for each i, dropping empty ones."""
    truth = _truth(assignment)
    parts: dict[int, set[State]] = {}
    for var, role in cnf.var_map.items():
        if role[0] == "R" and truth.get(var, False):
            parts.setdefault(role[2], set()).add(role[1])
    return Cover(tuple(frozenset(p) for p in parts.values()))
