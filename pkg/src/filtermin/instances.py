"""Named example filters and the parametric families used for benchmarking.

The three hand-built filters ship as JSON under ``data/``. Each comes with a
list of claims (minimum sizes, zipper sets, output-choice minima) that
:func:`check_claims` re-derives with the brute-force oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from .filter import PFilter, determinize, from_dict

BUILTIN_NAMES = ("counterexample-nd", "split-choice", "drone")

INNER, OUTER, NO_EXIT = "inner", "outer", "none"


class UnknownInstance(KeyError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    name: str
    parameters: dict = field(default_factory=dict)
    # each claim is a dict with a "kind" key; see check_claims
    expected_properties: tuple[dict, ...] = ()


_CLAIMS: dict[str, tuple[dict, ...]] = {
    "counterexample-nd": (
        {"kind": "minimal_size", "value": 5},
        {
            "kind": "zippers",
            "value": [
                [["w1", "w2"], ["w5", "w6"], "a"],
                [["w3", "w4"], ["w6", "w7"], "b"],
            ],
        },
        {"kind": "compatible", "pair": ["w5", "w6"], "value": True},
        {"kind": "compatible", "pair": ["w6", "w7"], "value": True},
        {"kind": "compatible", "pair": ["w5", "w7"], "value": False},
        {"kind": "quotient_nondeterministic", "value": True},
        {"kind": "split_required", "value": True},
    ),
    "split-choice": (
        {"kind": "minimal_size", "value": 3},
        {"kind": "choice_minimum", "choice": {"w4": "c0", "w5": "c0"}, "value": 4},
        {"kind": "choice_minimum", "choice": {"w4": "c1", "w5": "c1"}, "value": 4},
        {"kind": "choice_minimum", "choice": {"w4": "c0", "w5": "c1"}, "value": 7},
        {"kind": "choice_minimum", "choice": {"w4": "c1", "w5": "c0"}, "value": 7},
    ),
    "drone": (
        {"kind": "minimal_size", "value": 3},
        {"kind": "choice_minimum", "choice": {"L": "fly", "K": "fly"}, "value": 4},
        {"kind": "choice_minimum", "choice": {"L": "fly", "K": "drive"}, "value": 3},
    ),
}


def _load_data(name: str) -> PFilter:
    text = resources.files(__package__).joinpath("data", f"{name}.json").read_text()
    return from_dict(json.loads(text))


def builtin(name: str) -> tuple[PFilter, InstanceSpec]:
    if name not in BUILTIN_NAMES:
        raise UnknownInstance(f"unknown instance {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return _load_data(name), InstanceSpec(name, {}, _CLAIMS[name])


# -- n x m split-choice family --------------------------------------------------


def _letters(n: int) -> list[str]:
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"y{i}" for i in range(n)]


def gen_nxm(n: int, m: int) -> PFilter:
    """``n`` rows of ``m`` same-colored states, a start state and two terminals.

    Row ``i`` is walked forward by its own observation; the next row's
    observation sends the first state to a terminal and every middle state
    one step back. Terminals may output any row color and, on observation
    ``i``, move to the terminal that row ``i+1`` exits into.
    """
    if n < 2 or m < 2:
        raise ValueError("gen_nxm needs n >= 2 and m >= 2")
    obs = _letters(n)
    rows = [[f"r{i}_{j}" for j in range(m)] for i in range(n)]
    terminals = ["t0", "t1"]
    triples = []
    outputs: dict[str, set[str]] = {"w0": {"start"}}
    for i, row in enumerate(rows):
        own, nxt = obs[i], obs[(i + 1) % n]
        triples.append(("w0", row[0], own))
        for j, v in enumerate(row):
            outputs[v] = {f"c{i}"}
            if j + 1 < m:
                triples.append((v, row[j + 1], own))
            if 0 < j < m - 1:
                triples.append((v, row[j - 1], nxt))
        triples.append((row[0], terminals[i % 2], nxt))
    for t in terminals:
        outputs[t] = {f"c{i}" for i in range(n)}
        for i in range(n):
            triples.append((t, terminals[(i + 1) % 2], obs[i]))
    return PFilter.build(list(outputs), ["w0"], triples, outputs, alphabet=obs)


# -- grid walk with a row sensor ------------------------------------------------


def default_exits(n: int) -> dict[tuple[int, int], frozenset[str]]:
    """Outer exits on two boundary cells, inner exits on two interior cells.

    Cells are ``(row, column)`` with ``(0, 0)`` the start corner. In row
    ``n // 2`` an outer exit at column 0 and an inner one at column 2 share a
    column parity, so some belief states hold both kinds.
    """
    cells = {
        (0, n - 1): OUTER,
        (n // 2, 0): OUTER,
        (1, 1): INNER,
        (n // 2, 2): INNER,
    }
    spec: dict[tuple[int, int], set[str]] = {}
    for (r, c), kind in cells.items():
        if 0 <= r < n and 0 <= c < n:
            spec.setdefault((r, c), set()).add(kind)
    return {cell: frozenset(kinds) for cell, kinds in spec.items()}


def _cell(r: int, c: int) -> str:
    return f"r{r}c{c}"


def gen_grid(n: int, exit_spec: Mapping[tuple[int, int], frozenset[str]] | None = None) -> PFilter:
    """Deterministic filter for a robot stepping between 4-adjacent cells of
    an ``n x n`` grid and observing only the row it lands in.

    The nondeterministic cell-level filter is determinized; a belief state
    outputs every exit kind present among its cells, or ``"none"`` if no
    cell has an exit.
    """
    if n < 2:
        raise ValueError("grid needs n >= 2")
    exits = default_exits(n) if exit_spec is None else {k: frozenset(v) for k, v in exit_spec.items()}
    for (r, c), kinds in exits.items():
        if not (0 <= r < n and 0 <= c < n):
            raise ValueError(f"exit cell {(r, c)} lies outside the {n}x{n} grid")
        if not kinds or not kinds <= {INNER, OUTER}:
            raise ValueError(f"exit kinds for {(r, c)} must be a nonempty subset of inner/outer")
    triples = []
    for r in range(n):
        for c in range(n):
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < n and 0 <= c2 < n:
                    triples.append((_cell(r, c), _cell(r2, c2), str(r2)))
    # cells without exits are tagged so that unions can tell them apart
    cell_out = {_cell(r, c): exits.get((r, c), frozenset([NO_EXIT])) for r in range(n) for c in range(n)}
    walk = PFilter.build(list(cell_out), [_cell(0, 0)], triples, cell_out)
    D = determinize(walk)
    outputs = {}
    for v in D.states:
        kinds = D.outputs[v] - {NO_EXIT}
        outputs[v] = kinds or frozenset([NO_EXIT])
    return PFilter(
        states=D.states,
        initial=D.initial,
        alphabet=D.alphabet,
        transitions=D.transitions,
        outputs=outputs,
    )


# -- claim checking ----------------------------------------------------------------


def restrict_outputs(F: PFilter, choice: Mapping[str, str]) -> PFilter:
    """Fix the output of some states to one of their allowed labels."""
    outputs = dict(F.outputs)
    for v, label in choice.items():
        if label not in F.outputs[v]:
            raise ValueError(f"{label!r} is not an output of {v!r}")
        outputs[v] = frozenset([label])
    return PFilter(
        states=F.states,
        initial=F.initial,
        alphabet=F.alphabet,
        transitions=F.transitions,
        outputs=outputs,
    )


def check_claims(F: PFilter, spec: InstanceSpec) -> list[tuple[dict, bool]]:
    """Evaluate every claim of ``spec`` with the oracle machinery.

    ``choice_minimum`` claims fix the named states and minimize over every
    way of fixing the remaining multi-output states.
    """
    from itertools import product

    from .compat import pairwise_compatible
    from .filter import is_deterministic
    from .minimize import class_quotient
    from .oracle import all_faces, all_zippers, brute_force_minimize

    results = []
    for claim in spec.expected_properties:
        kind = claim["kind"]
        if kind == "minimal_size":
            ok = brute_force_minimize(F).minimal_size == claim["value"]
        elif kind == "zippers":
            found = {
                (U, W, y) for U, W, y in all_zippers(F, all_faces(F)) if len(W) >= 2
            }
            want = {(frozenset(U), frozenset(W), y) for U, W, y in claim["value"]}
            ok = found == want
        elif kind == "compatible":
            ok = pairwise_compatible(F, *claim["pair"]) == claim["value"]
        elif kind == "quotient_nondeterministic":
            ok = (not is_deterministic(class_quotient(F))) == claim["value"]
        elif kind == "split_required":
            best = brute_force_minimize(F).minimal_size
            merge_only = brute_force_minimize(F, partitions_only=True).minimal_size
            ok = (merge_only > best) == claim["value"]
        elif kind == "choice_minimum":
            G = restrict_outputs(F, claim["choice"])
            free = [v for v in G.sorted_states if len(G.outputs[v]) > 1]
            sizes = [
                brute_force_minimize(restrict_outputs(G, dict(zip(free, combo)))).minimal_size
                for combo in product(*(sorted(G.outputs[v]) for v in free))
            ]
            ok = min(sizes) == claim["value"]
        else:
            raise ValueError(f"unknown claim kind {kind!r}")
        results.append((claim, ok))
    return results
