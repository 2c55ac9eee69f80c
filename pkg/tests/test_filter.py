import json
import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_filters
from filtermin.filter import (
    FilterError,
    NotDeterministicError,
    PFilter,
    UnreachableStatesWarning,
    determinize,
    dumps,
    from_dict,
    in_language,
    is_deterministic,
    is_isomorphic,
    load,
    loads,
    nondeterminism_witness,
    output_simulates,
    outputs_of,
    prune_unreachable,
    reached,
    reached_from,
    relabel,
    save,
    to_dict,
    to_dot,
)
from filtermin.minimize import class_quotient
from filtermin.oracle import path_reached, string_outputs, string_simulates, strings_up_to


def random_nd_filter(rng, n, n_obs=2, n_labels=3, p=0.35):
    """Possibly nondeterministic filter: independent edge coin flips."""
    states = [f"q{i}" for i in range(n)]
    obs = [chr(ord("a") + i) for i in range(n_obs)]
    triples = [(v, w, y) for v in states for w in states for y in obs if rng.random() < p]
    labels = [f"o{i}" for i in range(n_labels)]
    outputs = {v: rng.sample(labels, rng.randint(1, 2)) for v in states}
    initial = rng.sample(states, rng.randint(1, min(2, n)))
    return PFilter.build(states, initial, triples, outputs, alphabet=obs)


def chain(n=3):
    states = [f"v{i}" for i in range(n)]
    return PFilter.build(states, ["v0"], [(states[i], states[i + 1], "a") for i in range(n - 1)], {v: "x" for v in states})


# -- construction -----------------------------------------------------------


def test_build_rejects_empty_outputs():
    with pytest.raises(FilterError):
        PFilter.build(["a"], ["a"], [], {"a": []})


def test_build_rejects_unknown_initial():
    with pytest.raises(FilterError):
        PFilter.build(["a"], ["b"], [], {"a": "x"})


def test_build_rejects_unknown_edge_endpoint():
    with pytest.raises(FilterError):
        PFilter.build(["a"], ["a"], [("a", "z", "y")], {"a": "x"})


def test_empty_initial_rejected():
    with pytest.raises(FilterError):
        PFilter.build(["a"], [], [], {"a": "x"})


def test_alphabet_includes_edge_symbols():
    F = PFilter.build(["a", "b"], ["a"], [("a", "b", "y")], {"a": "x", "b": "x"}, alphabet=["z"])
    assert F.alphabet == {"y", "z"}


# -- tracing ---------------------------------------------------------------


def test_empty_string_reaches_origin(nd):
    for v in nd.states:
        assert reached_from(nd, v, ()) == {v}
    assert reached(nd, ()) == nd.initial
    assert in_language(nd, ())


def test_ba_reaches_w6(nd):
    assert reached_from(nd, "w0", ("b", "a")) == {"w6"}


def test_unknown_symbol_and_state(nd):
    with pytest.raises(FilterError):
        reached(nd, ("zz",))
    with pytest.raises(FilterError):
        reached_from(nd, "nope", ())


def test_crash_extension_leaves_language(nd):
    assert in_language(nd, ("a",))
    assert not in_language(nd, ("a", "b"))
    assert not in_language(nd, ("a", "b", "a"))
    assert outputs_of(nd, ("a", "b")) == frozenset()


def test_chain_outputs_singleton():
    F = chain(4)
    for s in strings_up_to(F.alphabet, 3):
        assert outputs_of(F, s) == {"x"}


def test_epsilon_outputs_are_initial_union():
    F = PFilter.build(["a", "b"], ["a", "b"], [], {"a": "x", "b": "y"})
    assert outputs_of(F, ()) == {"x", "y"}


def test_reached_matches_path_enumeration():
    rng = random.Random(3)
    for _ in range(40):
        F = random_nd_filter(rng, rng.randint(1, 5))
        for s in strings_up_to(F.alphabet, 3):
            per_start = frozenset().union(*(path_reached(F, v, s) for v in F.initial))
            assert reached(F, s) == per_start
            for v in F.initial:
                assert reached_from(F, v, s) == path_reached(F, v, s)
            assert outputs_of(F, s) == string_outputs(F, s)
            assert in_language(F, s) == bool(per_start)


def test_reached_step_consistency():
    rng = random.Random(4)
    for _ in range(20):
        F = random_nd_filter(rng, 5)
        for s in strings_up_to(F.alphabet, 3):
            for y in F.alphabet:
                expect = frozenset(w for v in reached(F, s) for w in F.delta[v].get(y, ()))
                assert reached(F, s + (y,)) == expect


# -- determinism ------------------------------------------------------------


def test_chain_is_deterministic():
    assert is_deterministic(chain())


def test_two_a_successors_nondeterministic():
    F = PFilter.build(["w1", "w5", "w6"], ["w1"], [("w1", "w5", "a"), ("w1", "w6", "a")], {v: "x" for v in ["w1", "w5", "w6"]})
    assert not is_deterministic(F)
    assert nondeterminism_witness(F) == ("a",)


def test_two_initial_states_nondeterministic():
    F = PFilter.build(["a", "b"], ["a", "b"], [], {"a": "x", "b": "x"})
    assert not is_deterministic(F)
    assert nondeterminism_witness(F) == ()


def test_deterministic_reached_at_most_one():
    for F in random_filters(5, 20):
        assert is_deterministic(F)
        for s in strings_up_to(F.alphabet, 4):
            assert len(reached(F, s)) <= 1


def test_class_quotient_of_nd_is_nondeterministic(nd):
    Q = class_quotient(nd)
    assert not is_deterministic(Q)
    witness = nondeterminism_witness(Q)
    assert witness is not None and len(reached(Q, witness)) >= 2


def test_class_quotient_fails_simulation(nd):
    verdict = output_simulates(class_quotient(nd), nd)
    assert not verdict.holds
    assert verdict.counterexample is not None
    assert verdict.reason in ("empty-output", "non-subset")


# -- output simulation -----------------------------------------------------------


def test_simulation_reflexive():
    for F in random_filters(6, 30):
        assert output_simulates(F, F)


def test_simulation_counterexample_is_shortest():
    F = PFilter.build(["s", "t", "u"], ["s"], [("s", "t", "a"), ("t", "u", "a")], {"s": "x", "t": "x", "u": "y"})
    G = PFilter.build(["g"], ["g"], [("g", "g", "a")], {"g": "x"})
    verdict = output_simulates(G, F)
    assert not verdict.holds
    assert verdict.counterexample == ("a", "a")
    assert verdict.reason == "non-subset"


def test_simulation_detects_crash():
    F = PFilter.build(["s", "t"], ["s"], [("s", "t", "a")], {"s": "x", "t": "x"})
    G = PFilter.build(["g"], ["g"], [], {"g": "x"})
    verdict = output_simulates(G, F)
    assert (verdict.holds, verdict.counterexample, verdict.reason) == (False, ("a",), "empty-output")


def test_simulation_agrees_with_string_oracle():
    rng = random.Random(8)
    for _ in range(60):
        F = random_nd_filter(rng, rng.randint(1, 4))
        G = random_nd_filter(rng, rng.randint(1, 3))
        depth = 2 * (len(F) + len(G))
        assert output_simulates(G, F).holds == string_simulates(G, F, min(depth, 8))


def test_simulation_transitive_on_chains():
    # F >= G >= H by construction: each narrows outputs of the previous
    for F in random_filters(9, 15, multi=True):
        narrow = PFilter(F.states, F.initial, F.alphabet, F.transitions, {v: frozenset([min(o)]) for v, o in F.outputs.items()})
        assert output_simulates(narrow, F)
        D = determinize(narrow)
        assert output_simulates(D, narrow)
        assert output_simulates(D, F)


# -- determinize -------------------------------------------------------------------


def test_determinize_merges_outputs():
    F = PFilter.build(["s", "p", "q"], ["s"], [("s", "p", "a"), ("s", "q", "a")], {"s": "z", "p": "x", "q": "y"})
    D = determinize(F)
    assert is_deterministic(D)
    assert D.outputs["p+q"] == {"x", "y"}
    assert len(D) == 2


def test_determinize_deterministic_is_isomorphic():
    for F in random_filters(10, 20):
        assert is_isomorphic(determinize(F), prune_unreachable(F, warn=False))


def test_determinize_preserves_semantics():
    rng = random.Random(11)
    for _ in range(40):
        F = random_nd_filter(rng, rng.randint(1, 5))
        D = determinize(F)
        assert is_deterministic(D)
        for s in strings_up_to(F.alphabet, 2 * len(F) if len(F) <= 3 else 6):
            assert outputs_of(D, s) == outputs_of(F, s)
            assert in_language(D, s) == in_language(F, s)
        assert output_simulates(D, F) and output_simulates(F, D)


def test_determinize_names_are_sorted_members():
    F = PFilter.build(["s", "b", "a"], ["s"], [("s", "b", "y"), ("s", "a", "y")], {"s": "o", "a": "o", "b": "o"})
    assert "a+b" in determinize(F).states


# -- isomorphism -------------------------------------------------------------------


def test_isomorphic_under_renaming():
    for F in random_filters(12, 10):
        mapping = {v: f"n_{v}" for v in F.states}
        assert is_isomorphic(F, relabel(F, mapping))


def test_not_isomorphic_when_output_changes():
    F = chain(3)
    G = PFilter(F.states, F.initial, F.alphabet, F.transitions, {**F.outputs, "v2": frozenset(["y"])})
    assert not is_isomorphic(F, G)


# -- serialization ------------------------------------------------------------------


def test_json_round_trip(tmp_path):
    for F in random_filters(13, 10, multi=True):
        assert loads(dumps(F)) == F
        path = tmp_path / "f.json"
        save(F, path)
        assert load(path) == F


def test_round_trip_ignores_ordering():
    F = chain(3)
    data = to_dict(F)
    data["states"].reverse()
    data["transitions"].reverse()
    assert from_dict(data) == F


def test_json_shape():
    data = json.loads(dumps(chain(2)))
    assert set(data) == {"states", "initial", "alphabet", "transitions", "outputs"}
    assert data["transitions"] == [{"from": "v0", "to": "v1", "obs": ["a"]}]


def test_load_prunes_unreachable_with_warning():
    F = PFilter.build(["a", "b", "c"], ["a"], [("a", "b", "y")], {"a": "x", "b": "x", "c": "x"})
    with pytest.warns(UnreachableStatesWarning):
        G = loads(dumps(F))
    assert G.states == {"a", "b"}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert loads(dumps(F), prune=False) == F


def test_malformed_documents():
    with pytest.raises(FilterError):
        loads("{not json")
    with pytest.raises(FilterError):
        loads(json.dumps({"states": ["a"]}))
    with pytest.raises(FilterError):
        loads(json.dumps({"states": ["a"], "initial": ["a"], "transitions": [], "outputs": {"a": []}}))


def test_dot_export_mentions_every_state(nd):
    dot = to_dot(nd)
    assert dot.startswith("digraph")
    for v in nd.states:
        assert f'"{v}"' in dot


def test_require_deterministic_error_type():
    from filtermin.compat import pairwise_compatible

    F = PFilter.build(["a", "b"], ["a", "b"], [], {"a": "x", "b": "x"})
    with pytest.raises(NotDeterministicError):
        pairwise_compatible(F, "a", "b")


# -- property-based ----------------------------------------------------------------


@st.composite
def nd_filters(draw):
    seed = draw(st.integers(0, 10**6))
    n = draw(st.integers(1, 4))
    return random_nd_filter(random.Random(seed), n)


@settings(max_examples=60, deadline=None)
@given(nd_filters())
def test_determinize_mutual_simulation(F):
    D = determinize(F)
    assert is_deterministic(D)
    assert output_simulates(D, F) and output_simulates(F, D)


@settings(max_examples=60, deadline=None)
@given(nd_filters(), st.lists(st.sampled_from(["a", "b"]), max_size=5))
def test_reached_property(F, s):
    expect = frozenset().union(*(path_reached(F, v, s) for v in F.initial))
    assert reached(F, s) == expect
