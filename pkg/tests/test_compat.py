import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_filters
from filtermin.compat import (
    ComplexTooLarge,
    GroupChecker,
    SimplicialComplex,
    compatibility_complex,
    compatibility_graph,
    group_compatible,
    group_skeleton,
    pairwise_compatible,
)
from filtermin.filter import PFilter
from filtermin.instances import gen_nxm
from filtermin.oracle import all_faces, random_filter, string_group_compatible, string_pairwise_compatible


def maximal(faces):
    faces = set(faces)
    return {f for f in faces if not any(f < g for g in faces)}


def test_self_compatible():
    for F in random_filters(20, 10):
        for v in F.states:
            assert pairwise_compatible(F, v, v)


def test_nd_pairs(nd):
    assert pairwise_compatible(nd, "w5", "w6")
    assert pairwise_compatible(nd, "w6", "w7")
    assert not pairwise_compatible(nd, "w5", "w7")


def test_nd_graph(nd):
    g = compatibility_graph(nd)
    expect = {frozenset(p) for p in [("w1", "w2"), ("w3", "w4"), ("w5", "w6"), ("w6", "w7")]}
    assert g.edges == expect
    assert "--" in g.to_dot()


def test_all_distinct_outputs_no_edges():
    F = PFilter.build(["a", "b", "c"], ["a"], [("a", "b", "x"), ("b", "c", "x")], {"a": "1", "b": "2", "c": "3"})
    assert compatibility_graph(F).edges == frozenset()
    cx = compatibility_complex(F)
    assert set(cx.maximal_faces) == {frozenset([v]) for v in "abc"}


def test_single_state():
    F = PFilter.build(["a"], ["a"], [], {"a": "x"})
    assert compatibility_graph(F).edges == frozenset()
    assert compatibility_complex(F).maximal_faces == (frozenset(["a"]),)


def test_pairwise_matches_string_oracle():
    for F in random_filters(21, 40, lo=3, hi=6):
        for v, w in combinations(F.sorted_states, 2):
            expect = string_pairwise_compatible(F, v, w, 2 * len(F))
            assert pairwise_compatible(F, v, w) == expect, (v, w)


def test_pairwise_symmetric():
    for F in random_filters(22, 20):
        for v, w in combinations(F.sorted_states, 2):
            assert pairwise_compatible(F, v, w) == pairwise_compatible(F, w, v)


def test_group_singletons_true():
    for F in random_filters(23, 10, multi=True):
        for v in F.states:
            assert group_compatible(F, [v])


def test_group_pairs_equal_pairwise_on_single_output():
    for F in random_filters(24, 30):
        for v, w in combinations(F.sorted_states, 2):
            assert group_compatible(F, [v, w]) == pairwise_compatible(F, v, w)


def test_group_matches_string_oracle():
    for F in random_filters(25, 30, lo=3, hi=6, multi=True):
        for r in (2, 3):
            for U in combinations(F.sorted_states, r):
                expect = string_group_compatible(F, U, 2 * len(F))
                assert group_compatible(F, U) == expect, U


def test_split_choice_rows(split_choice):
    # states of one color plus the multi-output states form faces;
    # the two colors never share one
    cx = compatibility_complex(split_choice)
    assert cx.is_face(["w1", "w2", "w3", "w4", "w5"])
    assert cx.is_face(["w6", "w7", "w8", "w4", "w5"])
    assert not group_compatible(split_choice, ["w1", "w6"])


def test_group_checker_memo_consistent():
    for F in random_filters(26, 10, multi=True):
        check = GroupChecker(F)
        for U in combinations(F.sorted_states, 2):
            assert check(U) == group_compatible(F, U) == check(U)


def test_complex_matches_subset_enumeration():
    rng = random.Random(27)
    for _ in range(60):
        multi = rng.random() < 0.5
        F = random_filter(rng, rng.randint(2, 8), multi=multi)
        cx = compatibility_complex(F)
        assert set(cx.maximal_faces) == maximal(all_faces(F))


def test_complex_general_path_on_single_output():
    for F in random_filters(28, 20, lo=3, hi=8):
        a = compatibility_complex(F)
        b = compatibility_complex(F, single_output=False)
        assert set(a.maximal_faces) == set(b.maximal_faces)


def test_single_output_faces_are_cliques():
    for F in random_filters(29, 20, lo=3, hi=8):
        g = compatibility_graph(F)
        for face in compatibility_complex(F).maximal_faces:
            for v, w in combinations(face, 2):
                assert g.has_edge(v, w)


def test_nd_complex_not_transitive(nd):
    cx = compatibility_complex(nd)
    assert cx.is_face(["w5", "w6"]) and cx.is_face(["w6", "w7"])
    assert not cx.is_face(["w5", "w6", "w7"])


def test_downward_closure_sampled():
    rng = random.Random(30)
    for F in random_filters(30, 20, lo=4, hi=8, multi=True):
        for face in compatibility_complex(F).maximal_faces:
            members = sorted(face)
            for _ in range(5):
                sub = rng.sample(members, rng.randint(1, len(members)))
                assert group_compatible(F, sub)


def test_complex_invariants():
    for F in random_filters(31, 20, lo=3, hi=8, multi=True):
        cx = compatibility_complex(F)
        assert frozenset().union(*cx.maximal_faces) == F.states
        for a, b in combinations(cx.maximal_faces, 2):
            assert not a <= b and not b <= a


def test_face_cap():
    F = gen_nxm(3, 4)
    with pytest.raises(ComplexTooLarge):
        compatibility_complex(F, max_faces=1)


def test_complex_text_export_sorted():
    cx = SimplicialComplex(frozenset("abcd"), (frozenset("cb"), frozenset("ad"), frozenset("a")))
    assert cx.to_text() == "a d\nb c\n"
    assert cx.is_face("da") and cx.is_face("") and not cx.is_face("ab")
    assert set(cx.faces()) == {frozenset(x) for x in ["a", "b", "c", "d", "ad", "bc"]}


def test_full_and_discrete():
    full = SimplicialComplex.full("abc")
    assert full.is_face("abc")
    disc = SimplicialComplex.discrete("abc")
    assert not disc.is_face("ab")
    assert disc.skeleton_edges() == set()


def test_group_skeleton_on_multi_output(split_choice):
    sk = group_skeleton(split_choice)
    assert sk.has_edge("w4", "w1") and sk.has_edge("w4", "w6")
    assert not sk.has_edge("w1", "w6")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 7), st.booleans())
def test_complex_property(seed, n, multi):
    F = random_filter(random.Random(seed), n, multi=multi)
    assert set(compatibility_complex(F).maximal_faces) == maximal(all_faces(F))
