import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finbisim import fixtures
from finbisim.dfm import (Dfm, build_dfm, export_graph, letter_index, parse_graph,
                          simulate_dfm, simulate_plant, trace_equivalence_check,
                          transition_table)
from finbisim.errors import NotWellDefined, UnclassifiableSuccessor


def shift_register(q, eta):
    """Successor table of the (word, base letter) labelling, from labels alone.

    State id = rank(u_1..u_eta) * q + i.  Reading letter u shifts the word to
    (u, u_1, ..., u_{eta-1}) and the dropped u_eta becomes the base letter.
    """
    words = list(itertools.product(range(q), repeat=eta))
    rank = {w: r for r, w in enumerate(words)}
    delta = np.empty((len(words) * q, q), dtype=np.int64)
    for w in words:
        for i in range(q):
            for u in range(q):
                if eta == 0:
                    delta[i, u] = u
                else:
                    delta[rank[w] * q + i, u] = rank[(u,) + w[:-1]] * q + w[-1]
    return delta


def test_five_state_machine(fub5):
    dfm = build_dfm(fub5)
    assert dfm.delta.shape == (5, 5)
    np.testing.assert_array_equal(dfm.delta, shift_register(5, 0))
    assert set(dfm.delta.ravel()) <= set(dfm.states)


def test_twenty_five_state_machine(fub25):
    dfm = build_dfm(fub25)
    np.testing.assert_array_equal(dfm.delta, shift_register(5, 1))


def test_strip_table():
    rel = fixtures.strip_relation()
    dfm = build_dfm(rel)
    assert dfm.names == ("X1", "X2")
    assert dfm.delta.tolist() == [[1], [1]]
    assert transition_table(dfm) == "state\tletter\tnext\nX1\t0\tX2\nX2\t0\tX2\n"


def test_counterexample_not_well_defined():
    with pytest.raises(NotWellDefined) as exc:
        build_dfm(fixtures.counterexample_relation())
    err = exc.value
    assert err.cls == 0 and err.letter == 0
    assert sorted(err.targets) == [0, 1]


def test_unclassifiable_successor(fub5):
    # a relation whose only class-0 representative maps outside every class
    from finbisim.bisim import labeled_point_relation
    rel = labeled_point_relation(fixtures.strip_relation().sys, ["a", "b"],
                                 {"a": [[0.0, 1.5]], "b": [[3.0, 0.2]]})
    with pytest.raises(UnclassifiableSuccessor):
        build_dfm(rel)


def test_simulate_dfm_examples():
    dfm = build_dfm(fixtures.strip_relation())
    assert simulate_dfm(dfm, 0, []) == [0]
    assert simulate_dfm(dfm, 0, [0, 0, 0]) == [0, 1, 1, 1]
    with pytest.raises(KeyError):
        simulate_dfm(dfm, 5, [0])
    with pytest.raises(KeyError):
        simulate_dfm(dfm, 0, [1])


@given(st.integers(0, 24), st.lists(st.integers(0, 4), max_size=30))
def test_simulation_matches_shift_register(q0, word):
    delta = shift_register(5, 1)
    dfm = Dfm(tuple(f"X{i + 1}" for i in range(25)), np.zeros((5, 1)), delta)
    seq = simulate_dfm(dfm, q0, word)
    assert seq == simulate_dfm(dfm, q0, word)
    s = q0
    for t, j in enumerate(word):
        s = delta[s, j]
        assert seq[t + 1] == s


def test_trace_equivalence(tri, fub5, rng):
    dfm = build_dfm(fub5)
    for cid in fub5.class_ids:
        x0 = fub5.sample(cid, rng, 1)[0]
        w = rng.integers(5, size=100).tolist()
        assert trace_equivalence_check(tri, fub5, dfm, x0, w).ok
        assert trace_equivalence_check(tri, fub5, dfm, x0, []).ok


def test_corrupted_entry_diverges_at_first_use(tri, fub5):
    dfm = build_dfm(fub5)
    delta = dfm.delta.copy()
    delta[4, 2] = 0  # true successor of class 4 under letter 2 is 2
    bad = Dfm(dfm.names, dfm.alphabet, delta)
    x0 = np.zeros(2)  # class 4
    word = [4, 4, 1, 2, 2]
    # states 4 -4-> 4 -4-> 4 -1-> 1 -2-> 2 -2-> 2; (4, 2) never used
    assert trace_equivalence_check(tri, fub5, bad, x0, word).ok
    word = [4, 4, 2, 0]
    v = trace_equivalence_check(tri, fub5, bad, x0, word)
    assert not v.ok and v.divergence == 3
    assert (v.plant_label, v.dfm_label) == (2, 0)


def test_simulate_plant(tri):
    xs = simulate_plant(tri, [0.0, 0.0], [0, 2])
    np.testing.assert_allclose(xs, [[0, 0], [1, 0], [0.25, 1]])


def test_letter_index(tri):
    assert letter_index(tri.U, [0, -1]) == 3
    with pytest.raises(KeyError):
        letter_index(tri.U, [2, 2])


def test_graph_counts(fub5):
    text = export_graph(build_dfm(fub5))
    assert text.startswith("// finbisim-dfm/1\n")
    assert text.count("->") == 25
    assert sum(1 for ln in text.splitlines() if ln.strip().endswith('";') and "->" not in ln) == 5
    strips = export_graph(build_dfm(fixtures.strip_relation()))
    assert strips.count("->") == 2
    assert 'label="u0=(0.0,0.0)"' in strips


def test_graph_self_loop():
    dfm = Dfm(("s",), np.array([[0.0]]), np.array([[0]]))
    text = export_graph(dfm)
    assert text.count("->") == 1 and '"s" -> "s"' in text
    assert parse_graph(text) == dfm


def test_graph_round_trip(fub25):
    dfm = build_dfm(fub25)
    assert parse_graph(export_graph(dfm)) == dfm
    assert export_graph(dfm) == export_graph(build_dfm(fub25))


def test_graph_must_be_total():
    text = '// finbisim-dfm/1\ndigraph dfm {\n  "a";\n  "b";\n  "a" -> "b" [label="u0=(0.0)"];\n}\n'
    with pytest.raises(ValueError, match="total"):
        parse_graph(text)


def test_delta_is_read_only(fub5):
    with pytest.raises(ValueError):
        build_dfm(fub5).delta[0, 0] = 3
