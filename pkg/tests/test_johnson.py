import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import johnson_brute, transfer_rule
from projektor.errors import InputError, PreconditionViolated
from projektor.johnson import (
    FourTupleLabel, build_johnson, condition_d, fourset, generate_walk, is_connected_cover,
    labels_csv, parse_labels_csv, parse_walk_text, random_walk, symbol_sequences,
    validate_block_structure, walk_covers_windows, walk_text,
)

R, N, I = FourTupleLabel.REGULAR, FourTupleLabel.NONCLOSED_SUM, FourTupleLabel.INF_INTERSECTION


@pytest.mark.parametrize("K", [4, 5, 6, 7, 8])
def test_johnson_matches_bruteforce(K):
    J = build_johnson(K)
    verts, edges = johnson_brute(K)
    assert list(J.vertices) == verts
    assert sorted(J.edges) == sorted(edges)
    assert set(J.degrees().values()) == {4 * (K - 4)}


def test_small_johnson_graphs():
    J5 = build_johnson(5)
    assert (len(J5.vertices), len(J5.edges)) == (5, 10)
    J6 = build_johnson(6)
    assert (len(J6.vertices), len(J6.edges)) == (15, 60)
    import networkx as nx
    assert nx.is_connected(J6.graph())
    with pytest.raises(InputError):
        build_johnson(3)


def test_fourset_validation():
    assert fourset([4, 1, 3, 2]) == (1, 2, 3, 4)
    with pytest.raises(InputError):
        fourset([1, 1, 2, 3])
    with pytest.raises(InputError):
        fourset([1, 2, 3, 9], K=5)


def test_connected_cover():
    assert is_connected_cover([(1, 2, 3, 4), (1, 2, 3, 5)], 5) == (True, True)
    assert is_connected_cover([(1, 2, 3, 4), (1, 5, 6, 7)], 7) == (True, False)
    assert is_connected_cover([(1, 2, 3, 4)], 5)[0] is False


def test_condition_d():
    labels = {a: R for a in build_johnson(5).vertices}
    assert condition_d(labels) == (False, None)
    labels[(1, 2, 3, 4)] = N
    labels[(1, 2, 3, 5)] = I
    holds, cert = condition_d(labels)
    assert holds and cert == [(1, 2, 3, 4), (1, 2, 3, 5)]
    labels[(1, 2, 3, 5)] = R
    assert condition_d(labels)[0] is False


def test_condition_d_monotone_in_nonregular_set():
    rng = np.random.default_rng(0)
    verts = build_johnson(6).vertices
    for _ in range(50):
        labels = {a: (N if rng.random() < 0.3 else R) for a in verts}
        if condition_d(labels, 6)[0]:
            more = dict(labels)
            more[verts[int(rng.integers(len(verts)))]] = N
            assert condition_d(more, 6)[0]


def test_walk_preconditions():
    with pytest.raises(PreconditionViolated):
        generate_walk([(1, 2, 3, 4)], 10, K=5)
    with pytest.raises(PreconditionViolated):
        generate_walk([(1, 2, 3, 4), (1, 5, 6, 7)], 10)
    assert generate_walk([(1, 2, 3, 4)], 3) == [(1, 2, 3, 4)] * 3


def test_generated_walk_covers_every_window():
    V = [(1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 5, 6), (2, 5, 6, 7)]
    w = generate_walk(V, 200, seed=3)
    assert walk_covers_windows(w, 7, 4 * len(V))
    assert all(len(set(a) & set(b)) == 3 for a, b in zip(w, w[1:]))
    assert generate_walk(V, 200, seed=3) == w


def test_transfer_rule_example():
    walk = [(1, 2, 3, 4), (1, 2, 3, 5), (1, 2, 4, 5), (1, 2, 3, 4)]
    s = symbol_sequences(walk)

    def col(i):
        return {k: v for k, v in s.column(i).items() if v != "0"}

    assert col(0) == {1: "X", 2: "Y", 3: "Z"}
    # E_2 = {1,2,5}: 5 takes over 3's symbol
    assert col(1) == {1: "X", 2: "Y", 5: "Z"}
    assert col(2) == {1: "X", 2: "Y", 4: "Z"}
    assert s.seqs[3] == ("Z", "0", "0") and s.seqs[5] == ("0", "Z", "0")


@given(st.integers(5, 8), st.integers(0, 2**32 - 1))
def test_transfer_rule_matches_oracle(K, seed):
    walk = random_walk(build_johnson(K).vertices, 30, seed=seed, K=K)
    s = symbol_sequences(walk, K)
    ref = transfer_rule(walk)
    for i, col in enumerate(ref):
        assert {k: v for k, v in s.column(i).items() if v != "0"} == col
    for k in range(1, K + 1):
        assert validate_block_structure(s.indicator(k))


def test_validate_block_structure():
    assert validate_block_structure([1, 0, 0, 1, 1, 0])
    assert not validate_block_structure([1, 0, 1])
    assert validate_block_structure(["0", "X", "X", "0", "0", "Z"])
    assert validate_block_structure([0, 0, 0])


def test_symbol_sequences_rejects_bad_steps():
    with pytest.raises(InputError):
        symbol_sequences([(1, 2, 3, 4), (1, 2, 5, 6)])
    with pytest.raises(InputError):
        symbol_sequences([(1, 2, 3, 4)])


def test_file_formats_roundtrip():
    labels = {(1, 2, 3, 4): N, (1, 2, 3, 5): R}
    text = labels_csv(labels)
    assert text.splitlines()[0] == "a,b,c,d,label"
    assert parse_labels_csv(text) == labels
    walk = [(1, 2, 3, 4), (1, 2, 3, 5)]
    assert parse_walk_text(walk_text(walk)) == walk
