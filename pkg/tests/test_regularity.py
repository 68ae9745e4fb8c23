import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import witness_gap_dense
from projektor.errors import EmptyReportError, InputError
from projektor.gallery import build_bk, build_slownono
from projektor.regularity import (
    GAP_VANISHING, RATE_TO_ONE, coordinate_blocks, dichotomy_scan, extract_witness_sequence,
    intersection_dim, witness_gap_only, witness_search,
)
from projektor.subspace import Subspace, dist, make_subspace, span


def test_two_lines_gap_is_one_minus_cos():
    t = 0.4
    L = [span(np.array([1.0, 0.0])), span(np.array([math.cos(t), math.sin(t)]))]
    rep = witness_search(L)
    assert rep.witness_gap == pytest.approx(1 - math.cos(t), abs=1e-12)
    assert rep.friedrichs_pairs[(1, 2)] == pytest.approx(math.cos(t), abs=1e-12)
    assert rep.rate == pytest.approx(math.cos(t) ** 2, abs=1e-8)


def test_single_subspace_and_whole_space_are_empty():
    with pytest.raises(EmptyReportError):
        witness_search([span(np.array([1.0, 0.0]))])
    with pytest.raises(EmptyReportError):
        witness_search([Subspace.full(3), Subspace.full(3)])
    with pytest.raises(InputError):
        witness_search([Subspace.full(2), Subspace.full(3)])


def test_untouched_coordinates_give_gap_K():
    e = np.eye(3)
    gap, w, ldim = witness_gap_only([span(e[0]), span(e[0])])
    assert gap == pytest.approx(2.0) and ldim == 1 and abs(w[0]) == 0


def test_coordinate_blocks_split_bk():
    blocks, untouched = coordinate_blocks(build_bk(4))
    assert untouched.size == 0
    assert sorted(len(b) for b in blocks) == [1] * 4 + [2] * 4


@given(st.integers(2, 4), st.integers(2, 7), st.integers(0, 10**6))
def test_gap_matches_dense_oracle(K, n, seed):
    rng = np.random.default_rng(seed)
    L = [make_subspace(rng.standard_normal((n, int(rng.integers(1, n + 1))))) for _ in range(K)]
    gap, w, ldim = witness_gap_only(L)
    ref = witness_gap_dense([s.projector() for s in L])
    if ref is None:
        assert gap is None
        return
    assert gap == pytest.approx(ref, abs=1e-9)
    # the witness is a unit vector attaining the gap
    assert np.linalg.norm(w) == pytest.approx(1.0)
    assert sum(dist(w, s) ** 2 for s in L) == pytest.approx(gap, abs=1e-9)


@given(st.integers(2, 4), st.integers(0, 10**6))
def test_report_sandwich(K, seed):
    rng = np.random.default_rng(seed)
    n = 6
    L = [make_subspace(rng.standard_normal((n, int(rng.integers(1, n))))) for _ in range(K)]
    rep = witness_search(L, pairs=False)
    assert rep.max_dist ** 2 <= rep.witness_gap + 1e-12
    assert rep.witness_gap <= K * rep.max_dist ** 2 + 1e-12


def test_gap_is_minimum_over_random_unit_vectors():
    rng = np.random.default_rng(4)
    L = build_slownono(5)
    gap = witness_gap_only(L)[0]
    for _ in range(500):
        x = rng.standard_normal(10)
        x /= np.linalg.norm(x)
        assert sum(dist(x, s) ** 2 for s in L) >= gap - 1e-12


def test_slownono_gap_shrinks_like_inverse_square():
    for J in (10, 40):
        g = witness_gap_only(build_slownono(J))[0]
        assert g <= 5 / J ** 2
        assert g > 0
    assert intersection_dim(build_slownono(10)) == 0


def test_bk_pair_versus_triple():
    L = build_bk(30)
    assert witness_gap_only(L)[0] >= 0.5
    assert witness_gap_only(L[:2])[0] <= 2 / 30 ** 2


def test_scan_flags_and_outputs(tmp_path):
    scan = dichotomy_scan(build_slownono, [10, 50, 100])
    assert set(scan.flags) == {GAP_VANISHING, RATE_TO_ONE}
    lines = scan.csv_text().splitlines()
    assert lines[0] == "N,witness_gap,max_dist,rate,flag_gap,flag_rate"
    assert lines[1].startswith("10,") and lines[1].endswith(",1,1")
    scan.write(tmp_path / "s.csv", tmp_path / "s.json")
    assert (tmp_path / "s.json").exists()
    seq = extract_witness_sequence(scan.reports)
    assert [t for t, _, _ in seq] == [10, 50, 100]


def test_scan_by_family_and_subset():
    pair = dichotomy_scan(("BK", {}), [10, 40], subset=(1, 2))
    triple = dichotomy_scan(("BK", {}), [10, 40])
    assert GAP_VANISHING in pair.flags and GAP_VANISHING not in triple.flags


def test_scan_rejects_bad_truncations():
    with pytest.raises(InputError):
        dichotomy_scan(build_slownono, [])
    with pytest.raises(InputError):
        dichotomy_scan(build_slownono, [10, 10])
