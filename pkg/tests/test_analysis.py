import itertools
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudophase.analysis import (
    BitOrder,
    ModeMatrix,
    MPresence,
    StateTerm,
    SuperpositionState,
    classify_branch,
    extract_m_matrix,
    extract_period,
    reconstruct_terms,
    render_diff,
    witness_ok,
)
from pseudophase.detection import correlation_scan
from pseudophase.scenarios import build

N, U, R, B = MPresence.NONE, MPresence.UP_ONLY, MPresence.RIGHT_ONLY, MPresence.BOTH


def shipped_m(name):
    return ModeMatrix.parse(resources.files("pseudophase").joinpath("data", name).read_text())


def test_classify_examples():
    assert classify_branch([8, 4, 4]) == {0}
    assert classify_branch([4, 8, 8]) == {1, 2}
    assert classify_branch([2, 2, 2]) == set()
    assert classify_branch([0, 0, 0]) == set()
    assert classify_branch([4.0, 4.1, 4.0]) == set()  # spread below epsilon
    assert classify_branch([4.0, 4.1, 4.0], epsilon_flat=0.01) == {1}


def test_classify_threshold_validation():
    for eps, theta in [(0, 0.5), (1, 0.5), (0.05, 0), (0.05, 1.5)]:
        with pytest.raises(ValueError):
            classify_branch([1, 2], eps, theta)
    with pytest.raises(ValueError):
        classify_branch([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.5, 100), min_size=2, max_size=10), st.floats(1e-3, 1e3))
def test_classify_is_scale_invariant(values, c):
    assert classify_branch(values) == classify_branch([c * v for v in values])


def test_extract_m_matrix_on_scenarios(family):
    for name, mfile in [("ghz", "eq10.m"), ("w", "eq11.m"), ("shor15", "eq13.m")]:
        sc = build(name)
        table = correlation_scan(sc.fields, [family[i] for i in sc.lo_ids])
        got = extract_m_matrix(table)
        assert got.same_entries(sc.expected_m)
        assert got.same_entries(shipped_m(mfile))


def test_product_matrix(family):
    sc = build("product")
    m = extract_m_matrix(correlation_scan(sc.fields, [family[i] for i in sc.lo_ids]))
    assert m.entries == ((B, N, N), (N, B, N), (N, N, B))


def test_mpresence_tokens():
    assert MPresence.parse("( 1 , 0 )") is U
    assert MPresence.from_flags(True, True) is B
    assert U.covers(0) and not U.covers(1) and B.covers(1) and not N.covers(0)
    with pytest.raises(ValueError):
        MPresence.parse("(2,0)")


entries = st.sampled_from(list(MPresence))


@st.composite
def matrices(draw, max_rows=5, max_cols=6):
    nrows = draw(st.integers(1, max_rows))
    ncols = draw(st.integers(1, max_cols))
    cols = draw(st.lists(st.integers(0, 20), min_size=ncols, max_size=ncols, unique=True))
    rows = tuple(tuple(draw(entries) for _ in range(ncols)) for _ in range(nrows))
    return ModeMatrix(tuple(f"E{i + 1}" for i in range(nrows)), tuple(cols), rows)


@settings(max_examples=100, deadline=None)
@given(matrices())
def test_render_parse_round_trip(m):
    assert ModeMatrix.parse(m.render()) == m
    assert ModeMatrix.parse(m.render(header=False)).entries == m.entries


def test_parse_errors():
    with pytest.raises(ValueError, match="no rows"):
        ModeMatrix.parse("# nothing\n")
    with pytest.raises(ValueError, match="unequal"):
        ModeMatrix.parse("0 0\n0\n")
    with pytest.raises(ValueError, match="line 2"):
        ModeMatrix.parse("0 0\n0 x\n")


def test_render_diff():
    a = ModeMatrix(("E1",), (1, 2), ((U, N),))
    b = ModeMatrix(("E1",), (1, 2), ((U, R),))
    assert a.diff(b) == [(0, 1, N, R)]
    assert "E1" in render_diff(a, b)


def brute_force_matching(m):
    """Every bit pattern with an injective field -> column assignment covering it."""
    nrows, ncols = m.shape
    found = set()
    for perm in itertools.permutations(range(ncols), nrows):
        options = [[b for b in (0, 1) if m.entries[i][j].covers(b)] for i, j in enumerate(perm)]
        found.update(itertools.product(*options))
    return sorted(found)


def brute_force_cyclic(m):
    nrows, ncols = m.shape
    found = set()
    if nrows <= ncols:
        for s in range(ncols):
            options = [[b for b in (0, 1) if m.entries[i][(i + s) % ncols].covers(b)] for i in range(nrows)]
            found.update(itertools.product(*options))
    return sorted(found)


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_matching_agrees_with_permutation_oracle(m):
    state = reconstruct_terms(m, "matching")
    assert [t.bits for t in state.terms] == brute_force_matching(m)
    assert all(witness_ok(m, t) for t in state.terms)


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_cyclic_agrees_with_shift_oracle(m):
    state = reconstruct_terms(m, "cyclic")
    assert [t.bits for t in state.terms] == brute_force_cyclic(m)
    assert all(witness_ok(m, t) for t in state.terms)
    assert set(state.bitstrings) <= set(reconstruct_terms(m, "matching").bitstrings)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.data())
def test_permutation_structure_gives_one_term(n, data):
    perm = data.draw(st.permutations(range(n)))
    bits = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    rows = tuple(tuple((U if b == 0 else R) if j == p else N for j in range(n)) for p, b in zip(perm, bits))
    m = ModeMatrix(tuple(f"E{i}" for i in range(n)), tuple(range(1, n + 1)), rows)
    state = reconstruct_terms(m)
    assert state.bitstrings == ["".join(map(str, bits))]


@settings(max_examples=100, deadline=None)
@given(matrices(), st.data())
def test_field_order_does_not_matter(m, data):
    perm = data.draw(st.permutations(range(m.shape[0])))
    shuffled = ModeMatrix(tuple(m.rows[i] for i in perm), m.cols, tuple(m.entries[i] for i in perm))
    a = {t.bits for t in reconstruct_terms(m).terms}
    b = {tuple(bits[perm.index(i)] for i in range(len(perm))) for bits in
         (t.bits for t in reconstruct_terms(shuffled).terms)}
    assert a == b


def test_scenario_reconstructions():
    assert reconstruct_terms(shipped_m("eq10.m")).bitstrings == ["000", "111"]
    assert reconstruct_terms(shipped_m("eq11.m")).bitstrings == ["011", "101", "110"]
    assert len(reconstruct_terms(ModeMatrix(("a", "b", "c"), (1, 2, 3), ((B, N, N), (N, B, N), (N, N, B))))) == 8


def test_witness_ok_rejects_bad_witnesses():
    m = shipped_m("eq10.m")
    assert witness_ok(m, StateTerm((0, 0, 0), (1, 2, 3)))
    assert not witness_ok(m, StateTerm((0, 0, 0), (1, 1, 3)))
    assert not witness_ok(m, StateTerm((1, 0, 0), (1, 2, 3)))
    assert not witness_ok(m, StateTerm((0, 0, 0), (1, 2)))


def test_unsupported_matrix_gives_empty_state():
    m = ModeMatrix(("a", "b"), (1, 2), ((U, N), (U, N)))
    state = reconstruct_terms(m)
    assert len(state) == 0 and state.candidates == (1, 1)
    with pytest.raises(ValueError, match="empty state"):
        extract_period(state.with_register((0,), (1,)))


def test_period_examples():
    ghz = reconstruct_terms(shipped_m("eq10.m"), register_split=((0, 1), (2,)))
    report = extract_period(ghz)
    assert report.r == 2
    assert report.groups == {0: (0,), 1: (3,)}
    assert report.to_dict() == {"r": 2, "groups": [{"f": 0, "x": [0]}, {"f": 1, "x": [3]}]}
    w = SuperpositionState.from_bitstrings(["0 11", "1 01", "1 10"], ((0,), (1, 2)))
    assert w.pairs() == [(0, 3), (1, 1), (1, 2)]
    assert extract_period(w).r == 3


def test_bit_order():
    s = SuperpositionState.from_bitstrings(["1101"], ((0, 1), (2, 3)))
    assert s.pairs() == [(3, 1)]
    assert s.with_register((0, 1), (2, 3), "lsb").pairs() == [(3, 2)]
    assert s.with_register((0, 1), (2, 3), BitOrder.LSB_FIRST).bit_order is BitOrder.LSB_FIRST


def test_state_rejects_duplicates_and_missing_split():
    with pytest.raises(ValueError, match="duplicate"):
        SuperpositionState((StateTerm((0, 1)), StateTerm((0, 1))))
    with pytest.raises(ValueError, match="register split"):
        SuperpositionState.from_bitstrings(["01"]).pairs()


def test_select_columns():
    m = shipped_m("eq13.m")
    sub = m.select_columns([3, 1])
    assert sub.cols == (3, 1)
    assert [r[0] for r in sub.entries] == [r[2] for r in m.entries]
    with pytest.raises(KeyError):
        m.select_columns([99])
