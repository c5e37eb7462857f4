from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lograt.curvature import EvaluationGrid
from lograt.ranking import (
    CValueMatrix,
    PairError,
    RankedRow,
    accumulate,
    build_matrix,
    element_frequency,
    scale_matrix,
    top_curves,
    top_k,
)


def random_matrix(rng, symbols, material="m"):
    m = len(symbols)
    a = rng.uniform(0, 5, (m, m))
    v = np.triu(a, 1) + np.triu(a, 1).T
    return CValueMatrix(tuple(symbols), v, material)


def test_pair_count_for_27_elements():
    symbols = [f"E{i:02d}" for i in range(27)]
    mat = random_matrix(np.random.default_rng(0), symbols)
    assert len(list(mat.pairs())) == 351
    assert len(top_k(mat)) == 351


def test_build_matrix_symmetric(bump_fits):
    mat, profiles = build_matrix(bump_fits, EvaluationGrid(), "soil")
    assert np.array_equal(mat.values, mat.values.T)
    assert np.all(np.diag(mat.values) == 0)
    assert len(profiles) == 15
    assert mat.elements == tuple(f.element for f in bump_fits)


def test_build_matrix_duplicate_fit(bump_fits):
    mat, _ = build_matrix([bump_fits[0], bump_fits[0]], EvaluationGrid())
    assert mat.values[0, 1] == 0.0


def test_build_matrix_order_invariant(bump_fits):
    a, _ = build_matrix(bump_fits, EvaluationGrid())
    perm = [3, 0, 5, 1, 4, 2]
    b, _ = build_matrix([bump_fits[i] for i in perm], EvaluationGrid())
    for x, y in combinations(a.elements, 2):
        assert a.value(x, y) == b.value(x, y)


def test_build_matrix_needs_two(bump_fits):
    with pytest.raises(ValueError):
        build_matrix(bump_fits[:1])


def test_pair_error_carries_pair():
    err = PairError(("Co", "Al"), ValueError("bad"))
    assert err.pair == ("Co", "Al") and "Co/Al" in str(err)


def test_scale_matrix():
    mat = random_matrix(np.random.default_rng(1), "ABCD")
    s = scale_matrix(mat)
    assert s.scaled and s.values.max() == 1.0
    assert top_k(s, 1)[0].value == 1.0
    assert [r.pair for r in top_k(s)] == [r.pair for r in top_k(mat)]
    zero = CValueMatrix(("A", "B"), np.zeros((2, 2)))
    assert np.array_equal(scale_matrix(zero).values, zero.values) and scale_matrix(zero).scaled


def test_top_k_ties_lexicographic():
    v = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    rows = top_k(CValueMatrix(("Zn", "Al", "Co"), v))
    assert [r.pair for r in rows] == ["Al/Co", "Zn/Al", "Zn/Co"]
    assert [r.rank for r in rows] == [1, 2, 3]
    with pytest.raises(ValueError):
        top_k(CValueMatrix(("A", "B"), np.zeros((2, 2))), 0)


def test_top_k_full_list_and_scaled_column():
    mat = random_matrix(np.random.default_rng(2), "ABCDE")
    rows = top_k(mat, 100)
    assert len(rows) == 10
    values = [r.value for r in rows]
    assert values == sorted(values, reverse=True)
    assert rows[0].scaled_value == 1.0


def test_frequency_examples():
    ranked = [RankedRow(1, "Co", "Al", 2.0, 1.0), RankedRow(2, "Co", "Fe", 1.0, 0.5)]
    assert element_frequency(ranked, 2) == [("Co", 2, 1), ("Al", 1, 1), ("Fe", 1, 2)]
    assert element_frequency(ranked, 1) == [("Al", 1, 1), ("Co", 1, 1)]
    with pytest.raises(ValueError):
        element_frequency([])


def test_frequency_anomalous_element_first(bump_result, bump_data):
    _, truth = bump_data
    freq = element_frequency(bump_result.ranked(), 10)
    assert freq[0][0] == truth.anomalous_elements[0]


def test_accumulate_identical():
    s = scale_matrix(random_matrix(np.random.default_rng(3), "ABC"))
    acc = accumulate([s, s])
    np.testing.assert_allclose(acc.values, s.values, rtol=1e-15)
    assert np.all(acc.coverage == 2)


def test_accumulate_partial_coverage():
    a = scale_matrix(random_matrix(np.random.default_rng(4), "ABC", "a"))
    b = scale_matrix(random_matrix(np.random.default_rng(5), "ABD", "b"))
    acc = accumulate([a, b])
    assert acc.elements == ("A", "B", "C", "D")
    assert acc.value("A", "C") == a.value("A", "C")
    assert acc.coverage[2, 0] == 1
    assert acc.value("A", "B") == pytest.approx((a.value("A", "B") + b.value("A", "B")) / 2)
    assert np.isnan(acc.value("C", "D")) and acc.coverage[2, 3] == 0
    assert ("C", "D") not in {(x, y) for x, y, _ in acc.pairs()}


def test_accumulate_requires_scaled():
    m = random_matrix(np.random.default_rng(6), "AB")
    with pytest.raises(ValueError):
        accumulate([m, m])
    with pytest.raises(ValueError):
        accumulate([scale_matrix(m)])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.permutations(range(4)))
def test_accumulate_permutation_invariant_in_unit_range(seed, perm):
    rng = np.random.default_rng(seed)
    mats = [scale_matrix(random_matrix(rng, "ABCDE", str(i))) for i in range(4)]
    a = accumulate(mats)
    b = accumulate([mats[i] for i in perm])
    assert np.array_equal(a.values, b.values)
    assert np.nanmin(a.values) >= 0 and np.nanmax(a.values) <= 1


def test_top_curves():
    rng = np.random.default_rng(7)
    mats = [random_matrix(rng, [f"E{i}" for i in range(15)], name) for name in ("a", "b")]
    curves = top_curves(mats, 70)
    assert set(curves) == {"a", "b"}
    for c in curves.values():
        assert len(c) == 70 and np.all(np.diff(c) <= 0)
    assert len(top_curves(mats[:1])) == 1
    with pytest.raises(ValueError):
        top_curves(mats, 0)
