import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from cogmap.data import IndicatorSchema, IndicatorTable
from cogmap.errors import DegenerateColumnError, InsufficientDataError, SchemaError
from cogmap.stats import (
    DirectionMask,
    compute_stat_matrices,
    filter_edges,
    load_edges,
    load_mask,
    pearson_standard_error,
    standardize,
    write_edges,
    write_mask,
    export_stat_matrices,
)


def table(cols, names=None):
    cols = [np.asarray(c, dtype=float) for c in cols]
    names = names or [chr(ord("a") + i) for i in range(len(cols))]
    return IndicatorTable(IndicatorSchema.from_names(names), [f"t{i}" for i in range(len(cols[0]))], np.column_stack(cols))


def test_standardize_by_hand():
    z = standardize(table([[1, 2, 3]]))
    assert z.values[:, 0].tolist() == pytest.approx([-1, 0, 1], abs=1e-15)
    assert z.means[0] == pytest.approx(2) and z.stddevs[0] == pytest.approx(1)


def test_standardize_idempotent():
    rng = np.random.default_rng(5)
    z1 = standardize(table([rng.normal(3, 7, 30), rng.normal(size=30)]))
    z2 = standardize(table(z1.values.T))
    assert np.abs(z2.values - z1.values).max() < 1e-12


def test_standardize_constant_raises():
    with pytest.raises(DegenerateColumnError, match="'b'"):
        standardize(table([[1, 2, 3], [5, 5, 5]]))


def test_standardize_keeps_missing():
    z = standardize(table([[1, np.nan, 2, 3]]))
    assert math.isnan(z.values[1, 0])
    assert z.values[[0, 2, 3], 0] == pytest.approx([-1, 0, 1])


def test_perfect_linear_pair():
    x = np.arange(6.0)
    sm = compute_stat_matrices(standardize(table([x, 2 * x])))
    assert sm.corr[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert sm.corr_err[0, 1] == pytest.approx(0.0, abs=1e-7)
    assert sm.regr[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert sm.corr.diagonal().tolist() == [1.0, 1.0]


def test_hand_computed_correlation():
    # sum xy = 1, sum x^2 = sum y^2 = 2  =>  r = 0.5, err = sqrt(0.75 / 1)
    sm = compute_stat_matrices(standardize(table([[-1, 0, 1], [-1, 1, 0]])), min_pairwise_n=3)
    assert sm.corr[0, 1] == pytest.approx(0.5, abs=1e-14)
    assert sm.corr_err[0, 1] == pytest.approx(math.sqrt(0.75), abs=1e-14)


def test_insufficient_pair_raises():
    # 3 complete rows < default minimum of 4
    with pytest.raises(InsufficientDataError, match="'a', 'b'"):
        compute_stat_matrices(standardize(table([[1, 2, 3, 4, 5], [2, 1, 3, np.nan, np.nan]])))


def test_matches_scipy_on_pairwise_rows():
    rng = np.random.default_rng(11)
    n = 25
    a = rng.normal(size=n)
    b = 0.7 * a + rng.normal(size=n)
    c = rng.normal(size=n)
    a[[2, 7]] = np.nan
    b[[4]] = np.nan
    c[[7, 10, 11]] = np.nan
    t = table([a, b, c])
    z = standardize(t)
    sm = compute_stat_matrices(z)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            rows = ~np.isnan(z.values[:, i]) & ~np.isnan(z.values[:, j])
            fit = sps.linregress(z.values[rows, i], z.values[rows, j])
            assert sm.pairwise_n[i, j] == rows.sum()
            assert sm.corr[i, j] == pytest.approx(np.corrcoef(z.values[rows, i], z.values[rows, j])[0, 1], abs=1e-12)
            assert sm.regr[i, j] == pytest.approx(fit.slope, abs=1e-12)
            assert sm.regr_err[i, j] == pytest.approx(fit.stderr, abs=1e-12)
            r = fit.rvalue
            assert sm.corr_err[i, j] == pytest.approx(math.sqrt((1 - r * r) / (rows.sum() - 2)), abs=1e-12)
    assert np.array_equal(sm.corr, sm.corr.T)
    assert np.array_equal(sm.corr_err, sm.corr_err.T)


def test_custom_error_formula():
    x = np.arange(10.0)
    sm = compute_stat_matrices(standardize(table([x, x ** 2])), corr_error=lambda r, n: 0.123)
    assert sm.corr_err[0, 1] == 0.123


def test_pearson_standard_error_edge_cases():
    assert pearson_standard_error(0.5, 2) == math.inf
    assert pearson_standard_error(1.0, 10) == 0.0


# -- filter -------------------------------------------------------------------

def planted(r, n, seed=0):
    """Columns a, b with sample correlation exactly r (Gram-Schmidt on noise)."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    e = rng.normal(size=n)
    x = (x - x.mean()) / x.std(ddof=1)
    e = e - e.mean()
    e -= (e @ x) / (x @ x) * x
    e /= e.std(ddof=1)
    return x, r * x + math.sqrt(1 - r * r) * e


def test_filter_all_zero_mask():
    x, y = planted(0.99, 30)
    sm = compute_stat_matrices(standardize(table([x, y])))
    assert filter_edges(sm, DirectionMask.empty(sm.names)) == []


def test_filter_both_directions_weight_equals_r():
    # n = 400: err = sqrt(1 - 0.95^2) / sqrt(398) ~ 0.0157 <= 0.1
    x, y = planted(0.95, 400)
    sm = compute_stat_matrices(standardize(table([x, y])))
    edges = filter_edges(sm, DirectionMask.full(sm.names))
    assert [(e.source, e.target) for e in edges] == [("a", "b"), ("b", "a")]
    for e in edges:
        assert e.r == pytest.approx(0.95, abs=1e-12)
        assert e.weight == pytest.approx(0.95, abs=1e-12)
        assert e.r_err <= 0.1 and e.n == 400


def test_filter_excludes_below_threshold():
    x, y = planted(0.85, 400)
    sm = compute_stat_matrices(standardize(table([x, y])))
    assert filter_edges(sm, DirectionMask.full(sm.names)) == []


def test_filter_keeps_strong_negative():
    x, y = planted(-0.97, 100)
    sm = compute_stat_matrices(standardize(table([x, y])))
    edges = filter_edges(sm, DirectionMask.from_pairs(sm.names, [("a", "b")]))
    assert len(edges) == 1 and edges[0].weight == pytest.approx(-0.97)


def test_filter_error_threshold():
    # r = 0.95 at n = 5: err = sqrt(0.0975 / 3) ~ 0.18 > 0.1
    x, y = planted(0.95, 5)
    sm = compute_stat_matrices(standardize(table([x, y])))
    assert filter_edges(sm, DirectionMask.full(sm.names)) == []
    assert len(filter_edges(sm, DirectionMask.full(sm.names), err_threshold=0.2)) == 2


def test_filter_ordering_ties_by_name():
    x, y = planted(0.95, 200)
    sm = compute_stat_matrices(standardize(table([x, y, x, y], names=["d", "c", "b", "a"])), min_pairwise_n=4)
    edges = filter_edges(sm, DirectionMask.full(sm.names))
    keys = [(-abs(e.weight), e.source, e.target) for e in edges]
    assert keys == sorted(keys)


def test_mask_rejects_self_loop():
    with pytest.raises(SchemaError):
        DirectionMask(("a", "b"), [[1, 0], [0, 0]])


def test_mask_file_roundtrip():
    m = DirectionMask.from_pairs(("Budget", "Poverty", "HDI"), [("Budget", "Poverty"), ("HDI", "Budget")])
    buf = io.StringIO()
    write_mask(m, buf)
    back = load_mask(io.StringIO(buf.getvalue()))
    assert back.names == m.names and np.array_equal(back.allowed, m.allowed)
    assert back.allows("Budget", "Poverty") and not back.allows("Poverty", "Budget")


def test_edges_file_roundtrip():
    x, y = planted(0.95, 200)
    sm = compute_stat_matrices(standardize(table([x, y])))
    edges = filter_edges(sm, DirectionMask.full(sm.names))
    buf = io.StringIO()
    write_edges(edges, buf)
    assert load_edges(io.StringIO(buf.getvalue())) == edges


def test_export_matrices(tmp_path):
    x, y = planted(0.95, 50)
    sm = compute_stat_matrices(standardize(table([x, y])))
    paths = export_stat_matrices(sm, tmp_path)
    assert {p.name for p in paths} == {"corr.csv", "corr_err.csv", "regr.csv", "regr_err.csv", "pairwise_n.csv"}
    lines = (tmp_path / "corr.csv").read_text().splitlines()
    assert lines[0] == ",a,b"
    assert lines[1].split(",")[2] == format(sm.corr[0, 1], ".12g")


# -- properties ---------------------------------------------------------------

dims = st.tuples(st.integers(5, 30), st.integers(2, 6), st.integers(0, 2**31 - 1))


def random_table(n, k, seed):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, 1))
    return table(list((base * rng.uniform(0, 3, k) + rng.normal(size=(n, k)) * rng.uniform(0.05, 2, k)).T))


@settings(max_examples=60, deadline=None)
@given(dims)
def test_slope_equals_correlation_complete_data(d):
    sm = compute_stat_matrices(standardize(random_table(*d)))
    assert np.abs(sm.regr - sm.corr).max() < 1e-12
    assert np.abs(sm.regr - sm.regr.T).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(dims, st.floats(0.1, 1000), st.integers(0, 5))
def test_scale_invariance(d, c, col):
    t = random_table(*d)
    col = col % t.shape[1]
    scaled = t.values.copy()
    scaled[:, col] *= c
    t2 = IndicatorTable(t.schema, t.territory_ids, scaled)
    z1, z2 = standardize(t), standardize(t2)
    assert np.abs(z1.values - z2.values).max() < 1e-12
    s1, s2 = compute_stat_matrices(z1), compute_stat_matrices(z2)
    assert np.abs(s1.corr - s2.corr).max() < 1e-12
    mask = DirectionMask.full(t.names)
    e1 = {(e.source, e.target) for e in filter_edges(s1, mask, 0.5, 0.5)}
    e2 = {(e.source, e.target) for e in filter_edges(s2, mask, 0.5, 0.5)}
    assert e1 == e2


@settings(max_examples=60, deadline=None)
@given(dims, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_threshold_monotonicity(d, r1, r2, e1, e2):
    sm = compute_stat_matrices(standardize(random_table(*d)))
    mask = DirectionMask.full(sm.names)
    lo_r, hi_r = sorted((r1, r2))
    lo_e, hi_e = sorted((e1, e2))
    loose = {(e.source, e.target) for e in filter_edges(sm, mask, lo_r, hi_e)}
    strict = {(e.source, e.target) for e in filter_edges(sm, mask, hi_r, lo_e)}
    assert strict <= loose
