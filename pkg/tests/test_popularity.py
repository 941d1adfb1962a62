import math

import pytest
from hypothesis import given, strategies as st

from ambersets.errors import ContractError, ParseError
from ambersets.popularity import (
    DEFAULT_GAP_BINS,
    PopularityTable,
    assign_gap_bin,
    assign_head_tail,
    load_pageviews,
    make_gap_bins,
    meets_gap,
    popularity_gap,
)


def test_gap_examples():
    assert popularity_gap(110, 100) == pytest.approx(0.1)
    assert popularity_gap(500000, 1200) == pytest.approx(415.6666666, rel=1e-6)
    assert popularity_gap(0, 0) == 0.0
    assert popularity_gap(5, 0) == math.inf
    with pytest.raises(ContractError):
        popularity_gap(1, 2)


def test_threshold_is_exact():
    assert meets_gap(110, 100)
    assert not meets_gap(109, 100)
    assert meets_gap(11, 10)
    assert not meets_gap(105, 100)
    assert meets_gap(1, 0)
    assert not meets_gap(0, 0)


@given(st.integers(1, 10**6), st.integers(0, 10**6), st.integers(1, 1000))
def test_gap_scale_invariant(p_t, extra, c):
    p_h = p_t + extra
    assert popularity_gap(c * p_h, c * p_t) == pytest.approx(popularity_gap(p_h, p_t), rel=1e-12)
    assert meets_gap(c * p_h, c * p_t) == meets_gap(p_h, p_t)


def test_head_tail_examples():
    views = {"Q91": 500000, "Q90000001": 1200}
    assert assign_head_tail(["Q90000001", "Q91"], views) == ("Q91", ["Q90000001"])
    tie = {"Q2": 10, "Q1": 10, "Q3": 1}
    assert assign_head_tail(["Q3", "Q2", "Q1"], tie) == ("Q1", ["Q2", "Q3"])
    assert assign_head_tail(["Q1", "Q9"], {"Q1": 0}) == ("Q1", ["Q9"])
    with pytest.raises(ContractError):
        assign_head_tail(["Q1"], {})


@given(st.dictionaries(st.sampled_from([f"Q{i}" for i in range(8)]), st.integers(0, 5), min_size=2), st.randoms())
def test_head_tail_permutation_invariant(views, rnd):
    qids = list(views)
    shuffled = list(qids)
    rnd.shuffle(shuffled)
    head, tails = assign_head_tail(qids, views)
    assert (head, tails) == assign_head_tail(shuffled, views)
    assert all(views[head] >= views[t] for t in tails)
    assert sorted([head] + tails) == sorted(qids)


def test_bins():
    labels = [b.label for b in DEFAULT_GAP_BINS]
    assert labels == ["[0%,20%)", "[20%,40%)", "[40%,60%)", "[60%,80%)", "[80%,100%)", ">=100%"]
    assert assign_gap_bin(0.1).label == "[0%,20%)"
    assert assign_gap_bin(0.2).label == "[20%,40%)"
    assert assign_gap_bin(1.0).label == ">=100%"
    assert assign_gap_bin(math.inf).label == ">=100%"
    with pytest.raises(ValueError):
        make_gap_bins((0.5, 0.2))


@given(st.floats(0, 1e6, allow_nan=False))
def test_every_gap_has_exactly_one_bin(g):
    assert sum(b.contains(g) for b in DEFAULT_GAP_BINS) == 1


def test_load_pageviews(tmp_path):
    p = tmp_path / "v.tsv"
    p.write_text("# header\nQ1\t10\n\nQ2\t3\nQ1\t5\n")
    table = load_pageviews(p)
    assert dict(table) == {"Q1": 15, "Q2": 3}
    assert table.views("Q404") == 0


@pytest.mark.parametrize("body", ["Q1\t-3\n", "Q1\tx\n", "Q1\n", "Q1\t1\t2\n"])
def test_load_pageviews_errors(tmp_path, body):
    p = tmp_path / "v.tsv"
    p.write_text("Q0\t1\n" + body)
    with pytest.raises(ParseError, match="line 2"):
        load_pageviews(p)


def test_table_rejects_negative():
    with pytest.raises(ValueError):
        PopularityTable({"Q1": -1})
