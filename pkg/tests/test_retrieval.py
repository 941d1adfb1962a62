import json

import pytest
from hypothesis import given, settings, strategies as st

from ambersets.corpus import DocumentRecord
from ambersets.errors import ParseError, RunValidationError
from ambersets.retrieval import (
    build_index,
    load_external_run,
    retrieve,
    run_from_rankings,
    tokenize,
    validate_run,
    write_run,
)

from tfidf_oracle import TOY_CORPUS, oracle_ranking, oracle_scores

# Frozen from tfidf_oracle before the sparse index existed.
FROZEN = {
    "Abe Lincoln trombone": {
        "d1": 0.26336768465739724, "d2": 0.462045997164952, "d3": 0.1028470998094927,
        "d4": 0.1638128262881258, "d5": 0.0,
    },
    "Which city is Lincoln in?": {
        "d1": 0.08351343309807918, "d2": 0.184057146208931, "d3": 0.5163623555594885,
        "d4": 0.0877372970738133, "d5": 0.0,
    },
    "rugby Fiji": {"d1": 0.0, "d2": 0.0, "d3": 0.0, "d4": 0.0, "d5": 0.49036696646382716},
    "zzz qqq": {"d1": 0.0, "d2": 0.0, "d3": 0.0, "d4": 0.0, "d5": 0.0},
}
FROZEN_RANKING = {
    "Abe Lincoln trombone": ["d2", "d1", "d4", "d3", "d5"],
    "Which city is Lincoln in?": ["d3", "d2", "d4", "d1", "d5"],
    "rugby Fiji": ["d5", "d1", "d2", "d3", "d4"],
    "zzz qqq": ["d1", "d2", "d3", "d4", "d5"],
}


def toy_index(corpus=TOY_CORPUS):
    return build_index(DocumentRecord(d, d, text) for d, text in corpus.items())


def test_tokenize():
    assert tokenize("Abe Lincoln's trombone_solo, 1832!") == ["abe", "lincoln", "s", "trombone", "solo", "1832"]


@pytest.mark.parametrize("query", sorted(FROZEN))
def test_oracle_still_matches_frozen(query):
    got = oracle_scores(TOY_CORPUS, query)
    for d, v in FROZEN[query].items():
        assert got[d] == pytest.approx(v, abs=1e-12)


@pytest.mark.parametrize("query", sorted(FROZEN))
def test_scores_match_frozen(query):
    idx = toy_index()
    ranked = retrieve(idx, query, k=5)
    assert [d for d, _ in ranked] == FROZEN_RANKING[query]
    for d, score in ranked:
        assert abs(score - FROZEN[query][d]) <= 1e-9


@pytest.mark.parametrize("query", sorted(FROZEN))
def test_prefix_property(query):
    idx = toy_index()
    full = [d for d, _ in retrieve(idx, query, k=5)]
    for k in range(1, 6):
        assert [d for d, _ in retrieve(idx, query, k=k)] == full[:k]


def test_k_beyond_corpus_and_bad_k():
    idx = toy_index()
    assert len(retrieve(idx, "trombone", k=50)) == 5
    with pytest.raises(ValueError):
        retrieve(idx, "trombone", k=0)
    with pytest.raises(ValueError):
        build_index([])


def test_ties_break_by_doc_id():
    idx = build_index([DocumentRecord(d, d, "same text") for d in ("b", "c", "a")])
    assert [d for d, _ in retrieve(idx, "text", 3)] == ["a", "b", "c"]


corpora = st.dictionaries(
    st.text("abcdef", min_size=1, max_size=3),
    st.lists(st.sampled_from(["abe", "lincoln", "trombone", "war", "rugby", "fiji", "the"]), min_size=1, max_size=12)
    .map(" ".join),
    min_size=1, max_size=8,
)


@settings(max_examples=60, deadline=None)
@given(corpora, st.sampled_from(["abe lincoln", "trombone war", "the the fiji", "nothing"]), st.randoms())
def test_random_corpora_match_oracle(corpus, query, rnd):
    items = list(corpus.items())
    rnd.shuffle(items)
    idx = build_index(DocumentRecord(d, d, t) for d, t in items)
    expect = oracle_scores(corpus, query)
    ranked = retrieve(idx, query, k=len(corpus))
    for d, s in ranked:
        assert abs(s - expect[d]) <= 1e-9
    # ordering agrees with the oracle up to floating-point near-ties
    got = [d for d, _ in ranked]
    want = oracle_ranking(corpus, query)
    for a, b in zip(got, want):
        assert a == b or abs(expect[a] - expect[b]) <= 1e-9


def test_run_roundtrip(tmp_path):
    run = run_from_rankings({"q2": ["d1"], "q1": ["d2", "d1"]}, "mine")
    p = tmp_path / "mine.jsonl"
    write_run(p, run)
    lines = p.read_text().splitlines()
    assert json.loads(lines[0])["query_id"] == "q1"
    back = load_external_run(p, {"q1", "q2"})
    assert back == run


def test_external_run_errors(tmp_path):
    p = tmp_path / "ext.jsonl"
    p.write_text(
        json.dumps({"query_id": "bogus", "ranked_doc_ids": ["d1"]}) + "\n"
        + json.dumps({"query_id": "q1", "ranked_doc_ids": ["d1", "d1"]}) + "\n"
    )
    with pytest.raises(RunValidationError) as exc:
        load_external_run(p, {"q1"})
    assert "bogus" in str(exc.value) and "q1" in str(exc.value)
    with pytest.raises(RunValidationError):
        validate_run(run_from_rankings({"bogus": ["d"]}), {"q1"})
    p.write_text(json.dumps({"query_id": "q1", "ranked_doc_ids": "d1"}) + "\n")
    with pytest.raises(ParseError, match="line 1"):
        load_external_run(p)
