"""Acceptance criteria, one test per criterion.

The terminal summary (see conftest.py) prints one PASS/FAIL line per criterion.
"""

import json
import logging
import os
import random
import shutil
import time
from fractions import Fraction
from pathlib import Path

import pytest

from ambersets import pipeline
from ambersets.cli import run_command
from ambersets.corpus import DocumentRecord
from ambersets.kg import FactTuple, build_alias_index
from ambersets.popularity import meets_gap
from ambersets.queries import GlobalValueStats, TemplateBank, generate_queries, instantiate_fc_pair
from ambersets.retrieval import build_index, retrieve
from ambersets.sets import AmberSet, build_sets, filter_popularity_gap, make_group, validate_set

import metrics_oracle as oracle
import synth
from metric_fixtures import figure_case, random_case
from test_metrics import check_against_oracle
from test_retrieval import FROZEN, FROZEN_RANKING
from tfidf_oracle import TOY_CORPUS

ABE = Path(__file__).parent / "fixtures" / "abe"


def copy_fixture(dst: Path) -> Path:
    for name in ("kg.jsonl", "corpus.jsonl", "pageviews.tsv", "abe.toml"):
        shutil.copy(ABE / name, dst / name)
    return dst / "abe.toml"


def read_sets(path):
    return {s.name: s for s in pipeline.read_sets(path)}


def test_criterion_1_fixture_sets(tmp_path, monkeypatch):
    monkeypatch.delenv("AMBER_OUTDIR", raising=False)
    t0 = time.perf_counter()
    cfg = pipeline.load_config(copy_fixture(tmp_path))
    pipeline.run_all(cfg)
    elapsed = time.perf_counter() - t0

    human = read_sets(cfg.outdir / "human" / "sets.jsonl")
    non = read_sets(cfg.outdir / "nonhuman" / "sets.jsonl")
    expected_heads = {
        "Abe Lincoln": ("Q91", ("Q90000001",)),
        "Napoleon": ("Q517", ("Q3335909", "Q90000002")),
        "Yoko Ono": ("Q117012", ("Q16264827",)),
    }
    for name, (head, tails) in expected_heads.items():
        assert (human[name].head_qid, human[name].tail_qids) == (head, tails)
    assert (non["Apple"].head_qid, set(non["Apple"].tail_qids)) == ("Q312", {"Q532100", "Q7714007"})
    assert non["Her"].head_qid == "Q788822"
    assert "Q89" not in non["Apple"].qids
    assert "John Smith" not in human

    gold = {}
    for s in list(human.values()) + list(non.values()):
        gold.update(s.gold_docs)
    table = {
        ("Q517", "P607"): {"Napoleon"},
        ("Q3335909", "P641"): {"Napolioni_Nalaga"},
        ("Q3335909", "P54"): {"Napolioni_Nalaga"},
        ("Q117012", "P135"): {"Yoko_Ono"},
        ("Q16264827", "P641"): {"Yoko_Ono_(judoka)"},
        ("Q312", "P452"): {"Apple_Inc."},
        ("Q532100", "P264"): {"Apple_(band)"},
        ("Q7714007", "P161"): {"The_Apple_(1980_film)"},
        ("Q788822", "P161"): {"Her_(film)"},
        ("Q788822", "P58"): {"Her_(film)"},
        ("Q28441308", "P175"): {"Her_(song)"},
        ("Q91", "P607"): {"Abraham_Lincoln"},
        ("Q90000001", "P1303"): {"Abe_Lincoln_(musician)"},
    }
    for key, docs in table.items():
        assert gold[key] == docs, key
    # shared P241 and the late kazoo mention are gone
    assert ("Q91", "P241") not in gold and ("Q117012", "P1303") not in gold

    for coll in ("human", "nonhuman"):
        counters = json.loads((cfg.outdir / coll / "counters.json").read_text())
        gen = counters["generate"]
        T = gen["tuples"]
        assert T == counters["build"]["tuples_final"] > 0
        assert gen["queries"] == {"FC": 2 * T, "SF": T, "QA": T}
        assert gen["count_invariant"] == "holds"
    assert elapsed < 5.0, elapsed


def test_criterion_2_filter_properties():
    t0 = time.perf_counter()
    entities, views, docs, kinds = synth.make_world(20240601, 200)
    sets, counts = build_sets(build_alias_index(entities.values()), synth.SPEC, entities, views, docs)
    by_name = {s.name: s for s in sets}
    assert len(sets) >= 10  # non-vacuous

    for s in sets:
        assert validate_set(s, synth.SPEC) == [], s.name
        pids = [t.pid for q in s.qids for t in s.members[q]]
        assert len(pids) == len(set(pids))
        assert all(s.gold_docs[(t.subject_qid, t.pid)] for q in s.qids for t in s.members[q])
        assert s.members[s.head_qid] and any(s.members[t] for t in s.tail_qids)
        assert meets_gap(views[s.head_qid], views[s.tail_qids[0]], Fraction(1, 10))
        for doc_ids in s.gold_docs.values():
            assert doc_ids

    below = boundary = 0
    for alias, kind in kinds.items():
        typed = [q for q, e in entities.items()
                 if e.canonical_name == alias and e.type_tags & synth.SPEC.allowed_types]
        if len(typed) < 2:
            continue
        ranked = sorted(typed, key=lambda q: (-views[q], q))
        p_h, p_t = views[ranked[0]], views[ranked[1]]
        passes = filter_popularity_gap(make_group(alias, typed, synth.SPEC, entities, views)) is not None
        if (p_t and Fraction(p_h - p_t, p_t) < Fraction(1, 10)) or p_h == p_t == 0:
            below += 1
            assert not passes and alias not in by_name
        if kind == "boundary":
            assert Fraction(p_h - p_t, p_t) == Fraction(1, 10)
            boundary += 1
            assert passes
    assert below > 20 and boundary > 20
    assert time.perf_counter() - t0 < 30.0


def test_criterion_3_metric_oracle():
    rng = random.Random(3)
    for _ in range(100):
        sets, queries, views, run = random_case(rng, max_queries=10)
        assert len(queries) <= 10
        check_against_oracle(sets, queries, views, run)

    sets, qs, views, run = figure_case()
    q2 = qs[1]
    ranking = list(run.rankings[q2.query_id])
    assert ranking.index("Abe_Lincoln_(musician)") + 1 == 6
    assert not oracle.hit(ranking, q2.gold_doc_ids, 1)
    assert oracle.hit(ranking, q2.gold_doc_ids, 20)
    assert oracle.confused(ranking, q2, sets[0])
    check_against_oracle(sets, qs, views, run)


def test_criterion_4_tfidf_oracle():
    idx = build_index(DocumentRecord(d, d, t) for d, t in TOY_CORPUS.items())
    for query, frozen in FROZEN.items():
        full = retrieve(idx, query, k=5)
        assert [d for d, _ in full] == FROZEN_RANKING[query]
        for d, score in full:
            assert abs(score - frozen[d]) <= 1e-9
        for k in range(1, 6):
            assert retrieve(idx, query, k=k) == full[:k]


def test_criterion_5_false_claim(caplog):
    t = FactTuple("Q90000001", "P1303", "instrument", "trombone")
    s = AmberSet("abe", "Abe Lincoln", "human", "Q91", ("Q90000001",),
                 {"Q91": (), "Q90000001": (t,)}, {("Q90000001", "P1303"): frozenset({"Abe_Lincoln_(musician)"})},
                 {}, {})
    bank = TemplateBank.from_dict({"P1303": {"qa": ["What does $name play?"], "fc": ["$name plays the $object."]}})
    stats = GlobalValueStats({"P1303": {"piano": 5000, "guitar": 3000, "trombone": 12}})
    sup, ref = instantiate_fc_pair(t, s, bank, stats)
    assert sup.input_text == "Abe Lincoln plays the trombone." and sup.answer == "SUPPORTS"
    assert ref.input_text == "Abe Lincoln plays the piano." and ref.answer == "REFUTES"

    only = GlobalValueStats({"P1303": {"trombone": 7}})
    with caplog.at_level(logging.WARNING):
        queries, report = generate_queries([s], bank, only)
    assert queries["FC"] == [] and len(queries["QA"]) == len(queries["SF"]) == 1
    assert report.skipped_fc == [("abe", "Q90000001", "P1303")]
    assert not report.fc_invariant_holds
    assert report.to_dict()["count_invariant"] == "relaxed"
    assert any(r.levelno == logging.WARNING and "P1303" in r.getMessage() for r in caplog.records)


def test_criterion_6_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("AMBER_OUTDIR", raising=False)
    outputs = []
    for name in ("one", "two"):
        d = tmp_path / name
        d.mkdir()
        cfg = copy_fixture(d)
        assert run_command(["-q", "all", "--config", str(cfg)]) == 0
        root = d / "out"
        outputs.append({str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()})
    assert outputs[0].keys() == outputs[1].keys() and len(outputs[0]) > 10
    for key in outputs[0]:
        assert outputs[0][key] == outputs[1][key], key


FULLSCALE = os.environ.get("AMBER_FULLSCALE_CONFIG")
TABLE3_QUERIES = {"human": 23768, "nonhuman": 55216}


@pytest.mark.skipif(not FULLSCALE, reason="optional: set AMBER_FULLSCALE_CONFIG to a config over full dumps")
def test_criterion_7_fullscale_counters():
    cfg = pipeline.load_config(FULLSCALE)
    pipeline.build(cfg)
    pipeline.generate(cfg)
    for coll, target in TABLE3_QUERIES.items():
        counters = json.loads((cfg.outdir / coll / "counters.json").read_text())
        total = counters["generate"]["total_queries"]
        assert abs(total - target) <= 0.25 * target, (coll, total, target)
