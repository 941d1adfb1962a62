"""Turn the fixture's sets into QA / SF / FC queries, then rank the corpus with tf-idf.

    python demos/02_queries_and_tfidf.py
"""

from pathlib import Path

import numpy as np

from ambersets.corpus import DocumentIndex, iter_documents
from ambersets.kg import build_alias_index, iter_entities, load_entities
from ambersets.metrics import accuracy_at_k, entity_confusion
from ambersets.popularity import load_pageviews
from ambersets.queries import GlobalValueStats, generate_queries, load_template_bank
from ambersets.retrieval import build_index, retrieve, run_queries
from ambersets.sets import build_sets, load_collection_specs

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "abe"

entities = load_entities(FIXTURE / "kg.jsonl")
spec = load_collection_specs()["human"]
sets, _ = build_sets(build_alias_index(entities.values()), spec, entities,
                     load_pageviews(FIXTURE / "pageviews.tsv"), DocumentIndex.from_path(FIXTURE / "corpus.jsonl"))

bank = load_template_bank()
stats = GlobalValueStats.from_entities(iter_entities(FIXTURE / "kg.jsonl"), spec.all_pids)
queries, report = generate_queries(sets, bank, stats)
print(report.to_dict())
for task in ("QA", "SF", "FC"):
    for q in queries[task][:3]:
        print(f"{task}  {q.input_text!r:60} -> {q.answer}")

index = build_index(iter_documents(FIXTURE / "corpus.jsonl"))
print(f"\nindex: {index.n_docs} docs x {len(index.vocab)} terms, nnz={index.matrix.nnz}")
print("idf range:", np.round([index.idf.min(), index.idf.max()], 3))

q = next(q for q in queries["QA"] if q.qid == "Q90000001")
print(f"\n{q.input_text}  gold={sorted(q.gold_doc_ids)}")
for rank, (doc_id, score) in enumerate(retrieve(index, q.input_text, k=5), 1):
    print(f"  {rank}. {doc_id:<40} {score:.4f}")

by_id = {s.set_id: s for s in sets}
for task, qs in queries.items():
    run = run_queries(index, qs, k=20)
    acc1 = accuracy_at_k(run, qs, 1)
    conf = entity_confusion(run, qs, by_id)
    print(f"{task}: acc@1 head={acc1['Head'].value:.2f} tail={acc1['Tail'].value:.2f}  "
          f"confusion={conf['All'].value:.2f}")
