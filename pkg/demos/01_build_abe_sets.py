"""Mine AmbER sets from the bundled Abe Lincoln fixture and look at what survived.

    python demos/01_build_abe_sets.py
"""

from pathlib import Path

from ambersets.corpus import DocumentIndex
from ambersets.kg import build_alias_index, load_entities
from ambersets.popularity import load_pageviews
from ambersets.sets import build_sets, collection_statistics, load_collection_specs

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "abe"

entities = load_entities(FIXTURE / "kg.jsonl")
views = load_pageviews(FIXTURE / "pageviews.tsv")
docs = DocumentIndex.from_path(FIXTURE / "corpus.jsonl")
index = build_alias_index(entities.values())
print(f"{len(entities)} entities, {len(index)} aliases, {sum(1 for _ in index.polysemous())} shared")

# Every shared alias is a candidate; the filters decide which ones become sets.
for name, spec in load_collection_specs().items():
    sets, counts = build_sets(index, spec, entities, views, docs)
    print(f"\n== {name}: {counts.groups_after_type_filter} candidate groups -> {len(sets)} sets")
    for s in sets:
        print(f"{s.name!r}  head={s.head_qid} ({views.views(s.head_qid)} views)")
        for q in s.qids:
            facts = ", ".join(f"{t.pid}={t.value_text}" for t in s.members[q]) or "(distractor)"
            print(f"    {q:<10} {facts}")
    print(collection_statistics(sets))

# "John Smith" (105 vs 100 views) fails the 10% gap; "Jane Doe" (110 vs 100) sits on the boundary and stays.
