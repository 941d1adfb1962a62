"""Run the whole pipeline through the CLI, then score a hand-made external run next to tf-idf.

    python demos/03_evaluate_external_run.py [outdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from ambersets.cli import run_command

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "abe"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="amber_"))
cfg = str(FIXTURE / "abe.toml")

assert run_command(["-q", "all", "--config", cfg, "--outdir", str(out)]) == 0

# A "popularity" retriever: always returns the head entity's page first, then the tails.
# It looks fine on head queries and is confused on every tail query.
runs = out / "popular.jsonl"
with open(runs, "w", encoding="utf-8") as fh:
    for coll in ("human", "nonhuman"):
        sets = {s["set_id"]: s for s in map(json.loads, (out / coll / "sets.jsonl").read_text().splitlines())}
        for task in ("fc", "sf", "qa"):
            for line in (out / coll / "queries" / f"{task}.jsonl").read_text().splitlines():
                q = json.loads(line)
                s = sets[q["set_id"]]
                ranked = [d for qid in [s["head_qid"], *s["tail_qids"]] for d in s["entity_docs"][qid]]
                fh.write(json.dumps({"query_id": q["query_id"], "ranked_doc_ids": ranked}) + "\n")

assert run_command(["-q", "evaluate", "--config", cfg, "--outdir", str(out), "--run", str(runs)]) == 0
assert run_command(["-q", "report", "--config", cfg, "--outdir", str(out)]) == 0
print(f"\nartifacts in {out}")
