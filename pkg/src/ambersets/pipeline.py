"""End-to-end stages over files: build, generate, retrieve, evaluate, report.

Output layout under ``outdir``::

    <collection>/sets.jsonl
    <collection>/queries/{fc,sf,qa}.jsonl
    <collection>/runs/<run_id>.jsonl
    <collection>/metrics/<run_id>.json
    <collection>/report/<run_id>.{txt,csv,jsonl} and <run_id>.gap.csv
    <collection>/counters.json
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._jsonl import iter_records, write_records
from .corpus import PREFIX_TOKENS, DocumentIndex, iter_documents
from .errors import ConfigError
from .kg import build_alias_index, iter_entities, load_entities
from .metrics import MetricsReport, aggregate_report
from .popularity import load_pageviews
from .queries import TASKS, GlobalValueStats, TaskQuery, generate_queries, load_template_bank
from .report import emit_report, render_gap_csv
from .retrieval import RetrieverRun, build_index, load_external_run, run_queries, write_run
from .sets import AmberSet, build_sets, collection_statistics, group_candidates, load_collection_specs

logger = logging.getLogger(__name__)

OUTDIR_ENV = "AMBER_OUTDIR"
REPORT_EXT = {"table": "txt", "csv": "csv", "json-lines": "jsonl"}


@dataclass
class PipelineConfig:
    kg: Path
    corpus: Path
    pageviews: Path
    outdir: Path
    templates: Path | None = None
    collections_file: Path | None = None
    collections: tuple[str, ...] = ("human", "nonhuman")
    k: int = 20
    strict: bool = False
    prefix_tokens: int = PREFIX_TOKENS
    runs: tuple[Path, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        for name in ("kg", "corpus", "pageviews", "templates", "collections_file"):
            p = getattr(self, name)
            if p is not None and not p.exists():
                raise ConfigError(f"missing {name} path: {p}")
        for p in self.runs:
            if not p.exists():
                raise ConfigError(f"missing run path: {p}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.prefix_tokens < 1:
            raise ConfigError("prefix_tokens must be >= 1")

    def collection_dir(self, name: str) -> Path:
        return self.outdir / name


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a TOML pipeline config. Relative paths resolve against the config's directory.

    ``$AMBER_OUTDIR`` overrides ``paths.outdir``.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError:
        raise ConfigError(f"missing config path: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    paths = raw.get("paths", {})
    opts = raw.get("pipeline", {})

    def resolve(key, required=True):
        value = paths.get(key)
        if not value:
            if required:
                raise ConfigError(f"{path}: missing field paths.{key}")
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    outdir = os.environ.get(OUTDIR_ENV)
    cfg = PipelineConfig(
        kg=resolve("kg"),
        corpus=resolve("corpus"),
        pageviews=resolve("pageviews"),
        outdir=Path(outdir) if outdir else resolve("outdir"),
        templates=resolve("templates", required=False),
        collections_file=resolve("collections", required=False),
        collections=tuple(opts.get("collections", ("human", "nonhuman"))),
        k=int(opts.get("k", 20)),
        strict=bool(opts.get("strict", False)),
        prefix_tokens=int(opts.get("prefix_tokens", PREFIX_TOKENS)),
        runs=tuple(base / r if not Path(r).is_absolute() else Path(r) for r in opts.get("runs", ())),
    )
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _specs(cfg: PipelineConfig):
    specs = load_collection_specs(cfg.collections_file)
    unknown = [c for c in cfg.collections if c not in specs]
    if unknown:
        raise ConfigError(f"unknown collection(s): {', '.join(unknown)}")
    return {c: specs[c] for c in cfg.collections}


def _update_counters(cfg: PipelineConfig, collection: str, section: str, payload: dict) -> None:
    path = cfg.collection_dir(collection) / "counters.json"
    data = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
    data[section] = payload
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info("%s %s counters: %s", collection, section, json.dumps(payload, sort_keys=True))


def read_sets(path: Path) -> list[AmberSet]:
    return [AmberSet.from_dict(obj) for _, obj in iter_records(path)]


def read_queries(qdir: Path) -> dict[str, list[TaskQuery]]:
    out = {}
    for task in TASKS:
        p = qdir / f"{task.lower()}.jsonl"
        if p.exists():
            out[task] = [TaskQuery.from_dict(obj) for _, obj in iter_records(p)]
    return out


def build(cfg: PipelineConfig) -> dict[str, list[AmberSet]]:
    """Mine AmbER sets for each configured collection.

    Two passes over the KG: the first indexes aliases of entities with an
    allowed type, the second loads full records for candidate members only.
    """
    specs = _specs(cfg)
    allowed = frozenset().union(*(s.allowed_types for s in specs.values()))
    types = {}
    scanned = 0

    def typed():
        nonlocal scanned
        for ent in iter_entities(cfg.kg):
            scanned += 1
            if ent.type_tags & allowed:
                types[ent.qid] = ent.type_tags
                yield ent

    index = build_alias_index(typed())
    candidates = set()
    for spec in specs.values():
        for _, qids in group_candidates(index, spec, types):
            candidates |= qids
    entities = load_entities(cfg.kg, candidates)
    views = load_pageviews(cfg.pageviews)
    docs = DocumentIndex.from_path(cfg.corpus, candidates)

    out = {}
    for name, spec in specs.items():
        sets, counts = build_sets(index, spec, entities, views, docs, cfg.prefix_tokens)
        write_records(cfg.collection_dir(name) / "sets.jsonl", (s.to_dict() for s in sets))
        payload = {"entities_scanned": scanned, "entities_typed": len(types), **counts.to_dict()}
        _update_counters(cfg, name, "build", payload)
        _update_counters(cfg, name, "statistics", collection_statistics(sets))
        out[name] = sets
    return out


def generate(cfg: PipelineConfig) -> dict[str, dict[str, list[TaskQuery]]]:
    specs = _specs(cfg)
    bank = load_template_bank(cfg.templates)
    pids = frozenset().union(*(s.all_pids for s in specs.values()))
    missing = bank.missing(pids)
    if missing:
        raise ConfigError(f"template bank lacks QA/FC templates for: {', '.join(missing)}")
    stats = GlobalValueStats.from_entities(iter_entities(cfg.kg), pids)
    out = {}
    for name in specs:
        sets = read_sets(cfg.collection_dir(name) / "sets.jsonl")
        queries, gen = generate_queries(sets, bank, stats)
        qdir = cfg.collection_dir(name) / "queries"
        for task, qs in queries.items():
            write_records(qdir / f"{task.lower()}.jsonl", (q.to_dict() for q in qs))
        _update_counters(cfg, name, "generate", gen.to_dict())
        out[name] = queries
    return out


def retrieve(cfg: PipelineConfig, run_id: str = "tfidf") -> None:
    """Rank the whole corpus with the built-in tf-idf retriever for every query."""
    specs = _specs(cfg)
    index = build_index(iter_documents(cfg.corpus))
    logger.info("tf-idf index: %d documents, %d terms", index.n_docs, len(index.vocab))
    for name in specs:
        queries = read_queries(cfg.collection_dir(name) / "queries")
        allq = [q for task in TASKS for q in queries.get(task, ())]
        run = run_queries(index, allq, cfg.k, run_id)
        write_run(cfg.collection_dir(name) / "runs" / f"{run_id}.jsonl", run)


def evaluate(cfg: PipelineConfig, run_paths: Sequence[Path] = ()) -> dict[str, list[MetricsReport]]:
    """Score every run under each collection's ``runs/`` directory.

    External runs (``run_paths`` or ``pipeline.runs``) are first validated
    against the union of known query ids, then split by collection and
    written into ``runs/`` under their file stem.
    """
    specs = _specs(cfg)
    views = load_pageviews(cfg.pageviews)
    per_coll = {}
    for name in specs:
        cdir = cfg.collection_dir(name)
        per_coll[name] = (read_sets(cdir / "sets.jsonl"), read_queries(cdir / "queries"))

    external = list(run_paths) or list(cfg.runs)
    if external:
        known = {q.query_id for _, qs in per_coll.values() for t in qs.values() for q in t}
        runs = [load_external_run(p, known) for p in external]
        for name, (_, queries) in per_coll.items():
            own = {q.query_id for t in queries.values() for q in t}
            for run in runs:
                subset = {q: r for q, r in run.rankings.items() if q in own}
                if subset:
                    write_run(cfg.collection_dir(name) / "runs" / f"{run.run_id}.jsonl",
                              RetrieverRun(run.run_id, subset))

    out = {}
    for name, (sets, queries) in per_coll.items():
        cdir = cfg.collection_dir(name)
        own = {q.query_id for t in queries.values() for q in t}
        reports = []
        for path in sorted((cdir / "runs").glob("*.jsonl")):
            run = load_external_run(path, own)
            rep = aggregate_report(run, sets, queries, views, ks=(1, cfg.k), strict=cfg.strict, collection=name)
            mpath = cdir / "metrics" / f"{run.run_id}.json"
            mpath.parent.mkdir(parents=True, exist_ok=True)
            mpath.write_text(rep.to_json() + "\n", encoding="utf-8")
            reports.append(rep)
        out[name] = reports
    return out


def report(cfg: PipelineConfig, fmt: str = "table") -> str:
    """Render every metrics file; returns the concatenated text."""
    if fmt not in REPORT_EXT:
        raise ConfigError(f"unknown report format {fmt!r}")
    chunks = []
    for name in _specs(cfg):
        cdir = cfg.collection_dir(name)
        for mpath in sorted((cdir / "metrics").glob("*.json")):
            rep = MetricsReport.from_json(mpath.read_text(encoding="utf-8"))
            text = emit_report(rep, fmt)
            rdir = cdir / "report"
            rdir.mkdir(parents=True, exist_ok=True)
            (rdir / f"{rep.run_id}.{REPORT_EXT[fmt]}").write_text(text, encoding="utf-8")
            (rdir / f"{rep.run_id}.gap.csv").write_text(render_gap_csv(rep), encoding="utf-8")
            chunks.append(f"# {name} / {rep.run_id}\n{text}")
    return "\n".join(chunks)


def run_all(cfg: PipelineConfig, fmt: str = "table") -> str:
    build(cfg)
    generate(cfg)
    retrieve(cfg)
    evaluate(cfg)
    return report(cfg, fmt)
