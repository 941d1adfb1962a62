"""Retrieval metrics over AmbER sets: accuracy@k, all-correct, entity confusion, gap bins.

Every metric is a ratio of integer counts; :class:`Ratio` keeps the counts so
reports can be re-aggregated exactly.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import RunValidationError
from .popularity import DEFAULT_GAP_BINS, GapBin, assign_gap_bin, popularity_gap
from .queries import TASKS, TaskQuery
from .retrieval import RetrieverRun
from .sets import AmberSet

logger = logging.getLogger(__name__)

SPLITS = ("All", "Head", "Tail")


@dataclass(frozen=True)
class Ratio:
    num: int
    den: int

    @property
    def value(self) -> float:
        return self.num / self.den if self.den else 0.0

    def __add__(self, other: Ratio) -> Ratio:
        return Ratio(self.num + other.num, self.den + other.den)

    def to_list(self) -> list[int]:
        return [self.num, self.den]


def _split_of(q: TaskQuery) -> str:
    return "Head" if q.is_head else "Tail"


def _rankings(run: RetrieverRun, queries: Sequence[TaskQuery], strict: bool) -> dict[str, tuple[str, ...]]:
    missing = [q.query_id for q in queries if q.query_id not in run.rankings]
    if missing:
        if strict:
            raise RunValidationError(f"run {run.run_id} has no ranking for {len(missing)} queries, e.g. {missing[0]}")
        logger.warning("run %s: %d queries without a ranking, scored as misses", run.run_id, len(missing))
    return {q.query_id: run.rankings.get(q.query_id, ()) for q in queries}


def is_hit(ranking: Sequence[str], gold: Iterable[str], k: int) -> bool:
    gold = set(gold)
    return any(d in gold for d in ranking[:k])


def accuracy_at_k(run: RetrieverRun, queries: Sequence[TaskQuery], k: int = 1, strict: bool = False) -> dict[str, Ratio]:
    """Fraction of queries with a gold document in the top ``k``, per split."""
    rankings = _rankings(run, queries, strict)
    hits = {"Head": 0, "Tail": 0}
    totals = {"Head": 0, "Tail": 0}
    for q in queries:
        s = _split_of(q)
        totals[s] += 1
        hits[s] += is_hit(rankings[q.query_id], q.gold_doc_ids, k)
    out = {s: Ratio(hits[s], totals[s]) for s in ("Head", "Tail")}
    out["All"] = out["Head"] + out["Tail"]
    return {s: out[s] for s in SPLITS}


def all_correct(
    run: RetrieverRun,
    sets: Iterable[AmberSet],
    queries: Sequence[TaskQuery],
    k: int = 1,
    strict: bool = False,
) -> Ratio:
    """Sets whose every query (in ``queries``) is a hit@k, over sets that have queries."""
    rankings = _rankings(run, queries, strict)
    by_set: dict[str, list[TaskQuery]] = defaultdict(list)
    for q in queries:
        by_set[q.set_id].append(q)
    correct = total = 0
    for s in sets:
        qs = by_set.get(s.set_id)
        if not qs:
            continue
        total += 1
        correct += all(is_hit(rankings[q.query_id], q.gold_doc_ids, k) for q in qs)
    if total == 0:
        logger.warning("all-correct over zero sets; reporting 0.0")
    return Ratio(correct, total)


def best_rank(ranking: Sequence[str], docs: Iterable[str]) -> float:
    """1-based rank of the first of ``docs`` in ``ranking``; ``inf`` if absent."""
    docs = set(docs)
    for i, d in enumerate(ranking, 1):
        if d in docs:
            return i
    return math.inf


def distractor_docs(q: TaskQuery, s: AmberSet) -> set[str]:
    own = set(s.entity_docs.get(q.qid, ())) | set(q.gold_doc_ids)
    out: set[str] = set()
    for other in s.qids:
        if other != q.qid:
            out |= set(s.entity_docs.get(other, ()))
    return out - own


def is_confused(ranking: Sequence[str], q: TaskQuery, s: AmberSet) -> bool:
    """Another same-name entity's document outranks every gold document."""
    return best_rank(ranking, distractor_docs(q, s)) < best_rank(ranking, q.gold_doc_ids)


def entity_confusion(
    run: RetrieverRun,
    queries: Sequence[TaskQuery],
    sets: Mapping[str, AmberSet],
    strict: bool = False,
) -> dict[str, Ratio]:
    rankings = _rankings(run, queries, strict)
    confused = {"Head": 0, "Tail": 0}
    totals = {"Head": 0, "Tail": 0}
    for q in queries:
        s = _split_of(q)
        totals[s] += 1
        confused[s] += is_confused(rankings[q.query_id], q, sets[q.set_id])
    out = {s: Ratio(confused[s], totals[s]) for s in ("Head", "Tail")}
    out["All"] = out["Head"] + out["Tail"]
    return {s: out[s] for s in SPLITS}


@dataclass(frozen=True)
class GapRow:
    bin: GapBin
    pairs: int
    head: Ratio
    tail: Ratio

    @property
    def difference(self) -> float | None:
        """Head minus tail accuracy; ``None`` for an empty bin."""
        if not self.head.den or not self.tail.den:
            return None
        return self.head.value - self.tail.value

    def to_dict(self) -> dict:
        return {
            "label": self.bin.label,
            "lower": self.bin.lower,
            "upper": None if math.isinf(self.bin.upper) else self.bin.upper,
            "pairs": self.pairs,
            "head": self.head.to_list(),
            "tail": self.tail.to_list(),
            "difference": self.difference,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> GapRow:
        upper = math.inf if d["upper"] is None else d["upper"]
        return cls(GapBin(d["lower"], upper, d["label"]), d["pairs"], Ratio(*d["head"]), Ratio(*d["tail"]))


def popularity_gap_report(
    run: RetrieverRun,
    sets: Iterable[AmberSet],
    queries: Sequence[TaskQuery],
    views: Mapping[str, int],
    bins: Sequence[GapBin] = DEFAULT_GAP_BINS,
    k: int = 1,
    strict: bool = False,
) -> list[GapRow]:
    """Bin (head, tail) pairs by popularity gap and compare their accuracy@k.

    Each pair contributes the head's queries and that tail's queries to the
    pair's bin, so a head with several tails is counted once per pair.
    """
    rankings = _rankings(run, queries, strict)
    by_entity: dict[tuple[str, str], list[TaskQuery]] = defaultdict(list)
    for q in queries:
        by_entity[(q.set_id, q.qid)].append(q)

    def hits(qs):
        return Ratio(sum(is_hit(rankings[q.query_id], q.gold_doc_ids, k) for q in qs), len(qs))

    acc = {b.label: [0, Ratio(0, 0), Ratio(0, 0)] for b in bins}
    for s in sets:
        head_qs = by_entity.get((s.set_id, s.head_qid))
        if not head_qs:
            continue
        p_h = views.get(s.head_qid, 0)
        for t in s.tail_qids:
            tail_qs = by_entity.get((s.set_id, t))
            if not tail_qs:
                continue
            b = assign_gap_bin(popularity_gap(p_h, views.get(t, 0)), bins)
            row = acc[b.label]
            row[0] += 1
            row[1] = row[1] + hits(head_qs)
            row[2] = row[2] + hits(tail_qs)
    return [GapRow(b, *acc[b.label]) for b in bins]


@dataclass
class TaskMetrics:
    accuracy: dict[int, dict[str, Ratio]] = field(default_factory=dict)
    forall: dict[int, Ratio] = field(default_factory=dict)
    confusion: dict[str, Ratio] = field(default_factory=dict)
    gap_bins: list[GapRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": {str(k): {s: r.to_list() for s, r in v.items()} for k, v in sorted(self.accuracy.items())},
            "forall": {str(k): r.to_list() for k, r in sorted(self.forall.items())},
            "confusion": {s: r.to_list() for s, r in self.confusion.items()},
            "gap_bins": [row.to_dict() for row in self.gap_bins],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> TaskMetrics:
        return cls(
            accuracy={int(k): {s: Ratio(*r) for s, r in v.items()} for k, v in d["accuracy"].items()},
            forall={int(k): Ratio(*r) for k, r in d["forall"].items()},
            confusion={s: Ratio(*r) for s, r in d["confusion"].items()},
            gap_bins=[GapRow.from_dict(r) for r in d["gap_bins"]],
        )


@dataclass
class MetricsReport:
    run_id: str
    collection: str
    ks: tuple[int, ...] = (1, 20)
    tasks: dict[str, TaskMetrics] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "collection": self.collection,
            "ks": list(self.ks),
            "tasks": {t: m.to_dict() for t, m in self.tasks.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> MetricsReport:
        return cls(
            run_id=d["run_id"],
            collection=d["collection"],
            ks=tuple(d["ks"]),
            tasks={t: TaskMetrics.from_dict(m) for t, m in d["tasks"].items()},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> MetricsReport:
        return cls.from_dict(json.loads(text))


def aggregate_report(
    run: RetrieverRun,
    sets: Sequence[AmberSet],
    queries_by_task: Mapping[str, Sequence[TaskQuery]],
    views: Mapping[str, int],
    ks: Sequence[int] = (1, 20),
    bins: Sequence[GapBin] = DEFAULT_GAP_BINS,
    strict: bool = False,
    collection: str = "",
) -> MetricsReport:
    """All metrics for every task present in ``queries_by_task``.

    Gap bins use accuracy at the smallest k.
    """
    ks = tuple(sorted(set(ks)))
    by_id = {s.set_id: s for s in sets}
    report = MetricsReport(run.run_id, collection, ks)
    if not run.rankings:
        logger.warning("run %s is empty; every query scores as a miss", run.run_id)
    for task in TASKS:
        qs = list(queries_by_task.get(task, ()))
        if task not in queries_by_task:
            continue
        m = TaskMetrics()
        for k in ks:
            m.accuracy[k] = accuracy_at_k(run, qs, k, strict)
            m.forall[k] = all_correct(run, sets, qs, k, strict)
        m.confusion = entity_confusion(run, qs, by_id, strict)
        m.gap_bins = popularity_gap_report(run, sets, qs, views, bins, ks[0], strict)
        report.tasks[task] = m
    return report
