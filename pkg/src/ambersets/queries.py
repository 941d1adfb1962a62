"""Task query instantiation: question answering, slot filling and fact checking."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError
from .kg import EntityRecord, FactTuple
from .sets import AmberSet

logger = logging.getLogger(__name__)

TASKS = ("FC", "SF", "QA")
SUPPORTS = "SUPPORTS"
REFUTES = "REFUTES"

_SLOT = r"\${0}(?![A-Za-z0-9_])"


def _has_slot(template: str, slot: str) -> bool:
    return re.search(_SLOT.format(slot), template) is not None


@dataclass(frozen=True)
class PropertyTemplates:
    qa: tuple[str, ...]
    fc: tuple[str, ...]
    label: str = ""


class TemplateBank:
    """pid -> QA and FC templates, validated on construction."""

    def __init__(self, entries: Mapping[str, PropertyTemplates]):
        for pid, entry in entries.items():
            for t in entry.qa:
                if not _has_slot(t, "name"):
                    raise ConfigError(f"{pid}: QA template lacks $name: {t!r}")
            for t in entry.fc:
                if not (_has_slot(t, "name") and _has_slot(t, "object")):
                    raise ConfigError(f"{pid}: FC template lacks $name or $object: {t!r}")
        self._entries = dict(entries)

    def __contains__(self, pid) -> bool:
        return pid in self._entries

    def __getitem__(self, pid: str) -> PropertyTemplates:
        try:
            return self._entries[pid]
        except KeyError:
            raise ConfigError(f"no templates for property {pid}") from None

    def pids(self) -> list[str]:
        return sorted(self._entries)

    def missing(self, pids: Iterable[str]) -> list[str]:
        """Whitelisted pids lacking a QA or FC template."""
        out = []
        for pid in sorted(set(pids)):
            e = self._entries.get(pid)
            if e is None or not e.qa or not e.fc:
                out.append(pid)
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> TemplateBank:
        entries = {}
        for pid, body in raw.items():
            qa, fc = body.get("qa", []), body.get("fc", [])
            if not isinstance(qa, list) or not isinstance(fc, list):
                raise ConfigError(f"{pid}: 'qa' and 'fc' must be lists")
            entries[pid] = PropertyTemplates(tuple(qa), tuple(fc), body.get("property", ""))
        return cls(entries)


def load_template_bank(path: str | Path | None = None) -> TemplateBank:
    """Load a bank from JSON; ``None`` loads the packaged bank."""
    try:
        if path is None:
            text = resources.files("ambersets").joinpath("data/templates.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        raw = json.loads(text)
    except OSError as exc:
        raise ConfigError(f"cannot read template bank {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"template bank {path}: {exc}") from None
    return TemplateBank.from_dict(raw)


def stable_hash(*parts: str) -> int:
    h = hashlib.sha1("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def select_template(set_id: str, pid: str, templates: Sequence[str]) -> str:
    """Deterministic template choice: ``stable_hash(set_id, pid) mod len(templates)``."""
    if not templates:
        raise ConfigError(f"no templates available for {pid}")
    return templates[stable_hash(set_id, pid) % len(templates)]


def fill(template: str, **slots: str) -> str:
    for slot in slots:
        if not _has_slot(template, slot):
            raise ConfigError(f"template {template!r} lacks ${slot}")
    return Template(template).safe_substitute(slots)


@dataclass(frozen=True)
class TaskQuery:
    query_id: str
    set_id: str
    qid: str
    pid: str
    task: str
    input_text: str
    answer: str
    gold_doc_ids: frozenset[str]
    is_head: bool

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "set_id": self.set_id,
            "qid": self.qid,
            "pid": self.pid,
            "task": self.task,
            "input": self.input_text,
            "answer": self.answer,
            "gold_doc_ids": sorted(self.gold_doc_ids),
            "is_head": self.is_head,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> TaskQuery:
        return cls(
            query_id=d["query_id"],
            set_id=d["set_id"],
            qid=d["qid"],
            pid=d["pid"],
            task=d["task"],
            input_text=d["input"],
            answer=d["answer"],
            gold_doc_ids=frozenset(d["gold_doc_ids"]),
            is_head=bool(d["is_head"]),
        )


def query_id(set_id: str, qid: str, pid: str, task: str, suffix: str | None = None) -> str:
    parts = [set_id, qid, pid, task]
    if suffix:
        parts.append(suffix)
    return ":".join(parts)


class GlobalValueStats:
    """How often each value occurs for each property across the whole KG."""

    def __init__(self, counts: Mapping[str, Mapping[str, int]] | None = None):
        self._counts: dict[str, Counter] = defaultdict(Counter)
        for pid, c in (counts or {}).items():
            self._counts[pid].update(c)

    def add(self, t: FactTuple) -> None:
        self._counts[t.pid][t.value_text] += 1

    def counts(self, pid: str) -> Counter:
        return self._counts.get(pid, Counter())

    @classmethod
    def from_entities(cls, entities: Iterable[EntityRecord], pids: Iterable[str] | None = None) -> GlobalValueStats:
        wanted = None if pids is None else set(pids)
        stats = cls()
        for ent in entities:
            for t in ent.tuples:
                if wanted is None or t.pid in wanted:
                    stats.add(t)
        return stats


def most_popular_alternative(pid: str, true_value: str, stats: GlobalValueStats) -> str | None:
    """Most frequent value of ``pid`` that differs (case-insensitively) from ``true_value``.

    Count ties go to the lexicographically smallest value.
    """
    target = true_value.casefold()
    best = None
    for value, n in stats.counts(pid).items():
        if value.casefold() == target:
            continue
        if best is None or (-n, value) < (-best[1], best[0]):
            best = (value, n)
    return None if best is None else best[0]


def _gold(s: AmberSet, t: FactTuple) -> frozenset[str]:
    docs = s.gold_docs.get((t.subject_qid, t.pid))
    if not docs:
        raise ValueError(f"tuple ({t.subject_qid}, {t.pid}) has no gold documents in set {s.set_id}")
    return frozenset(docs)


def instantiate_qa(t: FactTuple, s: AmberSet, bank: TemplateBank) -> TaskQuery:
    template = select_template(s.set_id, t.pid, bank[t.pid].qa)
    return TaskQuery(
        query_id=query_id(s.set_id, t.subject_qid, t.pid, "QA"),
        set_id=s.set_id,
        qid=t.subject_qid,
        pid=t.pid,
        task="QA",
        input_text=fill(template, name=s.name),
        answer=t.value_text,
        gold_doc_ids=_gold(s, t),
        is_head=t.subject_qid == s.head_qid,
    )


def sf_input(name: str, property_label: str) -> str:
    if not property_label:
        raise ValueError("slot filling needs a non-empty property label")
    return f"{name} [SEP] {property_label}"


def instantiate_sf(t: FactTuple, s: AmberSet) -> TaskQuery:
    return TaskQuery(
        query_id=query_id(s.set_id, t.subject_qid, t.pid, "SF"),
        set_id=s.set_id,
        qid=t.subject_qid,
        pid=t.pid,
        task="SF",
        input_text=sf_input(s.name, t.property_label),
        answer=t.value_text,
        gold_doc_ids=_gold(s, t),
        is_head=t.subject_qid == s.head_qid,
    )


def instantiate_fc_pair(
    t: FactTuple, s: AmberSet, bank: TemplateBank, stats: GlobalValueStats
) -> tuple[TaskQuery, TaskQuery] | None:
    """A true and a false claim from the same template, or ``None`` if no false value exists."""
    template = select_template(s.set_id, t.pid, bank[t.pid].fc)
    alternative = most_popular_alternative(t.pid, t.value_text, stats)
    if alternative is None:
        logger.warning("no alternative value for %s on %s; skipping fact-checking pair", t.pid, t.subject_qid)
        return None
    gold = _gold(s, t)
    is_head = t.subject_qid == s.head_qid
    pair = []
    for label, obj, suffix in ((SUPPORTS, t.value_text, "s"), (REFUTES, alternative, "r")):
        pair.append(TaskQuery(
            query_id=query_id(s.set_id, t.subject_qid, t.pid, "FC", suffix),
            set_id=s.set_id,
            qid=t.subject_qid,
            pid=t.pid,
            task="FC",
            input_text=fill(template, name=s.name, object=obj),
            answer=label,
            gold_doc_ids=gold,
            is_head=is_head,
        ))
    return pair[0], pair[1]


@dataclass
class GenerationReport:
    tuples: int = 0
    counts: dict[str, int] = field(default_factory=lambda: {t: 0 for t in TASKS})
    skipped_fc: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def fc_invariant_holds(self) -> bool:
        """FC = 2T, SF = T, QA = T; relaxed as soon as one FC pair is skipped."""
        c = self.counts
        return c["FC"] == 2 * self.tuples and c["SF"] == self.tuples and c["QA"] == self.tuples

    def to_dict(self) -> dict:
        return {
            "tuples": self.tuples,
            "queries": dict(self.counts),
            "total_queries": sum(self.counts.values()),
            "skipped_fc_pairs": [list(x) for x in self.skipped_fc],
            "count_invariant": "holds" if self.fc_invariant_holds else "relaxed",
        }


def generate_queries(
    sets: Iterable[AmberSet], bank: TemplateBank, stats: GlobalValueStats
) -> tuple[dict[str, list[TaskQuery]], GenerationReport]:
    """Queries for every surviving tuple, grouped by task and sorted by query_id."""
    out: dict[str, list[TaskQuery]] = {t: [] for t in TASKS}
    report = GenerationReport()
    for s in sets:
        for q in sorted(s.members):
            for t in s.members[q]:
                report.tuples += 1
                out["QA"].append(instantiate_qa(t, s, bank))
                out["SF"].append(instantiate_sf(t, s))
                pair = instantiate_fc_pair(t, s, bank, stats)
                if pair is None:
                    report.skipped_fc.append((s.set_id, t.subject_qid, t.pid))
                else:
                    out["FC"].extend(pair)
    for task in TASKS:
        out[task].sort(key=lambda x: x.query_id)
        report.counts[task] = len(out[task])
    if not report.fc_invariant_holds:
        logger.warning("%d fact-checking pairs skipped; FC = 2T no longer holds", len(report.skipped_fc))
    return out, report
