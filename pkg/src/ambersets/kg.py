"""Knowledge-graph ingestion: entity records and the alias index.

The input is line-delimited JSON, one entity per line::

    {"qid": "Q517", "name": "Napoleon", "aliases": ["Napoleon Bonaparte"],
     "types": ["Q5"],
     "tuples": [{"pid": "P607", "property_label": "conflict",
                 "value_text": "Napoleon Wars", "value_qid": "Q78994"}]}

See ``data/kg_record.schema.json`` for the full schema.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from ._jsonl import dumps, iter_records
from .errors import ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactTuple:
    subject_qid: str
    pid: str
    property_label: str
    value_text: str
    value_qid: str | None = None

    def to_dict(self) -> dict:
        d = {
            "pid": self.pid,
            "property_label": self.property_label,
            "value_text": self.value_text,
        }
        if self.value_qid is not None:
            d["value_qid"] = self.value_qid
        return d

    @classmethod
    def from_dict(cls, subject_qid: str, d: Mapping) -> FactTuple:
        return cls(
            subject_qid=subject_qid,
            pid=d["pid"],
            property_label=d.get("property_label", ""),
            value_text=d["value_text"],
            value_qid=d.get("value_qid"),
        )


@dataclass(frozen=True)
class EntityRecord:
    qid: str
    canonical_name: str
    aliases: frozenset[str]
    type_tags: frozenset[str] = frozenset()
    tuples: tuple[FactTuple, ...] = ()

    def __post_init__(self):
        if not self.qid:
            raise ValueError("qid must be non-empty")
        if self.canonical_name not in self.aliases:
            # labels count as aliases
            object.__setattr__(self, "aliases", self.aliases | {self.canonical_name})

    def tuple_for(self, pid: str) -> FactTuple | None:
        for t in self.tuples:
            if t.pid == pid:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "qid": self.qid,
            "name": self.canonical_name,
            "aliases": sorted(self.aliases),
            "types": sorted(self.type_tags),
            "tuples": [t.to_dict() for t in self.tuples],
        }


def serialize_entity_record(record: EntityRecord) -> str:
    return dumps(record.to_dict())


def _str_list(obj: dict, key: str, lineno, source) -> list[str]:
    value = obj.get(key, [])
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ParseError(f"'{key}' must be a list of strings", lineno, source)
    return value


def entity_from_dict(obj: dict, lineno: int | None = None, source=None) -> EntityRecord:
    """Build an :class:`EntityRecord` from an already-decoded JSON object."""
    qid = obj.get("qid")
    if not isinstance(qid, str) or not qid:
        raise ParseError("missing or empty 'qid'", lineno, source)
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError(f"entity {qid}: missing or empty 'name'", lineno, source)

    aliases = frozenset(a for a in _str_list(obj, "aliases", lineno, source) if a)
    types = frozenset(_str_list(obj, "types", lineno, source))

    raw_tuples = obj.get("tuples") or []
    if not isinstance(raw_tuples, list):
        raise ParseError(f"entity {qid}: 'tuples' must be a list", lineno, source)
    tuples: list[FactTuple] = []
    seen_pids: set[str] = set()
    for raw in raw_tuples:
        if not isinstance(raw, dict):
            raise ParseError(f"entity {qid}: tuple is not an object", lineno, source)
        pid = raw.get("pid")
        value = raw.get("value_text")
        if not isinstance(pid, str) or not pid:
            raise ParseError(f"entity {qid}: tuple missing 'pid'", lineno, source)
        if not isinstance(value, str) or not value:
            raise ParseError(f"entity {qid}: tuple {pid} missing 'value_text'", lineno, source)
        if pid in seen_pids:
            logger.debug("entity %s: duplicate tuple for %s dropped (%r)", qid, pid, value)
            continue
        seen_pids.add(pid)
        tuples.append(FactTuple.from_dict(qid, raw))

    return EntityRecord(qid=qid, canonical_name=name, aliases=aliases | {name},
                        type_tags=types, tuples=tuple(tuples))


def parse_entity_record(line: str, lineno: int | None = None) -> EntityRecord:
    """Parse one line of the KG input format.

    Raises :class:`ParseError` naming ``lineno`` when the qid or name is missing
    or a tuple is malformed. Repeated (qid, pid) tuples keep the first value.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", lineno)
    return entity_from_dict(obj, lineno)


def iter_entities(path: str | Path) -> Iterator[EntityRecord]:
    """Stream entity records from a KG file, rejecting duplicate qids."""
    seen: set[str] = set()
    for lineno, obj in iter_records(path):
        rec = entity_from_dict(obj, lineno, path)
        if rec.qid in seen:
            raise ParseError(f"duplicate qid {rec.qid}", lineno, path)
        seen.add(rec.qid)
        yield rec


def load_entities(path: str | Path, qids: Iterable[str] | None = None) -> dict[str, EntityRecord]:
    """Load entities into a dict, optionally only those in ``qids``."""
    wanted = None if qids is None else set(qids)
    out = {}
    for rec in iter_entities(path):
        if wanted is None or rec.qid in wanted:
            out[rec.qid] = rec
    return out


@dataclass(frozen=True)
class AliasIndex:
    """Exact, case-sensitive mapping from alias text to the qids bearing it.

    Immutable once built; shard-local indexes are combined with :meth:`merge`.
    """

    _bearers: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_bearers", MappingProxyType(dict(self._bearers)))

    def __getitem__(self, alias: str) -> frozenset[str]:
        return self._bearers[alias]

    def get(self, alias: str, default=frozenset()) -> frozenset[str]:
        return self._bearers.get(alias, default)

    def __contains__(self, alias) -> bool:
        return alias in self._bearers

    def __iter__(self):
        return iter(self._bearers)

    def __len__(self) -> int:
        return len(self._bearers)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AliasIndex):
            return NotImplemented
        return dict(self._bearers) == dict(other._bearers)

    def items(self):
        return self._bearers.items()

    def polysemous(self) -> Iterator[tuple[str, frozenset[str]]]:
        """Aliases shared by at least two entities, in sorted alias order."""
        for alias in sorted(self._bearers):
            qids = self._bearers[alias]
            if len(qids) >= 2:
                yield alias, qids

    @classmethod
    def merge(cls, indexes: Iterable[AliasIndex]) -> AliasIndex:
        acc: dict[str, set[str]] = defaultdict(set)
        for idx in indexes:
            for alias, qids in idx.items():
                acc[alias].update(qids)
        return cls({a: frozenset(q) for a, q in acc.items()})


def build_alias_index(entities: Iterable[EntityRecord]) -> AliasIndex:
    acc: dict[str, set[str]] = defaultdict(set)
    for ent in entities:
        for alias in ent.aliases:
            acc[alias].add(ent.qid)
    return AliasIndex({a: frozenset(q) for a, q in acc.items()})
