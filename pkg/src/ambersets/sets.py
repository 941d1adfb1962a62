"""Building AmbER sets from an alias index.

Filters run in a fixed order:

    entity type -> property whitelist -> popularity gap -> shared property
    -> gold-document alignment -> finalize

Shared properties are removed before alignment so that a property held by two
same-name entities can never become a query, even if only one of them has an
aligned document mentioning the value.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .corpus import PREFIX_TOKENS, DocumentIndex
from .errors import ConfigError
from .kg import AliasIndex, EntityRecord, FactTuple
from .popularity import MIN_SET_GAP, assign_head_tail, meets_gap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollectionSpec:
    name: str
    allowed_types: frozenset[str]
    property_whitelist: Mapping[str, frozenset[str]]
    property_labels: Mapping[str, str] = field(default_factory=dict)

    def whitelisted_pids(self, type_tags: Iterable[str]) -> frozenset[str]:
        pids: set[str] = set()
        for t in type_tags:
            pids |= self.property_whitelist.get(t, frozenset())
        return frozenset(pids)

    @property
    def all_pids(self) -> frozenset[str]:
        return self.whitelisted_pids(self.allowed_types)


def collection_specs_from_dict(config: Mapping) -> dict[str, CollectionSpec]:
    specs = {}
    for name, body in config.items():
        types = body.get("types")
        if not isinstance(types, dict) or not types:
            raise ConfigError(f"collection {name!r}: 'types' must be a non-empty mapping")
        whitelist = {}
        labels = {}
        for type_id, entry in types.items():
            props = entry.get("properties", {})
            if isinstance(props, list):
                props = {p: "" for p in props}
            if len(set(props)) != len(props):
                raise ConfigError(f"collection {name!r}: duplicate pid under {type_id}")
            whitelist[type_id] = frozenset(props)
            for pid, label in props.items():
                if label:
                    labels.setdefault(pid, label)
        specs[name] = CollectionSpec(
            name=name,
            allowed_types=frozenset(types),
            property_whitelist=MappingProxyType(whitelist),
            property_labels=MappingProxyType(labels),
        )
    return specs


def load_collection_specs(path: str | Path | None = None) -> dict[str, CollectionSpec]:
    """Read collection specs from JSON; ``None`` loads the packaged defaults."""
    try:
        if path is None:
            text = resources.files("ambersets").joinpath("data/collections.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read collection config {path}: {exc}") from None
    try:
        return collection_specs_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"collection config {path}: {exc}") from None


def make_set_id(collection: str, alias: str) -> str:
    """Stable identifier: first 16 hex chars of sha1("<collection>\\x1f<alias>")."""
    digest = hashlib.sha1(f"{collection}\x1f{alias}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class Group:
    """A candidate set moving through the filter chain."""

    alias: str
    collection: str
    member_types: Mapping[str, frozenset[str]]
    views: Mapping[str, int]
    head_qid: str
    tail_qids: tuple[str, ...]
    tuples: Mapping[str, tuple[FactTuple, ...]]
    gold_docs: Mapping[tuple[str, str], frozenset[str]] = field(default_factory=dict)
    entity_docs: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @property
    def members(self) -> tuple[str, ...]:
        return (self.head_qid,) + self.tail_qids

    def n_tuples(self) -> int:
        return sum(len(v) for v in self.tuples.values())


@dataclass(frozen=True)
class AmberSet:
    set_id: str
    name: str
    collection: str
    head_qid: str
    tail_qids: tuple[str, ...]
    members: Mapping[str, tuple[FactTuple, ...]]
    gold_docs: Mapping[tuple[str, str], frozenset[str]]
    entity_docs: Mapping[str, frozenset[str]]
    member_types: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @property
    def qids(self) -> tuple[str, ...]:
        return (self.head_qid,) + self.tail_qids

    def query_bearing(self) -> list[str]:
        return [q for q in self.qids if self.members.get(q)]

    def n_tuples(self) -> int:
        return sum(len(v) for v in self.members.values())

    def to_dict(self) -> dict:
        return {
            "set_id": self.set_id,
            "name": self.name,
            "collection": self.collection,
            "head_qid": self.head_qid,
            "tail_qids": list(self.tail_qids),
            "members": {q: [t.to_dict() for t in self.members[q]] for q in sorted(self.members)},
            "member_types": {q: sorted(self.member_types.get(q, ())) for q in sorted(self.members)},
            "gold_docs": [
                {"qid": q, "pid": p, "doc_ids": sorted(self.gold_docs[(q, p)])}
                for q, p in sorted(self.gold_docs)
            ],
            "entity_docs": {q: sorted(self.entity_docs.get(q, ())) for q in sorted(self.members)},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> AmberSet:
        members = {q: tuple(FactTuple.from_dict(q, t) for t in ts) for q, ts in d["members"].items()}
        return cls(
            set_id=d["set_id"],
            name=d["name"],
            collection=d["collection"],
            head_qid=d["head_qid"],
            tail_qids=tuple(d["tail_qids"]),
            members=members,
            gold_docs={(g["qid"], g["pid"]): frozenset(g["doc_ids"]) for g in d["gold_docs"]},
            entity_docs={q: frozenset(ids) for q, ids in d.get("entity_docs", {}).items()},
            member_types={q: frozenset(ts) for q, ts in d.get("member_types", {}).items()},
        )


def group_candidates(
    index: AliasIndex,
    spec: CollectionSpec,
    entity_types: Mapping[str, frozenset[str]],
) -> Iterator[tuple[str, frozenset[str]]]:
    """Yield (alias, qids) where at least two bearers have an allowed type.

    Bearers without an allowed type are dropped from the group first.
    """
    for alias, qids in index.polysemous():
        kept = frozenset(q for q in qids if entity_types.get(q, frozenset()) & spec.allowed_types)
        if len(kept) >= 2:
            yield alias, kept


def make_group(
    alias: str,
    qids: Iterable[str],
    spec: CollectionSpec,
    entities: Mapping[str, EntityRecord],
    views: Mapping[str, int],
) -> Group:
    """Assemble a group with head/tails assigned and only whitelisted tuples kept."""
    qids = [q for q in qids if entities[q].type_tags & spec.allowed_types]
    head, tails = assign_head_tail(qids, views)
    member_types = {q: frozenset(entities[q].type_tags & spec.allowed_types) for q in qids}
    tuples = {}
    for q in qids:
        allowed = spec.whitelisted_pids(member_types[q])
        tuples[q] = tuple(sorted((t for t in entities[q].tuples if t.pid in allowed), key=lambda t: t.pid))
    return Group(
        alias=alias,
        collection=spec.name,
        member_types=member_types,
        views={q: views.get(q, 0) for q in qids},
        head_qid=head,
        tail_qids=tuple(tails),
        tuples=tuples,
    )


def apply_property_whitelist(group: Group, spec: CollectionSpec) -> Group:
    tuples = {}
    for q in group.members:
        allowed = spec.whitelisted_pids(group.member_types[q])
        tuples[q] = tuple(t for t in group.tuples[q] if t.pid in allowed)
    return replace(group, tuples=tuples)


def filter_popularity_gap(group: Group, threshold: Fraction = MIN_SET_GAP) -> Group | None:
    """Keep the group iff head views beat the top tail by at least ``threshold``."""
    p_h = group.views.get(group.head_qid, 0)
    p_t = group.views.get(group.tail_qids[0], 0)
    return group if meets_gap(p_h, p_t, threshold) else None


def filter_shared_properties(group: Group) -> Group:
    counts = Counter(pid for ts in group.tuples.values() for pid in {t.pid for t in ts})
    shared = {pid for pid, n in counts.items() if n >= 2}
    if not shared:
        return group
    tuples = {q: tuple(t for t in ts if t.pid not in shared) for q, ts in group.tuples.items()}
    gold = {k: v for k, v in group.gold_docs.items() if k[1] not in shared}
    return replace(group, tuples=tuples, gold_docs=gold)


def align_gold_documents(group: Group, doc_index: DocumentIndex, n: int = PREFIX_TOKENS) -> Group:
    """Attach gold documents to each tuple and drop tuples that have none."""
    tuples = {}
    gold = {}
    entity_docs = {}
    for q in group.members:
        entity_docs[q] = doc_index.docs_for(q)
        kept = []
        for t in group.tuples[q]:
            docs = doc_index.aligned_gold(q, t.value_text, n)
            if docs:
                kept.append(t)
                gold[(q, t.pid)] = docs
        tuples[q] = tuple(kept)
    return replace(group, tuples=tuples, gold_docs=gold, entity_docs=entity_docs)


def finalize_set(group: Group) -> AmberSet | None:
    """Emit a set iff the head and at least one tail still carry a tuple.

    Members without tuples stay in the set as distractors.
    """
    if not group.tuples.get(group.head_qid):
        return None
    if not any(group.tuples.get(t) for t in group.tail_qids):
        return None
    return AmberSet(
        set_id=make_set_id(group.collection, group.alias),
        name=group.alias,
        collection=group.collection,
        head_qid=group.head_qid,
        tail_qids=group.tail_qids,
        members=dict(group.tuples),
        gold_docs=dict(group.gold_docs),
        entity_docs=dict(group.entity_docs),
        member_types=dict(group.member_types),
    )


@dataclass
class StageCounts:
    """Per-stage counters for one collection build."""

    aliases_total: int = 0
    aliases_polysemous: int = 0
    groups_after_type_filter: int = 0
    groups_after_gap_filter: int = 0
    tuples_after_whitelist: int = 0
    tuples_after_shared_filter: int = 0
    tuples_after_alignment: int = 0
    sets_final: int = 0
    entities_final: int = 0
    query_bearing_entities_final: int = 0
    tuples_final: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def run_filters(
    group: Group,
    spec: CollectionSpec,
    doc_index: DocumentIndex,
    n: int = PREFIX_TOKENS,
    counts: StageCounts | None = None,
) -> Group | None:
    """Apply every filter after type grouping; ``None`` means rejected."""
    group = apply_property_whitelist(group, spec)
    gapped = filter_popularity_gap(group)
    if gapped is None:
        return None
    group = gapped
    if counts is not None:
        counts.groups_after_gap_filter += 1
        counts.tuples_after_whitelist += group.n_tuples()
    group = filter_shared_properties(group)
    if counts is not None:
        counts.tuples_after_shared_filter += group.n_tuples()
    group = align_gold_documents(group, doc_index, n)
    if counts is not None:
        counts.tuples_after_alignment += group.n_tuples()
    return group


def build_sets(
    index: AliasIndex,
    spec: CollectionSpec,
    entities: Mapping[str, EntityRecord],
    views: Mapping[str, int],
    doc_index: DocumentIndex,
    n: int = PREFIX_TOKENS,
) -> tuple[list[AmberSet], StageCounts]:
    """Run the whole chain for one collection. Output is sorted by set_id.

    ``entities`` must hold every qid that ``index`` yields for allowed types.
    """
    counts = StageCounts(aliases_total=len(index))
    entity_types = {q: e.type_tags for q, e in entities.items()}
    counts.aliases_polysemous = sum(1 for _ in index.polysemous())
    out = []
    for alias, qids in group_candidates(index, spec, entity_types):
        counts.groups_after_type_filter += 1
        group = make_group(alias, qids, spec, entities, views)
        group = run_filters(group, spec, doc_index, n, counts)
        if group is None:
            continue
        s = finalize_set(group)
        if s is None:
            continue
        out.append(s)
    out.sort(key=lambda s: s.set_id)
    counts.sets_final = len(out)
    counts.entities_final = sum(len(s.qids) for s in out)
    counts.query_bearing_entities_final = sum(len(s.query_bearing()) for s in out)
    counts.tuples_final = sum(s.n_tuples() for s in out)
    logger.info("%s: %d sets from %d candidate groups", spec.name, len(out), counts.groups_after_type_filter)
    return out, counts


def collection_statistics(sets: Iterable[AmberSet]) -> dict:
    """Set count, per-set averages of entities, query-bearing entities and tuples, and the tuple total."""
    sets = list(sets)
    n = len(sets)
    tuples = sum(s.n_tuples() for s in sets)
    return {
        "sets": n,
        "avg_entities": sum(len(s.qids) for s in sets) / n if n else 0.0,
        "avg_entities_with_properties": sum(len(s.query_bearing()) for s in sets) / n if n else 0.0,
        "avg_properties": tuples / n if n else 0.0,
        "tuples": tuples,
    }


def validate_set(s: AmberSet, spec: CollectionSpec | None = None) -> list[str]:
    """Return the invariant violations of ``s`` (empty when the set is sound)."""
    problems = []
    if s.head_qid in s.tail_qids:
        problems.append("head listed among tails")
    if not s.tail_qids:
        problems.append("no tails")
    owners: dict[str, str] = {}
    for q, ts in s.members.items():
        for t in ts:
            if t.subject_qid != q:
                problems.append(f"tuple {t.pid} of {q} has subject {t.subject_qid}")
            if t.pid in owners and owners[t.pid] != q:
                problems.append(f"pid {t.pid} shared by {owners[t.pid]} and {q}")
            owners.setdefault(t.pid, q)
            if not s.gold_docs.get((q, t.pid)):
                problems.append(f"tuple ({q}, {t.pid}) has no gold document")
            if spec is not None and t.pid not in spec.whitelisted_pids(s.member_types.get(q, ())):
                problems.append(f"pid {t.pid} not whitelisted for {q}")
    for (q, p), docs in s.gold_docs.items():
        if not docs:
            problems.append(f"empty gold set for ({q}, {p})")
        if all(t.pid != p for t in s.members.get(q, ())):
            problems.append(f"gold docs for ({q}, {p}) without a surviving tuple")
    if not s.members.get(s.head_qid):
        problems.append("head has no tuples")
    if not any(s.members.get(t) for t in s.tail_qids):
        problems.append("no tail has tuples")
    return problems
