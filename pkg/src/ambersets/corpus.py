"""Document corpus ingestion and the prefix alignment test."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from ._jsonl import dumps, iter_records
from .errors import ParseError

PREFIX_TOKENS = 350


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    title: str
    text: str
    qid: str | None = None

    def to_dict(self) -> dict:
        d = {"doc_id": self.doc_id, "title": self.title, "text": self.text}
        if self.qid:
            d["qid"] = self.qid
        return d


def serialize_document(doc: DocumentRecord) -> str:
    return dumps(doc.to_dict())


def document_from_dict(obj: dict, lineno: int | None = None, source=None) -> DocumentRecord:
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ParseError("missing or empty 'doc_id'", lineno, source)
    text = obj.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ParseError(f"document {doc_id}: missing or empty 'text'", lineno, source)
    title = obj.get("title") or ""
    qid = obj.get("qid") or None
    if not isinstance(title, str) or (qid is not None and not isinstance(qid, str)):
        raise ParseError(f"document {doc_id}: 'title' and 'qid' must be strings", lineno, source)
    return DocumentRecord(doc_id=doc_id, title=title, text=text, qid=qid)


def parse_document(line: str, lineno: int | None = None) -> DocumentRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", lineno)
    return document_from_dict(obj, lineno)


def iter_documents(path: str | Path) -> Iterator[DocumentRecord]:
    for lineno, obj in iter_records(path):
        yield document_from_dict(obj, lineno, path)


def normalize_space(text: str) -> str:
    return " ".join(text.split())


def text_prefix(text: str, n: int = PREFIX_TOKENS) -> str:
    """First ``n`` whitespace tokens of ``text`` rejoined with single spaces."""
    return " ".join(text.split(None, n)[:n])


def value_in_prefix(doc: DocumentRecord, value: str, n: int = PREFIX_TOKENS) -> bool:
    """True iff ``value`` occurs, case-insensitively, within the first ``n`` tokens.

    Whitespace inside ``value`` is normalized the same way as the prefix, so a
    multi-word value matches across token boundaries.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    needle = normalize_space(value).casefold()
    if not needle:
        return False
    return needle in text_prefix(doc.text, n).casefold()


class DocumentIndex:
    """doc_id -> document and qid -> doc_ids lookups. Read-only after build."""

    def __init__(self, docs: Iterable[DocumentRecord]):
        by_id: dict[str, DocumentRecord] = {}
        by_qid: dict[str, set[str]] = defaultdict(set)
        for doc in docs:
            if doc.doc_id in by_id:
                raise ParseError(f"duplicate doc_id {doc.doc_id}")
            by_id[doc.doc_id] = doc
            if doc.qid:
                by_qid[doc.qid].add(doc.doc_id)
        self._docs: Mapping[str, DocumentRecord] = MappingProxyType(by_id)
        self._by_qid: Mapping[str, frozenset[str]] = MappingProxyType(
            {q: frozenset(ids) for q, ids in by_qid.items()}
        )

    @classmethod
    def from_path(cls, path: str | Path, qids: Iterable[str] | None = None) -> DocumentIndex:
        """Index a corpus file; with ``qids``, keep only documents aligned to them."""
        if qids is None:
            return cls(iter_documents(path))
        wanted = set(qids)
        return cls(d for d in iter_documents(path) if d.qid in wanted)

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id) -> bool:
        return doc_id in self._docs

    def __getitem__(self, doc_id: str) -> DocumentRecord:
        return self._docs[doc_id]

    def __iter__(self):
        return iter(self._docs.values())

    def docs_for(self, qid: str) -> frozenset[str]:
        return self._by_qid.get(qid, frozenset())

    def aligned_gold(self, qid: str, value: str, n: int = PREFIX_TOKENS) -> frozenset[str]:
        """Documents aligned to ``qid`` whose prefix contains ``value``."""
        return frozenset(d for d in self.docs_for(qid) if value_in_prefix(self._docs[d], value, n))
