"""Built-in tf-idf retriever and retriever-run files.

Weights are ``tf * idf`` with ``idf = ln((N + 1) / (df + 1)) + 1`` over
lowercased alphanumeric tokens; document and query vectors are L2-normalized
and scored by dot product. Ties rank by ascending doc_id.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ._jsonl import iter_records, write_records
from .corpus import DocumentRecord
from .errors import ParseError, RunValidationError

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class SparseIndex:
    """Row-normalized tf-idf matrix over a corpus, rows in doc_id order."""

    def __init__(self, doc_ids: list[str], vocab: dict[str, int], df: np.ndarray, matrix: sp.csr_matrix):
        self.doc_ids = doc_ids
        self.vocab = vocab
        self.df = df
        self.idf = np.log((len(doc_ids) + 1) / (df + 1.0)) + 1.0
        self.matrix = matrix

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def query_vector(self, text: str) -> sp.csr_matrix | None:
        tf = Counter(t for t in tokenize(text) if t in self.vocab)
        if not tf:
            return None
        cols = np.fromiter((self.vocab[t] for t in tf), dtype=np.int64, count=len(tf))
        vals = np.fromiter(tf.values(), dtype=np.float64, count=len(tf)) * self.idf[cols]
        vals /= np.sqrt(np.dot(vals, vals))
        return sp.csr_matrix((vals, (np.zeros_like(cols), cols)), shape=(1, len(self.vocab)))

    def scores(self, text: str) -> np.ndarray:
        """Score every document; row order follows ``doc_ids``."""
        q = self.query_vector(text)
        if q is None:
            return np.zeros(self.n_docs)
        return np.asarray((self.matrix @ q.T).todense()).ravel()


def build_index(docs: Iterable[DocumentRecord]) -> SparseIndex:
    """Build the tf-idf index. Raises ``ValueError`` on an empty corpus.

    Rows are sorted by doc_id, so the index does not depend on input order.
    """
    docs = sorted(docs, key=lambda d: d.doc_id)
    if not docs:
        raise ValueError("cannot index an empty corpus")
    counts = [Counter(tokenize(d.text)) for d in docs]
    vocab_terms = sorted(set().union(*counts))
    vocab = {t: i for i, t in enumerate(vocab_terms)}

    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for c in counts:
        for term in sorted(c, key=vocab.__getitem__):
            indices.append(vocab[term])
            data.append(c[term])
        indptr.append(len(indices))
    tf = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(docs), len(vocab)),
    )
    df = np.bincount(tf.indices, minlength=len(vocab)).astype(np.float64)
    idf = np.log((len(docs) + 1) / (df + 1.0)) + 1.0
    weighted = tf.multiply(idf).tocsr()
    norms = np.sqrt(np.asarray(weighted.multiply(weighted).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    matrix = sp.diags(1.0 / norms) @ weighted
    return SparseIndex([d.doc_id for d in docs], vocab, df, sp.csr_matrix(matrix))


def retrieve(index: SparseIndex, query: str, k: int = 20) -> list[tuple[str, float]]:
    """Top-``k`` (doc_id, score) pairs, by score then doc_id.

    Documents with no term overlap score 0 and still fill the ranking.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = index.scores(query)
    n = len(scores)
    if k < n:
        # candidates: everything scoring at least the k-th best score
        kth = np.partition(scores, n - k)[n - k]
        cand = np.flatnonzero(scores >= kth)
    else:
        cand = np.arange(n)
    # rows are doc_id-sorted, so a stable sort on -score breaks ties by doc_id
    order = cand[np.argsort(-scores[cand], kind="stable")][:k]
    return [(index.doc_ids[i], float(scores[i])) for i in order]


@dataclass(frozen=True)
class RetrieverRun:
    run_id: str
    rankings: Mapping[str, tuple[str, ...]]

    def ranking(self, query_id: str) -> tuple[str, ...] | None:
        return self.rankings.get(query_id)


def run_queries(index: SparseIndex, queries: Iterable, k: int = 20, run_id: str = "tfidf") -> RetrieverRun:
    """Rank documents for each query object (anything with ``query_id`` and ``input_text``)."""
    rankings = {}
    for q in queries:
        rankings[q.query_id] = tuple(d for d, _ in retrieve(index, q.input_text, k))
    return RetrieverRun(run_id, rankings)


def write_run(path: str | Path, run: RetrieverRun) -> int:
    return write_records(
        path,
        ({"query_id": qid, "ranked_doc_ids": list(run.rankings[qid])} for qid in sorted(run.rankings)),
    )


def load_external_run(path: str | Path, known_query_ids: Iterable[str] | None = None, run_id: str | None = None) -> RetrieverRun:
    """Read and validate a run file of ``{query_id, ranked_doc_ids}`` lines.

    Unknown query ids and repeated documents within a ranking raise
    :class:`RunValidationError`; all offending query ids are listed.
    """
    known = None if known_query_ids is None else set(known_query_ids)
    rankings: dict[str, tuple[str, ...]] = {}
    unknown: list[str] = []
    duplicated: list[str] = []
    for lineno, obj in iter_records(path):
        qid = obj.get("query_id")
        docs = obj.get("ranked_doc_ids")
        if not isinstance(qid, str) or not qid:
            raise ParseError("missing 'query_id'", lineno, path)
        if not isinstance(docs, list) or not all(isinstance(d, str) for d in docs):
            raise ParseError(f"query {qid}: 'ranked_doc_ids' must be a list of strings", lineno, path)
        if qid in rankings:
            raise RunValidationError(f"{path}: query {qid} ranked twice (line {lineno})")
        if known is not None and qid not in known:
            unknown.append(qid)
        if len(set(docs)) != len(docs):
            duplicated.append(qid)
        rankings[qid] = tuple(docs)
    problems = []
    if unknown:
        problems.append("unknown query ids: " + ", ".join(sorted(unknown)))
    if duplicated:
        problems.append("duplicate documents in rankings for: " + ", ".join(sorted(duplicated)))
    if problems:
        raise RunValidationError(f"{path}: " + "; ".join(problems))
    return RetrieverRun(run_id or Path(path).stem, rankings)


def validate_run(run: RetrieverRun, known_query_ids: Iterable[str]) -> None:
    known = set(known_query_ids)
    unknown = sorted(q for q in run.rankings if q not in known)
    dup = sorted(q for q, r in run.rankings.items() if len(set(r)) != len(r))
    if unknown or dup:
        raise RunValidationError(f"unknown query ids: {unknown}; duplicate documents: {dup}")


def run_from_rankings(rankings: Mapping[str, Sequence[str]], run_id: str = "run") -> RetrieverRun:
    return RetrieverRun(run_id, {q: tuple(r) for q, r in rankings.items()})
