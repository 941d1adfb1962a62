"""Brute-force tf-idf scorer used as an independent check on the sparse index.

Deliberately naive: dict-of-counts per document, no matrices, no sorting tricks.
"""

import math
import re
from collections import Counter

TOY_CORPUS = {
    "d1": "The president Abe Lincoln led the Union through the Civil War.",
    "d2": "Abe Lincoln is an American jazz trombone player and bandleader.",
    "d3": "Lincoln is a city in Nebraska, the state capital of Nebraska.",
    "d4": "The trombone is a brass instrument played with a slide.",
    "d5": "Napolioni Nalaga plays rugby for the Fiji national side.",
}


def _terms(text):
    out = []
    for match in re.finditer(r"[^\W_]+", text.lower()):
        out.append(match.group(0))
    return out


def oracle_scores(corpus, query):
    n = len(corpus)
    df = Counter()
    for text in corpus.values():
        for term in set(_terms(text)):
            df[term] += 1

    def weigh(text):
        tf = Counter(t for t in _terms(text) if t in df)
        vec = {}
        for term, count in tf.items():
            vec[term] = count * (math.log((n + 1) / (df[term] + 1)) + 1)
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm == 0:
            return {}
        return {t: w / norm for t, w in vec.items()}

    q = weigh(query)
    scores = {}
    for doc_id, text in corpus.items():
        d = weigh(text)
        scores[doc_id] = sum(w * d.get(t, 0.0) for t, w in q.items())
    return scores


def oracle_ranking(corpus, query):
    scores = oracle_scores(corpus, query)
    return sorted(scores, key=lambda d: (-scores[d], d))
