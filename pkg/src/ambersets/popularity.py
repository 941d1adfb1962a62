"""Page-view popularity: loading, head/tail assignment, and popularity gaps."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import ContractError, ParseError

# set filter: head must beat the most popular tail by at least this fraction
MIN_SET_GAP = Fraction(1, 10)


class PopularityTable(Mapping[str, int]):
    """qid -> monthly page views. Unknown qids read as 0 views."""

    def __init__(self, views: Mapping[str, int] | None = None):
        views = dict(views or {})
        for qid, v in views.items():
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"views for {qid} must be a non-negative int, got {v!r}")
        self._views = MappingProxyType(views)

    def __getitem__(self, qid: str) -> int:
        return self._views[qid]

    def __iter__(self):
        return iter(self._views)

    def __len__(self) -> int:
        return len(self._views)

    def views(self, qid: str) -> int:
        return self._views.get(qid, 0)


def load_pageviews(path: str | Path) -> PopularityTable:
    """Read a two-column TSV of ``qid<TAB>views``; repeated qids are summed.

    Blank lines and lines starting with ``#`` are ignored.
    """
    acc: dict[str, int] = defaultdict(int)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(f"expected 2 tab-separated columns, got {len(cols)}", lineno, path)
            qid, raw = cols[0].strip(), cols[1].strip()
            if not qid:
                raise ParseError("empty qid", lineno, path)
            try:
                views = int(raw)
            except ValueError:
                raise ParseError(f"views {raw!r} is not an integer", lineno, path) from None
            if views < 0:
                raise ParseError(f"negative views {views}", lineno, path)
            acc[qid] += views
    return PopularityTable(acc)


def popularity_gap(p_h: int, p_t: int) -> float:
    """Relative gap ``(p_h - p_t) / p_t`` between a head and a tail entity.

    A zero-view tail gives ``inf`` unless the head also has zero views, in
    which case there is no gap at all.
    """
    if p_h < p_t:
        raise ContractError(f"head views {p_h} below tail views {p_t}")
    if p_t == 0:
        return 0.0 if p_h == 0 else math.inf
    return (p_h - p_t) / p_t


def meets_gap(p_h: int, p_t: int, threshold: Fraction = MIN_SET_GAP) -> bool:
    """Exact rational form of ``popularity_gap(p_h, p_t) >= threshold``."""
    if p_h < p_t:
        raise ContractError(f"head views {p_h} below tail views {p_t}")
    if p_t == 0:
        return p_h > 0 or threshold <= 0
    return Fraction(p_h - p_t, p_t) >= threshold


def assign_head_tail(qids: Iterable[str], table: Mapping[str, int]) -> tuple[str, list[str]]:
    """Most viewed qid is the head; the rest are tails by descending views.

    Ties break on the lexicographically smaller qid.
    """
    qids = set(qids)
    if len(qids) < 2:
        raise ContractError("need at least two entities to assign head and tails")
    ranked = sorted(qids, key=lambda q: (-table.get(q, 0), q))
    return ranked[0], ranked[1:]


@dataclass(frozen=True)
class GapBin:
    lower: float
    upper: float
    label: str

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("bin lower bound must be below upper bound")

    def contains(self, gap: float) -> bool:
        return self.lower <= gap < self.upper


def make_gap_bins(edges: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)) -> tuple[GapBin, ...]:
    """Contiguous bins over [0, inf); the last bin is open-ended.

    Edges are compared as given, so pass literals (0.6, not 3 * 0.2) to keep
    integer-ratio gaps like 60/100 on the intended side of a boundary.
    """
    if not edges or edges[0] != 0.0:
        raise ValueError("bin edges must start at 0")
    bins = []
    bounds = list(edges) + [math.inf]
    for lo, hi in zip(bounds, bounds[1:]):
        if math.isinf(hi):
            label = f">={lo:.0%}"
        else:
            label = f"[{lo:.0%},{hi:.0%})"
        bins.append(GapBin(lo, hi, label))
    return tuple(bins)


DEFAULT_GAP_BINS = make_gap_bins()


def assign_gap_bin(gap: float, bins: Sequence[GapBin] = DEFAULT_GAP_BINS) -> GapBin:
    if gap < 0 or math.isnan(gap):
        raise ContractError(f"gap must be a non-negative number, got {gap}")
    for b in bins:
        if b.contains(gap):
            return b
    return bins[-1]
