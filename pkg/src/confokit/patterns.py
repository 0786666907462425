"""Apriori frequent itemset mining over per-trace violation types."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from itertools import combinations


def apriori(transactions: Sequence[Iterable[str]], min_support: int) -> dict[frozenset[str], int]:
    """All itemsets contained in at least ``min_support`` transactions, with their support."""
    baskets = [frozenset(t) for t in transactions]
    counts: dict[frozenset[str], int] = {}
    for basket in baskets:
        for item in basket:
            key = frozenset((item,))
            counts[key] = counts.get(key, 0) + 1
    level = {s: n for s, n in counts.items() if n >= min_support}
    frequent = dict(level)
    size = 1
    while level:
        size += 1
        candidates = set()
        prev = set(level)
        for a, b in combinations(sorted(level, key=sorted), 2):
            union = a | b
            if len(union) != size:
                continue
            if all(frozenset(sub) in prev for sub in combinations(sorted(union), size - 1)):
                candidates.add(union)
        level = {}
        for cand in candidates:
            support = sum(1 for basket in baskets if cand <= basket)
            if support >= min_support:
                level[cand] = support
        frequent.update(level)
    return frequent
