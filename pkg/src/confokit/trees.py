"""Small CART classifier (Gini impurity) used to explain non-conformance."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from datetime import datetime
from typing import Union

Value = Union[str, int, float, bool, datetime, None]


def gini(positive: int, negative: int) -> float:
    n = positive + negative
    if n == 0:
        return 0.0
    p = positive / n
    return 1.0 - p * p - (1 - p) * (1 - p)


@dataclass(frozen=True)
class Split:
    attribute: str
    kind: str  # "numeric": value <= threshold; "categorical": value == category
    threshold: Value

    def test(self, value: Value) -> bool:
        if value is None:
            return False
        if self.kind == "numeric":
            try:
                return value <= self.threshold  # type: ignore[operator]
            except TypeError:
                return False
        return value == self.threshold

    def __str__(self) -> str:
        op = "<=" if self.kind == "numeric" else "=="
        return f"{self.attribute} {op} {self.threshold!r}"


@dataclass(frozen=True)
class TreeNode:
    """Leaf when ``split`` is None. ``conformant``/``nonconformant`` are the sample counts reaching the node."""

    conformant: int
    nonconformant: int
    split: Split | None = None
    yes: TreeNode | None = None
    no: TreeNode | None = None
    depth: int = 0

    @property
    def samples(self) -> int:
        return self.conformant + self.nonconformant

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def impurity(self) -> float:
        return gini(self.conformant, self.nonconformant)

    def leaves(self) -> list[TreeNode]:
        if self.is_leaf:
            return [self]
        return self.yes.leaves() + self.no.leaves()  # type: ignore[union-attr]

    def internal_nodes(self) -> list[TreeNode]:
        if self.is_leaf:
            return []
        return [self, *self.yes.internal_nodes(), *self.no.internal_nodes()]  # type: ignore[union-attr]

    def height(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.yes.height(), self.no.height())  # type: ignore[union-attr]

    def predict(self, row: Mapping[str, Value]) -> bool:
        """True when the majority at the reached leaf is non-conformant."""
        node = self
        while not node.is_leaf:
            node = node.yes if node.split.test(row.get(node.split.attribute)) else node.no  # type: ignore
        return node.nonconformant > node.conformant


@dataclass(frozen=True)
class ReasonTree:
    root: TreeNode
    attributes: tuple[str, ...]
    max_depth: int
    min_leaf: int

    def render(self) -> str:
        lines: list[str] = []

        def walk(node: TreeNode, indent: str) -> None:
            counts = f"[conformant={node.conformant}, non-conformant={node.nonconformant}]"
            if node.is_leaf:
                lines.append(f"{indent}leaf {counts}")
                return
            lines.append(f"{indent}if {node.split} {counts}")
            walk(node.yes, indent + "  ")  # type: ignore[arg-type]
            lines.append(f"{indent}else")
            walk(node.no, indent + "  ")  # type: ignore[arg-type]

        walk(self.root, "")
        return "\n".join(lines)


def _is_numeric(values: Sequence[Value]) -> bool:
    present = [v for v in values if v is not None]
    return bool(present) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in present
    ) or (bool(present) and all(isinstance(v, datetime) for v in present))


def _candidates(attribute: str, values: Sequence[Value]) -> list[Split]:
    present = [v for v in values if v is not None]
    if not present:
        return []
    if _is_numeric(present):
        distinct = sorted(set(present))
        out = []
        for lo, hi in zip(distinct, distinct[1:]):
            mid = lo + (hi - lo) / 2  # type: ignore[operator]
            out.append(Split(attribute, "numeric", mid))
        return out
    distinct = sorted(set(present), key=lambda v: (type(v).__name__, str(v)))
    if len(distinct) < 2 and len(present) == len(values):
        return []
    return [Split(attribute, "categorical", v) for v in distinct]


def _sort_key(split: Split) -> tuple:
    t = split.threshold
    return (split.attribute, split.kind, type(t).__name__, t if isinstance(t, (int, float)) else str(t))


def grow_tree(
    rows: Sequence[Mapping[str, Value]],
    labels: Sequence[bool],
    attributes: Sequence[str],
    max_depth: int = 3,
    min_leaf: int = 1,
) -> ReasonTree:
    """Greedy binary CART; ``labels`` are True for non-conformant samples.

    A split is made only if it strictly lowers the weighted Gini impurity and
    leaves at least ``min_leaf`` samples on each side. Equal impurity
    reductions are resolved by attribute name, then threshold.
    """
    if max_depth < 0 or min_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
    attrs = tuple(sorted(attributes))

    def build(idx: list[int], depth: int) -> TreeNode:
        neg = sum(1 for i in idx if labels[i])
        pos = len(idx) - neg
        node = TreeNode(pos, neg, depth=depth)
        if depth >= max_depth or pos == 0 or neg == 0 or len(idx) < 2 * min_leaf:
            return node
        parent = gini(pos, neg)
        best: tuple[float, tuple, Split, list[int], list[int]] | None = None
        for attribute in attrs:
            values = [rows[i].get(attribute) for i in idx]
            for split in _candidates(attribute, values):
                yes = [i for i in idx if split.test(rows[i].get(attribute))]
                no = [i for i in idx if not split.test(rows[i].get(attribute))]
                if len(yes) < min_leaf or len(no) < min_leaf:
                    continue
                yes_neg = sum(1 for i in yes if labels[i])
                no_neg = sum(1 for i in no if labels[i])
                weighted = (
                    len(yes) * gini(len(yes) - yes_neg, yes_neg) + len(no) * gini(len(no) - no_neg, no_neg)
                ) / len(idx)
                if weighted >= parent - 1e-12:
                    continue
                key = (round(weighted, 12), _sort_key(split))
                if best is None or key < (round(best[0], 12), best[1]):
                    best = (weighted, _sort_key(split), split, yes, no)
        if best is None:
            return node
        _, _, split, yes, no = best
        return TreeNode(pos, neg, split, build(yes, depth + 1), build(no, depth + 1), depth)

    root = build(list(range(len(rows))), 0)
    return ReasonTree(root, attrs, max_depth, min_leaf)
