"""Lazily expanded prefix tree with edge probabilities and bounded enumeration.

Nodes store log-space path probabilities; linear values are computed on
read.  The walk never descends past an absorbed node (its forced tail of
absorbing sentinels carries the same mass), and zero-probability children
are never materialized, so every fixture tree is effectively finite.

``enumerate_filtered`` returns the maximal accepted sequences: those the
filter accepts and that have no accepted strict descendant within the
budgeted walk.  With a termination-style filter this is exactly the set of
complete sequences; with the trivial filter it is the terminated paths plus
the depth frontier, whose mass must be 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .filter_algebra import Filter, TrivialFilter, eval_filter
from .lm_backend import SeqModel
from .seq_core import TokenSeq


@dataclass
class TreeNode:
    prefix: TokenSeq
    log_edge: float = 0.0
    log_path: float = 0.0
    children: Optional[dict[int, "TreeNode"]] = None  # None until expanded

    @property
    def edge_prob(self) -> float:
        return math.exp(self.log_edge)

    @property
    def path_prob(self) -> float:
        return math.exp(self.log_path)

    @property
    def depth(self) -> int:
        return len(self.prefix)


@dataclass(frozen=True)
class EnumerationBudget:
    """Bounds that make walking the (conceptually infinite) tree terminate."""

    max_depth: int
    max_nodes: int = 1_000_000
    min_path_prob: float = 0.0

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")
        if not (0.0 <= self.min_path_prob <= 1.0):
            raise ValueError("min_path_prob must be a probability")


@dataclass(frozen=True)
class EnumeratedSeq:
    seq: TokenSeq
    path_prob: float
    multiplicity: int


@dataclass(frozen=True)
class EnumerationResult:
    entries: tuple[EnumeratedSeq, ...]
    truncated: bool
    visited: int

    def __iter__(self) -> Iterator[EnumeratedSeq]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def total_mass(self) -> float:
        return math.fsum(e.path_prob for e in self.entries)


class SamplingTree:
    """Prefix tree over a model, optionally truncated by an estimator filter.

    When an estimator is given, expansion materializes only children the
    estimator considers viable, e.g. a top-k filter caps the branching
    factor at k.  Expansion is idempotent; repeated calls return the same
    children.
    """

    def __init__(self, model: SeqModel, estimator: Optional[Filter] = None) -> None:
        self.model = model
        self.estimator = estimator
        self.root = TreeNode(prefix=TokenSeq(model.vocab))

    def expand(self, node: TreeNode) -> list[TreeNode]:
        if node.children is None:
            dist = self.model.next_dist(node.prefix)
            children: dict[int, TreeNode] = {}
            for token, p in dist.entries:
                child_prefix = node.prefix.append(token)
                if self.estimator is not None and not self.estimator.viable(child_prefix):
                    continue
                children[token] = TreeNode(
                    prefix=child_prefix,
                    log_edge=math.log(p),
                    log_path=node.log_path + math.log(p),
                )
            node.children = children
        return [node.children[t] for t in sorted(node.children)]

    def node(self, prefix: TokenSeq) -> TreeNode:
        """Materialize and return the node for a prefix; it must be reachable."""
        current = self.root
        for i in range(len(prefix)):
            self.expand(current)
            assert current.children is not None
            child = current.children.get(prefix[i])
            if child is None:
                raise LookupError(
                    f"prefix '{prefix.subseq(1, i + 1).render()}' has probability 0"
                )
            current = child
        return current

    def enumerate_filtered(self, f: Filter, budget: EnumerationBudget) -> EnumerationResult:
        found: list[EnumeratedSeq] = []
        state = _WalkState(budget=budget)
        self._walk(self.root, f, budget, state, found)
        found.sort(key=lambda e: e.seq.tokens)
        return EnumerationResult(
            entries=tuple(found), truncated=state.truncated, visited=state.visited
        )

    def _walk(
        self,
        node: TreeNode,
        f: Filter,
        budget: EnumerationBudget,
        state: "_WalkState",
        found: list[EnumeratedSeq],
    ) -> bool:
        """Depth-first visit; returns whether the subtree holds an accepted node."""
        state.visited += 1
        mult = eval_filter(f, node.prefix)
        accepted_below = False
        absorbed = node.prefix.is_absorbed()
        if not absorbed and node.depth < budget.max_depth:
            for child in self.expand(node):
                if state.visited >= budget.max_nodes:
                    state.truncated = True
                    break
                if budget.min_path_prob > 0.0 and child.path_prob < budget.min_path_prob:
                    if f.viable(child.prefix):
                        state.truncated = True
                    continue
                if not f.viable(child.prefix):
                    continue
                if self._walk(child, f, budget, state, found):
                    accepted_below = True
        elif not absorbed and node.depth == budget.max_depth:
            if mult == 0 and f.viable(node.prefix):
                state.truncated = True  # viable frontier cut before acceptance
        if mult > 0 and not accepted_below:
            found.append(
                EnumeratedSeq(seq=node.prefix, path_prob=node.path_prob, multiplicity=mult)
            )
        return mult > 0 or accepted_below

    def subtree_mass(self, node: TreeNode, depth: int) -> float:
        """Mass reachable from ``node`` within ``depth`` steps of the
        currently materialized structure; unexpanded and absorbed nodes
        count as boundary, so a fully expanded subtree conserves the node's
        own path probability."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if depth == 0 or node.prefix.is_absorbed() or node.children is None:
            return node.path_prob
        return math.fsum(
            self.subtree_mass(child, depth - 1) for child in node.children.values()
        )


@dataclass
class _WalkState:
    budget: EnumerationBudget
    visited: int = 0
    truncated: bool = False


def expand(tree: SamplingTree, node: TreeNode) -> list[TreeNode]:
    return tree.expand(node)


def enumerate_filtered(
    tree: SamplingTree, f: Filter, budget: EnumerationBudget
) -> EnumerationResult:
    return tree.enumerate_filtered(f, budget)


def subtree_mass(tree: SamplingTree, node: TreeNode, depth: int) -> float:
    return tree.subtree_mass(node, depth)


def dump_snapshot(
    tree: SamplingTree, max_depth: int, context: Optional[TokenSeq] = None
) -> str:
    """Deterministic text dump: one node per line with its rendered prefix,
    edge probability, and path probability, to ``max_depth`` steps below the
    context (the root when no context is given)."""
    start = tree.node(context) if context is not None else tree.root
    limit = start.depth + max_depth
    lines = ["uqtree-tree v1"]

    def visit(node: TreeNode) -> None:
        lines.append(
            f"{node.prefix.render()}\t{node.edge_prob:.12g}\t{node.path_prob:.12g}"
        )
        if node.depth < limit and not node.prefix.is_absorbed():
            for child in tree.expand(node):
                visit(child)

    visit(start)
    return "\n".join(lines) + "\n"
