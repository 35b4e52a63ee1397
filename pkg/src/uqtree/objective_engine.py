"""Pairwise objectives and objective-weighted probability distributions.

An objective scores how strongly two sequences count as "the same outcome":
exact syntactic equality, membership in the same hard cluster, or a graded
similarity (soft clustering).  Combining an objective with a filter yields a
weighted probability distribution over the filtered sequences:

    weight(v)  =  f(v) * sum_{v'} o(v, v') * pr(v')  /  Z
    Z          =  sum_{v''} f(v'') * sum_{v'} o(v'', v') * pr(v')

where the sums run over the filtered support and pr is either the incoming
edge probability of a sequence ("edge" mode) or its full path probability
("path" mode, the default for whole-sequence analyses).  Summing the
numerators reproduces Z, so the weights always form a distribution.

Estimated variants restrict the support to sequences an estimator filter
also accepts, multiplying the two multiplicities.  With a Monte Carlo
estimator the pr factor can be dropped ("empirical" counting) so the draw
multiplicities alone carry the probability information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .filter_algebra import Filter, FixedLengthFilter, TrivialFilter, composite
from .sampling_tree import EnumerationBudget, SamplingTree
from .seq_core import TokenSeq


class DegenerateWeightingError(ValueError):
    """The filter/objective combination puts zero weight on everything."""


class EstimatorStarvationError(ValueError):
    """The estimator filter left no sequence of the filtered support alive."""


class Objective:
    kind = "abstract"

    def __call__(self, v: TokenSeq, v2: TokenSeq) -> float:
        raise NotImplementedError

    def describe(self) -> str:
        return self.kind


@dataclass(frozen=True)
class SyntacticObjective(Objective):
    """1 for identical sequences, 0 otherwise."""

    kind = "syntactic"

    def __call__(self, v: TokenSeq, v2: TokenSeq) -> float:
        return 1.0 if v.tokens == v2.tokens else 0.0


@dataclass(frozen=True, eq=False)
class HardClusterObjective(Objective):
    """1 when both sequences fall into the same cluster, 0 otherwise."""

    kind = "hard_cluster"
    assign: Callable[[TokenSeq], object]
    name: str = "hard_cluster"

    @classmethod
    def from_mapping(cls, clusters: Mapping[TokenSeq, object], name: str = "hard_cluster"):
        table = dict(clusters)

        def lookup(v: TokenSeq) -> object:
            try:
                return table[v]
            except KeyError:
                raise KeyError(f"no cluster assignment for '{v.render()}'") from None

        return cls(assign=lookup, name=name)

    @classmethod
    def identity(cls) -> "HardClusterObjective":
        """Each sequence is its own cluster; reduces to syntactic equality."""
        return cls(assign=lambda v: v.render(), name="identity")

    def label_of(self, v: TokenSeq) -> object:
        return self.assign(v)

    def __call__(self, v: TokenSeq, v2: TokenSeq) -> float:
        return 1.0 if self.assign(v) == self.assign(v2) else 0.0

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class SoftClusterObjective(Objective):
    """A symmetric similarity in [0, 1] used as a graded objective.

    Self-similarity must be positive; a sequence that does not count as
    itself makes the weighting meaningless.
    """

    kind = "soft_cluster"
    sim: Callable[[TokenSeq, TokenSeq], float]
    name: str = "soft_cluster"

    def __call__(self, v: TokenSeq, v2: TokenSeq) -> float:
        value = self.sim(v, v2)
        if not (0.0 <= value <= 1.0 + 1e-12):
            raise ValueError(f"similarity {value!r} outside [0, 1]")
        if value <= 0.0 and v.tokens == v2.tokens:
            raise ValueError(f"self-similarity of '{v.render()}' must be positive")
        return value

    def describe(self) -> str:
        return self.name


def jaccard_similarity(a: TokenSeq, b: TokenSeq) -> float:
    """Token-set Jaccard overlap; two empty sequences count as identical."""
    sa, sb = set(a.tokens), set(b.tokens)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def lcs_ratio(a: TokenSeq, b: TokenSeq) -> float:
    """Longest-common-subsequence length over the longer length."""
    if not a.tokens and not b.tokens:
        return 1.0
    n, m = len(a.tokens), len(b.tokens)
    row = [0] * (m + 1)
    for i in range(1, n + 1):
        prev_diag = 0
        for j in range(1, m + 1):
            prev_row = row[j]
            if a.tokens[i - 1] == b.tokens[j - 1]:
                row[j] = prev_diag + 1
            else:
                row[j] = max(row[j], row[j - 1])
            prev_diag = prev_row
    return row[m] / max(n, m)


def similarity_from_matrix(
    seqs: Sequence[TokenSeq], matrix: Sequence[Sequence[float]]
) -> Callable[[TokenSeq, TokenSeq], float]:
    """Similarity lookup backed by a dense matrix over a fixed sequence list."""
    index = {s.tokens: i for i, s in enumerate(seqs)}
    rows = [list(r) for r in matrix]
    if len(rows) != len(seqs) or any(len(r) != len(seqs) for r in rows):
        raise ValueError("similarity matrix shape does not match the sequence list")

    def sim(a: TokenSeq, b: TokenSeq) -> float:
        try:
            return rows[index[a.tokens]][index[b.tokens]]
        except KeyError:
            missing = a if a.tokens not in index else b
            raise KeyError(f"sequence '{missing.render()}' not in similarity matrix") from None

    return sim


@dataclass(frozen=True, eq=False)
class WeightedDist:
    """A filtered, objective-weighted distribution over sequences."""

    entries: tuple[tuple[TokenSeq, float], ...]  # lexicographic by tokens
    objective: Objective
    filter: Filter
    estimator: Optional[Filter]
    mode: str
    normalizer: float
    support_mass: float  # raw path-probability mass of the support
    truncated: bool = False
    path_probs: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        total = math.fsum(w for _, w in self.entries)
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"weighted probabilities sum to {total!r}")
        if any(w < 0.0 for _, w in self.entries):
            raise AssertionError("negative weighted probability")

    def support(self) -> tuple[TokenSeq, ...]:
        return tuple(s for s, _ in self.entries)

    def weight_of(self, seq: TokenSeq) -> float:
        for s, w in self.entries:
            if s.tokens == seq.tokens:
                return w
        return 0.0

    def as_dict(self) -> dict[TokenSeq, float]:
        return dict(self.entries)


def weighted_prob(
    tree: SamplingTree,
    o: Objective,
    f: Filter,
    budget: EnumerationBudget,
    mode: str = "path",
) -> WeightedDist:
    """Objective-weighted probabilities over the filtered support."""
    enum = tree.enumerate_filtered(f, budget)
    if not enum.entries:
        raise DegenerateWeightingError(
            f"filter {f.describe()} accepts nothing within the budget"
        )
    return _weight_support(tree, enum, o, f, None, mode, "model_prob", enum.truncated)


def estimated_weighted_prob(
    tree: SamplingTree,
    o: Objective,
    f: Filter,
    f_hat: Filter,
    budget: EnumerationBudget,
    mode: str = "path",
    count_mode: str = "model_prob",
) -> WeightedDist:
    """Weighted probabilities over the support surviving both filters.

    ``count_mode="model_prob"`` keeps the model's pr factors;
    ``"empirical"`` replaces them by 1 so multiplicity filters (Monte
    Carlo draws) alone weight the estimate.
    """
    enum = tree.enumerate_filtered(composite(f, f_hat), budget)
    if not enum.entries:
        raise EstimatorStarvationError(
            f"estimator {f_hat.describe()} left no support for filter {f.describe()}"
        )
    return _weight_support(tree, enum, o, f, f_hat, mode, count_mode, enum.truncated)


def _weight_support(
    tree: SamplingTree,
    enum,
    o: Objective,
    f: Filter,
    f_hat: Optional[Filter],
    mode: str,
    count_mode: str,
    truncated: bool,
) -> WeightedDist:
    if mode not in ("edge", "path"):
        raise ValueError(f"mode must be 'edge' or 'path', got {mode!r}")
    if count_mode not in ("model_prob", "empirical"):
        raise ValueError(f"unknown count_mode {count_mode!r}")
    seqs = [e.seq for e in enum.entries]
    mults = [e.multiplicity for e in enum.entries]
    path_probs = [e.path_prob for e in enum.entries]
    if count_mode == "empirical":
        pr = [1.0] * len(seqs)
    elif mode == "path":
        pr = path_probs
    else:
        pr = [_edge_prob(tree, s) for s in seqs]
    smoothed = [
        math.fsum(o(v, v2) * p for v2, p in zip(seqs, pr)) for v in seqs
    ]
    numer = [m * s for m, s in zip(mults, smoothed)]
    normalizer = math.fsum(numer)
    if normalizer <= 0.0:
        raise DegenerateWeightingError(
            f"objective {o.describe()} with filter {f.describe()} has zero total weight"
        )
    weights = tuple((v, n / normalizer) for v, n in zip(seqs, numer))
    return WeightedDist(
        entries=weights,
        objective=o,
        filter=f,
        estimator=f_hat,
        mode=mode,
        normalizer=normalizer,
        support_mass=math.fsum(path_probs),
        truncated=truncated,
        path_probs=tuple(path_probs),
    )


def _edge_prob(tree: SamplingTree, seq: TokenSeq) -> float:
    if len(seq) == 0:
        return 1.0
    prefix = seq.subseq(1, len(seq) - 1)
    return tree.model.next_dist(prefix).prob(seq[len(seq) - 1])


def cluster_mass(dist: WeightedDist, o: Objective) -> dict[object, float]:
    """Distribution over cluster ids carried by a weighted distribution.

    For a distribution produced with the same hard clustering, every member
    already reports its whole cluster's (normalized) share, so the cluster
    value is recovered from any member and the values are renormalized
    across clusters.  For per-sequence distributions (syntactic or soft
    weighting) the member weights simply add up.
    """
    if not isinstance(o, HardClusterObjective):
        raise TypeError(f"cluster_mass needs a hard-cluster objective, got {o.kind}")
    members: dict[object, list[float]] = {}
    for seq, w in dist.entries:
        members.setdefault(o.label_of(seq), []).append(w)
    if _same_partition(dist, o):
        raw = {c: math.fsum(ws) / len(ws) for c, ws in members.items()}
    else:
        raw = {c: math.fsum(ws) for c, ws in members.items()}
    total = math.fsum(raw.values())
    if total <= 0.0:
        raise DegenerateWeightingError("cluster masses sum to zero")
    return {c: m / total for c, m in raw.items()}


def _same_partition(dist: WeightedDist, o: HardClusterObjective) -> bool:
    if not isinstance(dist.objective, HardClusterObjective):
        return False
    own: dict[object, set[tuple[int, ...]]] = {}
    given: dict[object, set[tuple[int, ...]]] = {}
    for seq, _ in dist.entries:
        own.setdefault(dist.objective.label_of(seq), set()).add(seq.tokens)
        given.setdefault(o.label_of(seq), set()).add(seq.tokens)
    return sorted(own.values(), key=sorted) == sorted(given.values(), key=sorted)


def hard_cluster_paircount_prob(
    tree: SamplingTree,
    o: HardClusterObjective,
    f: Filter,
    budget: EnumerationBudget,
    mode: str = "path",
) -> dict[TokenSeq, float]:
    """Per-sequence cluster masses normalized by the same-cluster pair count.

    Comparison surface only: dividing a probability sum by a pair count does
    not generally produce a distribution, unlike the weighting equation this
    module is built on.
    """
    enum = tree.enumerate_filtered(f, budget)
    seqs = [e.seq for e in enum.entries]
    pr = (
        [e.path_prob for e in enum.entries]
        if mode == "path"
        else [_edge_prob(tree, s) for s in seqs]
    )
    labels = [o.label_of(s) for s in seqs]
    pair_count = sum(1 for a in labels for b in labels if a == b)
    if pair_count == 0:
        raise DegenerateWeightingError("empty support")
    out = {}
    for v, lab in zip(seqs, labels):
        out[v] = math.fsum(p for l2, p in zip(labels, pr) if l2 == lab) / pair_count
    return out


def generic_weighted_seq_prob(
    tree: SamplingTree,
    v: TokenSeq,
    o: Objective,
    f: Filter,
    budget: EnumerationBudget,
) -> float:
    """Product over depths of the weighted probability of each prefix of v.

    At each depth i the filter is restricted to length-i sequences (its
    composite with a fixed-length filter) and weights are computed in edge
    mode.  Note that termination-style filters reject proper prefixes, which
    zeroes the product; this product form is meaningful only with filters
    that accept sequences at every depth along the way.
    """
    product = 1.0
    for i in range(1, len(v) + 1):
        per_depth = composite(f, FixedLengthFilter(i))
        dist = weighted_prob(tree, o, per_depth, budget, mode="edge")
        factor = dist.weight_of(v.subseq(1, i))
        product *= factor
        if product == 0.0:
            break
    return product
