"""Entropy-based uncertainty measures over sampling trees, plus analysis
recipes and an independent brute-force reference.

Four entropy notions are provided.  Per-token entropy scores one decoding
decision.  Path entropy sums the decision entropies along one concrete
sequence, which sees only the subtrees that sequence passes through.
Subtree entropy scores the full distribution over terminated continuations
of a context, and weighted entropy generalizes it by an objective: with a
hard clustering it becomes the entropy over cluster masses (semantic
entropy), with a similarity kernel the entropy of the smoothed weights.

All values default to nats; pass units="bits" to rescale.  0 * log 0 is 0
throughout.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .filter_algebra import (
    EosYFilter,
    Filter,
    MonteCarloFilter,
    PrefixFilter,
    PromptSetFilter,
    TrivialFilter,
    composite,
)
from .lm_backend import SeqModel, seq_prob
from .objective_engine import (
    HardClusterObjective,
    Objective,
    SoftClusterObjective,
    SyntacticObjective,
    WeightedDist,
    cluster_mass,
    estimated_weighted_prob,
)
from .sampling_tree import EnumerationBudget, SamplingTree
from .seq_core import TokenSeq


class InsufficientCoverageError(RuntimeError):
    """Exact-mode enumeration covered too little probability mass."""


class OracleScaleError(ValueError):
    """The brute-force reference would enumerate too many sequences."""


def _entropy(probs, units: str) -> float:
    h = -math.fsum(p * math.log(p) for p in probs if p > 0.0)
    h = max(h, 0.0)
    if units == "bits":
        return h / math.log(2.0)
    if units != "nats":
        raise ValueError(f"units must be 'nats' or 'bits', got {units!r}")
    return h


@dataclass(frozen=True)
class EntropyReport:
    value: float
    units: str
    kind: str
    coverage: Optional[float] = None
    truncated: bool = False
    filter_desc: str = ""
    objective_desc: str = ""
    estimator_desc: str = ""


@dataclass(frozen=True)
class RecipeResult:
    recipe: str
    inputs_digest: str
    entropy: Optional[EntropyReport] = None
    distribution: Optional[tuple[tuple[str, float], ...]] = None
    diagnostics: tuple[tuple[str, object], ...] = field(default=(), compare=False)

    def diag(self, key: str) -> object:
        return dict(self.diagnostics)[key]


def token_entropy(m: SeqModel, prefix: TokenSeq, units: str = "nats") -> EntropyReport:
    """Entropy of the next-token decision after ``prefix``."""
    dist = m.next_dist(prefix)
    value = _entropy((p for _, p in dist.entries), units)
    return EntropyReport(value=value, units=units, kind="per_token", coverage=1.0)


def path_entropy(
    m: SeqModel, v: TokenSeq, from_index: int = 1, units: str = "nats"
) -> EntropyReport:
    """Sum of the per-step decision entropies along ``v`` from a 1-based
    position; sees only the sibling sets this particular path visits."""
    if not (1 <= from_index <= len(v) + 1):
        raise IndexError(f"from_index {from_index} invalid for length {len(v)}")
    total = math.fsum(
        token_entropy(m, v.subseq(1, i - 1), units).value
        for i in range(from_index, len(v) + 1)
    )
    return EntropyReport(value=total, units=units, kind="path", coverage=None)


def subtree_entropy(
    tree: SamplingTree,
    context: TokenSeq,
    stop: Filter,
    budget: EnumerationBudget,
    units: str = "nats",
    coverage_floor: Optional[float] = 0.999,
) -> EntropyReport:
    """Entropy over the terminated continuations of ``context``.

    ``stop`` decides termination (it sees the full sequence).  Coverage is
    the conditional mass actually enumerated; in exact mode a floor below
    it raises instead of silently biasing the entropy downward.
    """
    ctx_node = tree.node(context)
    enum = tree.enumerate_filtered(composite(PrefixFilter(context), stop), budget)
    cond = [e.path_prob / ctx_node.path_prob for e in enum.entries]
    coverage = math.fsum(cond)
    if coverage_floor is not None and coverage < coverage_floor:
        raise InsufficientCoverageError(
            f"enumerated only {coverage:.6g} of the continuation mass "
            f"(floor {coverage_floor})"
        )
    value = _entropy(cond, units)
    return EntropyReport(
        value=value,
        units=units,
        kind="subtree",
        coverage=coverage,
        truncated=enum.truncated,
        filter_desc=stop.describe(),
    )


def weighted_entropy(dist: WeightedDist, units: str = "nats") -> EntropyReport:
    """Entropy of a weighted distribution: over cluster masses for a
    hard-cluster objective, over the support weights otherwise."""
    if isinstance(dist.objective, HardClusterObjective):
        masses = cluster_mass(dist, dist.objective)
        value = _entropy(masses.values(), units)
    else:
        value = _entropy((w for _, w in dist.entries), units)
    return EntropyReport(
        value=value,
        units=units,
        kind="weighted",
        coverage=dist.support_mass,
        truncated=dist.truncated,
        filter_desc=dist.filter.describe(),
        objective_desc=dist.objective.describe(),
        estimator_desc=dist.estimator.describe() if dist.estimator else "",
    )


# --- Recipes ------------------------------------------------------------------


def _digest(*parts: object) -> str:
    text = "|".join(repr(p) for p in parts)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _contains_mc(f: Filter) -> bool:
    if isinstance(f, MonteCarloFilter):
        return True
    parts = getattr(f, "parts", ())
    return any(_contains_mc(p) for p in parts)


def _pick_count_mode(estimator: Filter) -> str:
    # draw multiplicities already carry the probabilities; model factors
    # would double-count them
    return "empirical" if _contains_mc(estimator) else "model_prob"


def _weighted_pipeline(
    m: SeqModel,
    task_filter: Filter,
    objective: Objective,
    estimator: Optional[Filter],
    budget: EnumerationBudget,
    context_mass: float,
) -> tuple[WeightedDist, float]:
    tree = SamplingTree(m)
    f_hat = estimator if estimator is not None else TrivialFilter()
    dist = estimated_weighted_prob(
        tree,
        objective,
        task_filter,
        f_hat,
        budget,
        mode="path",
        count_mode=_pick_count_mode(f_hat),
    )
    coverage = dist.support_mass / context_mass if context_mass > 0.0 else 0.0
    return dist, coverage


def recipe_semantic_entropy(
    m: SeqModel,
    prompt: TokenSeq,
    clusters: HardClusterObjective,
    estimator: Optional[Filter] = None,
    budget: EnumerationBudget = EnumerationBudget(max_depth=16),
    units: str = "nats",
) -> RecipeResult:
    """Entropy over hard-cluster masses of the complete outputs for a prompt."""
    task = composite(PrefixFilter(prompt), EosYFilter())
    dist, coverage = _weighted_pipeline(
        m, task, clusters, estimator, budget, seq_prob(m, prompt)
    )
    masses = cluster_mass(dist, clusters)
    report = EntropyReport(
        value=_entropy(masses.values(), units),
        units=units,
        kind="weighted",
        coverage=coverage,
        truncated=dist.truncated,
        filter_desc=task.describe(),
        objective_desc=clusters.describe(),
        estimator_desc=dist.estimator.describe() if dist.estimator else "",
    )
    return RecipeResult(
        recipe="semantic_entropy",
        inputs_digest=_digest(m.describe(), prompt.render(), clusters.describe(), budget),
        entropy=report,
        distribution=_label_dist(masses),
        diagnostics=(("support_size", len(dist.entries)),),
    )


def recipe_similarity_entropy(
    m: SeqModel,
    prompt: TokenSeq,
    sim: SoftClusterObjective,
    estimator: Optional[Filter] = None,
    budget: EnumerationBudget = EnumerationBudget(max_depth=16),
    units: str = "nats",
) -> RecipeResult:
    """Entropy of similarity-smoothed weights of the outputs for a prompt."""
    task = composite(PrefixFilter(prompt), EosYFilter())
    dist, coverage = _weighted_pipeline(
        m, task, sim, estimator, budget, seq_prob(m, prompt)
    )
    report = EntropyReport(
        value=_entropy((w for _, w in dist.entries), units),
        units=units,
        kind="weighted",
        coverage=coverage,
        truncated=dist.truncated,
        filter_desc=task.describe(),
        objective_desc=sim.describe(),
        estimator_desc=dist.estimator.describe() if dist.estimator else "",
    )
    return RecipeResult(
        recipe="similarity_entropy",
        inputs_digest=_digest(m.describe(), prompt.render(), sim.describe(), budget),
        entropy=report,
        distribution=tuple((s.render(), w) for s, w in dist.entries),
        diagnostics=(("support_size", len(dist.entries)),),
    )


def recipe_self_consistency(
    m: SeqModel,
    prompts: Sequence[TokenSeq],
    categories: HardClusterObjective,
    estimator: Optional[Filter] = None,
    budget: EnumerationBudget = EnumerationBudget(max_depth=16),
    units: str = "nats",
) -> RecipeResult:
    """Pooled category distribution of outputs across a set of prompts,
    with exact per-prompt conditional distributions as diagnostics."""
    if not prompts:
        raise ValueError("prompts must be non-empty")
    task = composite(PromptSetFilter(tuple(prompts)), EosYFilter())
    prompt_mass = math.fsum(seq_prob(m, p) for p in prompts)
    dist, coverage = _weighted_pipeline(m, task, categories, estimator, budget, prompt_mass)
    masses = cluster_mass(dist, categories)
    per_prompt = []
    for p in prompts:
        p_dist, _ = _weighted_pipeline(
            m, composite(PrefixFilter(p), EosYFilter()), categories, None, budget,
            seq_prob(m, p),
        )
        per_prompt.append((p.render(), _label_dist(cluster_mass(p_dist, categories))))
    report = EntropyReport(
        value=_entropy(masses.values(), units),
        units=units,
        kind="weighted",
        coverage=coverage,
        truncated=dist.truncated,
        filter_desc=task.describe(),
        objective_desc=categories.describe(),
        estimator_desc=dist.estimator.describe() if dist.estimator else "",
    )
    return RecipeResult(
        recipe="self_consistency",
        inputs_digest=_digest(
            m.describe(), [p.render() for p in prompts], categories.describe(), budget
        ),
        entropy=report,
        distribution=_label_dist(masses),
        diagnostics=(("per_prompt", tuple(per_prompt)),),
    )


def recipe_prompt_sensitivity(
    m: SeqModel,
    prompts: Sequence[TokenSeq],
    objective: Optional[Objective] = None,
    estimator: Optional[Filter] = None,
    budget: EnumerationBudget = EnumerationBudget(max_depth=16),
    units: str = "nats",
) -> RecipeResult:
    """Pooled output entropy across prompt variations, next to each prompt's
    own conditional entropy; the gap is what the prompt wording adds."""
    if not prompts:
        raise ValueError("prompts must be non-empty")
    obj = objective if objective is not None else SyntacticObjective()
    task = composite(PromptSetFilter(tuple(prompts)), EosYFilter())
    prompt_mass = math.fsum(seq_prob(m, p) for p in prompts)
    dist, coverage = _weighted_pipeline(m, task, obj, estimator, budget, prompt_mass)
    pooled = weighted_entropy(dist, units)
    per_prompt = []
    for p in prompts:
        p_dist, _ = _weighted_pipeline(
            m, composite(PrefixFilter(p), EosYFilter()), obj, None, budget, seq_prob(m, p)
        )
        per_prompt.append((p.render(), weighted_entropy(p_dist, units).value))
    report = EntropyReport(
        value=pooled.value,
        units=units,
        kind="weighted",
        coverage=coverage,
        truncated=dist.truncated,
        filter_desc=task.describe(),
        objective_desc=obj.describe(),
        estimator_desc=dist.estimator.describe() if dist.estimator else "",
    )
    return RecipeResult(
        recipe="prompt_sensitivity",
        inputs_digest=_digest(
            m.describe(), [p.render() for p in prompts], obj.describe(), budget
        ),
        entropy=report,
        diagnostics=(("per_prompt_entropy", tuple(per_prompt)),),
    )


def recipe_sequence_probability(
    m: SeqModel, sequence: TokenSeq, context: Optional[TokenSeq] = None
) -> RecipeResult:
    """Chain-rule probability of one concrete continuation, step by step."""
    ctx = context if context is not None else TokenSeq(m.vocab)
    steps = []
    running = ctx
    for t in sequence.tokens:
        p = m.next_dist(running).prob(t)
        steps.append((running.vocab.render_token(t), p))
        running = running.append(t)
    total = seq_prob(m, sequence, ctx)
    return RecipeResult(
        recipe="sequence_probability",
        inputs_digest=_digest(m.describe(), sequence.render(), ctx.render()),
        diagnostics=(
            ("probability", total),
            ("log_probability", math.log(total) if total > 0.0 else float("-inf")),
            ("per_step", tuple(steps)),
        ),
    )


def _label_dist(masses: Mapping[object, float]) -> tuple[tuple[str, float], ...]:
    return tuple(sorted((str(k), v) for k, v in masses.items()))


# --- Brute-force reference ----------------------------------------------------


def oracle_exact(
    m: SeqModel,
    f: Filter,
    o: Objective,
    max_depth: int,
    mode: str = "path",
) -> tuple[WeightedDist, EntropyReport]:
    """Recompute the weighted distribution and its entropy the slow way.

    No tree, no laziness, no log space, no compensated summation: plain
    recursion over every positive-probability sequence up to the depth,
    direct double sums for the weighting, and direct cluster sums for the
    entropy.  Meant purely for differential testing.
    """
    size = len(m.vocab.extended)
    if size**max_depth > 1_000_000:
        raise OracleScaleError(
            f"{size}^{max_depth} sequences exceed the brute-force guard"
        )
    walked: list[tuple[TokenSeq, float]] = []
    _oracle_walk(m, TokenSeq(m.vocab), 1.0, max_depth, walked)

    accepted = [(v, p, f(v)) for v, p in walked if f(v) > 0]
    maximal = []
    for v, p, mult in accepted:
        nested = any(
            len(w.tokens) > len(v.tokens) and w.tokens[: len(v.tokens)] == v.tokens
            for w, _, _ in accepted
        )
        if not nested:
            maximal.append((v, p, mult))
    maximal.sort(key=lambda e: e[0].tokens)

    seqs = [v for v, _, _ in maximal]
    path_probs = [p for _, p, _ in maximal]
    if mode == "path":
        pr = path_probs
    elif mode == "edge":
        pr = [
            m.next_dist(v.subseq(1, len(v) - 1)).prob(v[len(v) - 1]) if len(v) else 1.0
            for v in seqs
        ]
    else:
        raise ValueError(f"mode must be 'edge' or 'path', got {mode!r}")

    numer = []
    for (v, _, mult) in maximal:
        smoothed = sum(o(v, v2) * p2 for v2, p2 in zip(seqs, pr))
        numer.append(mult * smoothed)
    normalizer = sum(numer)
    if normalizer <= 0.0:
        raise ValueError("oracle: zero total weight for this filter/objective")
    weights = [n / normalizer for n in numer]

    if isinstance(o, HardClusterObjective):
        by_cluster: dict[object, float] = {}
        for v, p in zip(seqs, pr):
            lab = o.label_of(v)
            by_cluster[lab] = by_cluster.get(lab, 0.0) + p
        total = sum(by_cluster.values())
        entropy_probs = [mass / total for mass in by_cluster.values()]
    else:
        entropy_probs = weights
    h = -sum(p * math.log(p) for p in entropy_probs if p > 0.0)

    dist = WeightedDist(
        entries=tuple(zip(seqs, weights)),
        objective=o,
        filter=f,
        estimator=None,
        mode=mode,
        normalizer=normalizer,
        support_mass=sum(path_probs),
        truncated=False,
        path_probs=tuple(path_probs),
    )
    report = EntropyReport(
        value=max(h, 0.0),
        units="nats",
        kind="weighted",
        coverage=sum(path_probs),
        truncated=False,
        filter_desc=f.describe(),
        objective_desc=o.describe(),
    )
    return dist, report


def _oracle_walk(
    m: SeqModel,
    prefix: TokenSeq,
    p: float,
    depth_left: int,
    out: list[tuple[TokenSeq, float]],
) -> None:
    out.append((prefix, p))
    if depth_left == 0 or prefix.is_absorbed():
        return
    dist = m.next_dist(prefix)
    for t in m.vocab.extended:
        pt = dist.prob(t)
        if pt == 0.0:
            continue
        _oracle_walk(m, prefix.append(t), p * pt, depth_left - 1, out)
