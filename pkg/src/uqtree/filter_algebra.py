"""Multiplicity-valued filters over token sequences, with composition.

A filter maps a sequence to a non-negative integer: how many times that
sequence passes.  Task filters (end-of-stage, single-token, fixed-length,
prefix, suffix, prompt-set) are binary; estimator filters additionally
restrict which part of the tree a computation sees (top-k and
probability-mass truncation stay binary, Monte Carlo counts draws).

Filters are pure immutable values.  ``viable`` is an enumeration hint: it
may return False only when provably no walked extension of the prefix
(including the prefix itself) can be accepted.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .lm_backend import NextTokenDist, SeqModel, draw_token
from .seq_core import TokenSeq


class Filter:
    kind = "abstract"

    def __call__(self, v: TokenSeq) -> int:
        raise NotImplementedError

    def viable(self, v: TokenSeq) -> bool:
        return True

    def describe(self) -> str:
        return self.kind


def eval_filter(f: Filter, v: TokenSeq) -> int:
    """Multiplicity of ``v`` under ``f`` (0 means filtered out)."""
    m = f(v)
    if m < 0:
        raise ValueError(f"filter {f.describe()} returned negative multiplicity {m}")
    return m


@dataclass(frozen=True)
class TrivialFilter(Filter):
    kind = "trivial"

    def __call__(self, v: TokenSeq) -> int:
        return 1


@dataclass(frozen=True)
class EosYFilter(Filter):
    """Accepts sequences ending exactly at the end-of-output sentinel."""

    kind = "eos_y"

    def __call__(self, v: TokenSeq) -> int:
        return int(len(v) > 0 and v[-1] == v.vocab.eos_y)


@dataclass(frozen=True)
class EosZFilter(Filter):
    """Accepts sequences ending at the end-of-interpretation sentinel."""

    kind = "eos_z"

    def __call__(self, v: TokenSeq) -> int:
        return int(len(v) > 0 and v[-1] == v.vocab.eos_z)


@dataclass(frozen=True)
class FixedLengthFilter(Filter):
    kind = "fixed_length"
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("length must be >= 0")

    def __call__(self, v: TokenSeq) -> int:
        return int(len(v) == self.n)

    def viable(self, v: TokenSeq) -> bool:
        return len(v) <= self.n

    def describe(self) -> str:
        return f"fixed_length({self.n})"


@dataclass(frozen=True)
class PrefixFilter(Filter):
    """Accepts sequences that start with the reference path."""

    kind = "prefix"
    reference: TokenSeq

    def __call__(self, v: TokenSeq) -> int:
        return int(len(v) >= len(self.reference) and v.startswith(self.reference))

    def viable(self, v: TokenSeq) -> bool:
        k = min(len(v), len(self.reference))
        return v.tokens[:k] == self.reference.tokens[:k]

    def describe(self) -> str:
        return f"prefix({self.reference.render()})"


@dataclass(frozen=True)
class SuffixFilter(Filter):
    """Accepts sequences that end with the reference path."""

    kind = "suffix"
    reference: TokenSeq

    def __call__(self, v: TokenSeq) -> int:
        return int(len(v) >= len(self.reference) and v.endswith(self.reference))

    def describe(self) -> str:
        return f"suffix({self.reference.render()})"


@dataclass(frozen=True)
class SingleTokenFilter(Filter):
    """Accepts the reference-length sequences sharing all but the last token:
    the complete sibling set of the reference's final decision."""

    kind = "single_token"
    reference: TokenSeq

    def __post_init__(self) -> None:
        if len(self.reference) < 1:
            raise ValueError("single-token filter needs a non-empty reference")

    def __call__(self, v: TokenSeq) -> int:
        n = len(self.reference)
        return int(len(v) == n and v.tokens[: n - 1] == self.reference.tokens[: n - 1])

    def viable(self, v: TokenSeq) -> bool:
        n = len(self.reference)
        k = min(len(v), n - 1)
        return len(v) <= n and v.tokens[:k] == self.reference.tokens[:k]

    def describe(self) -> str:
        return f"single_token({self.reference.render()})"


@dataclass(frozen=True)
class PromptSetFilter(Filter):
    """Accepts sequences extending any prompt in the set."""

    kind = "prompt_set"
    prompts: tuple[TokenSeq, ...]

    def __post_init__(self) -> None:
        if not self.prompts:
            raise ValueError("prompt set must be non-empty")

    def __call__(self, v: TokenSeq) -> int:
        return int(any(v.startswith(p) and len(v) >= len(p) for p in self.prompts))

    def viable(self, v: TokenSeq) -> bool:
        for p in self.prompts:
            k = min(len(v), len(p))
            if v.tokens[:k] == p.tokens[:k]:
                return True
        return False

    def describe(self) -> str:
        return "prompt_set(" + " | ".join(p.render() for p in self.prompts) + ")"


@dataclass(frozen=True)
class CompositeFilter(Filter):
    """Pointwise product of its parts."""

    kind = "composite"
    parts: tuple[Filter, ...]

    def __call__(self, v: TokenSeq) -> int:
        m = 1
        for f in self.parts:
            m *= f(v)
            if m == 0:
                return 0
        return m

    def viable(self, v: TokenSeq) -> bool:
        return all(f.viable(v) for f in self.parts)

    def describe(self) -> str:
        return "composite(" + ", ".join(f.describe() for f in self.parts) + ")"


def composite(*filters: Filter) -> Filter:
    """Combine filters into their pointwise product, flattening nesting."""
    parts: list[Filter] = []
    for f in filters:
        if isinstance(f, CompositeFilter):
            parts.extend(f.parts)
        elif not isinstance(f, TrivialFilter):
            parts.append(f)
    if not parts:
        return TrivialFilter()
    if len(parts) == 1:
        return parts[0]
    return CompositeFilter(parts=tuple(parts))


# --- Estimator filters -------------------------------------------------------


def _ranked_support(dist: NextTokenDist, tie_seed: Optional[int]) -> list[tuple[int, float]]:
    """Positive-probability tokens, best first; ties broken by lowest id or,
    when a tie seed is given, by a seeded shuffle."""
    entries = list(dist.entries)
    if tie_seed is None:
        entries.sort(key=lambda tp: (-tp[1], tp[0]))
    else:
        tokens = [t for t, _ in entries]
        shuffled = random.Random(tie_seed).sample(tokens, len(tokens))
        order = {t: i for i, t in enumerate(shuffled)}
        entries.sort(key=lambda tp: (-tp[1], order[tp[0]]))
    return entries


@dataclass(frozen=True, eq=False)
class TopKFilter(Filter):
    """Accepts sequences whose every step stays within the k most likely
    children of its prefix."""

    kind = "top_k"
    model: SeqModel
    k: int
    tie_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def step_set(self, prefix: TokenSeq) -> tuple[int, ...]:
        ranked = _ranked_support(self.model.next_dist(prefix), self.tie_seed)
        return tuple(t for t, _ in ranked[: self.k])

    def __call__(self, v: TokenSeq) -> int:
        prefix = TokenSeq(v.vocab)
        for t in v.tokens:
            if t not in self.step_set(prefix):
                return 0
            prefix = prefix.append(t)
        return 1

    viable = __call__  # prefix-closed: a failing step dooms every extension

    def describe(self) -> str:
        return f"top_k({self.k})"


@dataclass(frozen=True, eq=False)
class ProbMassFilter(Filter):
    """Accepts sequences whose every step stays within the smallest
    highest-probability child set exceeding the mass threshold.

    The threshold comparison is strict (mass > pm) by default; the
    conventional nucleus-sampling rule (mass >= pm) is available via
    ``inclusive=True``.
    """

    kind = "prob_mass"
    model: SeqModel
    pm: float
    inclusive: bool = False
    tie_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.pm < 1.0):
            raise ValueError(f"pm must be in [0, 1), got {self.pm}")

    def step_set(self, prefix: TokenSeq) -> tuple[int, ...]:
        ranked = _ranked_support(self.model.next_dist(prefix), self.tie_seed)
        chosen: list[int] = []
        acc = 0.0
        for t, p in ranked:
            chosen.append(t)
            acc = math.fsum([acc, p])
            if (acc >= self.pm) if self.inclusive else (acc > self.pm):
                break
        return tuple(chosen)

    def __call__(self, v: TokenSeq) -> int:
        prefix = TokenSeq(v.vocab)
        for t in v.tokens:
            if t not in self.step_set(prefix):
                return 0
            prefix = prefix.append(t)
        return 1

    viable = __call__

    def describe(self) -> str:
        cmp = ">=" if self.inclusive else ">"
        return f"prob_mass({cmp}{self.pm})"


@dataclass(frozen=True, eq=False)
class MonteCarloDraw:
    """Record of r seeded ancestral draws: the drawn multiset and provenance."""

    counts: tuple[tuple[TokenSeq, int], ...]
    sample_count: int
    seed: int
    context: TokenSeq
    model: SeqModel
    truncated_count: int = 0

    def as_dict(self) -> dict[TokenSeq, int]:
        return dict(self.counts)


@dataclass(frozen=True, eq=False)
class MonteCarloFilter(Filter):
    """Multiplicity filter counting how often each sequence was drawn."""

    kind = "monte_carlo"
    draw: MonteCarloDraw
    _prefixes: frozenset[tuple[int, ...]] = field(repr=False, default=frozenset())

    def __call__(self, v: TokenSeq) -> int:
        return self.draw.as_dict().get(v, 0)

    def viable(self, v: TokenSeq) -> bool:
        return v.tokens in self._prefixes

    def describe(self) -> str:
        return f"mc(r={self.draw.sample_count}, seed={self.draw.seed})"


def make_topk_filter(m: SeqModel, k: int, tie_seed: Optional[int] = None) -> TopKFilter:
    return TopKFilter(model=m, k=k, tie_seed=tie_seed)


def make_prob_mass_filter(
    m: SeqModel, pm: float, inclusive: bool = False, tie_seed: Optional[int] = None
) -> ProbMassFilter:
    return ProbMassFilter(model=m, pm=pm, inclusive=inclusive, tie_seed=tie_seed)


def make_mc_filter(
    m: SeqModel,
    context: TokenSeq,
    stop: Filter,
    r: int,
    seed: int,
    max_len: int = 64,
) -> tuple[MonteCarloFilter, MonteCarloDraw]:
    """Draw r sequences continuing ``context`` until ``stop`` accepts.

    Draws that hit ``max_len`` before the stop filter fires are excluded
    from the counts and reported via ``truncated_count``; when none are
    truncated the multiplicities sum to r.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    rng = random.Random(seed)
    counts: dict[TokenSeq, int] = {}
    truncated = 0
    for _ in range(r):
        seq = _draw_until(m, context, stop, rng, max_len)
        if seq is None:
            truncated += 1
        else:
            counts[seq] = counts.get(seq, 0) + 1
    ordered = tuple(sorted(counts.items(), key=lambda kv: kv[0].tokens))
    draw = MonteCarloDraw(
        counts=ordered,
        sample_count=r,
        seed=seed,
        context=context,
        model=m,
        truncated_count=truncated,
    )
    prefixes = frozenset(
        seq.tokens[:i] for seq, _ in ordered for i in range(len(seq) + 1)
    )
    return MonteCarloFilter(draw=draw, _prefixes=prefixes), draw


def _draw_until(
    m: SeqModel, context: TokenSeq, stop: Filter, rng: random.Random, max_len: int
) -> Optional[TokenSeq]:
    seq = context
    steps = 0
    while stop(seq) == 0:
        if steps >= max_len:
            return None
        seq = seq.append(draw_token(m.next_dist(seq), rng))
        steps += 1
    return seq
