"""Autoregressive next-token models: tabular, n-gram, and trace replay.

Every backend produces a full distribution over the extended vocabulary for
any well-formed prefix.  The base class enforces the shared contract:
structurally illegal tokens carry zero probability, an absorbed prefix
continues with the absorbing sentinel at probability one, temperature is
applied before normalization, and the result always sums to one.

Sequence probabilities are accumulated in log space; callers see linear
probabilities.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .seq_core import TokenSeq, Vocabulary, VocabularyError

NORM_TOL = 1e-9


class DistributionError(ValueError):
    """A backend produced an unusable next-token distribution."""


class OffTraceError(LookupError):
    """A trace-replay model was queried for a prefix it never recorded."""


class TraceConflictError(ValueError):
    """Two trace records disagree about the distribution at a shared prefix."""

    def __init__(self, message: str, records: tuple[int, ...] = ()) -> None:
        super().__init__(message)
        self.records = records


@dataclass(frozen=True)
class NextTokenDist:
    """Probabilities over the extended vocabulary for one decoding step."""

    entries: tuple[tuple[int, float], ...]  # sorted by token id, zero entries omitted

    def __post_init__(self) -> None:
        total = math.fsum(p for _, p in self.entries)
        if abs(total - 1.0) > NORM_TOL:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        for t, p in self.entries:
            if p < 0.0:
                raise DistributionError(f"negative probability {p!r} for token {t}")

    @classmethod
    def from_mapping(cls, probs: Mapping[int, float]) -> "NextTokenDist":
        items = tuple(sorted((t, p) for t, p in probs.items() if p > 0.0))
        return cls(items)

    def prob(self, token: int) -> float:
        for t, p in self.entries:
            if t == token:
                return p
        return 0.0

    def support(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.entries)

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)


class SeqModel:
    """Base class for next-token models over a shared extended vocabulary.

    Subclasses implement ``_dist_for`` returning (possibly unnormalized)
    linear probabilities for a non-absorbed prefix; masking, temperature,
    normalization, and the absorbing rule live here.  Models are immutable
    after construction and next_dist is pure.
    """

    def __init__(self, vocab: Vocabulary, temperature: float = 1.0) -> None:
        if temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        self.vocab = vocab
        self.temperature = temperature
        self._cache: dict[tuple[int, ...], NextTokenDist] = {}

    def describe(self) -> str:
        return type(self).__name__

    def _dist_for(self, prefix: TokenSeq) -> Mapping[int, float]:
        raise NotImplementedError

    def next_dist(self, prefix: TokenSeq) -> NextTokenDist:
        if prefix.vocab != self.vocab:
            raise VocabularyError("prefix uses a different vocabulary than the model")
        cached = self._cache.get(prefix.tokens)
        if cached is not None:
            return cached
        if prefix.is_absorbed():
            dist = NextTokenDist.from_mapping({self.vocab.eos_z: 1.0})
        else:
            raw = self._dist_for(prefix)
            legal = set(prefix.next_stage_tokens())
            masked = {t: p for t, p in raw.items() if t in legal and p > 0.0}
            if not masked:
                raise DistributionError(
                    f"no probability mass on legal tokens after '{prefix.render()}'"
                )
            if self.temperature != 1.0:
                inv = 1.0 / self.temperature
                masked = {t: p**inv for t, p in masked.items()}
            total = math.fsum(masked.values())
            dist = NextTokenDist.from_mapping({t: p / total for t, p in masked.items()})
        self._cache[prefix.tokens] = dist
        return dist


def seq_prob(model: SeqModel, s: TokenSeq, given: Optional[TokenSeq] = None) -> float:
    """Probability of continuation ``s`` after context ``given`` (chain rule)."""
    if given is None:
        given = TokenSeq(model.vocab)
    logp = 0.0
    ctx = given
    for token in s.tokens:
        p = model.next_dist(ctx).prob(token)
        if p == 0.0:
            return 0.0
        logp += math.log(p)
        ctx = ctx.append(token)
    return math.exp(logp)


def sample(model: SeqModel, given: TokenSeq, rng_seed: int, max_len: int) -> TokenSeq:
    """Ancestral sampling until absorption or ``max_len`` appended tokens.

    A non-absorbed result means the draw was cut off by the length budget;
    TokenSeq.is_absorbed() is the truncation flag.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    rng = random.Random(rng_seed)
    seq = given
    for _ in range(max_len):
        if seq.is_absorbed():
            break
        seq = seq.append(draw_token(model.next_dist(seq), rng))
    return seq


def draw_token(dist: NextTokenDist, rng: random.Random) -> int:
    """Inverse-CDF draw over the distribution's (id-sorted) support."""
    u = rng.random()
    acc = 0.0
    for t, p in dist.entries:
        acc += p
        if u < acc:
            return t
    return dist.entries[-1][0]


class TabularModel(SeqModel):
    """Explicit conditional tables keyed by full prefix token tuples."""

    def __init__(
        self,
        vocab: Vocabulary,
        table: Mapping[tuple[int, ...], Mapping[int, float]],
        default: Optional[Mapping[int, float]] = None,
        temperature: float = 1.0,
        name: str = "tabular",
    ) -> None:
        super().__init__(vocab, temperature)
        self._table = {tuple(k): dict(v) for k, v in table.items()}
        self._default = dict(default) if default is not None else None
        self._name = name

    def describe(self) -> str:
        return self._name

    def _dist_for(self, prefix: TokenSeq) -> Mapping[int, float]:
        row = self._table.get(prefix.tokens)
        if row is None:
            row = self._default
        if row is None:
            raise DistributionError(f"no table row for prefix '{prefix.render()}'")
        return row


class NgramModel(SeqModel):
    """Order-n counts with add-lambda smoothing over the legal followers."""

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        training: Iterable[Sequence[int]],
        lam: float = 0.1,
        temperature: float = 1.0,
    ) -> None:
        super().__init__(vocab, temperature)
        if order < 1:
            raise ValueError("order must be >= 1")
        if lam <= 0.0:
            raise ValueError("smoothing lambda must be positive")
        self.order = order
        self.lam = lam
        counts: dict[tuple[int, ...], dict[int, int]] = {}
        for seq in training:
            toks = tuple(seq)
            for i, t in enumerate(toks):
                ctx = toks[max(0, i - order + 1) : i]
                counts.setdefault(ctx, {}).setdefault(t, 0)
                counts[ctx][t] += 1
        self._counts = counts

    def describe(self) -> str:
        return f"ngram(order={self.order}, lambda={self.lam})"

    def _dist_for(self, prefix: TokenSeq) -> Mapping[int, float]:
        ctx = prefix.tokens[max(0, len(prefix.tokens) - self.order + 1) :]
        row = self._counts.get(ctx, {})
        legal = prefix.next_stage_tokens()
        total = sum(row.get(t, 0) for t in legal) + self.lam * len(legal)
        return {t: (row.get(t, 0) + self.lam) / total for t in legal}


@dataclass(frozen=True)
class TraceRecord:
    """One replayed generation: its tokens and per-step candidate logprobs.

    ``steps[i]`` lists (token id, natural-log probability) candidates for
    predicting ``tokens[i]``, sorted by descending probability; the realized
    token must appear in its own step's list.
    """

    tokens: tuple[int, ...]
    steps: tuple[tuple[tuple[int, float], ...], ...]
    meta: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.steps):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.steps)} steps")
        for tok, step in zip(self.tokens, self.steps):
            probs = [math.exp(lp) for _, lp in step]
            if any(p > 1.0 + NORM_TOL for p in probs):
                raise ValueError("recorded probability exceeds 1")
            if any(probs[i] < probs[i + 1] - 1e-15 for i in range(len(probs) - 1)):
                raise ValueError("step candidates not sorted by descending probability")
            if tok not in {t for t, _ in step}:
                raise ValueError(f"realized token {tok} missing from its step candidates")


class TraceReplayModel(SeqModel):
    """Replays recorded per-prefix distributions; off-trace behavior is
    an error in strict mode and a uniform fallback in lenient mode."""

    def __init__(
        self,
        vocab: Vocabulary,
        prefix_dists: Mapping[tuple[int, ...], Mapping[int, float]],
        strict: bool = True,
        temperature: float = 1.0,
    ) -> None:
        super().__init__(vocab, temperature)
        self._dists = {tuple(k): dict(v) for k, v in prefix_dists.items()}
        self.strict = strict

    def describe(self) -> str:
        mode = "strict" if self.strict else "lenient"
        return f"trace-replay({len(self._dists)} prefixes, {mode})"

    def traced_prefixes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self._dists))

    def _dist_for(self, prefix: TokenSeq) -> Mapping[int, float]:
        row = self._dists.get(prefix.tokens)
        if row is not None:
            return row
        if self.strict:
            raise OffTraceError(f"prefix '{prefix.render()}' not present in the trace")
        legal = prefix.next_stage_tokens()
        return {t: 1.0 / len(legal) for t in legal}


def load_trace_model(
    records: Sequence[TraceRecord],
    smoothing_mass: float,
    vocab: Vocabulary,
    strict: bool = True,
    temperature: float = 1.0,
) -> TraceReplayModel:
    """Build a replay model from trace records.

    Truncated candidate lists keep their recorded probabilities; the
    remaining legal tokens share ``smoothing_mass`` uniformly and the base
    normalization rescales whatever total results.  Duplicate prefixes must
    agree within tolerance or a TraceConflictError is raised.
    """
    if not records:
        raise ValueError("records must be non-empty")
    if not (0.0 <= smoothing_mass < 1.0):
        raise ValueError(f"smoothing_mass must be in [0, 1), got {smoothing_mass}")
    dists: dict[tuple[int, ...], dict[int, float]] = {}
    origin: dict[tuple[int, ...], int] = {}
    for idx, rec in enumerate(records):
        prefix = TokenSeq(vocab, ())
        for tok, step in zip(rec.tokens, rec.steps):
            row = _step_distribution(step, prefix, smoothing_mass)
            key = prefix.tokens
            if key in dists:
                if not _rows_agree(dists[key], row):
                    raise TraceConflictError(
                        f"records {origin[key]} and {idx} disagree at prefix "
                        f"'{prefix.render()}'",
                        records=(origin[key], idx),
                    )
            else:
                dists[key] = row
                origin[key] = idx
            prefix = prefix.append(tok)
    return TraceReplayModel(vocab, dists, strict=strict, temperature=temperature)


def _step_distribution(
    step: tuple[tuple[int, float], ...], prefix: TokenSeq, smoothing_mass: float
) -> dict[int, float]:
    row = {t: math.exp(lp) for t, lp in step}
    unlisted = [t for t in prefix.next_stage_tokens() if t not in row]
    if unlisted and smoothing_mass > 0.0:
        share = smoothing_mass / len(unlisted)
        for t in unlisted:
            row[t] = share
    return row


def _rows_agree(a: Mapping[int, float], b: Mapping[int, float]) -> bool:
    keys = set(a) | set(b)
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= NORM_TOL for k in keys)
