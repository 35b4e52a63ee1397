"""Shared test models and helpers."""

from __future__ import annotations

import random

import pytest

from uqtree import SeqModel, TabularModel, TokenSeq, Vocabulary
from uqtree.fixtures import coin_model, foobar_model


@pytest.fixture
def coin():
    return coin_model()


@pytest.fixture
def foobar():
    return foobar_model()


def make_tri_model() -> TabularModel:
    """Three complete outputs a/b/c with path probs 0.5/0.3/0.2."""
    vocab = Vocabulary.basic(3, display={1: "a", 2: "b", 3: "c"})
    x, y, z = vocab.eos_x, vocab.eos_y, vocab.eos_z
    table = {(): {x: 1.0}, (x,): {1: 0.5, 2: 0.3, 3: 0.2}}
    for t in (1, 2, 3):
        table[(x, t)] = {y: 1.0}
        table[(x, t, y)] = {z: 1.0}
    return TabularModel(vocab, table, name="tri")


@pytest.fixture
def tri():
    return make_tri_model()


class GeometricModel(SeqModel):
    """Output stops with probability 0.5 at each step; never fully
    enumerable at any finite depth."""

    def _dist_for(self, prefix: TokenSeq):
        v = self.vocab
        if len(prefix) == 0:
            return {v.eos_x: 1.0}
        if v.eos_y in prefix.tokens:
            return {v.eos_z: 1.0}
        return {1: 0.5, v.eos_y: 0.5}


@pytest.fixture
def geometric():
    return GeometricModel(Vocabulary.basic(1))


def random_terminating_model(seed: int, b: int = 3, depth: int = 5) -> TabularModel:
    """Seeded sparse tabular model guaranteed to absorb within ``depth``.

    Random branching (2-3 children) away from the depth limit; the fastest
    legal sentinel is forced once fewer than three steps remain so every
    path reaches the absorbing sentinel in time.
    """
    assert depth >= 4
    rng = random.Random(seed)
    vocab = Vocabulary.basic(b)
    table: dict[tuple[int, ...], dict[int, float]] = {}
    frontier = [TokenSeq(vocab)]
    while frontier:
        prefix = frontier.pop()
        if prefix.is_absorbed() or prefix.tokens in table:
            continue
        legal = list(prefix.next_stage_tokens())
        if len(prefix) >= depth - 3:
            sentinel = next(t for t in legal if vocab.is_sentinel(t))
            row = {sentinel: 1.0}
        else:
            k = rng.randint(2, min(3, len(legal)))
            support = rng.sample(legal, k)
            weights = [rng.random() + 0.1 for _ in support]
            total = sum(weights)
            row = {t: w / total for t, w in zip(support, weights)}
        table[prefix.tokens] = row
        for t in row:
            frontier.append(TokenSeq(vocab, prefix.tokens + (t,)))
    return TabularModel(vocab, table, name=f"random-{seed}")


def all_valid_seqs(vocab: Vocabulary, max_len: int) -> list[TokenSeq]:
    """Every well-formed sequence over the extended vocabulary up to a length."""
    out = [TokenSeq(vocab)]
    frontier = [TokenSeq(vocab)]
    for _ in range(max_len):
        nxt = []
        for s in frontier:
            for t in s.legal_next():
                ext = TokenSeq(vocab, s.tokens + (t,))
                nxt.append(ext)
                out.append(ext)
        frontier = nxt
    return out
