"""Tokens, vocabularies, and role-segmented token sequences.

A sequence runs through three stages in a fixed order: prompt tokens, an
end-of-prompt sentinel, output tokens, an end-of-output sentinel,
interpretation tokens, and an end-of-interpretation sentinel.  The last
sentinel is absorbing: once it appears, only further copies of it may
follow.  All types here are immutable values and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

SENTINEL_X_RENDER = "</X>"
SENTINEL_Y_RENDER = "</Y>"
SENTINEL_Z_RENDER = "</Z>"


class SequenceStructureError(ValueError):
    """A token sequence violates the sentinel-order or absorbing rules."""


class VocabularyError(ValueError):
    """A token id is not part of the (extended) vocabulary."""


@dataclass(frozen=True)
class Vocabulary:
    """Ordinary tokens 1..size plus three reserved stage sentinels.

    ``display`` optionally maps token ids to human-readable strings for
    rendering; it must be injective where defined.
    """

    size: int
    eos_x: int
    eos_y: int
    eos_z: int
    display: tuple[tuple[int, str], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.size < 1:
            raise VocabularyError(f"vocabulary size must be >= 1, got {self.size}")
        sentinels = (self.eos_x, self.eos_y, self.eos_z)
        if len(set(sentinels)) != 3:
            raise VocabularyError(f"sentinel ids must be pairwise distinct: {sentinels}")
        for s in sentinels:
            if 1 <= s <= self.size:
                raise VocabularyError(f"sentinel id {s} collides with ordinary tokens 1..{self.size}")
        names = [name for _, name in self.display]
        if len(names) != len(set(names)):
            raise VocabularyError("display table is not injective")
        for tok, _ in self.display:
            if not self.contains(tok):
                raise VocabularyError(f"display entry for unknown token id {tok}")

    @classmethod
    def basic(cls, size: int, display: Optional[Mapping[int, str]] = None) -> "Vocabulary":
        """Vocabulary with the default sentinel layout size+1, size+2, size+3."""
        table = tuple(sorted(display.items())) if display else ()
        return cls(size=size, eos_x=size + 1, eos_y=size + 2, eos_z=size + 3, display=table)

    @property
    def sentinels(self) -> frozenset[int]:
        return frozenset((self.eos_x, self.eos_y, self.eos_z))

    @property
    def extended(self) -> tuple[int, ...]:
        """All token ids, ordinary then sentinels, in a fixed order."""
        return tuple(range(1, self.size + 1)) + tuple(sorted(self.sentinels))

    def is_ordinary(self, token: int) -> bool:
        return 1 <= token <= self.size

    def is_sentinel(self, token: int) -> bool:
        return token in self.sentinels

    def contains(self, token: int) -> bool:
        return self.is_ordinary(token) or self.is_sentinel(token)

    def render_token(self, token: int) -> str:
        if token == self.eos_x:
            return SENTINEL_X_RENDER
        if token == self.eos_y:
            return SENTINEL_Y_RENDER
        if token == self.eos_z:
            return SENTINEL_Z_RENDER
        for tok, name in self.display:
            if tok == token:
                return name
        return str(token)

    def parse_token(self, text: str) -> int:
        """Inverse of render_token: sentinel names, then display names, then ids."""
        if text == SENTINEL_X_RENDER:
            return self.eos_x
        if text == SENTINEL_Y_RENDER:
            return self.eos_y
        if text == SENTINEL_Z_RENDER:
            return self.eos_z
        for tok, name in self.display:
            if name == text:
                return tok
        try:
            token = int(text)
        except ValueError:
            raise VocabularyError(f"unknown token {text!r}") from None
        if not self.contains(token):
            raise VocabularyError(f"token id {token} outside vocabulary")
        return token


@dataclass(frozen=True)
class Segmentation:
    """1-based inclusive index ranges of the three completed stages.

    A range is None while its closing sentinel has not appeared yet; a
    present-but-empty stage is a (start, start-1) interval.
    """

    prompt: Optional[tuple[int, int]]
    output: Optional[tuple[int, int]]
    interpretation: Optional[tuple[int, int]]

    @staticmethod
    def is_empty(r: Optional[tuple[int, int]]) -> bool:
        return r is not None and r[0] > r[1]


@dataclass(frozen=True)
class TokenSeq:
    """An immutable token sequence validated against the stage rules."""

    vocab: Vocabulary
    tokens: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        _validate_tokens(self.vocab, self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[int]:
        return iter(self.tokens)

    def __getitem__(self, idx):  # 0-based, python-native; subseq() is the 1-based API
        return self.tokens[idx]

    @classmethod
    def from_render(cls, vocab: Vocabulary, text: str) -> "TokenSeq":
        parts = text.split()
        return cls(vocab, tuple(vocab.parse_token(p) for p in parts))

    def render(self) -> str:
        return " ".join(self.vocab.render_token(t) for t in self.tokens)

    def subseq(self, p: int, q: int) -> "TokenSeq":
        """Tokens p..q, 1-based inclusive; p = q+1 yields the empty sequence."""
        n = len(self.tokens)
        if not (1 <= p <= q + 1) or q > n or q < 0:
            raise IndexError(f"subseq range [{p}, {q}] invalid for length {n}")
        return TokenSeq(self.vocab, self.tokens[p - 1 : q])

    def is_absorbed(self) -> bool:
        return self.vocab.eos_z in self.tokens

    def legal_next(self) -> tuple[int, ...]:
        """Token ids appendable without violating the type invariants.

        Looser than stage progression: a fragment may close a later stage
        without the earlier sentinels ever appearing.
        """
        v = self.vocab
        if self.is_absorbed():
            return (v.eos_z,)
        legal = list(range(1, v.size + 1))
        if v.eos_x not in self.tokens and v.eos_y not in self.tokens:
            legal.append(v.eos_x)
        if v.eos_y not in self.tokens:
            legal.append(v.eos_y)
        legal.append(v.eos_z)
        return tuple(sorted(legal))

    def next_stage_tokens(self) -> tuple[int, ...]:
        """Token ids a stage-ordered generation process may emit next:
        any ordinary token, plus exactly the next sentinel in the fixed
        prompt/output/interpretation order."""
        v = self.vocab
        if self.is_absorbed():
            return (v.eos_z,)
        if v.eos_y in self.tokens:
            sentinel = v.eos_z
        elif v.eos_x in self.tokens:
            sentinel = v.eos_y
        else:
            sentinel = v.eos_x
        return tuple(sorted(list(range(1, v.size + 1)) + [sentinel]))

    def can_append(self, token: int) -> bool:
        return token in self.legal_next()

    def append(self, token: int) -> "TokenSeq":
        if not self.vocab.contains(token):
            raise VocabularyError(f"token id {token} outside vocabulary")
        if not self.can_append(token):
            raise SequenceStructureError(
                f"cannot append {self.vocab.render_token(token)} after '{self.render()}'"
            )
        return TokenSeq(self.vocab, self.tokens + (token,))

    def startswith(self, other: "TokenSeq") -> bool:
        return self.tokens[: len(other.tokens)] == other.tokens

    def endswith(self, other: "TokenSeq") -> bool:
        n = len(other.tokens)
        return n == 0 or self.tokens[-n:] == other.tokens

    def segment(self) -> Segmentation:
        """Ranges of the completed prompt/output/interpretation stages.

        Each stage ends just before its sentinel and starts after the latest
        earlier sentinel actually present, so fragments missing a stage
        still segment cleanly.
        """
        v = self.vocab
        pos_x = _index_of(self.tokens, v.eos_x)
        pos_y = _index_of(self.tokens, v.eos_y)
        pos_z = _index_of(self.tokens, v.eos_z)
        prompt = (1, pos_x - 1) if pos_x else None
        output = (pos_x + 1, pos_y - 1) if pos_y else None
        interp = (max(pos_x, pos_y) + 1, pos_z - 1) if pos_z else None
        return Segmentation(prompt=prompt, output=output, interpretation=interp)


def _index_of(tokens: tuple[int, ...], token: int) -> int:
    """1-based position of the first occurrence, 0 if absent."""
    try:
        return tokens.index(token) + 1
    except ValueError:
        return 0


def _validate_tokens(vocab: Vocabulary, tokens: tuple[int, ...]) -> None:
    """At most one of each sentinel (before the absorbing tail), present
    sentinels in stage order, and nothing but the absorbing sentinel after
    it first appears.  Earlier sentinels need not be present: subsequences
    of well-formed sequences are well-formed."""
    ranks = {vocab.eos_x: 1, vocab.eos_y: 2, vocab.eos_z: 3}
    seen: set[int] = set()
    max_rank = 0
    absorbed = False
    for t in tokens:
        if not vocab.contains(t):
            raise VocabularyError(f"token id {t} outside vocabulary (size {vocab.size})")
        if absorbed:
            if t != vocab.eos_z:
                raise SequenceStructureError("only the absorbing sentinel may follow it")
            continue
        rank = ranks.get(t)
        if rank is None:
            continue
        if rank in seen:
            raise SequenceStructureError(f"repeated sentinel {vocab.render_token(t)}")
        if rank < max_rank:
            raise SequenceStructureError(
                f"sentinel {vocab.render_token(t)} out of stage order"
            )
        seen.add(rank)
        max_rank = rank
        if t == vocab.eos_z:
            absorbed = True


# Module-level forms of the core operations, matching the library surface.

def subseq(s: TokenSeq, p: int, q: int) -> TokenSeq:
    return s.subseq(p, q)


def segment(s: TokenSeq) -> Segmentation:
    return s.segment()


def is_absorbed(s: TokenSeq) -> bool:
    return s.is_absorbed()
