"""Built-in desk-scale models for tests, docs, and the CLI.

These are bit-stable: tests freeze expected values against them.

coin      empty prompt, one output token (heads 0.6 / tails 0.4), then the
          output and interpretation close immediately.
foobar    empty prompt; first output step is foo 0.49 / bar 0.49 / baz 0.02,
          and foo continues with one of two suffixes (0.5 each) before the
          output closes.  The lopsided first step with structure below it is
          what separates path entropy from whole-subtree entropy.
uniform(b, d)   empty prompt, d output tokens drawn uniformly from b, then
          the stages close.
"""

from __future__ import annotations

import re

from .lm_backend import SeqModel, TabularModel
from .seq_core import TokenSeq, Vocabulary


def coin_model() -> TabularModel:
    vocab = Vocabulary.basic(2, display={1: "heads", 2: "tails"})
    x, y, z = vocab.eos_x, vocab.eos_y, vocab.eos_z
    table = {
        (): {x: 1.0},
        (x,): {1: 0.6, 2: 0.4},
        (x, 1): {y: 1.0},
        (x, 2): {y: 1.0},
        (x, 1, y): {z: 1.0},
        (x, 2, y): {z: 1.0},
    }
    return TabularModel(vocab, table, name="fixture:coin")


def foobar_model() -> TabularModel:
    vocab = Vocabulary.basic(
        5, display={1: "foo", 2: "bar", 3: "baz", 4: "lish", 5: "ness"}
    )
    x, y, z = vocab.eos_x, vocab.eos_y, vocab.eos_z
    table = {
        (): {x: 1.0},
        (x,): {1: 0.49, 2: 0.49, 3: 0.02},
        (x, 1): {4: 0.5, 5: 0.5},
        (x, 1, 4): {y: 1.0},
        (x, 1, 5): {y: 1.0},
        (x, 2): {y: 1.0},
        (x, 3): {y: 1.0},
        (x, 1, 4, y): {z: 1.0},
        (x, 1, 5, y): {z: 1.0},
        (x, 2, y): {z: 1.0},
        (x, 3, y): {z: 1.0},
    }
    return TabularModel(vocab, table, name="fixture:foobar")


class UniformModel(SeqModel):
    """Uniform branching over b output tokens to depth d, then forced close."""

    def __init__(self, b: int, d: int) -> None:
        if b < 1 or d < 1:
            raise ValueError("uniform fixture needs b >= 1 and d >= 1")
        super().__init__(Vocabulary.basic(b))
        self.b = b
        self.d = d

    def describe(self) -> str:
        return f"fixture:uniform({self.b},{self.d})"

    def _dist_for(self, prefix: TokenSeq):
        v = self.vocab
        if len(prefix) == 0:
            return {v.eos_x: 1.0}
        if v.eos_y in prefix.tokens:
            return {v.eos_z: 1.0}
        output_len = len(prefix) - 1
        if output_len < self.d:
            return {t: 1.0 / self.b for t in range(1, self.b + 1)}
        return {v.eos_y: 1.0}


FIXTURE_SUMMARY = {
    "coin": "2-token vocab; one output step heads 0.6 / tails 0.4",
    "foobar": "foo 0.49 / bar 0.49 / baz 0.02, foo splits again 0.5/0.5",
    "uniform(b,d)": "d uniform output steps over b tokens",
}

_UNIFORM_RE = re.compile(r"^uniform\(\s*(\d+)\s*,\s*(\d+)\s*\)$")


def fixture(name: str) -> SeqModel:
    """Look up a fixture by name, e.g. 'coin' or 'uniform(2,3)'."""
    if name == "coin":
        return coin_model()
    if name == "foobar":
        return foobar_model()
    match = _UNIFORM_RE.match(name)
    if match:
        return UniformModel(int(match.group(1)), int(match.group(2)))
    raise KeyError(f"unknown fixture {name!r}")
