"""Filter definitions, composition laws, and estimator filters."""

import math
import random

import pytest

from uqtree import (
    CompositeFilter,
    EnumerationBudget,
    EosYFilter,
    EosZFilter,
    FixedLengthFilter,
    PrefixFilter,
    PromptSetFilter,
    SamplingTree,
    SingleTokenFilter,
    SuffixFilter,
    TabularModel,
    TokenSeq,
    TrivialFilter,
    Vocabulary,
    composite,
    eval_filter,
    make_mc_filter,
    make_prob_mass_filter,
    make_topk_filter,
)

from conftest import all_valid_seqs


@pytest.fixture
def vocab():
    return Vocabulary.basic(3)


def ts(vocab, *tokens):
    return TokenSeq(vocab, tuple(tokens))


class TestTaskFilters:
    def test_end_of_output_cases(self, vocab):
        f = EosYFilter()
        assert eval_filter(f, ts(vocab, 1, vocab.eos_x, 2, vocab.eos_y)) == 1
        assert eval_filter(f, ts(vocab, 1, vocab.eos_x, 2)) == 0
        assert eval_filter(f, ts(vocab)) == 0

    def test_single_token_cases(self, vocab):
        ref = ts(vocab, 1, 2, 3)
        f = SingleTokenFilter(ref)
        assert f(ts(vocab, 1, 2, 1)) == 1  # same length, same first two
        assert f(ts(vocab, 1, 2, 3)) == 1
        assert f(ts(vocab, 1, 3, 3)) == 0
        assert f(ts(vocab, 1, 2, 3, 1)) == 0  # length mismatch

    def test_prefix_suffix_composite_product(self, vocab):
        pre = PrefixFilter(ts(vocab, 1, 2))
        suf = SuffixFilter(ts(vocab, 3, 1))
        both = composite(pre, suf)
        s = ts(vocab, 1, 2, 3, 1)
        assert pre(s) == 1 and suf(s) == 1 and both(s) == 1
        assert both(ts(vocab, 1, 2, 3)) == 0

    def test_prefix_rejects_shorter_sequences(self, vocab):
        f = PrefixFilter(ts(vocab, 1, 2))
        assert f(ts(vocab, 1)) == 0

    def test_prompt_set_accepts_any_member_extension(self, vocab):
        f = PromptSetFilter((ts(vocab, 1), ts(vocab, 2, 3)))
        assert f(ts(vocab, 1, 2)) == 1
        assert f(ts(vocab, 2, 3)) == 1
        assert f(ts(vocab, 3)) == 0

    def test_fixed_length(self, vocab):
        f = FixedLengthFilter(2)
        assert f(ts(vocab, 1, 2)) == 1
        assert f(ts(vocab, 1)) == 0


class TestCompositionLaws:
    def test_composite_is_pointwise_product(self, vocab):
        filters = [
            EosYFilter(),
            FixedLengthFilter(3),
            PrefixFilter(ts(vocab, 1)),
            SuffixFilter(ts(vocab, vocab.eos_y)),
        ]
        seqs = all_valid_seqs(vocab, 4)
        for i, f1 in enumerate(filters):
            for f2 in filters[i:]:
                cmp12 = composite(f1, f2)
                for s in seqs:
                    assert cmp12(s) == f1(s) * f2(s)

    def test_associative_and_commutative(self, vocab):
        f1, f2, f3 = EosYFilter(), FixedLengthFilter(4), PrefixFilter(ts(vocab, 1))
        seqs = all_valid_seqs(vocab, 4)
        for s in seqs:
            left = composite(composite(f1, f2), f3)(s)
            right = composite(f1, composite(f2, f3))(s)
            swapped = composite(f3, f1, f2)(s)
            assert left == right == swapped

    def test_trivial_is_identity(self, vocab):
        f = EosYFilter()
        assert composite(TrivialFilter(), f) is f
        for s in all_valid_seqs(vocab, 3):
            assert composite(f, TrivialFilter())(s) == f(s)

    def test_single_token_equals_fixed_length_of_prefix(self, vocab):
        # exhaustive at small scale over both references and arguments
        seqs = all_valid_seqs(vocab, 4)
        refs = [s for s in seqs if 1 <= len(s) <= 4]
        rng = random.Random(2)
        for ref in rng.sample(refs, 40):
            st = SingleTokenFilter(ref)
            equivalent = composite(
                FixedLengthFilter(len(ref)), PrefixFilter(ref.subseq(1, len(ref) - 1))
            )
            for s in seqs:
                assert st(s) == equivalent(s)


class TestTopK:
    def test_k1_accepts_only_argmax_branch(self, coin):
        v = coin.vocab
        f = make_topk_filter(coin, 1)
        assert f(TokenSeq(v, (v.eos_x, 1))) == 1
        assert f(TokenSeq(v, (v.eos_x, 2))) == 0
        assert f(TokenSeq(v, (v.eos_x, 1, v.eos_y))) == 1

    def test_full_k_is_noop(self, tri):
        v = tri.vocab
        f = make_topk_filter(tri, len(v.extended))
        tree = SamplingTree(tri)
        res = tree.enumerate_filtered(EosYFilter(), EnumerationBudget(max_depth=6))
        assert all(f(e.seq) == 1 for e in res)

    def test_k2_rejects_weakest_of_three(self, tri):
        v = tri.vocab
        f = make_topk_filter(tri, 2)
        assert f(TokenSeq(v, (v.eos_x, 1))) == 1  # 0.5
        assert f(TokenSeq(v, (v.eos_x, 2))) == 1  # 0.3
        assert f(TokenSeq(v, (v.eos_x, 3))) == 0  # 0.2

    def test_monotone_in_k(self, tri):
        seqs = all_valid_seqs(tri.vocab, 4)
        filters = [make_topk_filter(tri, k) for k in (1, 2, 3, 4)]
        for s in seqs:
            values = [f(s) for f in filters]
            assert values == sorted(values)

    def test_tie_broken_by_lowest_id(self):
        vocab = Vocabulary.basic(3)
        m = TabularModel(
            vocab,
            {(): {1: 0.4, 2: 0.4, 3: 0.2}},
            default={vocab.eos_x: 1.0},
        )
        f = make_topk_filter(m, 1)
        assert f.step_set(TokenSeq(vocab)) == (1,)

    def test_seeded_tie_mode_is_reproducible(self):
        vocab = Vocabulary.basic(3)
        m = TabularModel(vocab, {(): {1: 0.5, 2: 0.5}}, default={vocab.eos_x: 1.0})
        sets = {
            make_topk_filter(m, 1, tie_seed=s).step_set(TokenSeq(vocab)) for s in (0, 1)
        }
        again = {
            make_topk_filter(m, 1, tie_seed=s).step_set(TokenSeq(vocab)) for s in (0, 1)
        }
        assert sets == again


class TestProbMass:
    def test_strict_threshold_needs_two_of_three(self, tri):
        f = make_prob_mass_filter(tri, 0.5)
        step = f.step_set(TokenSeq(tri.vocab, (tri.vocab.eos_x,)))
        assert step == (1, 2)  # 0.5 is not > 0.5, so the 0.3 token joins

    def test_zero_threshold_takes_argmax_only(self, tri):
        f = make_prob_mass_filter(tri, 0.0)
        assert f.step_set(TokenSeq(tri.vocab, (tri.vocab.eos_x,))) == (1,)

    def test_high_threshold_on_uniform_takes_all(self):
        vocab = Vocabulary.basic(4)
        m = TabularModel(
            vocab,
            {(vocab.eos_x,): {t: 0.25 for t in range(1, 5)}},
            default={vocab.eos_x: 1.0},
        )
        f = make_prob_mass_filter(m, 0.99)
        assert f.step_set(TokenSeq(vocab, (vocab.eos_x,))) == (1, 2, 3, 4)

    def test_inclusive_mode_matches_conventional_rule(self, tri):
        f = make_prob_mass_filter(tri, 0.5, inclusive=True)
        assert f.step_set(TokenSeq(tri.vocab, (tri.vocab.eos_x,))) == (1,)

    def test_minimality_everywhere(self, tri, foobar):
        for m in (tri, foobar):
            for pm in (0.0, 0.3, 0.5, 0.9, 0.99):
                f = make_prob_mass_filter(m, pm)
                frontier = [TokenSeq(m.vocab)]
                for _ in range(5):
                    nxt = []
                    for prefix in frontier:
                        dist = m.next_dist(prefix)
                        chosen = f.step_set(prefix)
                        mass = math.fsum(dist.prob(t) for t in chosen)
                        assert mass > pm
                        without_weakest = mass - min(dist.prob(t) for t in chosen)
                        assert without_weakest <= pm + 1e-12
                        nxt.extend(prefix.append(t) for t, _ in dist.entries)
                    frontier = nxt


class TestMonteCarlo:
    def test_deterministic_model_concentrates_all_draws(self):
        vocab = Vocabulary.basic(1)
        m = TabularModel(vocab, {
            (): {vocab.eos_x: 1.0},
            (vocab.eos_x,): {1: 1.0},
            (vocab.eos_x, 1): {vocab.eos_y: 1.0},
        })
        f, draw = make_mc_filter(m, TokenSeq(vocab), EosYFilter(), r=4, seed=0)
        assert draw.counts == (
            (TokenSeq(vocab, (vocab.eos_x, 1, vocab.eos_y)), 4),
        )
        assert f(TokenSeq(vocab, (vocab.eos_x, 1, vocab.eos_y))) == 4

    def test_coin_frequencies_concentrate(self, coin):
        v = coin.vocab
        f, draw = make_mc_filter(
            coin, TokenSeq(v, (v.eos_x,)), EosYFilter(), r=10000, seed=7
        )
        heads = f(TokenSeq(v, (v.eos_x, 1, v.eos_y)))
        assert abs(heads / 10000 - 0.6) <= 0.02
        assert draw.truncated_count == 0

    def test_counts_sum_to_r(self, coin, foobar, tri):
        for m in (coin, foobar, tri):
            v = m.vocab
            _, draw = make_mc_filter(
                m, TokenSeq(v, (v.eos_x,)), EosYFilter(), r=500, seed=3
            )
            assert sum(c for _, c in draw.counts) == 500

    def test_truncated_draws_reported_not_counted(self, geometric):
        v = geometric.vocab
        f, draw = make_mc_filter(
            geometric, TokenSeq(v, (v.eos_x,)), EosYFilter(), r=200, seed=1, max_len=2
        )
        assert draw.truncated_count > 0
        assert sum(c for _, c in draw.counts) + draw.truncated_count == 200

    def test_reproducible_for_seed(self, tri):
        v = tri.vocab
        a = make_mc_filter(tri, TokenSeq(v), EosYFilter(), r=100, seed=11)[1]
        b = make_mc_filter(tri, TokenSeq(v), EosYFilter(), r=100, seed=11)[1]
        assert a.counts == b.counts

    def test_drawn_sequences_have_positive_probability(self, foobar):
        from uqtree import seq_prob

        _, draw = make_mc_filter(
            foobar, TokenSeq(foobar.vocab), EosYFilter(), r=300, seed=5
        )
        assert all(seq_prob(foobar, s) > 0 for s, _ in draw.counts)
