"""Tree expansion, bounded enumeration, and mass conservation."""

import math

import pytest

from uqtree import (
    EnumerationBudget,
    EosYFilter,
    EosZFilter,
    FixedLengthFilter,
    PrefixFilter,
    SamplingTree,
    TabularModel,
    TokenSeq,
    TrivialFilter,
    Vocabulary,
    composite,
    dump_snapshot,
    make_topk_filter,
)
from uqtree.fixtures import UniformModel

from conftest import random_terminating_model


def ts(model, *tokens):
    return TokenSeq(model.vocab, tuple(tokens))


class TestExpand:
    def test_coin_branch_probabilities(self, coin):
        tree = SamplingTree(coin)
        node = tree.node(ts(coin, coin.vocab.eos_x))
        children = tree.expand(node)
        assert [(c.prefix[-1], c.edge_prob) for c in children] == [(1, 0.6), (2, 0.4)]
        assert children[0].path_prob == pytest.approx(0.6, rel=1e-12)

    def test_absorbed_node_single_child(self, coin):
        v = coin.vocab
        tree = SamplingTree(coin)
        node = tree.node(TokenSeq(v, (v.eos_x, 1, v.eos_y, v.eos_z)))
        children = tree.expand(node)
        assert len(children) == 1
        assert children[0].prefix[-1] == v.eos_z
        assert children[0].edge_prob == 1.0

    def test_point_mass_single_child(self, coin):
        tree = SamplingTree(coin)
        children = tree.expand(tree.root)
        assert len(children) == 1
        assert children[0].edge_prob == 1.0

    def test_expansion_idempotent(self, coin):
        tree = SamplingTree(coin)
        node = tree.node(ts(coin, coin.vocab.eos_x))
        first = tree.expand(node)
        second = tree.expand(node)
        assert [c.prefix.tokens for c in first] == [c.prefix.tokens for c in second]
        assert all(a is b for a, b in zip(first, second))

    def test_path_prob_multiplies_along_edges(self, foobar):
        tree = SamplingTree(foobar)
        v = foobar.vocab
        node = tree.node(TokenSeq(v, (v.eos_x, 1, 4)))
        assert node.path_prob == pytest.approx(0.49 * 0.5, rel=1e-12)

    def test_unreachable_prefix_rejected(self, coin):
        v = coin.vocab
        tree = SamplingTree(coin)
        with pytest.raises(LookupError):
            tree.node(TokenSeq(v, (1,)))  # root emits the prompt sentinel only


class TestEnumerateFiltered:
    def test_prefix_plus_end_of_output_on_coin(self, coin):
        v = coin.vocab
        tree = SamplingTree(coin)
        f = composite(PrefixFilter(ts(coin, v.eos_x)), EosYFilter())
        res = tree.enumerate_filtered(f, EnumerationBudget(max_depth=8))
        got = {(e.seq.tokens, e.multiplicity): e.path_prob for e in res}
        assert got == {
            ((v.eos_x, 1, v.eos_y), 1): pytest.approx(0.6, rel=1e-12),
            ((v.eos_x, 2, v.eos_y), 1): pytest.approx(0.4, rel=1e-12),
        }
        assert not res.truncated

    def test_fixed_length_zero(self, coin):
        tree = SamplingTree(coin)
        res = tree.enumerate_filtered(FixedLengthFilter(0), EnumerationBudget(max_depth=4))
        assert [(e.seq.tokens, e.path_prob) for e in res] == [((), 1.0)]

    def test_rejecting_filter_yields_empty(self, coin):
        tree = SamplingTree(coin)
        res = tree.enumerate_filtered(FixedLengthFilter(99), EnumerationBudget(max_depth=4))
        assert len(res) == 0

    def test_trivial_filter_mass_conservation(self, coin, foobar):
        models = [coin, foobar, UniformModel(2, 3), UniformModel(4, 2)]
        models += [random_terminating_model(s) for s in range(3)]
        for m in models:
            tree = SamplingTree(m)
            res = tree.enumerate_filtered(TrivialFilter(), EnumerationBudget(max_depth=8))
            assert res.total_mass == pytest.approx(1.0, abs=1e-9), m.describe()

    def test_deterministic_across_runs(self, foobar):
        budget = EnumerationBudget(max_depth=8)
        a = SamplingTree(foobar).enumerate_filtered(EosYFilter(), budget)
        b = SamplingTree(foobar).enumerate_filtered(EosYFilter(), budget)
        assert [(e.seq.tokens, e.path_prob, e.multiplicity) for e in a] == [
            (e.seq.tokens, e.path_prob, e.multiplicity) for e in b
        ]

    def test_lexicographic_order(self, tri):
        tree = SamplingTree(tri)
        res = tree.enumerate_filtered(EosYFilter(), EnumerationBudget(max_depth=6))
        tokens = [e.seq.tokens for e in res]
        assert tokens == sorted(tokens)

    def test_truncation_flag_on_shallow_budget(self, geometric):
        tree = SamplingTree(geometric)
        res = tree.enumerate_filtered(EosYFilter(), EnumerationBudget(max_depth=4))
        assert res.truncated  # longer outputs were cut off
        deeper = tree.enumerate_filtered(EosYFilter(), EnumerationBudget(max_depth=4))
        assert deeper.total_mass < 1.0

    def test_max_nodes_budget_truncates(self, foobar):
        tree = SamplingTree(foobar)
        res = tree.enumerate_filtered(EosYFilter(), EnumerationBudget(max_depth=8, max_nodes=3))
        assert res.truncated

    def test_min_path_prob_pruning_drops_rare_branches(self, foobar):
        tree = SamplingTree(foobar)
        budget = EnumerationBudget(max_depth=8, min_path_prob=0.1)
        res = tree.enumerate_filtered(EosYFilter(), budget)
        assert all(e.path_prob >= 0.1 for e in res)
        assert res.truncated  # the 0.02 branch was viable but pruned

    def test_eos_z_filter_stops_at_first_absorbing_sentinel(self, coin):
        v = coin.vocab
        tree = SamplingTree(coin)
        res = tree.enumerate_filtered(EosZFilter(), EnumerationBudget(max_depth=8))
        assert {e.seq.tokens for e in res} == {
            (v.eos_x, 1, v.eos_y, v.eos_z),
            (v.eos_x, 2, v.eos_y, v.eos_z),
        }
        assert res.total_mass == pytest.approx(1.0, abs=1e-9)


class TestSubtreeMass:
    def test_fully_expanded_conserves(self, foobar):
        tree = SamplingTree(foobar)
        tree.enumerate_filtered(TrivialFilter(), EnumerationBudget(max_depth=8))
        node = tree.node(ts(foobar, foobar.vocab.eos_x))
        for depth in (1, 2, 5):
            assert tree.subtree_mass(node, depth) == pytest.approx(
                node.path_prob, abs=1e-9
            )

    def test_depth_zero_is_own_mass(self, coin):
        tree = SamplingTree(coin)
        node = tree.node(ts(coin, coin.vocab.eos_x))
        assert tree.subtree_mass(node, 0) == node.path_prob

    def test_topk_pruned_tree_reports_captured_mass(self, coin):
        tree = SamplingTree(coin, estimator=make_topk_filter(coin, 1))
        node = tree.node(ts(coin, coin.vocab.eos_x))
        tree.expand(node)
        assert tree.subtree_mass(node, 1) == pytest.approx(0.6, rel=1e-12)


class TestSnapshot:
    def test_coin_snapshot_golden(self, coin):
        tree = SamplingTree(coin)
        text = dump_snapshot(tree, 2)
        assert text.splitlines() == [
            "uqtree-tree v1",
            "\t1\t1",
            "</X>\t1\t1",
            "</X> heads\t0.6\t0.6",
            "</X> tails\t0.4\t0.4",
        ]

    def test_depth_zero_root_only(self, coin):
        text = dump_snapshot(SamplingTree(coin), 0)
        assert text.splitlines() == ["uqtree-tree v1", "\t1\t1"]

    def test_snapshot_from_context(self, coin):
        v = coin.vocab
        text = dump_snapshot(SamplingTree(coin), 1, context=ts(coin, v.eos_x))
        assert text.splitlines()[1:] == [
            "</X>\t1\t1",
            "</X> heads\t0.6\t0.6",
            "</X> tails\t0.4\t0.4",
        ]
