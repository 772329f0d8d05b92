import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from denne.graph import Graph
from denne.sampling import (NegativeSampler, SamplingError, TrainingPair, WalkConfig, corpus_pairs,
                            draw_negatives, extract_pairs, generate_walks, sample_negatives)


def pairs_of(tps):
    return [(p.center, p.context) for p in tps]


def test_forced_walk_on_path():
    graph = Graph.from_edges(2, [(0, 1)])
    walks = generate_walks(graph, WalkConfig(walks_per_node=1, walk_length=3, window=1, seed=0))
    assert sorted(w.tolist() for w in walks) == [[0, 1, 0], [1, 0, 1]]


def test_isolated_node_walk_has_length_one():
    graph = Graph.from_edges(3, [(0, 1)])
    walks = generate_walks(graph, WalkConfig(2, 10, 2, seed=1))
    assert [w.tolist() for w in walks if w[0] == 2] == [[2], [2]]


def test_walk_count_and_validity():
    graph = Graph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)])
    walks = generate_walks(graph, WalkConfig(3, 7, 2, seed=4))
    assert len(walks) == 3 * 6
    for w in walks:
        assert len(w) == 7
        for a, b in zip(w[:-1], w[1:]):
            assert graph.has_edge(int(a), int(b))


def test_walk_determinism():
    graph = Graph.from_edges(8, [(i, (i + 1) % 8) for i in range(8)] + [(0, 4)])
    a = generate_walks(graph, WalkConfig(2, 20, 3, seed=11))
    b = generate_walks(graph, WalkConfig(2, 20, 3, seed=11))
    c = generate_walks(graph, WalkConfig(2, 20, 3, seed=12))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not all(np.array_equal(x, y) for x, y in zip(a, c))


def test_extract_pairs_examples():
    a, b, c = 0, 1, 2
    assert pairs_of(extract_pairs([a, b, c], 1)) == [(a, b), (b, a), (b, c), (c, b)]
    assert extract_pairs([a], 3) == []
    assert pairs_of(extract_pairs([a, b, a], 2)) == [(a, b), (b, a), (b, a), (a, b)]
    assert all(p.positive for p in extract_pairs([a, b, c], 2))


@given(st.integers(1, 30), st.integers(1, 6))
def test_extract_pairs_count_on_simple_walk(L, w):
    expected = sum(len([j for j in range(L) if 0 < abs(i - j) <= w]) for i in range(L))
    assert len(extract_pairs(range(L), w)) == expected


@given(st.lists(st.lists(st.integers(0, 5), min_size=1, max_size=12), min_size=1, max_size=6), st.integers(1, 4))
def test_corpus_pairs_matches_extract_pairs(walks, w):
    c, x = corpus_pairs([np.array(wk) for wk in walks], w)
    ref = [pr for wk in walks for pr in pairs_of(extract_pairs(wk, w))]
    assert list(zip(c.tolist(), x.tolist())) == ref


def test_negative_probabilities_from_degrees():
    s = NegativeSampler.from_degrees([1, 16], exponent=0.75)
    # 16 ** 0.75 == 8
    assert s.probs == pytest.approx([1 / 9, 8 / 9], abs=1e-15)
    draws = s.draw(np.random.default_rng(0), 100_000)
    frac = np.mean(draws == 1)
    sd = np.sqrt(8 / 81 / 100_000)
    assert abs(frac - 8 / 9) < 3 * sd


def test_negative_exponent_zero_is_uniform_over_non_isolated():
    s = NegativeSampler.from_degrees([3, 0, 1, 7], exponent=0.0)
    assert s.probs == pytest.approx([1 / 3, 0, 1 / 3, 1 / 3])


def test_zero_degree_nodes_never_drawn():
    s = NegativeSampler.from_degrees([0, 2, 0, 5, 0], exponent=0.75)
    draws = s.draw(np.random.default_rng(3), 50_000)
    assert set(np.unique(draws)) <= {1, 3}


def test_negative_frequencies_chi_square():
    deg = np.array([1, 2, 3, 5, 8, 13, 21])
    s = NegativeSampler.from_degrees(deg, 0.75)
    draws = s.draw(np.random.default_rng(42), 100_000)
    obs = np.bincount(draws, minlength=len(deg))
    assert chisquare(obs, s.probs * len(draws)).pvalue > 0.01


def test_sample_negatives_api():
    s = NegativeSampler.from_degrees([2, 2, 2, 2])
    rng = np.random.default_rng(0)
    assert sample_negatives(s, 0, 0, rng) == []
    negs = sample_negatives(s, 0, 50, rng)
    assert len(negs) == 50
    assert all(isinstance(p, TrainingPair) and not p.positive and p.context != 0 for p in negs)


def test_degenerate_sampler():
    s = NegativeSampler.from_degrees([0, 4, 0])
    with pytest.raises(SamplingError):
        sample_negatives(s, 1, 3, np.random.default_rng(0))
    out = draw_negatives(s, np.array([1, 0]), np.random.default_rng(0), 3)
    assert (out[0] == -1).all() and (out[1] == 1).all()


def test_sampler_requires_edges():
    with pytest.raises(SamplingError):
        NegativeSampler.from_degrees([0, 0])
