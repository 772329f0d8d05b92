import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denne.graph import Graph, LabelTable
from denne.eval import (DEFAULT_FRACTIONS, DEFAULT_RATIOS, DataError, classification_scores, fit_classifier,
                        macro_f1, make_split, micro_f1, pairs_for_ratio, predict, reconstruct,
                        reconstruction_f1, reconstruction_scores, top_labels, ClassifierModel)


def single(groups):
    return LabelTable.from_groups(np.asarray(groups))


def test_split_sizes_and_determinism():
    labels = single(np.arange(10) % 2)
    s = make_split(labels, 0.3, seed=4)
    assert len(s.train_ids) == 3 and len(s.test_ids) == 7
    assert not set(s.train_ids) & set(s.test_ids)
    again = make_split(labels, 0.3, seed=4)
    assert np.array_equal(s.train_ids, again.train_ids)
    for f in DEFAULT_FRACTIONS:
        assert len(make_split(labels, f, 0).train_ids) == int(f * 10)


def test_split_errors():
    with pytest.raises(DataError):
        make_split(LabelTable(tuple(frozenset() for _ in range(3)), 1), 0.5, 0)
    with pytest.raises(ValueError):
        make_split(single([0, 1]), 1.0, 0)


def test_classifier_separable_points():
    x = np.array([[-1.0, 0.0], [1.0, 0.0]])
    labels = single([0, 1])
    split = make_split(labels, 0.5, 0)
    split = type(split)(np.array([0, 1]), np.array([], dtype=int), 0.5, 0)
    clf = fit_classifier(x, labels, split)
    assert predict(clf, x) == [{0}, {1}]


def test_classifier_single_class():
    x = np.random.default_rng(0).normal(size=(6, 3))
    labels = LabelTable(tuple(frozenset({1}) for _ in range(6)), 2)
    split = make_split(labels, 0.5, 0)
    clf = fit_classifier(x, labels, split)
    assert all(p == {1} for p in predict(clf, x))


def test_classifier_duplicate_rows_same_predictions():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(8, 2))
    y = (x[:, 0] > 0).astype(int)
    labels = single(y)
    full = type(make_split(labels, 0.5, 0))(np.arange(8), np.array([], dtype=int), 0.5, 0)
    clf = fit_classifier(x, labels, full, l2=1e-3)
    xd = np.vstack([x, x])
    dup_labels = single(np.concatenate([y, y]))
    dup = type(full)(np.arange(16), np.array([], dtype=int), 0.5, 0)
    clf2 = fit_classifier(xd, dup_labels, dup, l2=2e-3)
    probe = rng.normal(size=(50, 2))
    assert predict(clf, probe) == predict(clf2, probe)


def test_classifier_seed_independent():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 4))
    labels = single(rng.integers(0, 3, 30))
    split = make_split(labels, 0.7, 0)
    a = fit_classifier(x, labels, split, seed=0)
    b = fit_classifier(x, labels, split, seed=99)
    assert np.allclose(a.weights, b.weights, atol=1e-5)


def test_predict_examples():
    assert top_labels(np.array([0.2, 0.7, 0.1]), 1) == {1}
    assert top_labels(np.array([0.9, 0.1, 0.5]), 2) == {0, 2}
    assert top_labels(np.array([0.5, 0.5, 0.5]), 2) == {0, 1}


def test_predict_multilabel_counts():
    clf = ClassifierModel(np.array([[1.0, 0.0], [0.0, 0.0], [0.5, 0.0]]), multilabel=True, l2=1.0)
    assert predict(clf, np.array([[1.0]]), [2]) == [{0, 2}]


def test_macro_f1_examples():
    truth = [{0}, {1}, {1}]
    assert macro_f1(truth, truth) == 1.0
    assert macro_f1([{0}, {1}, {0}], truth) == pytest.approx(2 / 3, abs=1e-15)
    assert macro_f1([{1}, {0}, {0}], truth) == 0.0


def test_multilabel_classification_runs():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(40, 3))
    labels = LabelTable(tuple(frozenset({int(v > 0) for v in row[:2]} | {2}) for row in x), 3)
    assert labels.multilabel
    macro, micro = classification_scores(x, labels, 0.5, seed=0)
    assert 0.0 <= macro <= 1.0 and 0.0 <= micro <= 1.0


@given(st.lists(st.sets(st.integers(0, 4), min_size=1, max_size=3), min_size=1, max_size=20), st.data())
def test_f1_bounds_and_single_label_equality(truth, data):
    pred = [data.draw(st.sets(st.integers(0, 4), min_size=1, max_size=3)) for _ in truth]
    assert 0.0 <= macro_f1(pred, truth) <= 1.0
    ones = [{0} for _ in truth]
    assert macro_f1(ones, ones) == micro_f1(ones, ones) == 1.0


def test_reconstruct_examples():
    emb = np.array([[0.0], [1.0], [1.0 + np.sqrt(2.0)]])
    # squared distances: (0,1)=1, (1,2)=2, (0,2)=(1+sqrt2)^2
    res = reconstruct(emb, 1)
    assert res.predicted_pairs.tolist() == [[0, 1]]
    full = reconstruct(emb, 3)
    pristine = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert reconstruction_f1(full.predicted_pairs, pristine)[1] == 1.0
    with pytest.raises(IndexError):
        reconstruct(emb, 4)


def test_reconstruct_ties_by_pair_order():
    emb = np.zeros((4, 2))
    assert reconstruct(emb, 3).predicted_pairs.tolist() == [[0, 1], [0, 2], [0, 3]]


def test_reconstruction_f1_examples():
    pristine = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert reconstruction_f1([(0, 1), (0, 2)], pristine) == (0.5, 0.5, 0.5)
    assert reconstruction_f1([(1, 0), (2, 1)], pristine)[2] == 1.0
    assert reconstruction_f1([(0, 2)], pristine) == (0.0, 0.0, 0.0)


def test_ratio_grid():
    assert len(DEFAULT_RATIOS) == 11 and DEFAULT_RATIOS[0] == 0.001 and DEFAULT_RATIOS[-1] == 0.011
    assert pairs_for_ratio(256, 0.01) == round(0.01 * 256 * 255 / 2)


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 30))
    emb = rng.normal(size=(n, 4))
    edges = [(int(a), int(b)) for a, b in rng.integers(0, n, (2 * n, 2)) if a != b]
    return rng, n, emb, Graph.from_edges(n, edges)


def check_permutation_invariance(seed):
    rng, n, emb, graph = random_instance(seed)
    perm = rng.permutation(n)  # new id of old node i is perm[i]
    emb_p = np.empty_like(emb)
    emb_p[perm] = emb
    graph_p = Graph.from_edges(n, [(perm[a], perm[b]) for a, b in graph.edges])
    k = int(rng.integers(1, n * (n - 1) // 2))
    f = reconstruction_f1(reconstruct(emb, k).predicted_pairs, graph)
    f_p = reconstruction_f1(reconstruct(emb_p, k).predicted_pairs, graph_p)
    assert f == pytest.approx(f_p, abs=1e-15)
    truth = [{int(v)} for v in rng.integers(0, 3, n)]
    pred = [{int(v)} for v in rng.integers(0, 3, n)]
    order = rng.permutation(n)
    assert macro_f1([pred[i] for i in order], [truth[i] for i in order]) == macro_f1(pred, truth)


def check_scale_rank_stability(seed):
    rng, n, emb, _ = random_instance(seed)
    k = int(rng.integers(1, n * (n - 1) // 2))
    c = float(rng.uniform(0.1, 10.0))
    a = {tuple(p) for p in reconstruct(emb, k).predicted_pairs.tolist()}
    b = {tuple(p) for p in reconstruct(c * emb, k).predicted_pairs.tolist()}
    assert a == b


@pytest.mark.parametrize("seed", range(50))
def test_permutation_invariance(seed):
    check_permutation_invariance(seed)


@pytest.mark.parametrize("seed", range(50))
def test_scale_rank_stability(seed):
    check_scale_rank_stability(seed)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_reconstruction_result_invariants(seed):
    rng, n, emb, graph = random_instance(seed)
    ratio = float(rng.uniform(0.01, 0.5))
    res = reconstruction_scores(emb, graph, ratio)
    assert len(res.predicted_pairs) == pairs_for_ratio(n, ratio)
    assert (res.precision * res.recall == 0) == (res.f1 == 0)
