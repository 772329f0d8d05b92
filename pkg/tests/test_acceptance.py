"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are printed
even when pytest captures output.
"""
import math
import time

import numpy as np
import pytest

from denne.cli import main
from denne.experiments import partition_benchmark, reconstruction_run
from denne.graph import Graph
from denne.model import ModelConfig, init_model
from denne.objective import pair_loss, total_loss
from denne.sampling import TrainingPair
from denne.synth import GeometricSpec, PartitionSpec, gen_geometric, gen_partition
from oracles import brute_force_objective, gradient_errors, random_step, skipgram_loss
import test_eval

VARIANTS = ("basic", "com", "deg", "adap", "com+deg")
SEEDS = range(5)


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail, start):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({time.perf_counter() - start:.1f}s)")
        assert ok, detail
    return emit


def test_c1_gradient_oracle(verdict):
    start = time.perf_counter()
    worst = {}
    for v in VARIANTS:
        for seed in range(100):
            for fam, err in gradient_errors(*random_step(v, seed)).items():
                worst[(v, fam)] = max(worst.get((v, fam), 0.0), err)
    elapsed = time.perf_counter() - start
    families = {fam for _, fam in worst}
    expected = {"u", "eps", "centers", "member_logits", "fitness", "mixture_logits"}
    top = max(worst.values())
    ok = top < 1e-4 and families == expected and elapsed < 30
    verdict(1, ok, f"max relative gradient error {top:.2e} over {len(worst)} variant/family cells", start)


def random_small_graph(rng):
    n = int(rng.integers(2, 7))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    take = rng.random(len(pairs)) < 0.5
    return Graph.from_edges(n, [p for p, t in zip(pairs, take) if t]), pairs


def test_c2_likelihood_oracle(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for t in range(20):
        graph, pairs = random_small_graph(rng)
        variant = ("basic", "com", "deg", "com+deg")[t % 4]
        cfg = ModelConfig.for_variant(variant, dim=4, n_communities=2, seed=t,
                                      alpha_u=float(rng.uniform(0.001, 1)), alpha_e=float(rng.uniform(1, 50)))
        groups = rng.integers(0, 2, graph.n) if cfg.community else None
        model = init_model(cfg, graph, memberships=groups)
        model.u[:] = rng.normal(0, 0.7, model.u.shape)
        model.fitness[:] = rng.uniform(0, 1, graph.n)
        for a, b in pairs:
            if rng.random() < 0.6:
                model.noise.set(a, b, float(rng.normal(0, 0.2)))
        positives = [tuple(e) for e in graph.edges.tolist()]
        negatives = [(int(i), int(rng.integers(graph.n))) for i, _ in positives for _ in range(3)]
        negatives = [(i, v) for i, v in negatives if i != v]
        got = total_loss(model, positives, negatives).total
        want = brute_force_objective(model, positives, negatives)
        worst = max(worst, abs(got - want))
    ok = worst <= 1e-10 and time.perf_counter() - start < 5
    verdict(2, ok, f"max |total_loss - enumeration| = {worst:.1e} on 20 graphs", start)


def test_c3_skipgram_reduction(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    mismatches = checked = 0
    for t in range(20):
        model = init_model(ModelConfig(dim=16, freeze_noise=True, seed=t), 12)
        model.u[:] = rng.normal(0, 0.3, model.u.shape)
        for i in range(12):
            for j in range(12):
                if i == j:
                    continue
                for positive in (True, False):
                    checked += 1
                    mismatches += pair_loss(model, TrainingPair(i, j, positive)) != skipgram_loss(
                        model.u[i], model.u[j], positive)
    ok = mismatches == 0 and time.perf_counter() - start < 5
    verdict(3, ok, f"{checked - mismatches}/{checked} pair losses bit-identical to plain SkipGram", start)


def denoise_f1(variant, seed, **overrides):
    bench = partition_benchmark(seed, n=256, k=8, add_ratio=0.05)
    cfg = ModelConfig.for_variant(variant, dim=32, seed=seed, **overrides)
    return reconstruction_run(cfg, bench, ratios=(0.01,))


def test_c4_denoising_effect(verdict):
    start = time.perf_counter()
    basic = [denoise_f1("basic", s)[0][0] for s in SEEDS]
    frozen = [denoise_f1("basic", s, freeze_noise=True)[0][0] for s in SEEDS]
    wins = sum(b >= f for b, f in zip(basic, frozen))
    ok = wins >= 4 and np.mean(basic) > np.mean(frozen) and time.perf_counter() - start < 180
    verdict(4, ok, f"basic F1 {np.mean(basic):.4f} vs frozen {np.mean(frozen):.4f}, basic >= frozen in {wins}/5 seeds",
            start)


def test_c5_prior_effectiveness(verdict):
    start = time.perf_counter()
    com = [denoise_f1("com", s)[0][0] for s in SEEDS]
    basic = [denoise_f1("basic", s)[0][0] for s in SEEDS]
    ok = np.mean(com) >= np.mean(basic) and time.perf_counter() - start < 180
    verdict(5, ok, f"com F1 {np.mean(com):.4f} vs basic {np.mean(basic):.4f}", start)


def test_c6_noise_shrinkage(verdict):
    start = time.perf_counter()
    bench = partition_benchmark(0, n=256, k=8, add_ratio=0.05)
    means = [reconstruction_run(ModelConfig(dim=32, alpha_e=a, seed=0), bench)[1] for a in (0.5, 5.0, 50.0, 500.0)]
    ok = all(x >= y for x, y in zip(means, means[1:])) and time.perf_counter() - start < 120
    verdict(6, ok, "mean |eps| over alpha_e 0.5/5/50/500 = " + ", ".join(f"{m:.4g}" for m in means), start)


def test_c7_generator_statistics(verdict):
    start = time.perf_counter()
    n, k, p_in, p_out = 200, 5, 0.12, 0.01
    worst = 0.0
    intra_total = inter_total = 0
    groups = None
    for seed in range(30):
        graph, groups = gen_partition(PartitionSpec(n, k, p_in, p_out, seed))
        same = groups[graph.edges[:, 0]] == groups[graph.edges[:, 1]]
        intra_total += int(same.sum())
        inter_total += int((~same).sum())
    sizes = np.bincount(groups)
    n_intra = int(sum(s * (s - 1) // 2 for s in sizes))
    n_inter = n * (n - 1) // 2 - n_intra
    for count, trials, p in ((intra_total, 30 * n_intra, p_in), (inter_total, 30 * n_inter, p_out)):
        worst = max(worst, abs(count - trials * p) / math.sqrt(trials * p * (1 - p)))
    rng = np.random.default_rng(7)
    predicate_ok = True
    for t in range(20):
        pts = rng.random((40, 2))
        r = float(rng.uniform(0.05, 0.6))
        graph, _ = gen_geometric(GeometricSpec(40, r), positions=pts)
        truth = {(a, b) for a in range(40) for b in range(a + 1, 40) if math.dist(pts[a], pts[b]) < r}
        predicate_ok &= graph.edge_set() == truth
    ok = worst < 4 and predicate_ok and time.perf_counter() - start < 30
    verdict(7, ok, f"partition frequencies within {worst:.2f} sigma; geometric predicate exact: {predicate_ok}", start)


def test_c8_evaluation_metrics(verdict):
    start = time.perf_counter()
    for fn in (test_eval.test_macro_f1_examples, test_eval.test_reconstruct_examples,
               test_eval.test_reconstruction_f1_examples, test_eval.test_reconstruct_ties_by_pair_order,
               test_eval.test_predict_examples):
        fn()
    for seed in range(50):
        test_eval.check_permutation_invariance(seed)
        test_eval.check_scale_rank_stability(seed)
    verdict(8, time.perf_counter() - start < 10, "hand examples exact; permutation and scale properties on 50 instances",
            start)


def test_c9_determinism(verdict, tmp_path):
    start = time.perf_counter()
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[dataset]\nnodes = 256\n[noise]\nadd_ratio = 0.05\n[eval]\nseeds = 5\n[run]\nseeds = 0\n")
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["run", "--config", str(cfg), "--out", str(out), "--variant", "com+deg"]) == 0
        outs.append(out)
    files = ("com+deg/s0/embeddings.txt", "com+deg/s0/noise.txt", "com+deg/metrics_gr.csv", "com+deg/metrics_nc.csv")
    same = [(outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files]
    ok = all(same) and time.perf_counter() - start < 180
    verdict(9, ok, f"{sum(same)}/{len(files)} artifacts byte-identical across reruns", start)
