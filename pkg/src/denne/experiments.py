"""Scaled synthetic benchmarks shared by the experiment scripts and acceptance tests."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .eval import reconstruction_scores
from .graph import Graph
from .model import ModelConfig, init_model
from .objective import Corpus, build_corpus, mean_abs_noise, train
from .sampling import WalkConfig
from .synth import (GEOMETRIC_EDGES, GEOMETRIC_NODES, PARTITION_EDGES, PARTITION_NODES, GeometricSpec,
                    NoiseSpec, PartitionSpec, calibrate_partition, calibrate_radius, gen_geometric,
                    gen_partition, inject_noise, scaled_edge_target)


@dataclass
class Benchmark:
    pristine: Graph
    observed: Graph
    groups: np.ndarray | None
    walk: WalkConfig
    corpus: Corpus


def partition_benchmark(seed: int, n: int = 256, k: int = 8, add_ratio: float = 0.05,
                        remove_ratio: float = 0.0, walk: WalkConfig | None = None) -> Benchmark:
    """Partition graph at the published pair density, corrupted by uniform edge noise."""
    p_in, p_out = calibrate_partition(n, k, scaled_edge_target(n, PARTITION_NODES, PARTITION_EDGES))
    pristine, groups = gen_partition(PartitionSpec(n, k, p_in, p_out, seed))
    observed, _ = inject_noise(pristine, NoiseSpec(add_ratio, remove_ratio, seed))
    walk = dataclasses.replace(walk or WalkConfig(), seed=seed)
    return Benchmark(pristine, observed, groups, walk, build_corpus(observed, walk))


def geometric_benchmark(seed: int, n: int = 256, add_ratio: float = 0.05, remove_ratio: float = 0.0,
                        walk: WalkConfig | None = None) -> Benchmark:
    radius = calibrate_radius(n, scaled_edge_target(n, GEOMETRIC_NODES, GEOMETRIC_EDGES))
    pristine, _ = gen_geometric(GeometricSpec(n, radius, seed))
    observed, _ = inject_noise(pristine, NoiseSpec(add_ratio, remove_ratio, seed))
    walk = dataclasses.replace(walk or WalkConfig(), seed=seed)
    return Benchmark(pristine, observed, None, walk, build_corpus(observed, walk))


def reconstruction_run(config: ModelConfig, bench: Benchmark, ratios=(0.01,),
                       ground_truth: bool = True) -> tuple[list[float], float]:
    """Train on the observed graph; reconstruction F1 against the pristine graph per ratio, and mean |eps|."""
    memberships = bench.groups if config.community and ground_truth else None
    if memberships is not None:
        config = dataclasses.replace(config, n_communities=int(memberships.max()) + 1)
    model = init_model(config, bench.observed, memberships=memberships)
    train(model, bench.observed, bench.walk, corpus=bench.corpus)
    return [reconstruction_scores(model.u, bench.pristine, r).f1 for r in ratios], mean_abs_noise(model)
