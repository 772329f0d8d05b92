"""Synthetic pristine graphs and ground-truth edge noise.

Two generators mirror the synthetic benchmarks: a random geometric graph in
the unit square and a planted-partition graph. ``inject_noise`` corrupts a
pristine graph with a known set of added/removed edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist

from .graph import EdgeDelta, Graph

# Published scale of the synthetic benchmarks.
GEOMETRIC_NODES, GEOMETRIC_EDGES = 1024, 5470
PARTITION_NODES, PARTITION_EDGES, PARTITION_GROUPS = 1024, 7066, 8


class SpecError(ValueError):
    pass


class CapacityError(ValueError):
    """Not enough non-edges to add the requested noise."""


@dataclass(frozen=True)
class GeometricSpec:
    n: int
    radius: float
    seed: int = 0

    def validate(self) -> None:
        if self.n < 2:
            raise SpecError("geometric graph needs n >= 2")
        if not 0.0 < self.radius < math.sqrt(2.0):
            raise SpecError(f"radius must lie in (0, sqrt 2), got {self.radius}")


@dataclass(frozen=True)
class PartitionSpec:
    n: int
    k: int
    p_in: float
    p_out: float
    seed: int = 0

    def validate(self) -> None:
        if self.k < 1 or self.k > self.n:
            raise SpecError(f"group count k={self.k} must lie in 1..n={self.n}")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise SpecError(f"need 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")


@dataclass(frozen=True)
class NoiseSpec:
    add_ratio: float = 0.0
    remove_ratio: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.add_ratio <= 1.0:
            raise SpecError(f"add_ratio must lie in [0, 1], got {self.add_ratio}")
        if not 0.0 <= self.remove_ratio < 1.0:
            raise SpecError(f"remove_ratio must lie in [0, 1), got {self.remove_ratio}")


def _pairs_upper(n: int) -> tuple[np.ndarray, np.ndarray]:
    # same ordering as scipy's condensed distance vector
    return np.triu_indices(n, k=1)


def gen_geometric(spec: GeometricSpec, positions: np.ndarray | None = None) -> tuple[Graph, np.ndarray]:
    """Connect every pair of points closer than ``spec.radius``.

    ``positions`` overrides the seeded uniform draw (used to test the
    threshold rule on hand-placed points).
    """
    spec.validate()
    if positions is None:
        positions = np.random.default_rng(spec.seed).random((spec.n, 2))
    positions = np.asarray(positions, dtype=float)
    if positions.shape != (spec.n, 2):
        raise SpecError(f"positions must have shape ({spec.n}, 2)")
    dist = pdist(positions)
    iu, ju = _pairs_upper(spec.n)
    hit = dist < spec.radius
    return Graph.from_edges(spec.n, np.stack([iu[hit], ju[hit]], axis=1)), positions


def partition_groups(n: int, k: int) -> np.ndarray:
    """Contiguous near-equal groups; sizes differ by at most one."""
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    return np.repeat(np.arange(k), sizes)


def gen_partition(spec: PartitionSpec) -> tuple[Graph, np.ndarray]:
    spec.validate()
    groups = partition_groups(spec.n, spec.k)
    iu, ju = _pairs_upper(spec.n)
    prob = np.where(groups[iu] == groups[ju], spec.p_in, spec.p_out)
    draws = np.random.default_rng(spec.seed).random(len(iu))
    hit = draws < prob
    return Graph.from_edges(spec.n, np.stack([iu[hit], ju[hit]], axis=1)), groups


def geometric_pair_probability(radius: float) -> float:
    """P(|X - Y| < r) for X, Y uniform in the unit square, valid for r <= 1."""
    r = radius
    return math.pi * r * r - 8.0 * r ** 3 / 3.0 + r ** 4 / 2.0


def calibrate_radius(n: int, target_edges: float) -> float:
    """Radius whose expected edge count equals ``target_edges``."""
    pairs = n * (n - 1) / 2
    frac = target_edges / pairs
    if not 0.0 < frac < geometric_pair_probability(1.0):
        raise SpecError(f"target of {target_edges} edges is out of range for n={n}")
    return brentq(lambda r: geometric_pair_probability(r) - frac, 1e-9, 1.0, xtol=1e-14)


def calibrate_partition(n: int, k: int, target_edges: float, intra_fraction: float = 0.9) -> tuple[float, float]:
    """(p_in, p_out) with expected edge count ``target_edges``.

    ``intra_fraction`` of the expected edges fall inside groups.
    """
    groups = partition_groups(n, k)
    sizes = np.bincount(groups)
    intra_pairs = float((sizes * (sizes - 1) // 2).sum())
    inter_pairs = n * (n - 1) / 2 - intra_pairs
    p_in = intra_fraction * target_edges / intra_pairs if intra_pairs else 0.0
    p_out = (1.0 - intra_fraction) * target_edges / inter_pairs if inter_pairs else 0.0
    if p_in > 1.0 or p_out > p_in:
        raise SpecError(f"cannot place {target_edges} edges with intra_fraction={intra_fraction}")
    return p_in, p_out


def expected_partition_edges(spec: PartitionSpec) -> float:
    sizes = np.bincount(partition_groups(spec.n, spec.k))
    intra = float((sizes * (sizes - 1) // 2).sum())
    return spec.p_in * intra + spec.p_out * (spec.n * (spec.n - 1) / 2 - intra)


def scaled_edge_target(n: int, published_nodes: int, published_edges: int) -> float:
    """Edge count at ``n`` nodes keeping the published pair density."""
    return published_edges * (n * (n - 1)) / (published_nodes * (published_nodes - 1))


def noise_counts(edge_count: int, spec: NoiseSpec) -> tuple[int, int]:
    # round before ceil/floor so that e.g. 0.07 * 100 is 7, not 8
    add = math.ceil(round(spec.add_ratio * edge_count, 9))
    remove = math.floor(round(spec.remove_ratio * edge_count, 9))
    return add, remove


def inject_noise(pristine: Graph, spec: NoiseSpec) -> tuple[Graph, EdgeDelta]:
    """Add uniformly random non-edges and remove uniformly random edges."""
    spec.validate()
    n, m = pristine.n, pristine.edge_count
    n_add, n_remove = noise_counts(m, spec)
    total_pairs = n * (n - 1) // 2
    if n_add > total_pairs - m:
        raise CapacityError(f"need {n_add} non-edges, only {total_pairs - m} exist")
    rng = np.random.default_rng(spec.seed)

    edges = pristine.edges
    drop = np.sort(rng.choice(m, size=n_remove, replace=False)) if n_remove else np.empty(0, np.int64)
    removed = [(int(a), int(b)) for a, b in edges[drop]]

    existing = set(pristine.edge_keys.tolist())
    added_keys: list[int] = []
    if n_add:
        if m > total_pairs // 2:
            iu, ju = _pairs_upper(n)
            free = np.setdiff1d(iu * n + ju, pristine.edge_keys, assume_unique=True)
            added_keys = sorted(rng.choice(free, size=n_add, replace=False).tolist())
        else:
            chosen: set[int] = set()
            while len(chosen) < n_add:
                a, b = rng.integers(0, n, size=2)
                if a == b:
                    continue
                key = int(min(a, b) * n + max(a, b))
                if key in existing or key in chosen:
                    continue
                chosen.add(key)
                added_keys.append(key)
    added = [(k // n, k % n) for k in added_keys]

    keep = np.ones(m, dtype=bool)
    keep[drop] = False
    new_edges = np.concatenate([edges[keep], np.array(added, dtype=np.int64).reshape(-1, 2)])
    observed = Graph.from_edges(n, new_edges)
    return observed, EdgeDelta(added=sorted(added), removed=removed)
