"""Truncated random walks, window context pairs and degree-biased negatives."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .graph import Graph


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 1 or self.window < 1 or self.walks_per_node < 1:
            raise ValueError("walk_length, window and walks_per_node must all be >= 1")


@dataclass(frozen=True)
class TrainingPair:
    center: int
    context: int
    positive: bool = True


def generate_walks(graph: Graph, config: WalkConfig, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Uniform random walks; ``walks_per_node`` passes over a shuffled node order.

    Walks started from an isolated node stop immediately (length 1).
    """
    if graph.n == 0:
        raise ValueError("cannot walk an empty graph")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    indptr, indices = graph.indptr, graph.indices
    deg = np.diff(indptr)
    L = config.walk_length
    walks = []
    nodes = np.arange(graph.n)
    for _ in range(config.walks_per_node):
        order = rng.permutation(nodes)
        for start in order:
            if deg[start] == 0:
                walks.append(np.array([start], dtype=np.int64))
                continue
            steps = rng.random(L - 1)
            walk = np.empty(L, dtype=np.int64)
            cur = walk[0] = start
            for t in range(1, L):
                cur = indices[indptr[cur] + int(steps[t - 1] * deg[cur])]
                walk[t] = cur
            walks.append(walk)
    return walks


def extract_pairs(walk: Iterable[int], window: int) -> list[TrainingPair]:
    """Positive (center, context) pairs in position-major order, skipping revisits."""
    walk = list(walk)
    out = []
    for i, c in enumerate(walk):
        for j in range(max(0, i - window), min(len(walk), i + window + 1)):
            if j != i and walk[j] != c:
                out.append(TrainingPair(int(c), int(walk[j]), True))
    return out


def corpus_pairs(walks: list[np.ndarray], window: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``extract_pairs`` over a corpus; returns (centers, contexts)."""
    if not walks:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    L = max(len(w) for w in walks)
    padded = np.full((len(walks), L + 2 * window), -1, dtype=np.int64)
    for r, w in enumerate(walks):
        padded[r, window:window + len(w)] = w
    offsets = np.array([o for o in range(-window, window + 1) if o != 0])
    center = padded[:, window:window + L]
    ctx = np.stack([padded[:, window + o:window + o + L] for o in offsets], axis=2)
    center = np.broadcast_to(center[:, :, None], ctx.shape)
    keep = (center >= 0) & (ctx >= 0) & (center != ctx)
    return center[keep].copy(), ctx[keep].copy()


def write_corpus(walks: list[np.ndarray], stream: TextIO) -> None:
    for w in walks:
        stream.write(" ".join(map(str, w)) + "\n")


def read_corpus(stream: TextIO) -> list[np.ndarray]:
    return [np.array(line.split(), dtype=np.int64) for line in stream if line.strip()]


@dataclass(frozen=True)
class NegativeSampler:
    """Cumulative table over nodes with mass proportional to degree**exponent."""

    cdf: np.ndarray
    probs: np.ndarray
    exponent: float
    k: int
    max_retries: int = 10

    @classmethod
    def from_graph(cls, graph: Graph, exponent: float = 0.75, k: int = 5) -> "NegativeSampler":
        return cls.from_degrees(graph.degrees, exponent, k)

    @classmethod
    def from_degrees(cls, degrees, exponent: float = 0.75, k: int = 5) -> "NegativeSampler":
        deg = np.asarray(degrees, dtype=float)
        weights = np.where(deg > 0, deg ** exponent, 0.0)
        total = weights.sum()
        if total <= 0:
            raise SamplingError("negative sampler needs a graph with at least one edge")
        probs = weights / total
        cdf = np.cumsum(probs)
        # pin the top so trailing zero-mass nodes are unreachable
        cdf[np.flatnonzero(weights)[-1]:] = 1.0
        return cls(cdf, probs, exponent, k)

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = np.searchsorted(self.cdf, rng.random(size), side="right")
        # guard the u == cdf[-1] edge and zero-mass tail nodes
        return np.minimum(idx, len(self.cdf) - 1)

    def _degenerate_for(self, center: int) -> bool:
        return self.probs[center] >= 1.0 - 1e-12


def sample_negatives(sampler: NegativeSampler, center: int, count: int, rng: np.random.Generator) -> list[TrainingPair]:
    if count == 0:
        return []
    if sampler._degenerate_for(center):
        raise SamplingError(f"all negative-sampling mass sits on node {center}")
    drawn = draw_negatives(sampler, np.array([center]), rng, count)[0]
    return [TrainingPair(center, int(v), False) for v in drawn if v >= 0]


def draw_negatives(sampler: NegativeSampler, centers: np.ndarray, rng: np.random.Generator,
                   k: int | None = None) -> np.ndarray:
    """(len(centers), k) negatives; draws hitting the center are redrawn, then marked -1."""
    k = sampler.k if k is None else k
    out = sampler.draw(rng, (len(centers), k))
    bad = out == centers[:, None]
    for _ in range(sampler.max_retries):
        if not bad.any():
            break
        redraw = sampler.draw(rng, int(bad.sum()))
        out[bad] = redraw
        bad = out == centers[:, None]
    out[bad] = -1
    return out
