"""Undirected simple graphs over dense integer ids, plus edge-list/label I/O."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

log = logging.getLogger(__name__)


class GraphParseError(ValueError):
    """Malformed edge-list or label file."""


class GraphRangeError(IndexError):
    """Node id outside 0..n-1."""


class GraphShapeError(ValueError):
    """Two graphs that should share a node set do not."""


def _canonical_edges(n: int, edges) -> tuple[np.ndarray, int, int]:
    """Return unique (i<j) edges sorted lexicographically, plus drop counts."""
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise GraphRangeError(f"edge endpoint outside 0..{n - 1}")
    loops = arr[:, 0] == arr[:, 1]
    n_loops = int(loops.sum())
    arr = arr[~loops]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    keys = np.unique(lo * n + hi)
    n_dups = len(arr) - len(keys)
    out = np.stack([keys // n, keys % n], axis=1) if len(keys) else np.empty((0, 2), np.int64)
    return out, n_dups, n_loops


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph stored as CSR adjacency.

    ``indices[indptr[i]:indptr[i+1]]`` is the sorted neighbour list of node i.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> "Graph":
        canon, _, _ = _canonical_edges(n, list(edges) if not isinstance(edges, np.ndarray) else edges)
        return cls._from_canonical(n, canon)

    @classmethod
    def _from_canonical(cls, n: int, canon: np.ndarray) -> "Graph":
        src = np.concatenate([canon[:, 0], canon[:, 1]])
        dst = np.concatenate([canon[:, 1], canon[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        indptr.flags.writeable = False
        dst = np.ascontiguousarray(dst, dtype=np.int64)
        dst.flags.writeable = False
        return cls(n, indptr, dst)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def neighbors(self, node: int) -> np.ndarray:
        self._check(node)
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        pos = np.searchsorted(nb, j)
        return bool(pos < len(nb) and nb[pos] == j)

    @cached_property
    def edges(self) -> np.ndarray:
        """(edge_count, 2) array of pairs with smaller id first, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = src < self.indices
        out = np.stack([src[mask], self.indices[mask]], axis=1)
        out.flags.writeable = False
        return out

    @cached_property
    def edge_keys(self) -> np.ndarray:
        """Sorted scalar keys ``i * n + j`` (i < j), handy for set algebra."""
        e = self.edges
        return e[:, 0] * self.n + e[:, 1]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def _check(self, node: int) -> None:
        if not 0 <= node < self.n:
            raise GraphRangeError(f"node {node} outside 0..{self.n - 1}")

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edge_count={self.edge_count})"


def degree(graph: Graph, node: int) -> int:
    return len(graph.neighbors(node))


@dataclass
class LoadReport:
    duplicates: int = 0
    self_loops: int = 0
    id_map: dict[int, int] | None = None


def parse_edge_list(stream: TextIO, remap: bool = False) -> tuple[Graph, LoadReport]:
    """Read ``u v`` lines; ``#`` comments and an optional ``%n <count>`` header.

    With ``remap=True`` external ids are compacted to 0..n-1 in ascending
    order and the mapping is returned in the report.
    """
    pairs: list[tuple[int, int]] = []
    n_header = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("%n"):
            try:
                n_header = int(line.split()[1])
            except (IndexError, ValueError):
                raise GraphParseError(f"line {lineno}: bad node-count header {line!r}") from None
            continue
        tok = line.split()
        if len(tok) < 2:
            raise GraphParseError(f"line {lineno}: expected two node ids, got {line!r}")
        try:
            u, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphParseError(f"line {lineno}: non-integer node id in {line!r}") from None
        if u < 0 or v < 0:
            raise GraphParseError(f"line {lineno}: negative node id in {line!r}")
        pairs.append((u, v))

    report = LoadReport()
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    if remap:
        ext = np.unique(arr)
        report.id_map = {int(e): k for k, e in enumerate(ext)}
        arr = np.searchsorted(ext, arr)
        n = len(ext)
        if n_header is not None:
            n = max(n, n_header)
    else:
        n = int(arr.max()) + 1 if arr.size else 0
        if n_header is not None:
            if n_header < n:
                raise GraphRangeError(f"header declares {n_header} nodes but id {n - 1} appears")
            n = n_header
    canon, report.duplicates, report.self_loops = _canonical_edges(n, arr)
    return Graph._from_canonical(n, canon), report


def load_edge_list(stream: TextIO) -> Graph:
    graph, report = parse_edge_list(stream)
    if report.duplicates or report.self_loops:
        log.warning("dropped %d duplicate edges and %d self-loops", report.duplicates, report.self_loops)
    return graph


def write_edge_list(graph: Graph, stream: TextIO, header: bool = True) -> None:
    if header:
        stream.write(f"%n {graph.n}\n")
    for a, b in graph.edges:
        stream.write(f"{a} {b}\n")


@dataclass(frozen=True)
class LabelTable:
    labels: tuple[frozenset[int], ...]
    num_labels: int

    @property
    def multilabel(self) -> bool:
        return any(len(s) > 1 for s in self.labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    def labeled_nodes(self) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.labels) if s], dtype=np.int64)

    @classmethod
    def from_groups(cls, groups) -> "LabelTable":
        groups = np.asarray(groups, dtype=np.int64)
        return cls(tuple(frozenset((int(g),)) for g in groups), int(groups.max()) + 1 if groups.size else 0)


def load_labels(stream: TextIO, n: int) -> LabelTable:
    sets: list[set[int]] = [set() for _ in range(n)]
    top = -1
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            node, lab = int(tok[0]), int(tok[1])
        except (IndexError, ValueError):
            raise GraphParseError(f"line {lineno}: expected 'node label', got {line!r}") from None
        if not 0 <= node < n:
            raise GraphRangeError(f"line {lineno}: node {node} outside 0..{n - 1}")
        if lab < 0:
            raise GraphParseError(f"line {lineno}: negative label id")
        sets[node].add(lab)
        top = max(top, lab)
    return LabelTable(tuple(frozenset(s) for s in sets), top + 1)


def write_labels(table: LabelTable, stream: TextIO) -> None:
    for node, labs in enumerate(table.labels):
        for lab in sorted(labs):
            stream.write(f"{node} {lab}\n")


@dataclass(frozen=True)
class EdgeDelta:
    added: list[tuple[int, int]] = field(default_factory=list)
    removed: list[tuple[int, int]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.added and not self.removed


def edge_diff(observed: Graph, pristine: Graph) -> EdgeDelta:
    if observed.n != pristine.n:
        raise GraphShapeError(f"node counts differ: {observed.n} vs {pristine.n}")
    n = observed.n
    ok, pk = observed.edge_keys, pristine.edge_keys
    added = np.setdiff1d(ok, pk, assume_unique=True)
    removed = np.setdiff1d(pk, ok, assume_unique=True)
    return EdgeDelta(
        added=[(int(k // n), int(k % n)) for k in added],
        removed=[(int(k // n), int(k % n)) for k in removed],
    )


def apply_delta(graph: Graph, delta: EdgeDelta) -> Graph:
    keep = graph.edge_set().difference(delta.removed)
    keep.update(delta.added)
    return Graph.from_edges(graph.n, sorted(keep))


def write_delta(delta: EdgeDelta, stream: TextIO) -> None:
    for a, b in delta.added:
        stream.write(f"+{a} {b}\n")
    for a, b in delta.removed:
        stream.write(f"-{a} {b}\n")


def read_delta(stream: TextIO) -> EdgeDelta:
    added, removed = [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        sign, rest = line[0], line[1:].split()
        try:
            pair = (int(rest[0]), int(rest[1]))
        except (IndexError, ValueError):
            raise GraphParseError(f"line {lineno}: bad delta line {line!r}") from None
        if sign == "+":
            added.append(pair)
        elif sign == "-":
            removed.append(pair)
        else:
            raise GraphParseError(f"line {lineno}: delta lines start with + or -")
    return EdgeDelta(added, removed)
