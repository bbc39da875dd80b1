"""Directed weighted interaction networks and sliding message windows.

A reply by B to a message written by A adds one unit of weight to the edge
A -> B (information flows from A to B). Self-replies are ignored.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionNetwork:
    """Sparse weighted digraph over participant identity keys.

    ``vertices`` is sorted lexicographically; ``weights`` maps ordered pairs
    ``(src, dst)`` to positive integer weights.
    """

    vertices: tuple
    weights: Mapping = field(default_factory=dict)

    @classmethod
    def from_edges(cls, edges: Iterable, vertices: Iterable = ()) -> "InteractionNetwork":
        """Build from ``(src, dst, weight)`` triples; repeated pairs accumulate."""
        w: dict = defaultdict(int)
        verts = set(vertices)
        for src, dst, weight in edges:
            verts.add(src)
            verts.add(dst)
            if src == dst or weight <= 0:
                continue
            w[(src, dst)] += int(weight)
        return cls(tuple(sorted(verts)), dict(w))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def weight(self, src, dst) -> int:
        return self.weights.get((src, dst), 0)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def successors(self) -> dict:
        out: dict = {v: {} for v in self.vertices}
        for (a, b), w in self.weights.items():
            out[a][b] = w
        return out

    def predecessors(self) -> dict:
        out: dict = {v: {} for v in self.vertices}
        for (a, b), w in self.weights.items():
            out[b][a] = w
        return out

    def scaled(self, factor: int) -> "InteractionNetwork":
        return InteractionNetwork(
            self.vertices, {k: w * factor for k, w in self.weights.items()}
        )


@dataclass(frozen=True)
class WindowSpec:
    ws: int
    step: int = 0

    def __post_init__(self):
        if self.ws < 1:
            raise WindowError(f"window size must be >= 1, got {self.ws}")
        if self.step == 0:
            object.__setattr__(self, "step", self.ws)
        if self.step < 1:
            raise WindowError(f"step must be >= 1, got {self.step}")

    def offsets(self, n_messages: int) -> list:
        if self.ws > n_messages:
            raise WindowError(
                f"window size ws={self.ws} exceeds message count M={n_messages}"
            )
        return list(range(0, n_messages - self.ws + 1, self.step))


@dataclass(frozen=True)
class Snapshot:
    window_start: int
    window_end: int
    network: InteractionNetwork


def build_network(messages: Sequence) -> InteractionNetwork:
    """Interaction network of one slice of messages.

    Reply targets outside the slice are treated as absent. Every author in
    the slice is a vertex, including those without any edge.
    """
    author_of = {m.id: m.author for m in messages}
    weights: dict = defaultdict(int)
    for m in messages:
        if m.reply_to is None:
            continue
        target_author = author_of.get(m.reply_to)
        if target_author is None or target_author == m.author:
            continue
        weights[(target_author, m.author)] += 1
    return InteractionNetwork(tuple(sorted(set(author_of.values()))), dict(weights))


def window_snapshots(corpus, spec: WindowSpec) -> list:
    messages = corpus.messages
    snaps = []
    for start in spec.offsets(len(messages)):
        end = start + spec.ws
        snaps.append(Snapshot(start, end, build_network(messages[start:end])))
    return snaps


def weak_components(network: InteractionNetwork) -> list:
    parent = {v: v for v in network.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in network.weights:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = defaultdict(list)
    for v in network.vertices:
        groups[find(v)].append(v)
    return sorted(groups.values(), key=len, reverse=True)


def giant_component_fraction(network: InteractionNetwork) -> float:
    if network.n_vertices == 0:
        return 0.0
    return len(weak_components(network)[0]) / network.n_vertices


def write_edge_csv(network: InteractionNetwork, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "weight"])
        for (a, b) in sorted(network.weights):
            writer.writerow([a, b, network.weights[(a, b)]])


def write_vertex_csv(network: InteractionNetwork, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex"])
        for v in network.vertices:
            writer.writerow([v])
