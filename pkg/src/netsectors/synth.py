"""Seeded synthetic message streams.

Three generators are available:

``erdos_renyi``
    Directed G(N, p) graph, written as messages (a root and its reply per
    edge, plus a lone root for each isolated vertex).
``preferential_attachment``
    Growing digraph where each new vertex links to ``m`` earlier vertices
    chosen with probability proportional to ``(degree + 1) ** exponent``.
``reply_process``
    A mailing-list-like stream: authors with heavy-tailed activity write
    messages that either open a thread or reply to a recent message, with
    the target picked in proportion to its author's current degree + 1.

Identical parameters and seed always give an identical message list.
"""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .ingest import Message

GENERATORS = ("erdos_renyi", "preferential_attachment", "reply_process")

BASE_EPOCH = 1_104_537_600  # 2005-01-01T00:00:00Z


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    generator: str
    n: int = 1000
    p: float = 0.01
    m: int = 5
    exponent: float = 1.0
    n_messages: int = 20000
    n_authors: int = 1500
    activity_sigma: float = 2.0
    reply_prob: float = 0.8
    horizon: int = 60
    memory: int = 1000
    newcomer_scale: float = 1.0
    mean_gap: float = 1800.0
    seed: int = 0

    def validate(self) -> None:
        if self.generator not in GENERATORS:
            raise SynthError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.generator in ("erdos_renyi", "preferential_attachment") and self.n < 2:
            raise SynthError(f"n must be >= 2, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise SynthError(f"p must be in [0, 1], got {self.p}")
        if self.generator == "preferential_attachment" and not 1 <= self.m < self.n:
            raise SynthError(f"m must satisfy 1 <= m < n, got m={self.m}, n={self.n}")
        if self.exponent < 0:
            raise SynthError(f"exponent must be >= 0, got {self.exponent}")
        if self.generator == "reply_process":
            if self.n_messages < 1 or self.n_authors < 2:
                raise SynthError("reply_process needs n_messages >= 1 and n_authors >= 2")
            if not 0.0 <= self.reply_prob <= 1.0:
                raise SynthError(f"reply_prob must be in [0, 1], got {self.reply_prob}")
            if self.horizon < 1 or self.memory < 1 or self.activity_sigma <= 0 or self.mean_gap <= 0:
                raise SynthError("horizon, memory, activity_sigma and mean_gap must be positive")
            if self.newcomer_scale < 0:
                raise SynthError(f"newcomer_scale must be >= 0, got {self.newcomer_scale}")

    def to_dict(self) -> dict:
        return asdict(self)


def _vertex_name(i: int) -> str:
    return f"v{i:06d}@synth.example"


def _edges_to_messages(n: int, edges, rng) -> list:
    """Write each directed edge a -> b as a root by a followed by b's reply.

    Edges are written in random order and vertices without edges get a
    single unanswered root, so the network of the whole stream is exactly
    the input graph and any window of the stream holds a random edge sample.
    """
    msgs = []
    t = BASE_EPOCH
    touched = set()
    for e, i in enumerate(rng.permutation(len(edges))):
        a, b = edges[int(i)]
        t += int(rng.integers(1, 120))
        msgs.append(Message(f"r{e:07d}", _vertex_name(a), t))
        t += int(rng.integers(1, 120))
        msgs.append(Message(f"e{e:07d}", _vertex_name(b), t, f"r{e:07d}"))
        touched.update((a, b))
    for i in range(n):
        if i not in touched:
            t += int(rng.integers(1, 120))
            msgs.append(Message(f"v{i:06d}", _vertex_name(i), t))
    return msgs


def erdos_renyi_edges(n: int, p: float, rng) -> list:
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    return [(int(a), int(b)) for a, b in zip(*np.nonzero(mask))]


def preferential_attachment_edges(n: int, m: int, exponent: float, rng) -> list:
    """Directed growth: each new vertex picks ``m`` distinct earlier targets.

    Target weight is ``(degree + 1) ** exponent``; the edge direction is drawn
    at random so that in- and out-degrees both carry the attachment bias.
    """
    deg = np.zeros(n)
    edges = []
    for new in range(1, n):
        k = min(m, new)
        w = (deg[:new] + 1.0) ** exponent
        targets = rng.choice(new, size=k, replace=False, p=w / w.sum())
        for t in targets:
            if rng.random() < 0.5:
                edges.append((int(t), new))
            else:
                edges.append((new, int(t)))
            deg[t] += 1
            deg[new] += 1
    return edges


def reply_process(spec: SyntheticSpec, rng) -> list:
    n_auth = spec.n_authors
    activity = rng.lognormal(0.0, spec.activity_sigma, n_auth)
    activity /= activity.sum()
    # per-author tendency to reply rather than open a thread
    reply_bias = rng.beta(4.0, 1.0, n_auth) * spec.reply_prob / 0.8
    # occasional posters mostly open threads rather than answer
    if spec.newcomer_scale > 0:
        em = activity * spec.n_messages
        reply_bias *= em / (em + spec.newcomer_scale)
    reply_bias = np.clip(reply_bias, 0.0, 1.0)
    authors = rng.choice(n_auth, size=spec.n_messages, p=activity)
    gaps = rng.exponential(spec.mean_gap, spec.n_messages).astype(np.int64) + 1
    coins = rng.random(spec.n_messages)

    # degree counts distinct partners over the last ``memory`` messages
    pair_count: dict = {}
    degree = np.zeros(n_auth)
    recent_pairs: deque = deque()
    last_msg = np.full(n_auth, -(10**9), dtype=np.int64)
    msgs = []
    t = BASE_EPOCH
    for i in range(spec.n_messages):
        a = int(authors[i])
        t += int(gaps[i])
        reply_to = None
        pair = None
        active = np.flatnonzero(last_msg >= i - spec.horizon) if i > 0 else ()
        if len(active) and coins[i] < reply_bias[a]:
            w = degree[active] + 1.0
            b = int(active[int(rng.choice(len(active), p=w / w.sum()))])
            reply_to = f"m{int(last_msg[b]):07d}"
            if b != a:
                pair = (min(a, b), max(a, b))
                c = pair_count.get(pair, 0)
                if c == 0:
                    degree[a] += 1
                    degree[b] += 1
                pair_count[pair] = c + 1
        recent_pairs.append(pair)
        if len(recent_pairs) > spec.memory:
            old = recent_pairs.popleft()
            if old is not None:
                c = pair_count[old] - 1
                if c == 0:
                    del pair_count[old]
                    degree[old[0]] -= 1
                    degree[old[1]] -= 1
                else:
                    pair_count[old] = c
        last_msg[a] = i
        msgs.append(Message(f"m{i:07d}", f"u{a:05d}@synth.example", t, reply_to))
    return msgs


def generate(spec: SyntheticSpec) -> list:
    """Produce the message list described by ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    if spec.generator == "erdos_renyi":
        return _edges_to_messages(spec.n, erdos_renyi_edges(spec.n, spec.p, rng), rng)
    if spec.generator == "preferential_attachment":
        edges = preferential_attachment_edges(spec.n, spec.m, spec.exponent, rng)
        return _edges_to_messages(spec.n, edges, rng)
    return reply_process(spec, rng)
