"""Per-vertex topological metrics of an interaction network.

Fourteen measures are computed for every vertex: clustering, the six
degree/strength counts, weighted directed betweenness and six symmetry
measures built from in/out imbalance of edges and weights.
"""

from __future__ import annotations

import csv
import heapq
import math
from functools import reduce

import numpy as np

from .graph import InteractionNetwork

METRIC_NAMES = (
    "cc",
    "s",
    "s_in",
    "s_out",
    "k",
    "k_in",
    "k_out",
    "bt",
    "asy",
    "mu_asy",
    "sigma_asy",
    "dis",
    "mu_dis",
    "sigma_dis",
)
CENTRALITY_METRICS = ("s", "s_in", "s_out", "k", "k_in", "k_out", "bt")
SYMMETRY_METRICS = ("asy", "mu_asy", "sigma_asy", "dis", "mu_dis", "sigma_dis")


def degrees_strengths(network: InteractionNetwork) -> dict:
    """Map vertex -> (k, k_in, k_out, s, s_in, s_out)."""
    succ = network.successors()
    pred = network.predecessors()
    out = {}
    for v in network.vertices:
        s_out = sum(succ[v].values())
        s_in = sum(pred[v].values())
        k = len(succ[v].keys() | pred[v].keys())
        out[v] = (k, len(pred[v]), len(succ[v]), s_in + s_out, s_in, s_out)
    return out


def undirected_neighbors(network: InteractionNetwork) -> dict:
    nbrs = {v: set() for v in network.vertices}
    for a, b in network.weights:
        nbrs[a].add(b)
        nbrs[b].add(a)
    return nbrs


def clustering(network: InteractionNetwork) -> dict:
    """Undirected clustering coefficient; 0 for vertices with fewer than 2 neighbours."""
    nbrs = undirected_neighbors(network)
    cc = {}
    for v, nv in nbrs.items():
        k = len(nv)
        if k < 2:
            cc[v] = 0.0
            continue
        links = sum(len(nbrs[u] & nv) for u in nv) // 2
        cc[v] = 2.0 * links / (k * (k - 1))
    return cc


def _integer_lengths(network: InteractionNetwork):
    # distance 1/w expressed exactly as lcm(weights)/w
    if not network.weights:
        return {}
    scale = reduce(math.lcm, set(network.weights.values()))
    return {pair: scale // w for pair, w in network.weights.items()}


def _single_source(source, adj, order):
    """Dijkstra pass returning settle order, geodesic predecessors and path counts."""
    stack = []
    preds: dict = {source: []}
    sigma = {source: 1}
    settled: dict = {}
    seen = {source: 0}
    heap = [(0, order[source], source, source)]
    while heap:
        d, _, via, v = heapq.heappop(heap)
        if v in settled:
            continue
        if v != source:
            sigma[v] += sigma[via]
        settled[v] = d
        stack.append(v)
        for w, dvw in adj[v]:
            nd = d + dvw
            if w not in settled and (w not in seen or nd < seen[w]):
                seen[w] = nd
                heapq.heappush(heap, (nd, order[w], v, w))
                sigma[w] = 0
                preds[w] = [v]
            elif nd == seen.get(w) and w not in settled:
                sigma[w] += sigma[v]
                preds[w].append(v)
    return stack, preds, sigma


def betweenness(network: InteractionNetwork, normalized: bool = True) -> dict:
    """Brandes betweenness over weighted directed shortest paths.

    Edge length is ``1 / weight``, so frequent interaction means a short
    distance. Lengths are rescaled to exact integers before the Dijkstra
    passes, which keeps ties between equal-length geodesics exact.
    With ``normalized`` the pair dependencies are divided by
    ``(N - 1)(N - 2)``.
    """
    verts = network.vertices
    n = len(verts)
    bt = dict.fromkeys(verts, 0.0)
    if n < 3 or not network.weights:
        return bt
    length = _integer_lengths(network)
    adj: dict = {v: [] for v in verts}
    for (a, b), d in length.items():
        adj[a].append((b, d))
    order = {v: i for i, v in enumerate(verts)}

    for s in verts:
        stack, preds, sigma = _single_source(s, adj, order)
        delta = dict.fromkeys(stack, 0.0)
        for w in reversed(stack):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds.get(w, ()):
                delta[v] += sigma[v] * coeff
            if w != s:
                bt[w] += delta[w]
    if normalized:
        scale = 1.0 / ((n - 1) * (n - 2))
        bt = {v: val * scale for v, val in bt.items()}
    return bt


def symmetry_metrics(network: InteractionNetwork) -> dict:
    """Map vertex -> (asy, mu_asy, sigma_asy, dis, mu_dis, sigma_dis).

    Edge asymmetry of neighbour j is ``e_ji - e_ij`` and edge disequilibrium
    is ``(w_ji - w_ij) / s``. Means and population deviations run over the
    undirected neighbourhood. Isolated vertices get zeros, and the
    disequilibrium family is zero whenever s is zero.
    """
    succ = network.successors()
    pred = network.predecessors()
    out = {}
    for v in network.vertices:
        nbrs = succ[v].keys() | pred[v].keys()
        k = len(nbrs)
        if k == 0:
            out[v] = (0.0,) * 6
            continue
        s_in = sum(pred[v].values())
        s_out = sum(succ[v].values())
        s = s_in + s_out
        edge_asy = np.array(
            [(j in pred[v]) - (j in succ[v]) for j in nbrs], dtype=float
        )
        asy = (len(pred[v]) - len(succ[v])) / k
        mu_asy = edge_asy.sum() / k
        sigma_asy = math.sqrt(((edge_asy - mu_asy) ** 2).sum() / k)
        if s == 0:
            out[v] = (asy, mu_asy, sigma_asy, 0.0, 0.0, 0.0)
            continue
        edge_dis = np.array(
            [(pred[v].get(j, 0) - succ[v].get(j, 0)) / s for j in nbrs], dtype=float
        )
        dis = (s_in - s_out) / s
        mu_dis = edge_dis.sum() / k
        sigma_dis = math.sqrt(((edge_dis - mu_dis) ** 2).sum() / k)
        out[v] = (asy, mu_asy, sigma_asy, dis, mu_dis, sigma_dis)
    return out


def metrics_table(network: InteractionNetwork, with_betweenness: bool = True) -> dict:
    """Map vertex -> dict of the 14 named metrics."""
    ds = degrees_strengths(network)
    cc = clustering(network)
    bt = betweenness(network) if with_betweenness else dict.fromkeys(network.vertices, 0.0)
    sym = symmetry_metrics(network)
    table = {}
    for v in network.vertices:
        k, k_in, k_out, s, s_in, s_out = ds[v]
        asy, mu_asy, sigma_asy, dis, mu_dis, sigma_dis = sym[v]
        table[v] = {
            "cc": cc[v],
            "s": s,
            "s_in": s_in,
            "s_out": s_out,
            "k": k,
            "k_in": k_in,
            "k_out": k_out,
            "bt": bt[v],
            "asy": asy,
            "mu_asy": mu_asy,
            "sigma_asy": sigma_asy,
            "dis": dis,
            "mu_dis": mu_dis,
            "sigma_dis": sigma_dis,
        }
    return table


def metrics_matrix(network: InteractionNetwork):
    """Return ``(vertices, X)`` with X of shape (N, 14), columns in METRIC_NAMES order."""
    table = metrics_table(network)
    X = np.array(
        [[table[v][name] for name in METRIC_NAMES] for v in network.vertices], dtype=float
    ).reshape(len(network.vertices), len(METRIC_NAMES))
    return network.vertices, X


def write_metrics_csv(network: InteractionNetwork, path) -> None:
    vertices, X = metrics_matrix(network)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", *METRIC_NAMES])
        for v, row in zip(vertices, X):
            writer.writerow([v, *(f"{x:.10g}" for x in row)])
