"""Erdős sectioning of interaction networks.

Vertices are split into periphery, intermediary and hub sectors by comparing
the empirical distribution of a connectivity measure against the binomial
distribution of an Erdős–Rényi digraph with the same vertex and edge
counts. Degree values whose bins are *less* populated than the null are
intermediary; the low and high fat tails are periphery and hubs.

Six simple criteria are supported (total, in and out degree and strength)
plus six compound criteria combining them.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .graph import InteractionNetwork
from .metrics import degrees_strengths

logger = logging.getLogger(__name__)

PERIPHERY = "periphery"
INTERMEDIARY = "intermediary"
HUB = "hub"
UNCLASSIFIED = "unclassified"
MULTIPLE = "multiple"
SECTORS = (PERIPHERY, INTERMEDIARY, HUB)

SIMPLE_CRITERIA = ("k", "k_in", "k_out", "s", "s_in", "s_out")
COMPOUND_CRITERIA = ("C1", "C2", "C3", "C4", "C5", "C6")
DIRECTIONAL = {"k_in", "k_out", "s_in", "s_out"}
_COLUMN = {"k": 0, "k_in": 1, "k_out": 2, "s": 3, "s_in": 4, "s_out": 5}

DEFAULT_ETA = 10


class DegenerateNetworkError(ValueError):
    pass


@dataclass(frozen=True)
class NullModel:
    n_vertices: int
    n_edges: int
    p_e: float
    mean_weight: Optional[Fraction]

    @property
    def trials_total(self) -> int:
        return 2 * (self.n_vertices - 1)

    @property
    def trials_directional(self) -> int:
        return self.n_vertices - 1


def null_model(network: InteractionNetwork, literal_mean_weight: bool = False) -> NullModel:
    """Erdős–Rényi digraph matching the network's vertex and edge counts.

    ``mean_weight`` is ``sum(s) / (2 z)``, i.e. the total weight divided by
    the edge count, as an exact fraction. With ``literal_mean_weight`` the
    reciprocal ``2 z / sum(s)`` is used instead, for comparison runs.
    """
    n = network.n_vertices
    if n < 2:
        raise DegenerateNetworkError(f"null model needs N >= 2 vertices, got {n}")
    z = network.n_edges
    p_e = z / (n * (n - 1))
    mean_w = None
    if z > 0:
        total_strength = 2 * network.total_weight
        if literal_mean_weight:
            mean_w = Fraction(2 * z, total_strength)
        else:
            mean_w = Fraction(total_strength, 2 * z)
    return NullModel(n, z, p_e, mean_w)


def binomial_pmf(k, trials: int, p: float):
    """Binomial mass; zero outside ``[0, trials]``."""
    from scipy.stats import binom

    k_arr = np.atleast_1d(np.asarray(k))
    out = np.zeros(k_arr.shape, dtype=float)
    valid = (k_arr >= 0) & (k_arr <= trials)
    if valid.any():
        out[valid] = binom.pmf(k_arr[valid], trials, p)
    if np.ndim(k) == 0:
        return float(out[0])
    return out


def null_pmf_total(model: NullModel, k):
    """P(k) for the total degree: Binomial(2(N-1), p_e)."""
    return binomial_pmf(k, model.trials_total, model.p_e)


def null_pmf_directional(model: NullModel, k_way):
    """P(k) for in- or out-degree: Binomial(N-1, p_e)."""
    return binomial_pmf(k_way, model.trials_directional, model.p_e)


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def rescaled_values(
    network: InteractionNetwork, criterion: str, literal_mean_weight: bool = False
) -> dict:
    """Map vertex -> integer connectivity value for a simple criterion.

    Degrees pass through unchanged. Strengths are divided by the mean edge
    weight and rounded to the nearest integer (halves round up), so they can
    be looked up in the binomial null.
    """
    if criterion not in _COLUMN:
        raise ValueError(f"unknown simple criterion {criterion!r}")
    col = _COLUMN[criterion]
    ds = degrees_strengths(network)
    if criterion.startswith("k"):
        return {v: ds[v][col] for v in network.vertices}
    model = null_model(network, literal_mean_weight)
    if model.mean_weight is None:
        raise DegenerateNetworkError("strength rescaling needs at least one edge")
    return {v: _round_half_up(Fraction(ds[v][col]) / model.mean_weight) for v in network.vertices}


@dataclass(frozen=True)
class Bin:
    k_min: int
    k_max: int
    vertex_count: int
    empirical_mass: float
    null_mass: float

    @property
    def intermediary(self) -> bool:
        return self.empirical_mass < self.null_mass


@dataclass(frozen=True)
class BinnedDistribution:
    bins: tuple
    eta: int

    def intermediary_bins(self) -> list:
        return [b for b in self.bins if b.intermediary]


def bin_and_compare(values: Sequence[int], pmf, eta: int = DEFAULT_ETA) -> BinnedDistribution:
    """Group integer values into bins of at least ``eta`` vertices and compare masses.

    Bins are contiguous from 0 up to the largest observed value and built
    greedily in ascending order. A trailing remainder with fewer than
    ``eta`` vertices is merged into the last full bin. ``pmf`` maps an
    integer array to null probabilities.
    """
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta}")
    values = np.asarray(list(values), dtype=int)
    if values.size == 0:
        return BinnedDistribution((), eta)
    if values.min() < 0:
        raise ValueError("connectivity values must be non-negative")
    n = values.size
    k_max = int(values.max())
    counts = np.bincount(values, minlength=k_max + 1)
    null = np.asarray(pmf(np.arange(k_max + 1)), dtype=float)

    edges = []
    lo = 0
    acc = 0
    for k in range(k_max + 1):
        acc += counts[k]
        if acc >= eta:
            edges.append((lo, k))
            lo = k + 1
            acc = 0
    if lo <= k_max:
        if edges:
            edges[-1] = (edges[-1][0], k_max)
        else:
            edges.append((0, k_max))

    bins = []
    for a, b in edges:
        c = int(counts[a : b + 1].sum())
        bins.append(Bin(a, b, c, c / n, float(null[a : b + 1].sum())))
    return BinnedDistribution(tuple(bins), eta)


def thresholds(binned: BinnedDistribution):
    """Return ``(k_L, k_R)`` or ``None`` when no bin is intermediary.

    The intermediary sector spans from the first to the last intermediary
    bin, absorbing any non-intermediary bins in between.
    """
    inter = binned.intermediary_bins()
    if not inter:
        return None
    return inter[0].k_min - 1, inter[-1].k_max


@dataclass
class ErdosPartition:
    """Sector assignment for every vertex under one criterion.

    For the union criterion C2, ``classes`` holds the full set of sectors a
    vertex belongs to and ``sector`` is ``"multiple"`` when there are
    several.
    """

    criterion: str
    sector: dict
    k_L: Optional[int] = None
    k_R: Optional[int] = None
    degenerate: Optional[str] = None
    classes: dict = field(default_factory=dict)

    @property
    def vertices(self) -> tuple:
        return tuple(self.sector)

    def members(self, name: str) -> set:
        if self.classes:
            return {v for v, cls in self.classes.items() if name in cls}
        return {v for v, sec in self.sector.items() if sec == name}

    def fractions(self) -> dict:
        n = len(self.sector)
        if n == 0:
            return {"hub": 0.0, "intermediary": 0.0, "periphery": 0.0, "extra": 0.0}
        out = {name: len(self.members(name)) / n for name in SECTORS}
        if self.criterion == "C1":
            out["extra"] = sum(1 for s in self.sector.values() if s == UNCLASSIFIED) / n
        elif self.criterion == "C2":
            out["extra"] = sum(1 for s in self.sector.values() if s == MULTIPLE) / n
        else:
            out["extra"] = 0.0
        return out


def _pmf_for(criterion: str, model: NullModel):
    if criterion in DIRECTIONAL:
        return lambda k: null_pmf_directional(model, k)
    return lambda k: null_pmf_total(model, k)


def classify_simple(
    network: InteractionNetwork,
    criterion: str,
    eta: int = DEFAULT_ETA,
    literal_mean_weight: bool = False,
) -> ErdosPartition:
    """Sector each vertex by thresholds on its (rescaled) connectivity.

    periphery: value <= k_L; intermediary: k_L < value <= k_R; hub: value > k_R.
    Two degenerate cases are flagged on the partition: with no edges at all
    every vertex is periphery, and when no bin is underrepresented against
    the null every vertex is intermediary.
    """
    model = null_model(network, literal_mean_weight)
    if model.n_edges == 0:
        return ErdosPartition(
            criterion, dict.fromkeys(network.vertices, PERIPHERY), degenerate="no-edges"
        )
    values = rescaled_values(network, criterion, literal_mean_weight)
    binned = bin_and_compare([values[v] for v in network.vertices], _pmf_for(criterion, model), eta)
    th = thresholds(binned)
    if th is None:
        logger.debug("criterion %s: no intermediary bin, degenerate partition", criterion)
        return ErdosPartition(
            criterion,
            dict.fromkeys(network.vertices, INTERMEDIARY),
            degenerate="no-intermediary",
        )
    k_L, k_R = th
    sector = {}
    for v in network.vertices:
        x = values[v]
        if x <= k_L:
            sector[v] = PERIPHERY
        elif x <= k_R:
            sector[v] = INTERMEDIARY
        else:
            sector[v] = HUB
    return ErdosPartition(criterion, sector, k_L, k_R)


def classify_all_simple(network: InteractionNetwork, eta: int = DEFAULT_ETA, **kw) -> dict:
    return {c: classify_simple(network, c, eta, **kw) for c in SIMPLE_CRITERIA}


def _compound_one(delta: str, labels: Sequence[str]):
    has = set(labels)
    if delta == "C1":
        return labels[0] if len(has) == 1 else UNCLASSIFIED
    if delta == "C2":
        return frozenset(has)
    if delta == "C3":
        if has == {HUB}:
            return HUB
        if PERIPHERY not in has:
            return INTERMEDIARY
        return PERIPHERY
    if delta == "C4":
        if HUB in has:
            return HUB
        if INTERMEDIARY in has:
            return INTERMEDIARY
        return PERIPHERY
    if delta == "C5":
        if has == {HUB}:
            return HUB
        if has & {PERIPHERY, HUB}:
            return PERIPHERY
        return INTERMEDIARY
    if delta == "C6":
        if HUB in has:
            return HUB
        if PERIPHERY in has:
            return PERIPHERY
        return INTERMEDIARY
    raise ValueError(f"unknown compound criterion {delta!r}")


def classify_compound(partitions: Mapping, delta: str) -> ErdosPartition:
    """Combine simple partitions into one compound assignment.

    C1 keeps unanimous classes only; C2 takes the union of classes; C3/C4 are
    exclusive/inclusive cascades toward hubs; C5/C6 exclusive/inclusive
    externals.
    """
    parts = list(partitions.values()) if isinstance(partitions, Mapping) else list(partitions)
    if not parts:
        raise ValueError("no partitions to combine")
    verts = set(parts[0].sector)
    for p in parts[1:]:
        if set(p.sector) != verts:
            raise ValueError("partitions cover different vertex sets")
    order = list(parts[0].sector)
    sector = {}
    classes = {}
    for v in order:
        res = _compound_one(delta, [p.sector[v] for p in parts])
        if delta == "C2":
            classes[v] = res
            sector[v] = next(iter(res)) if len(res) == 1 else MULTIPLE
        else:
            sector[v] = res
    degenerate = ",".join(sorted({p.degenerate for p in parts if p.degenerate})) or None
    return ErdosPartition(delta, sector, degenerate=degenerate, classes=classes)


def classify(network: InteractionNetwork, criterion: str, eta: int = DEFAULT_ETA, **kw) -> ErdosPartition:
    if criterion in SIMPLE_CRITERIA:
        return classify_simple(network, criterion, eta, **kw)
    if criterion in COMPOUND_CRITERIA:
        return classify_compound(classify_all_simple(network, eta, **kw), criterion)
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass(frozen=True)
class TimelineRow:
    window_start: int
    criterion: str
    hub_frac: float
    inter_frac: float
    peri_frac: float
    extra_frac: float
    degenerate: Optional[str] = None


def sector_timeline(snapshots: Sequence, criterion: str, eta: int = DEFAULT_ETA, **kw) -> list:
    """Per-window sector fractions, in window order."""
    if not snapshots:
        raise ValueError("sector timeline needs at least one snapshot")
    rows = []
    for snap in snapshots:
        part = classify(snap.network, criterion, eta, **kw)
        f = part.fractions()
        rows.append(
            TimelineRow(
                snap.window_start,
                criterion,
                f["hub"],
                f["intermediary"],
                f["periphery"],
                f["extra"],
                part.degenerate,
            )
        )
    return rows


TIMELINE_HEADER = ["window_start", "criterion", "hub_frac", "inter_frac", "peri_frac", "extra_frac"]


def write_timeline_csv(rows: Sequence[TimelineRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMELINE_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.window_start,
                    r.criterion,
                    f"{r.hub_frac:.10g}",
                    f"{r.inter_frac:.10g}",
                    f"{r.peri_frac:.10g}",
                    f"{r.extra_frac:.10g}",
                ]
            )


def write_vertex_sectors_csv(partitions: Sequence[ErdosPartition], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", "criterion", "sector"])
        for part in partitions:
            for v in sorted(part.sector):
                if part.classes and len(part.classes[v]) > 1:
                    label = "+".join(s for s in SECTORS if s in part.classes[v])
                else:
                    label = part.sector[v]
                writer.writerow([v, part.criterion, label])
