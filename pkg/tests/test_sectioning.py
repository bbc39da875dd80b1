import csv
import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsectors.graph import InteractionNetwork, Snapshot, build_network
from netsectors.ingest import build_corpus
from netsectors.sectioning import (
    COMPOUND_CRITERIA,
    HUB,
    INTERMEDIARY,
    MULTIPLE,
    PERIPHERY,
    SECTORS,
    SIMPLE_CRITERIA,
    UNCLASSIFIED,
    Bin,
    BinnedDistribution,
    DegenerateNetworkError,
    ErdosPartition,
    bin_and_compare,
    classify,
    classify_all_simple,
    classify_compound,
    classify_simple,
    null_model,
    null_pmf_directional,
    null_pmf_total,
    rescaled_values,
    sector_timeline,
    thresholds,
    write_timeline_csv,
    write_vertex_sectors_csv,
)
from netsectors.synth import SyntheticSpec, generate
from oracles import binomial_mass

net = InteractionNetwork.from_edges

# Binomial(20, 1/11) mass over k = 0..10, from the exact-fraction oracle.
STAR_MERGED_BIN_NULL = 0.9999997304012466


def test_null_model_examples():
    m = null_model(net([("a", "b", 4)]))
    assert m.p_e == 0.5 and m.mean_weight == 4
    full = net([(a, b, 1) for a, b in permutations("abc", 2)])
    assert null_model(full).p_e == 1
    assert null_model(net([("a", "b", 4)]), literal_mean_weight=True).mean_weight == Fraction(1, 4)
    with pytest.raises(DegenerateNetworkError):
        null_model(InteractionNetwork(("a",), {}))


def test_total_pmf_examples():
    m = null_model(net([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]))
    assert m.p_e == 0.5
    assert null_pmf_total(m, 0) == pytest.approx(1 / 16, abs=1e-15)
    assert null_pmf_total(m, 2) == pytest.approx(6 / 16, abs=1e-15)
    assert null_pmf_total(m, 5) == 0 and null_pmf_total(m, -1) == 0
    full = null_model(net([(a, b, 1) for a, b in permutations("abc", 2)]))
    assert null_pmf_total(full, 4) == 1
    assert null_pmf_total(full, 3) == 0


def test_directional_pmf_examples():
    m = null_model(net([("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]))
    assert null_pmf_directional(m, 1) == pytest.approx(0.5, abs=1e-15)
    empty = null_model(InteractionNetwork(("a", "b"), {}))
    assert null_pmf_directional(empty, 0) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10_000), st.data())
def test_pmfs_sum_to_one(n, data):
    from netsectors.sectioning import NullModel

    z = data.draw(st.integers(0, min(n * (n - 1), 10**6)))
    m = NullModel(n, z, z / (n * (n - 1)), None)
    assert null_pmf_total(m, np.arange(m.trials_total + 1)).sum() == pytest.approx(1, abs=1e-12)
    assert null_pmf_directional(m, np.arange(m.trials_directional + 1)).sum() == pytest.approx(1, abs=1e-12)


def test_pmf_matches_exact_binomial():
    from netsectors.sectioning import NullModel

    m = NullModel(40, 300, 300 / (40 * 39), None)
    p = Fraction(300, 40 * 39)
    for k in range(0, 79, 7):
        assert null_pmf_total(m, k) == pytest.approx(float(binomial_mass(k, 78, p)), rel=1e-12, abs=1e-300)


def test_rescaled_values():
    unit = net([("a", "b", 1), ("b", "c", 1)])
    assert rescaled_values(unit, "s") == {"a": 1, "b": 2, "c": 1}
    assert rescaled_values(unit, "k") == {"a": 1, "b": 2, "c": 1}
    # mean edge weight 2; s_A = 7 -> 3.5 rounds up to 4
    g = net([("A", "B", 3), ("A", "C", 3), ("D", "A", 1), ("E", "F", 1)])
    assert null_model(g).mean_weight == 2
    assert rescaled_values(g, "s")["A"] == 4
    with pytest.raises(DegenerateNetworkError):
        rescaled_values(InteractionNetwork(("a", "b"), {}), "s")


def test_binning_rules():
    b = bin_and_compare([1] * 10, lambda k: np.ones_like(k, dtype=float) / (k.size), 5)
    assert len(b.bins) == 1
    assert (b.bins[0].k_max, b.bins[0].vertex_count, b.bins[0].empirical_mass) == (1, 10, 1.0)
    # eta = 1 gives one bin per value that occurs
    b1 = bin_and_compare([0, 2, 2, 5], lambda k: np.full(k.shape, 0.1), 1)
    assert [(x.k_min, x.k_max) for x in b1.bins] == [(0, 0), (1, 2), (3, 5)]
    assert bin_and_compare([], lambda k: k, 3).bins == ()
    with pytest.raises(ValueError):
        bin_and_compare([1], lambda k: k, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=80), st.integers(1, 12))
def test_binning_invariants(values, eta):
    b = bin_and_compare(values, lambda k: np.full(k.shape, 1.0 / 31), eta)
    assert b.bins[0].k_min == 0 and b.bins[-1].k_max == max(values)
    for prev, nxt in zip(b.bins, b.bins[1:]):
        assert nxt.k_min == prev.k_max + 1
    assert all(x.vertex_count >= eta for x in b.bins[:-1])
    assert sum(x.empirical_mass for x in b.bins) == pytest.approx(1)
    assert sum(x.vertex_count for x in b.bins) == len(values)


def test_star_network_is_degenerate():
    star = net([("hub", f"leaf{i}", 1) for i in range(10)])
    m = null_model(star)
    assert m.p_e == pytest.approx(10 / 110)
    k = [v for v in rescaled_values(star, "k").values()]
    b = bin_and_compare(k, lambda x: null_pmf_total(m, x), 3)
    # the single hub is merged into the leaf bin: one bin, fully populated
    (only,) = b.bins
    assert only.empirical_mass == 1
    assert only.null_mass == pytest.approx(STAR_MERGED_BIN_NULL, abs=1e-13)
    assert not only.intermediary
    part = classify_simple(star, "k", 3)
    assert part.degenerate == "no-intermediary"
    assert set(part.sector.values()) == {INTERMEDIARY}


def _bins(flags):
    return BinnedDistribution(
        tuple(Bin(lo, hi, 3, 0.1, 0.2 if f else 0.05) for (lo, hi), f in flags), 3
    )


def test_thresholds():
    b = _bins([((0, 2), False), ((3, 5), True), ((6, 9), False), ((10, 17), True), ((18, 40), False)])
    assert thresholds(b) == (2, 17)
    assert thresholds(_bins([((0, 0), True), ((1, 4), False)])) == (-1, 0)
    assert thresholds(_bins([((0, 0), False)])) is None


def test_edgeless_network_all_periphery():
    part = classify_simple(InteractionNetwork(("a", "b", "c"), {}), "s", 3)
    assert part.degenerate == "no-edges"
    assert set(part.sector.values()) == {PERIPHERY}


def _pa_network(seed=1):
    return build_network(
        build_corpus(generate(SyntheticSpec("preferential_attachment", n=1000, m=5, seed=seed))).messages
    )


def test_pa_thresholds_bracket_null_mode():
    g = _pa_network()
    m = null_model(g)
    mode = math.floor((m.trials_total + 1) * m.p_e)
    part = classify_simple(g, "k", 10)
    assert part.k_L < mode <= part.k_R
    f = part.fractions()
    assert 0.01 <= f["hub"] <= 0.15
    assert 0.10 <= f["intermediary"] <= 0.50


def test_simple_partition_is_monotone_step():
    g = _pa_network(2)
    for crit in SIMPLE_CRITERIA:
        part = classify_simple(g, crit, 5)
        vals = rescaled_values(g, crit)
        rank = {PERIPHERY: 0, INTERMEDIARY: 1, HUB: 2}
        pairs = sorted((vals[v], rank[part.sector[v]]) for v in g.vertices)
        assert [r for _, r in pairs] == sorted(r for _, r in pairs)
        assert set(part.sector) == set(g.vertices)


@st.composite
def weighted_networks(draw):
    n = draw(st.integers(3, 9))
    verts = [f"v{i}" for i in range(n)]
    pairs = list(permutations(verts, 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, min_size=1, max_size=len(pairs)))
    ws = draw(st.lists(st.integers(1, 6), min_size=len(chosen), max_size=len(chosen)))
    return InteractionNetwork(tuple(verts), dict(zip(chosen, ws)))


@settings(max_examples=100, deadline=None)
@given(weighted_networks(), st.integers(2, 9), st.integers(1, 4))
def test_strength_sectors_scale_invariant(g, c, eta):
    for crit in ("s", "s_in", "s_out"):
        assert classify_simple(g, crit, eta).sector == classify_simple(g.scaled(c), crit, eta).sector


def test_compound_examples():
    verts = ("x",)

    def simple(labels):
        return {c: ErdosPartition(c, {"x": lab}) for c, lab in zip(SIMPLE_CRITERIA, labels)}

    all_hub = simple([HUB] * 6)
    for delta in COMPOUND_CRITERIA:
        assert classify_compound(all_hub, delta).sector["x"] == HUB
    mixed = simple([HUB] + [PERIPHERY] * 5)
    assert classify_compound(mixed, "C1").sector["x"] == UNCLASSIFIED
    assert classify_compound(mixed, "C4").sector["x"] == HUB
    assert classify_compound(mixed, "C3").sector["x"] == PERIPHERY
    assert classify_compound(mixed, "C2").sector["x"] == MULTIPLE
    assert classify_compound(mixed, "C2").classes["x"] == {HUB, PERIPHERY}
    assert classify_compound(mixed, "C5").sector["x"] == PERIPHERY
    assert classify_compound(mixed, "C6").sector["x"] == HUB
    inter = simple([INTERMEDIARY, PERIPHERY, INTERMEDIARY, INTERMEDIARY, INTERMEDIARY, INTERMEDIARY])
    assert classify_compound(inter, "C5").sector["x"] == PERIPHERY
    assert classify_compound(inter, "C6").sector["x"] == PERIPHERY
    assert classify_compound(inter, "C3").sector["x"] == PERIPHERY
    assert classify_compound(inter, "C4").sector["x"] == INTERMEDIARY
    assert verts


def test_compound_rejects_mismatched_vertices():
    a = ErdosPartition("k", {"x": HUB})
    b = ErdosPartition("s", {"y": HUB})
    with pytest.raises(ValueError):
        classify_compound([a, b], "C3")


def test_compound_on_real_network():
    g = _pa_network(3)
    parts = classify_all_simple(g, 5)
    for delta in ("C3", "C4", "C5", "C6"):
        p = classify_compound(parts, delta)
        assert set(p.sector.values()) <= set(SECTORS)
        f = p.fractions()
        assert f["hub"] + f["intermediary"] + f["periphery"] == pytest.approx(1)
    assert classify(g, "C2", 5).fractions()["extra"] >= 0


def test_timeline_and_csv(tmp_path):
    g = _pa_network(4)
    snaps = [Snapshot(0, 10, g)]
    rows = sector_timeline(snaps, "k", 5)
    assert len(rows) == 1
    r = rows[0]
    assert r.hub_frac + r.inter_frac + r.peri_frac == pytest.approx(1, abs=1e-9)
    c1 = sector_timeline(snaps, "C1", 5)[0]
    assert c1.extra_frac > 0
    assert c1.hub_frac + c1.inter_frac + c1.peri_frac + c1.extra_frac == pytest.approx(1, abs=1e-9)
    path = tmp_path / "t.csv"
    write_timeline_csv(rows + [c1], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "window_start,criterion,hub_frac,inter_frac,peri_frac,extra_frac"
    assert lines[2].split(",")[1] == "C1"
    vpath = tmp_path / "v.csv"
    write_vertex_sectors_csv([classify(g, "k", 5), classify(g, "C2", 5)], vpath)
    rows = list(csv.DictReader(vpath.open()))
    assert len(rows) == 2 * g.n_vertices
    assert any("+" in r["sector"] for r in rows if r["criterion"] == "C2")
    with pytest.raises(ValueError):
        sector_timeline([], "k")
