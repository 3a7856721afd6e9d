import statistics

import numpy as np
import pytest

from lopsim.graph import bfs_distances, build_graph, generate, is_connected
from lopsim.mpx import assign_clusters, ball_containment_rate, decomposition_quality, draw_shifts, mpx


def test_shifts_are_seeded_and_nonnegative():
    g = generate("cycle", n=50)
    a = draw_shifts(g, 0.3, 11)
    assert a == draw_shifts(g, 0.3, 11)
    assert a != draw_shifts(g, 0.3, 12)
    assert min(a) >= 0


def test_shift_mean():
    g = build_graph([], 100_000)
    assert statistics.fmean(draw_shifts(g, 0.5, 3)) == pytest.approx(4.0, abs=0.1)


def test_single_node():
    c = assign_clusters(build_graph([], 1), [0.7])
    assert list(c.clusters) == [0] and not c.border


def test_dominant_shift():
    g = generate("cycle", n=20)
    shifts = [0.0] * 20
    shifts[7] = 50.0
    c = assign_clusters(g, shifts)
    assert list(c.clusters) == [7] and not c.border
    assert decomposition_quality(g, c)["cut_edge_fraction"] == 0


def test_k2_ties_give_singletons():
    g = build_graph([(0, 1)], 2)
    c = assign_clusters(g, [0.0, 0.0])
    assert c.cluster_of == [0, 1]
    assert c.border == {0, 1}
    assert decomposition_quality(g, c)["cut_edge_fraction"] == 1


@pytest.mark.parametrize("kind,params", [("cycle", {"n": 60}), ("random_regular", {"n": 60, "degree": 3}),
                                         ("grid", {"rows": 6, "cols": 9})])
def test_partition_properties(kind, params):
    g = generate(kind, seed=5 if kind.startswith("random") else None, **params)
    for seed in range(30):
        c = mpx(g, 0.4, seed)
        assert sum(len(m) for m in c.clusters.values()) == g.n
        for center, members in c.clusters.items():
            assert center in members
            assert is_connected(g, members)
            assert all(c.cluster_of[v] == center for v in members)
        expected = {u for u, v in g.edges() if c.cluster_of[u] != c.cluster_of[v]}
        expected |= {v for u, v in g.edges() if c.cluster_of[u] != c.cluster_of[v]}
        assert c.border == expected
        assert c.realized_d(g) >= max(0, *(c.cluster_radius(x) for x in c.clusters))


def test_assignment_minimizes_shifted_distance():
    g = generate("random_regular", n=40, degree=3, seed=1)
    shifts = draw_shifts(g, 0.5, 2)
    c = assign_clusters(g, shifts)
    for v in range(g.n):
        dist = bfs_distances(g, v)
        best = min((dist[u] - shifts[u], u) for u in range(g.n))
        assert c.cluster_of[v] == best[1]


def test_cut_fraction_on_cycle():
    g = generate("cycle", n=100)
    cuts = [decomposition_quality(g, mpx(g, 0.2, s))["cut_edge_fraction"] for s in range(200)]
    assert statistics.fmean(cuts) <= 0.2 * 1.25


def test_containment_radius_zero():
    g = generate("cycle", n=30)
    assert ball_containment_rate(g, 0.5, 0, 20, 1) == [1.0] * 30


def test_containment_out_of_contract_runs():
    g = generate("cycle", n=30)
    rates = ball_containment_rate(g, 2.0, 20, 20, 1)
    assert all(0 <= r <= 1 for r in rates)


def test_close_runner_up_grows_with_rho():
    # how often the two best shifted distances at a node lie within 1 of each other
    g = generate("cycle", n=100)
    dist = bfs_distances(g, 0)
    fractions = []
    for rho in (0.05, 0.2, 0.8):
        close = 0
        for s in range(300):
            shifts = draw_shifts(g, rho, s)
            vals = sorted(dist[u] - shifts[u] for u in range(g.n))
            close += vals[1] - vals[0] < 1
        fractions.append(close / 300)
    assert fractions == sorted(fractions) and fractions[0] < fractions[-1]


def test_clustering_json():
    g = generate("cycle", n=6)
    data = mpx(g, 0.5, 1).to_json()
    assert set(data["nodes"]) == {str(v) for v in range(6)}
