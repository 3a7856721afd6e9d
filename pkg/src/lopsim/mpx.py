"""Low-diameter clustering with exponential shifts (MPX).

Every node ``u`` draws a shift ``delta_u ~ Exp(rho/2)``; node ``v`` joins the
center ``u`` minimizing ``dist(u, v) - delta_u`` (ties: smaller center id).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import INF, bfs_distances


@dataclass
class MpxClustering:
    shifts: list
    cluster_of: list
    clusters: dict  # center -> frozenset of members, ordered by center id
    border: frozenset
    rho: float
    depth: list  # distance from each node to its center along the cluster tree
    k: float = 0.0
    _diameter: float = field(default=None, repr=False)

    @property
    def leaders(self):
        return {c: c for c in self.clusters}

    @property
    def max_radius(self):
        return max(self.depth, default=0)

    def cluster_radius(self, center):
        return max(self.depth[v] for v in self.clusters[center])

    def realized_d(self, g, cache=None):
        """Largest strong diameter over all clusters (computed once).

        ``cache`` maps member sets to diameters and may be shared between
        clusterings of the same graph.
        """
        if self._diameter is None:
            cache = {} if cache is None else cache
            best = 0
            for members in self.clusters.values():
                if members not in cache:
                    cache[members] = induced_diameter(g, members)
                best = max(best, cache[members])
            self._diameter = best
        return self._diameter

    def to_json(self):
        return {
            "rho": self.rho,
            "nodes": {str(v): {"cluster": c, "shift": self.shifts[v]} for v, c in enumerate(self.cluster_of)},
        }


def induced_diameter(g, members, batch=256):
    """Strong diameter of ``members``; ``INF`` if the induced subgraph is disconnected."""
    nodes = sorted(members)
    if len(nodes) <= 32:
        best = 0
        for s in nodes:
            dist = bfs_distances(g, s, allowed=members)
            if len(dist) < len(nodes):
                return INF
            best = max(best, max(dist.values()))
        return best
    index = {v: i for i, v in enumerate(nodes)}
    rows, cols = [], []
    for v in nodes:
        for u in g.adjacency[v]:
            if u in index:
                rows.append(index[v])
                cols.append(index[u])
    size = len(nodes)
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    best = 0.0
    for start in range(0, size, batch):
        dist = shortest_path(adj, directed=False, unweighted=True, indices=range(start, min(size, start + batch)))
        top = dist.max()
        if not np.isfinite(top):
            return INF
        best = max(best, top)
    return int(best)


def shift_cap(n, rho):
    return 40.0 / rho * math.log(max(n, 2))


def draw_shifts(g, rho, seed, truncate=True):
    """Independent ``Exp(rho/2)`` shifts by inverse CDF on a seeded generator."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    rng = np.random.default_rng(seed)
    u = rng.random(g.n)
    shifts = -np.log1p(-u) / (rho / 2.0)
    if truncate:
        shifts = np.minimum(shifts, shift_cap(g.n, rho))
    return [float(x) for x in shifts]


def assign_clusters(g, shifts, rho=float("nan"), c=None):
    """Assign every node to the center with the smallest shifted distance.

    A multi-source shortest-path sweep where source ``u`` starts at
    ``-delta_u``; the first settlement of a node fixes its cluster.
    """
    n = g.n
    adj = g.adjacency
    owner = [-1] * n
    depth = [0] * n
    heap = [(-shifts[u], u, 0, u) for u in range(n)]
    heapq.heapify(heap)
    while heap:
        _, center, d, v = heapq.heappop(heap)
        if owner[v] != -1:
            continue
        owner[v] = center
        depth[v] = d
        nd = d + 1
        key_base = nd - shifts[center]
        for w in adj[v]:
            if owner[w] == -1:
                heapq.heappush(heap, (key_base, center, nd, w))
    members = {}
    for v, center in enumerate(owner):
        members.setdefault(center, []).append(v)
    clusters = {center: frozenset(members[center]) for center in sorted(members)}
    border = frozenset(v for v in range(n) if any(owner[u] != owner[v] for u in adj[v]))
    k = 1.0 / (c * rho) if c and rho == rho and rho > 0 else 0.0
    return MpxClustering(list(shifts), owner, clusters, border, rho, depth, k)


def mpx(g, rho, seed, c=None):
    return assign_clusters(g, draw_shifts(g, rho, seed), rho, c)


def decomposition_quality(g, clustering):
    m = g.m
    cut = sum(1 for u, v in g.edges() if clustering.cluster_of[u] != clustering.cluster_of[v])
    return {
        "cut_edges": cut,
        "cut_edge_fraction": cut / m if m else 0.0,
        "max_strong_diameter": clustering.realized_d(g),
        "cluster_count": len(clustering.clusters),
    }


def ball_containment_rate(g, rho, k, trials, seed):
    """Per node, the fraction of trials in which ``N_k[v]`` lies in one cluster."""
    if trials < 1:
        raise ValueError("trials must be positive")
    radius = int(math.floor(k + 1e-12))
    balls = g.ball_table(radius)
    hits = np.zeros(g.n)
    for t in range(trials):
        owner = mpx(g, rho, (seed, t)).cluster_of
        for v in range(g.n):
            cv = owner[v]
            if all(owner[u] == cv for u in balls[v]):
                hits[v] += 1
    return (hits / trials).tolist()
