"""Bounded-degree labeled graphs with ports and half-edges.

Node ids are ``0..n-1``.  The neighbor list of ``v`` is ordered by port, so
``adjacency[v][p - 1]`` is the neighbor behind port ``p``.  A half-edge
``(v, {v, u})`` is keyed by the ordered pair ``(v, u)``.

Labels are ``(input, output)`` pairs; :data:`BLANK` is the designated empty
label (serialized as JSON ``null``).
"""

from __future__ import annotations

import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .errors import DuplicateEdge, IdOutOfRange, InfeasibleParams, ParseError, SelfLoop

BLANK = None
INF = math.inf  # distance between disconnected nodes

FORMAT_VERSION = 1


class LabeledGraph:
    """Immutable topology plus an (input, output) labeling of nodes and half-edges."""

    __slots__ = ("n", "adjacency", "node_labels", "half_edge_labels", "_port", "_balls")

    def __init__(self, n, adjacency, node_labels=None, half_edge_labels=None):
        self.n = n
        self.adjacency = tuple(tuple(nbrs) for nbrs in adjacency)
        self._port = [{u: i + 1 for i, u in enumerate(nbrs)} for nbrs in self.adjacency]
        if node_labels is None:
            node_labels = [(BLANK, BLANK)] * n
        self.node_labels = list(node_labels)
        hel = {(v, u): (BLANK, BLANK) for v in range(n) for u in self.adjacency[v]}
        if half_edge_labels:
            hel.update(half_edge_labels)
        self.half_edge_labels = hel
        self._balls = {}

    # -- topology --------------------------------------------------------
    def neighbors(self, v):
        return self.adjacency[v]

    def degree(self, v):
        return len(self.adjacency[v])

    @property
    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    def port(self, v, u):
        """Port number (1-based) of ``v`` leading to ``u``."""
        return self._port[v][u]

    def neighbor_at(self, v, port):
        return self.adjacency[v][port - 1]

    def has_edge(self, u, v):
        return v in self._port[u]

    def edges(self):
        return [(u, v) for u in range(self.n) for v in sorted(self.adjacency[u]) if u < v]

    @property
    def m(self):
        return sum(len(a) for a in self.adjacency) // 2

    def half_edges(self):
        return [(v, u) for v in range(self.n) for u in self.adjacency[v]]

    # -- labels ----------------------------------------------------------
    def input_label(self, v):
        return self.node_labels[v][0]

    def input_half_edge(self, v, u):
        return self.half_edge_labels[(v, u)][0]

    def output_label(self, v):
        return self.node_labels[v][1]

    def output_half_edge(self, v, u):
        return self.half_edge_labels[(v, u)][1]

    def ball_table(self, radius):
        """Cached ``N_radius[v]`` for every node, as sorted tuples."""
        table = self._balls.get(radius)
        if table is None:
            table = [tuple(sorted(ball(self, v, radius))) for v in range(self.n)]
            self._balls[radius] = table
        return table

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.adjacency == other.adjacency
            and self.node_labels == other.node_labels
            and self.half_edge_labels == other.half_edge_labels
        )

    def __repr__(self):
        return f"LabeledGraph(n={self.n}, m={self.m}, max_degree={self.max_degree})"


def build_graph(edges, n, node_labels=None, half_edge_labels=None, port_seed=None):
    """Build a simple undirected graph from an edge list.

    Ports follow sorted neighbor id unless ``port_seed`` is given, in which
    case each node's port order is shuffled with a seeded generator.
    """
    if n < 0:
        raise IdOutOfRange(f"negative node count {n}")
    nbrs = [[] for _ in range(n)]
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise IdOutOfRange(f"edge ({u}, {v}) outside 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {key}")
        seen.add(key)
        nbrs[u].append(v)
        nbrs[v].append(u)
    for a in nbrs:
        a.sort()
    if port_seed is not None:
        rng = random.Random(port_seed)
        for a in nbrs:
            rng.shuffle(a)
    return LabeledGraph(n, nbrs, node_labels, half_edge_labels)


def with_adjacency(g, adjacency):
    """Copy of ``g`` with a different port order (same edge set)."""
    return LabeledGraph(g.n, adjacency, g.node_labels, g.half_edge_labels)


# -- distances -----------------------------------------------------------

def bfs_distances(g, source, limit=None, allowed=None):
    """Hop distances from ``source`` (or an iterable of sources).

    ``limit`` stops expansion beyond that radius; ``allowed`` restricts the
    search to an induced subgraph.
    """
    sources = [source] if isinstance(source, int) else list(source)
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    adj = g.adjacency
    while queue:
        x = queue.popleft()
        d = dist[x]
        if limit is not None and d >= limit:
            continue
        for y in adj[x]:
            if y not in dist and (allowed is None or y in allowed):
                dist[y] = d + 1
                queue.append(y)
    return dist


def distance(g, u, v):
    if u == v:
        return 0
    return bfs_distances(g, u).get(v, INF)


def ball(g, v, radius):
    """``N_radius[v]``: all nodes within ``radius`` hops of ``v``."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    return set(bfs_distances(g, v, limit=radius))


def ball_of_set(g, nodes, radius):
    """``N_radius[A]`` for a node set ``A``."""
    nodes = list(nodes)
    if not nodes:
        return set()
    return set(bfs_distances(g, nodes, limit=radius))


def set_distance(g, a, b):
    """Minimum hop distance between two node sets."""
    a, b = set(a), set(b)
    if not a or not b:
        return INF
    if a & b:
        return 0
    dist = bfs_distances(g, a)
    return min((dist[x] for x in b if x in dist), default=INF)


def strong_diameter(g, nodes):
    """Largest pairwise distance inside the subgraph induced by ``nodes``."""
    nodes = set(nodes)
    best = 0
    for s in nodes:
        dist = bfs_distances(g, s, allowed=nodes)
        if len(dist) < len(nodes):
            return INF
        best = max(best, max(dist.values()))
    return best


def is_connected(g, nodes):
    nodes = set(nodes)
    if not nodes:
        return True
    start = next(iter(nodes))
    return len(bfs_distances(g, start, allowed=nodes)) == len(nodes)


# -- centered graphs -----------------------------------------------------

@dataclass
class CenteredGraph:
    """The radius-``r`` view ``G_r(v)`` with a snapshot of its labels.

    Exposes the same read interface as a graph plus labeling
    (``neighbors``, ``input_label``, ``node``, ``half_edge``...), so a
    potential evaluator can run on it directly.
    """

    center: int
    radius: int
    nodes: frozenset
    edges: frozenset
    node_in: dict = field(default_factory=dict)
    node_out: dict = field(default_factory=dict)
    half_edge_in: dict = field(default_factory=dict)
    half_edge_out: dict = field(default_factory=dict)
    _adj: dict = field(default_factory=dict, repr=False)

    def neighbors(self, v):
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    def input_label(self, v):
        return self.node_in[v]

    def input_half_edge(self, v, u):
        return self.half_edge_in[(v, u)]

    def node(self, v):
        return self.node_out[v]

    def half_edge(self, v, u):
        return self.half_edge_out[(v, u)]


def centered_subgraph(g, v, r, labeling=None):
    """Extract ``G_r(v)``.

    Nodes within distance ``r``; edges with an endpoint within ``r - 1``.
    Output labels come from ``labeling`` when given, else from ``g``.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    dist = bfs_distances(g, v, limit=r)
    nodes = frozenset(dist)
    edges = set()
    for x, dx in dist.items():
        if dx <= r - 1:
            for y in g.adjacency[x]:
                edges.add((min(x, y), max(x, y)))
    adj = {x: tuple(y for y in g.adjacency[x] if (min(x, y), max(x, y)) in edges) for x in nodes}
    if labeling is None:
        node_out = {x: g.output_label(x) for x in nodes}
        he_out = {(x, y): g.output_half_edge(x, y) for x in nodes for y in adj[x]}
    else:
        node_out = {x: labeling.node(x) for x in nodes}
        he_out = {(x, y): labeling.half_edge(x, y) for x in nodes for y in adj[x]}
    return CenteredGraph(
        center=v,
        radius=r,
        nodes=nodes,
        edges=frozenset(edges),
        node_in={x: g.input_label(x) for x in nodes},
        node_out=node_out,
        half_edge_in={(x, y): g.input_half_edge(x, y) for x in nodes for y in adj[x]},
        half_edge_out=he_out,
        _adj=adj,
    )


# -- generators ----------------------------------------------------------

def generate(kind, seed=None, **params):
    """Deterministic test-instance generator.

    Kinds: ``cycle(n)``, ``path(n)``, ``grid(rows, cols)``,
    ``random_regular(n, degree)`` and ``random_bounded(n, max_degree, p)``.
    The random kinds require ``seed``.
    """
    if kind == "cycle":
        n = int(params["n"])
        if n < 3:
            raise InfeasibleParams("cycle needs n >= 3")
        return build_graph([(i, (i + 1) % n) for i in range(n)], n)
    if kind == "path":
        n = int(params["n"])
        if n < 1:
            raise InfeasibleParams("path needs n >= 1")
        return build_graph([(i, i + 1) for i in range(n - 1)], n)
    if kind == "grid":
        rows, cols = int(params["rows"]), int(params["cols"])
        if rows < 1 or cols < 1:
            raise InfeasibleParams("grid needs positive dimensions")
        edges = []
        for i in range(rows):
            for j in range(cols):
                v = i * cols + j
                if j + 1 < cols:
                    edges.append((v, v + 1))
                if i + 1 < rows:
                    edges.append((v, v + cols))
        return build_graph(edges, rows * cols)
    if seed is None and kind in ("random_regular", "random_bounded"):
        raise InfeasibleParams(f"{kind} requires a seed")
    if kind == "random_regular":
        n, d = int(params["n"]), int(params["degree"])
        if (n * d) % 2 or not 0 <= d < n:
            raise InfeasibleParams(f"no {d}-regular graph on {n} nodes")
        h = nx.random_regular_graph(d, n, seed=seed)
        return build_graph(sorted(tuple(sorted(e)) for e in h.edges()), n)
    if kind == "random_bounded":
        n, max_deg = int(params["n"]), int(params["max_degree"])
        p = float(params.get("p", 0.5))
        if n < 1 or max_deg < 0:
            raise InfeasibleParams("random_bounded needs n >= 1, max_degree >= 0")
        rng = random.Random(seed)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        rng.shuffle(pairs)
        deg = [0] * n
        edges = []
        for u, v in pairs:
            if deg[u] < max_deg and deg[v] < max_deg and rng.random() < p:
                edges.append((u, v))
                deg[u] += 1
                deg[v] += 1
        return build_graph(sorted(edges), n)
    raise InfeasibleParams(f"unknown graph kind {kind!r}")


# -- serialization -------------------------------------------------------

def graph_to_dict(g):
    data = {"format_version": FORMAT_VERSION, "n": g.n, "edges": [list(e) for e in g.edges()]}
    sorted_adj = all(list(a) == sorted(a) for a in g.adjacency)
    if not sorted_adj:
        data["adjacency"] = [list(a) for a in g.adjacency]
    if any(lab != (BLANK, BLANK) for lab in g.node_labels):
        data["node_labels"] = [list(lab) for lab in g.node_labels]
    he = [[v, u, *lab] for (v, u), lab in sorted(g.half_edge_labels.items()) if lab != (BLANK, BLANK)]
    if he:
        data["half_edge_labels"] = he
    return data


def graph_from_dict(data):
    try:
        n = int(data["n"])
        edges = [(int(u), int(v)) for u, v in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad graph record: {exc}") from None
    node_labels = None
    if data.get("node_labels") is not None:
        node_labels = [tuple(lab) for lab in data["node_labels"]]
        if len(node_labels) != n:
            raise ParseError("node_labels length differs from n")
    half = None
    if data.get("half_edge_labels") is not None:
        half = {(int(v), int(u)): (a, b) for v, u, a, b in data["half_edge_labels"]}
    g = build_graph(edges, n, node_labels, half)
    if data.get("adjacency") is not None:
        adj = [tuple(int(x) for x in a) for a in data["adjacency"]]
        if [sorted(a) for a in adj] != [sorted(a) for a in g.adjacency]:
            raise ParseError("adjacency disagrees with edges")
        g = with_adjacency(g, adj)
    return g


def _parse_edge_list(text):
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {raw.strip()!r}", line=lineno)
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"non-integer node id in {raw.strip()!r}", line=lineno) from None
    if not edges:
        raise ParseError("edge list contains no edges")
    n = max(max(e) for e in edges) + 1
    return build_graph(edges, n)


def load_graph(path):
    """Read a JSON graph file or a plain ``u v`` edge list."""
    text = Path(path).read_text()
    if not text.strip():
        raise ParseError("empty graph file", line=1)
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        return graph_from_dict(data)
    return _parse_edge_list(text)


def save_graph(g, path):
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1, ensure_ascii=False) + "\n")
