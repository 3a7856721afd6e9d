"""Improving sets, best relabelings and bounded search for maximal sequences."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import DeltaTouchesOutsideA, SearchSpaceTooLarge
from .graph import INF, bfs_distances
from .lop import Labeling, Relabel, _check_alphabet, total_potential_units

RELABEL_CAP = 1 << 16


@dataclass
class ImprovingSet:
    nodes: tuple
    relabel: Relabel
    improvement: Fraction

    @property
    def improving_ratio(self):
        if not self.nodes:
            return Fraction(0)
        return self.improvement / len(self.nodes)

    def to_json(self):
        return {
            "nodes": list(self.nodes),
            "relabel": self.relabel.to_json(),
            "improvement": str(self.improvement),
            "improving_ratio": str(self.improving_ratio),
        }


@dataclass
class ImprovingSequence:
    steps: list
    beta: Fraction
    potentials: list  # Pot before the first step, then after each step
    base: Optional[Labeling] = None
    final: Optional[Labeling] = None

    @property
    def total_improvement(self):
        return sum((s.improvement for s in self.steps), Fraction(0))


def improving_ratio(improvement, size):
    return Fraction(0) if size == 0 else Fraction(improvement) / size


# -- relabelings ---------------------------------------------------------

def _node_options(problem, g, labeling, v, tight):
    nbrs = g.adjacency[v]
    multi_half = len(problem.half_edge_out) > 1
    cur = (labeling.node_out[v], tuple(labeling.half_edge_out[(v, u)] for u in nbrs))
    halves = list(itertools.product(problem.half_edge_out, repeat=len(nbrs))) if multi_half else [cur[1]]
    opts = []
    for a in problem.node_out:
        for h in halves:
            if tight and (a, h) == cur:
                continue
            opts.append((a, h))
    return opts, multi_half


def relabelings(problem, g, labeling, nodes, tight=False):
    """All output relabelings of ``nodes`` and their half-edges, in lex order.

    With ``tight=True`` only relabelings that change every node of the set
    (its own label or one of its half-edge labels) are produced.
    """
    nodes = sorted(nodes)
    per_node = []
    multi = False
    for v in nodes:
        opts, multi = _node_options(problem, g, labeling, v, tight)
        per_node.append(opts)
    for combo in itertools.product(*per_node):
        rel = Relabel({v: a for v, (a, _) in zip(nodes, combo)})
        if multi:
            for v, (_, h) in zip(nodes, combo):
                rel.half_edges.update({(v, u): x for u, x in zip(g.adjacency[v], h)})
        yield rel


def relabel_count(problem, g, nodes):
    per_label = len(problem.node_out)
    count = 1
    for v in nodes:
        count *= per_label * len(problem.half_edge_out) ** len(g.adjacency[v])
    return count


def identity_relabel(problem, g, labeling, nodes):
    rel = Relabel({v: labeling.node_out[v] for v in sorted(nodes)})
    if len(problem.half_edge_out) > 1:
        for v in sorted(nodes):
            rel.half_edges.update({(v, u): labeling.half_edge_out[(v, u)] for u in g.adjacency[v]})
    return rel


def area_of(problem, g, nodes):
    """``N_r[A]``: the only nodes whose potential a relabel of ``A`` can change."""
    balls = g.ball_table(problem.radius)
    area = set()
    for v in nodes:
        area.update(balls[v])
    return area


def _drop_units(problem, g, labeling, area, relabel, before=None):
    psi = problem.psi
    if before is None:
        before = sum(psi(g, labeling, x) for x in area)
    undo = labeling.patch(relabel)
    after = sum(psi(g, labeling, x) for x in area)
    labeling.unpatch(undo)
    return before - after


def improvement(g, problem, labeling, nodes, relabel):
    """``Pot(G, l1) - Pot(G, l2)`` computed over ``N_r[A]`` only."""
    nodes = set(nodes)
    if not set(relabel.nodes) <= nodes or any(v not in nodes for v, _ in relabel.half_edges):
        raise DeltaTouchesOutsideA("relabel changes labels outside the set")
    if not nodes:
        return Fraction(0)
    patched = labeling.copy()
    patched.patch(relabel)
    _check_alphabet(problem, g, patched, nodes)
    units = _drop_units(problem, g, labeling, area_of(problem, g, nodes), relabel)
    return Fraction(units, problem.denominator)


def full_improvement(g, problem, labeling, relabel):
    """Same quantity from two complete potential sums; used as an oracle."""
    after = labeling.copy()
    after.patch(relabel)
    units = total_potential_units(problem, g, labeling) - total_potential_units(problem, g, after)
    return Fraction(units, problem.denominator)


def best_relabeling(g, problem, labeling, nodes, cap=RELABEL_CAP):
    """Exhaustive ``l*_A``: the relabeling of ``A`` with the largest improvement.

    The identity is tried first and only a strictly better relabeling
    replaces the incumbent, so ties resolve to the identity and then to the
    lexicographically first relabel vector.
    """
    nodes = sorted(nodes)
    if relabel_count(problem, g, nodes) > cap:
        raise SearchSpaceTooLarge(f"more than {cap} relabelings of {len(nodes)} nodes")
    best = identity_relabel(problem, g, labeling, nodes)
    if not nodes:
        return best, Fraction(0)
    area = area_of(problem, g, nodes)
    psi = problem.psi
    before = sum(psi(g, labeling, x) for x in area)
    best_units = 0
    for rel in relabelings(problem, g, labeling, nodes):
        units = _drop_units(problem, g, labeling, area, rel, before)
        if units > best_units:
            best, best_units = rel, units
    return best, Fraction(best_units, problem.denominator)


def restrict_relabel(relabel, nodes):
    """The part of ``relabel`` that touches ``nodes`` (and their half-edges)."""
    nodes = set(nodes)
    return Relabel(
        {v: a for v, a in relabel.nodes.items() if v in nodes},
        {k: h for k, h in relabel.half_edges.items() if k[0] in nodes},
    )


# -- connected subsets ---------------------------------------------------

def connected_subsets(g, seed, size, allowed=None):
    """Connected node sets of exactly ``size`` nodes whose smallest node is ``seed``.

    Each set is produced once (ESU enumeration), as a sorted tuple.
    """
    if size < 1 or (allowed is not None and seed not in allowed):
        return
    adj = g.adjacency

    def ok(u):
        return u > seed and (allowed is None or u in allowed)

    def extend(sub, ext, closed):
        if len(sub) == size:
            yield tuple(sorted(sub))
            return
        ext = list(ext)
        while ext:
            w = ext.pop(0)
            new_ext = list(ext)
            new_closed = set(closed)
            for u in adj[w]:
                if u not in closed and ok(u):
                    new_ext.append(u)
                new_closed.add(u)
            yield from extend(sub + [w], new_ext, new_closed)

    closed = {seed, *adj[seed]}
    yield from extend([seed], [u for u in adj[seed] if ok(u)], closed)


def interior_nodes(g, problem, cluster):
    """Nodes ``x`` of ``cluster`` with ``N_{2r+1}[x]`` inside the cluster."""
    cluster = cluster if isinstance(cluster, (set, frozenset)) else set(cluster)
    balls = g.ball_table(2 * problem.radius + 1)
    return {x for x in cluster if all(y in cluster for y in balls[x])}


# -- bounded search ------------------------------------------------------

class ImprovementSearch:
    """Stateful search for R-improving sets over one labeling.

    For every candidate size ``k`` it keeps the seeds that might still root
    a connected candidate with IR >= R.  A seed leaves that set once a full
    enumeration finds no such candidate, and re-enters when a committed
    relabel lands within ``k - 1 + 2r`` hops of it.  Raising R never revives
    a seed, so the state survives across phases.
    """

    def __init__(self, g, problem, labeling, size_cap=6):
        if size_cap < 1:
            raise ValueError("size_cap must be at least 1")
        self.g = g
        self.problem = problem
        self.labeling = labeling
        self.size_cap = size_cap
        self.cost = [problem.psi(g, labeling, v) for v in range(g.n)]
        self.pot_units = sum(self.cost)
        self.dirty = [set()] + [set(range(g.n)) for _ in range(size_cap)]
        self.R = None
        self.evaluations = 0

    @property
    def potential(self):
        return Fraction(self.pot_units, self.problem.denominator)

    def set_threshold(self, R):
        R = Fraction(R)
        if R <= 0:
            raise ValueError("R must be positive")
        if self.R is not None and R < self.R:
            for k in range(1, self.size_cap + 1):
                self.dirty[k] = set(range(self.g.n))
        self.R = R

    def evaluate(self, nodes):
        """Best tight relabel of ``nodes``: ``(units, relabel)``."""
        g, problem, lab = self.g, self.problem, self.labeling
        area = area_of(problem, g, nodes)
        cost = self.cost
        before = sum(cost[x] for x in area)
        best, best_units = None, None
        self.evaluations += 1
        for rel in relabelings(problem, g, lab, nodes, tight=True):
            units = _drop_units(problem, g, lab, area, rel, before)
            if best_units is None or units > best_units:
                best, best_units = rel, units
        return best_units, best

    def _passes(self, units, size):
        R = self.R
        return units is not None and units > 0 and units * R.denominator >= R.numerator * self.problem.denominator * size

    def scan_seed(self, seed, size, cluster, interior, diameter_cap):
        """First admissible hit rooted at ``seed`` plus whether any IR >= R set exists."""
        any_hit = False
        for nodes in connected_subsets(self.g, seed, size):
            units, rel = self.evaluate(nodes)
            if not self._passes(units, size):
                continue
            any_hit = True
            if not all(x in interior for x in nodes):
                continue
            if size > 1 and strong_diameter_within(self.g, nodes, cluster) > diameter_cap:
                continue
            return ImprovingSet(nodes, rel, Fraction(units, self.problem.denominator)), True
        return None, any_hit

    def find(self, cluster, interior=None, diameter_cap=INF, blocked=None):
        """Smallest-first: the first admissible set by (size, seed, enumeration order)."""
        if self.R is None:
            raise ValueError("call set_threshold first")
        cluster = cluster if isinstance(cluster, (set, frozenset)) else set(cluster)
        if interior is None:
            interior = interior_nodes(self.g, self.problem, cluster)
        if blocked is None:
            blocked = [set() for _ in range(self.size_cap + 1)]
        for k in range(1, self.size_cap + 1):
            seeds = sorted((self.dirty[k] & interior) - blocked[k])
            for s in seeds:
                hit, any_hit = self.scan_seed(s, k, cluster, interior, diameter_cap)
                if hit is not None:
                    return hit
                if any_hit:
                    blocked[k].add(s)
                else:
                    self.dirty[k].discard(s)
        return None

    def commit(self, imp_set, blocked=None):
        g, problem, lab = self.g, self.problem, self.labeling
        lab.patch(imp_set.relabel)
        area = area_of(problem, g, imp_set.nodes)
        psi = problem.psi
        for x in area:
            new = psi(g, lab, x)
            self.pot_units += new - self.cost[x]
            self.cost[x] = new
        reach = self.size_cap - 1 + 2 * problem.radius
        dist = bfs_distances(g, list(imp_set.nodes), limit=reach)
        for k in range(1, self.size_cap + 1):
            limit = k - 1 + 2 * problem.radius
            near = {x for x, d in dist.items() if d <= limit}
            self.dirty[k] |= near
            if blocked is not None:
                blocked[k] -= near


def strong_diameter_within(g, nodes, cluster):
    """Largest distance between nodes of ``nodes`` measured inside ``cluster``."""
    best = 0
    targets = set(nodes)
    for s in nodes:
        dist = bfs_distances(g, s, allowed=cluster)
        for t in targets:
            best = max(best, dist.get(t, INF))
    return best


def find_improving_set(g, problem, labeling, R, cluster, diameter_cap=INF, size_cap=6):
    """Stateless search for one admissible R-improving set inside ``cluster``.

    Admissible: IR >= R, connected, at most ``size_cap`` nodes, strong
    diameter (inside the cluster) at most ``diameter_cap`` and
    ``N_{2r+1}[A]`` inside the cluster.  Returns ``None`` when the bounded
    search finds nothing.
    """
    search = ImprovementSearch(g, problem, labeling.copy(), size_cap)
    search.set_threshold(R)
    return search.find(set(cluster), diameter_cap=diameter_cap)


def maximal_sequence(g, problem, labeling, R, cluster, diameter_cap=INF, size_cap=6, search=None):
    """Apply admissible R-improving sets inside ``cluster`` until none is left.

    Without ``search`` the input labeling is left untouched and the result
    carries ``base`` and ``final`` copies.  With a shared
    :class:`ImprovementSearch` the relabels are committed to its labeling in
    place.
    """
    standalone = search is None
    if standalone:
        search = ImprovementSearch(g, problem, labeling.copy(), size_cap)
    search.set_threshold(R)
    cluster = cluster if isinstance(cluster, (set, frozenset)) else set(cluster)
    interior = interior_nodes(g, problem, cluster)
    blocked = [set() for _ in range(search.size_cap + 1)]
    seq = ImprovingSequence(steps=[], beta=Fraction(R), potentials=[search.potential])
    if standalone:
        seq.base = labeling.copy()
    while interior:
        hit = search.find(cluster, interior, diameter_cap, blocked)
        if hit is None:
            break
        search.commit(hit, blocked)
        seq.steps.append(hit)
        seq.potentials.append(search.potential)
    if standalone:
        seq.final = search.labeling
    return seq


def validate_improving_set(g, problem, labeling, imp_set, R, cluster, diameter_cap=INF, size_cap=6):
    """Independent re-check of the four emission conditions.  Returns a list of failures."""
    failures = []
    nodes = set(imp_set.nodes)
    cluster = set(cluster)
    imp = full_improvement(g, problem, labeling, imp_set.relabel)
    if imp != imp_set.improvement:
        failures.append(f"improvement {imp_set.improvement} != recomputed {imp}")
    if not nodes or imp <= 0 or imp / len(nodes) < R:
        failures.append("improving ratio below threshold")
    if len(nodes) > size_cap:
        failures.append("too many nodes")
    if strong_diameter_within(g, nodes, cluster) > diameter_cap:
        failures.append("diameter above cap")
    reach = bfs_distances(g, list(nodes), limit=2 * problem.radius + 1)
    if not set(reach) <= cluster:
        failures.append("neighborhood leaves the cluster")
    if not imp_set.relabel.touched() <= nodes:
        failures.append("relabel touches nodes outside the set")
    return failures


def is_minimal(g, problem, labeling, imp_set, cap=RELABEL_CAP):
    """No proper subset admits a relabel with strictly larger improving ratio."""
    nodes = sorted(imp_set.nodes)
    if not nodes:
        return True
    ratio = imp_set.improving_ratio
    for size in range(1, len(nodes)):
        for sub in itertools.combinations(nodes, size):
            _, imp = best_relabeling(g, problem, labeling, sub, cap)
            if imp / size > ratio:
                return False
    return True
