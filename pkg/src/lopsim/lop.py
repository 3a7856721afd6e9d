"""Locally optimal problems: potentials, the center-relabel constraint, built-ins.

Potential values are exact.  A problem's ``psi`` returns an integer number
of units and ``denominator`` converts units to a :class:`~fractions.Fraction`,
so sums and comparisons never touch floating point.

Decreasing-potential convention: an unhappy node can be relabeled to lower
the potential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import EnumerationTooLarge, LabelOutOfAlphabet, ParseError, ProblemInfeasible
from .graph import BLANK, LabeledGraph

ENUMERATION_CAP = 2_000_000


class Labeling:
    """Output labels for every node and half-edge.  Input labels stay on the graph."""

    __slots__ = ("node_out", "half_edge_out")

    def __init__(self, node_out, half_edge_out):
        self.node_out = list(node_out)
        self.half_edge_out = dict(half_edge_out)

    @classmethod
    def uniform(cls, g, node_label, half_edge_label=BLANK):
        return cls([node_label] * g.n, {he: half_edge_label for he in g.half_edges()})

    @classmethod
    def from_graph(cls, g):
        return cls(
            [g.output_label(v) for v in range(g.n)],
            {he: g.half_edge_labels[he][1] for he in g.half_edges()},
        )

    def node(self, v):
        return self.node_out[v]

    def half_edge(self, v, u):
        return self.half_edge_out[(v, u)]

    def copy(self):
        return Labeling(self.node_out, self.half_edge_out)

    def patch(self, relabel):
        """Apply ``relabel`` in place and return the data needed to undo it."""
        old_nodes = {v: self.node_out[v] for v in relabel.nodes}
        old_half = {k: self.half_edge_out[k] for k in relabel.half_edges}
        for v, lab in relabel.nodes.items():
            self.node_out[v] = lab
        self.half_edge_out.update(relabel.half_edges)
        return old_nodes, old_half

    def unpatch(self, undo):
        old_nodes, old_half = undo
        for v, lab in old_nodes.items():
            self.node_out[v] = lab
        self.half_edge_out.update(old_half)

    def __eq__(self, other):
        if not isinstance(other, Labeling):
            return NotImplemented
        return self.node_out == other.node_out and self.half_edge_out == other.half_edge_out

    def to_json(self, problem=None):
        data = {str(v): lab for v, lab in enumerate(self.node_out)}
        if problem is None or len(problem.half_edge_out) > 1:
            data = {"nodes": data, "half_edges": [[v, u, lab] for (v, u), lab in sorted(self.half_edge_out.items())]}
        return data

    @classmethod
    def from_json(cls, data, g, problem=None):
        if "nodes" in data:
            nodes = data["nodes"]
            half = {(int(v), int(u)): lab for v, u, lab in data.get("half_edges", [])}
        else:
            nodes, half = data, {}
        extra = sorted(k for k in nodes if not 0 <= int(k) < g.n)
        if extra:
            raise ParseError(f"labeling names nodes outside the graph: {extra[:5]}")
        default_half = problem.half_edge_out[0] if problem is not None else BLANK
        node_out = [nodes[str(v)] if str(v) in nodes else nodes.get(v) for v in range(g.n)]
        full_half = {he: half.get(he, default_half) for he in g.half_edges()}
        return cls(node_out, full_half)


@dataclass
class Relabel:
    """New output labels for a node set and (some of) its incident half-edges."""

    nodes: dict = field(default_factory=dict)
    half_edges: dict = field(default_factory=dict)

    def touched(self):
        return set(self.nodes) | {v for v, _ in self.half_edges}

    def to_json(self):
        return {
            "nodes": {str(v): lab for v, lab in sorted(self.nodes.items())},
            "half_edges": [[v, u, lab] for (v, u), lab in sorted(self.half_edges.items())],
        }


@dataclass(eq=False)
class LopProblem:
    """A locally optimal problem ``(Pi, Psi)``.

    ``psi(view, labeling, v)`` returns the potential of ``v`` in integer
    units of ``1/denominator``; it may only read ``G_radius(v)``.  ``view``
    is either a :class:`LabeledGraph` or a centered graph.

    ``accept(g, labeling, v)``, when given, declares ``v`` satisfied
    outright; otherwise a node is satisfied iff no relabel of the center
    strictly lowers both its own cost and the potential of ``N_r[v]``.
    """

    name: str
    node_out: tuple
    half_edge_out: tuple
    radius: int
    max_degree: int
    psi: Callable
    denominator: int = 1
    node_in: tuple = (BLANK,)
    half_edge_in: tuple = (BLANK,)
    accept: Optional[Callable] = None
    lam: Optional[Fraction] = None
    big_lam: Optional[Fraction] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam is not None and self.big_lam is not None:
            if not (0 < self.lam <= self.big_lam):
                raise ValueError(f"need 0 < lambda <= Lambda, got {self.lam}, {self.big_lam}")

    def units(self, value):
        return Fraction(value, self.denominator)

    def describe(self):
        return {"name": self.name, **self.params}


# -- potentials ----------------------------------------------------------

def _check_alphabet(problem, g, labeling, nodes):
    for v in nodes:
        if labeling.node_out[v] not in problem.node_out:
            raise LabelOutOfAlphabet(f"node {v} has output {labeling.node_out[v]!r}")
        for u in g.adjacency[v]:
            if labeling.half_edge_out[(v, u)] not in problem.half_edge_out:
                raise LabelOutOfAlphabet(f"half-edge ({v}, {u}) has output {labeling.half_edge_out[(v, u)]!r}")


def node_potential(problem, g, labeling, v):
    _check_alphabet(problem, g, labeling, g.ball_table(problem.radius)[v])
    return Fraction(problem.psi(g, labeling, v), problem.denominator)


def total_potential_units(problem, g, labeling):
    psi = problem.psi
    return sum(psi(g, labeling, v) for v in range(g.n))


def total_potential(problem, g, labeling):
    _check_alphabet(problem, g, labeling, range(g.n))
    return Fraction(total_potential_units(problem, g, labeling), problem.denominator)


def center_relabels(problem, g, v):
    """Every output assignment for ``v`` and its incident half-edges, in lex order."""
    nbrs = g.adjacency[v]
    for node_lab in problem.node_out:
        for half in itertools.product(problem.half_edge_out, repeat=len(nbrs)):
            yield Relabel({v: node_lab}, {(v, u): h for u, h in zip(nbrs, half)})


def center_improvements(problem, g, labeling, v):
    """Yield ``(relabel, cost_drop_units, local_drop_units)`` for each center relabel.

    ``local_drop`` is the drop of the potential summed over ``N_r[v]``,
    each term being the node's true potential in ``g``; since no other node
    can see the change, this equals the drop of the total potential.
    """
    psi = problem.psi
    area = g.ball_table(problem.radius)[v]
    before = {x: psi(g, labeling, x) for x in area}
    base = sum(before.values())
    for relabel in center_relabels(problem, g, v):
        undo = labeling.patch(relabel)
        after_v = psi(g, labeling, v)
        after = sum(psi(g, labeling, x) for x in area)
        labeling.unpatch(undo)
        yield relabel, before[v] - after_v, base - after


def node_satisfies(problem, g, labeling, v):
    if problem.accept is not None and problem.accept(g, labeling, v):
        return True
    for _, cost_drop, local_drop in center_improvements(problem, g, labeling, v):
        if cost_drop > 0 and local_drop > 0:
            return False
    return True


def best_center_relabel(problem, g, labeling, v):
    """Largest potential drop over all center relabels; identity wins ties."""
    best, best_drop = None, 0
    for relabel, _, drop in center_improvements(problem, g, labeling, v):
        if drop > best_drop:
            best, best_drop = relabel, drop
    return best, best_drop


@dataclass
class VerifyReport:
    ok: bool
    violations: list

    def to_json(self):
        return {"ok": self.ok, "violations": self.violations}


def verify_solution(problem, g, labeling):
    _check_alphabet(problem, g, labeling, range(g.n))
    bad = [v for v in range(g.n) if not node_satisfies(problem, g, labeling, v)]
    return VerifyReport(ok=not bad, violations=bad)


# -- built-in problems ---------------------------------------------------

def _mono_psi(g, labeling, v):
    # half a unit per monochromatic incident edge; denominator 2
    x = labeling.node(v)
    return sum(1 for u in g.neighbors(v) if labeling.node(u) == x)


def locally_optimal_cut(max_degree):
    """Cut with potential = number of monochromatic edges (split half per endpoint)."""
    if max_degree < 1:
        raise ProblemInfeasible("max degree must be at least 1")
    problem = LopProblem(
        name="cut",
        node_out=(-1, 1),
        half_edge_out=(BLANK,),
        radius=1,
        max_degree=max_degree,
        psi=_mono_psi,
        denominator=2,
        params={"max_degree": max_degree},
    )
    return _with_constants(problem, ("cut", max_degree))


def defective_coloring(colors, defect, max_degree):
    """``colors``-coloring where each node may have up to ``defect`` same-colored neighbors."""
    if colors * (defect + 1) <= max_degree:
        raise ProblemInfeasible(f"need c(d+1) > Delta, got {colors}*({defect}+1) <= {max_degree}")
    if max_degree < 1:
        raise ProblemInfeasible("max degree must be at least 1")

    def accept(g, labeling, v):
        return _mono_psi(g, labeling, v) <= defect

    problem = LopProblem(
        name="defective",
        node_out=tuple(range(1, colors + 1)),
        half_edge_out=(BLANK,),
        radius=1,
        max_degree=max_degree,
        psi=_mono_psi,
        denominator=2,
        accept=accept,
        params={"colors": colors, "defect": defect, "max_degree": max_degree},
    )
    return _with_constants(problem, ("defective", colors, defect, max_degree))


_CONSTANTS_CACHE = {}


def _with_constants(problem, key):
    if key not in _CONSTANTS_CACHE:
        try:
            _CONSTANTS_CACHE[key] = compute_constants(problem)
        except EnumerationTooLarge:
            _CONSTANTS_CACHE[key] = mono_edge_constants(problem)
    problem.lam, problem.big_lam = _CONSTANTS_CACHE[key]
    return problem


def mono_edge_constants(problem):
    """Closed-form (lambda, Lambda) for the monochromatic-edge potential.

    With ``r = 1`` and Psi counting monochromatic edges at the center, the
    best recolor of a degree-``k`` center turns ``m`` conflicts into the
    smallest conflict count among the other colors, so it suffices to scan
    color-count vectors of the neighborhood.
    """
    colors = len(problem.node_out)
    lo, hi = None, None
    for k in range(problem.max_degree + 1):
        for counts in _compositions(k, colors):
            m = counts[0]
            best = m - min(counts)
            if best <= 0:
                continue
            if problem.accept is not None and m <= problem.params.get("defect", -1):
                continue
            lo = best if lo is None else min(lo, best)
            hi = best if hi is None else max(hi, best)
    if lo is None:
        raise ProblemInfeasible("no violating neighborhood exists")
    # improvement of the total potential: each conflict is worth 1/2 at both endpoints
    return Fraction(lo), Fraction(hi)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multisets(items, caps, start=0):
    """Multisets over ``items`` (each a tuple of N1 indices) respecting per-index caps."""
    yield ()
    for i in range(start, len(items)):
        sub = items[i]
        if all(caps[j] > 0 for j in sub):
            for j in sub:
                caps[j] -= 1
            for rest in _multisets(items, caps, i):
                yield (sub,) + rest
            for j in sub:
                caps[j] += 1


def radius2_structures(max_degree):
    """Edge lists of centered graphs of radius 2 and degree <= ``max_degree``.

    Center is node 0, its neighbors are ``1..k``; every further node sits at
    distance 2 and is described by its non-empty set of neighbors among
    ``1..k``.  Structures that differ only by permuting nodes may repeat.
    """
    delta = max_degree
    for k in range(delta + 1):
        first = list(range(1, k + 1))
        pairs = list(itertools.combinations(first, 2))
        for mask in range(1 << len(pairs)):
            inner = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            deg = {i: 1 for i in first}
            for a, b in inner:
                deg[a] += 1
                deg[b] += 1
            if any(d > delta for d in deg.values()):
                continue
            caps = {i: delta - deg[i] for i in first}
            subsets = [s for size in range(1, min(k, delta) + 1) for s in itertools.combinations(first, size)]
            for outer in _multisets(subsets, caps):
                edges = [(0, i) for i in first] + inner
                nxt = k + 1
                for sub in outer:
                    edges.extend((i, nxt) for i in sub)
                    nxt += 1
                yield nxt, edges


def compute_constants(problem, cap=ENUMERATION_CAP):
    """Enumerate radius-2r centered graphs and return ``(lambda, Lambda)``.

    lambda is the smallest, Lambda the largest, best single-center
    improvement over every enumerated neighborhood whose center violates the
    constraint.  Only ``r = 1`` is enumerable.
    """
    if problem.radius != 1:
        raise EnumerationTooLarge("only radius-1 problems can be enumerated")
    from .graph import build_graph

    structures = list(radius2_structures(problem.max_degree))
    n_node = len(problem.node_in) * len(problem.node_out)
    n_half = len(problem.half_edge_in) * len(problem.half_edge_out)
    total = 0
    for n, edges in structures:
        total += n_node ** n * n_half ** (2 * len(edges))
        if total > cap:
            raise EnumerationTooLarge(f"more than {cap} labeled neighborhoods")

    node_pairs = list(itertools.product(problem.node_in, problem.node_out))
    half_pairs = list(itertools.product(problem.half_edge_in, problem.half_edge_out))
    lo, hi = None, None
    for n, edges in structures:
        base = build_graph(edges, n)
        hes = base.half_edges()
        for node_labs in itertools.product(node_pairs, repeat=n):
            for half_labs in itertools.product(half_pairs, repeat=len(hes)):
                g = LabeledGraph(n, base.adjacency, node_labs, dict(zip(hes, half_labs)))
                lab = Labeling.from_graph(g)
                if node_satisfies(problem, g, lab, 0):
                    continue
                _, drop = best_center_relabel(problem, g, lab, 0)
                value = Fraction(drop, problem.denominator)
                lo = value if lo is None else min(lo, value)
                hi = value if hi is None else max(hi, value)
    if lo is None:
        raise ProblemInfeasible("no violating neighborhood exists")
    return lo, hi


def make_problem(name, **params):
    """Build a problem by CLI name: ``cut`` or ``defective``."""
    if name == "cut":
        return locally_optimal_cut(int(params.get("max_degree", 3)))
    if name == "defective":
        return defective_coloring(int(params["colors"]), int(params["defect"]), int(params.get("max_degree", 3)))
    raise ValueError(f"unknown problem {name!r}")

