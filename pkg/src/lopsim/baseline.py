"""Centralized sequential fixer: pick a violating node, apply its best relabel, repeat."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .graph import build_graph
from .lop import Labeling, best_center_relabel, node_satisfies, total_potential_units


@dataclass
class FixStep:
    node: int
    old: object
    new: object
    pot_before: Fraction
    pot_after: Fraction


@dataclass
class FixTrace:
    steps: list = field(default_factory=list)

    @property
    def flips(self):
        return len(self.steps)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "node", "old", "new", "pot_before", "pot_after"])
            for i, s in enumerate(self.steps, 1):
                w.writerow([i, s.node, s.old, s.new, s.pot_before, s.pot_after])


def _label_of(labeling, relabel, v):
    half = tuple(labeling.half_edge(v, u) for (_, u) in sorted(relabel.half_edges))
    return labeling.node(v) if not half or all(h is None for h in half) else (labeling.node(v), half)


def sequential_fix(g, problem, labeling, policy="lowest_id", seed=None, max_steps=None):
    """Fix violating nodes one at a time until every node is satisfied.

    ``policy`` is ``"lowest_id"`` or ``"random"`` (needs ``seed``).  The input
    labeling is not modified.  Returns ``(labeling, FixTrace)``.
    """
    if policy not in ("lowest_id", "random"):
        raise ValueError(f"unknown policy {policy!r}")
    rng = random.Random(seed) if policy == "random" else None
    lab = labeling.copy()
    den = problem.denominator
    pot = total_potential_units(problem, g, lab)
    reach = g.ball_table(2 * problem.radius)
    bad = {v for v in range(g.n) if not node_satisfies(problem, g, lab, v)}
    trace = FixTrace()
    while bad:
        if max_steps is not None and trace.flips >= max_steps:
            break
        v = min(bad) if rng is None else rng.choice(sorted(bad))
        relabel, drop = best_center_relabel(problem, g, lab, v)
        if relabel is None:
            raise AssertionError(f"violating node {v} has no improving relabel")
        old = _label_of(lab, relabel, v)
        lab.patch(relabel)
        new = _label_of(lab, relabel, v)
        trace.steps.append(FixStep(v, old, new, Fraction(pot, den), Fraction(pot - drop, den)))
        pot -= drop
        for x in reach[v]:
            if node_satisfies(problem, g, lab, x):
                bad.discard(x)
            else:
                bad.add(x)
    return lab, trace


def cascade_path(length):
    """A cut instance where one fix walks down a path of ``length`` nodes.

    Path nodes ``0 .. length-1`` alternate labels.  Node 0 carries two pendant
    leaves with its own label, so it starts unhappy; every later path node
    has one same-labelled pendant (itself anchored by an opposite leaf), so
    flipping node ``i`` leaves node ``i+1`` with two conflicts.  Under the
    lowest-id policy this takes exactly ``length`` flips.
    """
    if length < 2:
        raise ValueError("length must be at least 2")
    edges = [(i, i + 1) for i in range(length - 1)]
    labels = [1 if i % 2 == 0 else -1 for i in range(length)]
    nxt = length
    for leaf in range(2):
        edges.append((0, nxt))
        labels.append(labels[0])
        nxt += 1
    for i in range(1, length):
        y, z = nxt, nxt + 1
        edges += [(i, y), (y, z)]
        labels += [labels[i], -labels[i]]
        nxt += 2
    g = build_graph(edges, nxt)
    return g, Labeling(labels, {he: None for he in g.half_edges()})
