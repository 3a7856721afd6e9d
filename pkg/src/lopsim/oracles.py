"""Brute-force oracles for the structural facts the algorithm relies on.

All checks run on instances small enough to enumerate subsets and
relabelings exhaustively; arithmetic is exact.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import MinimalityPrereqFailed, SearchSpaceTooLarge
from .graph import BLANK, FORMAT_VERSION, INF, bfs_distances, generate, set_distance
from .improving import (
    ImprovementSearch,
    ImprovingSequence,
    ImprovingSet,
    best_relabeling,
    connected_subsets,
    improvement,
    is_minimal,
    restrict_relabel,
)
from .lop import Labeling, locally_optimal_cut

SUBSET_CAP = 16


@dataclass
class OracleConfig:
    max_n: int = 10
    chain_max_n: int = 12
    subset_samples: int = 1000
    minimal_samples: int = 200
    chain_samples: int = 100
    c2: float = 1.0
    c3: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_n > 14 or self.chain_max_n > 14:
            raise ValueError("exhaustive checks are limited to 14 nodes")

    def t1(self, n, eps, radius):
        return self.c3 * math.log(n) / float(eps) + 10 * (radius + 1)

    def t2(self, n, eps, radius):
        return self.c2 * math.log(n) ** 2 / float(eps) ** 2 + self.t1(n, eps, radius)

    def to_json(self):
        return asdict(self)


def _edges_between(g, a, b):
    b = set(b)
    return sum(1 for u in a for w in g.adjacency[u] if w in b)


def check_subset_inequality(g, problem, labeling, S, B, cap=1 << 16):
    """``Imp*(S) <= Imp*(A) + Imp*(B) + 2 * Delta^(2r-1) * |E(A,B)| * Lambda`` with ``A = S - B``."""
    S, B = set(S), set(B)
    if not B <= S:
        raise ValueError("B must be a subset of S")
    A = S - B
    _, imp_s = best_relabeling(g, problem, labeling, S, cap)
    _, imp_a = best_relabeling(g, problem, labeling, A, cap)
    _, imp_b = best_relabeling(g, problem, labeling, B, cap)
    cross = _edges_between(g, A, B)
    slack = 2 * problem.max_degree ** (2 * problem.radius - 1) * cross * Fraction(problem.big_lam)
    rhs = imp_a + imp_b + slack
    return {"lhs": imp_s, "rhs": rhs, "cross_edges": cross, "holds": imp_s <= rhs}


def best_table(g, problem, labeling, cap=1 << 16):
    """``frozenset -> (relabel, Imp*)`` for every non-empty node subset."""
    if g.n > SUBSET_CAP:
        raise SearchSpaceTooLarge(f"{g.n} nodes is too many for a full subset table")
    table = {}
    for size in range(1, g.n + 1):
        for sub in itertools.combinations(range(g.n), size):
            table[frozenset(sub)] = best_relabeling(g, problem, labeling, sub, cap)
    return table


def minimal_improving_sets(g, problem, labeling, table=None):
    """Every ``(S, l*_S)`` with positive improvement and no subset of strictly larger ratio."""
    table = table or best_table(g, problem, labeling)
    found = []
    for sub, (rel, imp) in table.items():
        if imp <= 0:
            continue
        ratio = imp / len(sub)
        if all(
            table[frozenset(t)][1] / len(t) <= ratio
            for size in range(1, len(sub))
            for t in itertools.combinations(sorted(sub), size)
        ):
            found.append(ImprovingSet(tuple(sorted(sub)), rel, imp))
    found.sort(key=lambda s: (len(s.nodes), s.nodes))
    return found


def find_local_witness(g, problem, labeling, imp_set, v, eps, check_minimal=True):
    """Grow ``k`` from 0 until ``S & N_k[v]`` under the restricted relabel has IR >= IR(S) - eps.

    Returns ``(nodes, k)`` or ``None``.
    """
    S = set(imp_set.nodes)
    ratio = imp_set.improving_ratio
    if v not in S:
        raise MinimalityPrereqFailed(f"node {v} is not in the set")
    if not 0 < eps < ratio:
        raise MinimalityPrereqFailed("need 0 < eps < IR(S)")
    if check_minimal and not is_minimal(g, problem, labeling, imp_set):
        raise MinimalityPrereqFailed("the set is not minimal")
    dist = bfs_distances(g, v)
    reach = max((dist.get(x, INF) for x in S), default=0)
    if reach == INF:
        reach = max(dist.values())
    seen = 0
    for k in range(int(reach) + 1):
        part = {x for x in S if dist.get(x, INF) <= k}
        if len(part) == seen:
            continue
        seen = len(part)
        imp = improvement(g, problem, labeling, part, restrict_relabel(imp_set.relabel, part))
        if imp / len(part) >= ratio - eps:
            return tuple(sorted(part)), k
    return None


def check_chain_witness(g, problem, labeling, sequence, v, eps, cap=SUBSET_CAP):
    """Smallest ``k`` with some ``A`` inside ``N_k[v]`` and the union of the sequence's sets
    such that ``IR(A, l, l*_A) >= beta - eps`` against the original labeling ``l``.

    Returns ``(nodes, k)`` or ``None``.
    """
    union = set().union(*(s.nodes for s in sequence.steps)) if sequence.steps else set()
    if len(union) > cap:
        raise SearchSpaceTooLarge(f"union of {len(union)} nodes exceeds {cap}")
    target = Fraction(sequence.beta) - eps
    dist = bfs_distances(g, v)
    memo = {}
    tried = set()
    levels = sorted({dist[x] for x in union if x in dist} | {0})
    for k in levels:
        pool = sorted(x for x in union if dist.get(x, INF) <= k)
        for size in range(1, len(pool) + 1):
            for sub in itertools.combinations(pool, size):
                key = frozenset(sub)
                if key in tried:
                    continue
                tried.add(key)
                if key not in memo:
                    memo[key] = best_relabeling(g, problem, labeling, sub)[1]
                if memo[key] / size >= target:
                    return sub, k
    return None


def random_beta_sequence(g, problem, labeling, beta, rng, max_steps=4, size_cap=3):
    """Apply randomly chosen connected sets with IR >= beta, each against the current labeling."""
    beta = Fraction(beta)
    lab = labeling.copy()
    seq = ImprovingSequence(steps=[], beta=beta, potentials=[], base=labeling.copy())
    for _ in range(max_steps):
        options = []
        for seed in range(g.n):
            for size in range(1, size_cap + 1):
                for nodes in connected_subsets(g, seed, size):
                    rel, imp = best_relabeling(g, problem, lab, nodes)
                    touched = rel.touched()
                    if imp > 0 and imp / size >= beta and set(nodes) <= touched:
                        options.append(ImprovingSet(nodes, rel, imp))
        if not options:
            break
        step = rng.choice(options)
        lab.patch(step.relabel)
        seq.steps.append(step)
    seq.final = lab
    return seq


def border_distance_report(g, problem, result, config=None, size_cap=None):
    """Per phase: residual R-improving sets and their distance to the border sets.

    Needs an instrumented run (stored clusterings and per-phase labelings).
    A residual set is a connected candidate of at most ``size_cap`` nodes
    whose best tight relabel reaches IR >= R_i after phase i.  Each must lie
    within ``2r`` of B_i; containment in the analysis radii t1/t2 is also
    reported, flagged vacuous when those radii reach across the whole graph.
    """
    config = config or OracleConfig()
    if not result.clusterings:
        raise ValueError("the run was not instrumented")
    size_cap = size_cap or 4
    eps = result.schedule.eps
    radius = problem.radius
    t1 = config.t1(g.n, eps, radius)
    t2 = config.t2(g.n, eps, radius)
    diam = max(max(bfs_distances(g, s).values()) for s in range(g.n))
    rows = []
    borders = []
    for record, clustering, snap in zip(result.phases, result.clusterings, result.snapshots):
        border = clustering.border
        borders.append(border)
        search = ImprovementSearch(g, problem, snap.copy(), size_cap)
        search.set_threshold(record.R)
        residual = []
        for seed in range(g.n):
            for size in range(1, size_cap + 1):
                for nodes in connected_subsets(g, seed, size):
                    units, _ = search.evaluate(nodes)
                    if search._passes(units, size):
                        residual.append(nodes)
        to_current = [set_distance(g, nodes, border) if border else INF for nodes in residual]
        to_earlier = [
            max((set_distance(g, nodes, b) if b else INF for b in borders[:-1]), default=0) for nodes in residual
        ]
        near = all(d <= 2 * radius for d in to_current)
        contained = all(d1 <= t1 and d2 <= t2 for d1, d2 in zip(to_current, to_earlier))
        rows.append({
            "phase": record.phase,
            "residual_sets": len(residual),
            "border_size": len(border),
            "max_distance_to_border": max(to_current, default=0),
            "within_2r_of_border": near,
            "contained": contained,
            "vacuous": not residual or t1 >= diam,
        })
    return {"t1": t1, "t2": t2, "graph_diameter": diam, "phases": rows}



# -- audit driver --------------------------------------------------------

def random_instance(n, seed, max_degree=3, p=0.5):
    """A random bounded-degree graph with a uniformly random cut labeling."""
    g = generate("random_bounded", n=n, max_degree=max_degree, p=p, seed=seed)
    rng = random.Random(seed)
    return g, Labeling([rng.choice((-1, 1)) for _ in range(g.n)], {he: BLANK for he in g.half_edges()})


def sample_subset_checks(problem, config):
    rng = random.Random(config.seed)
    results = []
    for i in range(config.subset_samples):
        g, lab = random_instance(rng.randint(2, min(8, config.max_n)), rng.randrange(1 << 30))
        S = [v for v in range(g.n) if rng.random() < 0.6] or [rng.randrange(g.n)]
        B = [v for v in S if rng.random() < 0.5]
        results.append(check_subset_inequality(g, problem, lab, S, B))
    return results


def sample_local_witnesses(problem, config):
    """Witness checks for ``minimal_samples`` minimal sets, every member node, eps = IR/2."""
    rng = random.Random(config.seed + 1)
    checked, records = 0, []
    while checked < config.minimal_samples:
        g, lab = random_instance(rng.randint(4, config.max_n), rng.randrange(1 << 30))
        sets = minimal_improving_sets(g, problem, lab)
        rng.shuffle(sets)
        for imp_set in sets[:4]:
            if checked >= config.minimal_samples:
                break
            eps = imp_set.improving_ratio / 2
            found = [find_local_witness(g, problem, lab, imp_set, v, eps) for v in imp_set.nodes]
            records.append({"size": len(imp_set.nodes), "ok": all(f is not None for f in found),
                            "radii": [f[1] if f else None for f in found]})
            checked += 1
    return records


def sample_chain_witnesses(problem, config, beta=Fraction(1, 2)):
    """Chain checks for ``chain_samples`` random sequences with eps = beta/4, every node of the union."""
    rng = random.Random(config.seed + 2)
    records = []
    while len(records) < config.chain_samples:
        g, lab = random_instance(rng.randint(4, config.chain_max_n), rng.randrange(1 << 30))
        seq = random_beta_sequence(g, problem, lab, beta, rng)
        if not seq.steps:
            continue
        union = sorted(set().union(*(s.nodes for s in seq.steps)))
        found = [check_chain_witness(g, problem, lab, seq, v, seq.beta / 4) for v in union]
        records.append({"steps": len(seq.steps), "ok": all(f is not None for f in found),
                        "radii": [f[1] if f else None for f in found]})
    return records


def audit(config=None, problem=None):
    """Run every sampled oracle and summarize."""
    config = config or OracleConfig()
    problem = problem or locally_optimal_cut(3)
    subset = sample_subset_checks(problem, config)
    local = sample_local_witnesses(problem, config)
    chain = sample_chain_witnesses(problem, config)
    report = {
        "format_version": FORMAT_VERSION,
        "config": config.to_json(),
        "subset_inequality": {"samples": len(subset), "holds": sum(r["holds"] for r in subset)},
        "local_witness": {"samples": len(local), "holds": sum(r["ok"] for r in local),
                          "max_radius": max((k for r in local for k in r["radii"] if k is not None), default=0)},
        "chain_witness": {"samples": len(chain), "holds": sum(r["ok"] for r in chain),
                          "max_radius": max((k for r in chain for k in r["radii"] if k is not None), default=0)},
    }
    report["ok"] = all(report[k]["holds"] == report[k]["samples"]
                       for k in ("subset_inequality", "local_witness", "chain_witness"))
    return report
