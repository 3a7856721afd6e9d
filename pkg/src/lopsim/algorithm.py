"""Phase loop of the distributed LOP algorithm, simulated centrally.

Each phase clusters the graph with MPX, lets every cluster apply a maximal
sequence of admissible R-improving sets deep inside itself, commits at the
phase barrier and raises R.  Round costs are accounted as if the phase ran
in the LOCAL model.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from .baseline import sequential_fix
from .errors import DegreeExceedsProblem
from .graph import FORMAT_VERSION, INF
from .improving import ImprovementSearch, interior_nodes, maximal_sequence
from .lop import Labeling, verify_solution
from .mpx import draw_shifts, assign_clusters

SCALE_MODES = ("desk_scale", "literal")
INITIAL_MODES = ("first", "random", "graph")
FALLBACKS = ("none", "sequential")
ROUND_OVERHEAD = 1
DESK_RHO = 0.3


@dataclass
class AlgorithmConfig:
    c: float = 2.0
    c1: float = 3.0
    c2: float = 1.0
    c3: float = 1.0
    size_cap: int = 6
    phase_count: int | None = None
    scale_mode: str = "desk_scale"
    retry_limit: int = 2
    fallback: str = "sequential"
    seed: int = 0
    initial: str = "first"
    desk_rho: float = DESK_RHO

    def __post_init__(self):
        for name in ("c", "c1", "c2", "c3", "desk_rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.size_cap < 1:
            raise ValueError("size_cap must be at least 1")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be non-negative")
        if self.phase_count is not None and self.phase_count < 1:
            raise ValueError("phase_count must be at least 1")
        if self.scale_mode not in SCALE_MODES:
            raise ValueError(f"scale_mode must be one of {SCALE_MODES}")
        if self.fallback not in FALLBACKS:
            raise ValueError(f"fallback must be one of {FALLBACKS}")
        if self.initial not in INITIAL_MODES:
            raise ValueError(f"initial must be one of {INITIAL_MODES}")

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Schedule:
    log_n: Fraction
    eps: Fraction
    r_first: Fraction
    r_step: Fraction
    rho: float
    phase_count: int
    diameter_cap: int

    def threshold(self, phase):
        """R for 1-based ``phase``."""
        return self.r_first + (phase - 1) * self.r_step

    def to_json(self):
        return {
            "log_n": str(self.log_n),
            "eps": str(self.eps),
            "r_first": str(self.r_first),
            "r_step": str(self.r_step),
            "rho": self.rho,
            "phase_count": self.phase_count,
            "diameter_cap": self.diameter_cap,
        }


def exact_log(n):
    # natural log, frozen to the exact rational value of the float
    return Fraction(math.log(n))


def _schedule(n, lam, config, rho):
    log_n = exact_log(n)
    lam = Fraction(lam)
    eps = lam / (100 * Fraction(config.c1) * log_n)
    phases = config.phase_count or math.ceil(config.c1 * math.log(n))
    cap = math.ceil(config.c3 * math.log(n) / float(eps))
    return Schedule(log_n, eps, lam / 4, lam / (20 * Fraction(config.c1) * log_n), rho, phases, cap)


def literal_parameters(n, lam, config=None):
    config = config or AlgorithmConfig(scale_mode="literal")
    eps = float(lam) / (100 * config.c1 * math.log(n))
    rho = 10 * config.c2 * eps**2 / (config.c * math.log(n) ** 2)
    return _schedule(n, lam, config, rho)


def desk_scale_parameters(n, lam, config=None):
    """Same R schedule and caps, but a fixed MPX rate giving clusters a few hops wide."""
    if n < 2:
        raise ValueError("n must be at least 2")
    config = config or AlgorithmConfig()
    return _schedule(n, lam, config, config.desk_rho)


def schedule_for(n, lam, config):
    if config.scale_mode == "literal":
        return literal_parameters(n, lam, config)
    return desk_scale_parameters(n, lam, config)


@dataclass
class PhaseRecord:
    phase: int
    R: Fraction
    eps: Fraction
    rho: float
    cluster_count: int
    max_diameter: float
    border_size: int
    sets_applied: int
    improvement: Fraction
    pot_before: Fraction
    pot_after: Fraction
    unhappy: int
    max_shift: float
    max_radius: int
    rounds: int = 0


@dataclass
class StepRecord:
    phase: int
    cluster: int
    nodes: tuple
    improvement: Fraction
    pot_before: Fraction
    pot_after: Fraction


PHASE_COLUMNS = [f.name for f in fields(PhaseRecord)]


def simulated_round_cost(record):
    """MPX locality, then gather to and broadcast from the cluster leader."""
    return math.ceil(record.max_shift) + 1 + 2 * record.max_radius + ROUND_OVERHEAD


@dataclass
class RunResult:
    labeling: Labeling
    phases: list
    steps: list
    schedule: Schedule
    verified: bool
    violations: list
    fallback_used: bool = False
    fallback_flips: int = 0
    attempts: int = 1
    clusterings: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    @property
    def total_rounds(self):
        return sum(p.rounds for p in self.phases)

    @property
    def exit_code(self):
        if self.fallback_used:
            return 3
        return 0 if self.verified else 2

    def trace_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for p in self.phases:
            w.writerow([_cell(getattr(p, c)) for c in PHASE_COLUMNS])
        return buf.getvalue()

    def steps_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "cluster", "nodes", "improvement", "pot_before", "pot_after"])
        for s in self.steps:
            w.writerow([s.phase, s.cluster, " ".join(map(str, s.nodes)), s.improvement, s.pot_before, s.pot_after])
        return buf.getvalue()

    def summary(self):
        return {
            "format_version": FORMAT_VERSION,
            "verified": self.verified,
            "violations": self.violations,
            "fallback_used": self.fallback_used,
            "fallback_flips": self.fallback_flips,
            "attempts": self.attempts,
            "phases": len(self.phases),
            "total_rounds": self.total_rounds,
            "sets_applied": len(self.steps),
            "final_potential": str(self.phases[-1].pot_after) if self.phases else None,
            "schedule": self.schedule.to_json(),
        }


def _cell(x):
    if isinstance(x, float):
        return "inf" if x == INF else repr(x)
    return str(x)


def initial_labeling(g, problem, config):
    if config.initial == "graph":
        return Labeling.from_graph(g)
    if config.initial == "random":
        rng = random.Random(config.seed)
        nodes = [rng.choice(problem.node_out) for _ in range(g.n)]
        half = {he: rng.choice(problem.half_edge_out) for he in g.half_edges()}
        return Labeling(nodes, half)
    return Labeling.uniform(g, problem.node_out[0], problem.half_edge_out[0])


def _count_unhappy(problem, g, labeling):
    return len(verify_solution(problem, g, labeling).violations)


def _attempt(g, problem, config, schedule, attempt, instrument):
    labeling = initial_labeling(g, problem, config)
    search = ImprovementSearch(g, problem, labeling, config.size_cap)
    phases, steps, clusterings, snapshots = [], [], [], []
    diameters = {}
    for i in range(1, schedule.phase_count + 1):
        R = schedule.threshold(i)
        shifts = draw_shifts(g, schedule.rho, (config.seed, attempt, i))
        clustering = assign_clusters(g, shifts, schedule.rho, config.c)
        pot_before = search.potential
        touched = set()
        applied = 0
        for center, members in clustering.clusters.items():
            seq = maximal_sequence(
                g, problem, labeling, R, members, schedule.diameter_cap, config.size_cap, search=search
            )
            mine = set()
            for k, step in enumerate(seq.steps):
                mine |= set(step.relabel.touched())
                steps.append(
                    StepRecord(i, center, step.nodes, step.improvement, seq.potentials[k], seq.potentials[k + 1])
                )
            if touched & mine:
                raise AssertionError(f"phase {i}: clusters relabeled overlapping nodes")
            touched |= mine
            applied += len(seq.steps)
        pot_after = search.potential
        record = PhaseRecord(
            phase=i,
            R=R,
            eps=schedule.eps,
            rho=schedule.rho,
            cluster_count=len(clustering.clusters),
            max_diameter=clustering.realized_d(g, diameters),
            border_size=len(clustering.border),
            sets_applied=applied,
            improvement=pot_before - pot_after,
            pot_before=pot_before,
            pot_after=pot_after,
            unhappy=_count_unhappy(problem, g, labeling),
            max_shift=max(shifts),
            max_radius=clustering.max_radius,
        )
        record.rounds = simulated_round_cost(record)
        phases.append(record)
        if instrument:
            clusterings.append(clustering)
            snapshots.append(labeling.copy())
    return labeling, phases, steps, clusterings, snapshots


def run(g, problem, config=None, instrument=False):
    """Run the phase loop, retrying with fresh clustering seeds on failure.

    Each retry restarts from the initial labeling.  If every attempt ends
    unverified and ``config.fallback == "sequential"``, the sequential fixer
    finishes the last attempt's labeling and the result is flagged.
    """
    config = config or AlgorithmConfig()
    if g.n < 2:
        raise ValueError("the graph needs at least two nodes")
    if g.max_degree > problem.max_degree:
        raise DegreeExceedsProblem(f"graph degree {g.max_degree} exceeds {problem.max_degree}")
    schedule = schedule_for(g.n, problem.lam, config)
    for attempt in range(1 + config.retry_limit):
        labeling, phases, steps, clusterings, snapshots = _attempt(g, problem, config, schedule, attempt, instrument)
        report = verify_solution(problem, g, labeling)
        if report.ok:
            break
    result = RunResult(
        labeling, phases, steps, schedule, report.ok, report.violations,
        attempts=attempt + 1, clusterings=clusterings, snapshots=snapshots,
    )
    if not report.ok and config.fallback == "sequential":
        fixed, fix_trace = sequential_fix(g, problem, labeling)
        result.labeling = fixed
        result.fallback_used = True
        result.fallback_flips = fix_trace.flips
        final = verify_solution(problem, g, fixed)
        result.verified = final.ok
        result.violations = final.violations
    return result


def residual_interior(g, problem, cluster):
    """Nodes a cluster may relabel: ``N_{2r+1}`` stays inside the cluster."""
    return interior_nodes(g, problem, cluster)


def summary_json(result):
    return json.dumps(result.summary(), indent=2, sort_keys=True) + "\n"
