"""Serializable experiments, single runs written to disk, and (n x seed) sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algorithm import AlgorithmConfig, initial_labeling, run
from .baseline import sequential_fix
from .errors import ParseError
from .graph import FORMAT_VERSION, generate, load_graph
from .lop import make_problem, total_potential

WORKERS_ENV = "LOPSIM_WORKERS"


@dataclass
class Experiment:
    graph: dict
    problem: dict
    config: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    ns: list = field(default_factory=list)
    base_dir: Path = Path(".")

    @classmethod
    def from_json(cls, data, base_dir="."):
        if not isinstance(data, dict):
            raise ParseError("experiment must be a JSON object")
        for key in ("graph", "problem"):
            if key not in data:
                raise ParseError(f"experiment is missing {key!r}")
        unknown = set(data) - {"format_version", "graph", "problem", "config", "seeds", "ns"}
        if unknown:
            raise ParseError(f"unknown experiment keys: {sorted(unknown)}")
        seeds = data.get("seeds", [0])
        if not seeds or not all(isinstance(s, int) for s in seeds):
            raise ParseError("seeds must be a non-empty list of integers")
        AlgorithmConfig.from_json(data.get("config", {}))
        return cls(data["graph"], data["problem"], data.get("config", {}), seeds, data.get("ns", []), Path(base_dir))

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
        return cls.from_json(data, path.parent)

    def to_json(self):
        data = {"format_version": FORMAT_VERSION, "graph": self.graph, "problem": self.problem,
                "config": self.config, "seeds": self.seeds}
        if self.ns:
            data["ns"] = self.ns
        return data

    def build_problem(self):
        params = dict(self.problem)
        name = params.pop("name", None)
        if name is None:
            raise ParseError("problem needs a name")
        return make_problem(name, **params)

    def build_graph(self, seed, n=None):
        params = dict(self.graph)
        if "file" in params:
            return load_graph(self.base_dir / params["file"])
        kind = params.pop("kind", None)
        if kind is None:
            raise ParseError("graph needs a kind or a file")
        if n is not None:
            params["n"] = n
        random_kind = kind.startswith("random")
        return generate(kind, seed=params.pop("seed", seed) if random_kind else None, **params)

    def build_config(self, seed):
        return AlgorithmConfig.from_json({**self.config, "seed": seed})


def dump_json(data, path):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_run(exp, seed, out_dir, instrument=False, figures=True):
    """Run one seed and write labeling, traces, summary and a potential plot."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = exp.build_problem()
    g = exp.build_graph(seed)
    result = run(g, problem, exp.build_config(seed), instrument=instrument)
    dump_json(result.labeling.to_json(problem), out / "labeling.json")
    (out / "trace.csv").write_text(result.trace_csv())
    (out / "steps.csv").write_text(result.steps_csv())
    summary = result.summary()
    summary["seed"] = seed
    summary["n"] = g.n
    dump_json(summary, out / "summary.json")
    if instrument:
        dump_json(
            {"format_version": FORMAT_VERSION,
             "phases": [{"phase": p.phase, **c.to_json()} for p, c in zip(result.phases, result.clusterings)]},
            out / "clusterings.json",
        )
    if figures:
        from .plotting import plot_potential

        plot_potential(result.phases, out / "potential.png")
    return result


def write_baseline(exp, seed, out_dir, policy="lowest_id", figures=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = exp.build_problem()
    g = exp.build_graph(seed)
    config = exp.build_config(seed)
    start = initial_labeling(g, problem, config)
    labeling, trace = sequential_fix(g, problem, start, policy=policy, seed=seed)
    dump_json(labeling.to_json(problem), out / "labeling.json")
    trace.write_csv(out / "fix_trace.csv")
    dump_json({"format_version": FORMAT_VERSION, "seed": seed, "n": g.n, "m": g.m, "flips": trace.flips,
               "policy": policy, "initial_potential": str(total_potential(problem, g, start))},
              out / "summary.json")
    if figures:
        from .plotting import plot_fix_trace

        plot_fix_trace(trace, out / "fix_trace.png")
    return labeling, trace


SWEEP_COLUMNS = ["n", "seed", "verified", "fallback_used", "attempts", "phases", "total_rounds",
                 "sets_applied", "fallback_flips", "baseline_flips", "pot_initial", "pot_final", "pot_trajectory"]


def _sweep_cell(args):
    exp_json, base_dir, n, seed = args
    exp = Experiment.from_json(exp_json, base_dir)
    problem = exp.build_problem()
    g = exp.build_graph(seed, n)
    config = exp.build_config(seed)
    result = run(g, problem, config)
    _, trace = sequential_fix(g, problem, initial_labeling(g, problem, config))
    pots = [result.phases[0].pot_before] + [p.pot_after for p in result.phases]
    return {
        "n": g.n, "seed": seed, "verified": result.verified, "fallback_used": result.fallback_used,
        "attempts": result.attempts, "phases": len(result.phases), "total_rounds": result.total_rounds,
        "sets_applied": len(result.steps), "fallback_flips": result.fallback_flips,
        "baseline_flips": trace.flips, "pot_initial": str(pots[0]), "pot_final": str(pots[-1]),
        "pot_trajectory": ";".join(map(str, pots)),
    }


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParseError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def sweep(exp, workers=None):
    """One row per (n, seed), in that order regardless of worker count."""
    ns = exp.ns or [None]
    cells = [(exp.to_json(), str(exp.base_dir), n, s) for n in ns for s in exp.seeds]
    workers = workers or worker_count()
    if workers == 1:
        return [_sweep_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, cells))


def fit_polylog_exponent(ns, rounds):
    """Slope of ``log(rounds)`` against ``log(ln n)``: the ``a`` in ``rounds ~ (ln n)^a``."""
    if len(set(ns)) < 2:
        return None
    x = np.log([math.log(n) for n in ns])
    y = np.log(rounds)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def rows_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def write_sweep(exp, out_dir, workers=None, figures=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep(exp, workers)
    (out / "sweep.csv").write_text(rows_csv(rows))
    by_n = {}
    for row in rows:
        by_n.setdefault(row["n"], []).append(row)
    ns = sorted(by_n)
    mean_rounds = [float(np.mean([r["total_rounds"] for r in by_n[n]])) for n in ns]
    exponent = fit_polylog_exponent(ns, mean_rounds)
    summary = {
        "format_version": FORMAT_VERSION,
        "cells": len(rows),
        "verified_fraction": sum(r["verified"] and not r["fallback_used"] for r in rows) / len(rows),
        "fallback_fraction": sum(r["fallback_used"] for r in rows) / len(rows),
        "per_n": {str(n): {"mean_rounds": m, "runs": len(by_n[n])} for n, m in zip(ns, mean_rounds)},
        "polylog_exponent": exponent,
    }
    dump_json(summary, out / "summary.json")
    if figures:
        from .plotting import plot_rounds

        plot_rounds(ns, mean_rounds, exponent, out / "rounds.png")
    return rows, summary
