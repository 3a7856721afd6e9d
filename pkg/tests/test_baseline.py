import random

import pytest

from lopsim.baseline import cascade_path, sequential_fix
from lopsim.graph import generate
from lopsim.lop import Labeling, defective_coloring, total_potential, verify_solution

from conftest import labeled


@pytest.mark.parametrize("policy", ["lowest_id", "random"])
def test_fixer_output_verifies(cut3, policy):
    for seed in range(5):
        g = generate("random_bounded", n=40, max_degree=3, p=0.1, seed=seed)
        start = labeled(g, [1] * g.n)
        out, trace = sequential_fix(g, cut3, start, policy=policy, seed=seed)
        assert verify_solution(cut3, g, out).ok
        assert trace.flips <= g.m
        assert start.node_out == [1] * g.n


def test_each_step_drops_by_lambda(cut3):
    g = generate("random_regular", n=60, degree=3, seed=3)
    start = labeled(g, [-1] * 60)
    out, trace = sequential_fix(g, cut3, start)
    pots = [s.pot_before for s in trace.steps]
    assert pots[0] == total_potential(cut3, g, start)
    for s in trace.steps:
        assert s.pot_before - s.pot_after >= cut3.lam
    assert trace.steps[-1].pot_after == total_potential(cut3, g, out)
    assert trace.flips <= total_potential(cut3, g, start) / cut3.lam


def test_valid_input_needs_no_flips(cut3):
    g = generate("cycle", n=10)
    _, trace = sequential_fix(g, cut3, labeled(g, [1, -1] * 5))
    assert trace.flips == 0


@pytest.mark.parametrize("length", [5, 20, 60])
def test_cascade_is_linear(cut3, length):
    g, lab = cascade_path(length)
    assert g.max_degree <= 3
    out, trace = sequential_fix(g, cut3, lab)
    assert trace.flips == length
    assert [s.node for s in trace.steps] == list(range(length))
    assert verify_solution(cut3, g, out).ok
    assert g.n == 3 * length


def test_random_policy_is_seeded(cut3):
    g = generate("random_regular", n=50, degree=3, seed=9)
    a = sequential_fix(g, cut3, labeled(g, [1] * 50), "random", 4)[1]
    b = sequential_fix(g, cut3, labeled(g, [1] * 50), "random", 4)[1]
    assert [s.node for s in a.steps] == [s.node for s in b.steps]


def test_defective(cut3):
    p = defective_coloring(2, 1, 3)
    g = generate("random_regular", n=80, degree=3, seed=1)
    rng = random.Random(0)
    out, _ = sequential_fix(g, p, Labeling([rng.choice((1, 2)) for _ in range(80)], {he: None for he in g.half_edges()}))
    assert verify_solution(p, g, out).ok
    assert all(sum(out.node(u) == out.node(v) for u in g.neighbors(v)) <= 1 for v in range(80))


def test_fix_trace_csv(cut3, tmp_path):
    g, lab = cascade_path(4)
    _, trace = sequential_fix(g, cut3, lab)
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,node,old,new,pot_before,pot_after" and len(lines) == 5


def test_unknown_policy(cut3, triangle):
    with pytest.raises(ValueError):
        sequential_fix(triangle, cut3, labeled(triangle, [1, 1, 1]), policy="greedy")
