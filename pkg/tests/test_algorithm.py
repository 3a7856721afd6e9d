import math
import statistics
from fractions import Fraction

import pytest

from lopsim.algorithm import (
    AlgorithmConfig,
    desk_scale_parameters,
    literal_parameters,
    run,
    simulated_round_cost,
)
from lopsim.errors import DegreeExceedsProblem
from lopsim.graph import generate
from lopsim.lop import defective_coloring, locally_optimal_cut, total_potential, verify_solution
from lopsim.mpx import mpx

NO_RESCUE = dict(retry_limit=0, fallback="none")


def test_even_cycle(cut2):
    g = generate("cycle", n=16)
    res = run(g, cut2, AlgorithmConfig(seed=1))
    assert res.verified and not res.fallback_used
    assert res.phases[-1].pot_after == total_potential(cut2, g, res.labeling)


def test_two_node_path():
    p = locally_optimal_cut(1)
    g = generate("path", n=2)
    res = run(g, p, AlgorithmConfig(**NO_RESCUE))
    assert res.verified
    first_whole = next(ph for ph in res.phases if ph.cluster_count == 1)
    assert first_whole.unhappy == 0
    assert res.phases[0].pot_before == 1 and res.phases[-1].pot_after == 0


def test_random_regular_200(cut3):
    for seed in range(5):
        g = generate("random_regular", n=200, degree=3, seed=seed)
        res = run(g, cut3, AlgorithmConfig(seed=seed, **NO_RESCUE))
        assert res.verified and verify_solution(cut3, g, res.labeling).ok


def test_degree_check(cut2, petersen):
    with pytest.raises(DegreeExceedsProblem):
        run(petersen, cut2)


def test_schedule_and_monotone_potential(cut3):
    g = generate("random_regular", n=64, degree=3, seed=2)
    cfg = AlgorithmConfig(seed=3, initial="random")
    res = run(g, cut3, cfg)
    log_n = Fraction(math.log(64))
    for i, ph in enumerate(res.phases, 1):
        assert ph.R == Fraction(1, 4) + (i - 1) * Fraction(1) / (20 * 3 * log_n)
        assert ph.pot_after <= ph.pot_before
        assert ph.pot_before - ph.pot_after == ph.improvement
    for a, b in zip(res.phases, res.phases[1:]):
        assert b.pot_before == a.pot_after
    R = {ph.phase: ph.R for ph in res.phases}
    for step in res.steps:
        assert step.improvement >= R[step.phase] * len(step.nodes)
        assert step.pot_before - step.pot_after == step.improvement


def test_cluster_relabels_are_disjoint(cut3):
    g = generate("random_regular", n=128, degree=3, seed=8)
    res = run(g, cut3, AlgorithmConfig(seed=1, initial="random", desk_rho=0.15), instrument=True)
    for ph, clustering in zip(res.phases, res.clusterings):
        for step in res.steps:
            if step.phase == ph.phase:
                assert {clustering.cluster_of[v] for v in step.nodes} == {step.cluster}


def test_round_cost():
    g = generate("cycle", n=8)
    res = run(g, locally_optimal_cut(2), AlgorithmConfig(scale_mode="literal", phase_count=2), instrument=True)
    for ph, c in zip(res.phases, res.clusterings):
        assert ph.cluster_count == 1
        assert ph.rounds == math.ceil(max(c.shifts)) + 1 + 2 * c.max_radius + 1 == simulated_round_cost(ph)
    assert res.total_rounds == sum(ph.rounds for ph in res.phases)


@pytest.mark.parametrize("n", [64, 128, 256, 512, 1024, 4096])
def test_desk_parameters(n):
    lam = Fraction(1)
    s = desk_scale_parameters(n, lam)
    assert s.eps > 0 and s.r_first == lam / 4
    assert s.threshold(s.phase_count) <= Fraction(3, 4) * lam
    assert s.threshold(2) > s.threshold(1)


def test_literal_parameters():
    s = literal_parameters(256, 1)
    cfg = AlgorithmConfig()
    eps = 1 / (100 * cfg.c1 * math.log(256))
    assert s.rho == pytest.approx(10 * cfg.c2 * eps**2 / (cfg.c * math.log(256) ** 2))
    assert s.threshold(s.phase_count) <= Fraction(3, 4)


@pytest.mark.parametrize("n", [64, 512, 4096])
def test_desk_cluster_diameter_band(n):
    g = generate("cycle", n=n)
    rho = desk_scale_parameters(n, 1).rho
    diameters = []
    for seed in range(10):
        c = mpx(g, rho, seed)
        diameters.append(statistics.fmean(min(len(m) - 1, n // 2) for m in c.clusters.values()))
    assert 4 <= statistics.fmean(diameters) <= n / 4


def test_fallback_is_flagged(cut3):
    g = generate("random_regular", n=64, degree=3, seed=1)
    tiny = dict(desk_rho=20.0, phase_count=1)  # singleton clusters: nothing is interior
    res = run(g, cut3, AlgorithmConfig(**tiny, **NO_RESCUE))
    assert not res.verified and res.exit_code == 2 and res.violations
    res = run(g, cut3, AlgorithmConfig(**tiny, retry_limit=2))
    assert res.verified and res.fallback_used and res.attempts == 3 and res.exit_code == 3


def test_defective_run():
    p = defective_coloring(2, 1, 3)
    g = generate("random_regular", n=64, degree=3, seed=4)
    res = run(g, p, AlgorithmConfig(seed=4))
    assert res.verified


def test_deterministic(cut3):
    g = generate("random_regular", n=64, degree=3, seed=6)
    a = run(g, cut3, AlgorithmConfig(seed=2, initial="random"))
    b = run(g, cut3, AlgorithmConfig(seed=2, initial="random"))
    assert a.labeling == b.labeling
    assert a.trace_csv() == b.trace_csv() and a.steps_csv() == b.steps_csv()


def test_config_validation():
    with pytest.raises(ValueError):
        AlgorithmConfig(c1=0)
    with pytest.raises(ValueError):
        AlgorithmConfig(scale_mode="huge")
    with pytest.raises(ValueError):
        AlgorithmConfig.from_json({"colour": 1})
    cfg = AlgorithmConfig(seed=5, size_cap=4)
    assert AlgorithmConfig.from_json(cfg.to_json()) == cfg
