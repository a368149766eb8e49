import math

import numpy as np
import pytest

from vfsplan import stl
from vfsplan.bench import (
    FAMILIES,
    BenchRecord,
    InfeasibleWindowError,
    gen_formula,
    render_boxplot_svg,
    run_benchmark,
    summarize,
    write_records_csv,
)
from vfsplan.planner import PlannerConfig
from vfsplan.world import COLORS, WorldConfig


def until_levels(f):
    """Walk a reach-avoid tree, yielding its Until nodes outermost first."""
    while isinstance(f, stl.Until):
        yield f
        f = f.right.right if isinstance(f.right, stl.And) else None
        if f is None:
            return


def test_stability_shape():
    f = gen_formula("stability", COLORS, T=10, seed=5)
    assert isinstance(f, stl.Eventually)
    assert isinstance(f.child, stl.Globally)
    assert isinstance(f.child.child, stl.Predicate)
    assert f.child.child.threshold == 0.8
    assert f.child.child.comparison == ">"


def test_sequencing_shape():
    for seed in range(30):
        f = gen_formula("sequencing", COLORS, T=10, seed=seed)
        colors = []
        node = f
        while True:
            assert isinstance(node, stl.Eventually)
            if isinstance(node.child, stl.And):
                assert isinstance(node.child.left, stl.Predicate)
                colors.append(node.child.left.channel)
                node = node.child.right
            else:
                assert isinstance(node.child, stl.Predicate)
                colors.append(node.child.channel)
                break
        assert len(colors) in (2, 3)
        assert len(set(colors)) == len(colors)  # distinct colors


def test_reach_avoid_shape():
    for seed in range(30):
        f = gen_formula("reach_avoid", COLORS, T=10, seed=seed)
        levels = list(until_levels(f))
        assert 1 <= len(levels) <= 2
        prev_goal = None
        for u in levels:
            # negated avoid realized as an upper-bound comparison
            assert isinstance(u.left, stl.Predicate)
            assert u.left.comparison == "<="
            goal = u.right.left if isinstance(u.right, stl.And) else u.right
            assert isinstance(goal, stl.Predicate)
            assert goal.comparison == ">"
            assert u.left.channel != goal.channel
            if prev_goal is not None:
                assert u.left.channel != prev_goal
                assert goal.channel != prev_goal
            prev_goal = goal.channel


@pytest.mark.parametrize("family", FAMILIES)
def test_generated_formulas_parse_and_fit_horizon(family):
    for seed in range(100):
        f = gen_formula(family, COLORS, T=10, seed=seed)
        assert stl.horizon(f) <= 10
        assert stl.parse_formula(stl.format_formula(f)) == f


def test_infeasible_horizon_raises():
    with pytest.raises(InfeasibleWindowError):
        gen_formula("sequencing", COLORS, T=1, seed=0)
    with pytest.raises(InfeasibleWindowError):
        gen_formula("stability", COLORS, T=1, seed=0)


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        gen_formula("chaining", COLORS, T=10, seed=0)


# -- summarize -----------------------------------------------------------------

def rec(family, sample, vfs, gt, err=""):
    return BenchRecord(family, sample, sample, "R>0.8", vfs, vfs, gt,
                       vfs > 0, gt > 0, err)


def test_summary_single_record():
    s = summarize([rec("stability", 0, 0.4, 0.1)])
    assert s[0].vfs.q1 == s[0].vfs.median == s[0].vfs.q3 == 0.4


def test_summary_median_linear_interpolation():
    records = [rec("stability", i, v, v) for i, v in enumerate([1.0, 2.0, 3.0, 4.0])]
    s = summarize(records)[0]
    assert s.vfs.median == pytest.approx(2.5)
    assert s.vfs.q1 <= s.vfs.median <= s.vfs.q3


def test_summary_success_rates_and_failures():
    records = [
        rec("sequencing", 0, 0.2, -0.1),
        rec("sequencing", 1, -0.3, 0.4),
        rec("sequencing", 2, float("nan"), float("nan"), err="boom"),
    ]
    s = summarize(records)[0]
    assert s.n == 3 and s.failed == 1
    assert s.vfs.success_rate == pytest.approx(0.5)
    assert s.ground_truth.success_rate == pytest.approx(0.5)


# -- run_benchmark -------------------------------------------------------------

def gain_step(z, sid):
    z = np.asarray(z, dtype=float)
    out = 0.85 * z
    out[sid] = z[sid] + 0.6 * (1.0 - z[sid])
    return out


@pytest.fixture
def bench_setup():
    world = WorldConfig(tau=3)
    cfg = PlannerConfig(horizon=4, iterations=25, seed=0, replan_interval=2)
    return world, cfg


def test_benchmark_counts_and_order(bench_setup):
    world, cfg = bench_setup
    records = run_benchmark(FAMILIES, 2, world, gain_step, cfg, seed=3)
    assert len(records) == 6
    assert [(r.family, r.sample) for r in records] == [
        ("sequencing", 0), ("sequencing", 1),
        ("reach_avoid", 0), ("reach_avoid", 1),
        ("stability", 0), ("stability", 1),
    ]
    assert all(r.error == "" for r in records)
    for r in records:
        assert r.success_vfs == (r.vfs_robustness > 0)
        assert r.success_gt == (r.gt_robustness > 0)


def test_benchmark_deterministic(bench_setup):
    world, cfg = bench_setup
    a = run_benchmark(["stability"], 3, world, gain_step, cfg, seed=11)
    b = run_benchmark(["stability"], 3, world, gain_step, cfg, seed=11)
    assert a == b


def test_benchmark_records_failures(bench_setup):
    world, _ = bench_setup
    cfg = PlannerConfig(horizon=1, iterations=5)  # too short for sequencing
    records = run_benchmark(["sequencing"], 2, world, gain_step, cfg, seed=0)
    assert len(records) == 2
    assert all("InfeasibleWindowError" in r.error for r in records)
    assert all(math.isnan(r.vfs_robustness) for r in records)


def test_benchmark_parallel_matches_sequential(bench_setup):
    world, cfg = bench_setup
    seq = run_benchmark(FAMILIES, 2, world, gain_step, cfg, seed=7)
    par = run_benchmark(FAMILIES, 2, world, gain_step, cfg, seed=7, parallel=2)
    assert seq == par


def test_benchmark_open_loop_mode(bench_setup):
    world, cfg = bench_setup
    records = run_benchmark(["stability"], 2, world, gain_step, cfg, seed=5,
                            use_mpc=False)
    assert len(records) == 2 and all(r.error == "" for r in records)


def test_records_csv(tmp_path, bench_setup):
    world, cfg = bench_setup
    records = run_benchmark(["stability"], 2, world, gain_step, cfg, seed=1)
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ("family,sample,seed,formula,vfs_robustness,"
                        "predicted_robustness,gt_robustness,success_vfs,"
                        "success_gt,error")
    assert len(lines) == 3


def test_boxplot_svg_deterministic(bench_setup):
    world, cfg = bench_setup
    records = run_benchmark(FAMILIES, 2, world, gain_step, cfg, seed=2)
    summaries = summarize(records)
    svg1 = render_boxplot_svg(summaries)
    svg2 = render_boxplot_svg(summaries)
    assert svg1 == svg2
    assert svg1.startswith("<svg")
    # one box pair per family plus two legend swatches and the background
    assert svg1.count("<rect") == 2 * len(summaries) + 3
