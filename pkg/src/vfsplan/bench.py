"""Random task generation and the value-space vs ground-truth comparison.

Three task families are generated over the four zone colors with a fixed
0.8 threshold: sequencing (nested eventually-conjunctions), reach-avoid
(until chains whose left operands bound the avoided color from above, the
comparison-flipped form of negating it), and stability (eventually-globally).
Each benchmark sample plans in value-function space, executes in the
simulator, and records the realized value-space robustness next to the
ground-truth robustness of the executed trajectory.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import stl
from .planner import PlannerConfig, mpc_run, plan, z_signal
from .vfs import embed_state
from .world import (
    COLORS,
    DEFAULT_SKILLS,
    WorldConfig,
    execute_skill,
    ground_truth_formula,
    ground_truth_signal,
    reset_world,
)

FAMILIES = ("sequencing", "reach_avoid", "stability")
THRESHOLD = 0.8


class InfeasibleWindowError(ValueError):
    """The horizon is too short to fit the family's window structure."""


def _split_budget(rng, parts: int, total: int):
    """parts window widths, each >= 1, summing to at most total."""
    if total < parts:
        raise InfeasibleWindowError(
            f"horizon {total} cannot fit {parts} windows of width >= 1"
        )
    widths = []
    remaining = total
    for i in range(parts):
        hi = remaining - (parts - 1 - i)
        widths.append(int(rng.integers(1, hi + 1)))
        remaining -= widths[-1]
    return widths


def _above(color):
    return stl.Predicate(color, ">", THRESHOLD)


def _below(color):
    # comparison-flipped negation: C <= theta is exactly not(C > theta)
    return stl.Predicate(color, "<=", THRESHOLD)


def gen_formula(family: str, colors, T: int, seed) -> stl.Formula:
    """Random task of the given family with horizon at most T."""
    rng = np.random.default_rng(seed)
    colors = list(colors)
    if family == "sequencing":
        n = int(rng.integers(2, 4))
        picks = [str(c) for c in rng.choice(colors, size=n, replace=False)]
        widths = _split_budget(rng, n, T)
        node = stl.Eventually(stl.Interval(0, widths[-1]), _above(picks[-1]))
        for color, width in zip(reversed(picks[:-1]), reversed(widths[:-1])):
            node = stl.Eventually(stl.Interval(0, width), stl.And(_above(color), node))
        return node
    if family == "reach_avoid":
        levels = int(rng.integers(1, 3))
        widths = _split_budget(rng, levels, T)
        goals, avoids = [], []
        for i in range(levels):
            goal_options = [c for c in colors if not goals or c != goals[-1]]
            goal = str(rng.choice(goal_options))
            # the avoided color may match neither this goal nor the previous
            # one: the inner window opens the instant the previous goal holds
            banned = {goal} | ({goals[-1]} if goals else set())
            avoid = str(rng.choice([c for c in colors if c not in banned]))
            goals.append(goal)
            avoids.append(avoid)
        node = stl.Until(stl.Interval(0, widths[-1]), _below(avoids[-1]),
                         _above(goals[-1]))
        for i in range(levels - 2, -1, -1):
            node = stl.Until(stl.Interval(0, widths[i]), _below(avoids[i]),
                             stl.And(_above(goals[i]), node))
        return node
    if family == "stability":
        if T < 2:
            raise InfeasibleWindowError("stability needs a horizon of at least 2")
        reach = int(rng.integers(1, T))
        hold = int(rng.integers(1, T - reach + 1))
        color = str(rng.choice(colors))
        return stl.Eventually(
            stl.Interval(0, reach),
            stl.Globally(stl.Interval(0, hold), _above(color)),
        )
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


@dataclass
class BenchRecord:
    family: str
    sample: int
    seed: int
    formula: str
    vfs_robustness: float
    predicted_robustness: float
    gt_robustness: float
    success_vfs: bool
    success_gt: bool
    error: str = ""


def _run_sample(args):
    family, sample, world, model, cfg, root_seed, family_idx, use_mpc = args
    ss = np.random.SeedSequence([root_seed, family_idx, sample])
    formula_seq, run_seq = ss.spawn(2)
    run_seed = int(run_seq.generate_state(1, np.uint64)[0])
    try:
        phi = gen_formula(family, COLORS, cfg.horizon, formula_seq)
        text = stl.format_formula(phi)
        if use_mpc:
            res = mpc_run(world, model, phi, cfg, run_seed)
            realized_rob = res.realized_robustness
            gt_rob = res.gt_robustness
            predicted = res.plans[0][1].predicted_robustness
        else:
            state, layout = reset_world(world, run_seed)
            pcfg = replace(cfg, seed=run_seed)
            pres = plan(embed_state(state, layout), model, phi, pcfg)
            states = [state]
            for sid in pres.skills:
                traj = execute_skill(states[-1], DEFAULT_SKILLS[sid], layout)
                states.extend(traj[1:])
            realized = [
                embed_state(states[i], layout)
                for i in range(0, len(states), max(1, layout.tau))
            ]
            realized_rob = stl.robustness(z_signal(realized), phi, 0)
            gt_sig = ground_truth_signal(states, layout, stride=max(1, layout.tau))
            gt_rob = stl.robustness(gt_sig, ground_truth_formula(phi), 0)
            predicted = pres.predicted_robustness
        return BenchRecord(family, sample, run_seed, text,
                           float(realized_rob), float(predicted), float(gt_rob),
                           realized_rob > 0, gt_rob > 0)
    except Exception as exc:  # a failed sample is recorded, never dropped
        return BenchRecord(family, sample, run_seed, "", float("nan"),
                           float("nan"), float("nan"), False, False,
                           error=f"{type(exc).__name__}: {exc}")


def run_benchmark(families, samples_per_family: int, world: WorldConfig, model,
                  cfg: PlannerConfig, seed: int, use_mpc: bool = True,
                  parallel: int = 0):
    """Generate, plan and execute samples; returns records sorted by
    (family, sample) regardless of execution order."""
    families = list(families)
    for family in families:
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
    jobs = [
        (family, i, world, model, cfg, seed, FAMILIES.index(family), use_mpc)
        for family in families
        for i in range(samples_per_family)
    ]
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_run_sample, jobs, chunksize=1))
    else:
        records = [_run_sample(job) for job in jobs]
    records.sort(key=lambda r: (FAMILIES.index(r.family), r.sample))
    return records


# -- statistics ----------------------------------------------------------------

@dataclass
class SpaceStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    success_rate: float


@dataclass
class FamilySummary:
    family: str
    n: int
    failed: int
    vfs: SpaceStats
    ground_truth: SpaceStats


def _space_stats(values, successes) -> SpaceStats:
    v = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(v, [25, 50, 75])  # linear interpolation
    return SpaceStats(float(v.min()), float(q1), float(median), float(q3),
                      float(v.max()), float(np.mean(successes)))


def summarize(records):
    """Quartile and success statistics per family for both spaces.

    Failed samples (nonempty error) are excluded from the quartiles but
    counted in the `failed` field.
    """
    out = []
    for family in FAMILIES:
        rows = [r for r in records if r.family == family]
        if not rows:
            continue
        ok = [r for r in rows if not r.error]
        if not ok:
            raise ValueError(f"every sample of family {family!r} failed")
        out.append(FamilySummary(
            family=family,
            n=len(rows),
            failed=len(rows) - len(ok),
            vfs=_space_stats([r.vfs_robustness for r in ok],
                             [r.success_vfs for r in ok]),
            ground_truth=_space_stats([r.gt_robustness for r in ok],
                                      [r.success_gt for r in ok]),
        ))
    return out


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "sample", "seed", "formula", "vfs_robustness",
                         "predicted_robustness", "gt_robustness", "success_vfs",
                         "success_gt", "error"])
        for r in records:
            writer.writerow([
                r.family, r.sample, r.seed, r.formula,
                repr(r.vfs_robustness), repr(r.predicted_robustness),
                repr(r.gt_robustness),
                "true" if r.success_vfs else "false",
                "true" if r.success_gt else "false",
                r.error,
            ])


def write_summary_json(summaries, path) -> None:
    doc = [asdict(s) for s in summaries]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- boxplot -------------------------------------------------------------------

_VFS_COLOR = "#4c72b0"
_GT_COLOR = "#dd8452"


def render_boxplot_svg(summaries, path=None) -> str:
    """Grouped boxplots, one group per family, value-space and ground-truth
    boxes side by side.  Whiskers span min to max; the dashed line marks 0."""
    width, height = 640, 400
    left, right, top, bottom = 70, 20, 40, 60
    plot_w = width - left - right
    plot_h = height - top - bottom

    lo = min(min(s.vfs.minimum, s.ground_truth.minimum) for s in summaries)
    hi = max(max(s.vfs.maximum, s.ground_truth.maximum) for s in summaries)
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    pad = 0.08 * (hi - lo) or 0.1
    lo, hi = lo - pad, hi + pad

    def y(v):
        return top + plot_h * (hi - v) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{y(0.0):.2f}" x2="{left + plot_w}" y2="{y(0.0):.2f}" '
        'stroke="gray" stroke-dasharray="4 3"/>',
    ]
    n_ticks = 5
    for i in range(n_ticks + 1):
        v = lo + (hi - lo) * i / n_ticks
        parts.append(
            f'<text x="{left - 8}" y="{y(v) + 4:.2f}" font-size="11" '
            f'text-anchor="end">{v:.2f}</text>'
        )
        parts.append(
            f'<line x1="{left - 4}" y1="{y(v):.2f}" x2="{left}" y2="{y(v):.2f}" '
            'stroke="black"/>'
        )

    group_w = plot_w / max(len(summaries), 1)
    box_w = min(40.0, group_w / 3.5)
    for gi, s in enumerate(summaries):
        cx = left + group_w * (gi + 0.5)
        for offset, stats, color in (
            (-box_w * 0.65, s.vfs, _VFS_COLOR),
            (box_w * 0.65, s.ground_truth, _GT_COLOR),
        ):
            bx = cx + offset - box_w / 2
            parts.append(
                f'<line x1="{cx + offset:.2f}" y1="{y(stats.minimum):.2f}" '
                f'x2="{cx + offset:.2f}" y2="{y(stats.maximum):.2f}" stroke="black"/>'
            )
            for whisker in (stats.minimum, stats.maximum):
                parts.append(
                    f'<line x1="{cx + offset - box_w / 4:.2f}" y1="{y(whisker):.2f}" '
                    f'x2="{cx + offset + box_w / 4:.2f}" y2="{y(whisker):.2f}" '
                    'stroke="black"/>'
                )
            parts.append(
                f'<rect x="{bx:.2f}" y="{y(stats.q3):.2f}" width="{box_w:.2f}" '
                f'height="{y(stats.q1) - y(stats.q3):.2f}" fill="{color}" '
                'fill-opacity="0.8" stroke="black"/>'
            )
            parts.append(
                f'<line x1="{bx:.2f}" y1="{y(stats.median):.2f}" '
                f'x2="{bx + box_w:.2f}" y2="{y(stats.median):.2f}" '
                'stroke="black" stroke-width="2"/>'
            )
        parts.append(
            f'<text x="{cx:.2f}" y="{top + plot_h + 18}" font-size="12" '
            f'text-anchor="middle">{s.family}</text>'
        )
    parts.append(
        f'<rect x="{left}" y="12" width="12" height="12" fill="{_VFS_COLOR}"/>'
        f'<text x="{left + 16}" y="22" font-size="11">value space</text>'
    )
    parts.append(
        f'<rect x="{left + 120}" y="12" width="12" height="12" fill="{_GT_COLOR}"/>'
        f'<text x="{left + 136}" y="22" font-size="11">ground truth</text>'
    )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(svg)
    return svg
