"""Command-line entry point for the whole pipeline.

Subcommands: monitor (offline robustness check), collect (transition
dataset), train (dynamics model), plan (single open-loop plan), mpc
(receding-horizon run), bench (task-family benchmark).  Every pipeline run
writes a manifest.json with the resolved configuration and seed so any
output can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__, bench, stl, vfs, world
from .planner import PlannerConfig, mpc_run, plan as plan_search
from .vfs import embed_state
from .world import DEFAULT_SKILLS, WorldConfig, execute_skill, reset_world

EXIT_OK = 0
EXIT_UNSAT = 1
EXIT_PARSE = 2
EXIT_SIGNAL = 3


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _planner_config(doc: dict, args) -> PlannerConfig:
    section = dict(doc.get("planner", {}))
    overrides = {
        "horizon": args.horizon,
        "iterations": args.iterations,
        "ucb_c": args.ucb_c,
        "replan_interval": args.replan_interval,
        "ucb_variant": args.ucb_variant,
        "seed": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            section[key] = value
    known = {f: section[f] for f in
             ("horizon", "iterations", "ucb_c", "seed", "replan_interval",
              "ucb_variant") if f in section}
    return PlannerConfig(**known)


def _world_config(doc: dict, args) -> WorldConfig:
    section = dict(doc.get("world", {}))
    if args.tau is not None:
        section["tau"] = args.tau
    if args.seed is not None:
        section["seed"] = args.seed
    if "zones" not in section:
        # leave the canonical fixed layout in place unless the config speaks
        return replace(
            world.config_from_dict({**section, "zones": []}),
            zones=WorldConfig().zones if not section.get("randomize_zones") else (),
        )
    return world.config_from_dict(section)


def _out_dir(args, sub: str) -> str:
    out = args.out or os.path.join("out", sub)
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(out, sub, seed, config_doc, inputs, outputs):
    _write_json(
        {
            "subcommand": sub,
            "seed": seed,
            "config": config_doc,
            "inputs": inputs,
            "outputs": outputs,
            "artifact_version": __version__,
        },
        os.path.join(out, "manifest.json"),
    )


def _resolved_doc(world_cfg, planner_cfg, extra=None):
    doc = {
        "world": world.config_to_dict(world_cfg),
        "planner": {
            "horizon": planner_cfg.horizon,
            "iterations": planner_cfg.iterations,
            "ucb_c": planner_cfg.ucb_c,
            "seed": planner_cfg.seed,
            "replan_interval": planner_cfg.replan_interval,
            "ucb_variant": planner_cfg.ucb_variant,
        },
    }
    if extra:
        doc.update(extra)
    return doc


# -- subcommands ---------------------------------------------------------------

def cmd_monitor(args) -> int:
    try:
        phi = stl.parse_formula(args.formula)
    except (stl.ParseError, stl.IntervalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        signal = stl.read_signal_csv(args.signal)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        rho = stl.robustness(signal, phi, args.t)
    except (stl.SignalTooShortError, stl.UnknownChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIGNAL
    verdict = "SAT" if rho > 0 else ("UNSAT" if rho < 0 else "BOUNDARY")
    print(f"{rho:.9f} {verdict}")
    return EXIT_OK if rho > 0 else EXIT_UNSAT


def cmd_collect(args) -> int:
    doc = _load_config(args.config)
    world_cfg = _world_config(doc, args)
    section = doc.get("collect", {})
    episodes = int(section.get("episodes", 1000))
    steps = int(section.get("steps_per_episode", 10 * world_cfg.tau))
    seed = args.seed if args.seed is not None else world_cfg.seed
    data = vfs.collect_transitions(world_cfg, episodes, steps, seed)
    out = _out_dir(args, "collect")
    dataset_path = os.path.join(out, "dataset.csv")
    vfs.save_dataset_csv(data, dataset_path)
    config_doc = {"world": world.config_to_dict(world_cfg),
                  "collect": {"episodes": episodes, "steps_per_episode": steps}}
    _manifest(out, "collect", seed, config_doc, {}, {"dataset": "dataset.csv"})
    print(f"wrote {len(data)} transitions to {dataset_path}")
    return EXIT_OK


def cmd_train(args) -> int:
    doc = _load_config(args.config)
    section = doc.get("train", {})
    dataset_path = section.get("dataset")
    if not dataset_path or not os.path.exists(dataset_path):
        print(f"error: train.dataset missing or not found: {dataset_path!r}",
              file=sys.stderr)
        return EXIT_PARSE
    seed = args.seed if args.seed is not None else int(section.get("seed", 0))
    data = vfs.load_dataset_csv(dataset_path)
    model, report = vfs.train_dynamics(
        data,
        hidden_width=int(section.get("hidden_width", 64)),
        epochs=int(section.get("epochs", 150)),
        learning_rate=float(section.get("learning_rate", 1e-3)),
        seed=seed,
        batch_size=int(section.get("batch_size", 64)),
    )
    out = _out_dir(args, "train")
    vfs.save_model(model, os.path.join(out, "model.json"))
    _write_json(
        {
            "train_mse": report.train_mse,
            "holdout_mse": report.holdout_mse,
            "holdout_mse_per_component": report.holdout_mse_per_component,
            "records": len(data),
        },
        os.path.join(out, "loss_report.json"),
    )
    config_doc = {"train": {**section, "dataset": dataset_path, "seed": seed}}
    _manifest(out, "train", seed, config_doc, {"dataset": dataset_path},
              {"model": "model.json", "loss_report": "loss_report.json"})
    print(f"trained on {len(data)} records; holdout mse {report.holdout_mse:.6f}")
    return EXIT_OK


def _load_model_arg(doc, key):
    section = doc.get(key, {})
    path = section.get("model")
    if not path or not os.path.exists(path):
        raise FileNotFoundError(f"{key}.model missing or not found: {path!r}")
    return vfs.load_model(path), path, section


def cmd_plan(args) -> int:
    doc = _load_config(args.config)
    try:
        model, model_path, section = _load_model_arg(doc, "plan")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    formula_text = args.formula or section.get("formula")
    if not formula_text:
        print("error: no formula (use --formula or config plan.formula)",
              file=sys.stderr)
        return EXIT_PARSE
    phi = stl.parse_formula(formula_text)
    world_cfg = _world_config(doc, args)
    planner_cfg = _planner_config(doc, args)
    seed = args.seed if args.seed is not None else planner_cfg.seed
    planner_cfg = replace(planner_cfg, seed=seed)
    state, layout = reset_world(world_cfg, seed)
    result = plan_search(embed_state(state, layout), model, phi, planner_cfg)
    out = _out_dir(args, "plan")
    config_doc = _resolved_doc(layout, planner_cfg)
    _write_json(
        {
            "formula": stl.format_formula(phi),
            "skills": [int(s) for s in result.skills],
            "predicted_robustness": result.predicted_robustness,
            "z_trajectory": [[float(v) for v in row]
                             for row in result.predicted_z_trajectory],
            "seed": seed,
            "config": config_doc,
        },
        os.path.join(out, "plan.json"),
    )
    _manifest(out, "plan", seed, config_doc, {"model": model_path},
              {"plan": "plan.json"})
    print(f"plan {result.skills} predicted robustness "
          f"{result.predicted_robustness:.9f}")
    return EXIT_OK


def cmd_mpc(args) -> int:
    doc = _load_config(args.config)
    try:
        model, model_path, section = _load_model_arg(doc, "mpc")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    formula_text = args.formula or section.get("formula")
    if not formula_text:
        print("error: no formula (use --formula or config mpc.formula)",
              file=sys.stderr)
        return EXIT_PARSE
    phi = stl.parse_formula(formula_text)
    world_cfg = _world_config(doc, args)
    planner_cfg = _planner_config(doc, args)
    seed = args.seed if args.seed is not None else planner_cfg.seed
    planner_cfg = replace(planner_cfg, seed=seed)
    res = mpc_run(world_cfg, model, phi, planner_cfg, seed)
    out = _out_dir(args, "mpc")
    world.write_trajectory_csv(
        res.states,
        [sid for sid in res.executed_skills for _ in range(res.layout.tau)],
        os.path.join(out, "trajectory.csv"),
    )
    config_doc = _resolved_doc(res.layout, planner_cfg)
    _write_json(
        {
            "formula": stl.format_formula(phi),
            "skills": [int(s) for s in res.executed_skills],
            "predicted_robustness": res.plans[0][1].predicted_robustness,
            "realized_robustness": res.realized_robustness,
            "ground_truth_robustness": res.gt_robustness,
            "z_trajectory": [[float(v) for v in row] for row in res.realized_z],
            "seed": seed,
            "config": config_doc,
            "trajectory_csv": "trajectory.csv",
        },
        os.path.join(out, "run.json"),
    )
    _manifest(out, "mpc", seed, config_doc, {"model": model_path},
              {"run": "run.json", "trajectory": "trajectory.csv"})
    print(f"executed {res.executed_skills}; realized {res.realized_robustness:.9f}, "
          f"ground truth {res.gt_robustness:.9f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = _load_config(args.config)
    try:
        model, model_path, section = _load_model_arg(doc, "bench")
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    world_cfg = _world_config(doc, args)
    planner_cfg = _planner_config(doc, args)
    seed = args.seed if args.seed is not None else planner_cfg.seed
    planner_cfg = replace(planner_cfg, seed=seed)
    families_arg = args.families or section.get("families", "all")
    if isinstance(families_arg, str):
        families = (list(bench.FAMILIES) if families_arg == "all"
                    else [f.strip() for f in families_arg.split(",") if f.strip()])
    else:
        families = list(families_arg)
    samples = args.samples if args.samples is not None else int(
        section.get("samples", 50))
    parallel = args.parallel if args.parallel is not None else int(
        section.get("parallel", 0))
    use_mpc = bool(section.get("mpc", True))
    try:
        records = bench.run_benchmark(families, samples, world_cfg, model,
                                      planner_cfg, seed, use_mpc=use_mpc,
                                      parallel=parallel)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    summaries = bench.summarize(records)
    out = _out_dir(args, "bench")
    bench.write_records_csv(records, os.path.join(out, "records.csv"))
    bench.write_summary_json(summaries, os.path.join(out, "summary.json"))
    bench.render_boxplot_svg(summaries, os.path.join(out, "boxplot.svg"))
    config_doc = _resolved_doc(world_cfg, planner_cfg, {
        "bench": {"families": families, "samples": samples, "mpc": use_mpc},
    })
    _manifest(out, "bench", seed, config_doc, {"model": model_path},
              {"records": "records.csv", "summary": "summary.json",
               "boxplot": "boxplot.svg"})
    for s in summaries:
        print(f"{s.family}: vfs q1 {s.vfs.q1:+.4f} success {s.vfs.success_rate:.2f} | "
              f"gt q1 {s.ground_truth.q1:+.4f} success "
              f"{s.ground_truth.success_rate:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vfsplan",
        description="Schedule goal-reaching skills to satisfy temporal logic "
                    "tasks by planning in value-function space.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, help="root random seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--tau", type=int, default=None,
                       help="environment steps per skill execution")
        p.add_argument("--horizon", type=int, default=None,
                       help="plan horizon in macro-steps")
        p.add_argument("--iterations", type=int, default=None,
                       help="tree search iterations")
        p.add_argument("--ucb-c", dest="ucb_c", type=float, default=None,
                       help="exploration constant")
        p.add_argument("--replan-interval", dest="replan_interval", type=int,
                       default=None, help="macro-steps between replans")
        p.add_argument("--ucb-variant", dest="ucb_variant",
                       choices=("paper", "uct"), default=None,
                       help="selection rule variant")
        p.add_argument("--samples", type=int, default=None,
                       help="benchmark samples per family")
        p.add_argument("--families", default=None,
                       help="comma-separated families or 'all'")
        p.add_argument("--parallel", type=int, default=None,
                       help="worker processes for benchmark samples")

    mon = sub.add_parser("monitor", help="robustness of a signal against a formula")
    mon.add_argument("--formula", required=True)
    mon.add_argument("--signal", required=True, help="signal CSV path")
    mon.add_argument("--t", type=int, default=0, help="evaluation time index")
    mon.set_defaults(func=cmd_monitor)

    for name, func in (("collect", cmd_collect), ("train", cmd_train),
                       ("plan", cmd_plan), ("mpc", cmd_mpc), ("bench", cmd_bench)):
        p = sub.add_parser(name)
        common(p)
        if name in ("plan", "mpc"):
            p.add_argument("--formula", default=None)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (stl.ParseError, stl.IntervalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (stl.SignalTooShortError, stl.UnknownChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIGNAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
