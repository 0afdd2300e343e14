"""Command-line entry point for the full pipeline.

Subcommands: gen-data, train-fcn, predict, plan, train-irl, eval.
Exit codes: 0 success, 1 domain failure (no path, bad file, infeasible
config), 2 usage error. All outputs land under --out-dir.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import fcn
from .dataset import (
    DEFAULT_EXPERT_WEIGHTS,
    GenerationError,
    GeneratorConfig,
    build_dataset,
    load_split_rasters,
)
from .features import WeightVector, load_weights_csv, save_weights_csv
from .grid import FloatGrid, GridSpec, load_fgrid, save_fgrid, save_pgm
from .irl import IrlConfig, load_demonstrations, rlt_train, rtirl_train, write_irl_log_csv
from .metrics import evaluate_paths, write_report_csvs
from .planner import LinearFeatures, PlannerParams, PlanResult, PredictionGrid, plan
from .raster import draw_polyline_px, encode_input_raster
from .scenario import load_path_csv, load_scenario, save_path_csv


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socnav",
        description="Learning-from-demonstration path planning for social navigation.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--out-dir", default=".", help="directory for all outputs")
    parser.add_argument("--grid-size", type=_positive_int, default=None,
                        help="raster size in pixels (default: 64 for gen-data, "
                             "200 for predict)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic demonstration dataset")
    p.add_argument("--count", type=_positive_int, default=500)
    p.add_argument("--split", default=None,
                   help="train,validation,test counts (default 80%%/10%%/10%%)")
    p.add_argument("--people-max", type=int, default=5)
    p.add_argument("--obstacle-density", type=int, default=3)
    p.add_argument("--expert-weights", default=None, help="weights CSV (default built in)")
    p.add_argument("--expert-iterations", type=_positive_int, default=3000)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-fcn", help="train the path predictor on a dataset")
    p.add_argument("--data", required=True, help="dataset directory (from gen-data)")
    p.add_argument("--epochs", type=_positive_int, default=150)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=_positive_int, default=8)
    p.add_argument("--positive-weight", type=float, default=1.0,
                   help="loss weight of path pixels (1.0 = plain MSE)")
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.set_defaults(func=cmd_train_fcn)

    p = sub.add_parser("predict", help="predict a path raster for a scenario")
    p.add_argument("--model", required=True)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plan", help="plan a path with RRT*")
    p.add_argument("--scenario", required=True)
    p.add_argument("--cost", required=True,
                   help="'weights:FILE' (feature cost) or 'prediction:FILE' (FGRID cost)")
    p.add_argument("--bias", type=float, default=0.7,
                   help="fraction of samples drawn from the prediction")
    p.add_argument("--iterations", type=_positive_int, default=5000)
    p.add_argument("--gain", type=float, default=4.0, help="prediction cost gain")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("train-irl", help="learn feature weights from demonstrations")
    p.add_argument("--algo", choices=("rtirl", "rlt"), required=True)
    p.add_argument("--demos", required=True,
                   help="directory of *_scenario.json / *_path.csv pairs")
    p.add_argument("--iterations", type=_positive_int, default=30)
    p.add_argument("--lr", type=float, default=0.3)
    p.add_argument("--runs-per-demo", type=_positive_int, default=5)
    p.add_argument("--planner-iterations", type=_positive_int, default=800)
    p.add_argument("--margin-loss-weight", type=float, default=0.5)
    p.set_defaults(func=cmd_train_irl)

    p = sub.add_parser("eval", help="compare planned paths against expert paths")
    p.add_argument("--plans", required=True, help="directory of planned path CSVs")
    p.add_argument("--experts", required=True, help="directory of expert path CSVs")
    p.add_argument("--scenarios", required=True, help="directory of scenario JSONs")
    p.set_defaults(func=cmd_eval)
    return parser


def cmd_gen_data(args) -> int:
    count = args.count
    if args.split:
        parts = tuple(int(s) for s in args.split.split(","))
        if len(parts) != 3:
            raise ValueError(f"--split needs three comma-separated counts, got {args.split}")
        split = parts
    else:
        n_train = max(1, int(round(count * 0.8)))
        n_val = max(1, int(round(count * 0.1)))
        split = (n_train, n_val, count - n_train - n_val)
    weights = (load_weights_csv(args.expert_weights) if args.expert_weights
               else DEFAULT_EXPERT_WEIGHTS)
    config = GeneratorConfig(
        scenario_count=count,
        people_range=(0, args.people_max),
        obstacle_density=args.obstacle_density,
        expert_weights=weights,
        expert_planner_params=PlannerParams(max_iterations=args.expert_iterations),
        grid_size=args.grid_size or 64,
        split=split,
        rng_seed=args.seed,
    )
    entries = build_dataset(config, args.out_dir)
    print(f"wrote {len(entries)} items to {args.out_dir} (split {split})")
    return 0


def cmd_train_fcn(args) -> int:
    train_set = load_split_rasters(args.data, "train")
    val_set = load_split_rasters(args.data, "validation")
    if not train_set:
        raise ValueError(f"no training items in manifest under {args.data}")
    grid = train_set[0][0].shape[-1]
    model = fcn.build_reference_network(grid, seed=args.seed)
    report = fcn.train(
        model, train_set, epochs=args.epochs, learning_rate=args.lr,
        batch_size=args.batch, rng_seed=args.seed, val_dataset=val_set or None,
        positive_weight=args.positive_weight, optimizer=args.optimizer,
        log_every=max(1, args.epochs // 10),
    )
    model_file = os.path.join(args.out_dir, "model.fcn")
    fcn.save_model(model, model_file)
    report.write_csv(os.path.join(args.out_dir, "training_log.csv"))
    print(f"final train MSE {report.train_mse[-1]:.5f}; model at {model_file}")
    return 0


def cmd_predict(args) -> int:
    model = fcn.load_model(args.model)
    scenario = load_scenario(args.scenario)
    size = args.grid_size or 200
    prediction = fcn.predict(model, scenario, GridSpec.for_window(size, scenario.window_size))
    out_fgrid = os.path.join(args.out_dir, "prediction.fgrid")
    save_fgrid(prediction, out_fgrid)
    save_pgm(prediction, os.path.join(args.out_dir, "prediction.pgm"))
    print(f"wrote {out_fgrid}")
    return 0


def _overlay_pgm(scenario, result: PlanResult, grid: FloatGrid, filename) -> None:
    """Scenario backdrop with the tree in gray and the path in white."""
    spec = GridSpec(size=grid.width, resolution=grid.resolution)
    base = encode_input_raster(scenario, spec)
    values = base.values * 0.35
    frame = scenario.robot

    def to_px(pts):
        local = frame.to_local(pts)
        px = np.rint((local - np.array(base.origin)) / base.resolution).astype(np.int64)
        return np.clip(px, 0, spec.size - 1)

    if result.nodes.shape[0] > 1:
        px = to_px(result.nodes)
        for i in range(1, len(px)):
            parent = result.parents[i]
            if parent >= 0:
                draw_polyline_px(values, np.array([px[parent], px[i]]), 0.55)
    if result.path is not None:
        draw_polyline_px(values, to_px(result.path.points), 1.0)
    save_pgm(base.with_values(values.astype(np.float32)), filename)


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    kind, _, filename = args.cost.partition(":")
    if not filename:
        raise ValueError(f"--cost must be 'weights:FILE' or 'prediction:FILE', got {args.cost!r}")
    prediction = None
    if kind == "weights":
        provider = LinearFeatures(load_weights_csv(filename), scenario)
        overlay_grid = encode_input_raster(scenario, GridSpec.for_window(200, scenario.window_size))
    elif kind == "prediction":
        prediction = load_fgrid(filename)
        provider = PredictionGrid(prediction, scenario, gain=args.gain)
        overlay_grid = prediction
    else:
        raise ValueError(f"unknown cost kind {kind!r} (use weights: or prediction:)")
    params = PlannerParams(
        max_iterations=args.iterations,
        bias_fraction=args.bias if prediction is not None else 0.0,
        rng_seed=args.seed,
    )
    result = plan(scenario, provider, prediction=prediction, params=params)
    stats_file = os.path.join(args.out_dir, "plan_stats.csv")
    with open(stats_file, "w", encoding="ascii") as f:
        f.write("success,iterations,tree_size,final_cost,n_draws,n_biased_draws,bias_fallback\n")
        s = result.stats
        f.write(f"{int(s.success)},{s.iterations},{s.tree_size},{s.final_cost!r},"
                f"{s.n_draws},{s.n_biased_draws},{int(s.bias_fallback)}\n")
    _overlay_pgm(scenario, result, overlay_grid, os.path.join(args.out_dir, "plan_overlay.pgm"))
    if result.path is None:
        print("no path found", file=sys.stderr)
        return 1
    path_file = os.path.join(args.out_dir, "plan_path.csv")
    save_path_csv(result.path, path_file)
    print(f"path cost {result.stats.final_cost:.4f}, {len(result.path)} waypoints; "
          f"wrote {path_file}")
    return 0


def cmd_train_irl(args) -> int:
    demos = load_demonstrations(args.demos)
    config = IrlConfig(
        iterations=args.iterations,
        learning_rate=args.lr,
        planner_params=PlannerParams(max_iterations=args.planner_iterations),
        planner_runs_per_demo=args.runs_per_demo,
        margin_loss_weight=args.margin_loss_weight,
        rng_seed=args.seed,
    )
    trainer = rtirl_train if args.algo == "rtirl" else rlt_train
    weights, logs = trainer(demos, config)
    weights_file = os.path.join(args.out_dir, f"{args.algo}_weights.csv")
    save_weights_csv(weights, weights_file)
    write_irl_log_csv(logs, os.path.join(args.out_dir, f"{args.algo}_log.csv"))
    print(f"learned weights {np.round(weights.w, 4).tolist()} -> {weights_file}")
    return 0


def _sorted_files(directory, suffix):
    names = sorted(n for n in os.listdir(directory) if n.endswith(suffix))
    if not names:
        raise ValueError(f"no *{suffix} files in {directory}")
    return [os.path.join(directory, n) for n in names]


def cmd_eval(args) -> int:
    plan_files = _sorted_files(args.plans, ".csv")
    expert_files = _sorted_files(args.experts, ".csv")
    scenario_files = _sorted_files(args.scenarios, ".json")
    if not (len(plan_files) == len(expert_files) == len(scenario_files)):
        raise ValueError(
            f"count mismatch: {len(plan_files)} plans, {len(expert_files)} experts, "
            f"{len(scenario_files)} scenarios"
        )
    plans = [load_path_csv(f) for f in plan_files]
    experts = [load_path_csv(f) for f in expert_files]
    scenarios = [load_scenario(f) for f in scenario_files]
    names = [os.path.splitext(os.path.basename(f))[0] for f in plan_files]
    report = evaluate_paths(plans, experts, scenarios, names)
    written = write_report_csvs(report, args.out_dir, "eval")
    print(f"mu {report.mu_mean:.4f} +/- {report.mu_stderr:.4f} over "
          f"{report.mu_values.size} trajectories; wrote {len(written)} CSVs")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    os.makedirs(args.out_dir, exist_ok=True)
    try:
        return args.func(args)
    except (ValueError, OSError, GenerationError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
