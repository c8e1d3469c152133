"""Command-line entry point: train, eval, verify and export.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage or validation
errors.  All commands are deterministic given their seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .controller import PdGains
from .rollout import eval_episodes
from .runconfig import ConfigError, parse_config, resolved_lines
from .stats import iqm, summarize
from .trajectory import DesiredTrajectory, write_trajectory_csv
from .trainer import (build_mp_stack, build_rollout_config, load_checkpoint,
                      make_env_factory, train)
from .verify import SUITES, run_suites


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mp-replan",
        description="Movement-primitive replanning policies on the desk-scale reacher.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training configuration")
    p_train.add_argument("config", help="path to a key=value run config")
    p_train.add_argument("--out", required=True, help="output run directory")
    p_train.add_argument("--seed", type=int, default=None, help="override run.seed")
    p_train.add_argument("--dry-run", action="store_true",
                         help="validate and print the resolved config, then exit")
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")
    p_train.add_argument("--no-projection", action="store_true",
                         help="disable the trust-region layer (PPO-clip baseline)")
    p_train.add_argument("--progress", action="store_true")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint or a directory of runs")
    p_eval.add_argument("target", help="checkpoint file, run directory, or directory of runs")
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--deterministic", action="store_true",
                        help="use the mean weights instead of sampling")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", default=None, help="write the summary JSON here")
    p_eval.add_argument("--save-traces", action="store_true",
                        help="write per-episode trace CSVs into the run directory")

    p_verify = sub.add_parser("verify", help="run the oracle suites")
    p_verify.add_argument("--suite", default="all", choices=(*SUITES, "all"))
    p_verify.add_argument("--grid-len", type=int, default=1000,
                          help="precomputation grid length for the mp_oracle suite")
    p_verify.add_argument("--seed", type=int, default=0)

    p_export = sub.add_parser("export", help="export run artifacts")
    p_export.add_argument("run_dir")
    p_export.add_argument("--what", required=True,
                          choices=("trajectories", "metrics", "ablation-grid"))
    p_export.add_argument("--out", default=None, help="output directory (default: run_dir/export)")
    return parser


def _find_runs(root: Path) -> list:
    if (root / "config.resolved").exists() and (root / "metrics.jsonl").exists():
        return [root]
    runs = [p for p in sorted(root.iterdir()) if p.is_dir()
            and (p / "config.resolved").exists() and (p / "metrics.jsonl").exists()]
    return runs


def _latest_checkpoint(run_dir: Path) -> Path:
    candidates = sorted((run_dir / "checkpoints").glob("ckpt_*.bin"))
    if not candidates:
        raise FileNotFoundError(f"no checkpoints under {run_dir}")
    return candidates[-1]


def _read_metrics(run_dir: Path) -> list:
    records = []
    with open(run_dir / "metrics.jsonl") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _eval_single(run_dir: Path, ckpt_path: Path, episodes: int, deterministic: bool,
                 seed: int, save_traces: bool) -> dict:
    state = load_checkpoint(ckpt_path)
    cfg = parse_config(run_dir / "config.resolved")
    policy = state["policy"]
    env_factory = make_env_factory(cfg)
    env = env_factory()
    mp = build_mp_stack(cfg, env)
    rcfg = build_rollout_config(cfg)
    gains = PdGains.uniform(cfg.kp, cfg.kd, env.num_dof)
    results = eval_episodes(policy, env_factory, mp, gains, rcfg, seed, episodes,
                            deterministic=deterministic, record_traces=save_traces)
    if save_traces:
        from .reacher import write_trace_csv
        trace_dir = run_dir / "traces"
        trace_dir.mkdir(exist_ok=True)
        for i, ep in enumerate(results):
            write_trace_csv(trace_dir / f"ep_{i:03d}.csv", ep.trace["t"],
                            ep.trace["q"], ep.trace["qd"], ep.trace["a"], ep.trace["r"])
    returns = [ep.total_reward for ep in results]
    return {
        "checkpoint": str(ckpt_path),
        "episodes": episodes,
        "deterministic": deterministic,
        "mean_return": float(np.mean(returns)),
        "returns": [float(r) for r in returns],
        "success_rate": float(np.mean([ep.success for ep in results])),
        "mean_final_distance": float(np.mean([ep.final_distance for ep in results])),
        "mean_energy": float(np.mean([ep.energy for ep in results])),
    }


def cmd_train(args) -> int:
    try:
        cfg = parse_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_projection:
        overrides["mode"] = "ppo_clip"
    if overrides:
        from dataclasses import replace
        try:
            cfg = replace(cfg, **overrides)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.dry_run:
        print("\n".join(resolved_lines(cfg)))
        return 0
    try:
        summary = train(cfg, args.out, resume=args.resume, progress=args.progress)
    except (RuntimeError, FloatingPointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"env_steps": summary["env_steps"],
                      "iterations": summary["iterations"],
                      "checkpoint": summary["checkpoint"]}))
    return 0


def cmd_eval(args) -> int:
    if args.episodes < 1:
        print("error: --episodes must be at least 1", file=sys.stderr)
        return 2
    target = Path(args.target)
    try:
        if target.is_file():
            run_dir = target.parent.parent
            summary = _eval_single(run_dir, target, args.episodes, args.deterministic,
                                   args.seed, args.save_traces)
        else:
            runs = _find_runs(target)
            if not runs:
                print(f"error: no runs found under {target}", file=sys.stderr)
                return 1
            per_run = []
            for run in runs:
                ckpt = _latest_checkpoint(run)
                per_run.append((run.name, _eval_single(run, ckpt, args.episodes,
                                                       args.deterministic, args.seed,
                                                       args.save_traces)))
            scores = np.array([rec["returns"] for _, rec in per_run])
            summary = {
                "runs": {name: rec for name, rec in per_run},
                "num_runs": len(per_run),
                "return_iqm": iqm(scores),
            }
            summary.update({f"return_{k}": v for k, v in summarize(
                scores, seed=args.seed).items() if k in ("ci_low", "ci_high")})
            summary["success_rate"] = float(np.mean(
                [rec["success_rate"] for _, rec in per_run]))
    except (FileNotFoundError, ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = json.dumps(summary, indent=2)
    print(payload)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    return 0


def cmd_verify(args) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    results = run_suites(names, grid_len=args.grid_len, seed=args.seed)
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_export(args) -> int:
    root = Path(args.run_dir)
    if not root.is_dir():
        print(f"error: run directory not found: {root}", file=sys.stderr)
        return 1
    runs = _find_runs(root)
    if not runs:
        print("no runs found", file=sys.stderr)
        return 1
    out_dir = Path(args.out) if args.out else root / "export"
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.what == "metrics":
        written = []
        for run in runs:
            records = _read_metrics(run)
            if not records:
                continue
            path = out_dir / f"metrics_{run.name}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(records[0].keys()))
                writer.writeheader()
                writer.writerows(records)
            written.append(path)
        if not written:
            print("error: no metrics found in any run", file=sys.stderr)
            return 1
        for path in written:
            print(str(path))
        return 0

    if args.what == "trajectories":
        missing = []
        written = []
        for run in runs:
            try:
                ckpt = _latest_checkpoint(run)
            except FileNotFoundError:
                missing.append(run.name)
                continue
            cfg = parse_config(run / "config.resolved")
            state = load_checkpoint(ckpt)
            policy = state["policy"]
            env = make_env_factory(cfg)()
            mp = build_mp_stack(cfg, env)
            rcfg = build_rollout_config(cfg)
            obs = env.reset(np.random.default_rng(0))
            s = env.context if rcfg.black_box else obs
            w = np.asarray(policy.dist(np.asarray(s, float)).mean, float)
            q, qd = env.joint_state()
            times = env.dt * np.arange(env.episode_len + 1)
            pos, vel = mp.desired(0.0, q, qd, w, times)
            traj = DesiredTrajectory(times=times, pos=pos, vel=vel)
            path = out_dir / f"trajectory_{run.name}.csv"
            write_trajectory_csv(traj, path)
            written.append(path)
        if missing:
            print("error: missing checkpoints for runs: " + ", ".join(missing),
                  file=sys.stderr)
            return 1
        for path in written:
            print(str(path))
        return 0

    # ablation-grid
    grid = {}
    for run in runs:
        cfg = parse_config(run / "config.resolved")
        records = _read_metrics(run)
        if not records:
            print(f"error: no metrics in run {run.name}", file=sys.stderr)
            return 1
        final_success = records[-1]["success_rate"]
        grid.setdefault((cfg.num_basis, cfg.horizon_k), []).append(final_success)
    path = out_dir / "ablation_grid.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["num_basis", "horizon_k", "median_success",
                         "std_success", "num_runs"])
        for (n, k), values in sorted(grid.items()):
            writer.writerow([n, k, float(np.median(values)),
                             float(np.std(values)), len(values)])
    print(str(path))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"train": cmd_train, "eval": cmd_eval,
                "verify": cmd_verify, "export": cmd_export}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
