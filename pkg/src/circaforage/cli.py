"""Command-line entry points.

    circaforage train --profile desk --seed 1 --out runs/desk1
    circaforage eval --checkpoint C --runs 3 --out traces/
    circaforage behavior --checkpoint C --runs 1000 --out out/behavior
    circaforage endogeneity --checkpoint C --clamp day --runs 1000 --out D
    circaforage bifurcation --checkpoint runs/desk1/checkpoints --out D
    circaforage spectrogram --checkpoint runs/desk1/checkpoints --stride 100 --out D
    circaforage jetlag --checkpoint C --variant extend_day2_daytime_10 --out D
    circaforage prc --checkpoint C --clamp night --runs 200 --out D
    circaforage training-curve runs/*/training_log.csv --out D
    circaforage gradcheck

Every protocol command writes a CSV bundle plus manifest into --out and
refuses to overwrite a non-empty directory unless --force is given.  Exit
code 0 on success; failures print one diagnostic line and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bundles, protocols
from .checkpointio import (Checkpoint, checkpoint_filename, load_checkpoint,
                           load_checkpoint_series, save_checkpoint)
from .config import build_configs, parse_config_file
from .csvio import ensure_outdir, read_csv, write_csv
from .daylight import make_periodic
from .gradchecks import run_gradcheck_suite
from .rollout import run_batch
from .training import checkpoint_episodes, train

CLAMP_VALUES = {"day": 1, "night": 0}
PRC_BY_CLAMP = {"night": "light_pulse_on_night", "day": "dark_pulse_on_day"}


def _add_common(parser, *, checkpoint=False, out=True):
    if checkpoint:
        parser.add_argument("--checkpoint", required=True,
                            help="checkpoint file (or directory for scans)")
    if out:
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--force", action="store_true",
                            help="allow writing into a non-empty directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--runs", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for independent protocol items")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circaforage",
        description="foraging grid world, recurrent Q-learning and rhythm analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from scratch")
    p.add_argument("--profile", choices=("paper", "desk"), default="desk")
    p.add_argument("--config", help="key=value config file overriding the profile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--progress-every", type=int, default=100)

    p = sub.add_parser("eval", help="greedy test episodes from a checkpoint")
    _add_common(p, checkpoint=True)
    p.add_argument("--horizon", type=int, default=320)

    p = sub.add_parser("behavior", help="event-timing histograms (8 days)")
    _add_common(p, checkpoint=True)
    p.add_argument("--policy", choices=("greedy", "oracle"), default="greedy")

    p = sub.add_parser("endogeneity", help="clamped-signal rhythm test")
    _add_common(p, checkpoint=True)
    p.add_argument("--clamp", choices=("day", "night"), required=True)

    p = sub.add_parser("bifurcation", help="delay plots over early checkpoints")
    _add_common(p, checkpoint=True)
    p.add_argument("--clamp", choices=("day", "night"), default="day")
    p.add_argument("--neuron", type=int, default=0)
    p.add_argument("--from-episode", type=int, default=33)
    p.add_argument("--to-episode", type=int, default=132)

    p = sub.add_parser("spectrogram", help="per-checkpoint power spectra")
    _add_common(p, checkpoint=True)
    p.add_argument("--clamp", choices=("day", "night"), default="day")
    p.add_argument("--neuron", type=int, default=0)
    p.add_argument("--stride", type=int, default=1,
                   help="1 = dense early window; N = every Nth episode")
    p.add_argument("--from-episode", type=int, default=33)
    p.add_argument("--to-episode", type=int, default=132)

    p = sub.add_parser("jetlag", help="phase-shift re-entrainment test")
    _add_common(p, checkpoint=True)
    p.add_argument("--variant", choices=protocols.JETLAG_VARIANTS,
                   required=True)

    p = sub.add_parser("prc", help="phase response curve")
    _add_common(p, checkpoint=True)
    p.add_argument("--clamp", choices=("day", "night"), required=True,
                   help="night = light pulses, day = dark pulses")

    p = sub.add_parser("training-curve", help="smoothed eval-reward curve")
    p.add_argument("logs", nargs="+", help="training_log.csv files")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.add_argument("--window", type=int, default=11)

    sub.add_parser("gradcheck", help="finite-difference gradient verification")
    return parser


def _load_params(path: str):
    ckpt = load_checkpoint(path)
    online, _ = ckpt.to_network_params()
    return ckpt, online


def _runs(args, default):
    return default if args.runs is None else args.runs


def cmd_train(args) -> int:
    overrides = parse_config_file(args.config) if args.config else {}
    net, trainer = build_configs(args.profile, overrides, seed=args.seed)
    out = ensure_outdir(args.out, args.force)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    trainer_snapshot = trainer.to_dict()

    def save(episode, online, target, rng_states):
        ckpt = Checkpoint.from_params(net, trainer_snapshot, episode,
                                      online, target, rng_states)
        save_checkpoint(ckpt, ckpt_dir / checkpoint_filename(episode))

    online, target, log = train(net, trainer, checkpoint_callback=save,
                                progress_every=args.progress_every)
    header, rows = log.csv_rows()
    write_csv(out / "training_log.csv", header, rows,
              {"profile": args.profile, "seed": trainer.seed})
    print(f"trained {trainer.episodes} episodes; "
          f"{len(checkpoint_episodes(trainer))} checkpoints in {ckpt_dir}")
    return 0


def cmd_eval(args) -> int:
    ckpt, params = _load_params(args.checkpoint)
    out = ensure_outdir(args.out, args.force)
    n_runs = _runs(args, 1)
    schedule = make_periodic()
    seeds = list(range(args.seed, args.seed + n_runs))
    traces = run_batch(params, schedule, seeds, args.horizon)
    total = 0.0
    for trace in traces:
        bundles.write_trace_csv(trace, schedule, out / f"trace_{trace.seed}.csv")
        total += float(trace.rewards.sum())
    print(f"mean_reward={total / n_runs:.3f} over {n_runs} runs "
          f"(episode {ckpt.episode})")
    return 0


def cmd_behavior(args) -> int:
    out = ensure_outdir(args.out, args.force)
    if args.policy == "oracle":
        ckpt_hash, params = "oracle", None
    else:
        ckpt, params = _load_params(args.checkpoint)
        ckpt_hash = ckpt.content_hash
    result = protocols.behavior_experiment(
        params, n_runs=_runs(args, 1000), seed_base=args.seed,
        policy=args.policy)
    bundles.write_behavior_bundle(result, out, {"checkpoint_hash": ckpt_hash})
    print(f"behavior bundle written to {out}")
    return 0


def cmd_endogeneity(args) -> int:
    ckpt, params = _load_params(args.checkpoint)
    out = ensure_outdir(args.out, args.force)
    result = protocols.endogeneity_experiment(
        params, CLAMP_VALUES[args.clamp], n_runs=_runs(args, 1000),
        seed_base=args.seed)
    bundles.write_endogeneity_bundle(result, out,
                                     {"checkpoint_hash": ckpt.content_hash})
    print(f"endogeneity bundle written to {out} "
          f"(dominant period {result.dominant_period:.1f} steps, "
          f"peak ratio {result.peak_ratio:.1f})")
    return 0


def _scan_checkpoints(args, episodes):
    directory = Path(args.checkpoint)
    found, missing = load_checkpoint_series(directory, episodes)
    loaded = [(ep, ckpt.to_network_params()[0]) for ep, ckpt in found]
    return loaded, missing


def cmd_bifurcation(args) -> int:
    out = ensure_outdir(args.out, args.force)
    episodes = range(args.from_episode, args.to_episode + 1)
    loaded, missing = _scan_checkpoints(args, episodes)
    if not loaded:
        raise FileNotFoundError(
            f"no checkpoints for episodes {args.from_episode}.."
            f"{args.to_episode} in {args.checkpoint}")
    result = protocols.bifurcation_scan(
        loaded, neuron_id=args.neuron, clamp_value=CLAMP_VALUES[args.clamp],
        seed=args.seed, missing_episodes=missing, jobs=args.jobs)
    bundles.write_bifurcation_bundle(result, out,
                                     {"checkpoint_dir": str(args.checkpoint)})
    print(f"bifurcation bundle written to {out} "
          f"({len(loaded)} checkpoints, {len(missing)} missing)")
    return 0


def cmd_spectrogram(args) -> int:
    out = ensure_outdir(args.out, args.force)
    if args.stride <= 1:
        episodes = list(range(args.from_episode, args.to_episode + 1))
    else:
        present = sorted(
            int(p.stem.split("_ep")[1])
            for p in Path(args.checkpoint).glob("checkpoint_ep*.ckpt"))
        episodes = [e for e in present if e % args.stride == 0]
    loaded, missing = _scan_checkpoints(args, episodes)
    if not loaded:
        raise FileNotFoundError(f"no checkpoints found in {args.checkpoint}")
    result = protocols.spectrogram_scan(
        loaded, clamp_value=CLAMP_VALUES[args.clamp], neuron_id=args.neuron,
        seed=args.seed, missing_episodes=missing, jobs=args.jobs)
    bundles.write_spectrogram_bundle(result, out,
                                     {"checkpoint_dir": str(args.checkpoint),
                                      "stride": args.stride})
    print(f"spectrogram bundle written to {out} ({len(loaded)} checkpoints)")
    return 0


def cmd_jetlag(args) -> int:
    ckpt, params = _load_params(args.checkpoint)
    out = ensure_outdir(args.out, args.force)
    result = protocols.jetlag_experiment(
        params, args.variant, n_runs=_runs(args, 1000), seed_base=args.seed)
    bundles.write_jetlag_bundle(result, out,
                                {"checkpoint_hash": ckpt.content_hash})
    worst = max((dev for _, dev in result.reentrainment[5:]
                 if not np.isnan(dev)), default=float("nan"))
    print(f"jetlag bundle written to {out} "
          f"(day>=6 max |median deviation| = {worst:.1f} steps)")
    return 0


def cmd_prc(args) -> int:
    ckpt, params = _load_params(args.checkpoint)
    out = ensure_outdir(args.out, args.force)
    result = protocols.prc_experiment(
        params, PRC_BY_CLAMP[args.clamp], n_runs=_runs(args, 200),
        seed_base=args.seed, jobs=args.jobs)
    bundles.write_prc_bundle(result, out,
                             {"checkpoint_hash": ckpt.content_hash})
    print(f"prc bundle written to {out} "
          f"({result.n_rhythmic}/{result.width} rhythmic units)")
    return 0


def cmd_training_curve(args) -> int:
    out = ensure_outdir(args.out, args.force)
    series = []
    for path in args.logs:
        _, columns, rows = read_csv(path)
        episode_col = columns.index("episode")
        reward_col = columns.index("eval_reward")
        episodes = np.array([int(r[episode_col]) for r in rows])
        rewards = np.array([float(r[reward_col]) for r in rows])
        series.append((episodes, rewards))
    result = protocols.training_curve(series, window=args.window)
    bundles.write_training_curve_bundle(result, out, {"logs": ";".join(args.logs)})
    print(f"training curve written to {out} ({result.n_seeds} seeds)")
    return 0


def cmd_gradcheck(args) -> int:
    report = run_gradcheck_suite()
    for line in report.lines():
        print(line)
    return 0 if report.ok else 1


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "behavior": cmd_behavior,
    "endogeneity": cmd_endogeneity,
    "bifurcation": cmd_bifurcation,
    "spectrogram": cmd_spectrogram,
    "jetlag": cmd_jetlag,
    "prc": cmd_prc,
    "training-curve": cmd_training_curve,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
