"""Serialization of protocol results into CSV bundle directories.

One directory per protocol run: ``manifest.txt`` plus the CSV files listed
below.  Columns are fixed; the renderer and downstream tooling rely on
them.

  histograms.csv        event_kind, day, day_rel_step, probability
  mean_activation.csv   t, day, day_rel_step, daylight, mean_activation,
                        exit_count
  periodogram_mean.csv  frequency, period, power
  periodogram_units.csv neuron, frequency, power
  spectrogram_*.csv     episode, frequency, power
  delay_pairs.csv       episode, t, value, delayed_value
  amplitude.csv         episode, series, amplitude
  prc.csv               pulse_day_rel_step, series, shift
  prc_null.csv          series, shift, undefined_runs
  prc_excluded.csv      pulse_day_rel_step, series, undefined_runs
  reentrainment.csv     day, median_exit, baseline_median, abs_deviation
  training_curve.csv    episode, mean_reward, std_reward
  trace_<seed>.csv      run_id, t, day_rel_step, daylight, agent_row,
                        agent_col, food_row, food_col, action, reward,
                        event_flags
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import gridworld
from .analysis import detect_events
from .csvio import seeds_field, write_csv, write_manifest
from .daylight import DaylightSchedule, day_rel_step
from .rollout import ActivationTrace


def _histogram_rows(histograms: dict[str, np.ndarray]):
    rows = []
    for kind in gridworld.EVENT_KINDS:
        hist = histograms[kind]
        for day in range(hist.shape[0]):
            for step in range(hist.shape[1]):
                rows.append((kind, day + 1, step + 1, float(hist[day, step])))
    return rows


def _activation_rows(schedule_like, mean_activation, daylight, exit_counts):
    rows = []
    for i, value in enumerate(mean_activation):
        t = i + 1
        day, rel = schedule_like(t)
        rows.append((t, day, rel, int(daylight[i]), float(value),
                     int(exit_counts[i])))
    return rows


def write_behavior_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "behavior", "schedule": result.schedule_desc,
        "n_runs": result.n_runs,
        "seeds": seeds_field(range(result.seed_base,
                                   result.seed_base + result.n_runs)),
        "n_days": result.n_days, "cycle_len": result.cycle_len,
        **(extra or {})})
    meta = {"schedule": result.schedule_desc}
    write_csv(out_dir / "histograms.csv",
              ("event_kind", "day", "day_rel_step", "probability"),
              _histogram_rows(result.histograms), meta)


def write_endogeneity_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "endogeneity", "schedule": result.schedule_desc,
        "clamp_value": result.clamp_value, "n_runs": result.n_runs,
        "seeds": seeds_field(range(result.seed_base,
                                   result.seed_base + result.n_runs)),
        "horizon": result.horizon, "cycle_len": result.cycle_len,
        "dominant_period": result.dominant_period,
        "peak_ratio": result.peak_ratio, **(extra or {})})
    meta = {"schedule": result.schedule_desc}
    cycle = result.cycle_len

    def day_rel(t):
        return (t - 1) // cycle + 1, (t - 1) % cycle + 1

    write_csv(out_dir / "mean_activation.csv",
              ("t", "day", "day_rel_step", "daylight", "mean_activation",
               "exit_count"),
              _activation_rows(day_rel, result.mean_activation,
                               result.daylight, result.exit_counts), meta)
    write_csv(out_dir / "histograms.csv",
              ("event_kind", "day", "day_rel_step", "probability"),
              _histogram_rows(result.histograms), meta)
    write_csv(out_dir / "periodogram_mean.csv",
              ("frequency", "period", "power"),
              [(float(f), float(1.0 / f) if f > 0 else float("inf"), float(p))
               for f, p in zip(result.freqs, result.mean_power)], meta)
    write_csv(out_dir / "periodogram_units.csv",
              ("neuron", "frequency", "power"),
              [(u, float(f), float(p))
               for u in range(result.unit_power.shape[0])
               for f, p in zip(result.freqs, result.unit_power[u])], meta)


def write_bifurcation_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "bifurcation", "clamp_value": result.clamp_value,
        "neuron_id": result.neuron_id, "seed": result.seed,
        "delay": result.delay,
        "episodes": seeds_field(result.episodes),
        "missing_episodes": seeds_field(result.missing_episodes),
        **(extra or {})})
    pair_rows = []
    for episode in result.episodes:
        pairs = result.delay_pairs[episode]
        for i, (value, delayed) in enumerate(pairs):
            pair_rows.append((episode, i + 1, float(value), float(delayed)))
    write_csv(out_dir / "delay_pairs.csv",
              ("episode", "t", "value", "delayed_value"), pair_rows)
    amp_rows = []
    for episode, amp_neuron, amp_mean in result.amplitudes:
        amp_rows.append((episode, f"neuron_{result.neuron_id}", amp_neuron))
        amp_rows.append((episode, "mean", amp_mean))
    write_csv(out_dir / "amplitude.csv", ("episode", "series", "amplitude"),
              amp_rows)


def write_spectrogram_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "spectrogram", "clamp_value": result.clamp_value,
        "neuron_id": result.neuron_id, "seed": result.seed,
        "episodes": seeds_field(result.episodes),
        "missing_episodes": seeds_field(result.missing_episodes),
        **(extra or {})})

    def rows(matrix):
        out = []
        for row, episode in zip(matrix, result.episodes):
            for f, p in zip(result.freqs, row):
                out.append((episode, float(f), float(p)))
        return out

    write_csv(out_dir / "spectrogram_neuron.csv",
              ("episode", "frequency", "power"), rows(result.neuron_rows))
    write_csv(out_dir / "spectrogram_mean.csv",
              ("episode", "frequency", "power"), rows(result.mean_rows))


def write_jetlag_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "jetlag", "variant": result.variant,
        "schedule": result.schedule_desc, "n_runs": result.n_runs,
        "seeds": seeds_field(range(result.seed_base,
                                   result.seed_base + result.n_runs)),
        "horizon": result.horizon, "n_days": result.n_days,
        "dominant_period": result.dominant_period, **(extra or {})})
    meta = {"schedule": result.schedule_desc, "variant": result.variant}
    windows = result.day_windows

    def day_rel(t):
        for day, (start, d_len, n_len) in enumerate(windows, start=1):
            if t < start + d_len + n_len:
                return day, t - start + 1
        return len(windows), t - windows[-1][0] + 1

    write_csv(out_dir / "mean_activation.csv",
              ("t", "day", "day_rel_step", "daylight", "mean_activation",
               "exit_count"),
              _activation_rows(day_rel, result.mean_activation,
                               result.daylight, result.exit_counts), meta)
    write_csv(out_dir / "histograms.csv",
              ("event_kind", "day", "day_rel_step", "probability"),
              _histogram_rows(result.histograms), meta)
    write_csv(out_dir / "reentrainment.csv",
              ("day", "median_exit", "baseline_median", "abs_deviation"),
              [(d, m, bm, dev) for (d, m), (_, bm), (_, dev) in
               zip(result.exit_medians, result.baseline_medians,
                   result.reentrainment)], meta)
    write_csv(out_dir / "activation_periodogram.csv",
              ("frequency", "period", "power"),
              [(float(f), float(1.0 / f) if f > 0 else float("inf"), float(p))
               for f, p in zip(result.freqs, result.mean_power)], meta)


def write_prc_bundle(result, out_dir: Path, extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "prc", "mode": result.mode, "n_runs": result.n_runs,
        "seeds": seeds_field(range(result.seed_base,
                                   result.seed_base + result.n_runs)),
        "width": result.width, "n_rhythmic": result.n_rhythmic,
        **(extra or {})})
    meta = {"mode": result.mode}
    rows = []
    excluded = []
    for i, rel in enumerate(result.pulse_day_rel):
        for u in range(result.width):
            rows.append((int(rel), f"neuron_{u}", float(result.per_neuron[i, u])))
            excluded.append((int(rel), f"neuron_{u}",
                             int(result.undefined_counts[i, u])))
        rows.append((int(rel), "mean", float(result.mean_curve[i])))
    write_csv(out_dir / "prc.csv",
              ("pulse_day_rel_step", "series", "shift"), rows, meta)
    write_csv(out_dir / "prc_excluded.csv",
              ("pulse_day_rel_step", "series", "undefined_runs"), excluded, meta)
    null_rows = [(f"neuron_{u}", float(result.null_per_neuron[u]),
                  int(result.null_undefined[u])) for u in range(result.width)]
    write_csv(out_dir / "prc_null.csv",
              ("series", "shift", "undefined_runs"), null_rows, meta)


def write_training_curve_bundle(result, out_dir: Path,
                                extra: dict | None = None):
    write_manifest(out_dir, {
        "protocol": "training_curve", "window": result.window,
        "n_seeds": result.n_seeds, **(extra or {})})
    write_csv(out_dir / "training_curve.csv",
              ("episode", "mean_reward", "std_reward"),
              [(int(e), float(m), float(s)) for e, m, s in
               zip(result.episodes, result.mean, result.std)])


def write_trace_csv(trace: ActivationTrace, schedule: DaylightSchedule,
                    path: Path):
    """Position/reward/event trace of one run, one row per step."""
    events = detect_events(trace.positions, schedule)
    flags: dict[int, list[str]] = {}
    for ev in events:
        flags.setdefault(ev.t, []).append(ev.kind)
    rows = []
    for i in range(trace.horizon):
        t = i + 1
        _, rel = day_rel_step(schedule, t)
        rows.append((trace.run_id, t, rel, int(trace.daylight[i]),
                     int(trace.positions[i, 0]), int(trace.positions[i, 1]),
                     int(trace.food[i, 0]), int(trace.food[i, 1]),
                     gridworld.ACTIONS[int(trace.actions[i])],
                     float(trace.rewards[i]),
                     ";".join(flags.get(t, []))))
    write_csv(path, ("run_id", "t", "day_rel_step", "daylight", "agent_row",
                     "agent_col", "food_row", "food_col", "action", "reward",
                     "event_flags"),
              rows, {"schedule": trace.schedule_desc, "seed": trace.seed})
