"""Scripted experiment drivers.

Each protocol is a pure function of (parameters, protocol settings, seeds):
it rolls out test episodes, feeds the traces through the analysis
primitives, and returns a result object that the CLI serializes into a CSV
bundle.  Seeds are ``seed_base + run_index`` throughout, so re-running a
protocol with identical inputs reproduces its outputs exactly.

Protocol summary:

- behavior: event-timing histograms over 8 days of the standard schedule.
- endogeneity: clamp the daylight signal to a constant after four days and
  measure whether the mean recurrent activation keeps oscillating.
- bifurcation / spectrogram scans: per-checkpoint delay embeddings,
  amplitudes and periodograms across training.
- jetlag: one-time phase shifts (or permanent period changes) of the
  schedule; per-day food-area-exit medians against the unshifted baseline.
- prc: one-step signal inversions at every step of day 5 under clamped
  light; phase shift of each unit's day-6 window against seed-matched
  no-pulse controls.
- training_curve: smoothed evaluation-reward curves across seeds.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import (amplitude, central_moving_average, delay_embedding,
                       detect_events, dominant_peak, estimate_phase_shifts,
                       event_histograms, periodogram)
from .daylight import (DaylightSchedule, make_clamped, make_periodic,
                       make_phase_shift, make_pulse_inverted)
from .qnet import NetworkParams
from .rollout import ActivationTrace, run_batch, run_oracle_batch

JETLAG_VARIANTS = ("baseline", "extend_day2_daytime_10", "extend_day2_night_10",
                   "reverse", "period_23_23", "ratio_17_23", "ratio_23_17")

PRC_MODES = ("light_pulse_on_night", "dark_pulse_on_day")

CLAMP_START = 161          # first step after four standard days
MEASURE_DAY6 = (200, 240)  # 0-based slice of steps 201..240
ANALYSIS_WINDOW = (160, 320)  # 0-based slice of steps 161..320


def _missing_text(missing: list[int]) -> str:
    if len(missing) <= 20:
        return f"missing checkpoints for episodes {missing}"
    head = ", ".join(str(e) for e in missing[:10])
    return (f"missing checkpoints for {len(missing)} episodes "
            f"(first: {head}, ...)")


def variant_schedule(variant: str, day_len: int = 20,
                     night_len: int = 20) -> DaylightSchedule:
    base = make_periodic(day_len, night_len)
    if variant == "baseline":
        return base
    if variant == "extend_day2_daytime_10":
        return make_phase_shift(base, 2, "extend_daytime", 10)
    if variant == "extend_day2_night_10":
        return make_phase_shift(base, 2, "extend_night", 10)
    if variant == "reverse":
        return make_phase_shift(base, 2, "reverse")
    if variant == "period_23_23":
        return make_periodic(23, 23)
    if variant == "ratio_17_23":
        return make_periodic(17, 23)
    if variant == "ratio_23_17":
        return make_periodic(23, 17)
    raise ValueError(f"unknown jetlag variant {variant!r}; "
                     f"expected one of {JETLAG_VARIANTS}")


def horizon_for_days(schedule: DaylightSchedule, n_days: int) -> int:
    start, day_len, night_len = schedule.day_windows(n_days)[-1]
    return start + day_len + night_len - 1


def _chunked_seeds(seed_base: int, n_runs: int, chunk: int = 250):
    seeds = list(range(seed_base, seed_base + n_runs))
    for i in range(0, n_runs, chunk):
        yield seeds[i:i + chunk]


def _parallel_map(fn, items, jobs: int):
    """Run independent protocol items, at most ``jobs`` at a time; output
    order always follows input order, so results are thread-count invariant."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _collect_runs(params, schedule, seed_base, n_runs, horizon,
                  keep_first_activations: bool = False, policy: str = "greedy"):
    """Stream runs in chunks; accumulate events, exit counts and the
    run-averaged unit-mean activation."""
    events_per_run = []
    exit_counts = np.zeros(horizon)
    mean_act_sum = np.zeros(horizon)
    first_activations = None
    for seeds in _chunked_seeds(seed_base, n_runs):
        if policy == "oracle":
            traces = run_oracle_batch(schedule, seeds, horizon)
        else:
            traces = run_batch(params, schedule, seeds, horizon)
        for trace in traces:
            events = detect_events(trace.positions, schedule)
            events_per_run.append(events)
            for ev in events:
                if ev.kind == "left_food_area":
                    exit_counts[ev.t - 1] += 1
            if trace.activations.shape[1]:
                mean_act_sum += trace.activations.mean(axis=1)
            if first_activations is None and keep_first_activations:
                first_activations = trace.activations.copy()
    mean_activation = mean_act_sum / max(n_runs, 1)
    return events_per_run, exit_counts, mean_activation, first_activations


@dataclass
class BehaviorResult:
    schedule_desc: str
    n_runs: int
    seed_base: int
    n_days: int
    cycle_len: int
    histograms: dict[str, np.ndarray]


def behavior_experiment(params: NetworkParams | None, n_runs: int = 1000,
                        seed_base: int = 0, n_days: int = 8,
                        day_len: int = 20, night_len: int = 20,
                        policy: str = "greedy") -> BehaviorResult:
    """Event-timing histograms over the standard periodic schedule."""
    schedule = make_periodic(day_len, night_len)
    horizon = horizon_for_days(schedule, n_days)
    events_per_run, _, _, _ = _collect_runs(
        params, schedule, seed_base, n_runs, horizon, policy=policy)
    cycle = day_len + night_len
    hists = event_histograms(events_per_run, cycle, n_days)
    return BehaviorResult(schedule.describe(), n_runs, seed_base, n_days,
                          cycle, hists)


@dataclass
class EndogeneityResult:
    schedule_desc: str
    clamp_value: int
    n_runs: int
    seed_base: int
    horizon: int
    n_days: int
    cycle_len: int
    mean_activation: np.ndarray          # (horizon,)
    daylight: np.ndarray                 # (horizon,)
    exit_counts: np.ndarray              # (horizon,)
    histograms: dict[str, np.ndarray]
    freqs: np.ndarray
    mean_power: np.ndarray               # periodogram of mean activation
    unit_power: np.ndarray               # (width, n_freq), single run
    dominant_period: float
    peak_ratio: float


def endogeneity_experiment(params: NetworkParams, clamp_value: int,
                           n_runs: int = 1000, seed_base: int = 0,
                           horizon: int = 320, day_len: int = 20,
                           night_len: int = 20,
                           clamp_start: int = CLAMP_START) -> EndogeneityResult:
    """Clamped-daylight test runs probing whether the rhythm is endogenous."""
    base = make_periodic(day_len, night_len)
    schedule = make_clamped(base, clamp_start, clamp_value)
    events_per_run, exit_counts, mean_activation, first_acts = _collect_runs(
        params, schedule, seed_base, n_runs, horizon,
        keep_first_activations=True)
    cycle = day_len + night_len
    n_days = horizon // cycle
    hists = event_histograms(events_per_run, cycle, n_days)
    window = slice(*ANALYSIS_WINDOW)
    freqs, mean_power = periodogram(mean_activation[window])
    period, ratio = dominant_peak(freqs, mean_power)
    unit_power = np.stack([periodogram(first_acts[window, u])[1]
                           for u in range(first_acts.shape[1])])
    daylight = np.array([schedule.signal_at(t) for t in range(1, horizon + 1)])
    return EndogeneityResult(schedule.describe(), clamp_value, n_runs,
                             seed_base, horizon, n_days, cycle,
                             mean_activation, daylight, exit_counts, hists,
                             freqs, mean_power, unit_power, period, ratio)


@dataclass
class BifurcationResult:
    clamp_value: int
    neuron_id: int
    seed: int
    episodes: list[int]
    missing_episodes: list[int]
    delay: int
    delay_pairs: dict[int, np.ndarray]   # episode -> (n, 2)
    amplitudes: list[tuple[int, float, float]]  # episode, neuron amp, mean amp


def bifurcation_scan(checkpoints: list[tuple[int, NetworkParams]],
                     neuron_id: int = 0, clamp_value: int = 1, seed: int = 0,
                     horizon: int = 320, delay: int = 10,
                     missing_episodes: list[int] | None = None,
                     day_len: int = 20, night_len: int = 20,
                     jobs: int = 1) -> BifurcationResult:
    """One clamped test run per checkpoint: delay-embedding pairs and the
    oscillation amplitude of a single unit and of the layer mean."""
    schedule = make_clamped(make_periodic(day_len, night_len), CLAMP_START,
                            clamp_value)
    window = ANALYSIS_WINDOW

    def scan_one(entry):
        episode, params = entry
        trace = run_batch(params, schedule, [seed], horizon)[0]
        unit = trace.activations[:, neuron_id]
        mean_act = trace.activations.mean(axis=1)
        segment = unit[window[0]:window[1]]
        return (episode, delay_embedding(segment, delay),
                amplitude(unit, window), amplitude(mean_act, window))

    scanned = _parallel_map(scan_one, checkpoints, jobs)
    episodes = [episode for episode, _, _, _ in scanned]
    pairs = {episode: p for episode, p, _, _ in scanned}
    amps = [(episode, a_unit, a_mean)
            for episode, _, a_unit, a_mean in scanned]
    if missing_episodes:
        warnings.warn(_missing_text(missing_episodes))
    return BifurcationResult(clamp_value, neuron_id, seed, episodes,
                             missing_episodes or [], delay, pairs, amps)


@dataclass
class SpectrogramResult:
    clamp_value: int
    neuron_id: int
    seed: int
    episodes: list[int]
    missing_episodes: list[int]
    freqs: np.ndarray
    neuron_rows: np.ndarray   # (n_ckpt, n_freq)
    mean_rows: np.ndarray     # (n_ckpt, n_freq) power averaged over units


def spectrogram_scan(checkpoints: list[tuple[int, NetworkParams]],
                     clamp_value: int = 1, neuron_id: int = 0, seed: int = 0,
                     horizon: int = 320,
                     missing_episodes: list[int] | None = None,
                     day_len: int = 20, night_len: int = 20,
                     jobs: int = 1) -> SpectrogramResult:
    """Per-checkpoint periodograms of one unit and of the unit average,
    one test simulation per checkpoint."""
    schedule = make_clamped(make_periodic(day_len, night_len), CLAMP_START,
                            clamp_value)
    window = slice(*ANALYSIS_WINDOW)

    def scan_one(entry):
        episode, params = entry
        trace = run_batch(params, schedule, [seed], horizon)[0]
        acts = trace.activations[window]
        freqs, unit_power = periodogram(acts[:, neuron_id])
        power = np.stack([periodogram(acts[:, u])[1]
                          for u in range(acts.shape[1])])
        return episode, freqs, unit_power, power.mean(axis=0)

    scanned = _parallel_map(scan_one, checkpoints, jobs)
    episodes = [episode for episode, _, _, _ in scanned]
    freqs = scanned[0][1]
    neuron_rows = np.stack([row for _, _, row, _ in scanned])
    mean_rows = np.stack([row for _, _, _, row in scanned])
    if missing_episodes:
        warnings.warn(_missing_text(missing_episodes))
    return SpectrogramResult(clamp_value, neuron_id, seed, episodes,
                             missing_episodes or [], freqs,
                             neuron_rows, mean_rows)


@dataclass
class JetlagResult:
    variant: str
    schedule_desc: str
    n_runs: int
    seed_base: int
    horizon: int
    n_days: int
    max_day_len: int
    day_windows: list[tuple[int, int, int]]
    mean_activation: np.ndarray
    daylight: np.ndarray
    exit_counts: np.ndarray
    histograms: dict[str, np.ndarray]
    exit_medians: list[tuple[int, float]]          # (day, median day-rel exit)
    baseline_medians: list[tuple[int, float]]
    reentrainment: list[tuple[int, float]]         # (day, |median - baseline|)
    freqs: np.ndarray
    mean_power: np.ndarray
    dominant_period: float


def _exit_medians(events_per_run, n_days):
    by_day = {d: [] for d in range(1, n_days + 1)}
    for events in events_per_run:
        for ev in events:
            if ev.kind == "left_food_area" and ev.day <= n_days:
                by_day[ev.day].append(ev.day_rel)
    return [(d, float(np.median(vals)) if vals else float("nan"))
            for d, vals in by_day.items()]


def jetlag_experiment(params: NetworkParams, variant: str, n_runs: int = 1000,
                      seed_base: int = 0, n_days: int = 8, day_len: int = 20,
                      night_len: int = 20) -> JetlagResult:
    """Phase-shift / period-change schedules with per-day exit medians
    compared against the unshifted baseline on the same seeds."""
    schedule = variant_schedule(variant, day_len, night_len)
    horizon = horizon_for_days(schedule, n_days)
    events_per_run, exit_counts, mean_activation, _ = _collect_runs(
        params, schedule, seed_base, n_runs, horizon)
    windows = schedule.day_windows(n_days)
    max_day = max(d + n for _, d, n in windows)
    hists = event_histograms(events_per_run, max_day, n_days)
    medians = _exit_medians(events_per_run, n_days)

    if variant == "baseline":
        base_medians = medians
    else:
        base_schedule = make_periodic(day_len, night_len)
        base_horizon = horizon_for_days(base_schedule, n_days)
        base_events, _, _, _ = _collect_runs(
            params, base_schedule, seed_base, n_runs, base_horizon)
        base_medians = _exit_medians(base_events, n_days)
    reentrainment = [(d, abs(m - bm)) for (d, m), (_, bm)
                     in zip(medians, base_medians)]

    # rhythm frequency over the last four variant days
    last4_start = windows[n_days - 4][0] - 1 if n_days >= 4 else 0
    freqs, mean_power = periodogram(mean_activation[last4_start:horizon])
    period, _ = dominant_peak(freqs, mean_power)
    daylight = np.array([schedule.signal_at(t) for t in range(1, horizon + 1)])
    return JetlagResult(variant, schedule.describe(), n_runs, seed_base,
                        horizon, n_days, max_day, windows, mean_activation,
                        daylight, exit_counts, hists, medians, base_medians,
                        reentrainment, freqs, mean_power, period)


@dataclass
class PrcResult:
    mode: str
    n_runs: int
    seed_base: int
    width: int
    pulse_day_rel: np.ndarray        # (40,) pulse position within day 5
    per_neuron: np.ndarray           # (40, width) mean shift, NaN = undefined
    mean_curve: np.ndarray           # (40,)
    undefined_counts: np.ndarray     # (40, width) excluded runs per position
    null_per_neuron: np.ndarray      # (width,) control-vs-control mean shift
    null_undefined: np.ndarray       # (width,)
    n_rhythmic: int                  # units with a defined null phase


def prc_experiment(params: NetworkParams, mode: str, n_runs: int = 200,
                   seed_base: int = 0, day_len: int = 20, night_len: int = 20,
                   horizon: int = 320, jobs: int = 1) -> PrcResult:
    """Phase response to a one-step signal inversion on day 5.

    The daylight signal runs four standard days, then clamps to night (for
    light pulses) or daytime (for dark pulses).  For each pulse step tau in
    day 5 the signal is inverted at exactly tau; the phase shift of every
    unit's day-6 activation window is measured against the no-pulse control
    run with the same seed.  A second control set on fresh seeds provides
    the control-vs-control null distribution.
    """
    if mode not in PRC_MODES:
        raise ValueError(f"unknown PRC mode {mode!r}; expected {PRC_MODES}")
    clamp_value = 0 if mode == "light_pulse_on_night" else 1
    base = make_clamped(make_periodic(day_len, night_len), CLAMP_START,
                        clamp_value)
    cycle = day_len + night_len
    width = params.config.recurrent_width
    seeds = list(range(seed_base, seed_base + n_runs))
    null_seeds = list(range(seed_base + n_runs, seed_base + 2 * n_runs))
    lo, hi = MEASURE_DAY6

    def day6_windows(schedule, run_seeds):
        traces = run_batch(params, schedule, run_seeds, horizon)
        return np.stack([tr.activations[lo:hi].T for tr in traces])  # (n, W, L)

    control = day6_windows(base, seeds)
    control_b = day6_windows(base, null_seeds)

    null_shift = estimate_phase_shifts(
        control_b.reshape(-1, cycle), control.reshape(-1, cycle), cycle
    ).reshape(n_runs, width)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        null_per_neuron = np.nanmean(null_shift, axis=0)
    null_undefined = np.isnan(null_shift).sum(axis=0)

    pulse_steps = np.arange(CLAMP_START, CLAMP_START + cycle)

    def pulse_one(tau):
        pulsed = make_pulse_inverted(base, int(tau))
        perturbed = day6_windows(pulsed, seeds)
        return estimate_phase_shifts(
            perturbed.reshape(-1, cycle), control.reshape(-1, cycle), cycle
        ).reshape(n_runs, width)

    per_neuron = np.empty((cycle, width))
    undefined = np.empty((cycle, width), dtype=np.int64)
    for i, shifts in enumerate(_parallel_map(pulse_one, pulse_steps, jobs)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            per_neuron[i] = np.nanmean(shifts, axis=0)
        undefined[i] = np.isnan(shifts).sum(axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_curve = np.nanmean(per_neuron, axis=1)
    n_rhythmic = int((~np.isnan(null_per_neuron)).sum())
    return PrcResult(mode, n_runs, seed_base, width,
                     pulse_day_rel=pulse_steps - (CLAMP_START - 1),
                     per_neuron=per_neuron, mean_curve=mean_curve,
                     undefined_counts=undefined,
                     null_per_neuron=null_per_neuron,
                     null_undefined=null_undefined, n_rhythmic=n_rhythmic)


@dataclass
class TrainingCurveResult:
    episodes: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    window: int
    n_seeds: int


def training_curve(eval_series: list[tuple[np.ndarray, np.ndarray]],
                   window: int = 11) -> TrainingCurveResult:
    """Cross-seed mean and standard deviation of smoothed eval rewards.

    ``eval_series`` holds (episodes, rewards) per seed; unequal lengths are
    truncated to the shortest with a warning.
    """
    if not eval_series:
        raise ValueError("no training logs given")
    shortest = min(len(ep) for ep, _ in eval_series)
    if any(len(ep) != shortest for ep, _ in eval_series):
        warnings.warn("training logs have unequal lengths; truncating")
    episodes = np.asarray(eval_series[0][0][:shortest])
    smoothed = np.stack([central_moving_average(np.asarray(r[:shortest]), window)
                         for _, r in eval_series])
    return TrainingCurveResult(episodes, smoothed.mean(axis=0),
                               smoothed.std(axis=0), window, len(eval_series))
