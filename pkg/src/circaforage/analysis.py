"""Signal and behavior analysis primitives.

Everything here is a pure function of recorded traces: behavioral event
detection, per-day event histograms, oscillation amplitude, delay embedding,
periodograms / training spectrograms, and phase-shift estimation between a
perturbed and a baseline rhythm window.

Conventions: global steps are 1-indexed; a series index i corresponds to
step i + 1.  Periodogram bins are k / T cycles per step for k = 0 .. T // 2,
with the mean removed so bin 0 carries no power.  Phase shifts are wrapped
into (-cycle/2, cycle/2], positive = advance (the perturbed rhythm leads the
baseline).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gridworld
from .daylight import DaylightSchedule, day_rel_step

FLAT_BASELINE_VAR = 1e-9


@dataclass(frozen=True)
class BehavioralEvent:
    kind: str
    t: int
    day: int
    day_rel: int


def detect_events(positions: np.ndarray,
                  schedule: DaylightSchedule) -> list[BehavioralEvent]:
    """Region-boundary crossings in a position trace (T, 2).

    An event is emitted at the step whose position first lies on the other
    side of a boundary: moving off home at step t yields ``left_home`` at t.
    """
    events = []
    for i in range(1, len(positions)):
        old = tuple(positions[i - 1])
        new = tuple(positions[i])
        for kind in gridworld.boundary_events(old, new):
            t = i + 1
            day, rel = day_rel_step(schedule, t)
            events.append(BehavioralEvent(kind=kind, t=t, day=day, day_rel=rel))
    return events


def event_histograms(events_per_run: list[list[BehavioralEvent]],
                     cycle_len: int, n_days: int) -> dict[str, np.ndarray]:
    """Per-kind histograms of event timing, shape (n_days, cycle_len).

    Bin (d, s) holds the fraction of runs whose first event of that kind on
    day d + 1 fell on day-relative step s + 1; rows therefore sum to at most
    1 (the event may not occur in a run).
    """
    n_runs = len(events_per_run)
    hists = {kind: np.zeros((n_days, cycle_len))
             for kind in gridworld.EVENT_KINDS}
    for events in events_per_run:
        seen = set()
        for ev in events:
            key = (ev.kind, ev.day)
            if key in seen or ev.day > n_days or ev.day_rel > cycle_len:
                continue
            seen.add(key)
            hists[ev.kind][ev.day - 1, ev.day_rel - 1] += 1.0
    if n_runs:
        for kind in hists:
            hists[kind] /= n_runs
    return hists


def amplitude(series: np.ndarray, window: tuple[int, int] | None = None) -> float:
    """max - min over ``window`` = (start, stop), 0-based half-open."""
    segment = series if window is None else series[window[0]:window[1]]
    if len(segment) == 0:
        raise ValueError("amplitude window is empty")
    return float(segment.max() - segment.min())


def delay_embedding(series: np.ndarray, delay: int = 10) -> np.ndarray:
    """Pairs (x_t, x_{t-delay}) for t = delay .. T-1, shape (T - delay, 2)."""
    if delay >= len(series):
        raise ValueError("delay must be smaller than the series length")
    if delay == 0:
        return np.column_stack([series, series])
    return np.column_stack([series[delay:], series[:-delay]])


def periodogram(series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided power spectrum of a mean-removed series.

    Returns (freqs, power) with freqs[k] = k / T cycles per step and
    power[k] = |DFT_k|^2 / T, so for even T the identity
    power[0] + power[T/2] + 2 * sum(power[1:T/2]) = T * var(series) holds.
    """
    n = len(series)
    if n < 2:
        raise ValueError("periodogram needs at least 2 samples")
    centered = series - series.mean()
    spectrum = np.fft.rfft(centered)
    power = (spectrum.real ** 2 + spectrum.imag ** 2) / n
    freqs = np.arange(len(power)) / n
    return freqs, power


def dominant_peak(freqs: np.ndarray, power: np.ndarray) -> tuple[float, float]:
    """(period at the strongest non-zero-frequency bin, peak / median ratio).

    The ratio compares the peak against the median over all non-zero bins;
    a flat or power-free spectrum reports ratio 0.
    """
    nonzero = power[1:]
    if len(nonzero) == 0 or nonzero.max() <= 0.0:
        return float("inf"), 0.0
    k = int(np.argmax(nonzero)) + 1
    median = float(np.median(nonzero))
    ratio = float(power[k] / median) if median > 0 else float("inf")
    return 1.0 / freqs[k], ratio


def spectrogram_rows(entries: list[tuple[int, np.ndarray]]):
    """Stack per-checkpoint periodograms into training spectrograms.

    ``entries`` holds (episode, power matrix (n_neurons, n_freq)) pairs.
    Returns (episodes, per_neuron (n_ckpt, n_neurons, n_freq), mean
    (n_ckpt, n_freq)); the mean averages power across neurons before any
    log transform, which is left to rendering.
    """
    if not entries:
        raise ValueError("no spectrogram entries")
    entries = sorted(entries, key=lambda e: e[0])
    n_freq = entries[0][1].shape
    for _, p in entries:
        if p.shape != n_freq:
            raise ValueError("periodogram shapes differ across checkpoints")
    episodes = np.array([e for e, _ in entries])
    stacked = np.stack([p for _, p in entries])
    return episodes, stacked, stacked.mean(axis=1)


def _wrapped_lags(cycle_len: int) -> np.ndarray:
    """Lag value for each circular-correlation index, in (-L/2, L/2]."""
    k = np.arange(cycle_len)
    return np.where(k <= cycle_len // 2, k, k - cycle_len)


def estimate_phase_shifts(perturbed: np.ndarray, baseline: np.ndarray,
                          cycle_len: int) -> np.ndarray:
    """Vectorized phase-shift estimates for row-aligned windows (M, L).

    Maximizes the circular cross-correlation of perturbed(t) against
    baseline(t + s); ties break toward the smallest |s|, then the negative
    lag.  Rows whose baseline variance is below ``FLAT_BASELINE_VAR`` return
    NaN (undefined phase).
    """
    if perturbed.shape != baseline.shape or perturbed.shape[-1] != cycle_len:
        raise ValueError("windows must both be exactly cycle_len steps")
    p = perturbed - perturbed.mean(axis=-1, keepdims=True)
    b = baseline - baseline.mean(axis=-1, keepdims=True)
    corr = np.fft.irfft(np.conj(np.fft.rfft(p, axis=-1))
                        * np.fft.rfft(b, axis=-1), n=cycle_len, axis=-1)
    lags = _wrapped_lags(cycle_len)
    # tie-break by (|s|, s) below the correlation ordering
    order = np.lexsort((lags, np.abs(lags)))
    corr_ordered = corr[:, order]
    best = order[np.argmax(corr_ordered, axis=-1)]
    shifts = lags[best].astype(np.float64)
    flat = b.var(axis=-1) < FLAT_BASELINE_VAR
    shifts[flat] = np.nan
    return shifts


def estimate_phase_shift(perturbed: np.ndarray, baseline: np.ndarray,
                         cycle_len: int):
    """Scalar phase shift in steps, or None for a flat (rhythm-free) baseline."""
    shift = estimate_phase_shifts(np.asarray(perturbed)[None, :],
                                  np.asarray(baseline)[None, :], cycle_len)[0]
    return None if np.isnan(shift) else int(shift)


def peak_timing_shift(perturbed: np.ndarray, baseline: np.ndarray,
                      cycle_len: int):
    """Secondary estimator: difference of argmax positions, wrapped.

    Kept for comparison against the cross-correlation estimate; positive
    means the perturbed peak arrives earlier (advance).
    """
    if len(perturbed) != cycle_len or len(baseline) != cycle_len:
        raise ValueError("windows must both be exactly cycle_len steps")
    if baseline.var() < FLAT_BASELINE_VAR:
        return None
    diff = int(np.argmax(baseline)) - int(np.argmax(perturbed))
    half = cycle_len // 2
    return int((diff + half - 1) % cycle_len - half + 1)


def central_moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Symmetric moving average; the window truncates at the ends."""
    if window < 1:
        raise ValueError("window must be >= 1")
    half = window // 2
    out = np.empty(len(values), dtype=np.float64)
    for i in range(len(values)):
        lo = max(0, i - half)
        hi = min(len(values), i + half + 1)
        out[i] = float(np.mean(values[lo:hi]))
    return out
