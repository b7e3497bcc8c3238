"""Figure rendering for protocol CSV bundles.

One function per figure kind; each takes the bundle directory written by
the corresponding circaforage command and an output image path.  Figures
are deterministic: fixed size, fixed dpi, Agg backend, colors derived only
from the data.  Log-power heatmaps apply log10(power + 1e-12); everything
else is plotted exactly as stored.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LOG_FLOOR = 1e-12
DPI = 110

EVENT_ORDER = ("left_home", "entered_food_area", "left_food_area",
               "entered_home")
EVENT_COLORS = {"left_home": "tab:green", "entered_food_area": "tab:blue",
                "left_food_area": "tab:red", "entered_home": "tab:purple"}


class SchemaError(RuntimeError):
    """Input CSV does not match the expected bundle schema."""


def read_csv(path: Path):
    """(meta, columns, string rows) for circaforage CSV files."""
    if not Path(path).exists():
        raise SchemaError(f"missing input file: {path}")
    meta, columns, rows = {}, [], []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        elif not columns:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, columns, rows


def read_manifest(in_dir: Path) -> dict:
    path = Path(in_dir) / "manifest.txt"
    if not path.exists():
        raise SchemaError(f"missing manifest: {path}")
    fields = {}
    for line in path.read_text().splitlines():
        if line:
            key, _, value = line.partition("=")
            fields[key] = value
    return fields


def _columns(columns, rows, wanted, path):
    try:
        idx = [columns.index(c) for c in wanted]
    except ValueError as exc:
        raise SchemaError(f"{path}: expected columns {wanted}, "
                          f"found {columns}") from exc
    return [[row[i] for i in idx] for row in rows]


def _cycle_from_manifest(manifest) -> tuple[int, int]:
    desc = manifest.get("schedule", "")
    if "day=" in desc and "night=" in desc:
        day = int(desc.split("day=")[1].split(",")[0].rstrip(")"))
        night = int(desc.split("night=")[1].split(",")[0].rstrip(")"))
        return day, night
    return 20, 20


def render_rose(in_dir: Path, out_path: Path):
    """Polar event-timing histograms: one ring per day, one row per event."""
    manifest = read_manifest(in_dir)
    meta, columns, rows = read_csv(Path(in_dir) / "histograms.csv")
    data = _columns(columns, rows,
                    ["event_kind", "day", "day_rel_step", "probability"],
                    "histograms.csv")
    n_days = max(int(r[1]) for r in data)
    n_bins = max(int(r[2]) for r in data)
    hists = {kind: np.zeros((n_days, n_bins)) for kind in EVENT_ORDER}
    for kind, day, step, prob in data:
        if kind in hists:
            hists[kind][int(day) - 1, int(step) - 1] = float(prob)
    day_len, night_len = _cycle_from_manifest(manifest)

    fig, axes = plt.subplots(len(EVENT_ORDER), n_days,
                             subplot_kw={"projection": "polar"},
                             figsize=(2.0 * n_days, 2.1 * len(EVENT_ORDER)))
    axes = np.asarray(axes).reshape(len(EVENT_ORDER), n_days)
    theta = 2 * np.pi * (np.arange(n_bins) + 0.5) / n_bins
    width = 2 * np.pi / n_bins
    night = np.linspace(2 * np.pi * day_len / (day_len + night_len),
                        2 * np.pi, 60)
    for row, kind in enumerate(EVENT_ORDER):
        for day in range(n_days):
            ax = axes[row, day]
            ax.fill_between(night, 0, 1, color="0.85", zorder=0)
            ax.bar(theta, hists[kind][day], width=width,
                   color=EVENT_COLORS[kind], zorder=2)
            ax.set_ylim(0, 1)
            ax.set_theta_zero_location("N")
            ax.set_theta_direction(-1)
            ax.set_xticks([])
            ax.set_yticks([0.2, 0.4, 0.6, 0.8])
            ax.set_yticklabels([])
            ax.grid(color="0.7", linewidth=0.4)
            if row == 0:
                ax.set_title(f"day {day + 1}", fontsize=9)
        axes[row, 0].set_ylabel(kind, labelpad=22, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_activation_overlay(in_dir: Path, out_path: Path):
    """Mean recurrent activation (line) over food-area-exit bars with
    day/night shading from the stored daylight column."""
    meta, columns, rows = read_csv(Path(in_dir) / "mean_activation.csv")
    data = _columns(columns, rows,
                    ["t", "daylight", "mean_activation", "exit_count"],
                    "mean_activation.csv")
    t = np.array([int(r[0]) for r in data])
    daylight = np.array([int(r[1]) for r in data])
    activation = np.array([float(r[2]) for r in data])
    exits = np.array([int(r[3]) for r in data], dtype=float)

    fig, ax = plt.subplots(figsize=(10, 3))
    for start, stop in _night_spans(t, daylight):
        ax.axvspan(start, stop, color="0.88", zorder=0)
    if exits.max() > 0:
        scale = 0.9 * (activation.max() - activation.min() + 1e-12) \
            / exits.max()
        ax.bar(t, exits * scale, bottom=activation.min(), width=1.0,
               color="tab:red", alpha=0.7, zorder=1, label="food-area exits")
    ax.plot(t, activation, color="tab:blue", linewidth=1.2, zorder=2,
            label="mean activation")
    ax.set_xlim(t[0], t[-1])
    ax.set_xlabel("time step")
    ax.set_ylabel("mean activation")
    ax.legend(loc="upper right", fontsize=8)
    title = meta.get("variant") or meta.get("schedule", "")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def _night_spans(t, daylight):
    spans = []
    start = None
    for i in range(len(t)):
        if daylight[i] == 0 and start is None:
            start = t[i] - 0.5
        if daylight[i] == 1 and start is not None:
            spans.append((start, t[i] - 0.5))
            start = None
    if start is not None:
        spans.append((start, t[-1] + 0.5))
    return spans


def _spectrogram_matrix(path: Path):
    meta, columns, rows = read_csv(path)
    data = _columns(columns, rows, ["episode", "frequency", "power"], path)
    episodes = sorted({int(r[0]) for r in data})
    freqs = sorted({float(r[1]) for r in data})
    e_idx = {e: i for i, e in enumerate(episodes)}
    f_idx = {f: i for i, f in enumerate(freqs)}
    matrix = np.zeros((len(episodes), len(freqs)))
    for episode, freq, power in data:
        matrix[e_idx[int(episode)], f_idx[float(freq)]] = float(power)
    return np.array(episodes), np.array(freqs), matrix


def render_spectrogram(in_dir: Path, out_path: Path, log_power: bool = True):
    """Heatmaps of power vs (episode, frequency) for the single-unit and
    unit-mean spectrogram CSVs."""
    panels = []
    for name in ("spectrogram_neuron.csv", "spectrogram_mean.csv"):
        path = Path(in_dir) / name
        if path.exists():
            panels.append((name.replace(".csv", ""),
                           _spectrogram_matrix(path)))
    if not panels:
        raise SchemaError(f"no spectrogram CSVs in {in_dir}")
    fig, axes = plt.subplots(1, len(panels),
                             figsize=(5.2 * len(panels), 3.6), squeeze=False)
    for ax, (title, (episodes, freqs, matrix)) in zip(axes[0], panels):
        values = np.log10(matrix + LOG_FLOOR) if log_power else matrix
        mesh = ax.pcolormesh(freqs, episodes, values, shading="nearest",
                             cmap="viridis")
        fig.colorbar(mesh, ax=ax,
                     label="log10 power" if log_power else "power")
        ax.set_xlabel("frequency (1/step)")
        ax.set_ylabel("training episode")
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_prc(in_dir: Path, out_path: Path):
    """Per-unit phase response curves (thin) and their mean (bold)."""
    meta, columns, rows = read_csv(Path(in_dir) / "prc.csv")
    data = _columns(columns, rows, ["pulse_day_rel_step", "series", "shift"],
                    "prc.csv")
    manifest = read_manifest(in_dir)
    mode = manifest.get("mode", meta.get("mode", ""))
    color = "tab:red" if "light" in mode else "tab:blue"
    series: dict[str, dict[int, float]] = {}
    for step, name, shift in data:
        series.setdefault(name, {})[int(step)] = float(shift)

    fig, ax = plt.subplots(figsize=(6, 3.4))
    for name, curve in series.items():
        steps = sorted(curve)
        values = [curve[s] for s in steps]
        if name == "mean":
            continue
        ax.plot(steps, values, color=color, alpha=0.25, linewidth=0.7)
    mean = series.get("mean")
    if mean is None:
        raise SchemaError("prc.csv has no 'mean' series")
    steps = sorted(mean)
    ax.plot(steps, [mean[s] for s in steps], color=color, linewidth=2.2,
            label=f"mean ({mode})")
    ax.axhline(0.0, color="0.4", linewidth=0.6)
    ax.set_xlabel("pulse position (day-relative step)")
    ax.set_ylabel("phase shift (steps)")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_training_curve(in_dir: Path, out_path: Path):
    meta, columns, rows = read_csv(Path(in_dir) / "training_curve.csv")
    data = _columns(columns, rows, ["episode", "mean_reward", "std_reward"],
                    "training_curve.csv")
    episodes = np.array([int(r[0]) for r in data])
    mean = np.array([float(r[1]) for r in data])
    std = np.array([float(r[2]) for r in data])
    fig, ax = plt.subplots(figsize=(6, 3.4))
    ax.fill_between(episodes, mean - std, mean + std, color="tab:blue",
                    alpha=0.25, linewidth=0)
    ax.plot(episodes, mean, color="tab:blue", linewidth=1.5)
    ax.axhline(0.0, color="0.4", linewidth=0.6)
    ax.set_xlabel("training episode")
    ax.set_ylabel("evaluation reward")
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def render_delay_plot(in_dir: Path, out_path: Path):
    """Activation vs delayed activation, colored from first to last episode."""
    meta, columns, rows = read_csv(Path(in_dir) / "delay_pairs.csv")
    data = _columns(columns, rows, ["episode", "value", "delayed_value"],
                    "delay_pairs.csv")
    episodes = np.array([int(r[0]) for r in data])
    x = np.array([float(r[1]) for r in data])
    y = np.array([float(r[2]) for r in data])
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    span = max(episodes.max() - episodes.min(), 1)
    colors = plt.cm.coolwarm((episodes - episodes.min()) / span)
    ax.scatter(x, y, s=2.5, c=colors, linewidths=0)
    ax.set_xlabel("activation")
    ax.set_ylabel("activation delayed")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


RENDERERS = {
    "rose": render_rose,
    "activation_overlay": render_activation_overlay,
    "spectrogram": render_spectrogram,
    "prc": render_prc,
    "training_curve": render_training_curve,
    "delay_plot": render_delay_plot,
}


def render(kind: str, in_dir: Path, out_dir: Path,
           log_power: bool = True) -> Path:
    if kind not in RENDERERS:
        raise SchemaError(f"unknown figure kind {kind!r}; "
                          f"expected one of {sorted(RENDERERS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{kind}.png"
    if kind == "spectrogram":
        render_spectrogram(in_dir, out_path, log_power=log_power)
    else:
        RENDERERS[kind](in_dir, out_path)
    return out_path
