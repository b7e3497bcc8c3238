"""Generate the fixture CSV bundles and golden images for the render tests.

Run once from the figures/ directory; fixtures and goldens are committed.
The fixtures are tiny synthetic bundles in the exact schemas the main
package writes.
"""

import math
import shutil
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from circafig.render import render  # noqa: E402

BASE = Path(__file__).resolve().parent.parent / "tests"
FIXTURES = BASE / "fixtures"
GOLDENS = BASE / "goldens"


def write_csv(path, meta, columns, rows):
    lines = ["# manifest: manifest.txt"]
    lines += [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(columns))
    lines += [",".join(str(v) for v in row) for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def write_manifest(out_dir, fields):
    lines = [f"{k}={v}" for k, v in fields.items()]
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def fixture_rose():
    out = FIXTURES / "rose"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "behavior",
                         "schedule": "periodic(day=20,night=20)"})
    rows = []
    kinds = ("left_home", "entered_food_area", "left_food_area",
             "entered_home")
    peaks = {"left_home": 1, "entered_food_area": 6, "left_food_area": 17,
             "entered_home": 21}
    for kind in kinds:
        for day in (1, 2):
            for step in range(1, 41):
                p = 0.8 if step == peaks[kind] else \
                    (0.15 if step == peaks[kind] + 1 else 0.0)
                rows.append((kind, day, step, p))
    write_csv(out / "histograms.csv",
              {"schedule": "periodic(day=20,night=20)"},
              ("event_kind", "day", "day_rel_step", "probability"), rows)


def fixture_activation_overlay():
    out = FIXTURES / "activation_overlay"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "endogeneity",
                         "schedule": "clamped(periodic(day=20,night=20),start=41,value=1)"})
    rows = []
    for t in range(1, 121):
        daylight = 1 if (t <= 40 and (t - 1) % 40 < 20) or t > 40 else 0
        act = 0.2 * math.sin(2 * math.pi * t / 40) - 0.1
        exits = 3 if t % 40 == 17 else 0
        day = (t - 1) // 40 + 1
        rel = (t - 1) % 40 + 1
        rows.append((t, day, rel, daylight, round(act, 6), exits))
    write_csv(out / "mean_activation.csv", {"schedule": "fixture"},
              ("t", "day", "day_rel_step", "daylight", "mean_activation",
               "exit_count"), rows)


def fixture_spectrogram():
    out = FIXTURES / "spectrogram"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "spectrogram", "clamp_value": 1})
    for name, scale in (("spectrogram_neuron.csv", 1.0),
                        ("spectrogram_mean.csv", 0.5)):
        rows = []
        for i, episode in enumerate((33, 60, 90, 120)):
            for k in range(21):
                freq = k / 160
                power = scale * (4.0 * i if k == 4 else 0.01)
                rows.append((episode, round(freq, 6), power))
        write_csv(out / name, {}, ("episode", "frequency", "power"), rows)


def fixture_prc():
    out = FIXTURES / "prc"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "prc", "mode": "light_pulse_on_night",
                         "width": 3, "n_runs": 4, "n_rhythmic": 3})
    rows = []
    for step in range(1, 41):
        phase = 2 * math.pi * step / 40
        for u in range(3):
            rows.append((step, f"neuron_{u}",
                         round(3 * math.sin(phase + 0.3 * u), 6)))
        rows.append((step, "mean", round(3 * math.sin(phase + 0.3), 6)))
    write_csv(out / "prc.csv", {"mode": "light_pulse_on_night"},
              ("pulse_day_rel_step", "series", "shift"), rows)


def fixture_training_curve():
    out = FIXTURES / "training_curve"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "training_curve", "window": 11,
                         "n_seeds": 3})
    rows = []
    for i in range(30):
        episode = (i + 1) * 100
        mean = -200 + 215 * (1 - math.exp(-i / 8))
        rows.append((episode, round(mean, 4), round(12 - i * 0.3, 4)))
    write_csv(out / "training_curve.csv", {},
              ("episode", "mean_reward", "std_reward"), rows)


def fixture_delay_plot():
    out = FIXTURES / "delay_plot"
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, {"protocol": "bifurcation", "delay": 10})
    rows = []
    for i, (episode, radius) in enumerate(((33, 0.01), (80, 0.4), (132, 0.8))):
        for j in range(40):
            angle = 2 * math.pi * j / 40
            rows.append((episode, j + 1,
                         round(radius * math.cos(angle), 6),
                         round(radius * math.sin(angle), 6)))
    write_csv(out / "delay_pairs.csv", {},
              ("episode", "t", "value", "delayed_value"), rows)


def main():
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    if GOLDENS.exists():
        shutil.rmtree(GOLDENS)
    GOLDENS.mkdir(parents=True)
    fixture_rose()
    fixture_activation_overlay()
    fixture_spectrogram()
    fixture_prc()
    fixture_training_curve()
    fixture_delay_plot()
    for kind in ("rose", "activation_overlay", "spectrogram", "prc",
                 "training_curve", "delay_plot"):
        out = render(kind, FIXTURES / kind, GOLDENS)
        print("golden:", out)


if __name__ == "__main__":
    main()
