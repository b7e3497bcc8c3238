import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from circaforage.bundles import write_trace_csv
from circaforage.checkpointio import (Checkpoint, checkpoint_filename,
                                      save_checkpoint)
from circaforage.cli import main
from circaforage.csvio import read_csv, read_manifest
from circaforage.daylight import make_periodic
from circaforage.qnet import NetworkConfig, init_params
from circaforage.rollout import run_test_episode
from circaforage.training import TrainerConfig

NET = NetworkConfig(fc_widths=(6, 6), recurrent_width=6)


@pytest.fixture()
def ckpt_path(tmp_path):
    online = init_params(NET, 2)
    target = init_params(NET, 3)
    ckpt = Checkpoint.from_params(NET, TrainerConfig(episodes=4).to_dict(),
                                  4, online, target)
    path = tmp_path / "model.ckpt"
    save_checkpoint(ckpt, path)
    return path


@pytest.fixture()
def tiny_config(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text("\n".join([
        "# tiny desk override for fast tests",
        "net.recurrent_width=6",
        "net.fc_widths=6,6",
        "train.episodes=4",
        "train.steps_per_episode=30",
        "train.warmup_episodes=2",
        "train.sample_episodes=2",
        "train.eval_every=2",
        "train.checkpoint_dense_start=3",
        "train.checkpoint_dense_end=3",
        "train.checkpoint_every=4",
    ]) + "\n")
    return cfg


def test_usage_error_for_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code != 0


def test_usage_error_for_unknown_flag():
    with pytest.raises(SystemExit) as err:
        main(["gradcheck", "--bogus"])
    assert err.value.code != 0


def test_gradcheck_exit_zero(capsys):
    assert main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "overall" in out and "ok" in out


def test_train_writes_log_and_checkpoints(tmp_path, tiny_config):
    out = tmp_path / "run"
    assert main(["train", "--profile", "desk", "--config", str(tiny_config),
                 "--seed", "5", "--out", str(out)]) == 0
    assert (out / "training_log.csv").exists()
    ckpts = sorted((out / "checkpoints").glob("*.ckpt"))
    names = [p.name for p in ckpts]
    assert checkpoint_filename(0) in names
    assert checkpoint_filename(3) in names
    assert checkpoint_filename(4) in names


def test_train_determinism(tmp_path, tiny_config):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["train", "--config", str(tiny_config), "--seed", "1",
          "--out", str(out1)])
    main(["train", "--config", str(tiny_config), "--seed", "1",
          "--out", str(out2)])
    assert (out1 / "training_log.csv").read_bytes() == \
        (out2 / "training_log.csv").read_bytes()


def test_eval_writes_trace(tmp_path, ckpt_path, capsys):
    out = tmp_path / "eval"
    assert main(["eval", "--checkpoint", str(ckpt_path), "--runs", "2",
                 "--out", str(out)]) == 0
    assert (out / "trace_0.csv").exists()
    meta, columns, rows = read_csv(out / "trace_0.csv")
    assert columns == ["run_id", "t", "day_rel_step", "daylight", "agent_row",
                       "agent_col", "food_row", "food_col", "action",
                       "reward", "event_flags"]
    assert len(rows) == 320
    assert "mean_reward" in capsys.readouterr().out


def test_behavior_bundle(tmp_path, ckpt_path):
    out = tmp_path / "behavior"
    assert main(["behavior", "--checkpoint", str(ckpt_path), "--runs", "3",
                 "--out", str(out)]) == 0
    manifest = read_manifest(out)
    assert manifest["protocol"] == "behavior"
    assert manifest["n_runs"] == "3"
    _, columns, rows = read_csv(out / "histograms.csv")
    assert columns == ["event_kind", "day", "day_rel_step", "probability"]
    assert len(rows) == 4 * 8 * 40


def test_endogeneity_bundle(tmp_path, ckpt_path):
    out = tmp_path / "endo"
    assert main(["endogeneity", "--checkpoint", str(ckpt_path), "--clamp",
                 "day", "--runs", "2", "--out", str(out)]) == 0
    files = {p.name for p in out.iterdir()}
    assert {"manifest.txt", "mean_activation.csv", "histograms.csv",
            "periodogram_mean.csv", "periodogram_units.csv"} <= files


def test_refuses_nonempty_outdir(tmp_path, ckpt_path):
    out = tmp_path / "殿"
    out.mkdir()
    (out / "existing.txt").write_text("keep me")
    code = main(["behavior", "--checkpoint", str(ckpt_path), "--runs", "1",
                 "--out", str(out)])
    assert code != 0
    assert (out / "existing.txt").read_text() == "keep me"
    assert main(["behavior", "--checkpoint", str(ckpt_path), "--runs", "1",
                 "--out", str(out), "--force"]) == 0


def test_bifurcation_and_spectrogram(tmp_path):
    ckpt_dir = tmp_path / "ckpts"
    ckpt_dir.mkdir()
    for episode in (33, 34, 36):
        online = init_params(NET, episode)
        ckpt = Checkpoint.from_params(NET, {}, episode, online, online.clone())
        save_checkpoint(ckpt, ckpt_dir / checkpoint_filename(episode))
    out = tmp_path / "bif"
    with pytest.warns(UserWarning):
        assert main(["bifurcation", "--checkpoint", str(ckpt_dir), "--out",
                     str(out), "--from-episode", "33", "--to-episode",
                     "36"]) == 0
    manifest = read_manifest(out)
    assert manifest["missing_episodes"] == "35"
    out2 = tmp_path / "spec"
    with pytest.warns(UserWarning):
        assert main(["spectrogram", "--checkpoint", str(ckpt_dir), "--out",
                     str(out2), "--from-episode", "33", "--to-episode",
                     "36"]) == 0
    _, columns, rows = read_csv(out2 / "spectrogram_mean.csv")
    assert columns == ["episode", "frequency", "power"]
    assert len(rows) == 3 * 81


def test_jetlag_bundle(tmp_path, ckpt_path):
    out = tmp_path / "jet"
    assert main(["jetlag", "--checkpoint", str(ckpt_path), "--variant",
                 "extend_day2_daytime_10", "--runs", "2", "--out",
                 str(out)]) == 0
    _, columns, rows = read_csv(out / "reentrainment.csv")
    assert columns == ["day", "median_exit", "baseline_median",
                       "abs_deviation"]
    assert len(rows) == 8


def test_prc_bundle(tmp_path, ckpt_path):
    out = tmp_path / "prc"
    assert main(["prc", "--checkpoint", str(ckpt_path), "--clamp", "night",
                 "--runs", "1", "--out", str(out)]) == 0
    _, columns, rows = read_csv(out / "prc.csv")
    assert columns == ["pulse_day_rel_step", "series", "shift"]
    assert len(rows) == 40 * (6 + 1)


def test_training_curve_command(tmp_path, tiny_config):
    run = tmp_path / "run"
    main(["train", "--config", str(tiny_config), "--seed", "2",
          "--out", str(run)])
    out = tmp_path / "curve"
    assert main(["training-curve", str(run / "training_log.csv"),
                 "--out", str(out)]) == 0
    _, columns, rows = read_csv(out / "training_curve.csv")
    assert columns == ["episode", "mean_reward", "std_reward"]
    assert len(rows) == 2


def test_module_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "circaforage", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "train" in proc.stdout and "prc" in proc.stdout


def test_trace_csv_content(tmp_path):
    params = init_params(NET, 1)
    schedule = make_periodic()
    trace = run_test_episode(params, schedule, horizon=50, seed=7)
    write_trace_csv(trace, schedule, tmp_path / "t.csv")
    meta, columns, rows = read_csv(tmp_path / "t.csv")
    assert meta["schedule"] == "periodic(day=20,night=20)"
    assert rows[0][1] == "1" and rows[0][3] == "1"
    actions = {r[8] for r in rows}
    assert actions <= {"up", "down", "left", "right", "stay"}
