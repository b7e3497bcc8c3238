"""Run configuration: named profiles plus key=value config files.

The ``paper`` profile reproduces the published hyperparameters exactly
(recurrent width 128, 37500 episodes of 160 steps, 4 gradient updates per
environment step on 16 sampled episodes, ReLU value/advantage heads).  The
``desk`` profile is the scaled-down reference used by the acceptance suite:
recurrent width 32, 4000 episodes, 1 update per step on 8 sampled episodes,
and linear heads instead of ReLU.  At width 32 the ReLU value head reliably
dies early (every pre-activation goes negative while returns are still
negative), and with the max-variant dueling combine a dead value head pins
the greedy action's Q at zero, which blocks all further policy improvement;
the linear-head switch removes that failure mode.  Everything else is
unchanged between profiles.

Config files are plain text, one ``section.key=value`` per line with ``#``
comments; sections are ``net.`` and ``train.``.  Individual values override
the chosen profile.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .qnet import NetworkConfig
from .training import TrainerConfig

PROFILES = ("paper", "desk")


def profile_configs(profile: str) -> tuple[NetworkConfig, TrainerConfig]:
    if profile == "paper":
        return NetworkConfig(), TrainerConfig()
    if profile == "desk":
        return (NetworkConfig(recurrent_width=32, head_activation="linear"),
                TrainerConfig(episodes=4000, train_steps_per_env_step=1,
                              sample_episodes=8))
    raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")


def parse_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (expected key=value): {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_configs(profile: str = "desk", overrides: dict | None = None,
                  seed: int | None = None) -> tuple[NetworkConfig, TrainerConfig]:
    net, trainer = profile_configs(profile)
    net_over = {}
    train_over = {}
    for key, value in (overrides or {}).items():
        section, _, field = key.partition(".")
        if section == "net" and field in NetworkConfig.__dataclass_fields__:
            net_over[field] = value
        elif section == "train" and field in TrainerConfig.__dataclass_fields__:
            train_over[field] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    if net_over:
        merged = net.to_dict()
        merged.update({k: v for k, v in net_over.items()})
        net = NetworkConfig.from_dict(merged)
    if train_over:
        merged = trainer.to_dict()
        merged.update(train_over)
        trainer = TrainerConfig.from_dict(merged)
    if seed is not None:
        trainer = replace(trainer, seed=seed)
    return net, trainer
