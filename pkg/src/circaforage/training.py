"""Q-learning training loop.

Episodes of 160 steps (four day cycles) are generated with an epsilon-greedy
policy and stored whole in an episode-level replay ring buffer.  After a
warmup phase that only fills the buffer, every environment step triggers a
configurable number of gradient updates; each update samples full episodes
uniformly with replacement and fits the online network to targets

    y_t = r_t + gamma * max_a' Q(h_{t+1}, a'; target_params)

computed by the target network from a zero recurrent state over the whole
episode, with no bootstrap past the final step.  The target parameters track
the online parameters by an exponential moving average applied every
environment step.  Exploration anneals linearly from eps_start to eps_end
over the first ``eps_anneal_fraction`` of all environment steps.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import gridworld
from .daylight import make_periodic
from .qnet import (NetworkConfig, NetworkParams, PolicyRunner, forward_batch,
                   backward_batch, init_params, select_action)
from .nn.layers import l1l2_grad, l1l2_penalty
from .nn.optim import make_optimizer
from .rollout import greedy_episode_reward

REGULARIZED_ARRAYS = ("rec.wx", "rec.wh")


@dataclass(frozen=True)
class TrainerConfig:
    episodes: int = 37500
    steps_per_episode: int = 160
    gamma: float = 0.99
    lr: float = 0.001
    target_beta: float = 0.001
    replay_capacity: int = 1000
    sample_episodes: int = 16
    train_steps_per_env_step: int = 4
    warmup_episodes: int = 32
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_anneal_fraction: float = 0.75
    eval_every: int = 10
    eval_epsilon: float = 0.0
    checkpoint_dense_start: int = 33
    checkpoint_dense_end: int = 132
    checkpoint_every: int = 100
    optimizer: str = "adam"
    day_len: int = 20
    night_len: int = 20
    terminal_bootstrap: bool = False
    seed: int = 0

    @property
    def total_env_steps(self) -> int:
        return self.episodes * self.steps_per_episode

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        kwargs = {}
        for name, f in cls.__dataclass_fields__.items():
            if name not in d:
                continue
            raw = d[name]
            if f.type == "bool":
                kwargs[name] = raw in (True, "True", "true", "1", 1)
            elif f.type == "int":
                kwargs[name] = int(raw)
            elif f.type == "float":
                kwargs[name] = float(raw)
            else:
                kwargs[name] = raw
        return cls(**kwargs)


def epsilon_at(env_step: int, config: TrainerConfig) -> float:
    """Exploration rate at a 0-based global environment step."""
    anneal_steps = config.eps_anneal_fraction * config.total_env_steps
    if anneal_steps <= 0 or env_step >= anneal_steps:
        return config.eps_end
    frac = env_step / anneal_steps
    return config.eps_start + (config.eps_end - config.eps_start) * frac


@dataclass
class EpisodeRecord:
    """One complete training episode, pre-encoded as network inputs."""
    spatial: np.ndarray    # (T, 5, 5, 2)
    extra: np.ndarray      # (T, 5)
    actions: np.ndarray    # (T,) int
    rewards: np.ndarray    # (T,)
    episode_index: int


class ReplayMemory:
    """Ring buffer over the most recent complete episodes (strict FIFO)."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._buffer: deque[EpisodeRecord] = deque(maxlen=capacity)

    def __len__(self):
        return len(self._buffer)

    def push(self, record: EpisodeRecord):
        self._buffer.append(record)

    def episode_indices(self) -> list[int]:
        return [r.episode_index for r in self._buffer]

    def sample(self, rng: np.random.Generator, k: int) -> list[EpisodeRecord]:
        """k episodes drawn uniformly with replacement."""
        idx = rng.integers(0, len(self._buffer), size=k)
        return [self._buffer[int(i)] for i in idx]


def stack_batch(records: list[EpisodeRecord]):
    """Episode records -> time-major batch arrays."""
    spatial = np.stack([r.spatial for r in records], axis=1)
    extra = np.stack([r.extra for r in records], axis=1)
    actions = np.stack([r.actions for r in records], axis=1)
    rewards = np.stack([r.rewards for r in records], axis=1)
    return spatial, extra, actions, rewards


def compute_targets(target_params: NetworkParams, spatial, extra, rewards,
                    gamma: float, terminal_bootstrap: bool = False) -> np.ndarray:
    """Per-step targets y (T, B); the final step is the bare reward unless
    ``terminal_bootstrap`` repeats the last max-Q."""
    out = forward_batch(target_params, spatial, extra, onehot=True)
    q_max = out.q.max(axis=2)
    y = rewards.copy()
    y[:-1] += gamma * q_max[1:]
    if terminal_bootstrap:
        y[-1] += gamma * q_max[-1]
    return y


def loss_and_gradients(online_params: NetworkParams, spatial, extra, actions,
                       targets: np.ndarray) -> float:
    """Mean squared TD error over all (episode, step) pairs plus the
    configured L1+L2 penalty on the recurrent weight matrices.

    Gradients (including the penalty's) are accumulated into
    ``online_params``; targets are treated as constants.
    """
    out, cache = forward_batch(online_params, spatial, extra, with_cache=True,
                               onehot=True)
    steps, batch = targets.shape
    q_taken = np.take_along_axis(out.q, actions[:, :, None], axis=2)[:, :, 0]
    residual = q_taken - targets
    n = steps * batch
    loss = float((residual * residual).sum()) / n

    dq = np.zeros_like(out.q)
    np.put_along_axis(dq, actions[:, :, None],
                      (2.0 / n) * residual[:, :, None], axis=2)
    online_params.zero_grads()
    backward_batch(online_params, cache, dq)

    cfg = online_params.config
    if cfg.l1 or cfg.l2:
        for name in REGULARIZED_ARRAYS:
            p = online_params[name]
            loss += l1l2_penalty(p.value, cfg.l1, cfg.l2)
            p.grad += l1l2_grad(p.value, cfg.l1, cfg.l2)
    return loss


def ema_update(target_params: NetworkParams, online_params: NetworkParams,
               beta: float):
    """target <- beta * online + (1 - beta) * target, elementwise."""
    for name, p in target_params.arrays.items():
        p.value *= 1.0 - beta
        p.value += beta * online_params[name].value


@dataclass
class TrainingLog:
    """Append-only record of evaluation rewards, update losses and the
    exploration schedule actually applied."""
    eval_episodes: list[int] = field(default_factory=list)
    eval_rewards: list[float] = field(default_factory=list)
    eval_mean_losses: list[float] = field(default_factory=list)
    eval_epsilons: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def record_eval(self, episode: int, reward: float, mean_loss: float,
                    epsilon: float):
        self.eval_episodes.append(episode)
        self.eval_rewards.append(reward)
        self.eval_mean_losses.append(mean_loss)
        self.eval_epsilons.append(epsilon)

    def csv_rows(self):
        header = ("episode", "eval_reward", "mean_loss", "epsilon")
        rows = list(zip(self.eval_episodes, self.eval_rewards,
                        self.eval_mean_losses, self.eval_epsilons))
        return header, rows


def checkpoint_episodes(config: TrainerConfig) -> set[int]:
    """Episodes after which parameters are persisted (0 = untrained)."""
    out = {0, config.episodes}
    out.update(range(config.checkpoint_dense_start,
                     min(config.checkpoint_dense_end, config.episodes) + 1))
    out.update(range(config.checkpoint_every, config.episodes + 1,
                     config.checkpoint_every))
    return out


def train(net_config: NetworkConfig, config: TrainerConfig,
          checkpoint_callback=None, progress_every: int = 100,
          log_stream=None):
    """Run the full training loop.

    ``checkpoint_callback(episode, online, target, rng_state)`` is invoked at
    every scheduled checkpoint; evaluation episodes run greedily every
    ``eval_every`` episodes and are never written to replay.  Returns
    ``(online_params, target_params, TrainingLog)``.
    """
    seed_seq = np.random.SeedSequence(config.seed)
    init_seed, env_seed, explore_seed, sample_seed, eval_seed = [
        int(s.generate_state(1)[0]) for s in seed_seq.spawn(5)]
    env_rng = np.random.default_rng(env_seed)
    explore_rng = np.random.default_rng(explore_seed)
    sample_rng = np.random.default_rng(sample_seed)
    eval_rng = np.random.default_rng(eval_seed)

    online = init_params(net_config, init_seed)
    target = online.clone()
    optimizer = make_optimizer(config.optimizer, config.lr)
    replay = ReplayMemory(config.replay_capacity)
    log = TrainingLog()
    schedule = make_periodic(config.day_len, config.night_len)
    ckpt_episodes = checkpoint_episodes(config)
    steps = config.steps_per_episode

    def rng_states():
        return {
            "env": env_rng.bit_generator.state,
            "explore": explore_rng.bit_generator.state,
            "sample": sample_rng.bit_generator.state,
            "eval": eval_rng.bit_generator.state,
        }

    if checkpoint_callback is not None and 0 in ckpt_episodes:
        checkpoint_callback(0, online, target, rng_states())

    global_step = 0
    losses_since_eval: list[float] = []
    started = time.time()

    for episode in range(1, config.episodes + 1):
        state, (spatial_obs, extra_obs) = gridworld.reset(
            schedule, int(env_rng.integers(2 ** 62)))
        spatial = np.empty((steps, 5, 5, 2))
        extra = np.empty((steps, 5))
        actions = np.empty(steps, dtype=np.int64)
        rewards = np.empty(steps)
        runner = PolicyRunner(online, batch=1)
        training_active = episode > config.warmup_episodes

        for i in range(steps):
            spatial[i] = spatial_obs
            extra[i] = extra_obs
            q, _, _, _ = runner.step(spatial_obs[None], extra_obs[None])
            action = select_action(q[0], epsilon_at(global_step, config),
                                   explore_rng)
            state, (spatial_obs, extra_obs), reward, _ = gridworld.step(
                state, action)
            actions[i] = action
            rewards[i] = reward
            global_step += 1

            if training_active:
                for _ in range(config.train_steps_per_env_step):
                    batch = stack_batch(replay.sample(
                        sample_rng, config.sample_episodes))
                    y = compute_targets(target, batch[0], batch[1], batch[3],
                                        config.gamma, config.terminal_bootstrap)
                    loss = loss_and_gradients(online, batch[0], batch[1],
                                              batch[2], y)
                    optimizer.apply(online.named_for_update())
                    losses_since_eval.append(loss)
            ema_update(target, online, config.target_beta)

        replay.push(EpisodeRecord(spatial, extra, actions, rewards, episode))

        if episode % config.eval_every == 0:
            reward = greedy_episode_reward(
                online, schedule, steps, int(eval_rng.integers(2 ** 62)),
                epsilon=config.eval_epsilon)
            mean_loss = (float(np.mean(losses_since_eval))
                         if losses_since_eval else 0.0)
            log.losses.extend(losses_since_eval)
            losses_since_eval = []
            log.record_eval(episode, reward, mean_loss,
                            epsilon_at(global_step, config))

        if checkpoint_callback is not None and episode in ckpt_episodes:
            checkpoint_callback(episode, online, target, rng_states())

        if progress_every and episode % progress_every == 0:
            last_reward = log.eval_rewards[-1] if log.eval_rewards else float("nan")
            msg = (f"[train] episode {episode}/{config.episodes} "
                   f"eval_reward={last_reward:.2f} "
                   f"eps={epsilon_at(global_step, config):.3f} "
                   f"elapsed={time.time() - started:.0f}s")
            print(msg, flush=True, file=log_stream)

    log.losses.extend(losses_since_eval)
    return online, target, log
