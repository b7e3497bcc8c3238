"""Greedy test rollouts and activation traces.

A test run drives the environment with the greedy policy (no exploration)
from a zero recurrent state and records, per step: the recurrent activation
vector, the agent and food positions, the action, the reward and the
daylight bit.  Runs with distinct seeds are independent, so a batch of runs
is executed in lockstep with a single batched network forward per step;
results are identical to running each seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gridworld
from .daylight import DaylightSchedule, signal_at
from .qnet import NetworkParams, PolicyRunner, select_action


@dataclass
class ActivationTrace:
    """Per-step record of one test run (the substrate of every analysis)."""
    run_id: int
    seed: int
    schedule_desc: str
    activations: np.ndarray   # (T, width)
    positions: np.ndarray     # (T, 2) agent cell
    food: np.ndarray          # (T, 2) food cell
    actions: np.ndarray       # (T,)
    rewards: np.ndarray       # (T,)
    daylight: np.ndarray      # (T,)

    @property
    def horizon(self) -> int:
        return self.positions.shape[0]


def run_batch(params: NetworkParams, schedule: DaylightSchedule,
              seeds, horizon: int = 320) -> list[ActivationTrace]:
    """Greedy test runs for every seed, stepped in lockstep."""
    n = len(seeds)
    width = params.config.recurrent_width
    envs = []
    spatial = np.empty((n, 5, 5, 2))
    extra = np.empty((n, 5))
    for j, seed in enumerate(seeds):
        state, (sp, ex) = gridworld.reset(schedule, seed)
        envs.append(state)
        spatial[j] = sp
        extra[j] = ex

    activations = np.empty((n, horizon, width))
    positions = np.empty((n, horizon, 2), dtype=np.int64)
    food = np.empty((n, horizon, 2), dtype=np.int64)
    actions = np.empty((n, horizon), dtype=np.int64)
    rewards = np.empty((n, horizon))
    daylight = np.empty((n, horizon), dtype=np.int64)

    runner = PolicyRunner(params, batch=n)
    for i in range(horizon):
        for j, state in enumerate(envs):
            positions[j, i] = state.agent_cell
            food[j, i] = state.food_cell
            daylight[j, i] = signal_at(schedule, state.t)
        q, _, _, h = runner.step(spatial, extra)
        step_actions = np.argmax(q, axis=1)
        activations[:, i, :] = h
        for j, state in enumerate(envs):
            action = int(step_actions[j])
            _, (sp, ex), reward, _ = gridworld.step(state, action)
            spatial[j] = sp
            extra[j] = ex
            actions[j, i] = action
            rewards[j, i] = reward

    desc = schedule.describe()
    return [ActivationTrace(run_id=j, seed=int(seeds[j]), schedule_desc=desc,
                            activations=activations[j], positions=positions[j],
                            food=food[j], actions=actions[j],
                            rewards=rewards[j], daylight=daylight[j])
            for j in range(n)]


def run_test_episode(params: NetworkParams, schedule: DaylightSchedule,
                     horizon: int = 320, seed: int = 0) -> ActivationTrace:
    return run_batch(params, schedule, [seed], horizon)[0]


def greedy_episode_reward(params: NetworkParams, schedule: DaylightSchedule,
                          steps: int, seed: int, epsilon: float = 0.0) -> float:
    """Total reward of one evaluation episode (epsilon normally 0)."""
    state, (sp, ex) = gridworld.reset(schedule, seed)
    runner = PolicyRunner(params, batch=1)
    rng = np.random.default_rng(seed) if epsilon > 0 else None
    total = 0.0
    for _ in range(steps):
        q, _, _, _ = runner.step(sp[None], ex[None])
        if epsilon > 0:
            action = select_action(q[0], epsilon, rng)
        else:
            action = int(np.argmax(q[0]))
        state, (sp, ex), reward, _ = gridworld.step(state, action)
        total += reward
    return total


def run_oracle_batch(schedule: DaylightSchedule, seeds,
                     horizon: int = 320) -> list[ActivationTrace]:
    """Scripted-policy runs; traces carry empty activation vectors."""
    traces = []
    policy = gridworld.OraclePolicy(schedule)
    desc = schedule.describe()
    for j, seed in enumerate(seeds):
        state, _ = gridworld.reset(schedule, seed)
        positions = np.empty((horizon, 2), dtype=np.int64)
        food = np.empty((horizon, 2), dtype=np.int64)
        actions = np.empty(horizon, dtype=np.int64)
        rewards = np.empty(horizon)
        daylight = np.empty(horizon, dtype=np.int64)
        for i in range(horizon):
            positions[i] = state.agent_cell
            food[i] = state.food_cell
            daylight[i] = signal_at(schedule, state.t)
            action = policy.action(state)
            state, _, reward, _ = gridworld.step(state, action)
            actions[i] = action
            rewards[i] = reward
        traces.append(ActivationTrace(
            run_id=j, seed=int(seed), schedule_desc=desc,
            activations=np.empty((horizon, 0)), positions=positions,
            food=food, actions=actions, rewards=rewards, daylight=daylight))
    return traces
