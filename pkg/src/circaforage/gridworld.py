"""Foraging grid world.

A 5x5 grid with three regions: a 3x3 food area in the top-left block
(rows 0-2, cols 0-2), a home cell at the bottom-right corner (4, 4), and a
transit zone covering the remaining cells.  Exactly one food item exists at
any time, always inside the food area; collecting it pays +1 and respawns it
uniformly over the other food-area cells.  Every step spent outside home
while the daylight signal is 0 costs -2.5.  The shortest path from the food
area to home is 4 steps, so avoiding the night penalty requires leaving the
food area before night onset.

Dynamics are deterministic given (seed, schedule, action sequence).  Moves
off the grid are silent no-ops.  The night penalty is evaluated against the
daylight value at the post-move time step, i.e. where the agent ends up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .daylight import DaylightSchedule, day_rel_step, signal_at

ROWS = 5
COLS = 5
HOME = (4, 4)
FOOD_AREA = tuple((r, c) for r in range(3) for c in range(3))
FOOD_AREA_SET = frozenset(FOOD_AREA)

ACTIONS = ("up", "down", "left", "right", "stay")
ACTION_UP, ACTION_DOWN, ACTION_LEFT, ACTION_RIGHT, ACTION_STAY = range(5)
_MOVES = {ACTION_UP: (-1, 0), ACTION_DOWN: (1, 0),
          ACTION_LEFT: (0, -1), ACTION_RIGHT: (0, 1)}

ORIENTATIONS = ("up", "down", "left", "right")

FOOD_REWARD = 1.0
NIGHT_PENALTY = -2.5

EVENT_KINDS = ("left_home", "entered_food_area", "left_food_area", "entered_home")


@dataclass
class EnvState:
    agent_cell: tuple[int, int]
    food_cell: tuple[int, int]
    orientation: int
    t: int
    schedule: DaylightSchedule
    rng: np.random.Generator


def min_steps_to_home(cell: tuple[int, int]) -> int:
    """Manhattan distance to the home cell (no obstacles exist)."""
    return abs(cell[0] - HOME[0]) + abs(cell[1] - HOME[1])


def encode_observation(state: EnvState) -> tuple[np.ndarray, np.ndarray]:
    """Agent-visible slice of the state.

    Returns ``(spatial, extra)`` where ``spatial`` is a 5x5x2 binary tensor
    (channel 0: agent location, channel 1: food location) and ``extra`` is the
    5-vector [daylight, orientation one-hot (up, down, left, right)].
    """
    spatial = np.zeros((ROWS, COLS, 2))
    spatial[state.agent_cell[0], state.agent_cell[1], 0] = 1.0
    spatial[state.food_cell[0], state.food_cell[1], 1] = 1.0
    extra = np.zeros(5)
    extra[0] = signal_at(state.schedule, state.t)
    extra[1 + state.orientation] = 1.0
    return spatial, extra


def reset(schedule: DaylightSchedule, seed: int) -> tuple[EnvState, tuple[np.ndarray, np.ndarray]]:
    """Start an episode: t = 1, agent at home, food uniform over the food area."""
    rng = np.random.default_rng(seed)
    food_cell = FOOD_AREA[rng.integers(len(FOOD_AREA))]
    state = EnvState(agent_cell=HOME, food_cell=food_cell, orientation=ACTION_UP,
                     t=1, schedule=schedule, rng=rng)
    return state, encode_observation(state)


def step(state: EnvState, action: int):
    """Advance one time step.

    Returns ``(state, observation, reward, events)``; the state is mutated in
    place.  Rewards decompose as +1 per collected food item plus -2.5 when the
    post-move cell is not home and the new step is night, so every per-step
    reward lies in {0, +1, -2.5, -1.5}.
    """
    old_cell = state.agent_cell
    if action != ACTION_STAY:
        dr, dc = _MOVES[action]
        nr, nc = old_cell[0] + dr, old_cell[1] + dc
        if 0 <= nr < ROWS and 0 <= nc < COLS:
            state.agent_cell = (nr, nc)
        state.orientation = action
    new_cell = state.agent_cell
    state.t += 1

    reward = 0.0
    if new_cell == state.food_cell:
        reward += FOOD_REWARD
        remaining = [cell for cell in FOOD_AREA if cell != new_cell]
        state.food_cell = remaining[state.rng.integers(len(remaining))]
    if signal_at(state.schedule, state.t) == 0 and new_cell != HOME:
        reward += NIGHT_PENALTY

    events = boundary_events(old_cell, new_cell)
    return state, encode_observation(state), reward, events


def boundary_events(old_cell: tuple[int, int], new_cell: tuple[int, int]) -> list[str]:
    """Region-boundary crossings caused by moving old_cell -> new_cell."""
    events = []
    if old_cell == HOME and new_cell != HOME:
        events.append("left_home")
    if old_cell != HOME and new_cell == HOME:
        events.append("entered_home")
    if old_cell not in FOOD_AREA_SET and new_cell in FOOD_AREA_SET:
        events.append("entered_food_area")
    if old_cell in FOOD_AREA_SET and new_cell not in FOOD_AREA_SET:
        events.append("left_food_area")
    return events


class OraclePolicy:
    """Scripted reference behavior used as a reward benchmark.

    Forages greedily during daytime while it can still reach home by night
    onset, burns slack by standing still when a food-ward move would break
    that deadline, and walks home along the deadline so it arrives exactly at
    the first night step.  Incurs zero night penalty by construction.
    """

    def __init__(self, schedule: DaylightSchedule):
        self.schedule = schedule

    def action(self, state: EnvState) -> int:
        t_next = state.t + 1
        if signal_at(self.schedule, t_next) == 0:
            if state.agent_cell == HOME:
                return ACTION_STAY
            return self._step_toward(state.agent_cell, HOME)

        day, rel_next = day_rel_step(self.schedule, t_next)
        start, day_len, night_len = self.schedule.day_windows(day)[day - 1]
        # moves remaining after arriving at rel_next, before night onset
        budget = day_len + 1 - rel_next

        candidates = []
        for action in range(5):
            nxt = self._next_cell(state.agent_cell, action)
            if min_steps_to_home(nxt) > budget:
                continue
            food_dist = abs(nxt[0] - state.food_cell[0]) + abs(nxt[1] - state.food_cell[1])
            candidates.append((food_dist, min_steps_to_home(nxt), action))
        if not candidates:
            return self._step_toward(state.agent_cell, HOME)
        candidates.sort()
        return candidates[0][2]

    @staticmethod
    def _next_cell(cell, action):
        if action == ACTION_STAY:
            return cell
        dr, dc = _MOVES[action]
        nr, nc = cell[0] + dr, cell[1] + dc
        if 0 <= nr < ROWS and 0 <= nc < COLS:
            return (nr, nc)
        return cell

    @staticmethod
    def _step_toward(cell, target) -> int:
        if cell[0] < target[0]:
            return ACTION_DOWN
        if cell[0] > target[0]:
            return ACTION_UP
        if cell[1] < target[1]:
            return ACTION_RIGHT
        if cell[1] > target[1]:
            return ACTION_LEFT
        return ACTION_STAY
