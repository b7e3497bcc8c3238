import numpy as np
import pytest

from circaforage.qnet import NetworkConfig, init_params, forward_batch
from circaforage.training import (EpisodeRecord, ReplayMemory, TrainerConfig,
                                  checkpoint_episodes, compute_targets,
                                  ema_update, epsilon_at, loss_and_gradients,
                                  stack_batch, train)

TINY_NET = NetworkConfig(fc_widths=(6, 6), recurrent_width=6)


def tiny_trainer(**kwargs):
    defaults = dict(episodes=6, steps_per_episode=20, warmup_episodes=2,
                    train_steps_per_env_step=1, sample_episodes=2,
                    replay_capacity=4, eval_every=2, checkpoint_dense_start=3,
                    checkpoint_dense_end=4, checkpoint_every=5, seed=0)
    defaults.update(kwargs)
    return TrainerConfig(**defaults)


def toy_episode(index, steps=8, seed=0):
    rng = np.random.default_rng(seed + index)
    spatial = np.zeros((steps, 5, 5, 2))
    extra = np.zeros((steps, 5))
    for t in range(steps):
        spatial[t, rng.integers(5), rng.integers(5), 0] = 1.0
        spatial[t, rng.integers(3), rng.integers(3), 1] = 1.0
        extra[t, 0] = rng.integers(2)
        extra[t, 1 + rng.integers(4)] = 1.0
    return EpisodeRecord(spatial, extra, rng.integers(0, 5, steps),
                         rng.choice([0.0, 1.0, -2.5], steps), index)


class TestEpsilonSchedule:
    CFG = TrainerConfig(episodes=100, steps_per_episode=100)

    def test_endpoints(self):
        # total 10000 env steps; anneal ends at 7500; midpoint 3750 -> 0.55
        assert epsilon_at(0, self.CFG) == 1.0
        assert epsilon_at(3750, self.CFG) == pytest.approx(0.55)
        assert epsilon_at(7500, self.CFG) == pytest.approx(0.1)
        assert epsilon_at(10000, self.CFG) == 0.1

    def test_monotone_nonincreasing(self):
        values = [epsilon_at(s, self.CFG) for s in range(0, 10001, 137)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestReplay:
    def test_fifo_eviction(self):
        mem = ReplayMemory(4)
        for i in range(1, 8):
            mem.push(toy_episode(i))
        assert mem.episode_indices() == [4, 5, 6, 7]

    def test_capacity_1000_window(self):
        mem = ReplayMemory(1000)
        for i in range(1, 1501):
            mem.push(EpisodeRecord(None, None, None, None, i))
        idx = mem.episode_indices()
        assert len(idx) == 1000
        assert idx[0] == 501 and idx[-1] == 1500

    def test_sampling_with_replacement_in_bounds(self):
        mem = ReplayMemory(8)
        for i in range(3):
            mem.push(toy_episode(i))
        rng = np.random.default_rng(0)
        sample = mem.sample(rng, 16)
        assert len(sample) == 16
        assert {r.episode_index for r in sample} <= {0, 1, 2}


class TestTargets:
    def test_direct_evaluation(self):
        # y = r + gamma * max_a' Q'; frozen example r=1, gamma=.99, maxQ'=2
        params = init_params(TINY_NET, 0)
        records = [toy_episode(0, steps=4)]
        spatial, extra, actions, rewards = stack_batch(records)
        out = forward_batch(params, spatial, extra, onehot=True)
        q_max = out.q.max(axis=2)
        y = compute_targets(params, spatial, extra, rewards, gamma=0.99)
        expected = rewards.copy()
        expected[:-1] += 0.99 * q_max[1:]
        assert np.allclose(y, expected)
        assert y[-1, 0] == rewards[-1, 0]  # terminal: no bootstrap

    def test_gamma_zero_is_myopic(self):
        params = init_params(TINY_NET, 0)
        spatial, extra, actions, rewards = stack_batch([toy_episode(1, 5)])
        y = compute_targets(params, spatial, extra, rewards, gamma=0.0)
        assert np.array_equal(y, rewards)

    def test_scalar_example(self):
        assert 1.0 + 0.99 * 2.0 == pytest.approx(2.98)


class TestLoss:
    def test_perfect_targets_zero_loss(self):
        params = init_params(TINY_NET, 1)
        spatial, extra, actions, rewards = stack_batch([toy_episode(2, 6)])
        out = forward_batch(params, spatial, extra, onehot=True)
        y = np.take_along_axis(out.q, actions[:, :, None], axis=2)[:, :, 0]
        loss = loss_and_gradients(params, spatial, extra, actions, y)
        assert loss == 0.0
        assert all(np.all(p.grad == 0.0) for p in params.arrays.values())

    def test_single_step_unit_error(self):
        params = init_params(TINY_NET, 1)
        for p in params.arrays.values():
            p.value[...] = 0.0
        spatial, extra, actions, _ = stack_batch([toy_episode(3, 1)])
        y = np.ones((1, 1))
        loss = loss_and_gradients(params, spatial, extra, actions, y)
        assert loss == pytest.approx(1.0)

    def test_loss_nonnegative(self):
        params = init_params(TINY_NET, 2)
        spatial, extra, actions, rewards = stack_batch(
            [toy_episode(i, 6) for i in range(3)])
        y = compute_targets(params, spatial, extra, rewards, 0.99)
        assert loss_and_gradients(params, spatial, extra, actions, y) >= 0.0

    def test_regularization_added_to_loss_and_grads(self):
        cfg = NetworkConfig(fc_widths=(6, 6), recurrent_width=6,
                            l1=0.01, l2=0.001)
        params = init_params(cfg, 3)
        spatial, extra, actions, rewards = stack_batch([toy_episode(4, 4)])
        out = forward_batch(params, spatial, extra, onehot=True)
        y = np.take_along_axis(out.q, actions[:, :, None], axis=2)[:, :, 0]
        loss = loss_and_gradients(params, spatial, extra, actions, y)
        wx, wh = params["rec.wx"].value, params["rec.wh"].value
        expected = sum(0.01 * np.abs(w).sum() + 0.001 * (w * w).sum()
                       for w in (wx, wh))
        assert loss == pytest.approx(expected)
        assert np.allclose(params["rec.wx"].grad,
                           0.01 * np.sign(wx) + 0.002 * wx)


class TestEmaUpdate:
    def test_formula(self):
        online = init_params(TINY_NET, 4)
        target = init_params(TINY_NET, 5)
        before = {n: p.value.copy() for n, p in target.arrays.items()}
        ema_update(target, online, 0.001)
        for name, p in target.arrays.items():
            expected = 0.001 * online[name].value + 0.999 * before[name]
            assert np.allclose(p.value, expected, atol=1e-15)

    def test_fixed_point(self):
        online = init_params(TINY_NET, 6)
        target = online.clone()
        ema_update(target, online, 0.5)
        for name in online.names():
            assert np.array_equal(target[name].value, online[name].value)

    def test_geometric_convergence(self):
        online = init_params(TINY_NET, 7)
        target = init_params(TINY_NET, 8)
        name = "fc1.w"
        gap0 = np.abs(target[name].value - online[name].value).max()
        for _ in range(10):
            ema_update(target, online, 0.1)
        gap = np.abs(target[name].value - online[name].value).max()
        assert gap == pytest.approx(gap0 * 0.9 ** 10, rel=1e-9)

    def test_target_between_old_target_and_online(self):
        online = init_params(TINY_NET, 9)
        target = init_params(TINY_NET, 10)
        before = {n: p.value.copy() for n, p in target.arrays.items()}
        ema_update(target, online, 0.3)
        for name, p in target.arrays.items():
            lo = np.minimum(before[name], online[name].value)
            hi = np.maximum(before[name], online[name].value)
            assert np.all(p.value >= lo - 1e-15)
            assert np.all(p.value <= hi + 1e-15)


class TestCheckpointSchedule:
    def test_dense_window_and_stride(self):
        cfg = TrainerConfig(episodes=400, checkpoint_dense_start=33,
                            checkpoint_dense_end=132, checkpoint_every=100)
        eps = checkpoint_episodes(cfg)
        assert 0 in eps and 400 in eps
        assert all(e in eps for e in range(33, 133))
        assert 200 in eps and 300 in eps
        assert 150 not in eps and 20 not in eps


class TestTrainLoop:
    def test_no_updates_during_warmup(self):
        counted = []
        cfg = tiny_trainer(episodes=4, warmup_episodes=3)
        _, _, log = train(TINY_NET, cfg, progress_every=0)
        # 3 warmup episodes produce no losses; episode 4 produces 20 updates
        assert len(log.losses) == cfg.steps_per_episode

    def test_replay_semantics_and_determinism(self):
        cfg = tiny_trainer()
        _, _, log1 = train(TINY_NET, cfg, progress_every=0)
        _, _, log2 = train(TINY_NET, cfg, progress_every=0)
        assert log1.eval_rewards == log2.eval_rewards
        assert log1.losses == log2.losses
        assert log1.eval_epsilons == log2.eval_epsilons

    def test_different_seed_changes_log(self):
        log1 = train(TINY_NET, tiny_trainer(seed=0), progress_every=0)[2]
        log2 = train(TINY_NET, tiny_trainer(seed=1), progress_every=0)[2]
        assert log1.losses != log2.losses

    def test_checkpoint_callback_invoked(self):
        episodes = []

        def cb(episode, online, target, rng_states):
            episodes.append(episode)
            assert set(rng_states) == {"env", "explore", "sample", "eval"}

        cfg = tiny_trainer()
        train(TINY_NET, cfg, checkpoint_callback=cb, progress_every=0)
        assert episodes == sorted(checkpoint_episodes(cfg))

    def test_target_params_stay_between(self):
        cfg = tiny_trainer(episodes=3, warmup_episodes=1)
        online, target, _ = train(TINY_NET, cfg, progress_every=0)
        for name in online.names():
            assert np.isfinite(target[name].value).all()
            assert np.isfinite(online[name].value).all()
