import math

import numpy as np
import pytest

from freqplan.agents.base import EpsilonSchedule, epsilon_greedy, greedy, random_action
from freqplan.agents.dqn import DQNAgent, DQNConfig, huber_grad, td_target
from freqplan.agents.ppo import (PPOAgent, PPOConfig, TrajectoryBatch, clipped_surrogate, gae_advantages,
                                 normalize, ppo_loss_grads)
from freqplan.agents.replay import ReplayBuffer
from freqplan.environment import ActionSpace, StateRepr, reset
from freqplan.errors import ConfigError, ContractError, StateError
from freqplan.nn.policy import PolicyConfig, PolicyNet
from freqplan.scenario import Beam, Scenario


def tiny_net(n_out=4, head="mlp", value=False, seed=0):
    cfg = PolicyConfig(in_channels=1, n_fg=2, n_fs=2, n_outputs=n_out, head=head, with_value_head=value,
                       conv1_filters=3, conv2_filters=3, mlp_units=(8, 8), lstm_units=6)
    return PolicyNet(cfg, rng=np.random.default_rng(seed))


def chi2_uniform_ok(counts, n):
    """Chi-square goodness of fit against uniform at roughly the 0.999 level."""
    k = len(counts)
    e = n / k
    stat = sum((c - e) ** 2 / e for c in counts)
    # Wilson-Hilferty upper quantile for z = 3.09
    df = k - 1
    crit = df * (1 - 2 / (9 * df) + 3.09 * math.sqrt(2 / (9 * df))) ** 3
    return stat < crit


# -- action selection -------------------------------------------------------------

@pytest.mark.parametrize("space,n", [(ActionSpace.GRID, 8), (ActionSpace.TETRIS, 5)])
def test_random_action_uniform(space, n):
    sc = Scenario(2, 4, [Beam(0, 2, (0, 0), 0)])
    st = reset(sc, sc.beams, space, StateRepr(), seed=0)
    rng = np.random.default_rng(1)
    draws = [random_action(st, None, rng) for _ in range(20000)]
    assert set(draws) == set(range(n))
    assert chi2_uniform_ok(np.bincount(draws, minlength=n), len(draws))


def test_random_action_on_finished_episode():
    sc = Scenario(2, 4, [Beam(0, 2, (0, 0), 0)])
    st = reset(sc, sc.beams, ActionSpace.GRID, StateRepr(), seed=0)
    from freqplan.environment import step
    step(st, 0)
    with pytest.raises(StateError):
        random_action(st, None, np.random.default_rng(0))


def test_greedy_tie_breaks_low():
    assert greedy([1.0, 3.0, 3.0, 2.0]) == 1
    assert epsilon_greedy([0.0, 5.0, 5.0], 0.0, np.random.default_rng(0)) == 1


def test_epsilon_greedy_frequencies():
    rng = np.random.default_rng(2)
    q = [0.0, 1.0, 0.5, 0.2]
    n, eps = 40000, 0.3
    counts = np.bincount([epsilon_greedy(q, eps, rng) for _ in range(n)], minlength=4)
    expect = np.full(4, eps / 4)
    expect[1] += 1 - eps
    sigma = np.sqrt(expect * (1 - expect) / n)
    assert np.all(np.abs(counts / n - expect) < 4 * sigma)


def test_epsilon_greedy_contract():
    with pytest.raises(ContractError):
        epsilon_greedy([], 0.1, np.random.default_rng(0))
    with pytest.raises(ContractError):
        epsilon_greedy([1.0], 1.5, np.random.default_rng(0))


def test_epsilon_schedule():
    s = EpsilonSchedule(1.0, 0.05, 0.2, 1000)
    assert s(0) == 1.0
    assert s(100) == pytest.approx(0.525)
    assert s(200) == pytest.approx(0.05)
    assert s(999) == pytest.approx(0.05)


# -- replay ---------------------------------------------------------------------------

def test_replay_fifo_and_terminal_zeroing():
    buf = ReplayBuffer(3, (1,))
    for i in range(5):
        buf.add([i], i, float(i), [i + 10], done=(i == 4))
    assert len(buf) == 3
    assert sorted(buf.actions.tolist()) == [2, 3, 4]
    j = int(np.flatnonzero(buf.actions == 4)[0])
    assert buf.next_states[j, 0] == 0 and buf.dones[j] == 1


def test_replay_sampling_uniform():
    buf = ReplayBuffer(10, (1,))
    for i in range(10):
        buf.add([i], i, 0.0, [i], False)
    idx = buf.sample_indices(50000, np.random.default_rng(3))
    assert chi2_uniform_ok(np.bincount(idx, minlength=10), len(idx))


# -- DQN -------------------------------------------------------------------------------

def test_td_target_examples():
    r = np.array([1.0, 2.0, 0.5])
    next_q = np.array([[0.0, 3.0], [5.0, 1.0], [9.0, 9.0]])
    y = td_target(r, None, np.array([0, 0, 1]), None, 0.1, next_q=next_q)
    np.testing.assert_allclose(y, [1.3, 2.5, 0.5])


def test_td_target_gamma_zero_is_reward():
    y = td_target([4.0, -1.0], None, [0, 0], None, 0.0, next_q=np.ones((2, 3)) * 100)
    np.testing.assert_array_equal(y, [4.0, -1.0])


def test_huber_grad_matches_finite_difference():
    rng = np.random.default_rng(0)
    diff = rng.normal(scale=2.0, size=12)
    loss, g = huber_grad(diff, 1.0)
    h = 1e-6
    for i in range(diff.size):
        d = diff.copy()
        d[i] += h
        up = huber_grad(d, 1.0)[0]
        d[i] -= 2 * h
        down = huber_grad(d, 1.0)[0]
        assert (up - down) / (2 * h) == pytest.approx(g[i], abs=1e-6)
    assert huber_grad(np.array([3.0]), 1.0)[0] == 2.5


def dqn_batch(rng, n=32):
    s = rng.normal(size=(n, 1, 2, 2)).astype(np.float32)
    a = rng.integers(4, size=n)
    r = rng.normal(size=n).astype(np.float32)
    s2 = rng.normal(size=(n, 1, 2, 2)).astype(np.float32)
    d = (rng.random(n) < 0.5).astype(np.float32)
    return s, a, r, s2, d


def test_dqn_lr_zero_leaves_weights():
    net = tiny_net()
    agent = DQNAgent(net, DQNConfig(lr=0.0, batch_size=8), 100, np.random.default_rng(0))
    before = {k: v.copy() for k, v in net.params.items()}
    agent.learn_step(dqn_batch(np.random.default_rng(1), 8))
    for k in before:
        np.testing.assert_array_equal(net.params[k], before[k])


def test_dqn_loss_decreases_on_fixed_batch():
    net = tiny_net()
    agent = DQNAgent(net, DQNConfig(lr=1e-2, gamma=0.1), 100, np.random.default_rng(0))
    batch = dqn_batch(np.random.default_rng(2))
    first = agent.learn_step(batch)
    for _ in range(150):
        last = agent.learn_step(batch)
    assert last < 0.5 * first


def test_dqn_target_sync_cadence():
    net = tiny_net()
    cfg = DQNConfig(lr=1e-2, batch_size=4, learning_starts=4, train_every=1, target_sync=10)
    agent = DQNAgent(net, cfg, 1000, np.random.default_rng(0))
    rng = np.random.default_rng(5)
    frozen = agent.target.params["out.w"].copy()
    for i in range(9):
        agent.observe(rng.normal(size=(1, 2, 2)), int(rng.integers(4)), 1.0, rng.normal(size=(1, 2, 2)), False)
    np.testing.assert_array_equal(agent.target.params["out.w"], frozen)
    assert not np.array_equal(agent.online.params["out.w"], frozen)
    agent.observe(rng.normal(size=(1, 2, 2)), 0, 1.0, None, True)
    np.testing.assert_array_equal(agent.target.params["out.w"], agent.online.params["out.w"])


def test_dqn_learns_two_state_chain():
    # state A: action 1 pays 1, action 0 pays 0; state B: the reverse. One-step episodes.
    A = np.zeros((1, 2, 2), dtype=np.float32)
    A[0, 0, 0] = 1
    B = np.zeros((1, 2, 2), dtype=np.float32)
    B[0, 1, 1] = 1
    net = tiny_net(n_out=2)
    cfg = DQNConfig(lr=3e-3, batch_size=16, learning_starts=16, train_every=1, target_sync=50, gamma=0.5)
    agent = DQNAgent(net, cfg, 1500, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    for _ in range(1500):
        s, best = (A, 1) if rng.random() < 0.5 else (B, 0)
        a = agent.act(s[None])[0]
        agent.observe(s, a, float(a == best), None, True)
    assert agent.act(A[None], explore=False) == [1]
    assert agent.act(B[None], explore=False) == [0]
    q = net.forward(np.stack([A, B]))[0]
    np.testing.assert_allclose([q[0, 1], q[1, 0]], 1.0, atol=0.15)
    np.testing.assert_allclose([q[0, 0], q[1, 1]], 0.0, atol=0.15)


def test_dqn_config_validation():
    with pytest.raises(ConfigError):
        DQNConfig(gamma=1.5).validate()
    with pytest.raises(ConfigError):
        DQNConfig(batch_size=0).validate()


# -- PPO --------------------------------------------------------------------------------

def test_gae_lambda_zero_is_td_error():
    rng = np.random.default_rng(0)
    r, v = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    d = np.zeros((5, 2))
    d[2, 0] = 1
    boot = rng.normal(size=2)
    adv, ret = gae_advantages(r, v, d, boot, 0.9, 0.0)
    nxt = np.vstack([v[1:], boot[None]])
    np.testing.assert_allclose(adv, r + 0.9 * nxt * (1 - d) - v)
    np.testing.assert_allclose(ret, adv + v)


def test_gae_lambda_one_is_discounted_return():
    rng = np.random.default_rng(1)
    T = 6
    r, v = rng.normal(size=(T, 1)), rng.normal(size=(T, 1))
    d = np.zeros((T, 1))
    d[3, 0] = 1
    boot = np.array([2.0])
    g = 0.8
    _, ret = gae_advantages(r, v, d, boot, g, 1.0)
    expect = np.zeros(T)
    acc = boot[0]
    for t in reversed(range(T)):
        acc = r[t, 0] + g * acc * (1 - d[t, 0])
        expect[t] = acc
    np.testing.assert_allclose(ret[:, 0], expect)


def test_gae_invalid_tail_is_zeroed():
    r, v = np.ones((4, 1)), np.zeros((4, 1))
    valid = np.array([[True], [True], [False], [False]])
    adv, _ = gae_advantages(r, v, np.zeros((4, 1)), np.array([5.0]), 0.5, 1.0, valid)
    np.testing.assert_allclose(adv[:, 0], [1.5, 1.0, 0.0, 0.0])


def test_normalize_respects_mask():
    adv = np.array([[1.0, 3.0], [5.0, 100.0]])
    valid = np.array([[True, True], [True, False]])
    out = normalize(adv, valid)
    assert out[1, 1] == 0.0
    assert out[valid].mean() == pytest.approx(0.0, abs=1e-12)


def test_clipped_surrogate_examples():
    obj, d = clipped_surrogate(np.array([1.5, 0.5, 1.1, 0.5]), np.array([1.0, 1.0, -1.0, -1.0]), 0.2)
    np.testing.assert_allclose(obj, [1.2, 0.5, -1.1, -0.8])
    np.testing.assert_allclose(d, [0.0, 1.0, -1.0, 0.0])


def test_ppo_loss_gradients_match_finite_difference():
    rng = np.random.default_rng(4)
    n, k = 6, 4
    logits = rng.normal(size=(n, k))
    values = rng.normal(size=n)
    actions = rng.integers(k, size=n)
    old = np.log(rng.uniform(0.15, 0.35, size=n))
    adv, ret = rng.normal(size=n), rng.normal(size=n)
    w = np.array([1, 1, 0, 1, 1, 1], dtype=float)
    cfg = PPOConfig(clip=0.2, ent_coef=0.05, vf_coef=0.7)
    _, dl, dv, _ = ppo_loss_grads(logits, values, actions, old, adv, ret, cfg, w)
    f = lambda: ppo_loss_grads(logits, values, actions, old, adv, ret, cfg, w)[0]
    h = 1e-6
    for arr, grad in ((logits, dl), (values, dv)):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old_v = arr[i]
            arr[i] = old_v + h
            up = f()
            arr[i] = old_v - h
            down = f()
            arr[i] = old_v
            assert (up - down) / (2 * h) == pytest.approx(grad[i], abs=1e-6)
    assert np.all(dl[2] == 0) and dv[2] == 0


def ppo_traj(rng, T=6, E=2, n_out=4, recurrent=False):
    shape = (T, E, 1, 2, 2)
    starts = np.zeros((T, E), dtype=bool)
    starts[0] = True
    hidden0 = (np.zeros((E, 6), np.float32), np.zeros((E, 6), np.float32)) if recurrent else None
    return TrajectoryBatch(
        states=rng.normal(size=shape).astype(np.float32),
        actions=rng.integers(n_out, size=(T, E)),
        logps=np.full((T, E), np.log(1 / n_out)),
        values=np.zeros((T, E)),
        rewards=rng.normal(size=(T, E)),
        dones=np.zeros((T, E)),
        starts=starts,
        bootstrap=np.zeros(E),
        hidden0=hidden0,
    )


@pytest.mark.parametrize("head", ["mlp", "lstm"])
def test_ppo_update_deterministic(head):
    def run():
        net = tiny_net(head=head, value=True, seed=3)
        agent = PPOAgent(net, PPOConfig(epochs=2, n_minibatches=2), np.random.default_rng(9))
        stats = agent.update(ppo_traj(np.random.default_rng(1), recurrent=head == "lstm"))
        return stats, net.params
    (s1, p1), (s2, p2) = run(), run()
    assert s1 == s2
    for k in p1:
        np.testing.assert_array_equal(p1[k], p2[k])


def test_ppo_needs_value_head():
    with pytest.raises(ConfigError):
        PPOAgent(tiny_net(), PPOConfig(), np.random.default_rng(0))


def test_ppo_act_sampling_matches_softmax():
    net = tiny_net(value=True)
    net.params["out.w"] *= 0
    net.params["out.b"][:] = np.log([0.1, 0.2, 0.3, 0.4])
    agent = PPOAgent(net, PPOConfig(), np.random.default_rng(0))
    s = np.zeros((4000, 1, 2, 2), dtype=np.float32)
    actions, logp, _, _ = agent.act(s)
    freq = np.bincount(actions, minlength=4) / 4000
    np.testing.assert_allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.03)
    np.testing.assert_allclose(np.exp(logp), np.array([0.1, 0.2, 0.3, 0.4])[actions], rtol=1e-5)


def test_advantage_normalization_stats():
    adv = np.random.default_rng(0).normal(3.0, 7.0, size=(16, 4))
    out = normalize(adv)
    assert abs(out.mean()) <= 1e-6
    assert abs(out.std() - 1) <= 1e-4


def test_epsilon_schedule_monotone():
    s = EpsilonSchedule(1.0, 0.05, 0.2, 5000)
    vals = [s(t) for t in range(0, 5001, 7)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_target_staleness_bounded():
    net = tiny_net()
    cfg = DQNConfig(batch_size=4, learning_starts=4, train_every=1, target_sync=7)
    agent = DQNAgent(net, cfg, 1000, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    for _ in range(60):
        agent.observe(rng.normal(size=(1, 2, 2)), int(rng.integers(4)), 0.5, rng.normal(size=(1, 2, 2)), False)
        assert agent.env_steps - agent.last_sync < cfg.target_sync
