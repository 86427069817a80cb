"""Proximal policy optimization with clipped probability ratios and GAE."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from freqplan.errors import ConfigError, NumericError
from freqplan.nn import layers as L
from freqplan.nn.optim import Adam, clip_grad_norm
from freqplan.nn.policy import PolicyNet


@dataclass
class PPOConfig:
    gamma: float = 0.1
    lam: float = 0.95
    clip: float = 0.2
    epochs: int = 4
    n_minibatches: int = 4
    vf_coef: float = 0.5
    ent_coef: float = 0.01
    horizon: int = 128
    lr: float = 2.5e-4
    max_grad_norm: float | None = None

    def validate(self) -> None:
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0 < self.clip < 1:
            raise ConfigError(f"clip must be in (0, 1), got {self.clip}")
        if not 0 <= self.lam <= 1:
            raise ConfigError(f"lam must be in [0, 1], got {self.lam}")
        if self.epochs < 1 or self.n_minibatches < 1 or self.horizon < 1:
            raise ConfigError("epochs, n_minibatches and horizon must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrajectoryBatch:
    """Rollout of ``T`` steps from ``E`` environments; arrays are (T, E, ...).

    ``starts[t, e]`` marks that an episode began at step ``t`` (recurrent state
    reset there); ``dones[t, e]`` marks that step ``t`` ended an episode.
    """

    states: np.ndarray
    actions: np.ndarray
    logps: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    starts: np.ndarray
    bootstrap: np.ndarray           # value of the state after the last step, (E,)
    hidden0: tuple | None = None    # recurrent state at segment start, ((E, H), (E, H))
    valid: np.ndarray | None = None  # (T, E); False for tail steps an exhausted budget skipped

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]


def gae_advantages(rewards, values, dones, bootstrap, gamma: float, lam: float, valid=None):
    """Generalized advantage estimates and returns, computed backwards in time.

    rewards, values, dones: (T, E); bootstrap: (E,). Invalid entries (only ever
    a trailing run per stream) get zero advantage, and the step before them
    bootstraps from their value. Returns (advantages, returns).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1:])
    next_value = np.asarray(bootstrap, dtype=np.float64)
    for t in reversed(range(T)):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        last = delta + gamma * lam * live * last
        if valid is not None:
            last = np.where(valid[t], last, 0.0)
        adv[t] = last
        next_value = values[t]
    return adv, adv + values


def normalize(adv: np.ndarray, valid=None) -> np.ndarray:
    sel = adv if valid is None else adv[valid]
    if sel.size < 2:
        return adv - sel.mean()
    out = (adv - sel.mean()) / (sel.std() + 1e-8)
    return out if valid is None else np.where(valid, out, 0.0)


def clipped_surrogate(ratio, adv, clip: float):
    """Per-sample ``min(r*A, clip(r, 1-c, 1+c)*A)`` and its derivative in ``r``."""
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1 - clip, 1 + clip) * adv
    obj = np.minimum(unclipped, clipped)
    dratio = np.where(unclipped <= clipped, adv, 0.0)
    return obj, dratio


def ppo_loss_grads(logits, values, actions, old_logp, adv, returns, cfg: PPOConfig, weights=None):
    """Loss (to minimize) and gradients w.r.t. logits and values for one minibatch.

    ``weights`` (0/1 per sample) drops samples from every term.
    """
    w = np.ones(len(actions)) if weights is None else np.asarray(weights, dtype=np.float64)
    n = max(w.sum(), 1.0)
    logp_all = L.log_softmax(logits.astype(np.float64))
    p = np.exp(logp_all)
    rows = np.arange(len(actions))
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_logp)
    obj, dratio = clipped_surrogate(ratio, adv, cfg.clip)
    entropy = -(p * logp_all).sum(axis=1)
    v = values.astype(np.float64)
    mean = lambda a: float((w * a).sum() / n)
    vloss = 0.5 * mean((v - returns) ** 2)
    loss = -mean(obj) + cfg.vf_coef * vloss - cfg.ent_coef * mean(entropy)
    if not np.isfinite(loss):
        raise NumericError("non-finite PPO loss")

    dlogp = -w * dratio * ratio / n
    onehot = np.zeros_like(p)
    onehot[rows, actions] = 1.0
    dlogits = dlogp[:, None] * (onehot - p)
    # d(entropy)/d(logits) = -p * (log p + H)
    dlogits += (cfg.ent_coef * w / n)[:, None] * p * (logp_all + entropy[:, None])
    dvalues = cfg.vf_coef * w * (v - returns) / n
    stats = {
        "loss": float(loss),
        "policy": -mean(obj),
        "value": vloss,
        "entropy": mean(entropy),
        "clipfrac": mean(np.abs(ratio - 1) > cfg.clip),
        "approx_kl": mean(old_logp - logp),
    }
    return loss, dlogits.astype(logits.dtype), dvalues.astype(logits.dtype), stats


class PPOAgent:
    def __init__(self, net: PolicyNet, cfg: PPOConfig, rng: np.random.Generator):
        cfg.validate()
        if not net.cfg.with_value_head:
            raise ConfigError("PPO needs a policy with a value head")
        self.cfg = cfg
        self.net = net
        self.opt = Adam(net.params, lr=cfg.lr)
        self.rng = rng

    def evaluate(self, states, hidden=None):
        """Logits and values for a batch of single-step states (E, C, H, W)."""
        if self.net.recurrent:
            out, val, hidden, _ = self.net.forward(states[None], hidden)
            return out[0], val[0], hidden
        out, val, _, _ = self.net.forward(states)
        return out, val, None

    def act(self, states, hidden=None, explore: bool = True):
        """Returns (actions, log-probabilities, values, hidden')."""
        logits, values, hidden = self.evaluate(states, hidden)
        logp_all = L.log_softmax(logits.astype(np.float64))
        if explore:
            u = self.rng.random(len(logits))
            cdf = np.cumsum(np.exp(logp_all), axis=1)
            actions = np.minimum((cdf < u[:, None]).sum(axis=1), logits.shape[1] - 1)
        else:
            actions = logits.argmax(axis=1)
        return actions.astype(np.int64), logp_all[np.arange(len(actions)), actions], values, hidden

    def update(self, traj: TrajectoryBatch) -> dict:
        """Several epochs of clipped-surrogate minibatch updates over one rollout."""
        cfg = self.cfg
        valid = traj.valid
        adv, returns = gae_advantages(traj.rewards, traj.values, traj.dones, traj.bootstrap,
                                      cfg.gamma, cfg.lam, valid)
        adv = normalize(adv, valid)
        T, E = traj.rewards.shape
        if valid is None:
            valid = np.ones((T, E), dtype=bool)
        history = []
        for _ in range(cfg.epochs):
            if self.net.recurrent:
                # minibatches are whole environment streams so BPTT sees contiguous segments
                order = self.rng.permutation(E)
                for envs in np.array_split(order, min(cfg.n_minibatches, E)):
                    history.append(self._step_recurrent(traj, envs, adv, returns, valid))
            else:
                order = self.rng.permutation(np.flatnonzero(valid.reshape(-1)))
                flat = lambda a: a.reshape((T * E,) + a.shape[2:])
                S, A, LP = flat(traj.states), flat(traj.actions), flat(traj.logps)
                ADV, RET = adv.reshape(-1), returns.reshape(-1)
                for idx in np.array_split(order, min(cfg.n_minibatches, len(order))):
                    logits, values, _, cache = self.net.forward(S[idx])
                    _, dl, dv, stats = ppo_loss_grads(logits, values, A[idx], LP[idx],
                                                      ADV[idx], RET[idx], cfg)
                    self._apply(self.net.backward(dl, dv, cache))
                    history.append(stats)
        return {k: float(np.mean([h[k] for h in history])) for k in history[0]}

    def _step_recurrent(self, traj, envs, adv, returns, valid):
        h0 = (traj.hidden0[0][envs], traj.hidden0[1][envs])
        logits, values, _, cache = self.net.forward(traj.states[:, envs], h0, traj.starts[:, envs])
        T, n = logits.shape[:2]
        _, dl, dv, stats = ppo_loss_grads(
            logits.reshape(T * n, -1), values.reshape(-1), traj.actions[:, envs].reshape(-1),
            traj.logps[:, envs].reshape(-1), adv[:, envs].reshape(-1),
            returns[:, envs].reshape(-1), self.cfg, valid[:, envs].reshape(-1))
        self._apply(self.net.backward(dl.reshape(T, n, -1), dv.reshape(T, n), cache))
        return stats

    def _apply(self, grads):
        if self.cfg.max_grad_norm:
            clip_grad_norm(grads, self.cfg.max_grad_norm)
        self.opt.step(self.net.params, grads)


def ppo_update(agent: PPOAgent, traj: TrajectoryBatch) -> dict:
    return agent.update(traj)
