"""Experiment orchestration: training, evaluation, sweeps, non-stationarity studies.

All randomness flows from a master seed through ``numpy.random.SeedSequence``;
two runs with the same config write byte-identical metrics and tables unless
wall-clock recording is switched on.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from freqplan.agents import DQNAgent, DQNConfig, PPOAgent, PPOConfig, TrajectoryBatch, greedy
from freqplan.environment import (ActionSpace, EpisodeState, Move, RewardKind, StateRepr, build_state,
                                  export_plan, n_actions, reset, step)
from freqplan.errors import ConfigError, FreqPlanError, NumericError
from freqplan.nn import PolicyConfig, PolicyNet, load_checkpoint, save_checkpoint
from freqplan.scenario import Beam, Scenario, load_scenario, sample_episode, scale_bandwidth, split_pool
from freqplan.stats import welch_t_test

log = logging.getLogger(__name__)

METRICS_HEADER = ["step", "episodes", "mean_B", "loss", "epsilon", "wallclock_ms"]
AGENTS = ("random", "dqn", "ppo")
HEADS = ("mlp", "lstm")


def default_move_cap(n_fg: int, n_fs: int) -> int:
    return 4 * (n_fg + n_fs)


@dataclass
class ExperimentConfig:
    scenario: str = ""
    action: str = "grid"
    lookahead: bool = True
    reward: str = "each"
    gamma: float = 0.1
    agent: str = "dqn"
    head: str = "mlp"
    train_beams: int = 100
    test_beams: int = 100
    timesteps: int = 50_000
    n_envs: int = 8
    seed: int = 0
    test_fraction: float = 0.5
    split_seed: int = 0
    eval_episodes: int = 1
    move_cap: int | str | None = "auto"
    metrics_every: int = 1000
    record_timing: bool = False
    agent_config: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {AGENTS}, got {self.agent!r}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.head == "lstm" and self.agent != "ppo":
            raise ConfigError("an LSTM head is only supported with PPO (lstm requires agent=ppo)")
        ActionSpace(self.action)
        RewardKind(self.reward)
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.timesteps < 0:
            raise ConfigError(f"timesteps must be >= 0, got {self.timesteps}")
        if self.n_envs < 1 or self.train_beams < 1 or self.test_beams < 1:
            raise ConfigError("n_envs, train_beams and test_beams must be positive")
        if self.metrics_every < 1:
            raise ConfigError("metrics_every must be positive")
        if not (self.move_cap is None or self.move_cap == "auto"
                or (isinstance(self.move_cap, int) and self.move_cap >= 0)):
            raise ConfigError(f"move_cap must be 'auto', null or a non-negative integer, got {self.move_cap!r}")

    @property
    def space(self) -> ActionSpace:
        return ActionSpace(self.action)

    @property
    def repr(self) -> StateRepr:
        return StateRepr(lookahead=self.lookahead)

    def resolved_move_cap(self, sc: Scenario) -> int | None:
        if self.space is not ActionSpace.TETRIS or self.move_cap is None:
            return None
        return default_move_cap(sc.n_fg, sc.n_fs) if self.move_cap == "auto" else int(self.move_cap)

    def agent_settings(self):
        """The DQN or PPO config with gamma taken from the experiment."""
        overrides = dict(self.agent_config)
        overrides["gamma"] = self.gamma
        cls = DQNConfig if self.agent == "dqn" else PPOConfig
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown {self.agent} settings: {sorted(unknown)}")
        return cls(**overrides)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class Problem:
    """A loaded scenario with its disjoint train/test beam pools."""

    scenario: Scenario
    train: list[Beam]
    test: list[Beam]

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, scenario: Scenario | None = None) -> "Problem":
        sc = scenario if scenario is not None else load_scenario(cfg.scenario)
        train, test = split_pool(sc.beams, cfg.test_fraction, cfg.split_seed)
        return cls(sc, train, test)


def policy_config_for(cfg: ExperimentConfig, sc: Scenario) -> PolicyConfig:
    return PolicyConfig(
        in_channels=cfg.repr.channels(cfg.space), n_fg=sc.n_fg, n_fs=sc.n_fs,
        n_outputs=n_actions(cfg.space, sc.n_fg, sc.n_fs), head=cfg.head,
        with_value_head=cfg.agent == "ppo",
    )


class EnvStream:
    """One environment worker: draws a fresh episode from its pool on every reset."""

    def __init__(self, problem: Problem, pool: Sequence[Beam], n_beams: int, space, repr,
                 move_cap: int | None, seed_seq: np.random.SeedSequence):
        self.problem = problem
        self.pool = pool
        self.n_beams = n_beams
        self.space, self.repr, self.move_cap = ActionSpace(space), repr, move_cap
        self.rng = np.random.default_rng(seed_seq)
        self.st: EpisodeState | None = None
        self.new_episode()

    def new_episode(self) -> EpisodeState:
        beams = sample_episode(self.pool, self.n_beams, self.rng)
        self.st = reset(self.problem.scenario, beams, self.space, self.repr,
                        int(self.rng.integers(2**63)), move_cap=self.move_cap)
        return self.st

    def observe(self) -> np.ndarray:
        return build_state(self.st)


@dataclass
class MetricsLog:
    record_timing: bool = False
    rows: list[dict] = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter)
    _Bs: list[int] = field(default_factory=list)
    _losses: list[float] = field(default_factory=list)
    episodes: int = 0

    def episode(self, B: int) -> None:
        self._Bs.append(B)
        self.episodes += 1

    def loss(self, value: float | None) -> None:
        if value is not None:
            self._losses.append(value)

    def emit(self, step: int, epsilon: float | None) -> None:
        fmt = lambda v: "" if v is None else repr(float(v))
        self.rows.append({
            "step": step,
            "episodes": self.episodes,
            "mean_B": fmt(np.mean(self._Bs) if self._Bs else None),
            "loss": fmt(np.mean(self._losses) if self._losses else None),
            "epsilon": fmt(epsilon),
            "wallclock_ms": (f"{(time.perf_counter() - self._t0) * 1e3:.1f}" if self.record_timing else ""),
        })
        self._Bs.clear()
        self._losses.clear()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=METRICS_HEADER, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


@dataclass
class TrainResult:
    config: ExperimentConfig
    net: PolicyNet | None
    metrics: MetricsLog
    checkpoint: Path | None = None
    metrics_path: Path | None = None
    error: str | None = None


def _make_streams(cfg: ExperimentConfig, problem: Problem, seed_seqs) -> list[EnvStream]:
    cap = cfg.resolved_move_cap(problem.scenario)
    return [EnvStream(problem, problem.train, cfg.train_beams, cfg.space, cfg.repr, cap, ss)
            for ss in seed_seqs]


def train(cfg: ExperimentConfig, out_dir=None, problem: Problem | None = None) -> TrainResult:
    """Run the configured agent for exactly ``cfg.timesteps`` environment steps summed over envs.

    Writes ``metrics.csv`` and (for learning agents) ``policy.ckpt`` into ``out_dir``
    when given. A numeric failure stops training; the checkpoint then holds the
    parameters from the last metrics row.
    """
    cfg.validate()
    problem = problem or Problem.from_config(cfg)
    sc = problem.scenario
    if cfg.train_beams > len(problem.train):
        raise ConfigError(f"train pool has {len(problem.train)} beams, fewer than train_beams={cfg.train_beams}")
    net_ss, agent_ss, env_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    streams = _make_streams(cfg, problem, env_ss.spawn(cfg.n_envs))
    metrics = MetricsLog(cfg.record_timing)
    net = None
    if cfg.agent != "random":
        net = PolicyNet(policy_config_for(cfg, sc), rng=np.random.default_rng(net_ss))
    snapshot = None if net is None else net.copy()
    error = None
    try:
        if cfg.agent == "random":
            _train_random(cfg, streams, metrics, np.random.default_rng(agent_ss))
        elif cfg.agent == "dqn":
            agent = DQNAgent(net, cfg.agent_settings(), max(cfg.timesteps, 1), np.random.default_rng(agent_ss))
            snapshot = _train_dqn(cfg, streams, metrics, agent, snapshot)
        else:
            agent = PPOAgent(net, cfg.agent_settings(), np.random.default_rng(agent_ss))
            snapshot = _train_ppo(cfg, streams, metrics, agent, snapshot)
    except NumericError as e:
        error = str(e)
        log.error("training aborted: %s; keeping the last good parameters", e)
        net = snapshot
    result = TrainResult(cfg, net, metrics, error=error)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.metrics_path = out / "metrics.csv"
        result.metrics_path.write_text(metrics.to_csv(), encoding="utf-8")
        if net is not None:
            result.checkpoint = out / "policy.ckpt"
            save_checkpoint(result.checkpoint, net, checkpoint_extra(cfg))
    if error is not None:
        raise NumericError(f"{error} (last good checkpoint: {result.checkpoint})")
    return result


def checkpoint_extra(cfg: ExperimentConfig) -> dict:
    return {"action": cfg.action, "lookahead": cfg.lookahead, "agent": cfg.agent,
            "reward": cfg.reward, "gamma": cfg.gamma, "move_cap": cfg.move_cap,
            "test_fraction": cfg.test_fraction, "split_seed": cfg.split_seed,
            "test_beams": cfg.test_beams}


class _Budget:
    """Tracks summed environment steps and emits a metrics row every ``every`` steps."""

    def __init__(self, total: int, every: int, metrics: MetricsLog):
        self.total, self.every, self.metrics = total, every, metrics
        self.steps = 0

    @property
    def remaining(self) -> int:
        return self.total - self.steps

    def tick(self, epsilon=None) -> bool:
        self.steps += 1
        if self.steps % self.every == 0:
            self.metrics.emit(self.steps, epsilon)
            return True
        return False

    def close(self, epsilon=None) -> None:
        if self.steps % self.every or not self.metrics.rows:
            self.metrics.emit(self.steps, epsilon)


def _train_random(cfg, streams, metrics, rng):
    budget = _Budget(cfg.timesteps, cfg.metrics_every, metrics)
    reward = RewardKind(cfg.reward)
    while budget.remaining > 0:
        for env in streams[:budget.remaining]:
            st = env.st
            res = step(st, int(rng.integers(n_actions(st.space, st.scenario.n_fg, st.scenario.n_fs))), reward)
            if res.done:
                metrics.episode(res.B)
                env.new_episode()
            budget.tick()
    budget.close()


def _train_dqn(cfg, streams, metrics, agent: DQNAgent, snapshot):
    budget = _Budget(cfg.timesteps, cfg.metrics_every, metrics)
    reward = RewardKind(cfg.reward)
    obs = np.stack([env.observe() for env in streams])
    while budget.remaining > 0:
        m = min(len(streams), budget.remaining)
        actions = agent.act(obs[:m])
        for i in range(m):
            env = streams[i]
            res = step(env.st, actions[i], reward)
            nxt = None if res.done else env.observe()
            metrics.loss(agent.observe(obs[i], actions[i], res.reward, nxt, res.done))
            if res.done:
                metrics.episode(res.B)
                env.new_episode()
                nxt = env.observe()
            obs[i] = nxt
            if budget.tick(agent.epsilon):
                snapshot = agent.online.copy()
    budget.close(agent.epsilon)
    return snapshot


def _train_ppo(cfg, streams, metrics, agent: PPOAgent, snapshot):
    budget = _Budget(cfg.timesteps, cfg.metrics_every, metrics)
    reward = RewardKind(cfg.reward)
    E = len(streams)
    H = agent.cfg.horizon
    obs = np.stack([env.observe() for env in streams])
    hidden = agent.net.initial_hidden(E) if agent.net.recurrent else None
    starts = np.ones(E, dtype=bool)
    while budget.remaining > 0:
        T = min(H, -(-budget.remaining // E))
        S = np.zeros((T,) + obs.shape, dtype=np.float32)
        A = np.zeros((T, E), dtype=np.int64)
        LP, V, R = (np.zeros((T, E)) for _ in range(3))
        D, ST = np.zeros((T, E), dtype=bool), np.zeros((T, E), dtype=bool)
        valid = np.zeros((T, E), dtype=bool)
        hidden0 = None if hidden is None else (hidden[0].copy(), hidden[1].copy())
        for t in range(T):
            if hidden is not None:
                keep = (~starts)[:, None].astype(hidden[0].dtype)
                hidden = (hidden[0] * keep, hidden[1] * keep)
            a, lp, v, hidden = agent.act(obs, hidden)
            S[t], A[t], LP[t], V[t], ST[t] = obs, a, lp, v, starts
            m = min(E, budget.remaining)
            starts = np.zeros(E, dtype=bool)
            for i in range(m):
                env = streams[i]
                res = step(env.st, int(a[i]), reward)
                R[t, i], D[t, i], valid[t, i] = res.reward, res.done, True
                if res.done:
                    metrics.episode(res.B)
                    env.new_episode()
                    starts[i] = True
                obs[i] = env.observe()
                if budget.tick():
                    snapshot = agent.net.copy()
            if m < E:
                # unstepped streams keep their state; their next act must not reset hidden
                starts[m:] = ST[t, m:]
        _, boot, _ = agent.evaluate(obs, None if hidden is None else
                                    tuple(h * (~starts)[:, None] for h in hidden))
        traj = TrajectoryBatch(S, A, LP, V, R, D.astype(np.float64), ST, boot.astype(np.float64),
                               hidden0, None if valid.all() else valid)
        metrics.loss(agent.update(traj)["loss"])
    budget.close()
    return snapshot


# -- evaluation ---------------------------------------------------------------

@dataclass
class EvalReport:
    counts: list[int]
    n_envs: int
    episodes: int
    n_beams: int
    seconds_per_decision: float = 0.0
    plan: list[dict] | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def std(self) -> float:
        return float(np.std(self.counts))

    def stream_means(self) -> list[float]:
        c = np.asarray(self.counts, dtype=float).reshape(self.n_envs, self.episodes)
        return c.mean(axis=1).tolist()

    def to_dict(self, timing: bool = False) -> dict:
        d = {"n_beams": self.n_beams, "n_envs": self.n_envs, "episodes": self.episodes,
             "counts": list(self.counts), "mean": self.mean, "std": self.std}
        if timing:
            d["seconds_per_decision"] = self.seconds_per_decision
        return d


@dataclass
class Policy:
    """What an evaluator needs: a network (or None for uniform random) plus its env settings."""

    net: PolicyNet | None
    action: str
    lookahead: bool
    move_cap: int | str | None = "auto"

    @classmethod
    def random(cls, action: str, lookahead: bool = False, move_cap="auto") -> "Policy":
        return cls(None, action, lookahead, move_cap)

    @classmethod
    def from_checkpoint(cls, path) -> "Policy":
        net, extra = load_checkpoint(path)
        return cls(net, extra["action"], bool(extra["lookahead"]), extra.get("move_cap", "auto"))

    @classmethod
    def from_training(cls, result: TrainResult) -> "Policy":
        c = result.config
        return cls(result.net, c.action, c.lookahead, c.move_cap)


def evaluate(policy: Policy, scenario: Scenario, pool: Sequence[Beam], n_beams: int,
             episodes: int = 1, seed: int = 0, n_envs: int = 8, capture_plan: bool = False) -> EvalReport:
    """Greedy (or uniform random) rollouts over ``n_envs`` independently seeded streams.

    Stream ``i`` draws its episodes and reset seeds from ``SeedSequence([seed, i])``.
    Counts are ordered stream-major.

    A greedy feed-forward policy in the tetris space sees the same observation
    whenever the tentative placement repeats within a beam, so from then on it
    cycles. The beam is then placed where the cycle would stand when the move
    cap forces NEW (or at the repeated spot when there is no cap) without
    running the remaining forward passes.
    """
    if n_beams > len(pool):
        raise ConfigError(f"test pool has {len(pool)} beams, fewer than n_beams={n_beams}")
    space = ActionSpace(policy.action)
    repr = StateRepr(lookahead=policy.lookahead)
    cap = None
    if space is ActionSpace.TETRIS and policy.move_cap is not None:
        cap = default_move_cap(scenario.n_fg, scenario.n_fs) if policy.move_cap == "auto" else int(policy.move_cap)
    problem = Problem(scenario, [], list(pool))
    streams = [EnvStream(problem, pool, n_beams, space, repr, cap, np.random.SeedSequence([seed, i]))
               for i in range(n_envs)]
    act_rngs = [np.random.default_rng([seed, i, 1]) for i in range(n_envs)]
    net = policy.net
    n_out = n_actions(space, scenario.n_fg, scenario.n_fs)
    if net is not None and net.cfg.n_outputs != n_out:
        raise ConfigError(f"policy has {net.cfg.n_outputs} outputs but the {space.value} space needs {n_out}")
    hidden = net.initial_hidden(n_envs) if net is not None and net.recurrent else None
    shortcut = net is not None and not net.recurrent and space is ActionSpace.TETRIS
    trails: list[list] = [[] for _ in range(n_envs)]
    counts: list[list[int]] = [[] for _ in range(n_envs)]
    plan = None
    decisions = 0

    def finish(i: int, res) -> bool:
        """Book a finished episode; True if stream ``i`` has more to run."""
        nonlocal plan
        counts[i].append(res.B)
        if capture_plan and plan is None and i == 0:
            plan = export_plan(streams[i].st)
        if hidden is not None:
            hidden[0][i] = 0.0
            hidden[1][i] = 0.0
        if len(counts[i]) < episodes:
            streams[i].new_episode()
            return True
        return False

    def settle(i: int) -> bool:
        """Fast-forward cycling beams of stream ``i``; True if it needs a decision."""
        while True:
            st, trail = streams[i].st, trails[i]
            p = st.tentative
            if p not in trail:
                trail.append(p)
                return True
            first = trail.index(p)
            if cap is not None:
                # trail[k] is the placement after k moves, all distinct before the repeat
                st.tentative = trail[first + (cap - first) % (len(trail) - first)]
                st.moves_this_beam = cap
            res = step(st, Move.NEW, RewardKind.EACH)
            trail.clear()
            if res.done and not finish(i, res):
                return False

    t0 = time.perf_counter()
    active = list(range(n_envs))
    while active:
        if shortcut:
            active = [i for i in active if settle(i)]
            if not active:
                break
        if net is None:
            actions = [int(act_rngs[i].integers(n_out)) for i in active]
        else:
            obs = np.stack([streams[i].observe() for i in active])
            if net.recurrent:
                h = (hidden[0][active], hidden[1][active])
                out, _, (h1, c1), _ = net.forward(obs[None], h)
                hidden[0][active], hidden[1][active] = h1, c1
                out = out[0]
            else:
                out = net.forward(obs)[0]
            actions = [greedy(row) for row in out]
        still = []
        for i, a in zip(active, actions):
            res = step(streams[i].st, a, RewardKind.EACH)
            decisions += 1
            if res.assigned:
                trails[i].clear()
            if not res.done or finish(i, res):
                still.append(i)
        active = still
    elapsed = time.perf_counter() - t0
    return EvalReport([c for cs in counts for c in cs], n_envs, episodes, n_beams,
                      elapsed / max(decisions, 1), plan)


# -- sweeps ---------------------------------------------------------------------

SWEEP_AXES = ("action", "lookahead", "reward", "gamma", "train_beams", "agent", "head")


@dataclass
class SweepSpec:
    action: list = field(default_factory=lambda: ["grid", "tetris"])
    lookahead: list = field(default_factory=lambda: [True, False])
    reward: list = field(default_factory=lambda: ["each", "final", "mc"])
    gamma: list = field(default_factory=lambda: [0.1, 0.5, 0.9])
    train_beams: list = field(default_factory=lambda: [100, 200])
    agent: list | None = None
    head: list | None = None

    def __post_init__(self):
        for name in SWEEP_AXES:
            axis = getattr(self, name)
            if axis is not None and len(axis) == 0:
                raise ConfigError(f"sweep axis {name!r} is empty")

    def combinations(self, base: ExperimentConfig) -> list[ExperimentConfig]:
        axes = [getattr(self, n) if getattr(self, n) is not None else [getattr(base, n)] for n in SWEEP_AXES]
        return [replace(base, **dict(zip(SWEEP_AXES, combo))) for combo in itertools.product(*axes)]

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = set(SWEEP_AXES)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sweep axes: {sorted(unknown)}")
        return cls(**d)


SWEEP_HEADER = list(SWEEP_AXES) + ["mean_B", "std_B"]


def sweep(spec: SweepSpec, base: ExperimentConfig, problem: Problem | None = None,
          out_csv=None) -> list[dict]:
    """Train and evaluate every axis combination; one row per combination.

    A failing cell is logged and recorded with ``mean_B = "ERROR"``; the sweep continues.
    """
    problem = problem or Problem.from_config(base)
    rows = []
    for cfg in spec.combinations(base):
        row = {n: getattr(cfg, n) for n in SWEEP_AXES}
        try:
            result = train(cfg, problem=problem)
            pol = (Policy.random(cfg.action, cfg.lookahead, cfg.move_cap) if cfg.agent == "random"
                   else Policy.from_training(result))
            rep = evaluate(pol, problem.scenario, problem.test, cfg.test_beams,
                           cfg.eval_episodes, cfg.seed, cfg.n_envs)
            row.update(mean_B=repr(rep.mean), std_B=repr(rep.std))
        except FreqPlanError as e:
            log.error("sweep cell %s failed: %s", row, e)
            row.update(mean_B="ERROR", std_B="")
        rows.append(row)
    if out_csv is not None:
        Path(out_csv).write_text(sweep_csv(rows), encoding="utf-8")
    return rows


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v) if isinstance(v, bool) else v) for k, v in r.items()})
    return buf.getvalue()


# -- comparisons -----------------------------------------------------------------

def compare(a: EvalReport, b: EvalReport):
    """Welch test over per-stream evaluation means."""
    return welch_t_test(a.stream_means(), b.stream_means())


def nonstationarity_eval(policy: Policy, scenario: Scenario, pool: Sequence[Beam], n_beams: int,
                         factors: Sequence[float] = (2, 4), cap: int | None = None,
                         episodes: int = 1, seed: int = 0, n_envs: int = 8) -> list[dict]:
    """Evaluate the policy and the random baseline on the matched pool and on
    bandwidth-scaled copies of it. Factor 1 is always included first."""
    cap = scenario.n_fs if cap is None else cap
    rand = Policy.random(policy.action, policy.lookahead, policy.move_cap)
    rows = []
    for f in [1.0] + [float(x) for x in factors if float(x) != 1.0]:
        scaled = list(pool) if f == 1.0 else scale_bandwidth(pool, f, cap)
        rep = evaluate(policy, scenario, scaled, n_beams, episodes, seed, n_envs)
        base = evaluate(rand, scenario, scaled, n_beams, episodes, seed, n_envs)
        rows.append({"factor": f, "agent_mean": rep.mean, "agent_std": rep.std,
                     "random_mean": base.mean, "random_std": base.std,
                     "agent": rep, "random": base})
    return rows
