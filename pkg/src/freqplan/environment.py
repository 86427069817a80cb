"""Frequency-plan assignment as an episodic decision process.

The plan is an ``n_fg x n_fs`` grid: rows are frequency groups (sorted by reuse,
then polarization, so rows with equal index parity share polarization) and
columns are frequency slots. A beam with demand ``bw`` occupies ``bw``
consecutive slots of one group. Indices are 0-based; row ``g`` here is row
``g + 1`` in 1-based plan drawings.

One beam is finalized per assignment event. In the grid action space every
step is an assignment event. In the tetris action space a tentative placement
is nudged around and only ``NEW`` finalizes it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from freqplan.errors import ContractError, InstanceError, StateError
from freqplan.scenario import INTER, INTRA, Beam, Scenario


class ActionSpace(str, enum.Enum):
    GRID = "grid"
    TETRIS = "tetris"


class Move(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    NEW = 4


class RewardKind(str, enum.Enum):
    EACH = "each"
    FINAL = "final"
    MONTE_CARLO = "mc"


class ConstraintKind(enum.IntEnum):
    INTRA = INTRA
    INTER = INTER


@dataclass(frozen=True)
class StateRepr:
    lookahead: bool = False

    def channels(self, space: ActionSpace) -> int:
        return 1 + (ActionSpace(space) is ActionSpace.TETRIS) + int(self.lookahead)


@dataclass(frozen=True)
class Placement:
    group: int
    start: int


@dataclass
class StepResult:
    reward: float
    done: bool
    B: int
    assigned: bool
    forced: bool = False


def n_actions(space: ActionSpace, n_fg: int, n_fs: int) -> int:
    return n_fg * n_fs if ActionSpace(space) is ActionSpace.GRID else len(Move)


def grid_action(group: int, start: int, n_fs: int) -> int:
    return group * n_fs + start


def occupied_cells(p: Placement, bw: int) -> set[tuple[int, int]]:
    return {(p.group, s) for s in range(p.start, p.start + bw)}


def _overlap(p_i: Placement, bw_i: int, p_j: Placement, bw_j: int) -> bool:
    return p_i.start < p_j.start + bw_j and p_j.start < p_i.start + bw_i


def violates(p_i: Placement, bw_i: int, p_j: Placement, bw_j: int, kind) -> bool:
    """True when two placements clash under one constraint kind.

    INTRA clashes need the same group; INTER clashes need the same polarization
    (equal group parity). Both need overlapping slot intervals.
    """
    if not _overlap(p_i, bw_i, p_j, bw_j):
        return False
    if ConstraintKind(kind) is ConstraintKind.INTRA:
        return p_i.group == p_j.group
    return p_i.group % 2 == p_j.group % 2


def _pair_clash(p_i, bw_i, p_j, bw_j, flags: int) -> bool:
    if not _overlap(p_i, bw_i, p_j, bw_j):
        return False
    if flags & INTER and p_i.group % 2 == p_j.group % 2:
        return True
    return bool(flags & INTRA) and p_i.group == p_j.group


@dataclass
class EpisodeState:
    scenario: Scenario
    beams: list[Beam]
    space: ActionSpace
    repr: StateRepr
    k: int = 0
    placements: dict[int, Placement] = field(default_factory=dict)
    n_viol: dict[int, int] = field(default_factory=dict)
    cached_B: int = 0
    tentative: Placement | None = None
    steps: int = 0
    moves_this_beam: int = 0
    move_cap: int | None = None
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    mc_rng: np.random.Generator = field(default_factory=np.random.default_rng)
    _mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_beams(self) -> int:
        return len(self.beams)

    @property
    def done(self) -> bool:
        return self.k >= len(self.beams)

    @property
    def current(self) -> Beam:
        if self.done:
            raise StateError("episode is finished; there is no current beam")
        return self.beams[self.k]

    @property
    def episode_ids(self) -> frozenset[int]:
        ids = getattr(self, "_ids", None)
        if ids is None:
            ids = self._ids = frozenset(b.id for b in self.beams)
        return ids

    def _finalize(self, beam: Beam, p: Placement) -> None:
        partners = self.scenario.partners[beam.id]
        bws = self._bw
        mine = 0
        for j, flags in partners.items():
            pj = self.placements.get(j)
            if pj is None or not _pair_clash(p, beam.bw, pj, bws[j], flags):
                continue
            mine += 1
            if self.n_viol[j] == 0:
                self.cached_B -= 1
            self.n_viol[j] += 1
        self.placements[beam.id] = p
        self.n_viol[beam.id] = mine
        if mine == 0:
            self.cached_B += 1
        self.k += 1
        self.moves_this_beam = 0
        self._mask = None

    @property
    def _bw(self) -> dict[int, int]:
        bw = getattr(self, "_bw_cache", None)
        if bw is None:
            bw = self._bw_cache = {b.id: b.bw for b in self.beams}
        return bw

    def random_placement(self, beam: Beam, rng: np.random.Generator) -> Placement:
        sc = self.scenario
        return Placement(int(rng.integers(sc.n_fg)), int(rng.integers(sc.n_fs - beam.bw + 1)))

    def copy(self) -> "EpisodeState":
        twin = EpisodeState(self.scenario, self.beams, self.space, self.repr, self.k,
                            dict(self.placements), dict(self.n_viol), self.cached_B,
                            self.tentative, self.steps, self.moves_this_beam, self.move_cap)
        twin.rng = _clone_rng(self.rng)
        twin.mc_rng = _clone_rng(self.mc_rng)
        return twin


def _clone_rng(rng: np.random.Generator) -> np.random.Generator:
    g = np.random.Generator(type(rng.bit_generator)())
    g.bit_generator.state = rng.bit_generator.state
    return g


def reset(scenario: Scenario, episode_beams: Sequence[Beam], space=ActionSpace.GRID,
          repr: StateRepr = StateRepr(), seed=None, *, warm_start=None,
          move_cap: int | None = None) -> EpisodeState:
    """Start an episode over ``episode_beams`` in the given order.

    ``warm_start`` is an optional sequence of ``(beam, placement)`` already in
    the plan; those beams count as finalized so the episode begins with ``k > 0``.
    """
    warm = list(warm_start or ())
    beams = [b for b, _ in warm] + list(episode_beams)
    if not episode_beams:
        raise InstanceError("an episode needs at least one beam to assign")
    for b in beams:
        if b.bw > scenario.n_fs:
            raise InstanceError(f"beam {b.id}: bw={b.bw} exceeds n_fs={scenario.n_fs}")
    if len({b.id for b in beams}) != len(beams):
        raise InstanceError("episode beams must be distinct")
    ss = np.random.SeedSequence(seed)
    place_ss, mc_ss = ss.spawn(2)
    st = EpisodeState(scenario, beams, ActionSpace(space), repr, move_cap=move_cap,
                      rng=np.random.default_rng(place_ss), mc_rng=np.random.default_rng(mc_ss))
    for b, p in warm:
        if not (0 <= p.group < scenario.n_fg and 0 <= p.start <= scenario.n_fs - b.bw):
            raise InstanceError(f"warm-start placement {p} out of bounds for beam {b.id}")
        st._finalize(b, p)
    if st.space is ActionSpace.TETRIS:
        st.tentative = st.random_placement(st.current, st.rng)
    return st


def count_successful(st: EpisodeState) -> int:
    """Recount successfully assigned beams from the finalized placements."""
    bws = st._bw
    ok = 0
    for i, pi in st.placements.items():
        clean = True
        for j, flags in st.scenario.partners[i].items():
            pj = st.placements.get(j)
            if pj is not None and _pair_clash(pi, bws[i], pj, bws[j], flags):
                clean = False
                break
        ok += clean
    return ok


def successful_ids(st: EpisodeState) -> set[int]:
    return {i for i, n in st.n_viol.items() if n == 0}


def conflict_mask(st: EpisodeState, b: Beam) -> np.ndarray:
    """Cells that would put ``b`` in conflict with an already finalized partner."""
    sc = st.scenario
    mask = np.zeros((sc.n_fg, sc.n_fs), dtype=np.float32)
    bws = st._bw
    for j, flags in sc.partners[b.id].items():
        pj = st.placements.get(j)
        if pj is None:
            continue
        lo, hi = pj.start, pj.start + bws[j]
        if flags & INTER:
            mask[pj.group % 2::2, lo:hi] = 1.0
        else:
            mask[pj.group, lo:hi] = 1.0
    return mask


def lookahead_value(st: EpisodeState, b: Beam) -> float:
    sc = st.scenario
    ids = st.episode_ids
    pending = sum(st._bw[j] for j in sc.partners[b.id]
                  if j in ids and j not in st.placements)
    return min(1.0, pending / (sc.n_fg * sc.n_fs))


def build_state(st: EpisodeState, repr: StateRepr | None = None, space=None) -> np.ndarray:
    """Observation tensor of shape ``(channels, n_fg, n_fs)``, float32."""
    if st.done:
        raise StateError("cannot build an observation for a finished episode")
    repr = st.repr if repr is None else repr
    space = st.space if space is None else ActionSpace(space)
    sc = st.scenario
    b = st.current
    if st._mask is None:
        st._mask = conflict_mask(st, b)
    out = np.zeros((repr.channels(space), sc.n_fg, sc.n_fs), dtype=np.float32)
    out[0] = st._mask
    c = 1
    if space is ActionSpace.TETRIS:
        p = st.tentative
        out[c, p.group, p.start:p.start + b.bw] = 1.0
        c += 1
    if repr.lookahead:
        out[c] = lookahead_value(st, b)
    return out


def assignment_reward(kind, B_prev: int, B_now: int, is_terminal: bool,
                      mc_estimate: float | None = None) -> float:
    kind = RewardKind(kind)
    if kind is RewardKind.EACH:
        return float(B_now - B_prev)
    if kind is RewardKind.FINAL:
        return float(B_now) if is_terminal else 0.0
    if is_terminal:
        return 0.0
    if mc_estimate is None:
        raise ContractError("Monte-Carlo reward needs a rollout estimate before the terminal step")
    return float(mc_estimate - B_now)


def mc_rollout(st: EpisodeState, seed=None) -> int:
    """Terminal success count after assigning every remaining beam at random.

    Works on a copy; ``st`` is left untouched. Without a seed the episode's own
    rollout stream is used (and advanced).
    """
    rng = st.mc_rng if seed is None else np.random.default_rng(seed)
    sim = st.copy()
    while not sim.done:
        b = sim.current
        sim._finalize(b, sim.random_placement(b, rng))
    return sim.cached_B


def _assign(st: EpisodeState, p: Placement, reward_kind) -> StepResult:
    B_prev = st.cached_B
    st._finalize(st.beams[st.k], p)
    terminal = st.done
    est = None
    if RewardKind(reward_kind) is RewardKind.MONTE_CARLO and not terminal:
        est = mc_rollout(st)
    r = assignment_reward(reward_kind, B_prev, st.cached_B, terminal, est)
    if st.space is ActionSpace.TETRIS:
        st.tentative = None if terminal else st.random_placement(st.current, st.rng)
    return StepResult(r, terminal, st.cached_B, True)


def step(st: EpisodeState, action, reward_kind=RewardKind.EACH) -> StepResult:
    """Apply one action.

    Grid actions are a flat cell index ``group * n_fs + start`` or a
    ``(group, start)`` tuple; a start too close to the right edge is clamped.
    Tetris actions are :class:`Move` values.
    """
    if st.done:
        raise StateError("step() called on a finished episode")
    sc = st.scenario
    st.steps += 1
    if st.space is ActionSpace.GRID:
        if isinstance(action, tuple):
            g, s = action
        else:
            a = int(action)
            if not 0 <= a < sc.n_fg * sc.n_fs:
                raise ContractError(f"grid action {a} outside [0, {sc.n_fg * sc.n_fs})")
            g, s = divmod(a, sc.n_fs)
        if not (0 <= g < sc.n_fg and 0 <= s < sc.n_fs):
            raise ContractError(f"grid cell ({g}, {s}) outside the grid")
        return _assign(st, Placement(int(g), min(int(s), sc.n_fs - st.current.bw)), reward_kind)

    move = Move(int(action))
    forced = False
    if move is not Move.NEW and st.move_cap is not None and st.moves_this_beam >= st.move_cap:
        move, forced = Move.NEW, True
    if move is Move.NEW:
        res = _assign(st, st.tentative, reward_kind)
        res.forced = forced
        return res
    p = st.tentative
    g, s = p.group, p.start
    if move is Move.UP:
        g = max(g - 1, 0)
    elif move is Move.DOWN:
        g = min(g + 1, sc.n_fg - 1)
    elif move is Move.LEFT:
        s = max(s - 1, 0)
    else:
        s = min(s + 1, sc.n_fs - st.current.bw)
    st.tentative = Placement(g, s)
    st.moves_this_beam += 1
    return StepResult(-1.0 / (sc.n_fg * sc.n_fs), False, st.cached_B, False)


def export_plan(st: EpisodeState) -> list[dict]:
    """Finalized placements in assignment order, with per-beam success flags."""
    bws = st._bw
    return [{"beam_id": i, "group": p.group, "start": p.start, "bw": bws[i],
             "successful": st.n_viol[i] == 0}
            for i, p in st.placements.items()]
