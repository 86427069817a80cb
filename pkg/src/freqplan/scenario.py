"""Synthetic problem instances: beam pools, constraint pairs, splits and persistence.

Beams are scattered uniformly on the unit square. Their x coordinate picks a
serving-satellite stripe. Inter-group constraints link any two beams closer
than ``r_inter``. Intra-group constraints link beams in the same stripe that
are closer than ``r_intra``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from freqplan.errors import ConfigError, InstanceError, ParseError, ValidationError

Pair = tuple[int, int]

INTRA = 1
INTER = 2


@dataclass(frozen=True)
class Beam:
    id: int
    bw: int
    pos: tuple[float, float]
    sat: int


@dataclass(frozen=True)
class ConstraintSet:
    intra: frozenset[Pair] = frozenset()
    inter: frozenset[Pair] = frozenset()

    @classmethod
    def from_pairs(cls, intra: Iterable[Sequence[int]] = (), inter: Iterable[Sequence[int]] = ()):
        return cls(frozenset(canonical_pair(*p) for p in intra),
                   frozenset(canonical_pair(*p) for p in inter))


def canonical_pair(i: int, j: int) -> Pair:
    i, j = int(i), int(j)
    if i == j:
        raise ValidationError(f"self-pair ({i}, {j}) is not a valid constraint")
    return (i, j) if i < j else (j, i)


@dataclass
class Scenario:
    n_fg: int
    n_fs: int
    beams: list[Beam]
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    meta: str = ""

    def __post_init__(self):
        validate_scenario(self)

    def beam_map(self) -> dict[int, Beam]:
        return {b.id: b for b in self.beams}

    @cached_property
    def partners(self) -> dict[int, dict[int, int]]:
        """Adjacency ``id -> {partner_id: flags}`` with INTRA/INTER bit flags."""
        adj: dict[int, dict[int, int]] = {b.id: {} for b in self.beams}
        for flag, pairs in ((INTRA, self.constraints.intra), (INTER, self.constraints.inter)):
            for i, j in pairs:
                adj[i][j] = adj[i].get(j, 0) | flag
                adj[j][i] = adj[j].get(i, 0) | flag
        return adj


@dataclass(frozen=True)
class GenConfig:
    n_beams: int = 5000
    n_sats: int = 7
    bw_min: int = 1
    bw_max: int = 8
    r_inter: float = 0.045
    r_intra: float = 0.07
    seed: int = 0

    def validate(self) -> None:
        if self.n_beams < 0:
            raise ConfigError(f"n_beams must be >= 0, got {self.n_beams}")
        if self.n_sats < 1:
            raise ConfigError(f"n_sats must be >= 1, got {self.n_sats}")
        if not 1 <= self.bw_min <= self.bw_max:
            raise ConfigError(f"need 1 <= bw_min <= bw_max, got {self.bw_min}, {self.bw_max}")
        if self.r_inter < 0 or self.r_intra < 0:
            raise ConfigError("constraint radii must be non-negative")


def validate_scenario(s: Scenario) -> None:
    if s.n_fg < 1 or s.n_fs < 1:
        raise ValidationError(f"grid must be at least 1x1, got {s.n_fg}x{s.n_fs}")
    if s.n_fg % 2:
        raise ValidationError(f"n_fg must be even (two polarizations per reuse), got {s.n_fg}")
    ids = set()
    for b in s.beams:
        if b.id in ids:
            raise ValidationError(f"duplicate beam id {b.id}")
        ids.add(b.id)
        if b.bw < 1:
            raise ValidationError(f"beam {b.id}: bw must be >= 1, got {b.bw}")
        if b.bw > s.n_fs:
            raise ValidationError(f"beam {b.id}: bw={b.bw} exceeds n_fs={s.n_fs}")
    for kind in ("intra", "inter"):
        for i, j in getattr(s.constraints, kind):
            if i == j:
                raise ValidationError(f"{kind} self-pair ({i}, {j})")
            if i not in ids or j not in ids:
                raise ValidationError(f"{kind} pair ({i}, {j}) references an unknown beam id")


def generate_pool(cfg: GenConfig) -> list[Beam]:
    """Draw ``cfg.n_beams`` beams with uniform integer bandwidth and uniform positions."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    bws = rng.integers(cfg.bw_min, cfg.bw_max + 1, size=cfg.n_beams)
    pos = rng.random((cfg.n_beams, 2))
    sats = np.minimum((pos[:, 0] * cfg.n_sats).astype(np.int64), cfg.n_sats - 1)
    return [Beam(id=i, bw=int(bws[i]), pos=(float(pos[i, 0]), float(pos[i, 1])), sat=int(sats[i]))
            for i in range(cfg.n_beams)]


def _pairs_within(points: np.ndarray, radius: float) -> np.ndarray:
    if radius <= 0 or len(points) < 2:
        return np.empty((0, 2), dtype=np.int64)
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    # query_pairs is inclusive at the radius; the model is strict
    return pairs[d < radius]


def generate_constraints(beams: Sequence[Beam], cfg: GenConfig) -> ConstraintSet:
    if not beams:
        raise InstanceError("cannot generate constraints for an empty beam list")
    ids = np.array([b.id for b in beams])
    pts = np.array([b.pos for b in beams], dtype=float)
    sats = np.array([b.sat for b in beams])
    inter = _pairs_within(pts, cfg.r_inter)
    intra = _pairs_within(pts, cfg.r_intra)
    intra = intra[sats[intra[:, 0]] == sats[intra[:, 1]]] if len(intra) else intra
    return ConstraintSet(
        intra=frozenset(canonical_pair(ids[i], ids[j]) for i, j in intra),
        inter=frozenset(canonical_pair(ids[i], ids[j]) for i, j in inter),
    )


def build_scenario(cfg: GenConfig, n_fg: int, n_fs: int) -> Scenario:
    """Generate a pool and its constraints as one validated scenario."""
    beams = generate_pool(cfg)
    constraints = generate_constraints(beams, cfg) if beams else ConstraintSet()
    meta = json.dumps({"generator": "uniform-geometric", **cfg.__dict__}, sort_keys=True)
    return Scenario(n_fg=n_fg, n_fs=n_fs, beams=beams, constraints=constraints, meta=meta)


def split_pool(pool: Sequence[Beam], test_fraction: float, seed: int) -> tuple[list[Beam], list[Beam]]:
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    n_test = int(round(test_fraction * len(pool)))
    test_idx = set(order[:n_test].tolist())
    train = [b for i, b in enumerate(pool) if i not in test_idx]
    test = [b for i, b in enumerate(pool) if i in test_idx]
    return train, test


def sample_episode(pool: Sequence[Beam], n: int, seed) -> list[Beam]:
    """Uniform sample of ``n`` distinct beams; the returned order is the assignment order.

    ``seed`` may be an int or a ``numpy.random.Generator`` (consumed in place).
    """
    if n > len(pool):
        raise InstanceError(f"cannot sample {n} beams from a pool of {len(pool)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.choice(len(pool), size=n, replace=False)
    return [pool[i] for i in idx]


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def scale_bandwidth(pool: Sequence[Beam], factor: float, cap: int) -> list[Beam]:
    if factor < 1:
        raise ConfigError(f"bandwidth scale factor must be >= 1, got {factor}")
    if cap < 1:
        raise ConfigError(f"bandwidth cap must be >= 1, got {cap}")
    return [replace(b, bw=min(_round_half_away(b.bw * factor), cap)) for b in pool]


def scale_scenario(s: Scenario, factor: float, cap: int | None = None) -> Scenario:
    cap = s.n_fs if cap is None else cap
    return Scenario(s.n_fg, s.n_fs, scale_bandwidth(s.beams, factor, cap), s.constraints, s.meta)


# -- persistence ------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "n_fg": s.n_fg,
        "n_fs": s.n_fs,
        "beams": [{"id": b.id, "bw": b.bw, "pos": [b.pos[0], b.pos[1]], "sat": b.sat}
                  for b in sorted(s.beams, key=lambda b: b.id)],
        "intra": [list(p) for p in sorted(s.constraints.intra)],
        "inter": [list(p) for p in sorted(s.constraints.inter)],
        "meta": s.meta,
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), separators=(",", ":")) + "\n"


def save_scenario(s: Scenario, path) -> None:
    validate_scenario(s)
    Path(path).write_text(dumps_scenario(s), encoding="utf-8")


def _field(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing field '{where}{key}'")
    v = obj[key]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ParseError(f"field '{where}{key}' must be an integer, got {v!r}")
    if kind is list and not isinstance(v, list):
        raise ParseError(f"field '{where}{key}' must be an array")
    if kind is str and not isinstance(v, str):
        raise ParseError(f"field '{where}{key}' must be a string")
    return v


def _parse_pairs(raw: list, name: str) -> list[Pair]:
    out = []
    for k, p in enumerate(raw):
        if (not isinstance(p, list) or len(p) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in p)):
            raise ParseError(f"field '{name}[{k}]' must be a pair of integer ids")
        out.append(canonical_pair(*p))
    return out


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ParseError("scenario file must hold a JSON object")
    n_fg = _field(d, "n_fg", int, "")
    n_fs = _field(d, "n_fs", int, "")
    beams = []
    for k, raw in enumerate(_field(d, "beams", list, "")):
        where = f"beams[{k}]."
        pos = _field(raw, "pos", list, where)
        if len(pos) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pos):
            raise ParseError(f"field '{where}pos' must be [x, y]")
        beams.append(Beam(id=_field(raw, "id", int, where), bw=_field(raw, "bw", int, where),
                          pos=(float(pos[0]), float(pos[1])), sat=_field(raw, "sat", int, where)))
    intra = _parse_pairs(_field(d, "intra", list, ""), "intra")
    inter = _parse_pairs(_field(d, "inter", list, ""), "inter")
    meta = d.get("meta", "")
    if not isinstance(meta, str):
        raise ParseError("field 'meta' must be a string")
    return Scenario(n_fg=n_fg, n_fs=n_fs, beams=beams,
                    constraints=ConstraintSet(frozenset(intra), frozenset(inter)), meta=meta)


def load_scenario(path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: not valid JSON ({e})") from e
    return scenario_from_dict(d)
