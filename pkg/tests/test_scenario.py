import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqplan.errors import ConfigError, InstanceError, ParseError, ValidationError
from freqplan.scenario import (Beam, ConstraintSet, GenConfig, Scenario, build_scenario, dumps_scenario,
                               generate_constraints, generate_pool, load_scenario, sample_episode,
                               save_scenario, scale_bandwidth, scenario_to_dict, split_pool)


def brute_pairs(beams, radius, same_sat=False):
    out = set()
    for a in beams:
        for b in beams:
            if a.id < b.id and math.dist(a.pos, b.pos) < radius and (not same_sat or a.sat == b.sat):
                out.add((a.id, b.id))
    return out


def test_empty_pool():
    assert generate_pool(GenConfig(n_beams=0)) == []


def test_bandwidth_bounds():
    pool = generate_pool(GenConfig(n_beams=5000, bw_min=1, bw_max=8, seed=1))
    assert len(pool) == 5000
    assert all(1 <= b.bw <= 8 for b in pool)


def test_bandwidth_mean_within_three_sigma():
    pool = generate_pool(GenConfig(n_beams=1000, bw_min=1, bw_max=8, seed=7))
    mean = np.mean([b.bw for b in pool])
    # uniform{1..8}: mean 4.5, variance (8^2 - 1) / 12 = 5.25
    sigma = math.sqrt(5.25 / 1000)
    assert abs(mean - 4.5) <= 3 * sigma
    assert 4.2 <= mean <= 4.8


def test_satellite_stripes():
    cfg = GenConfig(n_beams=500, n_sats=7, seed=3)
    for b in generate_pool(cfg):
        assert b.sat == min(int(b.pos[0] * 7), 6)
        assert 0 <= b.pos[0] < 1 and 0 <= b.pos[1] < 1


@pytest.mark.parametrize("bad", [
    dict(n_beams=-1), dict(bw_min=0), dict(bw_min=5, bw_max=4), dict(r_inter=-0.1), dict(n_sats=0),
])
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        generate_pool(GenConfig(**bad))


def test_identical_positions_are_constrained():
    beams = [Beam(0, 1, (0.5, 0.5), 0), Beam(1, 1, (0.5, 0.5), 0)]
    cs = generate_constraints(beams, GenConfig(r_inter=0.01, r_intra=0.01))
    assert cs.inter == {(0, 1)} and cs.intra == {(0, 1)}


def test_far_apart_beams_unconstrained():
    beams = [Beam(0, 1, (0.0, 0.0), 0), Beam(1, 1, (1.0, 1.0), 0)]
    cs = generate_constraints(beams, GenConfig(r_inter=0.5, r_intra=0.5))
    assert not cs.inter and not cs.intra


def test_six_fixed_beams_exact_pairs():
    coords = [(0.10, 0.10), (0.15, 0.10), (0.30, 0.10), (0.10, 0.21), (0.80, 0.80), (0.84, 0.83)]
    sats = [0, 0, 1, 0, 5, 5]
    beams = [Beam(i, 1, c, s) for i, (c, s) in enumerate(zip(coords, sats))]
    cfg = GenConfig(r_inter=0.13, r_intra=0.06)
    cs = generate_constraints(beams, cfg)
    # frozen from the brute-force all-pairs distance oracle
    assert brute_pairs(beams, 0.13) == {(0, 1), (0, 3), (1, 3), (4, 5)}
    assert brute_pairs(beams, 0.06, same_sat=True) == {(0, 1), (4, 5)}
    assert cs.inter == {(0, 1), (0, 3), (1, 3), (4, 5)}
    assert cs.intra == {(0, 1), (4, 5)}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 120),
       r_inter=st.floats(0, 0.3), r_intra=st.floats(0, 0.3))
def test_constraints_match_brute_force(seed, n, r_inter, r_intra):
    cfg = GenConfig(n_beams=n, n_sats=3, r_inter=r_inter, r_intra=r_intra, seed=seed)
    beams = generate_pool(cfg)
    cs = generate_constraints(beams, cfg)
    assert set(cs.inter) == brute_pairs(beams, r_inter)
    assert set(cs.intra) == brute_pairs(beams, r_intra, same_sat=True)
    assert all(i < j for i, j in cs.inter | cs.intra)


def test_split_sizes_and_disjointness():
    pool = generate_pool(GenConfig(n_beams=100, seed=2))
    train, test = split_pool(pool, 0.2, seed=5)
    assert (len(train), len(test)) == (80, 20)
    assert not {b.id for b in train} & {b.id for b in test}
    assert split_pool(pool, 0.2, seed=5) == (train, test)


def test_split_covers_pool_exactly_once():
    pool = generate_pool(GenConfig(n_beams=5000, seed=1))
    train, test = split_pool(pool, 0.5, seed=3)
    ids = [b.id for b in train] + [b.id for b in test]
    assert sorted(ids) == list(range(5000))


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.5, 1.5])
def test_split_fraction_out_of_range(frac):
    with pytest.raises(ConfigError):
        split_pool([], frac, 0)


def test_sample_episode_contract():
    pool = generate_pool(GenConfig(n_beams=30, seed=4))
    perm = sample_episode(pool, 30, seed=1)
    assert sorted(b.id for b in perm) == list(range(30))
    one = sample_episode(pool, 1, seed=2)
    assert len(one) == 1 and one[0] in pool
    assert sample_episode(pool, 10, 9) == sample_episode(pool, 10, 9)
    with pytest.raises(InstanceError):
        sample_episode(pool, 31, 0)


def test_sample_episode_inclusion_frequency():
    pool = generate_pool(GenConfig(n_beams=2500, seed=4))
    reps = 2000
    hits = np.zeros(2500)
    for s in range(reps):
        for b in sample_episode(pool, 100, s):
            hits[b.id] += 1
    p = 100 / 2500
    freq = hits / reps
    sigma = math.sqrt(p * (1 - p) / reps)
    # aggregate check: pooled frequency is tight; per-beam deviations rarely pass 4.5 sigma
    assert abs(freq.mean() - p) < 1e-12
    assert np.mean(np.abs(freq - p) <= 3 * sigma) > 0.99
    assert np.all(np.abs(freq - p) <= 5 * sigma)


def test_scale_bandwidth():
    pool = [Beam(0, 3, (0.1, 0.2), 0), Beam(1, 30, (0.3, 0.4), 1)]
    assert scale_bandwidth(pool, 1, 80) == pool
    assert scale_bandwidth(pool, 2, 80)[0].bw == 6
    scaled = scale_bandwidth(pool, 4, 80)
    assert scaled[1].bw == 80
    assert [(b.id, b.pos, b.sat) for b in scaled] == [(b.id, b.pos, b.sat) for b in pool]
    # half rounds away from zero
    assert scale_bandwidth([Beam(0, 1, (0, 0), 0)], 2.5, 80)[0].bw == 3
    with pytest.raises(ConfigError):
        scale_bandwidth(pool, 0.5, 80)


def test_round_trip(tmp_path):
    sc = build_scenario(GenConfig(n_beams=200, r_inter=0.1, r_intra=0.1, seed=11), 4, 20)
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back.n_fg == sc.n_fg and back.n_fs == sc.n_fs and back.meta == sc.meta
    assert back.beams == sc.beams
    assert back.constraints == sc.constraints


def test_byte_identical_serialization():
    a = build_scenario(GenConfig(n_beams=300, seed=5), 4, 20)
    b = build_scenario(GenConfig(n_beams=300, seed=5), 4, 20)
    assert dumps_scenario(a) == dumps_scenario(b)
    d = json.loads(dumps_scenario(a))
    assert set(d) == {"n_fg", "n_fs", "beams", "intra", "inter", "meta"}
    assert d["inter"] == sorted(d["inter"]) and all(i < j for i, j in d["inter"])


def _write(tmp_path, d):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    return p


def _base_dict():
    sc = Scenario(2, 4, [Beam(0, 2, (0.1, 0.1), 0), Beam(1, 3, (0.2, 0.2), 0)],
                  ConstraintSet.from_pairs(intra=[(0, 1)]))
    return scenario_to_dict(sc)


def test_load_rejects_bw_above_nfs(tmp_path):
    d = _base_dict()
    d["beams"][1]["bw"] = 5
    with pytest.raises(ValidationError):
        load_scenario(_write(tmp_path, d))


def test_load_rejects_unknown_pair_id(tmp_path):
    d = _base_dict()
    d["intra"].append([0, 7])
    with pytest.raises(ValidationError):
        load_scenario(_write(tmp_path, d))


def test_load_names_bad_field(tmp_path):
    d = _base_dict()
    del d["beams"][1]["bw"]
    with pytest.raises(ParseError, match=r"beams\[1\]\.bw"):
        load_scenario(_write(tmp_path, d))
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(p)


def test_odd_group_count_rejected():
    with pytest.raises(ValidationError):
        Scenario(3, 4, [])
