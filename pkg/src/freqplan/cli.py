"""Command-line driver: ``freqplan gen|train|eval|sweep|plot``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from xml.sax.saxutils import escape

from freqplan.environment import ConstraintKind, Placement, violates
from freqplan.errors import ConfigError, FreqPlanError, ValidationError
from freqplan.nn import load_checkpoint
from freqplan.harness import ExperimentConfig, Policy, Problem, SweepSpec, evaluate, sweep, train
from freqplan.scenario import (GenConfig, Scenario, build_scenario, load_scenario, save_scenario,
                               scale_bandwidth, split_pool)
from freqplan.stats import welch_t_test

GOLD = "#DAA520"
PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#17becf", "#bcbd22", "#ff7f0e", "#393b79", "#637939")
CELL_W, CELL_H, MARGIN = 24, 24, 30


class UsageError(Exception):
    pass


# -- plan rendering ----------------------------------------------------------------

def plan_success(plan: list[dict], scenario: Scenario) -> dict[int, bool]:
    """Recompute per-beam success from placements and the scenario's constraints."""
    known = {b.id for b in scenario.beams}
    placed = {}
    for i, entry in enumerate(plan):
        try:
            bid, g, s, bw = int(entry["beam_id"]), int(entry["group"]), int(entry["start"]), int(entry["bw"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"plan[{i}] is malformed: {e}") from None
        if bid not in known:
            raise ValidationError(f"plan[{i}] names beam {bid}, which is not in the scenario")
        if bid in placed:
            raise ValidationError(f"plan[{i}] places beam {bid} twice")
        if not (0 <= g < scenario.n_fg and 0 <= s and bw >= 1 and s + bw <= scenario.n_fs):
            raise ValidationError(f"plan[{i}] (beam {bid}) does not fit the {scenario.n_fg}x{scenario.n_fs} grid")
        placed[bid] = (Placement(g, s), bw)
    partners = scenario.partners
    ok = {}
    for bid, (p, bw) in placed.items():
        clean = True
        for other, flags in partners.get(bid, {}).items():
            if other not in placed:
                continue
            q, obw = placed[other]
            if any(flags & kind and violates(p, bw, q, obw, kind) for kind in ConstraintKind):
                clean = False
                break
        ok[bid] = clean
    return ok


def render_plan_svg(plan: list[dict], scenario: Scenario) -> str:
    ok = plan_success(plan, scenario)
    n_fg, n_fs = scenario.n_fg, scenario.n_fs
    width, height = 2 * MARGIN + n_fs * CELL_W, 2 * MARGIN + n_fg * CELL_H
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>']
    for entry in plan:
        bid = int(entry["beam_id"])
        fill = PALETTE[bid % len(PALETTE)] if ok[bid] else GOLD
        y = MARGIN + int(entry["group"]) * CELL_H
        for s in range(int(entry["start"]), int(entry["start"]) + int(entry["bw"])):
            x = MARGIN + s * CELL_W
            out.append(f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}">'
                       f'<title>{escape(f"beam {bid}")}</title></rect>')
    for g in range(n_fg + 1):
        y = MARGIN + g * CELL_H
        out.append(f'<line x1="{MARGIN}" y1="{y}" x2="{MARGIN + n_fs * CELL_W}" y2="{y}" stroke="#000000" '
                   f'stroke-width="1"/>')
    for s in range(n_fs + 1):
        x = MARGIN + s * CELL_W
        out.append(f'<line x1="{x}" y1="{MARGIN}" x2="{x}" y2="{MARGIN + n_fg * CELL_H}" stroke="#000000" '
                   f'stroke-width="1"/>')
    for g in range(n_fg):
        out.append(f'<text x="{MARGIN - 6}" y="{MARGIN + g * CELL_H + CELL_H // 2 + 4}" font-size="10" '
                   f'text-anchor="end">{g + 1}</text>')
    out.append(f'<text x="{MARGIN}" y="{MARGIN - 10}" font-size="11">frequency slots</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- subcommands ---------------------------------------------------------------------

def _read_json(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} file {path} is not valid JSON: {e}") from None


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_gen(a) -> None:
    cfg = GenConfig(n_beams=a.beams, n_sats=a.sats, bw_min=a.bw_min, bw_max=a.bw_max,
                    r_inter=a.r_inter, r_intra=a.r_intra, seed=a.seed)
    sc = build_scenario(cfg, a.nfg, a.nfs)
    save_scenario(sc, a.out)
    _emit({"out": str(a.out), "beams": len(sc.beams), "inter_pairs": len(sc.constraints.inter),
           "intra_pairs": len(sc.constraints.intra)})


TRAIN_OVERRIDES = ("scenario", "agent", "head", "action", "reward", "gamma", "timesteps", "n_envs",
                   "train_beams", "test_beams", "seed", "split_seed", "lookahead", "record_timing")


def _experiment_config(a) -> ExperimentConfig:
    d = _read_json(a.config, "config") if a.config else {}
    if not isinstance(d, dict):
        raise UsageError("config file must hold a JSON object")
    for name in TRAIN_OVERRIDES:
        v = getattr(a, name, None)
        if v is not None:
            d[name] = v
    if not d.get("scenario"):
        raise UsageError("train needs a scenario (--scenario or a 'scenario' key in --config)")
    cfg = ExperimentConfig.from_dict(d)
    cfg.validate()
    return cfg


def cmd_train(a) -> None:
    cfg = _experiment_config(a)
    res = train(cfg, a.out)
    last = res.metrics.rows[-1] if res.metrics.rows else {}
    _emit({"out": str(a.out), "checkpoint": str(res.checkpoint) if res.checkpoint else None,
           "metrics": str(res.metrics_path), "steps": cfg.timesteps, "episodes": res.metrics.episodes,
           "last_row": last})


def _policy(a):
    if a.checkpoint == "random":
        return Policy.random(a.action or "grid"), {}
    net, extra = load_checkpoint(a.checkpoint)
    pol = Policy(net, extra["action"], bool(extra["lookahead"]), extra.get("move_cap", "auto"))
    return pol, extra


def cmd_eval(a) -> None:
    pol, extra = _policy(a)
    sc = load_scenario(a.scenario)
    frac = a.test_fraction if a.test_fraction is not None else extra.get("test_fraction", 0.5)
    split_seed = a.split_seed if a.split_seed is not None else extra.get("split_seed", 0)
    _, pool = split_pool(sc.beams, frac, split_seed)
    n_beams = a.beams or extra.get("test_beams", 100)
    if a.scale_bw is not None:
        pool = scale_bandwidth(pool, a.scale_bw, a.cap if a.cap is not None else sc.n_fs)
    rep = evaluate(pol, sc, pool, n_beams, a.episodes, a.seed, a.n_envs, capture_plan=bool(a.plan_out))
    result = {"policy": a.checkpoint, "scale_bw": a.scale_bw, **rep.to_dict(timing=a.timing)}
    if a.baseline:
        base = evaluate(Policy.random(pol.action, pol.lookahead, pol.move_cap), sc, pool, n_beams,
                        a.episodes, a.seed, a.n_envs)
        w = welch_t_test(rep.stream_means(), base.stream_means())
        result["random_mean"] = base.mean
        result["random_std"] = base.std
        result["welch_t"], result["welch_p"] = w.t, w.p
    if a.plan_out:
        Path(a.plan_out).write_text(json.dumps({"plan": rep.plan}, indent=1) + "\n", encoding="utf-8")
        result["plan"] = str(a.plan_out)
    if a.report:
        Path(a.report).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit({k: v for k, v in result.items() if k != "counts"})


def cmd_sweep(a) -> None:
    d = _read_json(a.spec, "sweep spec")
    if not isinstance(d, dict):
        raise UsageError("sweep spec must hold a JSON object")
    base_d = dict(d.pop("base", {}))
    if a.seed is not None:
        base_d["seed"] = a.seed
    if a.scenario:
        base_d["scenario"] = a.scenario
    if not base_d.get("scenario"):
        raise UsageError("sweep needs a scenario (--scenario or base.scenario in the spec)")
    base = ExperimentConfig.from_dict(base_d)
    base.validate()
    spec = SweepSpec.from_dict(d)
    for cfg in spec.combinations(base):
        cfg.validate()
    rows = sweep(spec, base, Problem.from_config(base), a.out)
    _emit({"out": str(a.out), "rows": len(rows), "errors": sum(r["mean_B"] == "ERROR" for r in rows)})


def cmd_plot(a) -> None:
    d = _read_json(a.plan, "plan")
    plan = d["plan"] if isinstance(d, dict) and "plan" in d else d
    if not isinstance(plan, list):
        raise UsageError("plan file must hold a list of placements or an object with a 'plan' list")
    svg = render_plan_svg(plan, load_scenario(a.scenario))
    Path(a.out).write_text(svg, encoding="utf-8")
    _emit({"out": str(a.out), "placements": len(plan)})


# -- parser --------------------------------------------------------------------------

def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freqplan", description="Frequency plan design with reinforcement learning.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="{gen,train,eval,sweep,plot}")

    g = sub.add_parser("gen", help="generate a synthetic scenario")
    g.add_argument("--beams", type=int, required=True)
    g.add_argument("--nfg", type=int, required=True, help="number of frequency groups (even)")
    g.add_argument("--nfs", type=int, required=True, help="number of frequency slots")
    g.add_argument("--sats", type=int, default=GenConfig.n_sats)
    g.add_argument("--bw-min", type=int, default=GenConfig.bw_min)
    g.add_argument("--bw-max", type=int, default=GenConfig.bw_max)
    g.add_argument("--r-inter", type=float, default=GenConfig.r_inter)
    g.add_argument("--r-intra", type=float, default=GenConfig.r_intra)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train an agent; flags override the config file")
    t.add_argument("--config", help="experiment config JSON")
    t.add_argument("--out", required=True, help="output directory for metrics.csv and policy.ckpt")
    t.add_argument("--scenario")
    t.add_argument("--agent", choices=["random", "dqn", "ppo"])
    t.add_argument("--head", choices=["mlp", "lstm"])
    t.add_argument("--action", choices=["grid", "tetris"])
    t.add_argument("--reward", choices=["each", "final", "mc"])
    t.add_argument("--gamma", type=float)
    t.add_argument("--lookahead", type=_bool, metavar="BOOL")
    t.add_argument("--timesteps", type=int)
    t.add_argument("--n-envs", type=int)
    t.add_argument("--train-beams", type=int)
    t.add_argument("--test-beams", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--split-seed", type=int)
    t.add_argument("--record-timing", action="store_const", const=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint (or 'random') on the held-out pool")
    e.add_argument("--checkpoint", required=True, help="policy.ckpt path, or 'random'")
    e.add_argument("--scenario", required=True)
    e.add_argument("--beams", type=int, help="beams per episode (default: the training test_beams)")
    e.add_argument("--episodes", type=int, default=1, help="episodes per evaluation stream")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--n-envs", type=int, default=8)
    e.add_argument("--scale-bw", type=float, help="multiply test-pool bandwidths by this factor")
    e.add_argument("--cap", type=int, help="bandwidth cap after scaling (default n_fs)")
    e.add_argument("--action", choices=["grid", "tetris"], help="action space for --checkpoint random")
    e.add_argument("--test-fraction", type=float)
    e.add_argument("--split-seed", type=int)
    e.add_argument("--baseline", action="store_true", help="also evaluate RANDOM and run a Welch test")
    e.add_argument("--timing", action="store_true", help="report seconds per decision")
    e.add_argument("--plan-out", help="write the first stream's first plan as JSON")
    e.add_argument("--report", help="write the full report as JSON")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="train and evaluate every combination in a sweep spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--scenario")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="render a plan as SVG")
    pl.add_argument("--plan", required=True)
    pl.add_argument("--scenario", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--seed", type=int, default=0, help="accepted for uniformity; rendering is not random")
    pl.set_defaults(func=cmd_plot)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"freqplan {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (FreqPlanError, OSError, KeyError) as e:
        print(f"freqplan {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
