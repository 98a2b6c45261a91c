"""Command-line driver: ``sparse-strike <command> [flags]``.

Settings resolve as command-line flag, then ``--config`` JSON file, then
built-in default. Every command writing to ``--out`` produces files that
depend only on its settings and seeds, never on ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import (
    MEAN_OF_TRAJECTORY,
    CampaignConfig,
    Sweep,
    compare_csv,
    compare_init,
    read_summary,
    resolve_policy,
    run_episodes,
    run_sweep,
    summarize,
    summary_csv,
    write_episodes,
)
from .envs import ENV_NAMES, EnvSpec
from .errors import SparseStrikeError
from .experts import scripted_action
from .ga import INIT_MODES, GaConfig
from .oracle import greedy_action, query
from .perturbation import TARGET_CHANNELS, FsaConfig
from .state import StateShape
from .trajectory import load as load_trajectory
from .trajectory import record_rollout, save as save_trajectory

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
SEED_ENV_VAR = "SPARSE_STRIKE_SEED"

COMMANDS = ("attack", "sweep-fsa", "sweep-tca", "compare-init", "record", "baseline", "report")

DEFAULTS = {
    "env": "mini_pong",
    "shape": None,  # per-environment default below
    "max_steps": 300,
    "lives": 3,
    "fsa_size": 1,
    "target_channels": "newest_only",
    "pop_size": 10,
    "max_evals": 400,
    "selection_rate": 0.2,
    "mutation_rate": 0.1,
    "init": "random_init",
    "runs": 30,
    "seed": 0,
    "tca_threshold": None,
    "tca_mean_of_trajectory": True,
    "trials": 10,
    "agent": "scripted",
}
DEFAULT_SHAPES = {"mini_pong": "32x32x4", "grid_chase": "16x16x4"}


class UsageError(Exception):
    pass


@dataclass
class Command:
    name: str
    options: dict = field(default_factory=dict)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _unit_float(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def parse_int_list(text: str) -> list[int]:
    """``"1:10"`` (inclusive), ``"1:10:3"`` or ``"1,2,4"``."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        start, stop = parts[0], parts[1]
        stride = parts[2] if len(parts) == 3 else 1
        values = list(range(start, stop + 1, stride))
    else:
        values = [int(p) for p in text.split(",") if p.strip()]
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"sizes must be positive integers, got {text!r}")
    return values


def parse_float_list(text: str) -> list[float]:
    """``"0:1:0.1"`` (inclusive) or ``"0,0.5,1"``."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step")
        start, stop, stride = parts
        count = int(round((stop - start) / stride)) + 1
        values = [round(start + i * stride, 10) for i in range(count)]
    else:
        values = [float(p) for p in text.split(",") if p.strip()]
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError(f"thresholds must lie in [0, 1], got {text!r}")
    return values


def _add_campaign_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", help="policy JSON file (default: distilled expert)")
    p.add_argument("--env", choices=ENV_NAMES)
    p.add_argument("--shape", help="HxWxC, e.g. 32x32x4")
    p.add_argument("--max-steps", type=_positive_int)
    p.add_argument("--lives", type=_positive_int)
    p.add_argument("--fsa-size", type=_positive_int, help="pixels per adversary (n)")
    gate = p.add_mutually_exclusive_group()
    gate.add_argument("--tca-threshold", type=_unit_float, help="entropy gate in [0, 1]")
    gate.add_argument("--tca-mean-of-trajectory", action="store_true", default=None,
                      help="gate at the mean uncertainty of an unattacked rollout")
    p.add_argument("--target-channels", choices=TARGET_CHANNELS)
    p.add_argument("--pop-size", type=_positive_int)
    p.add_argument("--max-evals", type=_positive_int)
    p.add_argument("--selection-rate", type=float)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--init", choices=INIT_MODES)
    p.add_argument("--runs", type=_positive_int)
    _add_common(p)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=_positive_int,
                   help="worker processes for episodes (default: CPU count)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON file of defaults (keys as flag names)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-strike",
        description="Black-box sparse-pixel attacks on pixel-input RL policies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("attack", help="run attacked episodes")
    _add_campaign_flags(p)
    p = sub.add_parser("baseline", help="run unattacked episodes")
    _add_campaign_flags(p)
    p = sub.add_parser("sweep-fsa", help="sweep the number of attacked pixels")
    _add_campaign_flags(p)
    p.add_argument("--sizes", type=parse_int_list, default=None, help="e.g. 1:10 or 1,2,4")
    p = sub.add_parser("sweep-tca", help="sweep the entropy-gate threshold")
    _add_campaign_flags(p)
    p.add_argument("--thresholds", type=parse_float_list, default=None, help="e.g. 0:1:0.1")
    p = sub.add_parser("compare-init", help="random vs warm-start GA initialization")
    _add_campaign_flags(p)
    p.add_argument("--trajectory", help="recorded rollout (default: record one with the policy)")
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--frames", type=lambda s: [int(v) for v in s.split(",")],
                   help="frame indices (default: frames the gate opens on)")
    p = sub.add_parser("record", help="record an unattacked rollout")
    p.add_argument("--env", choices=ENV_NAMES)
    p.add_argument("--shape")
    p.add_argument("--max-steps", type=_positive_int)
    p.add_argument("--lives", type=_positive_int)
    p.add_argument("--agent", choices=("scripted", "policy"))
    p.add_argument("--policy")
    _add_common(p)
    p = sub.add_parser("report", help="plot-ready data from a run directory")
    p.add_argument("--in", dest="in_dir", required=True, help="run directory")
    p.add_argument("--format", choices=("plotdata", "table"), default="plotdata")
    p.add_argument("--out", help="write to this file instead of standard output")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config file must contain a JSON object")
    return {k.replace("-", "_"): v for k, v in raw.items()}


def parse_args(argv: list[str] | None = None) -> Command:
    """Parse and resolve settings; raise ``SystemExit(2)`` on usage errors."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if v is not None and k != "command"}
    options: dict = {}
    if ns.command != "report":
        options.update(DEFAULTS)
        if SEED_ENV_VAR in os.environ:
            try:
                options["seed"] = int(os.environ[SEED_ENV_VAR])
            except ValueError:
                parser.error(f"{SEED_ENV_VAR} must be an integer")
        if flags.get("config"):
            try:
                options.update(_load_config_file(flags["config"]))
            except UsageError as exc:
                parser.error(str(exc))
        if "tca_threshold" in flags:
            options["tca_mean_of_trajectory"] = False
        elif flags.get("tca_mean_of_trajectory"):
            options["tca_threshold"] = None
    options.update(flags)
    if ns.command != "report":
        if options.get("shape") is None:
            options["shape"] = DEFAULT_SHAPES[options["env"]]
        if options.get("threads") is None:
            options["threads"] = os.cpu_count() or 1
        try:
            build_campaign_config(options)
        except (SparseStrikeError, ValueError, TypeError) as exc:
            parser.error(str(exc))
    return Command(ns.command, options)


def build_campaign_config(o: dict) -> CampaignConfig:
    env = EnvSpec(
        name=o["env"],
        shape=StateShape.parse(o["shape"]) if isinstance(o["shape"], str) else StateShape(*o["shape"]),
        max_steps=int(o["max_steps"]),
        lives=int(o["lives"]),
    )
    fsa = FsaConfig(n=int(o["fsa_size"]), target_channels=o["target_channels"])
    ga = GaConfig(
        population_size=int(o["pop_size"]),
        selection_rate=float(o["selection_rate"]),
        mutation_rate=float(o["mutation_rate"]),
        max_evaluations=int(o["max_evals"]),
        init_mode=o["init"],
    )
    if o.get("tca_threshold") is not None:
        threshold = float(o["tca_threshold"])
    else:
        threshold = MEAN_OF_TRAJECTORY
    return CampaignConfig(
        env=env,
        policy_path=o.get("policy"),
        fsa=fsa,
        ga=ga,
        tca_threshold=threshold,
        runs=int(o["runs"]),
        base_seed=int(o["seed"]),
        threads=int(o.get("threads") or 1),
    )


def _out_dir(options: dict) -> Path | None:
    if not options.get("out"):
        return None
    out = Path(options["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, command: str, config: CampaignConfig, extra: dict | None = None) -> None:
    cfg = config.to_dict()
    cfg.pop("threads")  # must not change outputs
    meta = {"tool": "sparse-strike", "version": __version__, "command": command, "config": cfg}
    if extra:
        meta.update(extra)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _print_rows(rows) -> None:
    for row in rows:
        label = "" if row.sweep_param in ("none", "baseline") else f"{row.sweep_param}={row.value} "
        print(
            f"{label}mean_reward={row.mean_reward:.4g} std_reward={row.std_reward:.4g} "
            f"attacked_frames={row.mean_attacked_frames:.4g} total_frames={row.mean_total_frames:.4g} "
            f"runs={row.runs}"
        )


def _run_campaign(cmd: Command) -> int:
    o = cmd.options
    config = build_campaign_config(o)
    out = _out_dir(o)
    if cmd.name in ("attack", "baseline"):
        if cmd.name == "baseline":
            config = config.with_param("tca_threshold", 0.0)
        records = run_episodes(config)
        rows = [summarize(records, "baseline" if cmd.name == "baseline" else "none", "")]
    else:
        if cmd.name == "sweep-fsa":
            sweep = Sweep("fsa_size", tuple(o.get("sizes") or range(1, 11)))
        else:
            default = [round(0.1 * i, 10) for i in range(11)]
            sweep = Sweep("tca_threshold", tuple(o.get("thresholds") or default))
        rows, records = run_sweep(replace(config, sweep=sweep))
    if out is not None:
        write_episodes(out / "episodes.jsonl", records)
        (out / "summary.csv").write_text(summary_csv(rows))
        _write_meta(out, cmd.name, config)
    _print_rows(rows)
    return EXIT_OK


def _run_compare(cmd: Command) -> int:
    o = cmd.options
    config = build_campaign_config(o)
    policy = resolve_policy(config, check_actions=not o.get("trajectory"))
    if o.get("trajectory"):
        shape, records = load_trajectory(o["trajectory"])
        if shape != config.env.shape:
            raise SparseStrikeError(f"trajectory shape {shape} != env shape {config.env.shape}")
    else:
        spec = config.env.with_seed(config.base_seed)
        records = record_rollout(spec, lambda env, state: greedy_action(query(policy, state)))
    rows = compare_init(config, records, frame_ids=o.get("frames"), trials=int(o["trials"]),
                        policy=policy)
    out = _out_dir(o)
    if out is not None:
        (out / "compare_init.csv").write_text(compare_csv(rows))
        _write_meta(out, cmd.name, config, {"trials": int(o["trials"])})
    for mode in ("random_init", "warm_start"):
        evals = [r.evaluations for r in rows if r.mode == mode]
        if evals:
            print(f"{mode}: frames={len(set(r.frame for r in rows))} "
                  f"median_evaluations={float(np.median(evals)):.4g} "
                  f"success_rate={np.mean([r.success for r in rows if r.mode == mode]):.3f}")
    if not rows:
        print("no frames selected")
    return EXIT_OK


def _run_record(cmd: Command) -> int:
    o = cmd.options
    if not o.get("out"):
        raise UsageError("record needs --out FILE")
    shape = StateShape.parse(o["shape"]) if isinstance(o["shape"], str) else StateShape(*o["shape"])
    spec = EnvSpec(o["env"], shape, int(o["max_steps"]), int(o["lives"]), int(o["seed"]))
    if o["agent"] == "scripted":
        choose = lambda env, state: scripted_action(env)  # noqa: E731
    else:
        config = build_campaign_config(o)
        policy = resolve_policy(config)
        choose = lambda env, state: greedy_action(query(policy, state))  # noqa: E731
    records = record_rollout(spec, choose)
    Path(o["out"]).parent.mkdir(parents=True, exist_ok=True)
    save_trajectory(o["out"], records, shape)
    print(f"recorded frames={len(records)} reward={sum(r.reward for r in records):.4g} -> {o['out']}")
    return EXIT_OK


PLOT_SERIES = (
    ("reward", "mean_reward", "std_reward"),
    ("attacked_frames", "mean_attacked_frames", "std_attacked_frames"),
    ("total_frames", "mean_total_frames", "std_total_frames"),
)


def report_text(in_dir: str | Path, fmt: str = "plotdata") -> str:
    """Render ``summary.csv`` of a run directory as x/y/err series or a table."""
    rows = read_summary(Path(in_dir) / "summary.csv")
    if fmt == "plotdata":
        lines = ["series,sweep_param,x,y,err"]
        for series, mean_key, std_key in PLOT_SERIES:
            for row in rows:
                lines.append(f"{series},{row['sweep_param']},{row['value']},{row[mean_key]},{row[std_key]}")
        return "\n".join(lines) + "\n"
    header = ("param", "value", "reward", "attacked", "frames", "runs")
    table = [header]
    for row in rows:
        table.append((
            row["sweep_param"], row["value"],
            f"{float(row['mean_reward']):.3f} ± {float(row['std_reward']):.3f}",
            f"{float(row['mean_attacked_frames']):.1f} ± {float(row['std_attacked_frames']):.1f}",
            f"{float(row['mean_total_frames']):.1f}", row["runs"],
        ))
    widths = [max(len(str(r[i])) for r in table) for i in range(len(header))]
    return "\n".join("  ".join(str(v).ljust(w) for v, w in zip(r, widths)) for r in table) + "\n"


def _run_report(cmd: Command) -> int:
    text = report_text(cmd.options["in_dir"], cmd.options.get("format", "plotdata"))
    if cmd.options.get("out"):
        Path(cmd.options["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run(cmd: Command) -> int:
    handlers = {
        "attack": _run_campaign,
        "baseline": _run_campaign,
        "sweep-fsa": _run_campaign,
        "sweep-tca": _run_campaign,
        "compare-init": _run_compare,
        "record": _run_record,
        "report": _run_report,
    }
    try:
        return handlers[cmd.name](cmd)
    except UsageError as exc:
        print(f"sparse-strike: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SparseStrikeError, OSError) as exc:
        print(f"sparse-strike: {cmd.name} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv: list[str] | None = None) -> int:
    try:
        cmd = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
