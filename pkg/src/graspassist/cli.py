"""Command-line entry point.

Subcommands: run, replay, suite, serve, score, init-scenario.
Exit codes: 0 success, 2 scenario validation failure, 3 runtime error,
4 replay divergence, 5 port in use.

Flags mirror environment variables with the GRASPASSIST_ prefix
(GRASPASSIST_SEED, GRASPASSIST_OUT, GRASPASSIST_PORT,
GRASPASSIST_RESOLUTION, GRASPASSIST_QUIET); explicit flags win.
Subcommands never mutate their input files.
"""

from __future__ import annotations

import argparse
import errno
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import harness, report, scoring, server
from .errors import GraspAssistError, IncompleteLog, ScenarioError
from .perception import CameraIntrinsics
from .scenario import (
    STANDARD_OBJECTS,
    canonical_scenario,
    load_scenario,
    save_scenario,
    standard_suite,
)

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_RUNTIME = 3
EXIT_DIVERGED = 4
EXIT_PORT = 5

ENV_PREFIX = "GRASPASSIST_"


def _env(name: str) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + name)


def _parse_resolution(text: str) -> CameraIntrinsics:
    try:
        w_str, h_str = text.lower().split("x")
        width, height = int(w_str), int(h_str)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"resolution must look like 160x120: {text!r}") from exc
    if width < 16 or height < 16:
        raise argparse.ArgumentTypeError("resolution too small to be useful")
    scale = width / 160.0
    return CameraIntrinsics(
        fx=130.0 * scale,
        fy=130.0 * scale,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
    )


def _build_config(args: argparse.Namespace) -> harness.SimConfig:
    config = harness.SimConfig()
    if getattr(args, "resolution", None):
        config = replace(config, intrinsics=_parse_resolution(args.resolution))
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed_override=args.seed)
    return config


def _say(args: argparse.Namespace, message: str) -> None:
    if not args.quiet:
        print(message)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _build_config(args)
    log = harness.run(scenario, config)
    log.write(out / "events.jsonl")
    gas = scoring.score(log, scenario)
    (out / "score.json").write_text(
        json.dumps(
            {
                "scenario": scenario.name,
                "grasping": gas.grasping,
                "maintaining": gas.maintaining,
                "gas": gas.gas,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    summary = (
        f"scenario: {scenario.name}\n"
        f"object: {scenario.object.name} ({scenario.object.grasp_type.value})\n"
        f"grasping: {gas.grasping}\nmaintaining: {gas.maintaining}\ngas: {gas.gas}\n"
        f"log lines: {len(log.lines)}\n"
    )
    (out / "summary.txt").write_text(summary)
    report.render_telemetry_figure(log, out / "telemetry.png")
    _say(args, summary.rstrip())
    _say(args, f"wrote {out / 'events.jsonl'}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    log = harness.EventLog.read(args.log)
    try:
        result = harness.replay(log)
    except IncompleteLog as exc:
        print(f"replay error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if result.ok:
        _say(args, "replay ok: regenerated command stream matches byte-for-byte")
        return EXIT_OK
    print(
        f"replay diverged at output #{result.divergence_index}:\n"
        f"  logged:      {result.expected}\n"
        f"  regenerated: {result.actual}",
        file=sys.stderr,
    )
    return EXIT_DIVERGED


def cmd_suite(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _build_config(args)
    scenarios = standard_suite(trials_per_object=args.trials)
    results = []
    for sc in scenarios:
        log = harness.run(sc, config)
        log.write(out / f"{sc.name}.jsonl")
        gas = scoring.score(log, sc)
        results.append((sc, gas))
        _say(
            args,
            f"{sc.name:<24} grasping={gas.grasping:.1f} maintaining={gas.maintaining:.1f}",
        )
    rows = scoring.aggregate(results)
    report.write_run_summary(rows, out)
    (out / "suite_scores.json").write_text(
        json.dumps(
            [
                {
                    "scenario": sc.name,
                    "object": sc.object.name,
                    "grasp_type": sc.object.grasp_type.value,
                    "material": sc.object.material.value,
                    "grasping": gas.grasping,
                    "maintaining": gas.maintaining,
                    "gas": gas.gas,
                }
                for sc, gas in results
            ],
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    _say(args, "\n" + report.score_table_text(rows).rstrip())
    _say(args, f"\nwrote {out / 'scores.csv'}, {out / 'scores.png'}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    config = _build_config(args)
    log_path = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / "events.jsonl"
    _say(args, f"serving {scenario.name} on ws://{args.host}:{args.port} (speed x{args.speed})")
    try:
        server.serve(
            scenario,
            config,
            host=args.host,
            port=args.port,
            speed=args.speed,
            log_path=log_path,
        )
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            print(f"port {args.port} unavailable: {exc}", file=sys.stderr)
            return EXIT_PORT
        raise
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    log = harness.EventLog.read(args.log)
    gas = scoring.score(log, scenario)
    print(
        json.dumps(
            {"grasping": gas.grasping, "maintaining": gas.maintaining, "gas": gas.gas},
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_init_scenario(args: argparse.Namespace) -> int:
    by_name = {obj.name: obj for obj in STANDARD_OBJECTS}
    if args.object not in by_name:
        print(
            f"unknown object {args.object!r}; choose from {sorted(by_name)}", file=sys.stderr
        )
        return EXIT_SCENARIO
    scenario = canonical_scenario(by_name[args.object], seed=args.seed or 0)
    save_scenario(scenario, args.out)
    _say(args, f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspassist",
        description="Grasp-assistance control simulator: run, replay, score, serve.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, out_default: str = "out") -> None:
        p.add_argument("--seed", type=int, default=_int_env("SEED"), help="seed override")
        p.add_argument("--out", default=_env("OUT") or out_default, help="output directory")
        p.add_argument(
            "--resolution",
            default=_env("RESOLUTION"),
            help="render resolution WxH (default 160x120)",
        )
        p.add_argument(
            "--quiet",
            action="store_true",
            default=_env("QUIET") not in (None, "", "0"),
            help="suppress progress output",
        )

    p_run = sub.add_parser("run", help="run one scenario, write log + score + summary")
    p_run.add_argument("scenario", help="scenario JSON path")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="re-drive a log's inputs and verify its outputs")
    p_replay.add_argument("log", help="events.jsonl path")
    p_replay.add_argument(
        "--quiet", action="store_true", default=_env("QUIET") not in (None, "", "0")
    )
    p_replay.set_defaults(func=cmd_replay)

    p_suite = sub.add_parser("suite", help="run the 6-object x N-trial evaluation suite")
    p_suite.add_argument("--trials", type=int, default=3, help="trials per object")
    common(p_suite, out_default="suite_out")
    p_suite.set_defaults(func=cmd_suite)

    p_serve = sub.add_parser("serve", help="interactive mode with the console endpoint")
    p_serve.add_argument("scenario", help="scenario JSON path")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=_int_env("PORT") or 8765)
    p_serve.add_argument(
        "--speed", type=float, default=1.0, help="wall-clock speed multiplier"
    )
    common(p_serve, out_default="")
    p_serve.set_defaults(func=cmd_serve)

    p_score = sub.add_parser("score", help="score an existing log against its scenario")
    p_score.add_argument("log", help="events.jsonl path")
    p_score.add_argument("scenario", help="scenario JSON path")
    p_score.add_argument(
        "--quiet", action="store_true", default=_env("QUIET") not in (None, "", "0")
    )
    p_score.set_defaults(func=cmd_score)

    p_init = sub.add_parser("init-scenario", help="write a canonical scenario file")
    p_init.add_argument("--object", default="glass_high", help="built-in object name")
    p_init.add_argument("--seed", type=int, default=_int_env("SEED"))
    p_init.add_argument("--out", default=_env("OUT") or "scenario.json", help="output path")
    p_init.add_argument(
        "--quiet", action="store_true", default=_env("QUIET") not in (None, "", "0")
    )
    p_init.set_defaults(func=cmd_init_scenario)

    return parser


def _int_env(name: str) -> Optional[int]:
    raw = _env(name)
    if raw in (None, ""):
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except GraspAssistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
