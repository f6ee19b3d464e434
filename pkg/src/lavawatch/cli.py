from __future__ import annotations

import argparse
import asyncio
import getpass
import json
import logging
import sys
from collections.abc import Callable
from dataclasses import replace
from pathlib import Path
from typing import TypeVar

from lavawatch.core.alerts import flow_to_payload
from lavawatch.core.auth import hash_password
from lavawatch.core.config import load_config
from lavawatch.core.errors import ConfigError, FlowOutOfBounds, LavawatchError
from lavawatch.core.imaging import decode_frame, encode_png
from lavawatch.core.interfaces import HsvPixel
from lavawatch.core.pipeline import detect_flows, run_pipeline
from lavawatch.core.simharness import (
    DEFAULT_FLOW_COLOR,
    FlowSpec,
    Scenario,
    default_scenarios,
    generate_sequence,
    load_scenarios,
    render_report_text,
    report_to_json,
    run_benchmark,
    write_scenarios,
)
from lavawatch.infra.frame_source import write_frame_stream
from lavawatch.main import configure_logging

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

T = TypeVar("T")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="lavawatch", description="Lava flow detection and alerting.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    run = sub.add_parser("run", help="process a frame directory or stream and dispatch alerts")
    run.add_argument("--config", type=Path, required=True)
    run.add_argument("--live", action="store_true", help="stamp events with wall-clock time")

    bench = sub.add_parser("bench", help="run the synthetic detection benchmark")
    bench.add_argument("--scenarios", type=Path, help="directory of *.scenario files")
    bench.add_argument("--json", action="store_true", help="emit the report as JSON")
    bench.add_argument("--workers", type=int, default=1)

    once = sub.add_parser("detect-once", help="detect flows between two images")
    once.add_argument("--prev", type=Path, required=True)
    once.add_argument("--curr", type=Path, required=True)

    gen = sub.add_parser("gen-scenario", help="write a scenario file and its rendered frames")
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--id", dest="scenario_id", default=None)
    gen.add_argument("--frames", type=int, default=16)
    gen.add_argument("--size", default="320x240", help="WIDTHxHEIGHT")
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--no-flow", action="store_true")
    gen.add_argument("--start", default=None, help="X,Y (default: frame centre)")
    gen.add_argument("--bearing", type=float, default=270.0)
    gen.add_argument("--speed", type=float, default=2.0)
    gen.add_argument("--width", type=int, default=8)
    gen.add_argument("--length", type=float, default=10.0)
    gen.add_argument("--growth", type=float, default=0.0)
    gen.add_argument("--onset", type=int, default=0)
    gen.add_argument("--hue", type=float, default=DEFAULT_FLOW_COLOR.h)
    gen.add_argument("--format", choices=("png", "stream", "none"), default="png")
    gen.add_argument(
        "--default-set",
        action="store_true",
        help="write the 100 default benchmark scenario files instead",
    )

    pw = sub.add_parser("hash-password", help="print a monitor.password_hash value")
    pw.add_argument("--password", default=None, help="read from the terminal when omitted")
    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "bench": _cmd_bench,
        "detect-once": _cmd_detect_once,
        "gen-scenario": _cmd_gen_scenario,
        "hash-password": _cmd_hash_password,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"lavawatch: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LavawatchError, OSError) as exc:
        LOG.error("command failed command=%s error=%s", args.command, exc)
        print(f"lavawatch: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.live:
        cfg = replace(cfg, live=True)
    metrics = asyncio.run(run_pipeline(cfg))
    print(json.dumps({"metrics": metrics.as_dict()}), file=sys.stderr)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    scenarios = load_scenarios(args.scenarios) if args.scenarios else default_scenarios()
    report = run_benchmark(scenarios, workers=args.workers)
    sys.stdout.write(report_to_json(report) + "\n" if args.json else render_report_text(report))
    return EXIT_OK


def _cmd_detect_once(args: argparse.Namespace) -> int:
    try:
        prev_bytes = args.prev.read_bytes()
        curr_bytes = args.curr.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read input image: {exc}") from exc
    prev = decode_frame(prev_bytes, frame_id=0)
    curr = decode_frame(curr_bytes, frame_id=1)
    flows = detect_flows(prev, curr)
    payload = {
        "flows": [
            {**flow_to_payload(blob, trajectory), "source": trajectory.source.value}
            for blob, trajectory in flows
        ],
    }
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_gen_scenario(args: argparse.Namespace) -> int:
    if args.default_set:
        written = write_scenarios(default_scenarios(), args.out)
        print(f"wrote {len(written)} scenario files to {args.out}")
        return EXIT_OK
    scenario = _scenario_from_args(args)
    try:
        frames = generate_sequence(scenario) if args.format != "none" else []
    except FlowOutOfBounds as exc:
        raise ConfigError(str(exc)) from exc
    write_scenarios([scenario], args.out)
    if args.format == "png":
        frame_dir = args.out / scenario.scenario_id
        frame_dir.mkdir(parents=True, exist_ok=True)
        for frame in frames:
            (frame_dir / f"frame_{frame.frame_id:05d}.png").write_bytes(encode_png(frame))
    elif args.format == "stream":
        with open(args.out / f"{scenario.scenario_id}.frames", "wb") as handle:
            write_frame_stream(frames, handle)
    print(f"wrote scenario {scenario.scenario_id} ({len(frames)} frames) to {args.out}")
    return EXIT_OK


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    width, height = _parse_pair(args.size, "x", "--size", int)
    flow = None
    if not args.no_flow:
        start = (width / 2.0, height / 2.0)
        if args.start:
            start = _parse_pair(args.start, ",", "--start", float)
        try:
            flow = FlowSpec(
                start=start,
                bearing=args.bearing % 360.0,
                speed=args.speed,
                width=args.width,
                length=args.length,
                growth=args.growth,
                onset=args.onset,
                color=HsvPixel(args.hue % 360.0, DEFAULT_FLOW_COLOR.s, DEFAULT_FLOW_COLOR.v),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return Scenario(
            scenario_id=args.scenario_id or f"scenario-{args.seed}",
            frames=args.frames,
            size=(width, height),
            noise_sigma=args.noise,
            flow=flow,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_pair(raw: str, sep: str, name: str, cast: Callable[[str], T]) -> tuple[T, T]:
    left, found, right = raw.partition(sep)
    try:
        if not found:
            raise ValueError(raw)
        return cast(left), cast(right)
    except ValueError as exc:
        raise ConfigError(f"{name} must look like A{sep}B") from exc


def _cmd_hash_password(args: argparse.Namespace) -> int:
    password = args.password if args.password is not None else getpass.getpass("password: ")
    if not password:
        raise ConfigError("password must not be empty")
    print(hash_password(password))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
