"""Command-line entry point.

Subcommands:
    simulate  -- render a scenario to a newline-delimited JSON frame stream
    evaluate  -- run the precision or localization study and write reports
    serve     -- stream live guidance states over TCP with steering input
    solve     -- one-shot: read frame records, print fused guidance states

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .evaluation import emit_report, run_localization_study, run_precision_study
from .rig import load_rig_config, paper_default_rig
from .server import run_pipeline, serve, state_record
from .simulator import (
    Scenario,
    frame_from_record,
    frame_to_record,
    load_scenario,
    preset_localization_study,
    preset_precision_study,
    simulate,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; we reserve 2 for
    # runtime failures, so usage problems are re-raised instead.
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="fidunav", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render a scenario to frame records")
    sim.add_argument("--scenario", required=True, help="scenario YAML file")
    sim.add_argument("--out", required=True, help="output .ndjson path")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")

    ev = sub.add_parser("evaluate", help="run a study and write reports")
    ev.add_argument("--study", required=True,
                    choices=("precision", "localization"))
    ev.add_argument("--out", required=True, help="output directory")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--noise-px", type=float, default=None,
                    help="override corner noise in pixels")
    ev.add_argument("--format", choices=("csv", "txt"), default="txt",
                    help="report format echoed to stdout")

    sv = sub.add_parser("serve", help="stream guidance states over TCP")
    sv.add_argument("--rig", default=None,
                    help="rig YAML file overriding the scenario rig")
    sv.add_argument("--scenario", required=True, help="scenario YAML file")
    sv.add_argument("--port", type=int, required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--seed", type=int, default=None)
    sv.add_argument("--max-frames", type=int, default=None,
                    help="stop after this many frames (default: scenario length)")
    sv.add_argument("--no-realtime", action="store_true",
                    help="generate frames as fast as possible")

    so = sub.add_parser("solve", help="fuse recorded frame records to poses")
    so.add_argument("--rig", default=None,
                    help="rig YAML file (default: built-in preset)")
    so.add_argument("--in", dest="infile", default="-",
                    help="frame record file, '-' for stdin")
    so.add_argument("--out", default="-",
                    help="state record file, '-' for stdout")
    so.add_argument("--seed", type=int, default=None,
                    help="accepted for interface symmetry; solving is "
                         "deterministic")
    return p


def _load_scenario_file(path: str, seed: int | None) -> Scenario:
    scenario = load_scenario(Path(path).read_text())
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=seed)
    return scenario


def _cmd_simulate(args) -> int:
    scenario = _load_scenario_file(args.scenario, args.seed)
    header = json.dumps(
        {"name": scenario.name, "n_frames": scenario.n_frames,
         "seed": scenario.seed, "v": 1},
        sort_keys=True, separators=(",", ":"),
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for frame in simulate(scenario):
            fh.write(frame_to_record(frame) + "\n")
    print(f"wrote {scenario.n_frames} frames (seed {scenario.seed}) "
          f"to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    noise = {} if args.noise_px is None else {"noise_px": args.noise_px}
    if args.study == "precision":
        scenarios = preset_precision_study(seed=args.seed, **noise)
        report = run_precision_study(scenarios)
        csv_path = out / "precision.csv"
    else:
        scenario = preset_localization_study(seed=args.seed, **noise)
        report = run_localization_study(scenario)
        csv_path = out / "localization.csv"
    csv_path.write_text(emit_report(report, "csv"))
    txt = f"seed: {args.seed}\n" + emit_report(report, "txt")
    (out / "report.txt").write_text(txt)
    sys.stdout.write(txt if args.format == "txt" else emit_report(report, "csv"))
    return EXIT_OK


def _cmd_serve(args) -> int:
    scenario = _load_scenario_file(args.scenario, args.seed)
    if args.rig is not None:
        rig = load_rig_config(Path(args.rig).read_text())
        scenario = dataclasses.replace(scenario, rig=rig)
    server = serve(
        scenario, host=args.host, port=args.port,
        realtime=not args.no_realtime, max_frames=args.max_frames,
    )
    host, port = server.address
    print(f"serving {scenario.name} (seed {scenario.seed}) on {host}:{port}",
          flush=True)
    try:
        server.join()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def _cmd_solve(args) -> int:
    if args.rig is not None:
        rig = load_rig_config(Path(args.rig).read_text())
    else:
        rig = paper_default_rig()

    def frames(lines):
        for line in lines:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "obs" not in doc:  # stream header record
                continue
            yield frame_from_record(line)

    infh = sys.stdin if args.infile == "-" else open(args.infile, encoding="utf-8")
    outfh = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        for state in run_pipeline(frames(infh), rig):
            outfh.write(state_record(state) + "\n")
    finally:
        if infh is not sys.stdin:
            infh.close()
        if outfh is not sys.stdout:
            outfh.close()
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
    "solve": _cmd_solve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return EXIT_OK
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
