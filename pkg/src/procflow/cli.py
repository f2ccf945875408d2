"""Command line interface.

Subcommands: ``validate`` a definition file, ``flatten`` a hierarchy,
``run`` one scenario, ``inject`` one fault, ``suite`` for the canonical
20-run failure-injection table, ``serve`` to host the engine for
consoles and datagram clients, and ``report`` to render saved runs.

Exit codes: 0 success, 1 validation or run failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import time
from pathlib import Path

from .definition import ParseError, load_definition
from .flatten import FlattenError, expand_flat
from .reporting import render
from .scenario import (
    DEFAULT_SUITE_SEED,
    FaultKind,
    InjectedFault,
    RunReport,
    fem_scenario,
    run_scenario,
    suite,
    tms_scenario,
)
from .serve import ServeConfig, ServeSession
from .validation import validate

ERROR_PREFIX = "procflow: error:"

_FAULT_NAMES = {
    "missing-plan": FaultKind.MISSING_LANDMARK_PLAN,
    "missing-landmark": FaultKind.MISSING_LANDMARK,
    "large-error": FaultKind.LARGE_DIGITIZATION_ERROR,
}


def _fail(message: str, code: int = 1) -> int:
    print(f"{ERROR_PREFIX} {message}", file=sys.stderr)
    return code


def _existing_path(value: str) -> Path:
    path = Path(value)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"path does not exist: {value}")
    return path


def _write_or_print(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _scenario_from_args(args) -> "Scenario":
    from .scenario import Scenario, scenario_from_config  # noqa: F401

    if getattr(args, "config", None):
        scenario = scenario_from_config(args.config)
    else:
        base = tms_scenario if args.scenario == "TMS" else fem_scenario
        scenario = base(seed=args.seed)
    overrides = {}
    if getattr(args, "sigma", None) is not None:
        overrides["digitization_noise_sigma"] = args.sigma
    if getattr(args, "threshold", None) is not None:
        overrides["residual_threshold"] = args.threshold
    if overrides:
        from dataclasses import replace

        scenario = replace(scenario, **overrides)
    if getattr(args, "config", None) and args.seed is not None and args.seed != 0:
        from dataclasses import replace

        scenario = replace(scenario, rng_seed=args.seed)
    return scenario


def cmd_validate(args) -> int:
    try:
        defn = load_definition(args.path)
    except ParseError as err:
        return _fail(f"parse failed: {err}")
    report = validate(defn)
    if args.format == "jsonl":
        for finding in report.violations:
            print(json.dumps({"severity": "violation", **finding.__dict__}, sort_keys=True))
        for finding in report.warnings:
            print(json.dumps({"severity": "warning", **finding.__dict__}, sort_keys=True))
        if report.ok:
            print(json.dumps({"severity": "ok", "workflow": defn.name}, sort_keys=True))
    else:
        print(str(report))
    return 0 if report.ok else 1


def cmd_flatten(args) -> int:
    try:
        defn = load_definition(args.path)
    except ParseError as err:
        return _fail(f"parse failed: {err}")
    report = validate(defn)
    if not report.ok:
        return _fail(f"definition invalid:\n{report}")
    try:
        flat = expand_flat(defn, max_states=args.cap)
    except FlattenError as err:
        return _fail(str(err))
    from .definition import serialize_definition

    text = serialize_definition(flat)
    _write_or_print(text, args.out)
    print(
        f"# {flat.name}: {len(flat.branches[0].states)} states over "
        f"{len(flat.branches[0].start)} digits",
        file=sys.stderr,
    )
    return 0


def cmd_run(args) -> int:
    scenario = _scenario_from_args(args)
    report = run_scenario(scenario)
    _write_or_print(render([report], args.format), args.out)
    return 0 if report.completed and report.consistent else 1


def cmd_inject(args) -> int:
    scenario = _scenario_from_args(args)
    kind = _FAULT_NAMES[args.fault]
    try:
        fault = InjectedFault(kind, args.landmark, args.axis, args.offset)
        report = run_scenario(scenario, fault)
    except ValueError as err:
        return _fail(str(err))
    _write_or_print(render([report], args.format), args.out)
    return 0 if report.consistent else 1


def cmd_suite(args) -> int:
    reports = suite(args.seed, sigma=args.sigma, threshold=args.threshold)
    _write_or_print(render(reports, args.format), args.out)
    consistent = all(r.consistent for r in reports)
    if not consistent:
        bad = [i + 1 for i, r in enumerate(reports) if not r.consistent]
        return _fail(f"suite rows {bad} did not behave as documented")
    return 0


_SERVE_CONFIG_KEYS = {
    # config-file key -> (argparse attribute, argparse default)
    "host": ("host", "127.0.0.1"),
    "port": ("port", 47001),
    "bridge_port": ("bridge_port", 47002),
    "poll_ms": ("poll_ms", 5.0),
    "snapshot_ms": ("snapshot_ms", 50.0),
}


def cmd_serve(args) -> int:
    # endpoint settings come from the config file unless overridden on
    # the command line (a flag left at its default defers to the file)
    if args.config:
        file_cfg = json.loads(Path(args.config).read_text())
        for key, (attr, default) in _SERVE_CONFIG_KEYS.items():
            if key in file_cfg and getattr(args, attr) == default:
                setattr(args, attr, type(default)(file_cfg[key]))
    config = ServeConfig(
        host=args.host,
        udp_port=args.port,
        bridge_port=args.bridge_port,
        poll_period=args.poll_ms / 1000.0,
        snapshot_period=args.snapshot_ms / 1000.0,
    )
    scenario = _scenario_from_args(args)
    session = ServeSession(scenario, config).start()
    print(
        f"engine serving scenario {scenario.name}: "
        f"udp {args.host}:{session.udp_port}, bridge {args.host}:{session.bridge_port}",
        flush=True,
    )
    stop = {"flag": False}

    def handler(_sig, _frame):
        stop["flag"] = True

    signal.signal(signal.SIGINT, handler)
    signal.signal(signal.SIGTERM, handler)
    try:
        while not stop["flag"]:
            time.sleep(0.1)
    finally:
        session.stop()
        print("engine stopped", flush=True)
    return 0


def cmd_report(args) -> int:
    reports = []
    for line in Path(args.input).read_text().splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        fault = None
        if data.get("fault"):
            fault = InjectedFault(
                FaultKind(data["fault"]["kind"]),
                data["fault"].get("landmark"),
                data["fault"].get("axis"),
                data["fault"].get("offset_mm"),
            )
        reports.append(
            RunReport(
                scenario=data["scenario"],
                fault=fault,
                seed=data.get("seed", 0),
                completed=data.get("completed", False),
                consistent=data.get("consistent", False),
                avg_residual=data.get("avg_residual"),
                rejected_operation=data.get("rejected_operation"),
                rejection_state=data.get("rejection_state"),
                rejection_label=data.get("rejection_label"),
                verdicts=tuple(tuple(v) for v in data.get("verdicts", ())),
                transitions=tuple(data.get("transitions", ())),
                placement_errors=tuple(tuple(p) for p in data.get("placement_errors", ())),
                flags=data.get("flags", {}),
            )
        )
    if not reports:
        return _fail("no reports found in input")
    _write_or_print(render(reports, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procflow",
        description="Process-controlled workflow engine and simulation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a workflow definition file")
    p.add_argument("path", type=_existing_path)
    p.add_argument("--format", choices=("text", "jsonl"), default="text")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("flatten", help="expand a hierarchy to its single-level machine")
    p.add_argument("path", type=_existing_path)
    p.add_argument("--cap", type=int, default=4096)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_flatten)

    def add_scenario_args(p, with_fault=False):
        p.add_argument("--scenario", choices=("TMS", "Fem"), default="TMS")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--sigma", type=float, default=None, help="digitization noise, mm")
        p.add_argument("--threshold", type=float, default=None, help="residual gate, mm")
        p.add_argument("--config", type=_existing_path, default=None)
        p.add_argument("--format", choices=("csv", "text", "jsonl"), default="text")
        p.add_argument("--out", type=Path, default=None)
        if with_fault:
            p.add_argument("--fault", choices=sorted(_FAULT_NAMES), required=True)
            p.add_argument("--landmark", type=int, default=None)
            p.add_argument("--axis", choices=("x", "y", "z"), default=None)
            p.add_argument("--offset", type=float, default=None, help="mm")

    p = sub.add_parser("run", help="run one control scenario")
    add_scenario_args(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("inject", help="run one scenario with an injected fault")
    add_scenario_args(p, with_fault=True)
    p.set_defaults(fn=cmd_inject)

    p = sub.add_parser("suite", help="run the canonical 20-row failure-injection suite")
    p.add_argument("--seed", type=int, default=DEFAULT_SUITE_SEED)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--format", choices=("csv", "text", "jsonl"), default="text")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("serve", help="host the engine: UDP intake plus console bridge")
    p.add_argument("--scenario", choices=("TMS", "Fem"), default="TMS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--config", type=_existing_path, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=47001)
    p.add_argument("--bridge-port", type=int, default=47002)
    p.add_argument("--poll-ms", type=float, default=5.0)
    p.add_argument("--snapshot-ms", type=float, default=50.0)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("report", help="render saved run reports (jsonl)")
    p.add_argument("--input", type=_existing_path, required=True)
    p.add_argument("--format", choices=("csv", "text", "jsonl"), default="text")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 0
    except OSError as err:
        return _fail(str(err))


if __name__ == "__main__":
    sys.exit(main())
