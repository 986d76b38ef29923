"""Command line entry point.

Exit codes: 0 success, 1 validation or domain error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .domain_eval import discrepancy_report, emit_report, evaluate_subsets, power_set
from .errors import FrictionNetError
from .inference import posterior_enumeration, posterior_ve
from .network import parse_evidence
from .replay import ObserverGate, ReplayConfig, replay_report, run_replay, write_posteriors, write_report
from .roadnet import ROAD_CONDITIONS, SENSORS, is_road_network, load_model
from .sensorlog import read_log, read_truth, write_log, write_truth
from .sim import SimulatorSettings, generate_drive, load_scenario

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2
MODEL_ENV = "FRICTIONNET_MODEL"


class UsageError(FrictionNetError):
    pass


def _model(args):
    return load_model(args.model or os.environ.get(MODEL_ENV) or None)


def _road_model(args):
    model = _model(args)
    if not is_road_network(model.network):
        raise UsageError("model is not a road-condition network")
    return model


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix + p.suffix))


def cmd_validate(args) -> int:
    model = _model(args)
    for w in model.warnings:
        print(f"warning: {w}")
    net = model.network
    edges = sum(len(net.parents(n)) for n in net.names)
    print(f"ok: {len(net.variables)} variables, {edges} edges, {len(model.warnings)} renormalized rows")
    return EXIT_OK


def _parse_pairs(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        name, sep, state = item.partition("=")
        if not sep or not name or not state:
            raise UsageError(f"evidence must look like VAR=STATE, got {item!r}")
        if name in out:
            raise UsageError(f"variable {name!r} observed twice")
        out[name] = state
    return out


def cmd_infer(args) -> int:
    net = _model(args).network
    evidence = parse_evidence(net, _parse_pairs(args.evidence))
    queries = args.query or [q for q in ROAD_CONDITIONS if q in net and q not in evidence]
    method = posterior_enumeration if args.method == "enumeration" else posterior_ve
    for q in queries:
        dist = method(net, q, evidence)
        print(q)
        for state, p in zip(dist.variable.states, dist.probabilities):
            print(f"  {state} {p:.6f}")
    return EXIT_OK


def _parse_subset(text: str) -> tuple[str, ...]:
    text = text.strip()
    if text in ("", "none", "{}"):
        return ()
    parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    unknown = [p for p in parts if p not in SENSORS]
    if unknown:
        raise UsageError(f"unknown sensor(s) {', '.join(unknown)}; choose from {', '.join(SENSORS)}")
    return tuple(parts)


def cmd_eval_domain(args) -> int:
    net = _road_model(args).network
    subsets = [_parse_subset(s) for s in args.subsets] if args.subsets else power_set()
    result = evaluate_subsets(net, subsets, workers=args.workers)
    emit_report(result, args.out, weighted=args.weighted)
    note = discrepancy_report(result)
    if note:
        print("notice: acoustic-sensor reference value not met\n" + note, file=sys.stderr, end="")
    print(f"wrote {len(result.entries)} rows to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _road_model(args)
    net = model.network
    scenario = load_scenario(args.scenario)
    settings = SimulatorSettings(camera_distance=args.camera_distance, wetness=model.wetness)
    drive = generate_drive(net, scenario, args.rate, args.seed, settings)
    truth_path = args.truth or _sibling(args.out, "_truth")
    write_log(drive.records, args.out)
    write_truth(drive.truth, truth_path)
    print(f"wrote {len(drive)} records to {args.out} and ground truth to {truth_path}")
    return EXIT_OK


def cmd_replay(args) -> int:
    model = _road_model(args)
    config = ReplayConfig(
        camera_distance=args.camera_distance,
        gate=ObserverGate(args.gate_threshold),
        wetness=model.wetness,
    )
    log = read_log(args.log)
    series = run_replay(model.network, log, config)
    write_posteriors(series, args.out)
    print(f"wrote {len(series)} posteriors to {args.out}")
    if not args.truth or not os.path.exists(args.truth):
        why = "no ground truth given" if not args.truth else f"ground truth {args.truth} not found"
        print(f"notice: {why}; report skipped", file=sys.stderr)
        return EXIT_OK
    report = replay_report(series, read_truth(args.truth))
    report_path = args.report or _sibling(args.out, "_report")
    write_report(report, report_path)
    for name, row in (("camera", report.camera), ("bn", report.bn)):
        print(
            f"{name:<7} Acc(R) {row.acc_pavement:.6f}  Acc(W) {row.acc_weather:.6f}  "
            f"H(R) {row.hellinger_pavement:.6f}  H(W) {row.hellinger_weather:.6f}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--model", help=f"model file (default: ${MODEL_ENV} or the bundled model)"
    )
    parser = argparse.ArgumentParser(prog="frictionnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="load and check a model file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("infer", parents=[common], help="posterior distributions")
    p.add_argument("--evidence", action="append", metavar="VAR=STATE")
    p.add_argument("--query", action="append", metavar="VAR")
    p.add_argument("--method", choices=("ve", "enumeration"), default="ve")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval-domain", parents=[common], help="sweep all sensor subsets")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--subsets", action="append", metavar="S1,S2",
        help="restrict to these subsets (repeatable; 'none' for the empty subset)",
    )
    p.add_argument("--weighted", action="store_true", help="add probability-weighted means")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval_domain)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic drive")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=float, default=10.0, help="sample rate in Hz")
    p.add_argument("--out", required=True, help="sensor log CSV")
    p.add_argument("--truth", help="ground-truth CSV (default: <out>_truth.csv)")
    p.add_argument("--camera-distance", type=float, default=6.3)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", parents=[common], help="run a sensor log through the network")
    p.add_argument("--log", required=True)
    p.add_argument("--truth")
    p.add_argument("--out", required=True, help="posterior CSV")
    p.add_argument("--report", help="report CSV (default: <out>_report.csv)")
    p.add_argument("--camera-distance", type=float, default=6.3)
    p.add_argument("--gate-threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (FrictionNetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
