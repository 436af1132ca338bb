"""Command-line front end.

Exit codes: 0 success, 1 unexpected error, 2 invalid input, 3 integrator
failure, 4 cutoff overflow, 5 other domain errors.  Failures print a one-line
JSON diagnostic ``{"error": <category>, "message": ...}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import yaml

from ..errors import PolmemError
from . import presets
from .config import ScenarioConfig, dump, load
from .runner import compare_models, run, sweep, write_json

EXIT_CODES = {"validation": 2, "integrator-failure": 3, "cutoff-overflow": 4}


def _scenario(args) -> ScenarioConfig:
    if bool(args.preset) == bool(args.config):
        raise SystemExit("error: give exactly one of --preset or --config")
    return presets.get(args.preset) if args.preset else load(args.config)


def _run_opts(args) -> dict:
    return {"samples": args.samples, "rtol": args.rtol, "atol": args.atol}


def cmd_run(args):
    res = run(_scenario(args), args.out, **_run_opts(args))
    for f in res.files:
        print(f)
    s = res.summary
    print(f"signed area {s['signed_area_numeric']:.6g} ({s['circulation']})")


def _parse_value(text: str):
    return yaml.safe_load(text)


def cmd_sweep(args):
    base = _scenario(args)
    values = [_parse_value(v) for v in args.values]
    rows = sweep(base, args.param, values, args.out, **_run_opts(args))
    print(f"{args.param:>14}  {'area':>12}  {'analytic':>12}  circulation")
    for r in rows:
        ana = r["signed_area_analytic"]
        ana = "-" if ana is None else f"{ana:12.6g}"
        print(f"{str(r['value']):>14}  {r['signed_area_numeric']:12.6g}  {ana:>12}  "
              f"{r['circulation']}")


def cmd_compare(args):
    names = args.preset or list(presets.PLASTICITY_STATES)
    configs, states = [], []
    for n in names:
        if n not in presets.PLASTICITY_STATES:
            raise SystemExit(f"error: no initial-state set defined for preset {n!r}")
        configs.append(presets.get(n))
        states.append(presets.PLASTICITY_STATES[n])
    report = compare_models(configs, states, **_run_opts(args))
    if args.out:
        from pathlib import Path
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "plasticity.json", report)
    for m in report["models"]:
        areas = ", ".join(f"{a:.4g}" for a in m["signed_areas"])
        print(f"{m['name']:<8} {m['classification']:<12} "
              f"max rel diff {m['max_relative_difference']:.3g}  areas [{areas}]")


def cmd_presets(args):
    if args.action == "list":
        for n in presets.names():
            print(f"{n:<12} {presets.describe(n)}")
    else:
        if not args.name:
            raise SystemExit("error: presets show needs a preset name")
        sys.stdout.write(dump(presets.get(args.name)))


def cmd_validate(args):
    cfg = _scenario(args)
    model = cfg.build_model()
    cfg.integrator_config()
    cfg.initial_state()
    duration = cfg.resolved_duration(model.drive)
    print(f"ok: {cfg.name} ({model.kind}, dim {model.dim}, duration {duration:.6g})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polmem", description="Polariton quantum memristor simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, run_flags=True):
        sp.add_argument("--preset", help="built-in scenario name")
        sp.add_argument("--config", help="YAML scenario file")
        if run_flags:
            sp.add_argument("--out", default="out", help="output directory (default: out)")
            sp.add_argument("--samples", type=int, help="override output_samples")
            sp.add_argument("--rtol", type=float, help="override integrator rtol")
            sp.add_argument("--atol", type=float, help="override integrator atol")

    sp = sub.add_parser("run", help="run one scenario and write CSV/JSON artefacts")
    scenario_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="repeat a scenario over values of one parameter")
    scenario_args(sp)
    sp.add_argument("--param", required=True, help="dotted key, e.g. drive.T")
    sp.add_argument("values", nargs="+", help="values to substitute, in order")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare-models", help="plasticity check across initial states")
    sp.add_argument("--preset", action="append", help="scenario to compare (repeatable)")
    sp.add_argument("--out", help="directory for plasticity.json")
    sp.add_argument("--samples", type=int, help="override output_samples")
    sp.add_argument("--rtol", type=float, help="override integrator rtol")
    sp.add_argument("--atol", type=float, help="override integrator atol")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("presets", help="list or show the built-in scenarios")
    sp.add_argument("action", choices=("list", "show"))
    sp.add_argument("name", nargs="?")
    sp.set_defaults(func=cmd_presets)

    sp = sub.add_parser("validate", help="parse and check a scenario without running it")
    scenario_args(sp, run_flags=False)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except PolmemError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES.get(exc.category, 5)
    return 0


if __name__ == "__main__":
    sys.exit(main())
