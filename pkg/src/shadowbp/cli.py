"""Command-line front end: ``run``, ``sweep`` and ``verify``.

Exit status: 0 on success, 1 when a verification battery fails, 2 for
malformed input (scenario syntax or structure, unknown parameter or suite,
empty value list) and 3 when a well-formed scenario breaks a model
invariant or a run violates conservation or FIFO order.
"""

from __future__ import annotations

import argparse
import inspect
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import checks
from .harness import ConfigError, run
from .reports import write_manifest, write_rows, write_run_outputs
from .scenario_io import (ScenarioParseError, apply_override, locate, parse_overrides,
                          resolve_source, scenario_from_dict, scenario_to_dict)

log = logging.getLogger("shadowbp")

SWEEP_PARAMS = ("lambda", "beta", "M", "N")


class InvariantViolation(RuntimeError):
    pass


def load_spec(source, overrides=(), slots=None):
    """Resolve a scenario name or path, apply ``key=value`` overrides and
    build the run spec."""
    doc, text = resolve_source(source)
    for key, value in parse_overrides(overrides):
        apply_override(doc, key, value)
    if slots is not None:
        apply_override(doc, "slots", slots)
    try:
        return scenario_from_dict(doc), doc
    except ScenarioParseError as exc:
        pos = locate(text, exc.path) if text and exc.path else None
        raise (exc.at(*pos) if pos else exc)


def _run_checked(scenario):
    out = run(scenario)
    if not out.conservation_ok():
        raise InvariantViolation(f"packet conservation failed in {scenario.name}")
    if out.engine == "shadow" and out.fifo_violations:
        raise InvariantViolation(f"{out.fifo_violations} FIFO order violations in {scenario.name}")
    return out


def cmd_run(args):
    spec, _ = load_spec(args.scenario, args.set, args.slots)
    reps = args.seeds or spec.replications
    base = spec.scenario
    rows = []
    for r in range(reps):
        sc = replace(base, seed=base.seed + r)
        log.info("run %s seed=%d slots=%d", sc.name, sc.seed, sc.slots)
        out = _run_checked(sc)
        out_dir = args.out if reps == 1 else os.path.join(args.out, f"rep{r}")
        resolved = scenario_to_dict(replace(spec, scenario=sc, replications=1))
        write_run_outputs(out_dir, out, sc.network, resolved, spec.topology)
        rows.append((r, sc.seed, out.mean_shadow_total(), out.mean_real_total()))
    if reps > 1:
        write_rows(os.path.join(args.out, "replications.csv"),
                   ["replication", "seed", "mean_shadow_total", "mean_real_total"], rows)
    return 0


def _parse_values(raw):
    values = [v for chunk in raw for v in chunk.split(",") if v.strip()]
    if not values:
        raise ScenarioParseError("sweep needs at least one value")
    return [v.strip() for v in values]


def cmd_sweep(args):
    if args.param not in SWEEP_PARAMS:
        raise ScenarioParseError(f"unknown sweep parameter {args.param!r}; "
                                 f"choose from {', '.join(SWEEP_PARAMS)}")
    values = _parse_values(args.values)
    seeds = args.seeds or 1
    os.makedirs(args.out, exist_ok=True)
    rows, resolved = [], []
    for value in values:
        spec, _ = load_spec(args.scenario, list(args.set) + [f"{args.param}={value}"], args.slots)
        per_seed = []
        for r in range(seeds):
            sc = replace(spec.scenario, seed=spec.scenario.seed + r)
            log.info("sweep %s=%s seed=%d", args.param, value, sc.seed)
            out = _run_checked(sc)
            stats = (out.mean_shadow_total(), out.mean_real_total(),
                     out.mean_latency() if out.engine == "shadow" else None)
            per_seed.append(stats)
            rows.append((args.param, value, sc.seed) + stats)
        mean = [None if any(s[i] is None for s in per_seed) else float(np.mean([s[i] for s in per_seed]))
                for i in range(3)]
        rows.append((args.param, value, "mean", *mean))
        resolved.append(scenario_to_dict(spec))
    write_rows(os.path.join(args.out, "sweep.csv"),
               ["param", "value", "seed", "mean_shadow_total", "mean_real_total", "mean_latency"], rows)
    write_manifest(os.path.join(args.out, "manifest.json"), resolved,
                   {"sweep": {"param": args.param, "values": values, "seeds": seeds}})
    return 0


def cmd_verify(args):
    suite = checks.SUITES.get(args.suite)
    if suite is None:
        raise ScenarioParseError(f"unknown suite {args.suite!r}; choose from {', '.join(checks.SUITES)}")
    kwargs = {}
    if args.slots:
        kwargs["slots"] = args.slots
        if "budget" in inspect.signature(suite).parameters:
            kwargs["budget"] = float("inf")
    res = suite(**kwargs)
    results = list(res.checks)
    if args.suite != "stability":
        results += checks.invariant_checks(res.logs).checks
    print(f"suite {args.suite}: {res.seconds:.1f}s")
    print(checks.format_table(results))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_rows(os.path.join(args.out, f"verify_{args.suite}.csv"),
                   ["check", "passed", "measured", "target"],
               [(c.name, c.passed, c.measured, c.target) for c in results])
    return 0 if all(c.passed for c in results) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="shadowbp", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True,
                        help="scenario file or built-in name (linear40, chain5, grid16, diamond8)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter or run setting (repeatable)")
        sp.add_argument("--seeds", type=int, help="number of seeds, counting up from the scenario seed")
        sp.add_argument("--slots", type=int, help="horizon T in slots")

    sp = sub.add_parser("run", help="simulate one scenario and write CSV outputs")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="repeat a scenario over parameter values and seeds")
    common(sp)
    sp.add_argument("--param", required=True, help="one of: " + ", ".join(SWEEP_PARAMS))
    sp.add_argument("--values", nargs="*", default=[], help="comma or space separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run a verification battery and print pass/fail")
    sp.add_argument("suite", help="one of: " + ", ".join(checks.SUITES))
    sp.add_argument("--slots", type=int, help="shorter horizon (disables the runtime check)")
    sp.add_argument("--out", help="also write the table as CSV here")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InvariantViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
