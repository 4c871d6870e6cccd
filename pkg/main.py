#!/usr/bin/env python3

"""Simulate online scaling of VNF service chains.

usage: main.py simulate --config CONFIG --trace {CSV,synthetic} --algo ALGO
                        [--seeds A..B] [--pmr X] [--deploy-op-ratio X] [--preplan JSON]
                        [--out DIR]
       main.py preplan --config CONFIG --out JSON [--rate-unit MBPS] [--chain ID]
       main.py report --in DIR [--emit {csv,json}]

"""
import argparse
import os
import sys
from os.path import realpath
from pathlib import Path
from chainscale import ChainScale, configure_logging, load_settings
from chainscale.errors import ConfigurationError, PatternSpaceError, ScaleGuardError
from chainscale.models import ALGORITHMS, ExperimentSpec, Scenario, SyntheticTraceParams

# Load the configuration
filepath = realpath(__file__)
project_root = os.path.dirname(filepath)
settings = load_settings(f"{project_root}/config.cfg")


def parse_seeds(text: str) -> tuple[int, ...]:
    """``7`` is one seed, ``0..9`` the inclusive range."""

    try:

        if ".." in text:
            first, last = (int(part) for part in text.split("..", 1))

            if last < first:
                raise ValueError

            return tuple(range(first, last + 1))

        return (int(text),)

    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a seed or a range a..b")


def synthetic_params(pmr) -> SyntheticTraceParams:
    return SyntheticTraceParams(
        horizon=settings.getint("synthetic", "horizon"),
        peak_mbps=settings.getfloat("synthetic", "peak_mbps"),
        pmr=pmr if pmr is not None else settings.getfloat("synthetic", "pmr"),
        slots_per_day=settings.getint("synthetic", "slots_per_day"),
        weekly_amplitude=settings.getfloat("synthetic", "weekly_amplitude"),
        noise_sigma=settings.getfloat("synthetic", "noise_sigma"),
        seed=settings.getint("synthetic", "seed")
    )


def simulate(args) -> int:
    synthetic = args.trace == "synthetic"
    spec = ExperimentSpec(
        config_path=Path(args.config), algorithm=args.algo, seeds=args.seeds,
        output_path=Path(args.out) if args.out else None,
        trace_path=None if synthetic else Path(args.trace),
        synthetic=synthetic_params(args.pmr),
        pmr=None if synthetic else args.pmr,
        cost_ratio=args.deploy_op_ratio, chain_id=args.chain,
        rate_unit=args.rate_unit or settings.getint("preplan", "rate_unit_mbps"),
        preplan_path=Path(args.preplan) if args.preplan else None
    )
    app = ChainScale(settings=settings)
    results = app("experiment").run(spec)

    for result in results:
        ratio = f"{result.competitive_ratio:.4f}" if result.competitive_ratio is not None else "-"
        saving = f"{result.cost_saving:.2%}" if result.cost_saving is not None else "-"
        print(
            f"{result.algorithm} seed {result.seed}: total {float(result.cost.total):.6g} "
            f"ratio {ratio} saving {saving} digest {result.digest[:16]}"
            + ("" if result.completed else f" STOPPED at slot {result.violations[0].slot}")
        )

    return 0 if all(result.completed for result in results) else 2


def preplan(args) -> int:
    app = ChainScale(Scenario.from_file(args.config), settings)
    plan = app("preplan").preplan(chain_id=args.chain, rate_unit=args.rate_unit)
    app("preplan").save(plan, args.out)
    print(f"alpha_max {plan.alpha_max} Mbps" + (" (bound saturated)" if plan.saturated else ""))

    return 0


def report(args) -> int:
    app = ChainScale(settings=settings)
    print(app("report").report(args.input, args.emit), end="")

    return 0


parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
commands = parser.add_subparsers(dest="command", required=True)

simulate_parser = commands.add_parser("simulate", help="run an algorithm over a trace")
simulate_parser.add_argument("--config", required=True, help="scenario JSON file")
simulate_parser.add_argument("--trace", required=True, help="CSV trace (slot,chain_id,rate) or 'synthetic'")
simulate_parser.add_argument("--algo", required=True, choices=ALGORITHMS)
simulate_parser.add_argument("--seeds", type=parse_seeds, default=(0,), help="seed or range a..b (default: 0)")
simulate_parser.add_argument("--pmr", type=float, help="target peak-to-mean ratio")
simulate_parser.add_argument("--deploy-op-ratio", type=float, help="deployment to operational cost ratio")
simulate_parser.add_argument("--chain", type=int, default=1, help="chain for ssc_online (default: %(default)s)")
simulate_parser.add_argument("--rate-unit", type=int, help="pre-planning step in Mbps")
simulate_parser.add_argument("--preplan", help="pre-plan JSON from the preplan command (ssc_online)")
simulate_parser.add_argument("--out", help="output directory")
simulate_parser.set_defaults(handler=simulate)

preplan_parser = commands.add_parser("preplan", help="compute and cache the MAX placement of a chain")
preplan_parser.add_argument("--config", required=True, help="scenario JSON file")
preplan_parser.add_argument("--out", required=True, help="pre-plan JSON file to write")
preplan_parser.add_argument("--chain", type=int, default=1, help="chain id (default: %(default)s)")
preplan_parser.add_argument("--rate-unit", type=int, help="bisection step in Mbps")
preplan_parser.set_defaults(handler=preplan)

report_parser = commands.add_parser("report", help="summarise the runs of an output directory")
report_parser.add_argument("--in", dest="input", required=True, help="output directory of simulate")
report_parser.add_argument("--emit", choices=("csv", "json"), default="json")
report_parser.set_defaults(handler=report)

if __name__ == "__main__":
    args = parser.parse_args()
    configure_logging(settings)

    try:
        sys.exit(args.handler(args))

    except (ConfigurationError, PatternSpaceError, ScaleGuardError, ValueError) as e:
        parser.exit(1, f"error: {e}\n")
