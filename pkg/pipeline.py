# pipeline.py
"""
Batch driver: run verification suites for one config and write the reports.

    python pipeline.py all --config config/default.json --out out
    python pipeline.py spectrum --kappa 1,0 --kappa 0.7,0.2
"""

import argparse
import json
import logging
import sys

from rich import box
from rich.table import Table

from reports.report_writer import emit_report
from sov6v.config import RunConfig, parse_config
from sov6v.errors import ConfigError
from sov6v.logs import console, setup_logging
from sov6v.suites import RunReport, run_suite

logger = logging.getLogger("sov6v.pipeline")

DEFAULT_CONFIG = "config/default.json"

# -------- subcommands --------
COMMANDS = {
    "verify": ("elliptic", "repspace", "sovbasis", "spectrum"),
    "spectrum": ("spectrum",),
    "bethe": ("tq",),
    "tq-inhom": ("tqinhom",),
    "formfactors": ("formfactors",),
    "all": None,
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _kappa(text: str) -> list[float]:
    try:
        re, im = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}") from exc
    return [re, im]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipeline.py", description="Antiperiodic dynamical 6-vertex SOV verification")
    parser.add_argument("command", choices=list(COMMANDS))
    parser.add_argument("--config", default=DEFAULT_CONFIG, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--tol", type=float, default=None, help="tolerance applied to every check")
    parser.add_argument("--kappa", type=_kappa, action="append", default=None, metavar="RE,IM")
    parser.add_argument("--verbose", action="store_true")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Read the config file and apply the command-line overrides."""
    try:
        with open(args.config, "r", encoding="utf-8") as f:
            data = json.loads(f.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", path=args.config) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg})", path=f"line {exc.lineno}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top-level document must be an object")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["out"] = args.out
    if args.tol is not None:
        data["tol"] = {**data.get("tol", {}), "*": args.tol}
    if args.kappa:
        data["kappa"] = args.kappa
    suites = COMMANDS[args.command]
    if suites is not None:
        data["suites"] = list(suites)
    return parse_config(json.dumps(data))


def print_summary(report: RunReport) -> None:
    table = Table(title="sov6v suites", box=box.SIMPLE_HEAVY)
    table.add_column("Suite", style="bold")
    table.add_column("Status")
    table.add_column("Checks", justify="right")
    table.add_column("Worst residual", justify="right")
    for suite in report.suites:
        residuals = [c.residual for c in suite.checks if c.residual is not None]
        worst = f"{max(residuals):.2e}" if residuals else "-"
        failed = sum(not c.passed for c in suite.checks)
        status = "✅ PASS" if suite.passed else f"❌ FAIL ({failed})"
        table.add_row(suite.name, status, str(len(suite.checks)), worst)
    console.print(table)
    for suite in report.suites:
        for c in suite.checks:
            if not c.passed:
                res = "-" if c.residual is None else f"{c.residual:.3e}"
                console.print(f"❌ {c.id}: residual {res} (tol {c.tol}) {c.message}", markup=False)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else None)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        console.print(f"❌ configuration error: {exc}", markup=False)
        return EXIT_CONFIG
    console.rule(f"[bold]{args.command}[/bold] N={cfg.N} (x,y)=({cfg.x},{cfg.y}) seed={cfg.seed}")
    report = run_suite(cfg)
    paths = emit_report(report, cfg.out)
    print_summary(report)
    console.print(f"📁 {len(paths)} files written to {cfg.out}")
    if not report.suites:
        console.print("⚠️ No suites selected.")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
