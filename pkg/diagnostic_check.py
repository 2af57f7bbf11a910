# diagnostic_check.py
"""
Render an emitted report.json with rich: per-suite status, worst residuals,
failed checks and the form-factor agreement.

    python diagnostic_check.py out/report.json
"""

import argparse
import os
import sys
from collections import defaultdict

from rich import box
from rich.panel import Panel
from rich.table import Table

from reports.report_writer import load_report
from sov6v.logs import console
from sov6v.suites import RunReport

# ============================================================
#  THRESHOLDS
# ============================================================
# a passing check within this factor of its tolerance is flagged
MARGIN_WARN = 0.1


# ============================================================
#  UTILS
# ============================================================
def glyph(passed: bool, residual: float | None = None, tol: float | None = None) -> str:
    if not passed:
        return "❌"
    if residual is not None and tol is not None and residual > MARGIN_WARN * tol:
        return "⚠️"
    return "✅"


def fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2e}"


# ============================================================
#  SECTIONS
# ============================================================
def suite_table(report: RunReport) -> Table:
    table = Table(title="Suites", box=box.SIMPLE_HEAVY)
    table.add_column("Suite", style="cyan")
    table.add_column("Status", style="bold")
    table.add_column("Checks", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Worst residual / tol", justify="right")
    for suite in report.suites:
        ratios = [c.residual / c.tol for c in suite.checks if c.residual is not None and c.tol]
        failed = sum(not c.passed for c in suite.checks)
        table.add_row(
            suite.name,
            glyph(suite.passed),
            str(len(suite.checks)),
            str(failed),
            fmt(max(ratios)) if ratios else "-",
        )
    return table


def check_table(report: RunReport, only_flagged: bool = True) -> Table:
    table = Table(title="Flagged checks" if only_flagged else "All checks", box=box.SIMPLE_HEAVY)
    table.add_column("Check", style="cyan")
    table.add_column("Status", style="bold")
    table.add_column("Residual", justify="right")
    table.add_column("Tol", justify="right")
    table.add_column("Message", style="dim")
    for suite in report.suites:
        for c in suite.checks:
            mark = glyph(c.passed, c.residual, c.tol)
            if only_flagged and mark == "✅":
                continue
            table.add_row(c.id, mark, fmt(c.residual), fmt(c.tol), c.message)
    return table


def form_factor_table(report: RunReport) -> Table | None:
    rows = report.tables.get("form_factors", [])
    if not rows:
        return None
    grouped = defaultdict(list)
    for row in rows:
        grouped[row["formula"]].append(row)
    table = Table(title="Form factors", box=box.SIMPLE_HEAVY)
    table.add_column("Formula", style="cyan")
    table.add_column("Count", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Worst residual", justify="right")
    table.add_column("Worst branch gap", justify="right")
    for formula in sorted(grouped):
        group = grouped[formula]
        branches = [r["branch_residual"] for r in group if r.get("branch_residual") is not None]
        table.add_row(
            formula,
            str(len(group)),
            str(sum(not r["passed"] for r in group)),
            fmt(max(r["residual"] for r in group)),
            fmt(max(branches)) if branches else "-",
        )
    return table


# ============================================================
#  MAIN
# ============================================================
def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="diagnostic_check.py")
    parser.add_argument("report", nargs="?", default=os.path.join("out", "report.json"))
    parser.add_argument("--all", action="store_true", help="list every check, not only flagged ones")
    args = parser.parse_args(argv)

    if not os.path.exists(args.report):
        console.print(f"❌ [red]report not found at {args.report}[/red]")
        return 2
    report = load_report(args.report)
    cfg = report.config
    console.print(
        Panel(
            f"[bold cyan]🔍 sov6v report[/bold cyan]  N={cfg['N']} (x,y)=({cfg['x']},{cfg['y']}) seed={cfg['seed']}",
            expand=False,
        )
    )
    console.print(suite_table(report))
    console.print(check_table(report, only_flagged=not args.all))
    ff = form_factor_table(report)
    if ff is not None:
        console.print(ff)
    for name in ("eigenvalues", "bethe_roots", "inhom"):
        if report.tables.get(name):
            console.print(f" • {name}: {len(report.tables[name])} rows")

    if report.passed:
        console.rule("[bold green]All checks passed")
        return 0
    console.rule("[bold red]Failures present")
    console.print("[bold cyan]⚠️ Review ❌ rows above.[/bold cyan]")
    return 1


if __name__ == "__main__":
    sys.exit(main())
