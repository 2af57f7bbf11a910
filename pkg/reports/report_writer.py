# report_writer.py
"""
Write a RunReport to disk:
- report.json (canonical key order, complex numbers as [re, im])
- checks.csv (one row per check)
- eigenvalues.csv / bethe_roots.csv / form_factors.csv / inhom.csv when present
"""

import json
import logging
import os

import pandas as pd

from sov6v.suites import RunReport

logger = logging.getLogger("sov6v.reports")

REPORT_JSON = "report.json"


def canonical_report_json(report: RunReport) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def load_report(path: str) -> RunReport:
    with open(path, "r", encoding="utf-8") as f:
        return RunReport.model_validate_json(f.read())


# -------- table flattening --------
_JOINED = {"terms"}


def _split_pairs(row: dict) -> dict:
    """[re, im] cells become <name>_re / <name>_im columns."""
    out = {}
    for key, value in row.items():
        if key not in _JOINED and isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
            out[f"{key}_re"], out[f"{key}_im"] = value
        elif isinstance(value, list):
            out[key] = ";".join(str(v) for v in value)
        else:
            out[key] = value
    return out


def eigenvalue_frame(rows: list[dict]) -> pd.DataFrame:
    records = []
    for row in rows:
        rec = {"index": row["index"]}
        for a, (re, im) in enumerate(row["values"], start=1):
            rec[f"re_xi{a}"] = re
            rec[f"im_xi{a}"] = im
        records.append(rec)
    return pd.DataFrame.from_records(records)


def checks_frame(report: RunReport) -> pd.DataFrame:
    records = [
        {
            "suite": suite.name,
            "check": c.id,
            "residual": c.residual,
            "tol": c.tol,
            "status": "PASS" if c.passed else "FAIL",
            "message": c.message,
        }
        for suite in report.suites
        for c in suite.checks
    ]
    return pd.DataFrame.from_records(records, columns=["suite", "check", "residual", "tol", "status", "message"])


def table_frame(name: str, rows: list[dict]) -> pd.DataFrame:
    if name == "eigenvalues":
        return eigenvalue_frame(rows)
    return pd.DataFrame.from_records([_split_pairs(r) for r in rows])


# -------- emit --------
def emit_report(report: RunReport, out_dir: str, formats: tuple[str, ...] = ("json", "csv")) -> list[str]:
    """Write the requested formats into out_dir and return the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, REPORT_JSON)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(canonical_report_json(report))
        written.append(path)
    if "csv" in formats:
        if report.suites:
            path = os.path.join(out_dir, "checks.csv")
            checks_frame(report).to_csv(path, index=False)
            written.append(path)
        for name in sorted(report.tables):
            rows = report.tables[name]
            if not rows:
                continue
            path = os.path.join(out_dir, f"{name}.csv")
            table_frame(name, rows).to_csv(path, index=False)
            written.append(path)
    logger.info("wrote %d report files to %s", len(written), out_dir)
    return written
