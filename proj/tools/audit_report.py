#!/usr/bin/env python3
"""Recompute the headline numbers of a pascali-lab run from errors.csv.

usage: audit_report.py OUTDIR [OUTDIR ...]

Checks that report.json's "error" equals the largest abs in errors.csv,
that abs is the norm of the re/im columns, and that the table summary
matches. Exit status 1 on any mismatch.
"""

import csv
import json
import math
import sys
from pathlib import Path


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def audit(outdir):
    problems = []
    report = json.loads((outdir / "report.json").read_text(encoding="utf-8"))
    with open(outdir / "errors.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    if header[:2] != ["x", "y"] or header[-2:] != ["abs", "residual"]:
        problems.append(f"unexpected header {header}")
        return problems
    comps = header[2:-2]
    max_abs = 0.0
    max_res = None
    for k, row in enumerate(data, start=2):
        vals = [float(v) for v in row[2:-2]]
        norm = math.sqrt(sum(v * v for v in vals))
        a = float(row[-2])
        if not close(norm, a):
            problems.append(f"line {k}: abs {a} but |({', '.join(comps)})| = {norm}")
        max_abs = max(max_abs, a)
        if row[-1] != "":
            r = float(row[-1])
            max_res = r if max_res is None else max(max_res, r)

    table = report.get("table", {})
    if table.get("rows") != len(data):
        problems.append(f"table rows {table.get('rows')} but csv has {len(data)}")
    if table.get("max_abs") is not None and not close(table["max_abs"], max_abs):
        problems.append(f"table max_abs {table['max_abs']} but csv gives {max_abs}")
    if max_res is not None and not close(table.get("max_residual") or 0.0, max_res):
        problems.append(f"table max_residual {table.get('max_residual')} but csv gives {max_res}")
    if "error" in report:
        if not close(report["error"], max_abs, 1e-9):
            problems.append(f"headline error {report['error']} but csv gives {max_abs}")
    elif data:
        problems.append("report has samples but no headline error")
    return problems


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    failed = False
    for arg in argv[1:]:
        outdir = Path(arg)
        problems = audit(outdir)
        if problems:
            failed = True
            for p in problems:
                print(f"{outdir}: {p}")
        else:
            print(f"{outdir}: ok")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
