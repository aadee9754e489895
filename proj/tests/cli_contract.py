#!/usr/bin/env python3
"""Command-line contract of pascali-lab.

usage: cli_contract.py PASCALI_LAB PROJECT_DIR WORK_DIR
"""

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

LIGHT = [
    "solve_holomorphic",
    "solve_vekua",
    "correct_perturbed",
    "runge_classical",
    "runge_vekua",
    "validate_annulus",
    "validate_disk_segment",
]

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def lab(exe, *args):
    return subprocess.run([str(exe), *map(str, args)], capture_output=True, text=True)


def main(argv):
    if len(argv) != 4:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    exe, project, work = Path(argv[1]), Path(argv[2]), Path(argv[3])
    scenarios = project / "scenarios"
    data = project / "tests" / "data"
    sys.path.insert(0, str(project / "tools"))
    import audit_report

    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)

    for cfg in sorted(scenarios.glob("*.json")):
        r = lab(exe, "validate", cfg)
        check(r.returncode == 0, f"validate {cfg.name} exits 0")

    light = work / "light"
    r = lab(exe, "run", *[scenarios / f"{name}.json" for name in LIGHT], "--out", light, "--jobs", 2)
    check(r.returncode == 0, "light scenarios run with --jobs 2 exit 0")
    for name in LIGHT:
        problems = audit_report.audit(light / name)
        check(not problems, f"audit {name}: {'; '.join(problems) or 'ok'}")

    report = json.loads((light / "validate_annulus" / "report.json").read_text(encoding="utf-8"))
    check(report["admissible"]["runge"] is False, "annulus is reported as not Runge")
    report = json.loads((light / "validate_disk_segment" / "report.json").read_text(encoding="utf-8"))
    check(report["admissible"]["ok"] is True, "disk with attached segment is admissible")

    with open(light / "solve_holomorphic" / "errors.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    worst = max(float(row["residual"]) for row in rows)
    check(rows and worst <= 1e-2, f"solve residual column max {worst:.3g} <= 1e-2")
    for svg in ("w_re.svg", "w_im.svg", "residual.svg"):
        check((light / "solve_holomorphic" / svg).is_file(), f"heatmap {svg} written")

    # same scenario, single job, must give the same bytes
    single = work / "single"
    r = lab(exe, "run", scenarios / "solve_vekua.json", "--out", single)
    check(r.returncode == 0, "single run exits 0")
    for f in ("report.json", "errors.csv"):
        same = (single / f).read_bytes() == (light / "solve_vekua" / f).read_bytes()
        check(same, f"solve_vekua {f} identical across --jobs settings")

    r = lab(exe, "run", data / "bad_key.json", "--out", work / "bad")
    check(r.returncode == 1, f"unknown key exits 1 (got {r.returncode})")
    check("/grid/resolution" in r.stderr, "unknown key message names /grid/resolution")
    r = lab(exe, "validate", data / "bad_key.json")
    check(r.returncode == 1, "validate rejects the unknown key with exit 1")

    r = lab(exe, "run", data / "mergelyan_unreachable.json", "--out", work / "unreachable")
    check(r.returncode == 2, f"unreachable budget exits 2 (got {r.returncode})")
    check("local" in r.stderr, "numerical failure names the stage")

    blocker = work / "blocker"
    blocker.write_text("not a directory\n", encoding="utf-8")
    r = lab(exe, "run", scenarios / "validate_annulus.json", "--out", blocker / "sub")
    check(r.returncode == 1, f"unwritable output exits 1 (got {r.returncode})")

    r = lab(exe, "run", work / "missing.json")
    check(r.returncode != 0, "missing config file is an error")

    mixed = work / "mixed"
    r = lab(exe, "run", scenarios / "validate_annulus.json", data / "mergelyan_unreachable.json", data / "bad_key.json",
            "--out", mixed)
    check(r.returncode == 2, f"several configs exit with the worst code (got {r.returncode})")
    check((mixed / "validate_annulus" / "report.json").is_file(), "good configs still run alongside failing ones")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
