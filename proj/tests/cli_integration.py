#!/usr/bin/env python3
"""End-to-end checks of the emtwin command line."""

import argparse
import csv
import json
import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

FAILURES = []


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    if not ok:
        FAILURES.append(name)


def run(args, env=None, expect=0):
    full_env = dict(os.environ)
    full_env.update(env or {})
    proc = subprocess.run([str(a) for a in args], capture_output=True, text=True, env=full_env)
    if proc.returncode != expect:
        print(proc.stdout)
        print(proc.stderr, file=sys.stderr)
    return proc


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--emtwin", required=True)
    ap.add_argument("--config", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--workdir", required=True)
    a = ap.parse_args()

    exe, cfg = a.emtwin, a.config
    work = Path(a.workdir)
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    pinned = {"SOURCE_DATE_EPOCH": "1700000000"}

    # flux map
    p = run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "fm"])
    check("flux-map exits 0", p.returncode == 0, p.stderr.strip())
    fm = rows(work / "fm" / "flux_map.csv")
    check("flux-map has 1001 rows", len(fm) == 1001, str(len(fm)))
    centre = [r for r in fm if float(r["phi"]) == 0.0]
    check("flux-map centre at 7.45 GHz", len(centre) == 1 and abs(float(centre[0]["f_c_hz"]) - 7.45e9) < 1e3)

    p = run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "fm1",
             "--phi-min", 0, "--phi-max", 0, "--points", 1])
    one = rows(work / "fm1" / "flux_map.csv") if p.returncode == 0 else []
    check("single flux point at zero", len(one) == 1 and float(one[0]["responsivity_hz_per_phi0"]) == 0.0)

    run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "fa"], env=pinned)
    run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "fb"], env=pinned)
    same = all((work / "fa" / n).read_bytes() == (work / "fb" / n).read_bytes()
               for n in ("flux_map.csv", "flux_map_report.json", "flux_map_manifest.json"))
    check("flux-map reruns are byte-identical", same)

    # synthesis determinism
    run([exe, "synth", "--scenario", "thermal", "--config", cfg, "--seed", 42, "--out", work / "sa"], env=pinned)
    run([exe, "synth", "--scenario", "thermal", "--config", cfg, "--seed", 42, "--out", work / "sb"], env=pinned)
    run([exe, "synth", "--scenario", "thermal", "--config", cfg, "--seed", 43, "--out", work / "sc"], env=pinned)
    sa = (work / "sa" / "psd_noisy.csv").read_bytes()
    check("synth: same seed, same bytes", sa == (work / "sb" / "psd_noisy.csv").read_bytes())
    check("synth: different seed, different noise", sa != (work / "sc" / "psd_noisy.csv").read_bytes())

    # driven trace sidebands
    run([exe, "synth", "--scenario", "driven", "--beta", 5, "--config", cfg, "--seed", 3, "--out", work / "dr"])
    y = [float(r["s21_sq"]) for r in rows(work / "dr" / "driven_clean.csv")]
    minima = sum(1 for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] < y[i + 1] and y[i] < 0.999)
    check("driven trace at beta = 5 shows >= 7 dips", minima >= 7, f"{minima} dips")

    # extract round trip
    p = run([exe, "extract", "--config", cfg, "--seed", 42, "--out", work / "xa",
             "--psd", work / "sa" / "psd_noisy.csv", "--trace", work / "sa" / "s21_noisy.csv"])
    check("extract exits 0", p.returncode == 0, p.stderr.strip())
    report = json.loads((work / "xa" / "report.json").read_text())
    truth = json.loads((work / "sa" / "synth_truth.json").read_text())
    g0, err = report["g0"]["value_hz"], report["g0"]["std_err_hz"]
    check("extract recovers g0 within 3 sigma", abs(g0 - truth["g0_hz"]) < 3 * err,
          f"{g0:.1f} +- {err:.1f} Hz vs {truth['g0_hz']}")
    schema = json.loads(Path(a.schema).read_text())
    try:
        jsonschema.validate(report, schema)
        check("report.json matches the schema", True)
    except jsonschema.ValidationError as e:
        check("report.json matches the schema", False, e.message)
    check("report.json has no non-finite numbers",
          "NaN" not in (work / "xa" / "report.json").read_text())

    # calibration tone removed from the config
    conf = json.loads(Path(cfg).read_text())
    conf["calibration_tone"]["phi0_rad"] = 0.0
    silent = work / "silent.json"
    silent.write_text(json.dumps(conf))
    run([exe, "synth", "--scenario", "thermal", "--config", silent, "--seed", 5, "--out", work / "ss"])
    p = run([exe, "extract", "--config", cfg, "--seed", 5, "--out", work / "xs",
             "--psd", work / "ss" / "psd_noisy.csv"], expect=3)
    check("missing calibration tone exits 3", p.returncode == 3, f"exit {p.returncode}")

    # amplitude sweep
    run([exe, "synth", "--scenario", "driven-sweep", "--config", cfg, "--seed", 9, "--out", work / "sw"])
    p = run([exe, "bessel-sweep", "--config", cfg, "--seed", 9, "--out", work / "bs",
             "--manifest", work / "sw" / "sweep.json"])
    check("bessel-sweep exits 0", p.returncode == 0, p.stderr.strip())
    summary = json.loads((work / "bs" / "amplitude_vs_drive_summary.json").read_text())
    reg = summary.get("regression") or {}
    exponent = reg.get("exponent", math.nan)
    check("amplitude grows as sqrt(V)", abs(exponent - 0.5) <= 0.02, f"exponent {exponent}")

    sweep = json.loads((work / "sw" / "sweep.json").read_text())
    empty = dict(sweep, traces=[])
    (work / "sw" / "empty.json").write_text(json.dumps(empty))
    p = run([exe, "bessel-sweep", "--config", cfg, "--seed", 9, "--out", work / "be",
             "--manifest", work / "sw" / "empty.json"], expect=2)
    check("empty sweep manifest exits 2", p.returncode == 2, f"exit {p.returncode}")

    single = dict(sweep, traces=sweep["traces"][-1:])
    (work / "sw" / "single.json").write_text(json.dumps(single))
    p = run([exe, "bessel-sweep", "--config", cfg, "--seed", 9, "--out", work / "b1",
             "--manifest", work / "sw" / "single.json"])
    one = rows(work / "b1" / "amplitude_vs_drive.csv") if p.returncode == 0 else []
    s1 = json.loads((work / "b1" / "amplitude_vs_drive_summary.json").read_text()) if p.returncode == 0 else {}
    check("single trace gives one row and no regression", len(one) == 1 and s1.get("regression", 0) is None)

    # report rendering
    p = run([exe, "report", "--input", work / "xa" / "report.json", "--seed", 0, "--out", work / "rp"])
    md = work / "rp" / "report.md"
    check("report renders markdown", p.returncode == 0 and md.exists() and "g0" in md.read_text())

    # input errors
    p = run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "t0"],
            env={"EMTWIN_THREADS": "zero"}, expect=2)
    check("invalid EMTWIN_THREADS exits 2", p.returncode == 2, f"exit {p.returncode}")
    p = run([exe, "flux-map", "--config", work / "does_not_exist.json", "--seed", 1, "--out", work / "t1"],
            expect=2)
    check("missing config exits 2", p.returncode == 2, f"exit {p.returncode}")
    p = run([exe, "synth", "--scenario", "bogus", "--config", cfg, "--seed", 1, "--out", work / "t2"], expect=2)
    check("unknown scenario exits 2", p.returncode == 2, f"exit {p.returncode}")
    p = run([exe, "flux-map", "--config", cfg, "--seed", 1, "--out", work / "t3", "--phi-min", 0.5,
             "--phi-max", 0.5, "--points", 1], expect=4)
    check("flux point at a divergence exits 4 or flags it",
          p.returncode == 4 or (p.returncode == 0 and rows(work / "t3" / "flux_map.csv")[0]["divergent"] == "1"),
          f"exit {p.returncode}")

    print(f"{len(FAILURES)} failure(s)")
    return 1 if FAILURES else 0


if __name__ == "__main__":
    sys.exit(main())
