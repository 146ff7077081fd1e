"""End-to-end checks of the fbd command-line tool: exit codes, determinism, schemas."""

import argparse
import copy
import filecmp
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

FAILURES = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        FAILURES.append(what)


def run(fbd, *args, env=None):
    e = dict(os.environ)
    e.pop("FB_BASIN_WORKERS", None)
    if env:
        e.update(env)
    p = subprocess.run([fbd, *args], capture_output=True, text=True, env=e)
    return p.returncode, p.stderr


def validate(schemas, name, path):
    schema = json.loads((schemas / f"{name}.schema.json").read_text())
    try:
        jsonschema.validate(json.loads(Path(path).read_text()), schema)
        check(True, f"{Path(path).name} matches {name}")
    except jsonschema.ValidationError as e:
        check(False, f"{Path(path).name} matches {name}: {e.message}")


def same_dirs(a, b):
    names = sorted(os.listdir(a))
    if names != sorted(os.listdir(b)):
        return False
    return all(filecmp.cmp(Path(a) / n, Path(b) / n, shallow=False) for n in names)


def write(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2))
    return str(path)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fbd", required=True)
    ap.add_argument("--root", required=True)
    a = ap.parse_args()
    fbd, root = a.fbd, Path(a.root)
    configs, schemas = root / "configs", root / "schemas" / "v1"
    tmp = Path(tempfile.mkdtemp(prefix="fbd_cli_"))

    for name in ["certify_quadratic", "certify_henon"]:
        validate(schemas, "certify", configs / f"{name}.json")
    for kind in ["disjoint", "lines", "varieties"]:
        validate(schemas, f"build-{kind}", configs / f"{kind}.json")
    validate(schemas, "hull", configs / "hull_annulus.json")
    validate(schemas, "render", configs / "render_henon.json")

    # certify
    rc, _ = run(fbd, "certify", "--config", str(configs / "certify_quadratic.json"), "--out", str(tmp / "cq"))
    check(rc == 0, "certify quadratic map exits 0")
    validate(schemas, "certificate-report", tmp / "cq" / "certificate.json")
    rc, _ = run(fbd, "certify", "--config", str(configs / "certify_henon.json"), "--out", str(tmp / "ch"))
    check(rc == 0, "certify Henon map exits 0")
    bad = json.loads((configs / "certify_quadratic.json").read_text())
    bad["s"], bad["r"] = 0.2, 0.5
    rc, _ = run(fbd, "certify", "--config", write(tmp / "bad_bracket.json", bad), "--out", str(tmp / "cb"))
    check(rc == 1, "certify with r^2 >= s exits 1")
    bad["s"], bad["r"] = 0.49, 0.51
    rc, _ = run(fbd, "certify", "--config", write(tmp / "tight.json", bad), "--out", str(tmp / "ct"))
    check(rc == 1, "certify with a bracket tighter than the map exits 1")
    rc, _ = run(fbd, "certify", "--config", write(tmp / "cs.json", {"sequence_file": str(tmp / "ch" / "certificate.json")}),
                "--out", str(tmp / "cs"))
    check(rc == 0, "certify re-checks a saved sequence")

    # render determinism
    job = json.loads((configs / "render_henon.json").read_text())
    job["sequence_file"] = str(tmp / "ch" / "certificate.json")
    job_path = write(tmp / "render.json", job)
    rc1, _ = run(fbd, "render", "--config", job_path, "--workers", "1", "--out", str(tmp / "r1"))
    rc2, _ = run(fbd, "render", "--config", job_path, "--workers", "4", "--out", str(tmp / "r2"))
    rc3, _ = run(fbd, "render", "--config", job_path, "--workers", "1", "--out", str(tmp / "r3"),
                 env={"FB_BASIN_WORKERS": "3"})
    check(rc1 == rc2 == rc3 == 0, "render exits 0")
    check(same_dirs(tmp / "r1", tmp / "r2") and same_dirs(tmp / "r1", tmp / "r3"),
          "render output byte-identical across 1, 4 and env-set 3 workers")
    validate(schemas, "render-summary", tmp / "r1" / "render_summary.json")
    summary = json.loads((tmp / "r1" / "render_summary.json").read_text())["summary"]
    check(summary["attracted"][0] > 0 and summary["escaped"] > 0, "Henon slice is mixed attracted/escaped")
    job["format"] = "pgm"
    rc, _ = run(fbd, "render", "--config", write(tmp / "render_pgm.json", job), "--out", str(tmp / "rp"))
    check(rc == 0 and (tmp / "rp" / "render.pgm").read_bytes().startswith(b"P5\n512 512\n255\n"), "pgm render")
    rc, err = run(fbd, "render", "--config", job_path, "--out", str(tmp / "rx"), env={"FB_BASIN_WORKERS": "0"})
    check(rc == 2 and "FB_BASIN_WORKERS" in err, "invalid FB_BASIN_WORKERS is a config error")

    # builds, twice each
    for kind in ["disjoint", "lines", "varieties"]:
        cfg = str(configs / f"{kind}.json")
        rc1, _ = run(fbd, "build", kind, "--config", cfg, "--out", str(tmp / f"b_{kind}_1"))
        rc2, _ = run(fbd, "build", kind, "--config", cfg, "--out", str(tmp / f"b_{kind}_2"))
        check(rc1 == 0 and rc2 == 0, f"build {kind} exits 0")
        check(same_dirs(tmp / f"b_{kind}_1", tmp / f"b_{kind}_2"), f"build {kind} rerun byte-identical")
        validate(schemas, "build-output", tmp / f"b_{kind}_1" / "build.json")
    rc1, _ = run(fbd, "build", "disjoint", "--config", str(configs / "disjoint.json"), "--seed", "43",
                 "--out", str(tmp / "b_seed"))
    check(rc1 == 0 and not filecmp.cmp(tmp / "b_seed" / "build.json", tmp / "b_disjoint_1" / "build.json", shallow=False),
          "--seed overrides the config seed")

    # render the disjoint build
    rjob = {"sequence_file": str(tmp / "b_disjoint_1" / "build.json"), "slice": {"extent": 4, "resolution": 200},
            "budget": 2000, "format": "png"}
    rc, _ = run(fbd, "render", "--config", write(tmp / "rd.json", rjob), "--out", str(tmp / "rd"))
    colors = json.loads((tmp / "rd" / "render_summary.json").read_text())["summary"]["attracted"]
    check(rc == 0 and sum(1 for c in colors if c > 0) >= 3, "disjoint render shows 3 basin colors")

    # verify suites
    targets = {"certificate": "b_disjoint_1", "convergence": "b_disjoint_1", "union-formula": "b_disjoint_1",
               "disjointness": "b_disjoint_1", "connectedness": "b_lines_1", "containment": "b_varieties_1"}
    vopt = write(tmp / "vopt.json", {"slice": {"extent": 3, "resolution": 60}, "budget": 2000})
    for suite, d in targets.items():
        rc, _ = run(fbd, "verify", "--suite", suite, "--target", str(tmp / d / "build.json"), "--config", vopt,
                    "--out", str(tmp / "v"))
        check(rc == 0, f"verify {suite} passes")
        validate(schemas, "verify-report", tmp / "v" / f"verify_{suite}.json")
    corrupt = json.loads((tmp / "b_disjoint_1" / "build.json").read_text())
    st = corrupt["state"]
    st["centers"][1] = copy.deepcopy(st["centers"][0])
    rc, _ = run(fbd, "verify", "--suite", "disjointness", "--target", write(tmp / "corrupt.json", corrupt),
                "--config", vopt, "--out", str(tmp / "vc"))
    report = json.loads((tmp / "vc" / "verify_disjointness.json").read_text())
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    check(rc == 1 and "a:disjoint-balls" in failed, "duplicated center fails disjointness by name")
    rc, _ = run(fbd, "verify", "--suite", "nonsense", "--out", str(tmp / "v"))
    check(rc == 2, "unknown suite exits 2")

    # hull
    rc, _ = run(fbd, "hull", "--config", str(configs / "hull_annulus.json"), "--out", str(tmp / "h"))
    h = json.loads((tmp / "h" / "hull.json").read_text())
    check(rc == 0 and h["connect"]["joined"] and not h["input_poly_convex"], "hull and connect on an annulus")

    # config diagnostics
    cases = [({"m": "three"}, "/m"), ({"mm": 3}, "'mm'"), ({"slice": {"resolution": 0}}, "resolution"),
             ({"seed": -1}, "/seed")]
    for i, (cfg, needle) in enumerate(cases):
        rc, err = run(fbd, "build", "disjoint", "--config", write(tmp / f"e{i}.json", cfg), "--out", str(tmp / "e"))
        check(rc == 2 and needle in err, f"config error names {needle}")
    (tmp / "syntax.json").write_text('{\n  "m": 3,\n  "stages": ,\n}\n')
    rc, err = run(fbd, "build", "disjoint", "--config", str(tmp / "syntax.json"), "--out", str(tmp / "e"))
    check(rc == 2 and "line 3" in err, "parse error reports its line")
    rc, _ = run(fbd, "build", "disjoint", "--workers", "0")
    check(rc == 2, "bad --workers exits 2")

    # stage failure
    rc, err = run(fbd, "build", "disjoint", "--config",
                  write(tmp / "cramped.json", {"stages": 3, "center_extent": 0.05}), "--out", str(tmp / "f"))
    check(rc == 3 and (tmp / "f" / "failed_state.json").exists(), "builder stage failure exits 3 with state dump")

    print(f"{len(FAILURES)} failure(s)")
    return 1 if FAILURES else 0


if __name__ == "__main__":
    sys.exit(main())
