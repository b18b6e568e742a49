#!/usr/bin/env python3
"""Exit codes and output schemas of the flexcz command-line tool.

usage: cli_contract.py <flexcz binary> <data dir> <schema dir>
"""

import json
import os
import random
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

CLI, DATA, SCHEMAS = sys.argv[1:4]
FAILURES = []


def load_registry():
    resources = []
    for name in sorted(os.listdir(SCHEMAS)):
        with open(os.path.join(SCHEMAS, name)) as f:
            doc = json.load(f)
        resources.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(resources)


REGISTRY = load_registry()


def validate(doc, schema_id):
    schema = REGISTRY.contents(schema_id)
    jsonschema.Draft202012Validator(schema, registry=REGISTRY).validate(doc)


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=600)


def check(name, cond, extra=""):
    print(("ok   " if cond else "FAIL ") + name + (": " + extra if extra and not cond else ""))
    if not cond:
        FAILURES.append(name)


def expect_exit(name, proc, code):
    check(name, proc.returncode == code, f"exit {proc.returncode}, stderr {proc.stderr.strip()[:300]}")
    if code != 0:
        try:
            err = json.loads(proc.stderr.strip().splitlines()[-1])
            check(name + " error line", set(err) == {"error", "message", "exit_code"} and err["exit_code"] == code,
                  proc.stderr)
        except (ValueError, IndexError):
            check(name + " error line", False, proc.stderr)


def expect_document(name, proc, schema_id):
    expect_exit(name, proc, 0)
    try:
        doc = json.loads(proc.stdout)
        validate(doc, schema_id)
        check(name + " schema", True)
        return doc
    except (ValueError, jsonschema.ValidationError) as e:
        check(name + " schema", False, str(e)[:300])
        return None


def data(name):
    return os.path.join(DATA, name)


def write_temp(doc, tmp, name):
    path = os.path.join(tmp, name)
    with open(path, "w") as f:
        json.dump(doc, f)
    return path


def main():
    case4 = data("case4dist_ext.json")
    with open(case4) as f:
        case4_doc = json.load(f)
    validate(case4_doc, "flexcz-case/1")
    with open(data("case15_ext.json")) as f:
        validate(json.load(f), "flexcz-case/1")
    for fixture in ("cube.json", "simplex.json"):
        with open(data(fixture)) as f:
            validate(json.load(f), "flexcz-polytope/1")

    with tempfile.TemporaryDirectory() as tmp:
        doc = expect_document("for json", run("for", case4, "--horizon", "1"), "flexcz-for/1")
        if doc:
            check("for json hull", len(doc["vertices"]) >= 3 and doc["dimension"] == 2 and doc["area"] > 0)
            validate(doc["cz"], "flexcz-cz/1")

        out = os.path.join(tmp, "for.json")
        expect_exit("for --out", run("for", case4, "--horizon", "2", "--mode", "loss-ll", "--out", out), 0)
        with open(out) as f:
            validate(json.load(f), "flexcz-for/1")

        proc = run("for", case4, "--horizon", "1", "--format", "csv")
        expect_exit("for csv", proc, 0)
        lines = proc.stdout.strip().splitlines()
        check("for csv header", lines[0] == "p_1_2(1),q_1_2(1)" and len(lines) >= 4, proc.stdout[:200])

        doc = expect_document("for 3-d", run("for", case4, "--horizon", "2", "--select", "root_p3"), "flexcz-for/1")
        if doc:
            check("for 3-d has no hull", doc["dimension"] == 3 and doc["vertices"] == [])

        doc = expect_document("for enlarged parallel",
                              run("for", case4, "--horizon", "2", "--bounds", "enlarged:10", "--parallel",
                                  "--threads", "2"), "flexcz-for/1")
        if doc:
            check("for enlarged report", doc["report"]["bounds_mode"].startswith("enlarged")
                  and doc["report"]["threads"] == 2)

        doc = expect_document("compare case", run("compare", case4, "--horizon", "2"), "flexcz-compare/1")
        if doc:
            check("compare case match", doc["match"] and doc["max_relative_mismatch"] <= 1e-6)
        for fixture in ("cube.json", "simplex.json"):
            doc = expect_document("compare " + fixture, run("compare", data(fixture)), "flexcz-compare/1")
            if doc:
                check("compare " + fixture + " match", doc["match"] and doc["keep"] == [0, 1])

        doc = expect_document("bench json", run("bench", case4, "--horizons", "1,2", "--repeats", "2"),
                              "flexcz-bench/1")
        if doc:
            check("bench rows", [r["horizon"] for r in doc["rows"]] == [1, 2])
        proc = run("bench", case4, "--horizons", "1", "--repeats", "1", "--format", "csv")
        expect_exit("bench csv", proc, 0)
        check("bench csv shape", len(proc.stdout.strip().splitlines()) == 2)

        doc = expect_document("slice", run("slice", case4, "--horizon", "2", "--p1", "auto:3"), "flexcz-slices/1")
        if doc:
            check("slice count", len(doc["slices"]) == 3)

        doc = expect_document("convert", run("convert", data("cube.json")), "flexcz-cz/1")
        if doc:
            check("convert shape", doc["dim"] == 3 and doc["n_g"] == 9 and doc["m"] == 6)

        # usage and schema errors
        expect_exit("unknown option", run("for", case4, "--bogus"), 2)
        expect_exit("missing file", run("for", os.path.join(tmp, "nope.json")), 2)
        expect_exit("bad mode", run("for", case4, "--mode", "ac"), 2)
        expect_exit("bad selection", run("for", case4, "--select", "p_9_9(1),q_1_2(1)"), 2)
        expect_exit("zero horizon", run("for", case4, "--horizon", "0"), 2)
        expect_exit("slice horizon 1", run("slice", case4, "--horizon", "1"), 2)
        bad = dict(case4_doc, schema="flexcz-case/9")
        expect_exit("wrong schema id", run("for", write_temp(bad, tmp, "bad.json")), 2)
        with open(os.path.join(tmp, "broken.json"), "w") as f:
            f.write("{\"schema\": ")
        expect_exit("broken json", run("for", os.path.join(tmp, "broken.json")), 2)
        cyc = json.loads(json.dumps(case4_doc))
        cyc["branches"].append({"from": 4, "to": 1, "r": 0.01, "x": 0.01, "l_max": 1.0})
        expect_exit("cyclic case", run("for", write_temp(cyc, tmp, "cyc.json")), 2)

        # infeasible: bus 2 pinned at the root voltage while drawing power
        tight = json.loads(json.dumps(case4_doc))
        tight["buses"][1]["v_min"] = 1.0
        tight["buses"][1]["v_max"] = 1.0
        tight["generators"] = []
        expect_exit("infeasible case", run("for", write_temp(tight, tmp, "tight.json"), "--horizon", "1"), 3)

        # Fourier-Motzkin row cap
        rng = random.Random(7)
        rows = [[rng.gauss(0, 1) for _ in range(6)] for _ in range(60)]
        poly = {"schema": "flexcz-polytope/1", "dim": 6, "A_ineq": rows, "b_ineq": [1.0] * 60, "keep": [0, 1]}
        for j in range(6):
            for s in (1.0, -1.0):
                poly["A_ineq"].append([s if k == j else 0.0 for k in range(6)])
                poly["b_ineq"].append(3.0)
        path = write_temp(poly, tmp, "dense.json")
        expect_exit("row cap", run("compare", path, "--row-cap", "100", "--prune-every", "0"), 6)

    if FAILURES:
        print(f"{len(FAILURES)} CLI contract check(s) failed")
        return 1
    print("all CLI contract checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
