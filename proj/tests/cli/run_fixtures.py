#!/usr/bin/env python3
"""Fixture suite for the collectiva CLI: exit codes, schema validity,
reproducibility modulo the timestamp, and per-command expectations."""

import argparse
import json
import os
import random
import re
import subprocess
import sys
import tempfile

import jsonschema

TIMESTAMP = re.compile(rb'"generated_at": "[^"]*"')


def strip_timestamp(data):
    return TIMESTAMP.sub(b'"generated_at": ""', data)


class Suite:
    def __init__(self, cli, schema, fixtures, work):
        self.cli = cli
        self.validator = jsonschema.Draft202012Validator(schema)
        self.fx = fixtures
        self.work = work
        self.failures = []
        self.count = 0

    def path(self, name):
        for base in (self.fx, self.work):
            p = os.path.join(base, name)
            if os.path.exists(p):
                return p
        return os.path.join(self.fx, name)

    def run(self, args, env=None):
        e = dict(os.environ)
        e.pop("COLLECTIVA_MAX_MEM", None)
        e.update(env or {})
        return subprocess.run([self.cli] + args, capture_output=True, env=e, timeout=300)

    def fail(self, name, msg):
        self.failures.append(f"{name}: {msg}")
        print(f"FAIL {name}: {msg}")

    def expect_ok(self, name, args, check=None, env=None):
        self.count += 1
        first = self.run(args, env)
        if first.returncode != 0:
            return self.fail(name, f"exit {first.returncode}: {first.stderr.decode().strip()}")
        second = self.run(args, env)
        if strip_timestamp(first.stdout) != strip_timestamp(second.stdout):
            return self.fail(name, "reports differ beyond the timestamp")
        out = os.path.join(self.work, name + ".json")
        third = self.run(args + ["--out", out], env)
        if third.returncode != 0 or third.stdout:
            return self.fail(name, "--out run misbehaved")
        with open(out, "rb") as f:
            if strip_timestamp(f.read()) != strip_timestamp(first.stdout):
                return self.fail(name, "--out report differs from stdout report")
        report = json.loads(first.stdout)
        errors = sorted(self.validator.iter_errors(report), key=lambda e: list(e.path))
        if errors:
            return self.fail(name, f"schema: {errors[0].message} at {list(errors[0].path)}")
        if report["config"].get("seed") is None:
            return self.fail(name, "seed not recorded")
        if check:
            try:
                check(report["payload"], report)
            except AssertionError as e:
                return self.fail(name, f"check failed: {e}")
        print(f"ok   {name}")

    def expect_exit(self, name, args, code, env=None, needle=None):
        self.count += 1
        out = os.path.join(self.work, name + ".json")
        r = self.run(args + ["--out", out], env)
        if r.returncode != code:
            return self.fail(name, f"exit {r.returncode}, wanted {code}: {r.stderr.decode().strip()}")
        if os.path.exists(out):
            return self.fail(name, "a report was written despite the error")
        if not r.stderr:
            return self.fail(name, "no message on stderr")
        if needle and needle not in r.stderr.decode():
            return self.fail(name, f"stderr lacks '{needle}'")
        print(f"ok   {name} (exit {code})")


def generate_inputs(work):
    rng = random.Random(20240601)
    with open(os.path.join(work, "uniform.bin"), "wb") as f:
        f.write(bytes(rng.getrandbits(8) for _ in range(1 << 17)))
    coin = random.Random(7)
    with open(os.path.join(work, "coin.txt"), "w") as f:
        f.write("".join("1" if coin.random() < 0.5 else "0" for _ in range(200000)))


def assert_(cond, msg):
    if not cond:
        raise AssertionError(msg)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--fixtures", required=True)
    a = ap.parse_args()
    with open(a.schema) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)

    with tempfile.TemporaryDirectory() as work:
        generate_inputs(work)
        s = Suite(a.cli, schema, a.fixtures, work)
        p = s.path

        def half(pl):
            v = pl["verdict"]
            assert_(v["stabilized"], "not stabilized")
            for lab in v["labels"]:
                assert_(abs(lab["estimate_value"] - 0.5) < 0.01, "estimate not near 1/2")

        s.expect_ok("stabilize_alternating", ["stabilize", p("alternating.txt")], lambda pl, r: half(pl))
        s.expect_ok("stabilize_uniform_raw", ["stabilize", p("uniform.bin")], lambda pl, r: half(pl))
        s.expect_ok("stabilize_ternary_csv", ["stabilize", p("ternary.csv"), "--window", "1000", "--eps", "0.05"],
                    lambda pl, r: assert_(pl["sequence"]["alphabet"] == ["a", "b", "c"], "alphabet"))

        def evens(pl, r):
            rules = {x["name"]: x for x in pl["rules"]}
            assert_(rules["evens"]["max_deviation"] == "1/2" and rules["evens"]["status"] == "fail", "evens")
            assert_(rules["identity"]["max_deviation"] == "0/1" and rules["identity"]["status"] == "pass", "identity")

        s.expect_ok("select_alternating", ["select", p("alternating.txt"), "--rules", "evens,identity"], evens)
        s.expect_ok("randomness_coin", ["randomness", p("coin.txt"), "--rules", "identity,primes,coin", "--seed", "5"],
                    lambda pl, r: assert_(pl["passes"] and r["config"]["seed"] == 5, "coin family should pass"))
        s.expect_ok("randomness_alternating", ["randomness", p("alternating.txt"), "--rules", "odds"],
                    lambda pl, r: assert_(not pl["passes"], "alternating should fail odds"))

        def mixed(pl, r):
            assert_(pl["additivity"]["holds"], "additivity")
            assert_(pl["mixed"]["length"] == pl["sequence"]["length"], "length")

        s.expect_ok("mix_ternary", ["mix", p("ternary.csv"), "--subset", "a,c", "--window", "1000"], mixed)

        def zeros(pl, r):
            assert_(pl["estimate"]["rate"] < 0.1, "zeros rate")

        s.expect_ok("complexity_zeros", ["complexity", p("zeros.bin")], zeros)
        s.expect_ok("complexity_uniform", ["complexity", p("uniform.bin"), "--codec", "arith0"],
                    lambda pl, r: assert_(pl["estimate"]["rate"] >= 0.9 and not pl["dips"], "uniform rate"))
        s.expect_ok("battery_zeros", ["battery", p("zeros.bin")],
                    lambda pl, r: assert_(not pl["results"][0]["passed"], "monobit should fail"))
        s.expect_ok("battery_uniform", ["battery", p("uniform.bin")],
                    lambda pl, r: assert_(pl["passed"], "uniform battery should pass"))

        def runs_fail(pl, r):
            runs = [t for t in pl["results"] if t["name"] == "runs"][0]
            assert_(not runs["passed"] and runs["p_value"] < 1e-6, "runs should fail")

        s.expect_ok("battery_alternating", ["battery", p("alternating.bin")], runs_fail)
        s.expect_ok("battery_short_skips", ["battery", p("alternating.txt"), "--tests", "monobit"],
                    lambda pl, r: assert_(len(pl["results"]) == 1, "one test"))

        def short(pl, r):
            assert_(all(t["skipped"] for t in pl["results"]), "all skipped")
            assert_(not pl["passed"], "nothing ran")

        open(os.path.join(s.work, "short.txt"), "w").write("0110")
        s.expect_ok("battery_too_short", ["battery", p("short.txt")], short)

        s.expect_ok("marginal_infeasible", ["marginal", p("corr_infeasible.json")],
                    lambda pl, r: assert_(not pl["feasibility"]["feasible"] and pl["boole_bell"]["violated"], "infeasible"))
        s.expect_ok("marginal_zero", ["marginal", p("corr_zero.json")],
                    lambda pl, r: assert_(pl["feasibility"]["feasible"], "feasible"))
        s.expect_ok("marginal_joint_roundtrip", ["marginal", p("joint.json")],
                    lambda pl, r: assert_(pl["feasibility"]["feasible"]
                                          and pl["feasibility"]["witness_max_deviation"] == "0/1", "round trip"))
        s.expect_ok("marginal_signaling_csv", ["marginal", p("signaling.csv")],
                    lambda pl, r: assert_(not pl["feasibility"]["feasible"]
                                          and "no-signaling" in pl["feasibility"]["violated"]["name"], "signaling"))
        s.expect_ok("consistency_swapped", ["consistency", p("swapped.json")],
                    lambda pl, r: assert_(pl["kolmogorov"]["violations"][0]["kind"] == "permutation", "permutation"))
        s.expect_ok("consistency_projection", ["consistency", p("signaling.csv")],
                    lambda pl, r: assert_(pl["kolmogorov"]["violations"][0]["kind"] == "projection", "projection"))

        s.expect_ok("padic_geometric", ["padic", p("geometric.csv"), "--precision", "20"],
                    lambda pl, r: assert_(pl["outcome"] == "p-adic-only"
                                          and pl["padic"]["reconstructed_limit"] == "-1/1", "geometric"))
        s.expect_ok("padic_constant", ["padic", p("constant.csv"), "--prime", "3"],
                    lambda pl, r: assert_(pl["outcome"] == "both", "constant"))
        s.expect_ok("padic_coin", ["padic", p("coin.txt"), "--label", "1", "--precision", "20"],
                    lambda pl, r: assert_(pl["outcome"] == "real-only"
                                          and pl["full_sequence"]["outcome"] == "real-only", "coin"))

        def signed(pl, r):
            rows = pl["weak_lln"]["rows"]
            assert_(all(x["total_mass"] == "1/1" for x in rows), "total mass")
            assert_(rows[-1]["error"] <= 0.01 * rows[0]["error"], "weak LLN")
            assert_(pl["complement_law"]["holds"], "complement law")

        s.expect_ok("signed_bundled", ["signed", "--space", "signed-coin"], signed)
        s.expect_ok("signed_file", ["signed", p("signed_coin.json"), "--samples", "50", "--seed", "3"], signed)
        s.expect_ok("ville_default", ["ville", "--length", "10000"],
                    lambda pl, r: assert_(pl["constructed"] and pl["floor_holds"]
                                          and all(x["deviation"] <= 0.01 for x in pl["rules"]), "ville"))

        # exit 2: input and configuration errors
        s.expect_exit("empty_input", ["stabilize", p("empty.txt")], 2)
        s.expect_exit("missing_file", ["stabilize", os.path.join(s.work, "nope.txt")], 2)
        s.expect_exit("unknown_rule", ["select", p("alternating.txt"), "--rules", "identity,bogus"], 2, needle="catalogue")
        s.expect_exit("unknown_format", ["stabilize", p("alternating.txt"), "--format", "xml"], 2)
        s.expect_exit("bad_seed", ["select", p("alternating.txt"), "--seed", "-4"], 2)
        s.expect_exit("unknown_command", ["frobnicate"], 2)
        s.expect_exit("composite_prime", ["padic", p("geometric.csv"), "--prime", "9"], 2)
        s.expect_exit("bad_rational", ["padic", p("bad_rational.csv")], 2)
        s.expect_exit("malformed_json", ["marginal", p("malformed.json")], 2)
        s.expect_exit("malformed_csv", ["marginal", p("malformed.csv")], 2)
        s.expect_exit("unnormalized_signed", ["signed", p("signed_unnormalized.json")], 2)
        s.expect_exit("unknown_codec", ["complexity", p("zeros.bin"), "--codec", "lz77"], 2)
        s.expect_exit("non_binary_complexity", ["complexity", p("ternary.csv")], 2)
        s.expect_exit("bad_mem_env", ["signed", "--space", "signed-coin"], 2, env={"COLLECTIVA_MAX_MEM": "lots"})
        # exit 3: capacity
        s.expect_exit("convolution_cap", ["signed", "--space", "twenty-atom", "--schedule", "200"], 3,
                      env={"COLLECTIVA_MAX_MEM": "100"})
        s.expect_exit("feasibility_cap", ["marginal", p("joint.json")], 3, env={"COLLECTIVA_MAX_MEM": "4"})

        print(f"{s.count - len(s.failures)}/{s.count} fixtures passed")
        return 1 if s.failures else 0


if __name__ == "__main__":
    sys.exit(main())
