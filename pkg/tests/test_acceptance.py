"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with ``-v`` output
in ``test_output.txt``). Criterion 10a is mathematically out of reach at the
stated radius and is kept as a strict xfail; see the README.
"""

import math
import time

import numpy as np
import pytest

from lorext.errors import GeneratorFlagError
from lorext.extremal import Verdict
from lorext.hardy import TWO_PI, construct_arc_constant_example
from lorext.hardy import hardy_lorentz_norm, th2a_probe
from lorext.lorentz import ConcaveGenerator, parse_generator
from lorext.rearrange import SampledFunction, decreasing_rearrangement
from lorext.suites import SuiteConfig, run_suite

STRICT = ("power:p=1.5", "power:p=2", "power:p=4")


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
        return ok
    return emit


def timed_suite(suite, **kw):
    start = time.perf_counter()
    rep = run_suite(SuiteConfig(suite, seed=kw.pop("seed", 0), **kw))
    return rep, time.perf_counter() - start


def worst(records, key, pick=max):
    return pick(r[key] for r in records)


def test_01_rearrangement_oracle(report):
    rng = np.random.default_rng(101)
    sizes = np.floor(10 ** rng.uniform(0, 5, 10_000)).astype(int)
    sizes[0] = 100_000
    elapsed, mismatches = 0.0, 0
    for n in sizes:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        start = time.perf_counter()
        prof = decreasing_rearrangement(SampledFunction(1.0, v)).values
        mismatches += not np.array_equal(prof, -np.sort(-np.abs(v)))
        elapsed += time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5.0
    assert report(1, ok, f"{sizes.size} vectors, max n={sizes.max()}, "
                         f"mismatches={mismatches}, {elapsed:.2f}s")


def test_02_norm_axioms(report):
    rep, _ = timed_suite("norm-axioms", trials=1000)
    d = worst(rep.records, "defect")
    assert report(2, rep.passed, f"{len(rep.records)} triples, worst defect {d:.2e} (tol 1e-10)")


def test_03_strict_monotonicity(report):
    rep, _ = timed_suite("strict-monotonicity", trials=500,
                         generators=("power:p=1.5", "power:p=2", "power:p=4", "two_slope", "linear"))
    m = worst(rep.records, "margin", min)
    assert report(3, rep.passed and m > 0, f"{len(rep.records)} pairs, smallest margin {m:.2e}")


def test_04_skew_inequality(report):
    rep, _ = timed_suite("skew-inequality", trials=500)
    strict = [r for r in rep.records if r.get("kind") == "partial-support"]
    eq = [r for r in rep.records if r.get("kind") != "partial-support"]
    m = worst(strict, "margin", min)
    d = worst(eq, "defect")
    ok = rep.passed and len(strict) == 500 and m > 0
    assert report(4, ok, f"{len(strict)} strict cases (min margin {m:.2e}), "
                         f"{len(eq)} equality cases (max defect {d:.1e})")


def test_05_decomposition_identity(report):
    rep, _ = timed_suite("decomposition-identity", trials=1000)
    d = worst(rep.records, "defect")
    assert report(5, rep.passed, f"{len(rep.records)} cases, worst defect {d:.2e} (tol 1e-10)")


def test_06_additivity(report):
    rep, _ = timed_suite("additivity", trials=200)
    dev = worst(rep.records, "aligned_deviation")
    gap = min(r["misaligned_gap"] for r in rep.records if not r["label"].startswith("n=1 "))
    ok = rep.passed and dev == 0.0 and gap > 0
    assert report(6, ok, f"aligned deviation {dev}, smallest misaligned gap {gap:.2e}")


def test_07_vertex_oracle(report):
    rep, secs = timed_suite("t0-vertices")
    counts = {r["label"]: r["vertices"] for r in rep.records}
    ok = rep.passed and secs < 10.0
    assert report(7, ok, f"{counts}, {secs:.1f}s")


def test_08_unimodular_extreme(report):
    rep, secs = timed_suite("unimodular-extreme")
    cert = worst(rep.records, "certificate")
    dirs = worst(rep.records, "directions", min)
    ok = rep.passed and len(rep.records) == 16 and dirs >= 32 and secs < 120.0
    assert report(8, ok, f"{len(rep.records)} cases, worst certificate {cert:.2e}, "
                         f"min directions {dirs}, {secs:.1f}s")


def test_09_l1_no_extreme(report):
    rep, _ = timed_suite("l1-no-extreme")
    d = worst(rep.records, "witness_defect")
    g = worst(rep.records, "witness_norm", min)
    ok = rep.passed and all(r["verdict"] == "NotExtreme" for r in rep.records)
    assert report(9, ok, f"{len(rep.records)} cases, witness defect {d:.1e}, min |g| {g:.3f}")


@pytest.fixture(scope="module")
def hardy_run():
    return timed_suite("hardy-roundtrip")


@pytest.mark.xfail(strict=True, reason="1 - |B| at r = 1 - 1e-4 exceeds 1e-3 once |z| > ~0.82")
def test_10a_blaschke_unimodularity(report, hardy_run):
    rep, _ = hardy_run
    recs = [r for r in rep.records if r["kind"] == "blaschke-unimodularity"]
    dev = worst(recs, "deviation")
    exact = worst(recs, "exact_deviation")
    # the shortfall is the closed form, not numerical error
    agree = max(abs(r["deviation"] - r["exact_deviation"]) for r in recs)
    assert agree <= 1e-12
    ok = all(r["passed"] for r in recs)
    report("10a", ok, f"max deviation {dev:.3e} (closed form {exact:.3e}) vs 1e-3; "
                      f"implementation matches closed form to {agree:.0e}")
    assert ok


def test_10b_outer_deficit_factor(report, hardy_run):
    rep, secs = hardy_run
    recs = {k: [r for r in rep.records if r["kind"] == k]
            for k in ("outer-roundtrip", "outerness-deficit", "recombination")}
    err = worst(recs["outer-roundtrip"], "error")
    deficit_err = max(abs(r["deficit"] + math.log(0.5)) for r in recs["outerness-deficit"])
    recomb = worst(recs["recombination"], "error")
    ok = (all(r["passed"] for v in recs.values() for r in v) and err <= 1e-4
          and deficit_err <= 1e-3 and recomb <= 1e-5 and secs < 60.0)
    assert report("10b-d", ok, f"outer sup error {err:.2e}, deficit error {deficit_err:.1e}, "
                               f"recombination {recomb:.1e}, {secs:.1f}s")


def test_11_inner_extreme(report):
    rep, secs = timed_suite("inner-extreme", trials=20)
    cert = worst(rep.records, "certificate")
    ok = rep.passed and len(rep.records) == 20 and all(r["inner"] for r in rep.records)
    assert report(11, ok, f"20 Blaschke products, worst certificate {cert:.2e} (tol 1e-5), "
                          f"{secs:.1f}s")


def test_12_arc_constant_probe(report):
    start = time.perf_counter()
    n, tol = 256, 1e-4
    worst_cert, worst_norm, all_ok = 0.0, 0.0, True
    for spec, seed in zip(STRICT, range(3)):
        phi = parse_generator(spec, TWO_PI)
        F = construct_arc_constant_example(1.0, (0.0, math.pi), [0.5], n, phi)
        worst_norm = max(worst_norm, abs(hardy_lorentz_norm(F, phi, n) - 1.0))
        for m in (4, 8, 16):
            v = th2a_probe(F, phi, m, n, tol, seed=seed)
            worst_cert = max(worst_cert, v.certificate)
            all_ok &= v.verdict is Verdict.EXTREME and v.certificate <= tol
    linear_rejected = False
    lin = ConcaveGenerator.linear(TWO_PI)
    F = construct_arc_constant_example(1.0, (0.0, math.pi), [0.5], n, lin)
    try:
        th2a_probe(F, lin, 8, n, tol)
    except GeneratorFlagError:
        linear_rejected = True
    secs = time.perf_counter() - start
    ok = all_ok and worst_norm <= 1e-4 and linear_rejected and secs < 180.0
    assert report(12, ok, f"9 probes, worst certificate {worst_cert:.2e}, norm error "
                          f"{worst_norm:.1e}, linear rejected={linear_rejected}, {secs:.1f}s")
