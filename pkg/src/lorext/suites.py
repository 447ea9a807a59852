"""
Randomized verification suites and their JSON-lines reports.

Every suite expands a :class:`SuiteConfig` into a deterministic list of
cases. Case k draws its randomness from a Philox stream keyed by
``(seed, suite index, k)``, so results do not depend on execution order or
thread count. Reports hold one JSON object per case followed by an aggregate
object.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy

from .errors import GeneratorFlagError, LorextError
from .extremal import (Verdict, brute_force_vertices, feasibility_probe, l1_witness,
                       theorem_t0_form_check)
from .hardy import (TWO_PI, DiskFunction, boundary_modulus, construct_arc_constant_example,
                    factorize, inner_extreme_check, outerness_check, th2a_probe)
from .lorentz import (ConcaveGenerator, generator_weights, lorentz_norm, parse_generator,
                      plus_minus_decomposition_norm, rearrangement_additivity_check,
                      skewed_norm_pair)
from .rearrange import SampledFunction

__all__ = ["SUITES", "SuiteConfig", "SuiteReport", "run_suite", "case_rng", "thread_count"]

CaseFn = Callable[[np.random.Generator], dict]


@dataclass(frozen=True)
class _SuiteSpec:
    build: Callable[["SuiteConfig"], list]
    trials: int
    tol: float
    grids: tuple
    generators: tuple = ()
    interval_length: float = 1.0


@dataclass
class SuiteConfig:
    """What to run. ``None`` fields fall back to the suite's defaults."""

    suite: str
    grids: Optional[Sequence[int]] = None
    generators: Optional[Sequence[str]] = None
    trials: Optional[int] = None
    seed: int = 0
    tol: Optional[float] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        spec = SUITES[self.suite]
        if self.trials is None:
            self.trials = spec.trials
        if self.tol is None:
            self.tol = spec.tol
        if self.grids is None:
            self.grids = spec.grids
        if self.generators is None:
            self.generators = spec.generators
        self.grids = tuple(int(n) for n in self.grids)
        self.generators = tuple(self.generators)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if any(n < 1 for n in self.grids):
            raise ValueError("grid sizes must be positive")
        self.seed = int(self.seed)

    def phis(self) -> list[ConcaveGenerator]:
        a = SUITES[self.suite].interval_length
        return [parse_generator(g, a) for g in self.generators]


@dataclass
class SuiteReport:
    suite: str
    records: list
    passed: bool
    environment: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        failed = [r["case"] for r in self.records if not r["passed"]]
        return {
            "aggregate": "pass" if self.passed else "fail",
            "suite": self.suite,
            "cases": len(self.records),
            "failed_cases": failed,
            "environment": self.environment,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(r, sort_keys=True) for r in self.records]
        lines.append(json.dumps(self.aggregate(), sort_keys=True))
        return "\n".join(lines) + "\n"


def case_rng(seed: int, suite: str, case: int) -> np.random.Generator:
    key = list(SUITES).index(suite)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, key, case])))


def thread_count() -> int:
    """Worker cap from ``LOREXT_THREADS`` (default 1)."""
    raw = os.environ.get("LOREXT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"LOREXT_THREADS must be an integer, got {raw!r}") from None


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a)).tobytes())
    return h.hexdigest()[:16]


def _environment() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "threads": thread_count(),
    }


def _random_complex(rng, n) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _unimodular(rng, n, a=1.0) -> SampledFunction:
    return SampledFunction(a, np.exp(2j * np.pi * rng.random(n)))


def _strictly_concave(phi: ConcaveGenerator, n: int) -> bool:
    fl = phi.flags(n)
    return fl.strictly_increasing and fl.strictly_concave


# -- suite builders -----------------------------------------------------------
# each returns a list of (label, CaseFn); the runner adds index, digest, timing


def _norm_axioms(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol

    def case(rng, n, phi):
        f = SampledFunction(1.0, _random_complex(rng, n))
        g = SampledFunction(1.0, _random_complex(rng, n))
        c = complex(*rng.standard_normal(2))
        nf, ng = lorentz_norm(f, phi), lorentz_norm(g, phi)
        homog = abs(lorentz_norm(f * c, phi) - abs(c) * nf) / max(1.0, abs(c) * nf)
        triangle = max(0.0, lorentz_norm(f + g, phi) - nf - ng)
        zero = lorentz_norm(f * 0.0, phi)
        defect = max(homog, triangle, zero)
        return {"inputs": _digest(f.values, g.values, c), "defect": defect,
                "passed": defect <= tol and nf > 0}

    return _cycle(cfg, phis, lambda rng, n, phi: case(rng, n, phi))


def _strict_monotonicity(cfg: SuiteConfig):
    phis = cfg.phis()
    for phi, n in itertools.product(phis, cfg.grids):
        if not phi.flags(n).strictly_increasing:
            raise GeneratorFlagError("strict-monotonicity needs strictly increasing generators")

    def case(rng, n, phi):
        g = SampledFunction(1.0, _random_complex(rng, n))
        shrink = rng.random(n)
        shrink[rng.integers(n)] = 0.5 * rng.random()
        f = g.with_values(g.values * shrink)
        nf, ng = lorentz_norm(f, phi), lorentz_norm(g, phi)
        return {"inputs": _digest(g.values, shrink), "margin": ng - nf, "passed": ng - nf > 0}

    return _cycle(cfg, phis, case)


def _skew_inequality(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol
    out = []

    def strict_case(rng, n, phi):
        k = int(rng.integers(1, n))
        rho = np.zeros(n)
        rho[rng.permutation(n)[:k]] = rng.random(k) + 0.1
        fwd, rev = skewed_norm_pair(SampledFunction(1.0, rho), phi)
        return {"inputs": _digest(rho), "kind": "partial-support", "margin": fwd - rev,
                "passed": fwd - rev > 0}

    for phi, n in itertools.product(phis, cfg.grids):
        fl = phi.flags(n)
        if fl.linear or not fl.strictly_increasing:
            raise GeneratorFlagError("skew-inequality needs nonlinear strictly increasing generators")
    out += _cycle(cfg, phis, strict_case)

    lin = ConcaveGenerator.linear(1.0)

    def linear_case(rng, n):
        rho = rng.random(n) * (rng.random(n) < 0.5)
        fwd, rev = skewed_norm_pair(SampledFunction(1.0, rho), lin)
        return {"inputs": _digest(rho), "kind": "linear-equality", "defect": abs(fwd - rev),
                "passed": abs(fwd - rev) <= tol}

    def constant_case(rng, n, phi):
        rho = np.full(n, rng.random() + 0.1)
        fwd, rev = skewed_norm_pair(SampledFunction(1.0, rho), phi)
        return {"inputs": _digest(rho), "kind": "full-support-constant",
                "defect": abs(fwd - rev), "passed": abs(fwd - rev) <= tol}

    for n in cfg.grids:
        out.append((f"linear n={n}", lambda rng, n=n: linear_case(rng, n)))
        for phi in phis:
            out.append((f"constant n={n} {_label(phi)}",
                        lambda rng, n=n, phi=phi: constant_case(rng, n, phi)))
    return out


def _decomposition_identity(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol

    def case(rng, n, phi):
        h = rng.uniform(-1.0, 1.0, n)
        h[rng.random(n) < 0.2] = 0.0
        hf = SampledFunction(1.0, h)
        plus, minus, _ = plus_minus_decomposition_norm(hf, phi)
        one = SampledFunction.constant(1.0, n)
        defect = max(abs(plus - lorentz_norm(one + hf, phi)),
                     abs(minus - lorentz_norm(one - hf, phi)))
        return {"inputs": _digest(h), "defect": defect, "passed": defect <= tol}

    return _cycle(cfg, phis, case)


def _additivity(cfg: SuiteConfig):
    phis = cfg.phis()
    for phi, n in itertools.product(phis, cfg.grids):
        if not _strictly_concave(phi, n):
            raise GeneratorFlagError("additivity needs strictly concave generators")

    def case(rng, n, phi):
        perm = rng.permutation(n)
        fs = np.sort(rng.random(n) + 0.01)[::-1]
        gs = np.sort(rng.random(n) + 0.01)[::-1]
        f = np.empty(n)
        g = np.empty(n)
        f[perm], g[perm] = fs, gs
        aligned = rearrangement_additivity_check(SampledFunction(1.0, f), SampledFunction(1.0, g), phi)
        # misaligned: g runs against f; gaps need at least two distinct values
        g_bad = np.empty(n)
        g_bad[perm] = gs[::-1]
        mis = rearrangement_additivity_check(SampledFunction(1.0, f), SampledFunction(1.0, g_bad), phi)
        ok = aligned.deviation == 0.0 and (n < 2 or mis.norm_gap > 0)
        return {"inputs": _digest(f, g), "aligned_deviation": aligned.deviation,
                "aligned_gap": aligned.norm_gap, "misaligned_gap": mis.norm_gap,
                "misaligned_deviation": mis.deviation, "passed": bool(ok)}

    return _cycle(cfg, phis, case)


def _unimodular_extreme(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol

    def case(rng, n, phi):
        f = _unimodular(rng, n)
        probe_seed = int(rng.integers(2 ** 32))
        v = feasibility_probe(f, phi, tol=tol, seed=probe_seed)
        return {"inputs": _digest(f.values), "verdict": v.verdict.value,
                "certificate": v.certificate, "directions": v.stats["directions"],
                "passed": v.verdict is Verdict.EXTREME and v.certificate <= tol}

    return _grid_product(cfg, phis, case)


def _l1_no_extreme(cfg: SuiteConfig):
    tol = cfg.tol
    phi = ConcaveGenerator.linear(1.0)

    def case(rng, n):
        f = _unimodular(rng, n)
        g = l1_witness(f, phi)
        defect = max(abs(lorentz_norm(f + g, phi) - 1.0), abs(lorentz_norm(f - g, phi) - 1.0))
        gn = lorentz_norm(g, phi)
        v = feasibility_probe(f, phi, seed=int(rng.integers(2 ** 32)))
        return {"inputs": _digest(f.values), "witness_defect": defect, "witness_norm": gn,
                "verdict": v.verdict.value,
                "passed": defect <= tol and gn >= 0.1 and v.verdict is Verdict.NOT_EXTREME}

    return [(f"n={n} trial={t}", lambda rng, n=n: case(rng, n))
            for n in cfg.grids for t in range(cfg.trials)]


def _t0_form_points(n: int, phi: ConcaveGenerator) -> list[np.ndarray]:
    w = generator_weights(phi, n)
    pts = []
    for k in range(1, n + 1):
        height = 1.0 / float(np.sum(w[:k]))
        for support in itertools.combinations(range(n), k):
            for signs in itertools.product((1.0, -1.0), repeat=k):
                x = np.zeros(n)
                x[list(support)] = height * np.array(signs)
                pts.append(x)
    return pts


def _same_point_sets(a, b, atol) -> bool:
    if len(a) != len(b):
        return False
    return all(any(np.max(np.abs(p - q)) <= atol for q in b) for p in a)


def _t0_vertices(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol

    def case(rng, n, phi):
        verts = brute_force_vertices(n, phi)
        accepted = all(theorem_t0_form_check(SampledFunction(1.0, v), phi, tol) for v in verts)
        forms = _t0_form_points(n, phi)
        same = _same_point_sets(verts, forms, 1e-9)
        return {"inputs": _digest(generator_weights(phi, n)), "vertices": len(verts),
                "form_points": len(forms), "passed": bool(accepted and same)}

    def linear_case(rng):
        phi = ConcaveGenerator.linear(1.0)
        verts = brute_force_vertices(2, phi)
        height = 1.0 / float(np.sum(generator_weights(phi, 2)))
        diag = [height * np.array([s1, s2]) for s1 in (1.0, -1.0) for s2 in (1.0, -1.0)]
        excluded = not any(_same_point_sets([d], [v], 1e-9) for d in diag for v in verts)
        verdicts = [feasibility_probe(SampledFunction(1.0, d), phi).verdict for d in diag]
        return {"inputs": _digest(generator_weights(phi, 2)), "vertices": len(verts),
                "diagonal_verdicts": [v.value for v in verdicts],
                "passed": bool(excluded and all(v is Verdict.NOT_EXTREME for v in verdicts))}

    out = []
    for n in cfg.grids:
        for phi in phis:
            if not _strictly_concave(phi, n):
                raise GeneratorFlagError("t0-vertices needs strictly concave generators")
            out.append((f"n={n} {_label(phi)}", lambda rng, n=n, phi=phi: case(rng, n, phi)))
    out.append(("linear n=2 diagonals", linear_case))
    return out


def _blaschke_min_modulus(zeros, r: float, t: np.ndarray) -> float:
    """Exact ``max_j | |B(r e^{it_j})| - 1 |`` from ``1 - |b_a|^2 = (1-|a|^2)(1-|z|^2)/|1 - conj(a) z|^2``."""
    z = r * np.exp(1j * t)
    mod2 = np.ones_like(t)
    for a in zeros:
        mod2 = mod2 * (1.0 - (1 - abs(a) ** 2) * (1 - r ** 2) / np.abs(1 - np.conj(a) * z) ** 2)
    return float(np.max(1.0 - np.sqrt(mod2)))


def _hardy_roundtrip(cfg: SuiteConfig):
    r = 1.0 - 1e-4
    out = []

    def blaschke_case(rng, worst):
        k = int(rng.integers(1, 4))
        rad = 0.95 * np.sqrt(rng.random(k))
        if worst:
            rad[0] = 0.95
        zeros = rad * np.exp(2j * np.pi * rng.random(k))
        n = 2048
        b = boundary_modulus(DiskFunction.blaschke(zeros), n, r)
        dev = float(np.max(np.abs(np.abs(b.values) - 1.0)))
        exact = _blaschke_min_modulus(zeros, r, b.samples.midpoints())
        return {"inputs": _digest(zeros), "kind": "blaschke-unimodularity", "deviation": dev,
                "exact_deviation": exact, "passed": dev <= 1e-3}

    def outer_case(rng):
        n = 4096
        u_r = bandlimited_log_modulus(rng)
        t = (np.arange(n) + 0.5) * (TWO_PI / n)
        u = u_r(t)
        F = DiskFunction.outer_from_log_modulus(u)
        mod = np.abs(boundary_modulus(F, n, r).values)
        err = float(np.max(np.abs(mod - np.exp(u))))
        # independent oracle: the harmonic extension summed term by term
        oracle = float(np.max(np.abs(mod - np.exp(u_r(t, r)))))
        return {"inputs": _digest(u), "kind": "outer-roundtrip", "error": err,
                "oracle_error": oracle, "passed": err <= 1e-4 and oracle <= 1e-12}

    def deficit_case(rng):
        n = 4096
        u = bandlimited_log_modulus(rng)((np.arange(n) + 0.5) * (TWO_PI / n))
        F = DiskFunction(blaschke_zeros=(0.5,), outer_log_modulus=SampledFunction(TWO_PI, u))
        _, deficit = outerness_check(F, n)
        err = abs(deficit + math.log(0.5))
        return {"inputs": _digest(u), "kind": "outerness-deficit", "deficit": deficit,
                "passed": err <= 1e-3}

    def factor_case(rng):
        n = 4096
        u = bandlimited_log_modulus(rng)((np.arange(n) + 0.5) * (TWO_PI / n))
        F = DiskFunction(blaschke_zeros=(0.5,), outer_log_modulus=SampledFunction(TWO_PI, u),
                         phase_constant=float(rng.uniform(0, 2 * np.pi)))
        _, _, err = factorize(boundary_modulus(F, n, r), [0.5])
        return {"inputs": _digest(u), "kind": "recombination", "error": err,
                "passed": err <= 1e-5}

    for t in range(cfg.trials):
        out.append((f"blaschke trial={t}", lambda rng, t=t: blaschke_case(rng, t == 0)))
        out.append((f"outer trial={t}", outer_case))
        out.append((f"deficit trial={t}", deficit_case))
        out.append((f"factor trial={t}", factor_case))
    return out


def bandlimited_log_modulus(rng: np.random.Generator, harmonics: int = 16,
                            sup: float = 0.25) -> Callable[[np.ndarray, float], np.ndarray]:
    """Random real trigonometric polynomial u of degree ``harmonics``, ``max |u| ~ sup``.

    Returns ``u_r(t, r)``, the harmonic extension evaluated by direct
    summation (``r = 1`` gives u itself). Coefficients decay like ``k^-2``.
    """
    k = np.arange(1, harmonics + 1)
    c = (rng.standard_normal(harmonics) + 1j * rng.standard_normal(harmonics)) / k ** 2
    probe = np.linspace(0, TWO_PI, 2048, endpoint=False)
    c = c * (sup / np.max(np.abs(np.real(np.exp(1j * np.outer(probe, k)) @ c))))

    def u_r(t: np.ndarray, r: float = 1.0) -> np.ndarray:
        return np.real(np.exp(1j * np.outer(t, k)) @ (c * r ** k))

    return u_r


def _inner_extreme(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol

    def case(rng, phi):
        k = int(rng.integers(1, 4))
        zeros = 0.9 * np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))
        F = DiskFunction.blaschke(zeros)
        ok, v = inner_extreme_check(F, phi, n_probe=cfg.grids[0], tol=tol,
                                    seed=int(rng.integers(2 ** 32)))
        rec = {"inputs": _digest(zeros), "inner": ok,
               "verdict": None if v is None else v.verdict.value,
               "certificate": None if v is None else v.certificate}
        rec["passed"] = bool(ok and v.verdict is Verdict.EXTREME and v.certificate <= tol)
        return rec

    for phi in phis:
        if not _strictly_concave(phi, cfg.grids[0]):
            raise GeneratorFlagError("inner-extreme needs strictly concave generators")
    return [(f"{_label(phis[t % len(phis)])} trial={t}",
             lambda rng, phi=phis[t % len(phis)]: case(rng, phi)) for t in range(cfg.trials)]


def _th2a(cfg: SuiteConfig):
    phis, tol = cfg.phis(), cfg.tol
    n = cfg.grids[0]
    out = []

    def case(rng, phi, m):
        F = construct_arc_constant_example(1.0, (0.0, math.pi), [0.5], n, phi)
        v = th2a_probe(F, phi, m, n, tol, seed=int(rng.integers(2 ** 32)))
        return {"inputs": _digest(F.outer_log_modulus.values.real), "degree": m,
                "verdict": v.verdict.value, "certificate": v.certificate,
                "passed": v.verdict is Verdict.EXTREME and v.certificate <= tol}

    def linear_case(rng):
        phi = ConcaveGenerator.linear(TWO_PI)
        F = construct_arc_constant_example(1.0, (0.0, math.pi), [0.5], n, phi)
        try:
            th2a_probe(F, phi, 8, n, tol)
        except GeneratorFlagError as exc:
            return {"inputs": "linear", "error": str(exc), "passed": True}
        return {"inputs": "linear", "error": None, "passed": False}

    for phi in phis:
        for m in (4, 8, 16):
            out.append((f"{_label(phi)} m={m}", lambda rng, phi=phi, m=m: case(rng, phi, m)))
    out.append(("linear precondition", linear_case))
    return out


def run_suite(config: SuiteConfig) -> SuiteReport:
    """Run every case of ``config.suite``; write the JSON-lines report if ``config.out`` is set.

    A case that raises a library error is recorded as failed with the message.
    With ``LOREXT_THREADS > 1`` cases run on a thread pool; records are
    always reported in case order.
    """
    cases = SUITES[config.suite].build(config)

    def run(idx: int) -> dict:
        label, fn = cases[idx]
        rng = case_rng(config.seed, config.suite, idx)
        start = time.perf_counter()
        try:
            rec = fn(rng)
        except LorextError as exc:
            rec = {"error": f"{type(exc).__name__}: {exc}", "passed": False}
        rec = {"case": idx, "label": label, **rec}
        rec["passed"] = bool(rec["passed"])
        rec["runtime"] = time.perf_counter() - start
        return rec

    threads = min(thread_count(), len(cases))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(run, range(len(cases))))
    else:
        records = [run(i) for i in range(len(cases))]
    report = SuiteReport(config.suite, records, all(r["passed"] for r in records), _environment())
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(report.to_jsonl())
    return report


def _label(phi: ConcaveGenerator) -> str:
    if phi.form == "power":
        return "linear" if phi.p == 1 else f"power:p={phi.p:g}"
    return phi.form


def _cycle(cfg: SuiteConfig, phis, fn):
    """``trials`` cases cycling through grids and generators."""
    out = []
    for t in range(cfg.trials):
        n = cfg.grids[t % len(cfg.grids)]
        phi = phis[(t // len(cfg.grids)) % len(phis)]
        out.append((f"n={n} {_label(phi)} trial={t}",
                    lambda rng, n=n, phi=phi: fn(rng, n, phi)))
    return out


def _grid_product(cfg: SuiteConfig, phis, fn):
    """``trials`` cases for every (grid, generator) pair."""
    return [(f"n={n} {_label(phi)} trial={t}", lambda rng, n=n, phi=phi: fn(rng, n, phi))
            for n in cfg.grids for phi in phis for t in range(cfg.trials)]


_BATTERY = ("power:p=1.5", "power:p=2", "power:p=4", "two_slope", "linear")
_NONLINEAR = ("power:p=1.5", "power:p=2", "power:p=4", "two_slope")
_STRICT = ("power:p=1.5", "power:p=2", "power:p=4")

SUITES = {
    "norm-axioms": _SuiteSpec(_norm_axioms, 1000, 1e-10, (1, 2, 5, 16, 64), _BATTERY),
    "strict-monotonicity": _SuiteSpec(_strict_monotonicity, 500, 1e-10, (1, 2, 7, 32), _BATTERY),
    "skew-inequality": _SuiteSpec(_skew_inequality, 500, 1e-12, (2, 5, 16, 64), _NONLINEAR),
    "decomposition-identity": _SuiteSpec(_decomposition_identity, 1000, 1e-10,
                                         (1, 3, 8, 33, 128), _BATTERY),
    "additivity": _SuiteSpec(_additivity, 200, 1e-12, (2, 5, 16, 64), _STRICT),
    "unimodular-extreme": _SuiteSpec(_unimodular_extreme, 1, 1e-6, (8, 16, 32, 64), _NONLINEAR),
    "l1-no-extreme": _SuiteSpec(_l1_no_extreme, 2, 1e-12, (2, 3, 8, 16)),
    "t0-vertices": _SuiteSpec(_t0_vertices, 1, 1e-9, (2, 3), _STRICT),
    "hardy-roundtrip": _SuiteSpec(_hardy_roundtrip, 2, 1e-3, (4096,), (), TWO_PI),
    "inner-extreme": _SuiteSpec(_inner_extreme, 20, 1e-5, (64,), _STRICT, TWO_PI),
    "th2a": _SuiteSpec(_th2a, 1, 1e-4, (256,), _STRICT, TWO_PI),
}
