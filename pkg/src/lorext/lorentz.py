"""
Lorentz norms ``||x|| = int_0^a x*(t) dphi(t)`` on step functions.

On a grid of n cells the Stieltjes integral is an exact finite sum against
the increments ``w_j = phi(j a/n) - phi((j-1) a/n)``, so the norm is an
ordered weighted l1 norm with nonincreasing weights.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import GeneratorFlagError, GridMismatchError, PreconditionError
from .rearrange import (
    SampledFunction,
    check_same_grid,
    decreasing_rearrangement,
    level_set_family,
)

__all__ = [
    "ConcaveGenerator",
    "GeneratorFlags",
    "SignDecomposition",
    "AdditivityReport",
    "AlignedFamilyReport",
    "generator_weights",
    "lorentz_norm",
    "owl_norm",
    "norm_strict_compare",
    "rearrangement_additivity_check",
    "aligned_family_check",
    "skewed_norm_pair",
    "plus_minus_decomposition_norm",
    "sign_decomposition",
    "parse_generator",
]

# relative tolerance when comparing increments for the computed flags
FLAG_RTOL = 1e-12


class GeneratorFlags(NamedTuple):
    strictly_increasing: bool
    concave: bool
    strictly_concave: bool
    linear: bool


@dataclass(frozen=True)
class ConcaveGenerator:
    """Increasing concave ``phi`` on [0, a] with ``phi(0) = 0``, ``phi(a) = 1``.

    Use the constructors :meth:`power`, :meth:`linear`, :meth:`piecewise`,
    :meth:`two_slope` and :meth:`explicit`. Strictness and linearity are
    never declared by the constructor; :meth:`flags` computes them from the
    increments at the working resolution.
    """

    interval_length: float
    form: str
    p: Optional[float] = None
    breakpoints: Optional[tuple] = None
    slopes: Optional[tuple] = None
    increments: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        a = float(self.interval_length)
        if not (math.isfinite(a) and a > 0):
            raise ValueError("interval_length must be positive")
        object.__setattr__(self, "interval_length", a)
        if self.form == "power":
            if self.p is None or not self.p >= 1:
                raise ValueError("power generator needs p >= 1")
        elif self.form == "piecewise":
            bp = np.asarray(self.breakpoints, dtype=float)
            sl = np.asarray(self.slopes, dtype=float)
            if bp.size != sl.size + 1 or bp[0] != 0 or not math.isclose(bp[-1], a, rel_tol=1e-12):
                raise ValueError("breakpoints must run from 0 to a with one more entry than slopes")
            if np.any(np.diff(bp) <= 0):
                raise ValueError("breakpoints must be strictly increasing")
            if np.any(sl < 0) or np.any(np.diff(sl) > 0):
                raise ValueError("slopes must be nonnegative and nonincreasing (concavity)")
            total = float(np.dot(sl, np.diff(bp)))
            if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
                raise ValueError(f"piecewise generator must satisfy phi(a) = 1, got {total!r}")
        elif self.form == "explicit":
            w = np.asarray(self.increments, dtype=float)
            if w.ndim != 1 or w.size < 1:
                raise ValueError("explicit increments must be a nonempty sequence")
            if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-12):
                raise ValueError("explicit increments must be nonnegative and sum to 1")
            if np.any(np.diff(w) > FLAG_RTOL * w.max()):
                raise ValueError("explicit increments must be nonincreasing (concavity)")
        else:
            raise ValueError(f"unknown generator form {self.form!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def power(cls, p: float, interval_length: float = 1.0) -> "ConcaveGenerator":
        """``phi(t) = (t / a)^(1/p)``; p = 1 is the L1 generator, p > 1 gives L^{p,1}."""
        return cls(interval_length, "power", p=float(p))

    @classmethod
    def linear(cls, interval_length: float = 1.0) -> "ConcaveGenerator":
        return cls.power(1.0, interval_length)

    @classmethod
    def piecewise(cls, breakpoints, slopes, interval_length: float) -> "ConcaveGenerator":
        return cls(interval_length, "piecewise",
                   breakpoints=tuple(float(b) for b in breakpoints),
                   slopes=tuple(float(s) for s in slopes))

    @classmethod
    def two_slope(cls, interval_length: float = 1.0, knee: float = 0.5,
                  ratio: float = 2.0) -> "ConcaveGenerator":
        """Concave, not strictly concave: slope ``ratio * s`` up to ``knee * a``, then ``s``."""
        a = float(interval_length)
        t1 = knee * a
        s = 1.0 / (ratio * t1 + (a - t1))
        return cls.piecewise((0.0, t1, a), (ratio * s, s), a)

    @classmethod
    def explicit(cls, increments, interval_length: float = 1.0) -> "ConcaveGenerator":
        return cls(interval_length, "explicit", increments=tuple(float(w) for w in increments))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.interval_length)
        a = self.interval_length
        if self.form == "power":
            return (t / a) ** (1.0 / self.p)
        if self.form == "piecewise":
            bp = np.asarray(self.breakpoints)
            vals = np.concatenate(([0.0], np.cumsum(np.asarray(self.slopes) * np.diff(bp))))
            return np.interp(t, bp, vals)
        w = np.asarray(self.increments)
        grid = np.linspace(0.0, a, w.size + 1)
        return np.interp(t, grid, np.concatenate(([0.0], np.cumsum(w))))

    def weights(self, n: int) -> np.ndarray:
        return generator_weights(self, n)

    def flags(self, n: int) -> GeneratorFlags:
        """Strictness and linearity of phi as seen through n increments."""
        w = generator_weights(self, n)
        scale = FLAG_RTOL * max(float(w.max()), 1e-300)
        d = np.diff(w)
        return GeneratorFlags(
            strictly_increasing=bool(np.all(w > 0)),
            concave=bool(np.all(d <= scale)),
            strictly_concave=bool(np.all(d < -scale)),
            linear=bool(np.all(np.abs(d) <= scale)),
        )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"a": self.interval_length, "form": self.form}
        if self.form == "power":
            out["p"] = self.p
        elif self.form == "piecewise":
            out["breakpoints"] = list(self.breakpoints)
            out["slopes"] = list(self.slopes)
        else:
            out["increments"] = list(self.increments)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConcaveGenerator":
        a = float(data["a"])
        form = data["form"]
        if form == "power":
            return cls.power(float(data["p"]), a)
        if form == "piecewise":
            return cls.piecewise(data["breakpoints"], data["slopes"], a)
        if form == "explicit":
            return cls.explicit(data["increments"], a)
        raise ValueError(f"unknown generator form {form!r}")


_SHORTHAND = re.compile(r"^\s*(power|linear|two_slope)\s*(?::(.*))?$")


def parse_generator(text: str, interval_length: float = 1.0) -> ConcaveGenerator:
    """Parse a generator from JSON or from shorthand such as ``power:p=2``.

    Shorthand forms: ``power:p=<p>``, ``linear``, ``two_slope:knee=0.5,ratio=2``.
    An ``a=<length>`` key overrides ``interval_length``.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        return ConcaveGenerator.from_dict(json.loads(stripped))
    m = _SHORTHAND.match(stripped)
    if not m:
        raise ValueError(f"cannot parse generator {text!r}")
    kind, rest = m.group(1), m.group(2) or ""
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"malformed generator parameter {item!r}")
        params[key.strip()] = float(val)
    a = params.pop("a", interval_length)
    if kind == "power":
        return ConcaveGenerator.power(params.pop("p", 1.0), a)
    if kind == "linear":
        return ConcaveGenerator.linear(a)
    return ConcaveGenerator.two_slope(a, params.pop("knee", 0.5), params.pop("ratio", 2.0))


def generator_weights(phi: ConcaveGenerator, n: int) -> np.ndarray:
    """Increments ``w_j = phi(j a/n) - phi((j-1) a/n)``, j = 1..n."""
    if n < 1:
        raise ValueError("n must be positive")
    if phi.form == "explicit":
        w = np.asarray(phi.increments, dtype=float)
        if w.size != n:
            raise GridMismatchError(f"explicit generator has {w.size} increments, grid has {n}")
        return w.copy()
    a = phi.interval_length
    if phi.form == "power" and phi.p == 1.0:
        return np.full(n, 1.0 / n)
    # evaluate at j/n directly to keep phi(a) = 1 exact
    frac = np.arange(n + 1) / n
    vals = phi(frac * a)
    vals[0], vals[-1] = 0.0, 1.0
    return np.diff(vals)


def _check_generator_grid(f: SampledFunction, phi: ConcaveGenerator) -> None:
    if not math.isclose(f.interval_length, phi.interval_length, rel_tol=1e-12):
        raise GridMismatchError(
            f"function lives on [0, {f.interval_length!r}], generator on [0, {phi.interval_length!r}]")


def owl_norm(moduli: np.ndarray, weights: np.ndarray) -> float:
    """Ordered weighted sum ``sum_j w_j m*_j`` of nonnegative values."""
    return float(np.dot(weights, np.sort(moduli)[::-1]))


def lorentz_norm(f: SampledFunction, phi: ConcaveGenerator) -> float:
    _check_generator_grid(f, phi)
    w = generator_weights(phi, f.n)
    return float(np.dot(w, decreasing_rearrangement(f).values))


def norm_strict_compare(f: SampledFunction, g: SampledFunction,
                        phi: ConcaveGenerator) -> tuple[float, float]:
    """Return ``(||f||, ||g||)`` for a pair with ``|f| <= |g|`` cellwise.

    When phi is strictly increasing and ``|f| < |g|`` on some cell the first
    value is strictly smaller.
    """
    check_same_grid(f, g)
    if np.any(np.abs(f.values) > np.abs(g.values)):
        raise PreconditionError("norm_strict_compare needs |f| <= |g| on every cell")
    return lorentz_norm(f, phi), lorentz_norm(g, phi)


def _require_strict(phi: ConcaveGenerator, n: int, what: str) -> None:
    flags = phi.flags(n)
    if not (flags.strictly_increasing and flags.strictly_concave):
        raise GeneratorFlagError(f"{what} needs a strictly increasing, strictly concave generator")


@dataclass(frozen=True)
class AdditivityReport:
    norm_gap: float
    deviation: float

    def consistent(self, tol: float, tol_prime: float) -> bool:
        """The implication at finite precision: small gap forces small deviation."""
        return self.norm_gap > tol or self.deviation <= tol_prime


def rearrangement_additivity_check(f: SampledFunction, g: SampledFunction,
                                   phi: ConcaveGenerator) -> AdditivityReport:
    """Norm gap ``||f|| + ||g|| - ||f+g||`` and the largest cellwise
    defect ``|f*_j + g*_j - (f+g)*_j|``.

    Raw numbers are reported; tolerance policy belongs to the caller.
    """
    check_same_grid(f, g)
    _check_generator_grid(f, phi)
    _require_strict(phi, f.n, "rearrangement_additivity_check")
    fs = decreasing_rearrangement(f).values
    gs = decreasing_rearrangement(g).values
    hs = decreasing_rearrangement(f + g).values
    w = generator_weights(phi, f.n)
    gap = float(np.dot(w, fs) + np.dot(w, gs) - np.dot(w, hs))
    return AdditivityReport(norm_gap=gap, deviation=float(np.max(np.abs(fs + gs - hs))))


@dataclass(frozen=True)
class AlignedFamilyReport:
    min_plus: float
    min_minus: float
    order: np.ndarray
    defect: float

    @property
    def nonnegative(self) -> bool:
        return min(self.min_plus, self.min_minus) >= 0


def _prefix_defect(order: np.ndarray, vectors) -> float:
    worst = 0.0
    for v in vectors:
        along = np.cumsum(v[order])
        sorted_ = np.cumsum(np.sort(v)[::-1])
        worst = max(worst, float(np.max(np.abs(along - sorted_))))
    return worst


def aligned_family_check(u: SampledFunction, v: SampledFunction, phi: ConcaveGenerator,
                         tol: float) -> AlignedFamilyReport:
    """Search one level-set family serving u, u + v and u - v at once.

    Under the hypotheses (u >= 0, v real, ``||u|| = 1``, ``||u +- v|| <= 1``,
    phi strictly increasing and strictly concave) both ``u +- v`` are
    nonnegative and a common nested family realizes all three prefix
    integrals. The report carries the minima of ``u +- v``, the chosen
    ordering, and the worst prefix-sum defect (in units of cell values).
    """
    check_same_grid(u, v)
    _check_generator_grid(u, phi)
    _require_strict(phi, u.n, "aligned_family_check")
    if not u.is_real or np.any(u.values.real < 0):
        raise PreconditionError("hypothesis broken: u must be real and nonnegative")
    if not v.is_real:
        raise PreconditionError("hypothesis broken: v must be real")
    nu = lorentz_norm(u, phi)
    if abs(nu - 1.0) > tol:
        raise PreconditionError(f"hypothesis broken: ||u|| = {nu!r}, expected 1")
    for sign in (1, -1):
        nuv = lorentz_norm(u + sign * v, phi)
        if nuv > 1.0 + tol:
            raise PreconditionError(
                f"hypothesis broken: ||u {'+' if sign > 0 else '-'} v|| = {nuv!r} exceeds 1")
    uu, vv = u.values.real, v.values.real
    plus, minus = uu + vv, uu - vv
    idx = np.arange(u.n)
    candidates = [
        np.lexsort((idx, -minus, -plus, -uu)),
        np.lexsort((idx, -minus, -uu, -plus)),
        np.lexsort((idx, -plus, -uu, -minus)),
        level_set_family(u).order,
    ]
    vecs = (uu, plus, minus)
    defects = [_prefix_defect(o, vecs) for o in candidates]
    best = int(np.argmin(defects))
    return AlignedFamilyReport(
        min_plus=float(plus.min()),
        min_minus=float(minus.min()),
        order=candidates[best],
        defect=defects[best],
    )


def skewed_norm_pair(rho: SampledFunction, phi: ConcaveGenerator) -> tuple[float, float]:
    """Forward and reverse weighted sums of the rearrangement of ``|rho|``.

    Returns ``(sum_j w_j rho*_j, sum_j w_{n+1-j} rho*_j)``. For nonlinear,
    strictly increasing phi and ``0 < |supp rho| < a`` the first is strictly
    larger; full support or linear phi may give equality.
    """
    _check_generator_grid(rho, phi)
    if not rho.is_real:
        raise PreconditionError("skewed_norm_pair expects a real function")
    w = generator_weights(phi, rho.n)
    rs = decreasing_rearrangement(rho).values
    return float(np.dot(w, rs)), float(np.dot(w[::-1], rs))


@dataclass(frozen=True)
class SignDecomposition:
    plus_cells: np.ndarray
    minus_cells: np.ndarray
    zero_cells: np.ndarray


def sign_decomposition(h: SampledFunction) -> SignDecomposition:
    vals = h.values.real
    idx = np.arange(h.n)
    return SignDecomposition(idx[vals > 0], idx[vals < 0], idx[vals == 0])


def plus_minus_decomposition_norm(h: SampledFunction, phi: ConcaveGenerator
                                  ) -> tuple[float, float, SignDecomposition]:
    """``||1 + h||`` and ``||1 - h||`` through the split of h by sign.

    With ``E+ = {h > 0}`` and ``E- = {h < 0}``::

        ||1 + h|| = 1 + sum_j w_j (h 1_{E+})*_j - sum_j w_{n+1-j} (h 1_{E-})*_j
        ||1 - h|| = 1 + sum_j w_j (h 1_{E-})*_j - sum_j w_{n+1-j} (h 1_{E+})*_j

    valid whenever ``|h| <= 1`` so that ``1 - |h|`` never changes sign.
    """
    _check_generator_grid(h, phi)
    if not h.is_real:
        raise PreconditionError("h must be real")
    vals = h.values.real
    if np.any(np.abs(vals) > 1):
        raise PreconditionError("plus_minus_decomposition_norm needs |h| <= 1 on every cell")
    dec = sign_decomposition(h)
    w = generator_weights(phi, h.n)
    pos = np.sort(np.where(vals > 0, vals, 0.0))[::-1]
    neg = np.sort(np.where(vals < 0, -vals, 0.0))[::-1]
    rev = w[::-1]
    plus = 1.0 + float(np.dot(w, pos)) - float(np.dot(rev, neg))
    minus = 1.0 + float(np.dot(w, neg)) - float(np.dot(rev, pos))
    return plus, minus, dec
