"""
Analytic functions on the unit disk as Blaschke product x singular inner
factor x outer function, and the Hardy-Lorentz machinery built on them.

The outer factor is stored through samples of its boundary log-modulus on a
uniform grid of [0, 2 pi]. Its Herglotz integral is computed spectrally: the
midpoint rule gives the Fourier coefficients c_k of ln mu, and

    (1/2pi) int (e^{it} + z)/(e^{it} - z) ln mu(t) dt = c_0 + 2 sum_{k>=1} c_k z^k

is then summed exactly (the Nyquist term once). The real part of the series
on the circle interpolates the samples, so boundary traces reproduce mu on
the grid to rounding error.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import GeneratorFlagError, NotNormalizedError, PreconditionError
from .extremal import ExtremalityVerdict, PerturbationSet, feasibility_probe, probe_perturbations
from .lorentz import ConcaveGenerator, lorentz_norm
from .rearrange import SampledFunction

__all__ = [
    "TWO_PI",
    "CLIP_LEVEL",
    "DiskFunction",
    "BoundarySamples",
    "evaluate",
    "boundary_modulus",
    "boundary_trace",
    "radial_norm_profile",
    "hardy_lorentz_norm",
    "outerness_check",
    "inner_check",
    "fourier_coefficients",
    "factorize",
    "construct_arc_constant_example",
    "th2a_probe",
    "inner_extreme_check",
    "default_radii",
]

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
CLIP_LEVEL = 30.0
EVAL_RADIUS_CAP = 1.0 - 1e-9
SAMPLE_RADIUS_CAP = 1.0 - 1e-6
# deconvolving radial data amplifies mode k by r^-k; modes beyond this are dropped
MAX_DECONVOLUTION_GAIN = 1e8


class DomainError(PreconditionError):
    """Evaluation point too close to (or outside) the unit circle."""


def default_radii() -> np.ndarray:
    """The radius schedule ``1 - 2^-k``, k = 4..14."""
    return 1.0 - 2.0 ** -np.arange(4, 15)


def _midpoints(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * (TWO_PI / n)


def _series_coefficients(u: np.ndarray) -> np.ndarray:
    """Coefficients ``beta_k`` with ``Re sum_k beta_k e^{i k t_j} = u_j`` on the midpoint grid."""
    n = u.size
    k = np.arange(n // 2 + 1)
    c = np.fft.fft(u)[: k.size] / n * np.exp(-1j * k * math.pi / n)
    beta = 2.0 * c
    beta[0] = c[0].real
    if n % 2 == 0 and n > 1:
        beta[-1] = c[-1]
    return beta


def _series_on_circle(beta: np.ndarray, r: float, m: int) -> np.ndarray:
    """``sum_k beta_k (r e^{i t_j})^k`` at the m midpoints, via one folded FFT."""
    k = np.arange(beta.size)
    terms = beta * r ** k * np.exp(1j * math.pi * k / m)
    folded = np.zeros(m, dtype=complex)
    np.add.at(folded, k % m, terms)
    return m * np.fft.ifft(folded)


def _series_at(beta: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z, dtype=complex)
    for b in beta[::-1]:
        out = out * z + b
    return out


@dataclass(frozen=True, eq=False)
class DiskFunction:
    """``F = lambda-rotation * Blaschke(zeros) * S(atoms) * outer(exp(log_modulus))``.

    ``outer_log_modulus`` is a real SampledFunction on [0, 2 pi]; its values
    are clamped to ``[-CLIP_LEVEL, CLIP_LEVEL]`` on construction and the
    number of clamped cells is kept in ``clamped``.
    """

    blaschke_zeros: tuple = ()
    singular_atoms: tuple = ()
    outer_log_modulus: Optional[SampledFunction] = None
    phase_constant: float = 0.0
    clamped: int = field(default=0, init=False)

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.blaschke_zeros)
        if any(abs(z) >= 1 for z in zeros):
            raise ValueError("Blaschke zeros must lie strictly inside the unit disk")
        atoms = tuple((float(th) % TWO_PI, float(m)) for th, m in self.singular_atoms)
        if any(m < 0 for _, m in atoms):
            raise ValueError("singular atom masses must be nonnegative")
        logm = self.outer_log_modulus
        if logm is None:
            logm = SampledFunction(TWO_PI, [0.0])
        if not math.isclose(logm.interval_length, TWO_PI, rel_tol=1e-12):
            raise ValueError("outer_log_modulus must live on [0, 2 pi]")
        if not logm.is_real:
            raise ValueError("outer_log_modulus must be real")
        u = logm.values.real
        clipped = np.clip(u, -CLIP_LEVEL, CLIP_LEVEL)
        n_clamped = int(np.count_nonzero(clipped != u))
        if n_clamped:
            log.info("clamped %d log-modulus samples to +-%g", n_clamped, CLIP_LEVEL)
            logm = SampledFunction(TWO_PI, clipped)
        object.__setattr__(self, "blaschke_zeros", zeros)
        object.__setattr__(self, "singular_atoms", atoms)
        object.__setattr__(self, "outer_log_modulus", logm)
        object.__setattr__(self, "phase_constant", float(self.phase_constant))
        object.__setattr__(self, "clamped", n_clamped)
        object.__setattr__(self, "_beta", _series_coefficients(logm.values.real))

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value: complex) -> "DiskFunction":
        value = complex(value)
        if value == 0:
            raise ValueError("the zero function has no inner-outer representation")
        return cls(outer_log_modulus=SampledFunction(TWO_PI, [math.log(abs(value))]),
                   phase_constant=math.atan2(value.imag, value.real))

    @classmethod
    def blaschke(cls, zeros: Iterable[complex], atoms=()) -> "DiskFunction":
        return cls(blaschke_zeros=tuple(zeros), singular_atoms=tuple(atoms))

    @classmethod
    def outer_from_log_modulus(cls, log_modulus, phase_constant: float = 0.0) -> "DiskFunction":
        return cls(outer_log_modulus=SampledFunction(TWO_PI, np.asarray(log_modulus, float)),
                   phase_constant=phase_constant)

    @classmethod
    def outer_from_modulus(cls, modulus, phase_constant: float = 0.0) -> "DiskFunction":
        mu = np.asarray(modulus, dtype=float)
        if np.any(mu < 0):
            raise ValueError("modulus samples must be nonnegative")
        with np.errstate(divide="ignore"):
            logmu = np.log(mu)
        # zeros of mu map to -inf; push them just past the clip so they are counted
        logmu = np.maximum(logmu, -CLIP_LEVEL - 1.0)
        return cls(outer_log_modulus=SampledFunction(TWO_PI, logmu),
                   phase_constant=phase_constant)

    def with_outer(self, log_modulus, phase_constant: Optional[float] = None) -> "DiskFunction":
        return DiskFunction(self.blaschke_zeros, self.singular_atoms,
                            SampledFunction(TWO_PI, np.asarray(log_modulus, float)),
                            self.phase_constant if phase_constant is None else phase_constant)

    def scaled(self, factor: float) -> "DiskFunction":
        """``factor * F`` for a positive real factor (shifts the log-modulus)."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return self.with_outer(self.outer_log_modulus.values.real + math.log(factor))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "zeros": [[z.real, z.imag] for z in self.blaschke_zeros],
            "atoms": [[th, m] for th, m in self.singular_atoms],
            "log_modulus": self.outer_log_modulus.to_dict(),
            "lambda": self.phase_constant,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiskFunction":
        logm = data.get("log_modulus")
        return cls(
            blaschke_zeros=tuple(complex(re, im) for re, im in data.get("zeros", [])),
            singular_atoms=tuple((th, m) for th, m in data.get("atoms", [])),
            outer_log_modulus=None if logm is None else SampledFunction.from_dict(logm),
            phase_constant=float(data.get("lambda", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DiskFunction":
        return cls.from_dict(json.loads(text))

    # -- factor evaluation (no domain checks) --------------------------------

    def _inner_factor(self, z: np.ndarray) -> np.ndarray:
        out = self._inner_factor_blaschke(z)
        for th, m in self.singular_atoms:
            e = np.exp(1j * th)
            out = out * np.exp(-m * (e + z) / (e - z))
        return out

    def _inner_on_circle(self, t: np.ndarray) -> np.ndarray:
        # on |z| = 1 the Herglotz ratio of an atom at theta is i cot((t - theta)/2)
        out = self._inner_factor_blaschke(np.exp(1j * t))
        for th, m in self.singular_atoms:
            out = out * np.exp(-1j * m / np.tan((t - th) / 2))
        return out

    def _inner_factor_blaschke(self, z: np.ndarray) -> np.ndarray:
        out = np.ones_like(z, dtype=complex)
        for a in self.blaschke_zeros:
            if a == 0:
                out = out * z
            else:
                out = out * (abs(a) / a) * (a - z) / (1 - np.conj(a) * z)
        return out

    def _outer_factor(self, z: np.ndarray) -> np.ndarray:
        return np.exp(_series_at(self._beta, z) + 1j * self.phase_constant)

    def _outer_on_circle(self, r: float, m: int) -> np.ndarray:
        return np.exp(_series_on_circle(self._beta, r, m) + 1j * self.phase_constant)


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """Values of F on the circle of radius ``radius_used`` at n cell midpoints.

    ``radius_used == 1`` marks the boundary trace (the radial limit).
    """

    samples: SampledFunction
    radius_used: float

    def __post_init__(self):
        if self.samples.interval_length != TWO_PI:
            raise ValueError("boundary samples must live on [0, 2 pi]")
        if not 0 < self.radius_used <= 1:
            raise ValueError("radius must lie in (0, 1]")

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @property
    def n(self) -> int:
        return self.samples.n


def evaluate(F: DiskFunction, z):
    """F(z) for ``|z| <= 1 - 1e-9`` (scalar or array)."""
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) > EVAL_RADIUS_CAP):
        raise DomainError("evaluation point too close to the unit circle")
    out = F._inner_factor(zz) * F._outer_factor(zz)
    return complex(out) if out.ndim == 0 else out


def boundary_modulus(F: DiskFunction, n: int, r: float) -> BoundarySamples:
    """Samples ``F(r e^{i t_j})`` at the n cell midpoints of [0, 2 pi]."""
    if not 0 < r <= SAMPLE_RADIUS_CAP:
        raise DomainError(f"sampling radius must lie in (0, {SAMPLE_RADIUS_CAP}]")
    z = r * np.exp(1j * _midpoints(n))
    vals = F._inner_factor(z) * F._outer_on_circle(r, n)
    return BoundarySamples(SampledFunction(TWO_PI, vals), float(r))


def boundary_trace(F: DiskFunction, n: int) -> BoundarySamples:
    """Radial limit of F at the n midpoints.

    Blaschke and singular factors are evaluated on the circle itself, the
    outer factor through its series at r = 1.
    """
    with np.errstate(all="ignore"):
        inner = F._inner_on_circle(_midpoints(n))
    if not np.all(np.isfinite(inner)):
        raise DomainError("a singular atom sits exactly on a sample point")
    return BoundarySamples(SampledFunction(TWO_PI, inner * F._outer_on_circle(1.0, n)), 1.0)


def _check_circle_generator(phi: ConcaveGenerator) -> None:
    if not math.isclose(phi.interval_length, TWO_PI, rel_tol=1e-12):
        raise PreconditionError("the generator must live on [0, 2 pi]")


def radial_norm_profile(F: DiskFunction, phi: ConcaveGenerator, n: int = 1024,
                        radii: Optional[Sequence[float]] = None) -> tuple[np.ndarray, np.ndarray]:
    """Lorentz norms of ``F_r`` along the radius schedule."""
    rs = default_radii() if radii is None else np.asarray(radii, dtype=float)
    norms = np.array([lorentz_norm(boundary_modulus(F, n, float(r)).samples, phi) for r in rs])
    return rs, norms


def hardy_lorentz_norm(F: DiskFunction, phi: ConcaveGenerator, n: int = 1024,
                       radii: Optional[Sequence[float]] = None) -> float:
    """``sup_r ||F_r||`` over the radius schedule (default ``1 - 2^-k``, k = 4..14)."""
    _check_circle_generator(phi)
    rs, norms = radial_norm_profile(F, phi, n, radii)
    if np.any(np.diff(norms) < -1e-12 * norms.max()):
        log.warning("radial Lorentz norms are not monotone in r: %s", norms)
    return float(norms.max())


def outerness_check(F: DiskFunction, n: int, r: Optional[float] = None,
                    tol: float = 1e-6) -> tuple[bool, float]:
    """Compare ``ln |F(0)|`` with the mean of ``ln |F|`` on the circle.

    ``deficit = mean_j ln |F(r e^{i t_j})| - ln |F(0)|``; r = None uses the
    boundary trace. Outer functions have deficit 0; a Blaschke zero at a
    contributes ``-ln |a|`` and a singular atom its mass (in the trace).
    """
    if any(z == 0 for z in F.blaschke_zeros):
        raise PreconditionError("F vanishes at the origin")
    b = boundary_trace(F, n) if r is None else boundary_modulus(F, n, r)
    mod = np.abs(b.values)
    if np.any(mod <= math.exp(-CLIP_LEVEL)):
        raise PreconditionError("boundary modulus falls below the clip floor")
    deficit = float(np.mean(np.log(mod)) - math.log(abs(evaluate(F, 0.0))))
    return abs(deficit) <= tol, deficit


def inner_check(b: BoundarySamples, tol: float, exceptional_fraction: float = 0.01) -> bool:
    """True iff all but ``exceptional_fraction`` of the samples have modulus within tol of 1."""
    bad = np.abs(np.abs(b.values) - 1.0) > tol
    return int(bad.sum()) <= math.floor(exceptional_fraction * b.n)


def fourier_coefficients(b: BoundarySamples, k_range: Iterable[int]) -> np.ndarray:
    """Midpoint-rule ``c_k = (1/2 pi) int g(t) e^{-ikt} dt`` for the requested k."""
    t = _midpoints(b.n)
    ks = np.asarray(list(k_range), dtype=int)
    return np.exp(-1j * np.outer(ks, t)) @ b.values / b.n


def _deconvolve(u_r: np.ndarray, r: float) -> np.ndarray:
    """Boundary samples of the harmonic function whose radius-r samples are u_r."""
    if r == 1.0:
        return u_r
    n = u_r.size
    freq = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    if n % 2 == 0:
        freq[n // 2] = n // 2
    gain = r ** (-freq)
    spec = np.fft.fft(u_r)
    spec = np.where(gain <= MAX_DECONVOLUTION_GAIN, spec * gain, 0.0)
    return np.fft.ifft(spec).real


def factorize(b: BoundarySamples, zeros: Sequence[complex] = (), atoms=()
              ) -> tuple[DiskFunction, DiskFunction, float]:
    """Split sampled values into inner and outer parts.

    The caller supplies the zeros (and any singular atoms). The outer part
    carries ``ln|b| - ln|inner|`` transported from radius ``b.radius_used``
    to the boundary, with its phase constant fitted to b. The third value is
    ``max_j |inner(z_j) outer(z_j) - b_j|`` at the sample points.
    """
    mod = np.abs(b.values)
    if np.any(mod <= math.exp(-CLIP_LEVEL)):
        raise PreconditionError("boundary samples fall below the clip floor")
    inner = DiskFunction.blaschke(zeros, atoms)
    r = b.radius_used
    z = r * np.exp(1j * _midpoints(b.n))
    with np.errstate(all="ignore"):
        inner_vals = inner._inner_factor(z)
    u_r = np.log(mod) - np.log(np.abs(inner_vals))
    outer = DiskFunction(outer_log_modulus=SampledFunction(TWO_PI, _deconvolve(u_r, r)))
    product = inner_vals * outer._outer_on_circle(r, b.n)
    lam = float(np.angle(np.sum(b.values * np.conj(product))))
    outer = outer.with_outer(outer.outer_log_modulus.values.real, lam)
    err = float(np.max(np.abs(product * np.exp(1j * lam) - b.values)))
    return inner, outer, err


def _off_arc_bump(t: np.ndarray, start: float, length: float) -> np.ndarray:
    """``sin^4`` bump on the complement of the arc, vanishing to third order at its ends."""
    s = (t - start - length) % TWO_PI
    off = TWO_PI - length
    inside_off = s < off
    out = np.zeros_like(t)
    out[inside_off] = np.sin(math.pi * s[inside_off] / off) ** 4
    return out


def construct_arc_constant_example(c: float, arc: tuple[float, float], zeros: Sequence[complex],
                                   n: int, phi: ConcaveGenerator, bump: float = math.log(2.0),
                                   radii: Optional[Sequence[float]] = None) -> DiskFunction:
    """A norm-one F whose boundary modulus is constant on an arc.

    ``ln mu = ln c`` on ``arc = (start, end)`` and ``ln c + bump * sin^4`` on
    the complementary arc, times the Blaschke product of ``zeros``; then
    rescaled so that ``hardy_lorentz_norm(F, phi, n, radii) = 1``. With zeros
    present F is not outer; with ``bump != 0`` it is not inner.
    """
    start, end = float(arc[0]), float(arc[1])
    length = end - start
    if not 0 < length < TWO_PI:
        raise ValueError("arc length must lie in (0, 2 pi)")
    if not c > 0:
        raise ValueError("c must be positive")
    t = _midpoints(n)
    u = math.log(c) + bump * _off_arc_bump(t, start, length)
    F = DiskFunction(tuple(zeros), (), SampledFunction(TWO_PI, u))
    norm = hardy_lorentz_norm(F, phi, n, radii)
    F = F.scaled(1.0 / norm)
    inner_ok = inner_check(boundary_trace(F, n), 1e-9)
    outer_ok = None
    if all(z != 0 for z in F.blaschke_zeros):
        outer_ok, _ = outerness_check(F, n)
    log.info("arc example: c=%.6g inner=%s outer=%s", c / norm, inner_ok, outer_ok)
    return F


def _analytic_basis(n: int, degree: int) -> np.ndarray:
    t = _midpoints(n)
    cols = []
    for k in range(degree + 1):
        e = np.exp(1j * k * t)
        cols += [e, 1j * e]
    return np.stack(cols, axis=1)


def th2a_probe(F: DiskFunction, phi: ConcaveGenerator, degree: int, n: int, tol: float,
               seed: int = 0, directions: int = 32, budget: int = 500,
               radii: Optional[Sequence[float]] = None) -> ExtremalityVerdict:
    """Probe F for perturbations by analytic polynomials of degree <= ``degree``.

    The center is the boundary trace of F on n cells, rescaled to exact unit
    Lorentz norm; perturbations range over ``sum_{k<=degree} a_k e^{ikt}``
    (2 degree + 2 real dimensions). An Extreme verdict says that no such
    polynomial perturbation exists, which is a necessary condition for F to
    be extreme in H(Lambda(phi)), not a proof of it.
    """
    flags = phi.flags(n)
    if not (flags.strictly_increasing and flags.strictly_concave):
        raise GeneratorFlagError("th2a_probe needs a strictly increasing, strictly concave generator")
    hn = hardy_lorentz_norm(F, phi, n, radii)
    if abs(hn - 1.0) > tol:
        raise NotNormalizedError(f"hardy_lorentz_norm(F) = {hn!r}, expected 1 within {tol}")
    trace = boundary_trace(F, n).samples
    scale = lorentz_norm(trace, phi)
    center = trace * (1.0 / scale)
    pset = PerturbationSet(center, phi, basis=_analytic_basis(n, degree))
    # |a_k| <= mean |g| <= ||g|| <= level
    verdict = probe_perturbations(pset, bound=pset.level, directions=directions,
                                  budget=budget, tol=tol, seed=seed)
    verdict.stats.update({
        "subspace": f"analytic polynomials of degree <= {degree}",
        "real_dimension": 2 * degree + 2,
        "trace_scale": scale,
        "scope": "necessary condition only: restricted to a finite-dimensional subspace",
    })
    return verdict


def inner_extreme_check(F: DiskFunction, phi: ConcaveGenerator, n_probe: int = 64,
                        n_check: int = 2048, r: float = 1.0 - 1e-5, inner_tol: float = 1e-2,
                        tol: float = 1e-6, seed: int = 0, directions: int = 32,
                        budget: int = 500) -> tuple[bool, Optional[ExtremalityVerdict]]:
    """Two-step argument for inner functions.

    First the radial samples at r must pass :func:`inner_check`; the boundary
    function is then unimodular, and its trace on ``n_probe`` cells (projected
    onto the unit circle) is probed in the full Lorentz ball. Returns the
    inner verdict and the probe verdict (None when the first step fails).
    """
    if not inner_check(boundary_modulus(F, n_check, r), inner_tol):
        return False, None
    trace = boundary_trace(F, n_probe).values
    center = SampledFunction(TWO_PI, trace / np.abs(trace))
    return True, feasibility_probe(center, phi, directions=directions, budget=budget,
                                   tol=tol, seed=seed)
