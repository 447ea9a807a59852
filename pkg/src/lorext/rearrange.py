"""
Step-function model of measurable functions on [0, a] and their decreasing
rearrangements.

A function is stored as n complex cell values on a uniform grid, every cell
carrying measure a/n. With that model the rearrangement, the distribution
function and the level-set family are exact finite objects.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "SampledFunction",
    "RearrangedProfile",
    "LevelSetFamily",
    "decreasing_rearrangement",
    "distribution_function",
    "equimeasurable",
    "level_set_family",
    "check_same_grid",
]


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex step function on [0, interval_length] with n equal cells.

    Parameters
    ----------
    interval_length : float
        The length ``a`` of the underlying interval.
    values : array_like
        Cell values; coerced to a read-only complex array.
    """

    interval_length: float
    values: np.ndarray

    def __post_init__(self):
        a = float(self.interval_length)
        if not (math.isfinite(a) and a > 0):
            raise ValueError(f"interval_length must be positive and finite, got {a!r}")
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.size < 1:
            raise ValueError("a SampledFunction needs at least one cell")
        if not np.all(np.isfinite(vals)):
            raise ValueError("cell values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "interval_length", a)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def cell_measure(self) -> float:
        return self.interval_length / self.n

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def midpoints(self) -> np.ndarray:
        """Cell midpoints ``(j + 1/2) a / n``."""
        return (np.arange(self.n) + 0.5) * self.cell_measure

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.interval_length, values)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __neg__(self) -> "SampledFunction":
        return self.with_values(-self.values)

    def __mul__(self, scalar) -> "SampledFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SampledFunction(a={self.interval_length!r}, n={self.n})"

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value, n: int, interval_length: float = 1.0) -> "SampledFunction":
        return cls(interval_length, np.full(n, value, dtype=complex))

    @classmethod
    def indicator(cls, cells: Iterable[int], n: int, interval_length: float = 1.0,
                  height=1.0) -> "SampledFunction":
        vals = np.zeros(n, dtype=complex)
        vals[list(cells)] = height
        return cls(interval_length, vals)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "a": self.interval_length,
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampledFunction":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("'re' and 'im' must have equal length")
        return cls(float(data["a"]), re + 1j * im)

    def to_json(self) -> str:
        # json uses repr() for floats, which is the shortest round-trip form
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SampledFunction":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# a={self.interval_length!r}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "re", "im"])
        for j, v in enumerate(self.values):
            writer.writerow([j, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        """Parse the CSV form: a ``# a=<value>`` line, then ``index,re,im`` rows."""
        a = None
        rows = []
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, _, val = stripped.lstrip("#").strip().partition("=")
                if key.strip() == "a":
                    a = float(val)
                continue
            rows.append(stripped)
        if a is None:
            raise ValueError("CSV input lacks the '# a=<length>' header line")
        reader = csv.DictReader(rows)
        if reader.fieldnames is None or not {"index", "re"} <= set(reader.fieldnames):
            raise ValueError("CSV input needs columns index,re,im")
        cells = {}
        for rec in reader:
            cells[int(rec["index"])] = complex(float(rec["re"]), float(rec.get("im") or 0.0))
        n = len(cells)
        if sorted(cells) != list(range(n)):
            raise ValueError("CSV indices must be exactly 0..n-1")
        return cls(a, [cells[j] for j in range(n)])


@dataclass(frozen=True, eq=False)
class RearrangedProfile:
    """Nonincreasing nonnegative cell values: the discrete ``x*``."""

    values: np.ndarray
    interval_length: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size < 1:
            raise ValueError("a profile needs at least one cell")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite and nonnegative")
        if np.any(np.diff(vals) > 0):
            raise ValueError("profile values must be nonincreasing")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "interval_length", float(self.interval_length))

    @property
    def n(self) -> int:
        return self.values.size

    def prefix_integrals(self) -> np.ndarray:
        """``int_0^{k a/n} x*(s) ds`` for k = 0..n."""
        return np.concatenate(([0.0], np.cumsum(self.values))) * (self.interval_length / self.n)

    def to_function(self) -> SampledFunction:
        """Lift the profile back to a (real) SampledFunction on the same grid."""
        return SampledFunction(self.interval_length, self.values)


@dataclass(frozen=True, eq=False)
class LevelSetFamily:
    """Nested sets ``E_k``: the first k entries of ``order``, measure ``k a / n``."""

    order: np.ndarray
    interval_length: float

    @property
    def n(self) -> int:
        return self.order.size

    def cells(self, k: int) -> np.ndarray:
        return self.order[:k]

    def mask(self, k: int) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.order[:k]] = True
        return m

    def prefix_integrals(self, values) -> np.ndarray:
        """``int_{E_k} values`` for k = 0..n, with values given cellwise."""
        v = np.asarray(values)[self.order]
        return np.concatenate(([0.0], np.cumsum(v))) * (self.interval_length / self.n)


Rearrangeable = Union[SampledFunction, RearrangedProfile]


def check_same_grid(f, g) -> None:
    if f.n != g.n:
        raise GridMismatchError(f"cell counts differ: {f.n} vs {g.n}")
    if not math.isclose(f.interval_length, g.interval_length, rel_tol=1e-12):
        raise GridMismatchError(
            f"interval lengths differ: {f.interval_length!r} vs {g.interval_length!r}")


def decreasing_rearrangement(f: Rearrangeable) -> RearrangedProfile:
    """Moduli of the cells sorted in nonincreasing order.

    A RearrangedProfile is returned unchanged (rearrangement is idempotent).
    """
    if isinstance(f, RearrangedProfile):
        return f
    moduli = np.abs(f.values)
    return RearrangedProfile(np.sort(moduli)[::-1], f.interval_length)


def distribution_function(f: SampledFunction, tau: float) -> float:
    """Measure of ``{|f| > tau}``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return f.cell_measure * int(np.count_nonzero(np.abs(f.values) > tau))


def equimeasurable(f: SampledFunction, g: SampledFunction, tol: float = 0.0) -> bool:
    check_same_grid(f, g)
    fs = decreasing_rearrangement(f).values
    gs = decreasing_rearrangement(g).values
    return bool(np.max(np.abs(fs - gs)) <= tol)


def level_set_family(f: SampledFunction) -> LevelSetFamily:
    """Cells ordered by nonincreasing modulus, ties by ascending index.

    Every prefix ``E_k`` satisfies ``{|f| > f*_k} ⊆ E_k ⊆ {|f| >= f*_k}`` and
    ``int_{E_k} |f| = int_0^{k a/n} f*``.
    """
    order = np.argsort(-np.abs(f.values), kind="stable")
    return LevelSetFamily(order, f.interval_length)
