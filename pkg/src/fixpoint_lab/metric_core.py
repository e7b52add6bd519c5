"""Points, metric spaces, the designated zero point and the induced norm.

A point is whatever the domain says it is: a float for an interval, a tuple
of floats for a box, a hashable label for a finite set, a ``Fraction`` for
the rational interval.  Keeping points as plain immutable Python values makes
them hashable and keeps distance evaluation bit-deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .report import CertificateReport

Point = Any
Metric = Callable[[Point, Point], float]

TOL_METRIC = 1e-12


class DomainError(ValueError):
    """A point does not belong to the domain it was used with."""


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    def contains(self, p: Point) -> bool:
        if isinstance(p, bool) or not isinstance(p, (int, float)):
            return False
        return math.isfinite(p) and self.lo <= p <= self.hi

    def origin(self) -> float:
        return float(min(max(0.0, self.lo), self.hi))

    def landmarks(self) -> list[float]:
        return [float(self.lo), float(self.hi)] if self.lo < self.hi else [float(self.lo)]

    def sample(self, rng: np.random.Generator, n: int) -> list[float]:
        return [float(v) for v in rng.uniform(self.lo, self.hi, size=n)]

    def describe(self) -> str:
        return f"interval:{self.lo!r},{self.hi!r}"


@dataclass(frozen=True)
class Box:
    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if len(self.lows) != len(self.highs) or not self.lows:
            raise ValueError("box bounds must be nonempty and of equal length")
        for lo, hi in zip(self.lows, self.highs):
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad box side [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.lows)

    def contains(self, p: Point) -> bool:
        if not isinstance(p, tuple) or len(p) != self.dim:
            return False
        return all(
            isinstance(c, (int, float)) and math.isfinite(c) and lo <= c <= hi
            for c, lo, hi in zip(p, self.lows, self.highs)
        )

    def origin(self) -> tuple[float, ...]:
        return tuple(float(min(max(0.0, lo), hi)) for lo, hi in zip(self.lows, self.highs))

    def landmarks(self) -> list[tuple[float, ...]]:
        corners = itertools.product(*[sorted({float(lo), float(hi)}) for lo, hi in zip(self.lows, self.highs)])
        return [tuple(c) for c in corners]

    def sample(self, rng: np.random.Generator, n: int) -> list[tuple[float, ...]]:
        coords = rng.uniform(self.lows, self.highs, size=(n, self.dim))
        return [tuple(float(c) for c in row) for row in coords]

    def describe(self) -> str:
        return "box:" + ";".join(f"{lo!r},{hi!r}" for lo, hi in zip(self.lows, self.highs))


@dataclass(frozen=True)
class FiniteSet:
    labels: tuple[Hashable, ...]

    def __post_init__(self):
        if not self.labels or len(set(self.labels)) != len(self.labels):
            raise ValueError("finite set needs distinct labels")

    def contains(self, p: Point) -> bool:
        try:
            return p in self.labels
        except TypeError:
            return False

    def origin(self) -> Hashable:
        return self.labels[0]

    def landmarks(self) -> list[Hashable]:
        return list(self.labels)

    def sample(self, rng: np.random.Generator, n: int) -> list[Hashable]:
        idx = rng.integers(0, len(self.labels), size=n)
        return [self.labels[i] for i in idx]

    def describe(self) -> str:
        return "discrete:" + ",".join(str(lab) for lab in self.labels)


@dataclass(frozen=True)
class RationalInterval:
    """Rationals in the half-open interval (0, 1].  Not complete."""

    max_denominator: int = 1000

    def contains(self, p: Point) -> bool:
        return isinstance(p, Fraction) and 0 < p <= 1

    def origin(self) -> Fraction:
        return Fraction(1)

    def landmarks(self) -> list[Fraction]:
        return [Fraction(1)]

    def sample(self, rng: np.random.Generator, n: int) -> list[Fraction]:
        dens = rng.integers(1, self.max_denominator + 1, size=n)
        out = []
        for q in dens:
            out.append(Fraction(int(rng.integers(1, q + 1)), int(q)))
        return out

    def describe(self) -> str:
        return "rationals"


Domain = Interval | Box | FiniteSet | RationalInterval


# ---------------------------------------------------------------------------
# Metrics


def absolute(x: Point, y: Point) -> float:
    return float(abs(x - y))


def euclidean(x: Point, y: Point) -> float:
    return math.dist(x, y)


def discrete(x: Point, y: Point) -> float:
    return 0.0 if x == y else 1.0


METRICS: dict[str, Metric] = {
    "absolute": absolute,
    "euclidean": euclidean,
    "discrete": discrete,
}


@dataclass(frozen=True)
class MetricSpace:
    """A domain, a distance on it, and the point chosen as the zero.

    ``complete`` is an assertion made by whoever defines the space; nothing
    here tries to prove it.
    """

    name: str
    domain: Domain
    metric: Metric = field(compare=False)
    zero_point: Point = None
    complete: bool = True

    def __post_init__(self):
        if self.zero_point is None:
            object.__setattr__(self, "zero_point", self.domain.origin())
        if not self.domain.contains(self.zero_point):
            raise DomainError(f"zero point {self.zero_point!r} not in {self.domain.describe()}")

    def with_zero(self, zero_point: Point) -> MetricSpace:
        return MetricSpace(self.name, self.domain, self.metric, zero_point, self.complete)

    def contains(self, p: Point) -> bool:
        return self.domain.contains(p)


def interval_space(lo: float = 0.0, hi: float = 1.0, zero_point: float | None = None,
                   name: str = "unit_interval") -> MetricSpace:
    return MetricSpace(name, Interval(float(lo), float(hi)), absolute, zero_point)


def _check(space: MetricSpace, p: Point) -> None:
    if not space.domain.contains(p):
        raise DomainError(f"{p!r} is not a point of {space.domain.describe()}")


def distance(space: MetricSpace, x: Point, y: Point) -> float:
    _check(space, x)
    _check(space, y)
    return space.metric(x, y)


def norm(space: MetricSpace, x: Point) -> float:
    """Distance from ``x`` to the space's zero point."""
    return distance(space, x, space.zero_point)


# ---------------------------------------------------------------------------
# Samples


@dataclass(frozen=True)
class SampleSet:
    """Seeded points of a space and index pairs into them.

    Pairs are stored as indices so per-point quantities (images, norms,
    displacements) are computed once per point rather than once per pair.
    """

    points: tuple[Point, ...]
    pair_index: tuple[tuple[int, int], ...]
    seed: int

    @property
    def pairs(self) -> list[tuple[Point, Point]]:
        return [(self.points[i], self.points[j]) for i, j in self.pair_index]

    def __len__(self) -> int:
        return len(self.pair_index)


def sample_set(space: MetricSpace, n_points: int = 1000, n_pairs: int = 10_000,
               seed: int = 0, extra: Sequence[Point] = ()) -> SampleSet:
    """Draw a reproducible sample of ``space``.

    Landmarks (interval endpoints, box corners, every label of a finite set),
    the zero point and ``extra`` always come first; they are paired with each
    other and with every random point before random pairs fill up the
    remainder.  Extremal pairs such as ``(1, 0)`` are therefore never left to
    chance.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    rng = np.random.default_rng(seed)
    fixed: list[Point] = []
    for p in [*space.domain.landmarks(), space.zero_point, *extra]:
        _check(space, p)
        if p not in fixed:
            fixed.append(p)
    points = fixed + space.domain.sample(rng, n_points)
    nf = len(fixed)

    index: list[tuple[int, int]] = list(itertools.combinations(range(nf), 2))
    index += [(i, j) for j in range(nf, len(points)) for i in range(nf)]
    index = index[:n_pairs]
    need = n_pairs - len(index)
    if need > 0:
        ij = rng.integers(0, len(points), size=(need, 2))
        index += [(int(i), int(j)) for i, j in ij]
    return SampleSet(tuple(points), tuple(index), seed)


def sample_points(space: MetricSpace, n: int, seed: int) -> list[Point]:
    """``n`` seeded random points of the space, no landmarks."""
    return space.domain.sample(np.random.default_rng(seed), n)


# ---------------------------------------------------------------------------
# Axioms


def verify_metric_axioms(space: MetricSpace, samples: SampleSet, tol: float = TOL_METRIC):
    """Largest violation of identity, symmetry and the triangle inequality.

    Triples are consecutive runs of three sample points, each checked in all
    three rotations so every point takes the middle position once.
    """
    pts = samples.points
    if not pts:
        raise ValueError("empty sample set")
    worst, witness, checked = -math.inf, None, 0

    def record(v, w):
        nonlocal worst, witness, checked
        checked += 1
        if v > worst:
            worst, witness = v, w

    for p in pts:
        record(abs(distance(space, p, p)), (p, p))
    for x, y in samples.pairs:
        dxy = distance(space, x, y)
        record(abs(dxy - distance(space, y, x)), (x, y))
        record(-dxy, (x, y))
    for k in range(len(pts) - 2):
        a, b, c = pts[k], pts[k + 1], pts[k + 2]
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            v = distance(space, x, z) - distance(space, x, y) - distance(space, y, z)
            record(v, (x, y, z))
    return CertificateReport("metric_axioms", worst <= tol, worst, witness, checked)
