"""Named self-maps with declared contractive status.

The declared ``expected_status`` flags are claims, not facts: the suite
confirms each one with the conditions module.  Kannan constants are likewise
never hard-coded here; they are measured by ``conditions.fit_lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .metric_core import (
    Box,
    DomainError,
    FiniteSet,
    MetricSpace,
    Point,
    RationalInterval,
    absolute,
    discrete,
    euclidean,
    distance,
    interval_space,
)

STATUS_FLAGS = frozenset({"kannan", "banach", "generalized_b", "neither"})


class RangeError(ValueError):
    """A map sent a point outside its own domain (a catalog bug)."""


class UnknownMapError(KeyError):
    pass


@dataclass(frozen=True)
class SelfMap:
    name: str
    space: MetricSpace
    func: Callable[[Point], Point] = field(compare=False)
    expected_status: frozenset[str] = frozenset()
    family: str = "builtin"
    params: tuple = ()

    def __post_init__(self):
        unknown = set(self.expected_status) - STATUS_FLAGS
        if unknown:
            raise ValueError(f"unknown status flags {sorted(unknown)}")
        if "neither" in self.expected_status and len(self.expected_status) > 1:
            raise ValueError("'neither' excludes every other flag")

    def __call__(self, x: Point) -> Point:
        return apply_map(self, x)

    def on(self, space: MetricSpace) -> SelfMap:
        """The same map over a re-pointed space (e.g. a different zero)."""
        return SelfMap(self.name, space, self.func, self.expected_status, self.family, self.params)


@dataclass(frozen=True)
class CatalogEntry:
    map: SelfMap
    known_fixed_point: Point | None = None
    notes: str = ""


def apply_map(m: SelfMap, x: Point) -> Point:
    if not m.space.contains(x):
        raise DomainError(f"{x!r} is not in the domain of {m.name}")
    y = m.func(x)
    if not m.space.contains(y):
        raise RangeError(f"{m.name} maps {x!r} to {y!r}, outside its domain")
    return y


# ---------------------------------------------------------------------------
# Families usable from config files


def _elementwise(f):
    def g(x):
        if isinstance(x, tuple):
            return tuple(f(c) for c in x)
        return f(x)

    return g


def constant_family(value) -> Callable[[Point], Point]:
    value = tuple(value) if isinstance(value, (list, tuple)) else value
    return lambda x: value


def affine_family(slope, intercept) -> Callable[[Point], Point]:
    return _elementwise(lambda c: slope * c + intercept)


def piecewise_affine_family(breakpoint, left_slope, left_intercept,
                            right_slope, right_intercept) -> Callable[[Point], Point]:
    """``left`` branch strictly below ``breakpoint``, ``right`` from it on."""

    def f(x):
        if x < breakpoint:
            return left_slope * x + left_intercept
        return right_slope * x + right_intercept

    return f


FAMILIES: dict[str, tuple[Callable[..., Callable[[Point], Point]], int]] = {
    "constant": (constant_family, 1),
    "affine": (affine_family, 2),
    "piecewise_affine": (piecewise_affine_family, 5),
}


def family_map(name: str, space: MetricSpace, family: str, params: Iterable,
               expected_status: Iterable[str] = ()) -> SelfMap:
    try:
        factory, arity = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown map family {family!r}; known: {sorted(FAMILIES)}") from None
    params = tuple(params)
    if family == "constant" and isinstance(space.domain, Box):
        params = (tuple(params),)
    if len(params) != arity:
        raise ValueError(f"family {family!r} takes {arity} parameters, got {len(params)}")
    if family == "piecewise_affine" and isinstance(space.domain, Box):
        raise ValueError("piecewise_affine is defined on intervals only")
    return SelfMap(name, space, factory(*params), frozenset(expected_status), family, params)


# ---------------------------------------------------------------------------
# Built-in catalog


def _quarter_fifth(x):
    # division keeps Fractions exact
    return x / 4 if x < Fraction(1, 2) else x / 5


def _radial_quarter_fifth(x):
    s = 4 if math.hypot(*x) < 0.5 else 5
    return tuple(c / s for c in x)


def _build_catalog() -> dict[str, CatalogEntry]:
    unit = interval_space()
    square = MetricSpace("unit_square", Box((0.0, 0.0), (1.0, 1.0)), euclidean)
    labels = MetricSpace("four_labels", FiniteSet(("a", "b", "c", "d")), discrete)
    rationals = MetricSpace("rationals_0_1", RationalInterval(), absolute, complete=False)

    entries = [
        CatalogEntry(
            family_map("constant_0.3", unit, "constant", [0.3], {"kannan", "banach", "generalized_b"}),
            0.3,
            "constant map; fixes its value",
        ),
        CatalogEntry(
            SelfMap("piecewise_kannan", unit, _quarter_fifth, frozenset({"kannan", "generalized_b"})),
            0.0,
            "x/4 below 1/2, x/5 from 1/2 on; discontinuous at 1/2, so Kannan without being continuous",
        ),
        CatalogEntry(
            family_map("half_scaling", unit, "affine", [0.5, 0.0], {"banach"}),
            0.0,
            "Banach contraction with q=1/2 that is not a Kannan map: ratio 2 at (1, 0)",
        ),
        CatalogEntry(
            family_map("identity", unit, "affine", [1.0, 0.0], {"neither"}),
            None,
            "every point is fixed; satisfies no contractive condition",
        ),
        CatalogEntry(
            family_map("doubling_capped", unit, "piecewise_affine", [0.5, 2.0, 0.0, 0.0, 1.0], {"neither"}),
            None,
            "min(2x, 1): expanding, fixed points 0 and 1",
        ),
        CatalogEntry(
            SelfMap("radial_kannan_2d", square, _radial_quarter_fifth, frozenset({"kannan", "generalized_b"})),
            (0.0, 0.0),
            "x/4 inside the disc of radius 1/2, x/5 outside; discontinuous on the circle",
        ),
        CatalogEntry(
            SelfMap("discrete_collapse", labels, lambda x: "a", frozenset({"kannan", "banach", "generalized_b"})),
            "a",
            "discrete metric, everything sent to 'a'",
        ),
        CatalogEntry(
            SelfMap("rational_kannan", rationals, _quarter_fifth, frozenset({"kannan", "generalized_b"})),
            None,
            "piecewise_kannan on the rationals of (0, 1]; the space is incomplete and the "
            "iterates approach 0, which is not a point of it, so there is no fixed point. "
            "Demonstration only",
        ),
    ]
    return {e.map.name: e for e in entries}


CATALOG: Mapping[str, CatalogEntry] = _build_catalog()


def catalog_names() -> list[str]:
    return list(CATALOG)


def catalog_get(name: str, extra: Mapping[str, CatalogEntry] | None = None) -> CatalogEntry:
    if extra and name in extra:
        return extra[name]
    try:
        return CATALOG[name]
    except KeyError:
        known = sorted([*CATALOG, *(extra or {})])
        raise UnknownMapError(f"unknown map {name!r}; known: {', '.join(known)}") from None


def fixed_point_residual(entry: CatalogEntry) -> float | None:
    if entry.known_fixed_point is None:
        return None
    p = entry.known_fixed_point
    return distance(entry.map.space, apply_map(entry.map, p), p)
