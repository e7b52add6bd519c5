"""Run configuration: flat ``key = value`` text with includes.

Example::

    # check the flagship map
    map = piecewise_kannan
    conditions = kannan, generalized
    lambda = 0.7
    pata = embed
    seed = 7

Lines starting with ``#`` are comments.  ``include = other.cfg`` splices in
another file (path relative to the including file); later keys override
earlier ones.  Catalog extensions use dotted keys::

    map.tilted.family = affine
    map.tilted.params = 0.3, 0.1
    map.tilted.space = interval:0,1
    map.tilted.status = kannan, banach, generalized_b
    map.tilted.fixed_point = 0.14285714285714285
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .conditions import DEFAULT_GRID_SIZE, TOL_CERT, PataParams, PsiFunction
from .maps_gallery import CatalogEntry, UnknownMapError, catalog_get, catalog_names, family_map
from .metric_core import (
    METRICS,
    Box,
    FiniteSet,
    Interval,
    MetricSpace,
    Point,
    RationalInterval,
)
from .solver import MAX_STEPS, TOL_FIX

SEED_ENV = "FIXPOINT_LAB_SEED"
DEFAULT_SEED = 12345


class ConfigError(ValueError):
    pass


def read_config(path: str | os.PathLike, _seen: frozenset = frozenset()) -> dict[str, str]:
    path = Path(path).resolve()
    if path in _seen:
        raise ConfigError(f"include cycle through {path}")
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key == "include":
            out.update(read_config(path.parent / value, _seen | {path}))
        else:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# Value parsing


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _number(value: str, key: str, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def parse_space(spec: str, name: str = "custom", metric: str | None = None) -> MetricSpace:
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    if kind == "interval":
        lo, hi = (_number(v, "space") for v in _list(rest))
        domain, default = Interval(lo, hi), "absolute"
    elif kind == "box":
        sides = [[_number(v, "space") for v in _list(side)] for side in rest.split(";")]
        if any(len(s) != 2 for s in sides):
            raise ConfigError("space: box sides are 'lo,hi' separated by ';'")
        domain = Box(tuple(s[0] for s in sides), tuple(s[1] for s in sides))
        default = "euclidean"
    elif kind == "discrete":
        domain, default = FiniteSet(tuple(_list(rest))), "discrete"
    elif kind == "rationals":
        domain, default = RationalInterval(), "absolute"
    else:
        raise ConfigError(f"space: unknown kind {kind!r} (interval, box, discrete, rationals)")
    metric = metric or default
    if metric not in METRICS:
        raise ConfigError(f"metric: unknown {metric!r}; known: {sorted(METRICS)}")
    return MetricSpace(name, domain, METRICS[metric], complete=kind != "rationals")


def parse_point(space: MetricSpace, text: str) -> Point:
    dom = space.domain
    try:
        if isinstance(dom, Interval):
            p = float(text)
        elif isinstance(dom, Box):
            p = tuple(float(v) for v in _list(text))
        elif isinstance(dom, RationalInterval):
            p = Fraction(text.strip())
        else:
            p = text.strip()
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as a point of {dom.describe()}") from None
    if not space.contains(p):
        raise ConfigError(f"{text!r} is not a point of {dom.describe()}")
    return p


def parse_psi(text: str) -> PsiFunction:
    """``power:GAMMA`` or ``tabulated:x0 y0; x1 y1; ...``."""
    family, _, rest = text.partition(":")
    try:
        if family.strip() == "power":
            return PsiFunction.power(float(rest))
        if family.strip() == "tabulated":
            knots = [k.split() for k in rest.split(";") if k.strip()]
            return PsiFunction.tabulated([float(k[0]) for k in knots], [float(k[1]) for k in knots])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"psi: {exc}") from None
    raise ConfigError(f"psi: expected 'power:G' or 'tabulated:x y; ...', got {text!r}")


def parse_extensions(kv: Mapping[str, str]) -> dict[str, CatalogEntry]:
    specs: dict[str, dict[str, str]] = {}
    for key, value in kv.items():
        if key.startswith("map."):
            try:
                _, name, attr = key.split(".", 2)
            except ValueError:
                raise ConfigError(f"{key}: expected map.<name>.<field>") from None
            specs.setdefault(name, {})[attr] = value
    known = {"family", "params", "space", "metric", "zero", "status", "fixed_point", "notes"}
    out = {}
    for name, f in specs.items():
        unknown = set(f) - known
        if unknown:
            raise ConfigError(f"map.{name}: unknown fields {sorted(unknown)}")
        for req in ("family", "params", "space"):
            if req not in f:
                raise ConfigError(f"map.{name}.{req} is required")
        space = parse_space(f["space"], f"{name}_space", f.get("metric"))
        if "zero" in f:
            space = space.with_zero(parse_point(space, f["zero"]))
        params = [_number(v, f"map.{name}.params") for v in _list(f["params"])]
        try:
            m = family_map(name, space, f["family"], params, _list(f.get("status", "")))
        except ValueError as exc:
            raise ConfigError(f"map.{name}: {exc}") from None
        fp = parse_point(space, f["fixed_point"]) if "fixed_point" in f else None
        out[name] = CatalogEntry(m, fp, f.get("notes", ""))
    return out


# ---------------------------------------------------------------------------
# RunConfig

CONDITIONS = ("metric", "kannan", "pata", "generalized", "bernoulli")

_KEYS = {
    "map", "catalog", "conditions", "lambda", "pata", "Lambda", "alpha", "beta", "psi",
    "grid", "samples", "points", "seed", "tol", "tol_fix", "max_steps", "starts", "start",
    "horizon", "order", "zero", "out", "csv",
}


@dataclass
class RunConfig:
    map: str | None = None
    catalog: list[str] | None = None
    conditions: list[str] = field(default_factory=list)
    lam: float | None = None
    pata: str | None = None
    Lambda: float | None = None
    alpha: float = 1.0
    beta: float = 1.0
    psi: str | None = None
    grid: int = DEFAULT_GRID_SIZE
    samples: int = 10_000
    points: int = 1000
    seed: int = DEFAULT_SEED
    tol: float = TOL_CERT
    tol_fix: float = TOL_FIX
    max_steps: int = MAX_STEPS
    starts: int = 10
    start: list[str] = field(default_factory=list)
    horizon: int = 200
    order: float = 10.0
    zero: str | None = None
    out: str | None = None
    csv: str | None = None
    extensions: dict[str, CatalogEntry] = field(default_factory=dict, repr=False)

    @classmethod
    def from_mapping(cls, kv: Mapping[str, str], overrides: Mapping[str, Any] | None = None,
                     env: Mapping[str, str] | None = None) -> RunConfig:
        """Build and validate a config.

        Seed precedence: explicit override, config file, the
        ``FIXPOINT_LAB_SEED`` environment variable, then a fixed default.
        """
        env = os.environ if env is None else env
        unknown = {k for k in kv if not k.startswith("map.")} - _KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(extensions=parse_extensions(kv))
        if "map" in kv:
            cfg.map = kv["map"]
        if "catalog" in kv:
            cfg.catalog = _list(kv["catalog"])
        if "conditions" in kv:
            cfg.conditions = _list(kv["conditions"])
        if "lambda" in kv:
            cfg.lam = _number(kv["lambda"], "lambda")
        for key in ("pata", "psi", "zero", "out", "csv"):
            if key in kv:
                setattr(cfg, key, kv[key])
        if "Lambda" in kv:
            cfg.Lambda = _number(kv["Lambda"], "Lambda")
        for key in ("alpha", "beta", "tol", "tol_fix", "order"):
            if key in kv:
                setattr(cfg, key, _number(kv[key], key))
        for key in ("grid", "samples", "points", "max_steps", "starts", "horizon"):
            if key in kv:
                setattr(cfg, key, _number(kv[key], key, int))
        if "start" in kv:
            cfg.start = [s.strip() for s in kv["start"].split("|")] if "|" in kv["start"] else _list(kv["start"])
        if "seed" in kv:
            cfg.seed = _number(kv["seed"], "seed", int)
        elif SEED_ENV in env:
            cfg.seed = _number(env[SEED_ENV], SEED_ENV, int)
        for key, value in (overrides or {}).items():
            if value is not None:
                setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.map is not None:
            self.entry()
        for name in self.catalog or []:
            try:
                catalog_get(name, self.extensions)
            except UnknownMapError as exc:
                raise ConfigError(exc.args[0]) from None
        bad = set(self.conditions) - set(CONDITIONS)
        if bad:
            raise ConfigError(f"unknown conditions {sorted(bad)}; known: {', '.join(CONDITIONS)}")
        if self.grid < 2 or self.samples < 1 or self.points < 0 or self.starts < 0 or self.horizon < 2:
            raise ConfigError("grid >= 2, samples >= 1, points >= 0, starts >= 0, horizon >= 2 required")
        if not (self.tol >= 0 and self.tol_fix > 0 and self.max_steps >= 1):
            raise ConfigError("tol >= 0, tol_fix > 0 and max_steps >= 1 required")
        if self.pata is not None and self.pata != "embed" and self.pata != "explicit" \
                and not self.pata.startswith("order:"):
            raise ConfigError("pata must be 'embed', 'order:ALPHA' or 'explicit'")

    def entry(self) -> CatalogEntry:
        """The selected catalog entry, with the zero point override applied."""
        if self.map is None:
            raise ConfigError("no map selected (set 'map' in the config or pass --map)")
        try:
            entry = catalog_get(self.map, self.extensions)
        except UnknownMapError as exc:
            raise ConfigError(exc.args[0]) from None
        if self.zero is not None:
            space = entry.map.space
            space = space.with_zero(parse_point(space, self.zero))
            entry = CatalogEntry(entry.map.on(space), entry.known_fixed_point, entry.notes)
        return entry

    def catalog_entries(self) -> list[CatalogEntry]:
        names = self.catalog if self.catalog is not None else [*catalog_names(), *self.extensions]
        return [catalog_get(n, self.extensions) for n in names]

    def explicit_pata(self) -> PataParams:
        if self.Lambda is None or self.psi is None:
            raise ConfigError("explicit Pata parameters need Lambda and psi (alpha, beta default to 1)")
        try:
            return PataParams(self.Lambda, self.alpha, self.beta, parse_psi(self.psi))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def echo(self) -> dict[str, Any]:
        """The resolved settings, in declaration order, for report headers."""
        skip = {"extensions", "out", "csv"}
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}
        d["lambda"] = d.pop("lam")
        d["extensions"] = sorted(self.extensions)
        return d
