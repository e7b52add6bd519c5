"""Picard iteration and the quantitative bounds along its trajectory.

Indexing: ``iterates[n]`` is x_n with x_0 the start, and
``step_distances[n] = d(x_n, x_{n+1})``.  The step bound is therefore

    step_distances[n] <= k**n * c1 + C * e**(alpha-1) * psi(e),  k = (1-e)/(1+e),

with ``c1 = d(x_0, x_1)``.  The bounds hold for maps satisfying the
generalized condition with the parameters in ``BoundParams.pata`` and any
``C`` that dominates ``Lambda * (1 + 4 |x_j|)**beta`` along the trajectory.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .conditions import TOL_CERT, EpsilonGrid, PataParams
from .maps_gallery import SelfMap, apply_map
from .metric_core import DomainError, MetricSpace, Point, distance, norm
from .report import CertificateReport

TOL_FIX = 1e-12
MAX_STEPS = 100_000


@dataclass
class Trajectory:
    space: MetricSpace = field(repr=False)
    iterates: list[Point]
    norms: list[float]
    step_distances: list[float]
    stop_reason: str

    @property
    def c1(self) -> float:
        return self.step_distances[0] if self.step_distances else 0.0

    @property
    def steps(self) -> int:
        return len(self.step_distances)

    def offsets(self) -> list[float]:
        """Distances ``d(x_n, x_0)`` from the start."""
        x0 = self.iterates[0]
        return [distance(self.space, x, x0) for x in self.iterates]


@dataclass
class SolveResult:
    fixed_point: Point
    residual: float
    steps: int
    trajectory: Trajectory

    @property
    def converged(self) -> bool:
        return self.trajectory.stop_reason == "converged"

    def to_json(self) -> dict:
        t = self.trajectory
        return {
            "start": t.iterates[0],
            "fixed_point": self.fixed_point,
            "residual": self.residual,
            "steps": self.steps,
            "stop_reason": t.stop_reason,
        }


@dataclass(frozen=True)
class BoundParams:
    C: float
    c1: float
    pata: PataParams

    def __post_init__(self):
        if self.C < self.pata.Lambda or self.c1 < 0:
            raise ValueError("need C >= Lambda and c1 >= 0")


def picard(m: SelfMap, start: Point, max_steps: int, tol_fix: float | None = None) -> Trajectory:
    """Iterate ``m`` from ``start``.

    Stops after ``max_steps`` steps, when a step is no longer than
    ``tol_fix`` (``converged``), or when an iterate repeats an earlier one
    while still moving (``stagnated``: the orbit is a cycle).  With
    ``tol_fix=None`` exactly ``max_steps`` steps are taken.
    """
    space = m.space
    if not space.contains(start):
        raise DomainError(f"start {start!r} is not in the domain of {m.name}")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    xs, norms, ds = [start], [norm(space, start)], []
    seen = {start}
    reason = "max_steps"
    x = start
    for _ in range(max_steps):
        y = apply_map(m, x)
        d = distance(space, x, y)
        xs.append(y)
        norms.append(norm(space, y))
        ds.append(d)
        x = y
        if tol_fix is None:
            continue
        if d <= tol_fix:
            reason = "converged"
            break
        if y in seen:
            reason = "stagnated"
            break
        seen.add(y)
    return Trajectory(space, xs, norms, ds, reason)


def iterate(m: SelfMap, start: Point, tol_fix: float = TOL_FIX, max_steps: int = MAX_STEPS) -> SolveResult:
    """Run Picard iteration until ``d(x_n, x_{n+1}) <= tol_fix``.

    On convergence the reported fixed point is ``x_{n+1}``; otherwise it is
    the last iterate.  ``residual`` is ``d(T x*, x*)``.
    """
    if not tol_fix > 0:
        raise ValueError("tol_fix must be positive")
    traj = picard(m, start, max_steps, tol_fix)
    x = traj.iterates[-1]
    residual = distance(m.space, apply_map(m, x), x)
    return SolveResult(x, residual, traj.steps, traj)


# ---------------------------------------------------------------------------
# Proof constants


def a_priori_constant(traj: Trajectory, pata: PataParams) -> float:
    """``Lambda * (1 + 4 |x_0| + 12 c1)**beta``.

    Every iterate stays within ``3 c1`` of the start, so its norm is at most
    ``|x_0| + 3 c1``; four such norms bound the bracket in the generalized
    condition.  When the start is the zero point this is
    ``Lambda * (1 + 12 c1)**beta``.
    """
    return pata.Lambda * (1 + 4 * traj.norms[0] + 12 * traj.c1) ** pata.beta


def a_posteriori_constant(traj: Trajectory, pata: PataParams) -> float:
    """``Lambda * (1 + 4 max_n c_n)**beta`` from the realized norms."""
    return pata.Lambda * (1 + 4 * max(traj.norms)) ** pata.beta


def bound_params(traj: Trajectory, pata: PataParams, a_priori: bool = True) -> BoundParams:
    C = a_priori_constant(traj, pata) if a_priori else a_posteriori_constant(traj, pata)
    return BoundParams(C, traj.c1, pata)


def bound_eval(params: BoundParams, n: int, eps: float) -> float:
    if not 0 < eps <= 1:
        raise ValueError(f"the step bound needs 0 < eps <= 1, got {eps}")
    if n < 0:
        raise ValueError("n must be >= 0")
    k = (1 - eps) / (1 + eps)
    p = params.pata
    return k ** n * params.c1 + params.C * eps ** (p.alpha - 1) * float(p.psi(eps))


def _bound_table(params: BoundParams, n_max: int, eps: np.ndarray) -> np.ndarray:
    """Bound for every ``n < n_max`` (rows) and positive ``eps`` (columns)."""
    p = params.pata
    k = (1 - eps) / (1 + eps)
    n = np.arange(n_max)[:, None]
    tail = params.C * eps ** (p.alpha - 1) * p.psi(eps)
    return k[None, :] ** n * params.c1 + tail[None, :]


# ---------------------------------------------------------------------------
# Trajectory certificates


def _need_steps(traj: Trajectory, k: int) -> None:
    if traj.steps < k:
        raise ValueError(f"trajectory has {traj.steps} steps, need at least {k}")


def check_step_monotonicity(traj: Trajectory, tol: float = TOL_CERT) -> CertificateReport:
    """Step distances never grow and never exceed the first one.

    The witness is ``(n,)`` for the worst index: either ``d_n - d_{n-1}`` or
    ``d_n - c1`` is largest there.
    """
    _need_steps(traj, 2)
    d = np.asarray(traj.step_distances)
    growth = np.concatenate([[-math.inf], d[1:] - d[:-1]])
    slack = np.maximum(growth, d - traj.c1)
    n = int(np.argmax(slack))
    worst = float(slack[n])
    return CertificateReport("step_monotonicity", worst <= tol, worst, (n,), int(d.size))


def check_norm_bound(traj: Trajectory, tol: float = TOL_CERT) -> CertificateReport:
    """Every iterate stays within ``3 c1`` of the start.

    The start plays the role of the zero point here, as in the standard
    argument; when the trajectory starts at the zero point these distances
    are exactly the norms ``c_n``.
    """
    _need_steps(traj, 2)
    off = np.asarray(traj.offsets()[1:])
    slack = off - 3 * traj.c1
    n = int(np.argmax(slack))
    worst = float(slack[n])
    return CertificateReport("norm_bound", worst <= tol, worst, (n + 1,), int(off.size),
                             {"c1": traj.c1, "max_offset": float(off.max())})


def step_envelope(traj: Trajectory, params: BoundParams, grid: EpsilonGrid) -> list[float]:
    """Per-step minimum of the step bound over the positive grid values."""
    eps = grid.positive()
    if eps.size == 0:
        raise ValueError("grid has no positive epsilon")
    return [float(v) for v in _bound_table(params, traj.steps, eps).min(axis=1)]


def check_step_bound(traj: Trajectory, params: BoundParams, grid: EpsilonGrid | None = None,
                     tol: float = TOL_CERT, n_max: int | None = None) -> CertificateReport:
    """``d_n <= k**n c1 + C e**(alpha-1) psi(e)`` for every step and positive grid e.

    ``detail`` carries the envelope (minimum bound over epsilon per step),
    its last value, and whether it is nonincreasing.
    """
    grid = grid or EpsilonGrid.uniform()
    eps = grid.positive()
    if eps.size == 0:
        raise ValueError("grid has no positive epsilon")
    _need_steps(traj, 1)
    steps = traj.steps if n_max is None else min(traj.steps, n_max)
    d = np.asarray(traj.step_distances[:steps])
    table = _bound_table(params, steps, eps)
    slack = d[:, None] - table
    flat = int(np.argmax(slack))
    n, e = divmod(flat, eps.size)
    worst = float(slack.flat[flat])
    envelope = table.min(axis=1)
    detail = {
        "C": params.C,
        "c1": params.c1,
        "envelope_final": float(envelope[-1]),
        "envelope_nonincreasing": bool(np.all(np.diff(envelope) <= 0)),
        "envelope": [float(v) for v in envelope],
    }
    return CertificateReport("step_bound", worst <= tol, worst, (n, float(eps[e])), int(slack.size), detail)


def check_p_step_bound(traj: Trajectory, params: BoundParams, grid: EpsilonGrid | None = None,
                       p_list: Sequence[int] = (1, 2, 5, 10), n_list: Sequence[int] = (2, 5, 10, 20),
                       tol: float = TOL_CERT) -> CertificateReport:
    """``d(x_n, x_{n+p}) <= (1-e)/2 (d_{n-1} + d_{n+p-1}) + C e**alpha psi(e)``.

    Here ``d_j = d(x_j, x_{j+1})``; the inequality is the generalized
    condition at the pair ``(x_{n-1}, x_{n+p-1})``.
    """
    grid = grid or EpsilonGrid.uniform()
    eps = grid.array()
    if eps.size == 0:
        raise ValueError("empty epsilon grid")
    combos = list(itertools.product(n_list, p_list))
    for n, p in combos:
        if n < 1 or p < 1 or n + p >= len(traj.iterates):
            raise ValueError(f"(n={n}, p={p}) is out of range for a trajectory of {traj.steps} steps")
    ds = traj.step_distances
    lhs = np.array([distance(traj.space, traj.iterates[n], traj.iterates[n + p]) for n, p in combos])
    around = np.array([ds[n - 1] + ds[n + p - 1] for n, p in combos])
    tail = params.C * params.pata.perturbation(eps)
    slack = lhs[:, None] - ((1 - eps) / 2)[None, :] * around[:, None] - tail[None, :]
    flat = int(np.argmax(slack))
    r, e = divmod(flat, eps.size)
    worst = float(slack.flat[flat])
    n, p = combos[r]
    return CertificateReport("p_step_bound", worst <= tol, worst, (n, p, float(eps[e])), int(slack.size))


def residual_bound(traj: Trajectory, candidate: Point) -> float:
    """Upper bound on ``d(T c, c)`` from the trajectory alone.

    ``min_n d(x_n, x_{n+1}) + 2 d(x_{n+1}, c)``; valid for maps satisfying
    the generalized condition at epsilon 0.
    """
    space = traj.space
    xs, ds = traj.iterates, traj.step_distances
    if not ds:
        raise ValueError("trajectory has no steps")
    return min(d + 2 * distance(space, xs[n + 1], candidate) for n, d in enumerate(ds))


def uniqueness_probe(m: SelfMap, starts: Iterable[Point], tol_fix: float = TOL_FIX,
                     max_steps: int = MAX_STEPS) -> CertificateReport:
    """Iterate from several starts and compare the limits.

    Passes when every run converges and all limits lie within
    ``10 * tol_fix`` of each other.  A run that does not converge makes the
    report inconclusive (``detail['inconclusive']``) rather than failed.
    """
    starts = list(starts)
    if len(starts) < 2:
        raise ValueError("need at least two starts")
    results = [iterate(m, s, tol_fix, max_steps) for s in starts]
    limits = [r.fixed_point for r in results]
    worst, witness = -math.inf, None
    for a, b in itertools.combinations(range(len(limits)), 2):
        d = distance(m.space, limits[a], limits[b])
        if d > worst:
            worst, witness = d, (starts[a], starts[b])
    slack = worst - 10 * tol_fix
    inconclusive = not all(r.converged for r in results)
    detail = {
        "inconclusive": inconclusive,
        "stop_reasons": [r.trajectory.stop_reason for r in results],
        "limits": limits,
        "max_residual": max(r.residual for r in results),
    }
    passed = not inconclusive and slack <= 0
    return CertificateReport("uniqueness", passed, slack, witness, len(starts), detail)
