"""Certification of Kannan, Pata and generalized Kannan-Pata inequalities.

Every check follows the same recipe: evaluate per-point quantities once
(image, displacement ``d(x, Tx)``, norms), form per-pair quantities, broadcast
against the epsilon grid, and reduce to the largest slack.  Slack is always
``left side - right side``, so a certificate passes when the largest slack is
at most ``tol``.

Checked inequalities, for every sampled pair and every grid epsilon:

* Kannan:       d(Tx,Ty) <= lam/2 * (d(x,Tx) + d(y,Ty))
* Pata:         d(Tx,Ty) <= (1-e) d(x,y) + L e^a psi(e) (1 + |x| + |y|)^b
* generalized:  d(Tx,Ty) <= (1-e)/2 (d(x,Tx) + d(y,Ty))
                            + L e^a psi(e) (1 + |x| + |Tx| + |y| + |Ty|)^b

where ``|x|`` is the distance to the zero point of the space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .maps_gallery import SelfMap, apply_map
from .metric_core import SampleSet, distance, norm
from .report import CertificateReport

TOL_CERT = 1e-10
DEFAULT_GRID_SIZE = 101


# ---------------------------------------------------------------------------
# Parameters


@dataclass(frozen=True)
class KannanParams:
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"Kannan constant must lie in [0, 1), got {self.lam}")


@dataclass(frozen=True)
class PsiFunction:
    """Weight of the perturbation term: ``power`` (e**gamma) or ``tabulated``.

    A tabulated psi is given by knots ``xs`` (strictly increasing, from 0 to 1)
    and values ``ys``, and is linearly interpolated between them.
    """

    family: str
    gamma: float = 1.0
    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()

    def __post_init__(self):
        problems = psi_problems(self)
        if problems:
            raise ValueError("invalid psi: " + "; ".join(problems))

    @classmethod
    def power(cls, gamma: float) -> PsiFunction:
        return cls("power", gamma=float(gamma))

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> PsiFunction:
        return cls("tabulated", xs=tuple(map(float, xs)), ys=tuple(map(float, ys)))

    def __call__(self, eps):
        e = np.asarray(eps, dtype=float)
        if self.family == "power":
            out = e ** self.gamma
        else:
            out = np.interp(e, self.xs, self.ys)
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        if self.family == "power":
            return {"family": "power", "gamma": self.gamma}
        return {"family": "tabulated", "xs": list(self.xs), "ys": list(self.ys)}


def psi_problems(psi: PsiFunction) -> list[str]:
    """Reasons ``psi`` fails the standing assumptions; empty when it is fine.

    Increasing is read as nondecreasing.  Both families are continuous on
    [0, 1] (powers with a positive exponent, piecewise-linear tables), so
    psi(0) = 0 already gives psi(e) -> 0 as e -> 0+.
    """
    if psi.family == "power":
        if not (math.isfinite(psi.gamma) and psi.gamma > 0):
            return [f"power exponent must be positive, got {psi.gamma}"]
    elif psi.family == "tabulated":
        xs, ys = np.asarray(psi.xs), np.asarray(psi.ys)
        if len(xs) < 2 or len(xs) != len(ys):
            return ["tabulated psi needs at least two knots and matching values"]
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
            return ["knots must increase strictly from 0 to 1"]
        if not np.all(np.isfinite(ys)) or np.any(ys < 0):
            return ["values must be finite and nonnegative"]
    else:
        return [f"unknown psi family {psi.family!r}"]

    problems = []
    grid = np.linspace(0.0, 1.0, 1000)
    vals = psi(grid)
    if psi(0.0) != 0.0:
        problems.append("psi(0) must be 0")
    if np.any(np.diff(vals) < 0):
        problems.append("psi must be nondecreasing")
    return problems


@dataclass(frozen=True)
class PataParams:
    Lambda: float
    alpha: float
    beta: float
    psi: PsiFunction

    def __post_init__(self):
        if not (self.Lambda >= 0 and math.isfinite(self.Lambda)):
            raise ValueError(f"Lambda must be finite and >= 0, got {self.Lambda}")
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    def perturbation(self, eps: np.ndarray) -> np.ndarray:
        """``Lambda * eps**alpha * psi(eps)``."""
        eps = np.asarray(eps, dtype=float)
        return self.Lambda * eps ** self.alpha * self.psi(eps)

    def to_json(self) -> dict:
        return {"Lambda": self.Lambda, "alpha": self.alpha, "beta": self.beta, "psi": self.psi.to_json()}


ZERO_PERTURBATION = PataParams(0.0, 1.0, 0.0, PsiFunction.power(1.0))


@dataclass(frozen=True)
class EpsilonGrid:
    """Nondecreasing epsilon values in [0, 1].

    The default grid spans the whole interval; partial grids such as ``{0}``
    are allowed for targeted checks.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and (np.any(v < 0) or np.any(v > 1) or np.any(np.diff(v) < 0)):
            raise ValueError("epsilon values must be nondecreasing and lie in [0, 1]")

    @classmethod
    def uniform(cls, n: int = DEFAULT_GRID_SIZE) -> EpsilonGrid:
        if n < 2:
            raise ValueError("a uniform grid needs at least the endpoints 0 and 1")
        return cls(tuple(float(v) for v in np.linspace(0.0, 1.0, n)))

    @property
    def spans_unit_interval(self) -> bool:
        return bool(self.values) and self.values[0] == 0.0 and self.values[-1] == 1.0

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def positive(self) -> np.ndarray:
        a = self.array()
        return a[a > 0]

    def __len__(self) -> int:
        return len(self.values)


# ---------------------------------------------------------------------------
# Per-pair quantities


@dataclass
class _PairTerms:
    samples: SampleSet
    d_images: np.ndarray
    d_points: np.ndarray
    disp_x: np.ndarray
    disp_y: np.ndarray
    norm_x: np.ndarray
    norm_y: np.ndarray
    norm_tx: np.ndarray
    norm_ty: np.ndarray

    def pair(self, k: int):
        i, j = self.samples.pair_index[k]
        return self.samples.points[i], self.samples.points[j]


def _pair_terms(m: SelfMap, samples: SampleSet) -> _PairTerms:
    if len(samples) == 0:
        raise ValueError("empty sample set")
    space = m.space
    pts = samples.points
    images = [apply_map(m, p) for p in pts]
    disp = np.array([distance(space, p, t) for p, t in zip(pts, images)])
    nrm = np.array([norm(space, p) for p in pts])
    nrm_t = np.array([norm(space, t) for t in images])
    idx = np.array(samples.pair_index, dtype=np.intp)
    i, j = idx[:, 0], idx[:, 1]
    d_img = np.array([distance(space, images[a], images[b]) for a, b in samples.pair_index])
    d_pts = np.array([distance(space, pts[a], pts[b]) for a, b in samples.pair_index])
    return _PairTerms(samples, d_img, d_pts, disp[i], disp[j], nrm[i], nrm[j], nrm_t[i], nrm_t[j])


def _reduce(condition_id: str, slack: np.ndarray, terms: _PairTerms,
            eps: np.ndarray | None, tol: float, detail: dict | None = None) -> CertificateReport:
    # np.argmax returns the first maximum in row-major (pair, epsilon) order
    flat = int(np.argmax(slack))
    worst = float(slack.flat[flat])
    if eps is None:
        witness = terms.pair(flat)
    else:
        k, e = divmod(flat, slack.shape[1])
        witness = (*terms.pair(k), float(eps[e]))
    return CertificateReport(condition_id, worst <= tol, worst, witness, int(slack.size), detail or {})


def _grid_array(grid: EpsilonGrid) -> np.ndarray:
    eps = grid.array()
    if eps.size == 0:
        raise ValueError("empty epsilon grid")
    return eps


# ---------------------------------------------------------------------------
# Checks


def kannan_slack(terms: _PairTerms, lam: float) -> np.ndarray:
    return terms.d_images - (lam / 2) * (terms.disp_x + terms.disp_y)


def check_kannan(m: SelfMap, params: KannanParams | float, samples: SampleSet,
                 tol: float = TOL_CERT) -> CertificateReport:
    """Kannan's inequality with constant ``lam`` on every sampled pair.

    ``params`` may also be a bare float so that the boundary value 1, which
    is not a Kannan constant but is what the generalized condition reduces to
    at epsilon 0, can be checked.
    """
    lam = params.lam if isinstance(params, KannanParams) else float(params)
    terms = _pair_terms(m, samples)
    return _reduce("kannan", kannan_slack(terms, lam), terms, None, tol, {"lambda": lam})


def fit_lambda(m: SelfMap, samples: SampleSet) -> float | None:
    """Smallest Kannan constant consistent with the samples, or None.

    This is the supremum over pairs of ``2 d(Tx,Ty) / (d(x,Tx) + d(y,Ty))``.
    Pairs of two fixed points (0/0) impose nothing and are skipped.  None
    means the samples rule out every constant below 1: either a pair with a
    zero denominator has positive numerator, or the supremum reaches 1.
    """
    terms = _pair_terms(m, samples)
    num = 2 * terms.d_images
    den = terms.disp_x + terms.disp_y
    zero = den == 0
    if np.any(zero & (num > 0)):
        return None
    if np.all(zero):
        return 0.0
    lam = float(np.max(num[~zero] / den[~zero]))
    return lam if lam < 1 else None


def fit_contraction(m: SelfMap, samples: SampleSet) -> float:
    """Supremum of ``d(Tx,Ty) / d(x,y)`` over sampled pairs with x != y."""
    terms = _pair_terms(m, samples)
    ok = terms.d_points > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(terms.d_images[ok] / terms.d_points[ok]))


def check_pata(m: SelfMap, params: PataParams, samples: SampleSet,
               grid: EpsilonGrid | None = None, tol: float = TOL_CERT) -> CertificateReport:
    if params.beta > params.alpha:
        raise ValueError(f"the Pata condition needs beta <= alpha, got beta={params.beta} alpha={params.alpha}")
    eps = _grid_array(grid or EpsilonGrid.uniform())
    t = _pair_terms(m, samples)
    base = (1 + t.norm_x + t.norm_y) ** params.beta
    slack = (t.d_images[:, None]
             - (1 - eps)[None, :] * t.d_points[:, None]
             - params.perturbation(eps)[None, :] * base[:, None])
    return _reduce("pata", slack, t, eps, tol, {"params": params.to_json()})


def generalized_slack(terms: _PairTerms, params: PataParams, eps: np.ndarray) -> np.ndarray:
    s = terms.disp_x + terms.disp_y
    base = (1 + terms.norm_x + terms.norm_tx + terms.norm_y + terms.norm_ty) ** params.beta
    return (terms.d_images[:, None]
            - ((1 - eps) / 2)[None, :] * s[:, None]
            - params.perturbation(eps)[None, :] * base[:, None])


def check_generalized(m: SelfMap, params: PataParams, samples: SampleSet,
                      grid: EpsilonGrid | None = None, tol: float = TOL_CERT) -> CertificateReport:
    eps = _grid_array(grid or EpsilonGrid.uniform())
    terms = _pair_terms(m, samples)
    return _reduce("generalized", generalized_slack(terms, params, eps), terms, eps, tol,
                   {"params": params.to_json()})


# ---------------------------------------------------------------------------
# From Kannan constants to Pata-type parameters


def _check_open_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def embed_kannan_to_pata(lam: float) -> PataParams:
    """Parameters under which a Kannan map with constant ``lam`` satisfies the
    generalized condition: ``Lambda = lam/2``, ``alpha = beta = 1`` and
    ``psi(e) = e**(1/lam - 1)``."""
    _check_open_lambda(lam)
    return PataParams(lam / 2, 1.0, 1.0, PsiFunction.power(1 / lam - 1))


def embed_kannan_high_order(lam: float, alpha: float) -> PataParams:
    """Like :func:`embed_kannan_to_pata` but with a free exponent ``alpha``.

    With ``psi(e) = e**gamma``, ``gamma = 1/lam - 1`` and ``beta = 1``, the
    generalized condition holds for a Kannan map as soon as

        Lambda >= sup_{e in (1-lam, 1]} (e - (1 - lam)) / (2 e**m),  m = alpha + gamma,

    because the displacement sum never exceeds the bracketed norm sum.  The
    supremum sits at ``e = 1`` (value ``lam/2``) when ``m <= 1/lam`` and at
    ``e* = m (1-lam) / (m-1)`` otherwise.  ``alpha = 1`` gives back
    :func:`embed_kannan_to_pata`.  Larger ``alpha`` makes the perturbation
    vanish faster at small epsilon at the price of a larger ``Lambda``.
    """
    _check_open_lambda(lam)
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    gamma = 1 / lam - 1
    m = alpha + gamma
    if m * lam <= 1:
        scale = lam / 2
    else:
        e_star = m * (1 - lam) / (m - 1)
        scale = (e_star - (1 - lam)) / (2 * e_star ** m)
    return PataParams(scale, float(alpha), 1.0, PsiFunction.power(gamma))


def kannan_certificate_params(lam: float, alpha: float = 1.0) -> PataParams:
    """Generalized-condition parameters for a fitted Kannan constant.

    ``lam == 0`` means the map is constant on the samples, for which no
    perturbation is needed at all.
    """
    if lam == 0:
        return ZERO_PERTURBATION
    return embed_kannan_high_order(lam, alpha)


def bernoulli_check(lam: float, grid: EpsilonGrid | None = None,
                    tol: float = TOL_CERT) -> CertificateReport:
    """``1 + (e - 1)/lam <= e**(1/lam)`` on the grid (Bernoulli, since 1/lam > 1)."""
    _check_open_lambda(lam)
    eps = _grid_array(grid or EpsilonGrid.uniform())
    slack = (1 + (eps - 1) / lam) - eps ** (1 / lam)
    k = int(np.argmax(slack))
    worst = float(slack[k])
    return CertificateReport("bernoulli", worst <= tol, worst, (lam, float(eps[k])), int(eps.size))
