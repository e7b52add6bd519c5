from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fixpoint_lab.conditions import EpsilonGrid, PataParams, PsiFunction, embed_kannan_high_order
from fixpoint_lab.maps_gallery import catalog_get, family_map
from fixpoint_lab.metric_core import interval_space
from fixpoint_lab import solver
from fixpoint_lab.solver import BoundParams, bound_eval, iterate, picard, residual_bound, uniqueness_probe

# Independent loop: x -> x/4 (x < 1/2) else x/5 from 1.0 until |x - Tx| <= 1e-12
PIECEWISE_STEPS_FROM_ONE = 21


def _params(C=1.0, c1=1.0, alpha=2.0):
    return BoundParams(C, c1, PataParams(1.0, alpha, 1.0, PsiFunction.power(1.0)))


def test_constant_map_solves_immediately():
    m = catalog_get("constant_0.3").map
    r = iterate(m, 0.9)
    assert r.fixed_point == 0.3
    assert r.residual == 0.0
    # one step lands on 0.3, the second confirms d = 0
    assert r.steps == 2
    assert r.converged


def test_piecewise_converges_from_one(piecewise):
    r = iterate(piecewise, 1.0)
    assert r.converged
    assert r.residual < 1e-9
    assert abs(r.fixed_point) < 1e-9
    assert r.steps == PIECEWISE_STEPS_FROM_ONE


def test_identity_converges_at_once_and_probe_fails():
    m = catalog_get("identity").map
    r = iterate(m, 0.4)
    assert r.steps == 1 and r.fixed_point == 0.4
    probe = uniqueness_probe(m, [0.2, 0.8])
    assert not probe.passed
    assert probe.detail["limits"] == [0.2, 0.8]
    assert probe.max_slack_violation == pytest.approx(0.6 - 1e-11)


def test_uniqueness_probe_on_flagship(piecewise):
    probe = uniqueness_probe(piecewise, [0.0, 0.3, 0.7, 1.0])
    assert probe.passed
    assert not probe.detail["inconclusive"]


def test_uniqueness_probe_inconclusive_without_convergence():
    m = catalog_get("half_scaling").map
    probe = uniqueness_probe(m, [0.5, 1.0], max_steps=3)
    assert probe.detail["inconclusive"]
    assert not probe.passed


def test_stagnation_is_detected_on_cycles():
    flip = family_map("flip", interval_space(), "affine", [-1.0, 1.0], ["neither"])
    t = picard(flip, 0.25, 50, tol_fix=1e-12)
    assert t.stop_reason == "stagnated"


def test_fixed_horizon_runs_all_steps(piecewise):
    t = picard(piecewise, 1.0, 200)
    assert t.steps == 200
    assert t.stop_reason == "max_steps"


def test_monotonicity_fails_for_doubling():
    m = catalog_get("doubling_capped").map
    t = picard(m, 0.1, 10)
    r = solver.check_step_monotonicity(t)
    assert not r.passed
    # steps 0.1, 0.2, 0.4, ...: the worst excess over c1 is 0.4 - 0.1 at n = 2
    assert r.witness == (2,)
    assert r.max_slack_violation == pytest.approx(0.3)


def test_bound_eval_example():
    # k = 1/3 at eps = 1/2, so k^2 c1 + C eps^(alpha-1) psi(eps) = 1/9 + 1/4
    assert bound_eval(_params(), 2, 0.5) == pytest.approx(float(Fraction(13, 36)))
    with pytest.raises(ValueError):
        bound_eval(_params(), 2, 0.0)


@given(st.integers(0, 300), st.floats(1e-3, 1.0), st.floats(0.0, 5.0))
def test_bound_eval_nonincreasing_in_n(n, eps, c1):
    p = _params(C=2.0, c1=c1)
    assert bound_eval(p, n + 1, eps) <= bound_eval(p, n, eps) + 1e-15


def test_constants_and_trajectory_certificates(piecewise):
    pata = embed_kannan_high_order(2 / 3, 10.0)
    t = picard(piecewise, 0.0 + 1.0, 200)
    C_ap = solver.a_priori_constant(t, pata)
    C_post = solver.a_posteriori_constant(t, pata)
    assert C_ap == pytest.approx(pata.Lambda * (1 + 4 * 1.0 + 12 * t.c1))
    assert C_post <= C_ap
    grid = EpsilonGrid.uniform()
    for a_priori in (True, False):
        bp = solver.bound_params(t, pata, a_priori)
        assert solver.check_step_bound(t, bp, grid).passed
        assert solver.check_p_step_bound(t, bp, grid).passed
    assert solver.check_norm_bound(t).passed
    assert solver.check_step_monotonicity(t).passed


def test_constant_from_the_zero_point_reduces():
    m = catalog_get("piecewise_kannan").map
    pata = embed_kannan_high_order(2 / 3, 1.0)
    t = picard(m.on(m.space.with_zero(1.0)), 1.0, 20)
    assert t.norms[0] == 0.0
    assert solver.a_priori_constant(t, pata) == pytest.approx(pata.Lambda * (1 + 12 * t.c1))


def test_bound_params_requires_C_at_least_Lambda():
    with pytest.raises(ValueError):
        BoundParams(0.5, 1.0, PataParams(1.0, 1.0, 1.0, PsiFunction.power(1.0)))


def test_residual_bound_examples(piecewise):
    t = picard(piecewise, 1.0, 30)
    assert residual_bound(t, 0.0) < 1e-15
    # 0.9 is far from the fixed point; its true residual is 0.72
    bound = residual_bound(t, 0.9)
    assert bound >= 0.9 - piecewise(0.9)
    assert bound == pytest.approx(min(d + 2 * abs(x - 0.9) for d, x in zip(t.step_distances, t.iterates[1:])))


def test_incomplete_rational_space_has_no_fixed_point():
    entry = catalog_get("rational_kannan")
    m = entry.map
    assert not m.space.complete
    t = picard(m, Fraction(1), 40)
    assert all(x > 0 for x in t.iterates)
    assert float(t.iterates[-1]) < 1e-20
    assert not m.space.contains(Fraction(0))


def test_envelope_decays(piecewise):
    pata = embed_kannan_high_order(2 / 3, 10.0)
    t = picard(piecewise, 1.0, 200)
    env = solver.step_envelope(t, solver.bound_params(t, pata), EpsilonGrid.uniform())
    assert np.all(np.diff(env) <= 0)
    assert env[-1] < 1e-6
