from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixpoint_lab import conditions as cond
from fixpoint_lab.conditions import (
    EpsilonGrid,
    KannanParams,
    PataParams,
    PsiFunction,
    bernoulli_check,
    check_generalized,
    check_kannan,
    check_pata,
    embed_kannan_high_order,
    embed_kannan_to_pata,
    fit_contraction,
    fit_lambda,
    kannan_certificate_params,
)
from fixpoint_lab.maps_gallery import catalog_get, catalog_names
from fixpoint_lab.metric_core import sample_set

# Exhaustive sup of 2 d(Tx,Ty) / (d(x,Tx) + d(y,Ty)) for x -> x/4 (x < 1/2),
# x/5 (x >= 1/2) over the 1e-3 grid of [0, 1], computed by the oracle below.
LAMBDA_STAR_PIECEWISE = 0.6666666666666667


def _grid_oracle_lambda(f, n=1001):
    x = np.linspace(0.0, 1.0, n)
    tx = f(x)
    num = 2 * np.abs(tx[:, None] - tx[None, :])
    den = np.abs(x - tx)[:, None] + np.abs(x - tx)[None, :]
    ok = den > 0
    return float(np.max(num[ok] / den[ok]))


def test_grid_oracle_for_flagship_constant():
    lam = _grid_oracle_lambda(lambda x: np.where(x < 0.5, x / 4, x / 5))
    assert lam == pytest.approx(LAMBDA_STAR_PIECEWISE, abs=1e-12)


def test_fitted_lambda_matches_oracle(piecewise, piecewise_samples):
    lam = fit_lambda(piecewise, piecewise_samples)
    assert lam <= LAMBDA_STAR_PIECEWISE + 1e-12
    assert lam == pytest.approx(LAMBDA_STAR_PIECEWISE, abs=1e-3)
    # not a Banach contraction: the jump at 1/2 has ratio above 1
    assert fit_contraction(piecewise, piecewise_samples) > 1


def test_fit_lambda_special_cases():
    const = catalog_get("constant_0.3").map
    assert fit_lambda(const, sample_set(const.space, 200, 1000, seed=0)) == 0.0
    for name in ("half_scaling", "identity", "doubling_capped"):
        m = catalog_get(name).map
        assert fit_lambda(m, sample_set(m.space, 200, 2000, seed=0)) is None


def test_half_scaling_fails_kannan_at_the_corner():
    m = catalog_get("half_scaling").map
    r = check_kannan(m, 0.999, sample_set(m.space, 100, 1000, seed=0))
    assert not r.passed
    assert set(r.witness) == {0.0, 1.0}
    # d(T1, T0) = 1/2 against 0.999/2 * (1/2 + 0)
    assert r.max_slack_violation == pytest.approx(0.5 - 0.999 / 4)


def test_check_kannan_passes_on_flagship(piecewise, piecewise_samples):
    assert check_kannan(piecewise, KannanParams(0.67), piecewise_samples).passed
    assert not check_kannan(piecewise, KannanParams(0.6), piecewise_samples).passed
    with pytest.raises(ValueError):
        KannanParams(1.0)


def test_pata_identity_fails_at_eps_one():
    m = catalog_get("identity").map
    params = PataParams(0.1, 1.0, 1.0, PsiFunction.power(1.0))
    r = check_pata(m, params, sample_set(m.space, 100, 1000, seed=0))
    assert not r.passed
    x, y, eps = r.witness
    assert eps == 1.0


def test_pata_rejects_beta_above_alpha(piecewise, piecewise_samples):
    with pytest.raises(ValueError):
        check_pata(piecewise, PataParams(0.1, 1.0, 2.0, PsiFunction.power(1.0)), piecewise_samples)


def test_half_scaling_is_banach_pata():
    m = catalog_get("half_scaling").map
    params = PataParams(0.0, 1.0, 1.0, PsiFunction.power(1.0))
    assert check_pata(m, params, sample_set(m.space, 100, 1000, seed=0), EpsilonGrid((0.0, 0.25, 0.5))).passed


@pytest.mark.parametrize(
    "lam, Lambda, gamma",
    [(0.5, 0.25, 1.0), (0.9, 0.45, 1 / 0.9 - 1)],
)
def test_embedding_examples(lam, Lambda, gamma):
    p = embed_kannan_to_pata(lam)
    assert p.Lambda == pytest.approx(Lambda)
    assert (p.alpha, p.beta) == (1.0, 1.0)
    assert p.psi.gamma == pytest.approx(gamma)


def test_embedding_rejects_boundary_lambdas():
    for lam in (0.0, 1.0):
        with pytest.raises(ValueError):
            embed_kannan_to_pata(lam)
    assert kannan_certificate_params(0.0) is cond.ZERO_PERTURBATION


@pytest.mark.parametrize("alpha, frozen", [(1.0, 1 / 3), (8.0, 87.15213318214887), (10.0, 627.3480236790799)])
def test_high_order_lambda_matches_brute_force_sup(alpha, frozen):
    lam = 2 / 3
    gamma = 1 / lam - 1
    e = np.linspace(1e-6, 1.0, 2_000_001)
    brute = float(np.max(np.maximum(e - (1 - lam), 0) / (2 * e ** (alpha + gamma))))
    p = embed_kannan_high_order(lam, alpha)
    assert p.Lambda == pytest.approx(frozen, rel=1e-12)
    assert brute <= p.Lambda * (1 + 1e-12)
    assert brute == pytest.approx(p.Lambda, rel=1e-8)


def test_bernoulli_example():
    # at lam = 1/2, eps = 1/4: left side 1 + (1/4 - 1) * 2 = -1/2, right side 1/16
    r = bernoulli_check(0.5, EpsilonGrid((0.25,)))
    assert r.passed
    assert r.max_slack_violation == pytest.approx(-0.5 - 0.0625)
    assert r.witness == (0.5, 0.25)


def test_psi_invariants():
    with pytest.raises(ValueError):
        PsiFunction.tabulated([0.0, 0.5, 1.0], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        PsiFunction.tabulated([0.0, 0.5, 1.0], [0.0, 0.3, 0.2])
    with pytest.raises(ValueError):
        PsiFunction.power(0.0)
    psi = PsiFunction.tabulated([0.0, 0.5, 1.0], [0.0, 0.5, 2.0])
    assert psi(0.75) == pytest.approx(1.25)


@pytest.mark.parametrize("name", catalog_names())
def test_eps_zero_reduces_to_kannan_with_lambda_one(name):
    m = catalog_get(name).map
    s = sample_set(m.space, 300, 3000, seed=5)
    params = PataParams(0.7, 2.0, 1.0, PsiFunction.power(0.5))
    g = check_generalized(m, params, s, EpsilonGrid((0.0,)))
    k = check_kannan(m, 1.0, s)
    assert g.passed == k.passed
    assert g.witness[:2] == k.witness
    assert g.max_slack_violation == k.max_slack_violation


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 0.04))
def test_kannan_check_is_monotone_in_lambda(piecewise_samples, lam, bump):
    m = catalog_get("piecewise_kannan").map
    lo = check_kannan(m, lam, piecewise_samples)
    hi = check_kannan(m, lam + bump, piecewise_samples)
    assert hi.max_slack_violation <= lo.max_slack_violation + 1e-15
    if lo.passed:
        assert hi.passed


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1.0, 12.0))
def test_embedding_is_sound_for_scaled_affine_maps(lam, alpha):
    # the constant map T x = c is Kannan with every lam; a tilted map x -> lam/(2+lam) x
    # has Kannan constant at most lam on [0, 1]
    from fixpoint_lab.maps_gallery import family_map
    from fixpoint_lab.metric_core import interval_space

    m = family_map("t", interval_space(), "affine", [lam / (2 + lam), 0.0], ["kannan"])
    s = sample_set(m.space, 200, 2000, seed=1)
    fitted = fit_lambda(m, s)
    assert fitted is not None and fitted <= lam + 1e-12
    assert check_generalized(m, embed_kannan_high_order(fitted, alpha), s).passed
