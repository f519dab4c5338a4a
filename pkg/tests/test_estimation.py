"""EM estimator tests: moments, M-step optimality, convergence behavior."""

import numpy as np
import pytest

from icefactor.errors import InputError
from icefactor.estimation import (EMConfig, FitResult, MONOTONICITY_SLACK,
                                  e_step, fit_em, finite_difference_hessian,
                                  free_param_names, loglik_gradient, m_step,
                                  params_to_vector, standard_errors,
                                  vector_to_params)
from icefactor.model import (IndicatorPanel, ModelParams, build_design_matrix,
                             unconditional_init)
from icefactor.simulation import SimConfig, reference_params, simulate
from conftest import random_instance, random_params
from gaussian_oracle import conditional_moments

LOOSE = EMConfig(max_iters=2000, loglik_tol=1e-8, param_tol=1e-5,
                 compute_se=False)


def _sim(rng_seed, T=120, params=None):
    params = params or reference_params()
    panel, _ = simulate(SimConfig(params=params, periods=T, seed=rng_seed))
    design = build_design_matrix(panel.dates, time_origin=panel.dates[0])
    return params, panel, design


# ---------------------------------------------------------------------------
# parameter vector round-trip
# ---------------------------------------------------------------------------

def test_param_vector_roundtrip(rng):
    for n in (1, 2, 4):
        p = random_params(rng, n)
        v = params_to_vector(p)
        assert len(v) == 2 * (n - 1) + n * (n + 1) // 2 + 38
        q = vector_to_params(v, p.anchor, n)
        np.testing.assert_allclose(params_to_vector(q), v, rtol=1e-12)
        np.testing.assert_allclose(q.Sigma, p.Sigma, rtol=1e-10)
        assert len(free_param_names(p.anchor, tuple("ABCD"[:n]))) == len(v)


# ---------------------------------------------------------------------------
# E-step
# ---------------------------------------------------------------------------

def test_e_step_moments_match_oracle(rng):
    params, panel, design = random_instance(rng, 10, 3)
    init = unconditional_init(params, design.matrix[0])
    st = e_step(params, panel, design, init)
    ll, mean, cov = conditional_moments(params, panel, design)
    np.testing.assert_allclose(st.Ex, mean, rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(st.Exx, mean ** 2 + np.diag(cov),
                               rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(st.Exx1,
                               mean[1:] * mean[:-1] + np.diag(cov[1:, :-1]),
                               rtol=1e-9, atol=1e-10)
    assert st.loglik == pytest.approx(ll, rel=1e-10)
    # patterns partition the observed entries
    total = sum(p.count * len(p.idx) for p in st.patterns)
    assert total == int((~panel.mask).sum())


# ---------------------------------------------------------------------------
# M-step
# ---------------------------------------------------------------------------

def test_m_step_weakly_increases_loglik(rng):
    """One M-step from arbitrary valid parameters never lowers the
    log-likelihood (generalized EM property)."""
    for seed in range(3):
        truth, panel, design = _sim(seed, T=60)
        start = random_params(rng, 4)
        init = unconditional_init(start, design.matrix[0])
        st = e_step(start, panel, design, init)
        new = m_step(st, panel, design, anchor=0)
        init2 = unconditional_init(new, design.matrix[0])
        st2 = e_step(new, panel, design, init2)
        assert st2.loglik >= st.loglik - MONOTONICITY_SLACK


def test_m_step_preserves_anchor_normalization(rng):
    truth, panel, design = _sim(7, T=60)
    start = random_params(rng, 4, anchor=2)
    init = unconditional_init(start, design.matrix[0])
    st = e_step(start, panel, design, init)
    new = m_step(st, panel, design, anchor=2)
    assert new.lam[2] == 1.0 and new.c[2] == 0.0


# ---------------------------------------------------------------------------
# fit_em
# ---------------------------------------------------------------------------

def test_fit_recovers_simulated_parameters():
    truth, panel, design = _sim(0, T=506)
    fit = fit_em(panel, design, 0, LOOSE)
    assert fit.converged
    np.testing.assert_allclose(fit.params.lam, truth.lam, atol=0.05)
    assert abs(fit.params.rho - truth.rho) < 0.1
    np.testing.assert_allclose(fit.params.c, truth.c, atol=0.1)
    np.testing.assert_allclose(fit.params.Sigma, truth.Sigma, atol=0.01)
    # trace is monotone (fit_em would have raised otherwise; double check)
    diffs = np.diff(fit.loglik_trace)
    assert diffs.min() >= -MONOTONICITY_SLACK


def test_fit_normalization_choice():
    truth, panel, design = _sim(1, T=240)
    fit = fit_em(panel, design, 3, LOOSE)
    assert fit.params.lam[3] == 1.0 and fit.params.c[3] == 0.0
    # under the Goddard anchor, the SII loading should be near 1/0.961
    assert fit.params.lam[0] == pytest.approx(1.0 / truth.lam[3], abs=0.08)


def test_near_noiseless_panel_recovers_sharply():
    """With nearly noiseless measurements the loadings and intercepts are
    recovered essentially exactly.  (Exactly zero noise is excluded on
    purpose: the Gaussian likelihood is then unbounded in Sigma and no
    maximizer exists.)"""
    base = reference_params()
    d = base.to_dict()
    d["Sigma"] = (1e-8 * np.eye(4)).tolist()
    truth = ModelParams.from_dict(d)
    panel, _ = simulate(SimConfig(params=truth, periods=240, seed=11))
    design = build_design_matrix(panel.dates, time_origin=panel.dates[0])
    fit = fit_em(panel, design, 0, LOOSE)
    assert fit.converged
    np.testing.assert_allclose(fit.params.lam, truth.lam, atol=1e-5)
    np.testing.assert_allclose(fit.params.c, truth.c, atol=1e-4)


def test_fixed_point_at_converged_estimate():
    truth, panel, design = _sim(2, T=180)
    fit = fit_em(panel, design, 0, LOOSE)
    assert fit.converged
    seeded = EMConfig(max_iters=10, loglik_tol=1e-8, param_tol=1e-5,
                      seed_params=fit.params, compute_se=False)
    refit = fit_em(panel, design, 0, seeded)
    delta = np.max(np.abs(params_to_vector(refit.params)
                          - params_to_vector(fit.params)))
    assert delta <= 10 * LOOSE.param_tol


def test_gradient_small_at_optimum():
    truth, panel, design = _sim(3, T=180)
    fit = fit_em(panel, design, 0, LOOSE)
    g, steps = loglik_gradient(fit.params, panel, design)
    assert np.max(np.abs(g * steps)) < 1e-3


def test_frozen_indicator_keeps_seed_row():
    truth, panel, design = _sim(4, T=120)
    mask = panel.mask.copy()
    mask[:, 1] = True
    mask[0, 1] = False  # a single observation cannot identify (c, lambda)
    panel2 = IndicatorPanel(dates=panel.dates, values=panel.values,
                            mask=mask, names=panel.names, range_check=False)
    seed = reference_params()
    cfg = EMConfig(max_iters=50, loglik_tol=1e-6, param_tol=1e-3,
                   seed_params=seed, compute_se=False)
    fit = fit_em(panel2, design, 0, cfg)
    assert 1 in fit.diagnostics["frozen_indicators"]
    assert fit.params.c[1] == seed.c[1]
    assert fit.params.lam[1] == seed.lam[1]


def test_fit_requires_two_anchor_observations():
    truth, panel, design = _sim(5, T=60)
    mask = panel.mask.copy()
    mask[:, 0] = True
    panel2 = IndicatorPanel(dates=panel.dates, values=panel.values,
                            mask=mask, names=panel.names, range_check=False)
    with pytest.raises(InputError):
        fit_em(panel2, design, 0, LOOSE)


def test_emconfig_validation():
    with pytest.raises(InputError):
        EMConfig(max_iters=0)
    with pytest.raises(InputError):
        EMConfig(loglik_tol=0.0)
    with pytest.raises(InputError):
        EMConfig(ridge=-1.0)


def test_fit_result_json_roundtrip():
    truth, panel, design = _sim(6, T=60)
    fit = fit_em(panel, design, 0, EMConfig(max_iters=20, loglik_tol=1e-6,
                                            param_tol=1e-3, compute_se=False))
    back = FitResult.from_json(fit.to_json())
    assert back.converged == fit.converged
    assert back.time_origin == fit.time_origin
    assert back.names == fit.names
    np.testing.assert_allclose(params_to_vector(back.params),
                               params_to_vector(fit.params), rtol=1e-15)
    np.testing.assert_allclose(back.loglik_trace, fit.loglik_trace)


# ---------------------------------------------------------------------------
# standard errors
# ---------------------------------------------------------------------------

def test_hessian_exact_on_quadratic(rng):
    p = 6
    A = rng.normal(size=(p, p))
    A = A @ A.T + p * np.eye(p)
    m = rng.normal(size=p)

    def f(x):
        return -0.5 * float((x - m) @ A @ (x - m))

    x0 = rng.normal(size=p)
    H = finite_difference_hessian(f, x0, steps=np.full(p, 1e-3))
    np.testing.assert_allclose(H, -A, rtol=1e-6, atol=1e-6)


def test_standard_errors_positive_at_optimum():
    truth, panel, design = _sim(8, T=240)
    fit = fit_em(panel, design, 0, LOOSE)
    se = standard_errors(fit.params, panel, design)
    assert se.hessian_ok
    assert np.all(se.values > 0)
    names = dict(zip(se.names, se.values))
    # rho is well identified at T = 240
    assert names["rho"] < 0.2
