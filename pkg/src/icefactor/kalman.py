"""Kalman filter and RTS smoother for the scalar-state indicator model.

Missing observations are handled by using only the observed sub-vector each
period; fully missing periods skip the measurement update and contribute
zero to the log-likelihood.  Because the state is scalar, the measurement
update is written in information form with Sigma_oo factored once per
missingness pattern (Cholesky); the innovation covariance determinant and
quadratic form follow from the matrix-determinant lemma and
Sherman-Morrison, avoiding any explicit inversion of the N x N innovation
covariance.  The information-form posterior variance P/(1 + P*A) with
A = lambda' Sigma^{-1} lambda >= 0 is non-negative by construction, which is
the property the Joseph update would otherwise provide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError
from .model import DesignMatrix, IndicatorPanel, ModelParams, StateInit

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FilterOutput:
    predicted_mean: np.ndarray
    predicted_var: np.ndarray
    filtered_mean: np.ndarray
    filtered_var: np.ndarray
    per_period_loglik: np.ndarray
    loglik: float


@dataclass(frozen=True)
class SmootherOutput:
    smoothed_mean: np.ndarray
    smoothed_var: np.ndarray
    lag_one_cov: np.ndarray  # (T-1,): Cov(x_{t+1}, x_t | all data)
    loglik: float


def _pattern_precompute(params: ModelParams, panel: IndicatorPanel):
    """Per-missingness-pattern quantities and per-period whitened data.

    Returns arrays (n_obs, A, logdet, Z, G) of length T where, with L the
    Cholesky factor of Sigma_oo for period t's observed index set o,
        A      = lam_o' Sigma_oo^{-1} lam_o
        Z[t]   = L^{-1} (y_o - c_o), zero padded to width N
        G[t]   = L^{-1} lam_o, zero padded to width N
    The whitened form keeps the innovation quadratic as a sum of squares of
    small residuals instead of a difference of large cross products, which
    matters for the likelihood's last few digits.
    """
    T = panel.n_periods
    n = panel.n_indicators
    obs = ~panel.mask
    n_obs = np.zeros(T, dtype=int)
    A = np.zeros(T)
    logdet = np.zeros(T)
    Z = np.zeros((T, n))
    G = np.zeros((T, n))

    keys = [tuple(np.nonzero(obs[t])[0]) for t in range(T)]
    for key in set(keys):
        if not key:
            continue
        rows = np.array([t for t, k in enumerate(keys) if k == key])
        idx = np.array(key)
        k = len(idx)
        Sig = params.Sigma[np.ix_(idx, idx)]
        try:
            L = scipy.linalg.cholesky(Sig, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalError(
                f"innovation covariance numerically singular for observed "
                f"indicators {key}", period=int(rows[0])) from exc
        g = scipy.linalg.solve_triangular(L, params.lam[idx], lower=True)
        D = panel.values[np.ix_(rows, idx)] - params.c[idx]
        n_obs[rows] = k
        A[rows] = float(g @ g)
        logdet[rows] = 2.0 * float(np.sum(np.log(np.diag(L))))
        Z[np.ix_(rows, np.arange(k))] = scipy.linalg.solve_triangular(
            L, D.T, lower=True).T
        G[np.ix_(rows, np.arange(k))] = g
    return n_obs, A, logdet, Z, G


def kalman_filter(params: ModelParams, panel: IndicatorPanel,
                  design: DesignMatrix, init: StateInit) -> FilterOutput:
    """One forward pass of the exact linear-Gaussian recursions.

    The t = 1 prior is ``init`` (its mean already contains the period-1
    deterministic input); later priors apply the transition equation to the
    previous filtered moments.
    """
    T = panel.n_periods
    if design.n_periods != T:
        raise InputError("panel and design matrix row counts differ")
    if panel.n_indicators != params.n_indicators:
        raise InputError("panel and parameter indicator counts differ")

    n_obs, A, logdet, Z, G = _pattern_precompute(params, panel)
    det = (design.matrix @ params.gamma).tolist()
    n_obs = n_obs.tolist()
    A_l, ld_l = A.tolist(), logdet.tolist()
    Z_l, G_l = Z.tolist(), G.tolist()

    rho, s2 = params.rho, params.sigma2_eta
    pm = np.empty(T)
    pv = np.empty(T)
    fm = np.empty(T)
    fv = np.empty(T)
    ll = np.zeros(T)

    mf = init.mean
    Pf = init.variance
    for t in range(T):
        if t == 0:
            mp, Pp = init.mean, init.variance
        else:
            mp = rho * mf + det[t]
            Pp = rho * rho * Pf + s2
        pm[t] = mp
        pv[t] = Pp
        if n_obs[t]:
            At = A_l[t]
            denom = 1.0 + Pp * At
            if not denom > 0.0 or not math.isfinite(denom):
                raise NumericalError("non-positive innovation precision",
                                     period=t)
            q = 0.0
            r = 0.0
            for zi, gi in zip(Z_l[t], G_l[t]):
                ei = zi - mp * gi
                q += ei * ei
                r += gi * ei
            ll[t] = -0.5 * (n_obs[t] * LOG_2PI + ld_l[t] + math.log(denom)
                            + q - Pp * r * r / denom)
            mf = mp + Pp * r / denom
            Pf = Pp / denom
        else:
            mf, Pf = mp, Pp
        fm[t] = mf
        fv[t] = Pf

    return FilterOutput(predicted_mean=pm, predicted_var=pv,
                        filtered_mean=fm, filtered_var=fv,
                        per_period_loglik=ll, loglik=float(ll.sum()))


def kalman_smoother(params: ModelParams, panel: IndicatorPanel,
                    design: DesignMatrix, init: StateInit) -> SmootherOutput:
    """RTS backward pass, including lag-one covariances.

    For the scalar state, Cov(x_{t+1}, x_t | all data) = J_t * V^s_{t+1}
    with gain J_t = rho * V^f_t / P^p_{t+1}; this follows from
    x_t  _|_  y_{t+1:T} | x_{t+1}.
    """
    f = kalman_filter(params, panel, design, init)
    T = panel.n_periods
    rho = params.rho
    ms = f.filtered_mean.copy()
    Vs = f.filtered_var.copy()
    lag = np.empty(max(T - 1, 0))
    for t in range(T - 2, -1, -1):
        J = rho * f.filtered_var[t] / f.predicted_var[t + 1]
        ms[t] = f.filtered_mean[t] + J * (ms[t + 1] - f.predicted_mean[t + 1])
        Vs[t] = f.filtered_var[t] + J * J * (Vs[t + 1] - f.predicted_var[t + 1])
        lag[t] = J * Vs[t + 1]
    return SmootherOutput(smoothed_mean=ms, smoothed_var=Vs,
                          lag_one_cov=lag, loglik=f.loglik)


def log_likelihood(params: ModelParams, panel: IndicatorPanel,
                   design: DesignMatrix, init: StateInit) -> float:
    """Gaussian pseudo-log-likelihood (thin wrapper over the filter)."""
    return kalman_filter(params, panel, design, init).loglik
