"""EM estimation of the factor model and numerical-Hessian standard errors.

The M-step is a sequence of exact conditional maximizations of the expected
complete-data log-likelihood (generalized EM), which guarantees that the
observed-data log-likelihood never decreases:

  * measurement intercepts/loadings: joint GLS normal equations across all
    non-anchor indicators, weighted by Sigma^{-1} per missingness pattern
    (with a full error covariance and a fixed anchor row, per-indicator OLS
    would not maximize the objective; the GLS system reduces to per-indicator
    OLS when Sigma is diagonal);
  * Sigma: expected residual outer products, accumulated pairwise over
    jointly observed periods, with a ridge repair if positive-definiteness
    is lost and a fallback to the previous Sigma if the update does not
    improve the expected objective (only possible under partial
    missingness, where the pairwise average is approximate);
  * transition block (rho, a, b, cq, sigma2_eta): the stationary x_1 prior
    depends on these parameters, so the plain lag regression is not the
    exact maximizer.  Instead: an exact quadratic solve for (a, b, cq)
    given rho, then a 1-d profile maximization over rho with sigma2_eta
    concentrated out, both including the x_1 prior term.

Standard errors come from a central-finite-difference Hessian of the
log-likelihood over the free-parameter vector, with Sigma parameterized by
its lower-triangular Cholesky factor so every evaluated point stays
positive-definite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import InputError, NumericalError
from .kalman import SmootherOutput, kalman_filter, kalman_smoother
from .model import (DesignMatrix, IndicatorPanel, ModelParams, StateInit,
                    unconditional_init)
from .months import Month

#: absolute slack allowed for a log-likelihood decrease between EM iterations
MONOTONICITY_SLACK = 1e-8


@dataclass(frozen=True)
class EMConfig:
    max_iters: int = 5000
    loglik_tol: float = 1e-9
    param_tol: float = 1e-7
    ridge: float = 1e-10
    seed_params: ModelParams | None = None
    compute_se: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if self.loglik_tol <= 0 or self.param_tol <= 0:
            raise InputError("convergence tolerances must be positive")
        if self.ridge < 0:
            raise InputError("ridge must be non-negative")


@dataclass(frozen=True)
class PatternStats:
    """Per-missingness-pattern sums used by the measurement M-step."""

    idx: tuple[int, ...]        # observed indicator indices
    rows: np.ndarray            # period indices with this pattern
    count: int
    sx: float                   # sum of E[x_t]
    sxx: float                  # sum of E[x_t^2]
    sy: np.ndarray              # per observed indicator: sum of y
    syx: np.ndarray             # per observed indicator: sum of y * E[x_t]


@dataclass(frozen=True)
class SuffStats:
    """Smoothed posterior moments and pattern-wise cross moments with y."""

    Ex: np.ndarray              # E[x_t | all data]
    Exx: np.ndarray             # E[x_t^2 | all data]
    Exx1: np.ndarray            # E[x_t x_{t-1} | all data], length T-1
    patterns: tuple[PatternStats, ...]
    loglik: float
    params: ModelParams         # parameters the expectations were taken under
    smoother: SmootherOutput


@dataclass
class FitResult:
    params: ModelParams
    loglik_trace: list[float]
    converged: bool
    reason: str
    std_errors: dict[str, float] | None
    hessian_ok: bool | None
    names: tuple[str, ...]
    time_origin: Month
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "loglik_trace": list(self.loglik_trace),
            "converged": self.converged,
            "reason": self.reason,
            "std_errors": self.std_errors,
            "hessian_ok": self.hessian_ok,
            "names": list(self.names),
            "time_origin": list(self.time_origin),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        return cls(params=ModelParams.from_dict(d["params"]),
                   loglik_trace=list(d["loglik_trace"]),
                   converged=bool(d["converged"]), reason=d["reason"],
                   std_errors=d.get("std_errors"),
                   hessian_ok=d.get("hessian_ok"),
                   names=tuple(d["names"]),
                   time_origin=tuple(d["time_origin"]),
                   diagnostics=d.get("diagnostics", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# free-parameter vector <-> ModelParams
# ---------------------------------------------------------------------------

def free_param_names(anchor: int, names) -> list[str]:
    out = [f"c_{names[i]}" for i in range(len(names)) if i != anchor]
    out += [f"lambda_{names[i]}" for i in range(len(names)) if i != anchor]
    n = len(names)
    for i, j in zip(*np.tril_indices(n)):
        out.append(f"sigma_chol_{i + 1}{j + 1}")
    out.append("rho")
    out += [f"a_{m}" for m in range(1, 13)]
    out += [f"b_{m}" for m in range(1, 13)]
    out += [f"cq_{m}" for m in range(1, 13)]
    out.append("sigma2_eta")
    return out


def params_to_vector(p: ModelParams) -> np.ndarray:
    n = p.n_indicators
    keep = [i for i in range(n) if i != p.anchor]
    chol = np.linalg.cholesky(p.Sigma)
    return np.concatenate([
        p.c[keep], p.lam[keep], chol[np.tril_indices(n)],
        [p.rho], p.a, p.b, p.cq, [p.sigma2_eta],
    ])


def vector_to_params(v: np.ndarray, anchor: int, n: int) -> ModelParams:
    keep = [i for i in range(n) if i != anchor]
    k = len(keep)
    c = np.zeros(n)
    lam = np.ones(n)
    c[keep] = v[:k]
    lam[keep] = v[k:2 * k]
    ntri = n * (n + 1) // 2
    L = np.zeros((n, n))
    L[np.tril_indices(n)] = v[2 * k:2 * k + ntri]
    Sigma = L @ L.T
    off = 2 * k + ntri
    rho = v[off]
    a = v[off + 1:off + 13]
    b = v[off + 13:off + 25]
    cq = v[off + 25:off + 37]
    s2 = v[off + 37]
    return ModelParams(anchor=anchor, c=c, lam=lam, Sigma=Sigma, rho=rho,
                       a=a, b=b, cq=cq, sigma2_eta=s2)


# ---------------------------------------------------------------------------
# E-step
# ---------------------------------------------------------------------------

def e_step(params: ModelParams, panel: IndicatorPanel, design: DesignMatrix,
           init: StateInit) -> SuffStats:
    """Smoother-based posterior moments plus pattern-wise cross moments."""
    sm = kalman_smoother(params, panel, design, init)
    Ex = sm.smoothed_mean
    Exx = sm.smoothed_mean ** 2 + sm.smoothed_var
    Exx1 = sm.smoothed_mean[1:] * sm.smoothed_mean[:-1] + sm.lag_one_cov

    obs = ~panel.mask
    keys = [tuple(np.nonzero(obs[t])[0]) for t in range(panel.n_periods)]
    patterns = []
    for key in sorted(set(keys)):
        if not key:
            continue
        rows = np.array([t for t, k in enumerate(keys) if k == key])
        idx = np.array(key)
        y = panel.values[np.ix_(rows, idx)]
        patterns.append(PatternStats(
            idx=key, rows=rows, count=len(rows),
            sx=float(Ex[rows].sum()), sxx=float(Exx[rows].sum()),
            sy=y.sum(axis=0), syx=(y * Ex[rows, None]).sum(axis=0)))
    return SuffStats(Ex=Ex, Exx=Exx, Exx1=Exx1, patterns=tuple(patterns),
                     loglik=sm.loglik, params=params, smoother=sm)


# ---------------------------------------------------------------------------
# M-step
# ---------------------------------------------------------------------------

def _measurement_update(stats: SuffStats, panel: IndicatorPanel, anchor: int):
    """Joint GLS update of (c_i, lambda_i) for all updatable indicators.

    Indicators with fewer than 2 observations keep their current row
    (flagged); the anchor row is (0, 1) by construction.
    """
    old = stats.params
    n = panel.n_indicators
    n_obs = (~panel.mask).sum(axis=0)
    frozen = [i for i in range(n) if i != anchor and n_obs[i] < 2]
    free = [i for i in range(n) if i != anchor and i not in frozen]
    pos = {i: 2 * k for k, i in enumerate(free)}

    c_new = old.c.copy()
    lam_new = old.lam.copy()
    c_new[anchor] = 0.0
    lam_new[anchor] = 1.0
    if free:
        p = 2 * len(free)
        Amat = np.zeros((p, p))
        rhs = np.zeros(p)
        for pat in stats.patterns:
            o = list(pat.idx)
            Sig = old.Sigma[np.ix_(o, o)]
            W = scipy.linalg.cho_solve(
                scipy.linalg.cho_factor(Sig, lower=True), np.eye(len(o)))
            S = (float(pat.count), pat.sx, pat.sxx)
            for ii, i in enumerate(o):
                if i not in pos:
                    continue
                for jj, j in enumerate(o):
                    Wij = W[ii, jj]
                    syk = (pat.sy[jj], pat.syx[jj])
                    if j in pos:
                        for k in (0, 1):
                            for l in (0, 1):
                                Amat[pos[i] + k, pos[j] + l] += Wij * S[k + l]
                            rhs[pos[i] + k] += Wij * syk[k]
                    else:
                        cj = 0.0 if j == anchor else old.c[j]
                        lj = 1.0 if j == anchor else old.lam[j]
                        for k in (0, 1):
                            rhs[pos[i] + k] += Wij * (
                                syk[k] - cj * S[k] - lj * S[k + 1])
        try:
            beta = np.linalg.solve(Amat, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular normal equations",
                                 block="measurement") from exc
        for i in free:
            c_new[i] = beta[pos[i]]
            lam_new[i] = beta[pos[i] + 1]
    return c_new, lam_new, frozen


def _measurement_q(stats: SuffStats, panel: IndicatorPanel, c: np.ndarray,
                   lam: np.ndarray, Sigma: np.ndarray) -> float:
    """Expected measurement log-likelihood (up to constants) given moments."""
    V = stats.Exx - stats.Ex ** 2
    q = 0.0
    for pat in stats.patterns:
        o = list(pat.idx)
        rows = pat.rows
        R = (panel.values[np.ix_(rows, o)] - c[o]
             - np.outer(stats.Ex[rows], lam[o]))
        M = R.T @ R + np.outer(lam[o], lam[o]) * V[rows].sum()
        try:
            chol = scipy.linalg.cho_factor(Sigma[np.ix_(o, o)], lower=True)
        except scipy.linalg.LinAlgError:
            return -np.inf
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
        Sinv = scipy.linalg.cho_solve(chol, np.eye(len(o)))
        q += -0.5 * (pat.count * logdet + float(np.sum(Sinv * M)))
    return q


def _sigma_update(stats: SuffStats, panel: IndicatorPanel, c: np.ndarray,
                  lam: np.ndarray, ridge: float):
    """Pairwise expected-residual covariance with PD repair and Q guard."""
    old = stats.params
    obs = (~panel.mask).astype(float)
    V = stats.Exx - stats.Ex ** 2
    resid = np.where(panel.mask, 0.0,
                     panel.values - c - np.outer(stats.Ex, lam))
    counts = obs.T @ obs
    cross = resid.T @ resid + np.outer(lam, lam) * ((obs * V[:, None]).T @ obs)
    Sigma = old.Sigma.copy()
    have = counts > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        Sigma = np.where(have, cross / np.where(have, counts, 1.0), Sigma)
    Sigma = 0.5 * (Sigma + Sigma.T)

    repairs = 0
    bump = ridge if ridge > 0 else 1e-12
    while np.linalg.eigvalsh(Sigma).min() <= 0.0:
        Sigma += bump * np.eye(len(lam))
        bump *= 10.0
        repairs += 1
        if repairs > 30:
            raise NumericalError("Sigma update cannot be made "
                                 "positive-definite", block="Sigma")

    # pairwise averaging is only approximate under partial missingness;
    # keep the previous Sigma if the update does not improve the objective
    if (_measurement_q(stats, panel, c, lam, Sigma)
            < _measurement_q(stats, panel, c, lam, old.Sigma)):
        return old.Sigma.copy(), repairs, True
    return Sigma, repairs, False


def _transition_update(stats: SuffStats, design: DesignMatrix):
    """Exact joint maximizer of the transition block (rho, gamma, sigma2).

    gamma given rho solves normal equations whose Gram matrix differs from
    the fixed S_ww = sum_{t>=2} w_t w_t' only by a rank-one prior term, so
    with S_ww factored once, gamma(rho) and the profiled objective cost
    O(dim) per rho candidate (Sherman-Morrison).  The stationary x_1 prior
    term is included throughout, making this the exact M-step for the
    block; the candidate set contains the incoming rho, so the expected
    objective cannot decrease.
    """
    old = stats.params
    T = len(stats.Ex)
    # the trend/quadratic columns dwarf the dummies (roughly T and T^2 to
    # 1), which makes S_ww too ill-conditioned to factor accurately; solve
    # in a rescaled basis and map gamma back at the end
    col_rms = np.sqrt(np.mean(design.matrix ** 2, axis=0))
    scale = 1.0 / np.where(col_rms > 0, col_rms, 1.0)
    W2 = design.matrix[1:] * scale
    w1 = design.matrix[0] * scale
    S_ww = W2.T @ W2
    S_wx = W2.T @ stats.Ex[1:]
    S_wxm = W2.T @ stats.Ex[:-1]
    A0 = float(stats.Exx[1:].sum())
    A1 = float(stats.Exx1.sum())
    A2 = float(stats.Exx[:-1].sum())
    Ex0 = float(stats.Ex[0])
    Exx0 = float(stats.Exx[0])

    try:
        chol = scipy.linalg.cho_factor(S_ww, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError("singular normal equations (need several "
                             "occurrences of every calendar month)",
                             block="transition") from exc
    u1 = scipy.linalg.cho_solve(chol, S_wx)
    u2 = scipy.linalg.cho_solve(chol, S_wxm)
    u3 = scipy.linalg.cho_solve(chol, w1)
    c3 = float(w1 @ u3)

    def gamma_of(rho: float) -> np.ndarray:
        kappa = (1.0 + rho) / (1.0 - rho)
        sb = u1 - rho * u2 + (1.0 + rho) * Ex0 * u3
        return sb - (kappa * float(w1 @ sb) / (1.0 + kappa * c3)) * u3

    def moments_of(rho: float):
        gamma = gamma_of(rho)
        kappa = (1.0 + rho) / (1.0 - rho)
        g_wx = float(gamma @ (S_wx - rho * S_wxm))
        g_w1 = float(w1 @ gamma)
        # gamma' S_ww gamma = gamma' b - kappa (w1' gamma)^2 via the
        # normal equations, avoiding any O(dim^2) product
        ssr = (A0 - 2.0 * rho * A1 + rho * rho * A2
               - g_wx + (1.0 + rho) * Ex0 * g_w1 - kappa * g_w1 * g_w1)
        mu1 = g_w1 / (1.0 - rho)
        delta1 = Exx0 - 2.0 * Ex0 * mu1 + mu1 * mu1
        s2 = max(((1.0 - rho * rho) * delta1 + ssr) / T, 1e-300)
        return gamma, s2

    def neg_q(rho: float) -> float:
        _, s2 = moments_of(rho)
        return 0.5 * (T * math.log(s2) - math.log1p(-rho * rho))

    lim = 0.999999
    grid = np.append(np.linspace(-0.995, 0.995, 81),
                     np.clip(old.rho, -lim, lim))
    best = float(grid[np.argmin([neg_q(r) for r in grid])])
    res = scipy.optimize.minimize_scalar(
        neg_q, bounds=(max(best - 0.05, -lim), min(best + 0.05, lim)),
        method="bounded", options={"xatol": 1e-13})
    rho = float(res.x) if neg_q(float(res.x)) <= neg_q(best) else best
    gamma, s2 = moments_of(rho)
    return rho, gamma * scale, s2


def m_step(stats: SuffStats, panel: IndicatorPanel, design: DesignMatrix,
           anchor: int, ridge: float = 1e-10) -> ModelParams:
    params, _ = _m_step_full(stats, panel, design, anchor, ridge)
    return params


def _m_step_full(stats: SuffStats, panel: IndicatorPanel,
                 design: DesignMatrix, anchor: int, ridge: float):
    c_new, lam_new, frozen = _measurement_update(stats, panel, anchor)
    Sigma, repairs, sigma_kept = _sigma_update(stats, panel, c_new, lam_new,
                                               ridge)
    rho, gamma, s2 = _transition_update(stats, design)
    params = ModelParams(anchor=anchor, c=c_new, lam=lam_new, Sigma=Sigma,
                         rho=rho, a=gamma[:12], b=gamma[12:24],
                         cq=gamma[24:], sigma2_eta=s2)
    info = {"frozen_indicators": frozen, "ridge_repairs": repairs,
            "sigma_update_rejected": sigma_kept}
    return params, info


# ---------------------------------------------------------------------------
# EM driver
# ---------------------------------------------------------------------------

def default_start(panel: IndicatorPanel, design: DesignMatrix,
                  anchor: int) -> ModelParams:
    """Deterministic starting values: unit loadings, trend/seasonal from a
    least-squares fit of the anchor indicator on the design matrix."""
    n = panel.n_indicators
    rows = ~panel.mask[:, anchor]
    gamma, *_ = np.linalg.lstsq(design.matrix[rows],
                                panel.values[rows, anchor], rcond=None)
    return ModelParams(anchor=anchor, c=np.zeros(n), lam=np.ones(n),
                       Sigma=0.1 * np.eye(n), rho=0.5, a=gamma[:12],
                       b=gamma[12:24], cq=gamma[24:], sigma2_eta=0.1)


def fit_em(panel: IndicatorPanel, design: DesignMatrix, anchor: int,
           config: EMConfig = EMConfig()) -> FitResult:
    """Alternate E and M steps until the likelihood and parameters settle.

    Convergence requires BOTH the relative log-likelihood change below
    ``loglik_tol`` AND the max-abs free-parameter change below
    ``param_tol``.  A log-likelihood decrease beyond a 1e-8 slack raises a
    hard error: with exact conditional maximizations it indicates a bug.
    """
    if design.n_periods != panel.n_periods:
        raise InputError("panel and design matrix row counts differ")
    n_obs = (~panel.mask).sum(axis=0)
    if n_obs[anchor] < 2:
        raise InputError("anchor indicator needs at least 2 observations")

    params = config.seed_params or default_start(panel, design, anchor)
    if params.anchor != anchor:
        raise InputError("seed parameters use a different anchor")

    trace: list[float] = []
    diagnostics = {"ridge_repairs": 0, "frozen_indicators": [],
                   "sigma_updates_rejected": 0, "accelerated_steps": 0}
    prev_delta = np.inf
    converged = False
    reason = "max_iters"

    def em_step(p: ModelParams):
        init = unconditional_init(p, design.matrix[0])
        stats = e_step(p, panel, design, init)
        new_p, info = _m_step_full(stats, panel, design, anchor, config.ridge)
        diagnostics["ridge_repairs"] += info["ridge_repairs"]
        diagnostics["frozen_indicators"] = info["frozen_indicators"]
        diagnostics["sigma_updates_rejected"] += int(
            info["sigma_update_rejected"])
        return new_p, stats.loglik

    def record(ll: float) -> bool:
        """Append to the trace; True when converged.  A decrease beyond the
        slack is a hard error by design."""
        nonlocal converged, reason
        if trace and ll < trace[-1] - MONOTONICITY_SLACK:
            raise NumericalError(
                f"log-likelihood decreased at iteration {len(trace)}: "
                f"{trace[-1]:.10f} -> {ll:.10f}", block="em")
        if trace:
            rel = abs(ll - trace[-1]) / max(1.0, abs(ll))
            if rel < config.loglik_tol and prev_delta < config.param_tol:
                trace.append(ll)
                converged = True
                reason = "loglik and parameter tolerances met"
                return True
        trace.append(ll)
        return False

    # plain EM converges at a linear rate very close to 1 for this model;
    # each cycle takes two EM steps and tries the SQUAREM extrapolation,
    # keeping the plain second step whenever the extrapolated point fails
    # validation or does not improve the likelihood (so the recorded trace
    # stays monotone and every accepted point is a genuine ascent)
    while len(trace) < config.max_iters:
        v0 = params_to_vector(params)
        p1, ll0 = em_step(params)
        if record(ll0):
            break
        prev_delta = float(np.max(np.abs(params_to_vector(p1) - v0)))
        if len(trace) >= config.max_iters:
            params = p1
            break
        p2, ll1 = em_step(p1)
        if record(ll1):
            params = p1
            break
        v1 = params_to_vector(p1)
        v2 = params_to_vector(p2)
        r = v1 - v0
        q = v2 - v1 - r
        qn = float(np.linalg.norm(q))
        alpha = -float(np.linalg.norm(r)) / qn if qn > 0 else -1.0
        alpha = min(alpha, -1.0)
        accel = None
        if alpha < -1.0:
            try:
                cand = vector_to_params(v0 - 2.0 * alpha * r
                                        + alpha * alpha * q, anchor,
                                        panel.n_indicators)
                cand_init = unconditional_init(cand, design.matrix[0])
                if kalman_filter(cand, panel, design, cand_init).loglik >= ll1:
                    accel = cand
            except (InputError, NumericalError):
                accel = None
        if accel is not None:
            diagnostics["accelerated_steps"] += 1
            params = accel
            prev_delta = float(np.max(np.abs(params_to_vector(accel) - v1)))
        else:
            params = p2
            prev_delta = float(np.max(np.abs(v2 - v1)))
    diagnostics["n_iters"] = len(trace)

    std_errors = None
    hessian_ok = None
    if config.compute_se:
        se = standard_errors(params, panel, design)
        names = free_param_names(anchor, panel.names)
        std_errors = dict(zip(names, se.values.tolist()))
        hessian_ok = se.hessian_ok

    return FitResult(params=params, loglik_trace=trace, converged=converged,
                     reason=reason, std_errors=std_errors,
                     hessian_ok=hessian_ok, names=panel.names,
                     time_origin=design.time_origin, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# standard errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SEResult:
    values: np.ndarray
    names: tuple[str, ...]
    hessian_ok: bool
    cov: np.ndarray


def finite_difference_hessian(f, x: np.ndarray,
                              steps: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    p = len(x)
    H = np.empty((p, p))
    f0 = f(x)

    def fp(shift):
        return f(x + shift)

    for i in range(p):
        ei = np.zeros(p)
        ei[i] = steps[i]
        H[i, i] = (fp(ei) - 2.0 * f0 + fp(-ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(p)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (
                fp(ei + ej) - fp(ei - ej) - fp(-ei + ej) + fp(-ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    return H


def _block_scales(x: np.ndarray, n: int) -> np.ndarray:
    """Per-parameter step scales: |x_i| floored at 10% of its block's RMS.

    Blocks differ in natural magnitude by many orders (quadratic-trend
    coefficients are ~1e-6), so a single absolute floor would destroy the
    finite-difference accuracy for the small blocks.
    """
    k = n - 1
    ntri = n * (n + 1) // 2
    bounds = np.cumsum([0, k, k, ntri, 1, 12, 12, 12, 1])
    scales = np.empty_like(x)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        block = x[lo:hi]
        rms = math.sqrt(float(np.mean(block ** 2)))
        floor = 0.1 * rms if rms > 0 else 1e-6
        scales[lo:hi] = np.maximum(np.abs(block), floor)
    return scales


def loglik_at_vector(v: np.ndarray, anchor: int, n: int,
                     panel: IndicatorPanel, design: DesignMatrix) -> float:
    p = vector_to_params(v, anchor, n)
    init = unconditional_init(p, design.matrix[0])
    return kalman_filter(p, panel, design, init).loglik


def loglik_gradient(params: ModelParams, panel: IndicatorPanel,
                    design: DesignMatrix, rel_step: float = 1e-6):
    """Central-difference gradient of the log-likelihood (diagnostic)."""
    x0 = params_to_vector(params)
    n = params.n_indicators
    steps = rel_step * _block_scales(x0, n)
    g = np.empty_like(x0)
    for i in range(len(x0)):
        e = np.zeros_like(x0)
        e[i] = steps[i]
        g[i] = (loglik_at_vector(x0 + e, params.anchor, n, panel, design)
                - loglik_at_vector(x0 - e, params.anchor, n, panel, design)
                ) / (2.0 * steps[i])
    return g, steps


def standard_errors(params: ModelParams, panel: IndicatorPanel,
                    design: DesignMatrix,
                    rel_step: float = 1e-4) -> SEResult:
    """Numerical-Hessian standard errors at a (local) likelihood maximum."""
    n = params.n_indicators
    x0 = params_to_vector(params)
    steps = rel_step * _block_scales(x0, n)

    def f(v):
        return loglik_at_vector(v, params.anchor, n, panel, design)

    H = finite_difference_hessian(f, x0, steps)
    neg_h = -0.5 * (H + H.T)
    names = tuple(free_param_names(params.anchor, panel.names))
    eig = np.linalg.eigvalsh(neg_h)
    if eig.min() > 0.0:
        cov = np.linalg.inv(neg_h)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
        return SEResult(values=se, names=names, hessian_ok=True, cov=cov)
    cov = np.linalg.pinv(neg_h)
    se = np.sqrt(np.abs(np.diag(cov)))
    return SEResult(values=se, names=names, hessian_ok=False, cov=cov)
