"""Core model types: indicator panel, parameters, and deterministic regressors.

The model is a single-factor linear-Gaussian state-space model for N noisy
monthly indicators y_t (millions of km^2):

    y_t  = c + lambda * x_t + eps_t,        eps_t ~ (0, Sigma)
    x_t  = rho * x_{t-1} + a'D_t + b'(D_t*TIME_t) + cq'(D_t*TIME_t^2) + eta_t

with eta_t ~ (0, sigma2_eta), D_t the 12 monthly dummies, and TIME_t a
linear monthly index (TIME = 1 at ``time_origin``).  Identification fixes
lambda = 1 and c = 0 for one "anchor" indicator.

All types here are immutable after construction; operations are pure
functions and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .months import Month, check_consecutive, months_between

#: canonical indicator order for the four-series sea-ice application
CANONICAL_NAMES = ("SII", "JAXA", "Bremen", "Goddard")

#: short anchor letters accepted by the CLI, in canonical order
ANCHOR_LETTERS = ("S", "J", "B", "G")

#: sanity range for observed sea-ice extent values, millions of km^2
VALUE_RANGE = (0.0, 30.0)

N_DESIGN_COLS = 36


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IndicatorPanel:
    """Monthly multi-indicator observation matrix with a missing-value mask.

    ``values`` is T x N with NaN in masked slots; ``mask`` is True where the
    observation is missing.  ``range_check`` disables the (0, 30] sea-ice
    sanity bound for synthetic panels generated from arbitrary parameters.
    """

    dates: tuple[Month, ...]
    values: np.ndarray
    mask: np.ndarray
    names: tuple[str, ...]
    range_check: bool = field(default=True, repr=False)

    def __post_init__(self):
        dates = tuple(tuple(d) for d in self.dates)
        check_consecutive(dates)
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise InputError("values and mask must be equal-shape 2-d arrays")
        if values.shape[0] != len(dates):
            raise InputError("row count must match date index length")
        if len(self.names) != values.shape[1]:
            raise InputError("one name per indicator column required")
        values = np.where(mask, np.nan, values)
        obs = values[~mask]
        if np.isnan(obs).any():
            raise InputError("non-missing slots must hold finite values")
        if self.range_check and obs.size:
            lo, hi = VALUE_RANGE
            if (obs <= lo).any() or (obs > hi).any():
                raise InputError(
                    f"observed values must lie in ({lo}, {hi}] millions of km^2"
                )
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", _frozen_array(values))
        object.__setattr__(self, "mask", _frozen_array(mask, bool))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_periods(self) -> int:
        return self.values.shape[0]

    @property
    def n_indicators(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ModelParams:
    """All free parameters of the measurement and transition equations.

    ``anchor`` indexes the normalized indicator: lambda[anchor] = 1 and
    c[anchor] = 0 exactly.  Sigma is a full (never diagonal-constrained)
    symmetric positive-definite measurement-error covariance.
    """

    anchor: int
    c: np.ndarray
    lam: np.ndarray
    Sigma: np.ndarray
    rho: float
    a: np.ndarray
    b: np.ndarray
    cq: np.ndarray
    sigma2_eta: float

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        lam = np.array(self.lam, dtype=float)
        Sigma = np.array(self.Sigma, dtype=float)
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        cq = np.array(self.cq, dtype=float)
        n = c.shape[0]
        if lam.shape != (n,) or Sigma.shape != (n, n):
            raise InputError("c, lambda, Sigma dimensions disagree")
        if not 0 <= self.anchor < n:
            raise InputError("anchor index out of range")
        if lam[self.anchor] != 1.0 or c[self.anchor] != 0.0:
            raise InputError("identification requires lambda=1, c=0 at anchor")
        if a.shape != (12,) or b.shape != (12,) or cq.shape != (12,):
            raise InputError("a, b, cq must be 12-vectors (one per month)")
        if np.max(np.abs(Sigma - Sigma.T)) > 1e-10:
            raise InputError("Sigma must be symmetric")
        Sigma = 0.5 * (Sigma + Sigma.T)
        if np.linalg.eigvalsh(Sigma).min() <= 0.0:
            raise InputError("Sigma must be positive-definite")
        if not abs(self.rho) < 1.0:
            raise InputError("|rho| < 1 required for stationary initialization")
        if not self.sigma2_eta > 0.0:
            raise InputError("sigma2_eta must be positive")
        object.__setattr__(self, "c", _frozen_array(c))
        object.__setattr__(self, "lam", _frozen_array(lam))
        object.__setattr__(self, "Sigma", _frozen_array(Sigma))
        object.__setattr__(self, "a", _frozen_array(a))
        object.__setattr__(self, "b", _frozen_array(b))
        object.__setattr__(self, "cq", _frozen_array(cq))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "sigma2_eta", float(self.sigma2_eta))

    @property
    def n_indicators(self) -> int:
        return self.c.shape[0]

    @property
    def gamma(self) -> np.ndarray:
        """Stacked deterministic coefficients (a, b, cq), length 36."""
        return np.concatenate([self.a, self.b, self.cq])

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "c": self.c.tolist(),
            "lambda": self.lam.tolist(),
            "Sigma": self.Sigma.tolist(),  # row-major nested lists
            "rho": self.rho,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "cq": self.cq.tolist(),
            "sigma2_eta": self.sigma2_eta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        try:
            return cls(anchor=int(d["anchor"]), c=d["c"], lam=d["lambda"],
                       Sigma=d["Sigma"], rho=d["rho"], a=d["a"], b=d["b"],
                       cq=d["cq"], sigma2_eta=d["sigma2_eta"])
        except KeyError as exc:
            raise InputError(f"missing parameter field {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DesignMatrix:
    """T x 36 deterministic regressors: monthly dummies, dummy*TIME, dummy*TIME^2."""

    matrix: np.ndarray
    time_origin: Month
    dates: tuple[Month, ...]

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != N_DESIGN_COLS:
            raise InputError("design matrix must have 36 columns")
        object.__setattr__(self, "matrix", _frozen_array(m))
        object.__setattr__(self, "time_origin", tuple(self.time_origin))
        object.__setattr__(self, "dates", tuple(tuple(d) for d in self.dates))

    @property
    def n_periods(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class StateInit:
    """Initial latent-state mean and variance for the first period."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0.0:
            raise InputError("initial state variance must be positive")


def build_design_matrix(dates, time_origin: Month) -> DesignMatrix:
    """Construct the blended trend/seasonal regressor matrix.

    TIME_t = 1 + months elapsed since ``time_origin``.  Each row has exactly
    three nonzero entries, in the column triple of that row's calendar month:
    (1, TIME_t, TIME_t^2).
    """
    dates = tuple(tuple(d) for d in dates)
    check_consecutive(dates)
    T = len(dates)
    m = np.zeros((T, N_DESIGN_COLS))
    for t, date in enumerate(dates):
        month = date[1] - 1  # column within each block
        time = 1 + months_between(date, time_origin)
        m[t, month] = 1.0
        m[t, 12 + month] = float(time)
        m[t, 24 + month] = float(time) ** 2
    return DesignMatrix(matrix=m, time_origin=time_origin, dates=dates)


def transition_mean(params: ModelParams, design_row: np.ndarray,
                    prev_state: float) -> float:
    """Conditional mean of x_t given x_{t-1} and the row's regressors."""
    return params.rho * prev_state + float(design_row @ params.gamma)


def unconditional_init(params: ModelParams,
                       first_design_row: np.ndarray) -> StateInit:
    """Stationary moments with the deterministic input frozen at t = 1.

    mean = d_1 / (1 - rho), variance = sigma2_eta / (1 - rho^2).
    """
    d = float(first_design_row @ params.gamma)
    return StateInit(mean=d / (1.0 - params.rho),
                     variance=params.sigma2_eta / (1.0 - params.rho ** 2))


def anchor_index(anchor: str | int, names=CANONICAL_NAMES) -> int:
    """Resolve an anchor given as index, indicator name, or S/J/B/G letter."""
    if isinstance(anchor, (int, np.integer)):
        return int(anchor)
    if anchor in names:
        return names.index(anchor)
    if anchor in ANCHOR_LETTERS and len(names) == len(ANCHOR_LETTERS):
        return ANCHOR_LETTERS.index(anchor)
    raise InputError(f"unknown anchor {anchor!r}; expected one of "
                     f"{ANCHOR_LETTERS} or {names}")
