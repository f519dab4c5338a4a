"""Extraction of the combined latent series and normalization comparison."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .estimation import FitResult
from .kalman import kalman_smoother
from .model import DesignMatrix, IndicatorPanel, unconditional_init
from .months import Month, format_month, parse_month


@dataclass(frozen=True)
class ExtractedSeries:
    """Smoothed latent extent with per-period uncertainty."""

    dates: tuple[Month, ...]
    mean: np.ndarray
    sd: np.ndarray
    anchor: str

    def __post_init__(self):
        if len(self.mean) != len(self.dates) or len(self.sd) != len(self.dates):
            raise InputError("series length must match date index")
        if (np.asarray(self.sd) < 0).any():
            raise InputError("standard deviations must be non-negative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", "month", "mean", "sd", "anchor"])
        for d, m, s in zip(self.dates, self.mean, self.sd):
            w.writerow([format_month(d), d[1], repr(float(m)),
                        repr(float(s)), self.anchor])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExtractedSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise InputError("empty extraction file")
        return cls(dates=tuple(parse_month(r["date"]) for r in rows),
                   mean=np.array([float(r["mean"]) for r in rows]),
                   sd=np.array([float(r["sd"]) for r in rows]),
                   anchor=rows[0]["anchor"])

    def to_json(self) -> str:
        return json.dumps({
            "anchor": self.anchor,
            "dates": [format_month(d) for d in self.dates],
            "month": [d[1] for d in self.dates],
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
        }, indent=2)


@dataclass(frozen=True)
class MonthComparison:
    month: int
    intercept: float
    slope: float
    r_squared: float
    n: int
    ok: bool  # False when fewer than 3 points or a degenerate regressor


@dataclass(frozen=True)
class NormComparison:
    """Per-calendar-month OLS of one extraction on another (12 records)."""

    records: tuple[MonthComparison, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["month", "intercept", "slope", "r_squared", "n", "ok"])
        for r in self.records:
            w.writerow([r.month, repr(r.intercept), repr(r.slope),
                        repr(r.r_squared), r.n, r.ok])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([r.__dict__ for r in self.records], indent=2)


def extract_factor(fit: FitResult, panel: IndicatorPanel,
                   design: DesignMatrix) -> ExtractedSeries:
    """Smoothed mean and standard deviation at the fitted parameters."""
    if not fit.converged:
        raise InputError("fit did not converge; refusing to extract")
    init = unconditional_init(fit.params, design.matrix[0])
    sm = kalman_smoother(fit.params, panel, design, init)
    return ExtractedSeries(dates=panel.dates, mean=sm.smoothed_mean,
                           sd=np.sqrt(np.maximum(sm.smoothed_var, 0.0)),
                           anchor=fit.names[fit.params.anchor])


def compare_normalizations(extraction_x: ExtractedSeries,
                           extraction_y: ExtractedSeries) -> NormComparison:
    """OLS of ``extraction_y`` on ``extraction_x``, one regression per
    calendar month (12 records)."""
    if extraction_x.dates != extraction_y.dates:
        raise InputError("extractions must share the same date index")
    months = np.array([d[1] for d in extraction_x.dates])
    records = []
    for m in range(1, 13):
        sel = months == m
        x = extraction_x.mean[sel]
        y = extraction_y.mean[sel]
        n = int(sel.sum())
        if n < 3 or np.ptp(x) == 0.0:
            records.append(MonthComparison(month=m, intercept=np.nan,
                                           slope=np.nan, r_squared=np.nan,
                                           n=n, ok=False))
            continue
        X = np.column_stack([np.ones(n), x])
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        sst = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 if sst == 0.0 else 1.0 - float(resid @ resid) / sst
        records.append(MonthComparison(month=m, intercept=float(beta[0]),
                                       slope=float(beta[1]),
                                       r_squared=r2, n=n, ok=True))
    return NormComparison(records=tuple(records))
