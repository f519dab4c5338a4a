"""Parsing of raw indicator files and panel assembly.

Source file layouts (fixtures for each are committed under tests/fixtures;
vintage: provider formats as of mid-2021):

  * ``sii_csv``      -- NSIDC Sea Ice Index monthly CSV, header
                        ``year,mo,data_type,region,extent,area``; extent in
                        millions of km^2; -9999 marks a missing month.
  * ``monthly_csv``  -- ``date,extent`` with ISO month ``YYYY-MM``; extent
                        in millions of km^2 (Goddard Bootstrap monthly).
  * ``daily_csv``    -- ``date,extent`` with ISO date ``YYYY-MM-DD``; extent
                        in km^2 (JAXA daily, ``unit_scale=1e-6``).
  * ``daily_txt``    -- whitespace-separated ``year month day extent``,
                        '#' comments; extent in millions of km^2 (Bremen
                        daily extent text file).

Daily sources are reduced to unweighted monthly means over available days;
months with fewer than ``min_days`` valid days are masked so a few stray
days cannot masquerade as a monthly mean.

The panel CSV schema is ``date,SII,JAXA,Bremen,Goddard`` with ISO months
and empty cells for missing values; floats are written with ``repr`` so a
write/read round-trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import CANONICAL_NAMES, VALUE_RANGE, IndicatorPanel
from .months import (Month, format_month, month_ordinal, month_range,
                     parse_month)

FORMATS = ("sii_csv", "monthly_csv", "daily_csv", "daily_txt")

#: fraction of unparseable rows tolerated before the file is rejected
BAD_ROW_LIMIT = 0.10


@dataclass(frozen=True)
class SourceSpec:
    name: str
    format: str
    unit_scale: float = 1.0
    min_days: int = 15
    sentinels: tuple[float, ...] = (-9999.0, -999.0)

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InputError(f"unknown source format {self.format!r}")
        if not self.unit_scale > 0:
            raise InputError("unit_scale must be positive")


DEFAULT_SOURCES = {
    "SII": SourceSpec("SII", "sii_csv"),
    "JAXA": SourceSpec("JAXA", "daily_csv", unit_scale=1e-6),
    "Bremen": SourceSpec("Bremen", "daily_txt"),
    "Goddard": SourceSpec("Goddard", "monthly_csv"),
}


@dataclass(frozen=True)
class MonthlySeries:
    name: str
    dates: tuple[Month, ...]   # consecutive months
    values: np.ndarray         # NaN = missing

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, float))


@dataclass
class PanelReport:
    """Per-indicator ingestion counts plus the all-present overlap window."""

    total_months: dict[str, int]
    missing_months: dict[str, int]
    dropped_out_of_range: dict[str, int]
    overlap_start: Month | None
    overlap_end: Month | None

    def to_json(self) -> str:
        return json.dumps({
            "total_months": self.total_months,
            "missing_months": self.missing_months,
            "dropped_out_of_range": self.dropped_out_of_range,
            "overlap_start": None if self.overlap_start is None
            else format_month(self.overlap_start),
            "overlap_end": None if self.overlap_end is None
            else format_month(self.overlap_end),
        }, indent=2)


def _finish_series(spec: SourceSpec, monthly: dict[Month, float],
                   bad_rows: int, total_rows: int) -> MonthlySeries:
    if total_rows and bad_rows / total_rows > BAD_ROW_LIMIT:
        raise InputError(f"{spec.name}: {bad_rows}/{total_rows} rows "
                         "unparseable, format likely wrong")
    if not monthly:
        raise InputError(f"{spec.name}: no parseable observations")
    first = min(monthly, key=month_ordinal)
    last = max(monthly, key=month_ordinal)
    dates = month_range(first, month_ordinal(last) - month_ordinal(first) + 1)
    values = np.array([monthly.get(d, np.nan) for d in dates])
    return MonthlySeries(name=spec.name, dates=dates, values=values)


def _monthly_mean(spec: SourceSpec,
                  daily: dict[Month, list[float]]) -> dict[Month, float]:
    out = {}
    for m, days in daily.items():
        if len(days) >= spec.min_days:
            out[m] = float(np.mean(days))
        else:
            out[m] = np.nan
    return out


def parse_source(path, spec: SourceSpec) -> MonthlySeries:
    """Parse one raw source file into a monthly series in millions of km^2."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    bad = 0
    total = 0
    if spec.format in ("sii_csv", "monthly_csv", "daily_csv"):
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r and any(cell.strip() for cell in r)]
        if not rows:
            raise InputError(f"{spec.name}: empty file")
        header = [h.strip().lower() for h in rows[0]]
        body = rows[1:]
        ncols = {"sii_csv": 6, "monthly_csv": 2, "daily_csv": 2}[spec.format]
        if len(header) != ncols:
            raise InputError(f"{spec.name}: expected {ncols} columns, "
                             f"found {len(header)}")
        monthly: dict[Month, float] = {}
        daily: dict[Month, list[float]] = {}
        for r in body:
            total += 1
            if len(r) != ncols:
                raise InputError(f"{spec.name}: row with {len(r)} columns, "
                                 f"expected {ncols}: {r!r}")
            try:
                if spec.format == "sii_csv":
                    m = (int(r[0]), int(r[1]))
                    v = float(r[4])
                elif spec.format == "monthly_csv":
                    m = parse_month(r[0])
                    v = float(r[1])
                else:
                    y, mo, _day = r[0].strip().split("-")
                    m = (int(y), int(mo))
                    v = float(r[1])
                if not (1 <= m[1] <= 12):
                    raise ValueError("month out of range")
            except (ValueError, InputError):
                bad += 1
                continue
            if v in spec.sentinels:
                v = np.nan
            else:
                v *= spec.unit_scale
            if spec.format == "daily_csv":
                if not np.isnan(v):
                    daily.setdefault(m, []).append(v)
            else:
                monthly[m] = v
        if spec.format == "daily_csv":
            monthly = _monthly_mean(spec, daily)
    else:  # daily_txt
        daily = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            total += 1
            parts = line.split()
            if len(parts) != 4:
                raise InputError(f"{spec.name}: row with {len(parts)} fields, "
                                 f"expected 4: {line!r}")
            try:
                m = (int(parts[0]), int(parts[1]))
                int(parts[2])
                v = float(parts[3])
                if not (1 <= m[1] <= 12):
                    raise ValueError("month out of range")
            except ValueError:
                bad += 1
                continue
            if v not in spec.sentinels:
                daily.setdefault(m, []).append(v * spec.unit_scale)
        monthly = _monthly_mean(spec, daily)
    return _finish_series(spec, monthly, bad, total)


def build_panel(series_list: list[MonthlySeries],
                value_range=VALUE_RANGE) -> tuple[IndicatorPanel, PanelReport]:
    """Align monthly series on the union date range with a missing mask.

    Values outside ``value_range`` are masked and counted as dropped.  With
    all four canonical indicators present, an empty all-present overlap
    window is a hard error.
    """
    if not series_list:
        raise InputError("at least one series required")
    first = min(s.dates[0] for s in series_list)
    last = max(s.dates[-1] for s in series_list)
    dates = month_range(first, month_ordinal(last) - month_ordinal(first) + 1)
    T = len(dates)
    N = len(series_list)
    values = np.full((T, N), np.nan)
    dropped = {}
    for j, s in enumerate(series_list):
        off = month_ordinal(s.dates[0]) - month_ordinal(first)
        col = np.full(T, np.nan)
        col[off:off + len(s.dates)] = s.values
        lo, hi = value_range
        bad = (~np.isnan(col)) & ((col <= lo) | (col > hi))
        dropped[s.name] = int(bad.sum())
        col[bad] = np.nan
        values[:, j] = col
    mask = np.isnan(values)
    names = tuple(s.name for s in series_list)
    panel = IndicatorPanel(dates=dates, values=values, mask=mask, names=names)

    all_present = ~mask.any(axis=1)
    if all_present.any():
        idx = np.nonzero(all_present)[0]
        overlap = (dates[idx[0]], dates[idx[-1]])
    else:
        overlap = (None, None)
        if set(names) == set(CANONICAL_NAMES):
            raise InputError("no month with all four indicators present")
    report = PanelReport(
        total_months={s.name: T for s in series_list},
        missing_months={s.name: int(mask[:, j].sum())
                        for j, s in enumerate(series_list)},
        dropped_out_of_range=dropped,
        overlap_start=overlap[0], overlap_end=overlap[1])
    return panel, report


# ---------------------------------------------------------------------------
# panel CSV round-trip
# ---------------------------------------------------------------------------

def panel_to_csv(panel: IndicatorPanel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", *panel.names])
    for t, d in enumerate(panel.dates):
        row = [format_month(d)]
        for j in range(panel.n_indicators):
            row.append("" if panel.mask[t, j]
                       else repr(float(panel.values[t, j])))
        w.writerow(row)
    return buf.getvalue()


def panel_from_csv(text: str, range_check: bool = True) -> IndicatorPanel:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise InputError("panel CSV needs a header and at least one row")
    header = rows[0]
    if header[0].strip().lower() != "date" or len(header) < 2:
        raise InputError("panel CSV header must be 'date,<indicator names>'")
    names = tuple(h.strip() for h in header[1:])
    dates = []
    values = []
    for r in rows[1:]:
        if len(r) != len(header):
            raise InputError(f"panel CSV row has {len(r)} cells, "
                             f"expected {len(header)}: {r!r}")
        dates.append(parse_month(r[0]))
        values.append([float(cell) if cell.strip() else np.nan
                       for cell in r[1:]])
    values = np.array(values)
    return IndicatorPanel(dates=tuple(dates), values=values,
                          mask=np.isnan(values), names=names,
                          range_check=range_check)


def write_panel_csv(panel: IndicatorPanel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(panel_to_csv(panel))


def read_panel_csv(path, range_check: bool = True) -> IndicatorPanel:
    with open(path, "r", encoding="utf-8") as fh:
        return panel_from_csv(fh.read(), range_check=range_check)
