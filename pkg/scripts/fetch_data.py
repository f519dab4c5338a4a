#!/usr/bin/env python3
"""Download the four raw indicator sources and build data/real_panel.csv.

This script needs open internet access; in offline environments place the
raw files under data/raw/ by hand and rerun with --skip-download.  The
sources (and the layouts icefactor expects) are:

  SII      NSIDC Sea Ice Index v3 monthly CSV (Northern Hemisphere):
           https://noaadata.apps.nsidc.org/NOAA/G02135/north/monthly/data/
           (one file per calendar month, e.g. N_01_extent_v3.0.csv;
           concatenate the data rows under a single header)
  JAXA     JAXA/JASMES daily Arctic sea-ice extent CSV (values in km^2):
           https://kuroshio.eorc.jaxa.jp/JASMES/climate/index.html
  Bremen   University of Bremen daily Arctic sea-ice extent text file
           (year month day extent, millions of km^2):
           https://data.seaice.uni-bremen.de/
  Goddard  NASA Goddard Bootstrap (SBA) monthly extent, millions of km^2,
           as a date,extent CSV with YYYY-MM dates:
           https://nsidc.org/data/nsidc-0079

The exact numbers published for the four-indicator application depend on
the provider data vintage (mid-2021); later revisions shift monthly means
by a few 1e-3, which is why the real-data acceptance check carries wide
tolerances and is skipped when this panel is absent.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
RAW = ROOT / "data" / "raw"
PANEL = ROOT / "data" / "real_panel.csv"

SII_MONTHLY_URL = ("https://noaadata.apps.nsidc.org/NOAA/G02135/north/"
                   "monthly/data/N_{month:02d}_extent_v3.0.csv")

EXPECTED = {
    "SII": RAW / "sii_monthly.csv",
    "JAXA": RAW / "jaxa_daily.csv",
    "Bremen": RAW / "bremen_daily.txt",
    "Goddard": RAW / "goddard_monthly.csv",
}


def download_sii() -> None:
    """Fetch the 12 per-month NSIDC files and merge them into one CSV."""
    rows = []
    header = None
    for month in range(1, 13):
        url = SII_MONTHLY_URL.format(month=month)
        print(f"fetching {url}")
        with urllib.request.urlopen(url, timeout=60) as resp:
            lines = resp.read().decode("utf-8").splitlines()
        header = lines[0]
        rows.extend(lines[1:])
    EXPECTED["SII"].write_text("\n".join([header] + sorted(rows)) + "\n")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-download", action="store_true",
                    help="Use files already present under data/raw/.")
    args = ap.parse_args()

    RAW.mkdir(parents=True, exist_ok=True)
    if not args.skip_download:
        try:
            download_sii()
        except OSError as exc:
            print(f"SII download failed: {exc}", file=sys.stderr)
        print("JAXA, Bremen, and Goddard require interactive or "
              "authenticated access; download them manually to:")
        for name in ("JAXA", "Bremen", "Goddard"):
            print(f"  {EXPECTED[name]}")

    missing = [n for n, p in EXPECTED.items() if not p.exists()]
    if missing:
        print(f"missing raw files for: {', '.join(missing)}; "
              "real-data tests will stay skipped", file=sys.stderr)
        return 1

    from icefactor.ingestion import (DEFAULT_SOURCES, build_panel,
                                     parse_source, write_panel_csv)
    series = [parse_source(EXPECTED[name], DEFAULT_SOURCES[name])
              for name in ("SII", "JAXA", "Bremen", "Goddard")]
    panel, report = build_panel(series)
    write_panel_csv(panel, PANEL)
    print(f"wrote {PANEL} ({panel.n_periods} months)")
    print(report.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
