"""Small helpers for (year, month) calendar arithmetic.

Months are represented as ``(year, month)`` integer pairs with month in
1..12, serialized as ``YYYY-MM``.  Arithmetic on plain tuples keeps panel
indexing trivially hashable and avoids any timezone/day-of-month baggage.
"""

from __future__ import annotations

import re

from .errors import InputError

Month = tuple[int, int]

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def month_ordinal(m: Month) -> int:
    """Map a month to a consecutive integer index."""
    return m[0] * 12 + (m[1] - 1)


def month_add(m: Month, k: int) -> Month:
    o = month_ordinal(m) + k
    return (o // 12, o % 12 + 1)


def months_between(later: Month, earlier: Month) -> int:
    return month_ordinal(later) - month_ordinal(earlier)


def month_range(start: Month, periods: int) -> tuple[Month, ...]:
    return tuple(month_add(start, k) for k in range(periods))


def parse_month(text: str) -> Month:
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise InputError(f"expected month as YYYY-MM, got {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise InputError(f"month out of range in {text!r}")
    return (year, month)


def format_month(m: Month) -> str:
    return f"{m[0]:04d}-{m[1]:02d}"


def check_consecutive(dates) -> None:
    """Raise InputError unless dates are consecutive calendar months."""
    if len(dates) == 0:
        raise InputError("empty date index")
    for prev, cur in zip(dates, dates[1:]):
        if month_ordinal(cur) != month_ordinal(prev) + 1:
            raise InputError(
                f"dates must be consecutive months; gap between "
                f"{format_month(prev)} and {format_month(cur)}"
            )
