"""Tests for month arithmetic, core types, and the design matrix."""

import numpy as np
import pytest

from icefactor.errors import InputError
from icefactor.model import (ANCHOR_LETTERS, CANONICAL_NAMES, IndicatorPanel,
                             ModelParams, anchor_index, build_design_matrix,
                             transition_mean, unconditional_init)
from icefactor.months import (check_consecutive, format_month, month_add,
                              month_ordinal, month_range, months_between,
                              parse_month)
from conftest import random_params


# ---------------------------------------------------------------------------
# months
# ---------------------------------------------------------------------------

def test_month_roundtrip_and_arithmetic():
    assert parse_month("1978-11") == (1978, 11)
    assert format_month((1978, 11)) == "1978-11"
    assert month_add((1978, 11), 2) == (1979, 1)
    assert month_add((1979, 1), -2) == (1978, 11)
    assert months_between((1979, 1), (1978, 11)) == 2
    assert month_ordinal((1979, 1)) - month_ordinal((1978, 12)) == 1


def test_month_range_is_consecutive():
    dates = month_range((2020, 10), 5)
    assert dates == ((2020, 10), (2020, 11), (2020, 12), (2021, 1), (2021, 2))
    check_consecutive(dates)


@pytest.mark.parametrize("bad", ["1978-13", "1978-00", "nov 1978", "1978/11",
                                 "78-11"])
def test_parse_month_rejects_malformed(bad):
    with pytest.raises(InputError):
        parse_month(bad)


def test_check_consecutive_rejects_gaps_and_empty():
    with pytest.raises(InputError):
        check_consecutive(((1990, 1), (1990, 3)))
    with pytest.raises(InputError):
        check_consecutive(())


# ---------------------------------------------------------------------------
# IndicatorPanel
# ---------------------------------------------------------------------------

def _panel(values, mask=None, **kw):
    values = np.asarray(values, dtype=float)
    if mask is None:
        mask = np.isnan(values)
    T, n = values.shape
    return IndicatorPanel(dates=month_range((1990, 1), T), values=values,
                          mask=mask, names=tuple(f"Y{i+1}" for i in range(n)),
                          **kw)


def test_panel_basic_shape_and_mask():
    p = _panel([[12.0, 13.0], [np.nan, 12.5]])
    assert p.n_periods == 2 and p.n_indicators == 2
    assert p.mask[1, 0] and not p.mask[0, 0]
    assert np.isnan(p.values[1, 0])


def test_panel_is_immutable():
    p = _panel([[12.0, 13.0]])
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_panel_range_check():
    with pytest.raises(InputError):
        _panel([[12.0, 45.0]])
    with pytest.raises(InputError):
        _panel([[12.0, 0.0]])  # range is open at zero
    _panel([[12.0, 45.0]], range_check=False)  # synthetic data opt-out


def test_panel_rejects_inconsistencies():
    with pytest.raises(InputError):
        _panel([[12.0, np.nan]], mask=np.zeros((1, 2), dtype=bool))
    with pytest.raises(InputError):
        IndicatorPanel(dates=((1990, 1),), values=np.ones((2, 1)),
                       mask=np.zeros((2, 1), dtype=bool), names=("A",))
    with pytest.raises(InputError):
        IndicatorPanel(dates=((1990, 1),), values=12 * np.ones((1, 2)),
                       mask=np.zeros((1, 2), dtype=bool), names=("A",))


# ---------------------------------------------------------------------------
# ModelParams
# ---------------------------------------------------------------------------

def test_params_anchor_normalization_enforced(rng):
    p = random_params(rng, 3, anchor=1)
    assert p.lam[1] == 1.0 and p.c[1] == 0.0
    with pytest.raises(InputError):
        ModelParams(anchor=0, c=[0.1, 0.0], lam=[1.0, 1.0],
                    Sigma=np.eye(2), rho=0.5, a=np.zeros(12),
                    b=np.zeros(12), cq=np.zeros(12), sigma2_eta=1.0)


def test_params_validation(rng):
    good = random_params(rng, 2)
    for field, bad in [("rho", 1.0), ("rho", -1.01), ("sigma2_eta", 0.0)]:
        kw = good.to_dict()
        kw[field] = bad
        with pytest.raises(InputError):
            ModelParams.from_dict(kw)
    kw = good.to_dict()
    kw["Sigma"] = [[1.0, 2.0], [2.0, 1.0]]  # symmetric but indefinite
    with pytest.raises(InputError):
        ModelParams.from_dict(kw)
    kw["Sigma"] = [[1.0, 0.5], [0.4, 1.0]]  # asymmetric
    with pytest.raises(InputError):
        ModelParams.from_dict(kw)


def test_params_json_roundtrip(rng):
    p = random_params(rng, 4)
    q = ModelParams.from_json(p.to_json())
    assert q.anchor == p.anchor
    np.testing.assert_array_equal(q.c, p.c)
    np.testing.assert_array_equal(q.lam, p.lam)
    np.testing.assert_array_equal(q.Sigma, p.Sigma)
    np.testing.assert_array_equal(q.gamma, p.gamma)
    assert q.rho == p.rho and q.sigma2_eta == p.sigma2_eta


def test_gamma_stacks_a_b_cq(rng):
    p = random_params(rng, 2)
    np.testing.assert_array_equal(p.gamma[:12], p.a)
    np.testing.assert_array_equal(p.gamma[12:24], p.b)
    np.testing.assert_array_equal(p.gamma[24:], p.cq)


# ---------------------------------------------------------------------------
# design matrix and transition helpers
# ---------------------------------------------------------------------------

def test_design_matrix_structure():
    dates = month_range((1978, 11), 15)
    d = build_design_matrix(dates, time_origin=(1978, 11))
    assert d.matrix.shape == (15, 36)
    for t, date in enumerate(dates):
        row = d.matrix[t]
        m = date[1] - 1
        time = t + 1  # origin is the first sample month here
        assert row[m] == 1.0
        assert row[12 + m] == time
        assert row[24 + m] == time ** 2
        # exactly three nonzero entries, all in this month's columns
        assert np.count_nonzero(row) == 3


def test_design_matrix_origin_shift():
    dates = month_range((1980, 1), 3)
    d = build_design_matrix(dates, time_origin=(1979, 11))
    assert d.matrix[0, 12] == 3.0  # Jan 1980 is TIME = 3 from Nov 1979


def test_transition_mean_and_unconditional_init(rng):
    p = random_params(rng, 2)
    d = build_design_matrix(month_range((1990, 1), 2), time_origin=(1990, 1))
    det = float(d.matrix[1] @ p.gamma)
    assert transition_mean(p, d.matrix[1], 2.0) == pytest.approx(
        p.rho * 2.0 + det)
    init = unconditional_init(p, d.matrix[0])
    d1 = float(d.matrix[0] @ p.gamma)
    assert init.mean == pytest.approx(d1 / (1 - p.rho))
    assert init.variance == pytest.approx(p.sigma2_eta / (1 - p.rho ** 2))


def test_anchor_index_resolution():
    assert anchor_index(2) == 2
    assert anchor_index("Bremen") == 2
    for k, letter in enumerate(ANCHOR_LETTERS):
        assert anchor_index(letter, CANONICAL_NAMES) == k
    assert anchor_index("B", ("A", "B")) == 1  # name match
    with pytest.raises(InputError):
        anchor_index("Q")
