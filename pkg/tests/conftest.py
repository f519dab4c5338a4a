import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from icefactor.model import IndicatorPanel, ModelParams, build_design_matrix
from icefactor.months import month_range

FIXTURES = Path(__file__).parent / "fixtures"


def random_params(rng: np.random.Generator, n: int,
                  anchor: int = 0) -> ModelParams:
    """A valid random parameter set with the anchor normalization imposed."""
    c = rng.normal(0, 1, n)
    lam = rng.normal(1, 0.3, n)
    c[anchor] = 0.0
    lam[anchor] = 1.0
    A = rng.normal(0, 1, (n, n))
    Sigma = A @ A.T / n + 0.1 * np.eye(n)
    return ModelParams(
        anchor=anchor, c=c, lam=lam, Sigma=Sigma,
        rho=rng.uniform(-0.9, 0.9),
        a=rng.normal(0, 1, 12), b=rng.normal(0, 0.01, 12),
        cq=rng.normal(0, 1e-4, 12),
        sigma2_eta=rng.uniform(0.1, 2.0))


def random_instance(rng: np.random.Generator, T: int, n: int,
                    missing_prob: float = 0.2, start=(1990, 1)):
    """Random (params, panel, design) triple for oracle comparisons."""
    params = random_params(rng, n)
    dates = month_range(start, T)
    design = build_design_matrix(dates, time_origin=start)
    values = rng.normal(0, 3, (T, n))
    mask = rng.random((T, n)) < missing_prob
    panel = IndicatorPanel(dates=dates, values=values, mask=mask,
                           names=tuple(f"Y{i+1}" for i in range(n)),
                           range_check=False)
    return params, panel, design


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
