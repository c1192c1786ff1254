import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from psmatch.dataset import Dataset
from psmatch.propensity import PropensityModel

FIXTURES = Path(__file__).parent / "fixtures"

LOGIT_FIXTURES = {
    "logit_n50_p2.csv": ("x1", "x2"),
    "logit_n50_p3.csv": ("x1", "x2", "x3"),
    "logit_n50_p4.csv": ("x1", "x2", "x3", "x4"),
}


def make_dataset(treatment, covariates=None, names=None, balance=None,
                 balance_names=(), extra=None):
    """Small in-memory Dataset builder for tests."""
    treatment = np.asarray(treatment, dtype=np.int64)
    n = treatment.size
    if covariates is None:
        covariates = np.empty((n, 0))
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates[:, None]
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
    if balance is None:
        balance = np.empty((n, 0))
    balance = np.asarray(balance, dtype=float)
    if balance.ndim == 1:
        balance = balance[:, None]
    return Dataset(
        unit_ids=tuple(str(i + 1) for i in range(n)),
        treatment=treatment,
        covariate_names=tuple(names),
        covariates=covariates,
        balance_names=tuple(balance_names),
        balance_only=balance,
        extra=dict(extra or {}),
    )


def fake_model(scores, covariate_names=()):
    """PropensityModel wrapper around given scores (for matcher-only tests)."""
    scores = np.clip(np.asarray(scores, dtype=float), 1e-12, 1 - 1e-12)
    return PropensityModel(
        coefficients=np.zeros(len(covariate_names) + 1),
        scores=scores,
        logits=np.log(scores / (1 - scores)),
        converged=True,
        iterations=0,
        log_likelihood=0.0,
        covariate_names=tuple(covariate_names),
    )


@pytest.fixture
def fixtures_dir():
    return FIXTURES
