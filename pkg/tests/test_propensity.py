import math

import numpy as np
import pytest

from psmatch.dataset import ColumnRoles, load_csv
from psmatch.errors import DimensionMismatch, RankDeficient, SeparationDetected
from psmatch.propensity import fit_logistic, predict
from psmatch.rng import SplitMix64

from conftest import FIXTURES, LOGIT_FIXTURES, make_dataset
from oracles import loglik_gradient_fd, newton_logistic


def load_fixture(name):
    covs = LOGIT_FIXTURES[name]
    return load_csv(FIXTURES / name, ColumnRoles(treatment="treat", covariates=covs))


def test_intercept_only_closed_form():
    ds = make_dataset([1] * 30 + [0] * 70)
    model = fit_logistic(ds)
    assert model.converged
    assert model.coefficients[0] == pytest.approx(math.log(30 / 70), abs=1e-9)
    assert np.allclose(model.scores, 0.30, atol=1e-9)


def test_constant_covariate_rank_deficient():
    ds = make_dataset([0, 1, 0, 1], [[3.0], [3.0], [3.0], [3.0]])
    with pytest.raises(RankDeficient) as err:
        fit_logistic(ds)
    assert err.value.column == "x1"


def test_duplicated_covariate_rank_deficient():
    col = [0.3, -1.2, 0.8, 2.0, -0.5, 1.1]
    ds = make_dataset([0, 1, 0, 1, 0, 1], [[v, 2 * v] for v in col], names=("a", "b"))
    with pytest.raises(RankDeficient) as err:
        fit_logistic(ds)
    assert err.value.column == "b"


def test_matches_newton_oracle_on_fixture():
    ds = load_fixture("logit_n50_p2.csv")
    model = fit_logistic(ds)
    x = np.column_stack([np.ones(ds.n), ds.covariates])
    expected = newton_logistic(x, ds.treatment.astype(float), tol=1e-10)
    assert np.max(np.abs(model.coefficients - expected)) < 1e-6


def test_gradient_zero_at_optimum():
    ds = load_fixture("logit_n50_p3.csv")
    model = fit_logistic(ds)
    x = np.column_stack([np.ones(ds.n), ds.covariates])
    y = ds.treatment.astype(float)
    mu = 1.0 / (1.0 + np.exp(-(x @ model.coefficients)))
    analytic = x.T @ (y - mu)
    assert np.max(np.abs(analytic)) < 1e-6
    fd = loglik_gradient_fd(model.coefficients, x, y, step=1e-5)
    scale = np.maximum(np.abs(fd), 1.0)
    assert np.max(np.abs(analytic - fd) / scale) < 1e-4


def test_scores_invariant_under_affine_rescaling():
    ds = load_fixture("logit_n50_p2.csv")
    model = fit_logistic(ds)
    rescaled = make_dataset(
        ds.treatment,
        np.column_stack([ds.covariates[:, 0] * 3.5 - 12.0, ds.covariates[:, 1]]),
        names=("x1", "x2"),
    )
    model2 = fit_logistic(rescaled)
    assert np.max(np.abs(model.scores - model2.scores)) < 1e-8


def test_deterministic_fit():
    ds = load_fixture("logit_n50_p4.csv")
    a = fit_logistic(ds)
    b = fit_logistic(ds)
    assert np.array_equal(a.coefficients, b.coefficients)
    assert np.array_equal(a.scores, b.scores)


def test_logits_match_scores():
    ds = load_fixture("logit_n50_p2.csv")
    model = fit_logistic(ds)
    expected = np.log(model.scores / (1 - model.scores))
    assert np.max(np.abs(model.logits - expected)) < 1e-9
    assert np.all(model.scores > 0) and np.all(model.scores < 1)


def test_separation_is_fatal():
    # covariate perfectly separates the groups
    x = [[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]]
    ds = make_dataset([0, 0, 0, 1, 1, 1], x)
    with pytest.raises(SeparationDetected):
        fit_logistic(ds)


def test_predict_basics():
    ds = load_fixture("logit_n50_p2.csv")
    model = fit_logistic(ds)
    beta = model.coefficients
    x = np.array([0.4, -1.0])
    expected = 1.0 / (1.0 + math.exp(-(beta[0] + beta[1] * 0.4 + beta[2] * -1.0)))
    assert predict(model, x) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        predict(model, np.array([1.0]))


def test_predict_unit_slope_model():
    from psmatch.propensity import PropensityModel

    model = PropensityModel(
        coefficients=np.array([0.0, 1.0]),
        scores=np.array([0.5]),
        logits=np.array([0.0]),
        converged=True,
        iterations=1,
        log_likelihood=0.0,
        covariate_names=("x",),
    )
    assert predict(model, np.array([0.0])) == 0.5
    assert predict(model, np.array([-1e6])) == pytest.approx(1e-12, abs=1e-13)
    assert predict(model, np.array([2.0])) < predict(model, np.array([3.0]))


def test_predict_zero_model_and_clamp():
    ds = make_dataset([1] * 5 + [0] * 5, [[0.0]] * 4 + [[1.0]] + [[0.0]] * 4 + [[1.0]])
    model = fit_logistic(ds)
    # balanced groups, uninformative covariate: probability near one half
    assert predict(model, np.array([0.5])) == pytest.approx(0.5, abs=1e-6)
    # extreme input hits the clamp
    assert predict(model, np.array([1e9])) >= 1e-12
    assert predict(model, np.array([-1e9])) <= 1 - 1e-12


def test_predict_matches_fit_scores():
    ds = load_fixture("logit_n50_p3.csv")
    model = fit_logistic(ds)
    rng = SplitMix64(5)
    for _ in range(10):
        i = rng.randbelow(ds.n)
        assert predict(model, ds.covariates[i]) == pytest.approx(model.scores[i], abs=1e-9)
