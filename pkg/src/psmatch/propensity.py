"""Logistic-regression propensity scores fit by IRLS.

Treatment assignment is regressed on the estimation covariates with an
intercept; the fitted probabilities are the propensity scores.  The fit is
maximum likelihood via iteratively reweighted least squares, starting from
zero coefficients, with step-halving whenever a full Newton step would
decrease the log-likelihood.

Interaction and quadratic terms are never added automatically; users who
want them supply them as additional columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DimensionMismatch, RankDeficient, SeparationDetected

SCORE_EPS = 1e-12
COEF_TOL = 1e-8
LL_RTOL = 1e-10
MAX_ITER = 100
COEF_LIMIT = 30.0


@dataclass(frozen=True)
class PropensityModel:
    """Fitted logistic model with per-unit scores.

    ``coefficients`` holds the intercept first, then one slope per
    estimation covariate.  ``scores`` are clamped to
    [SCORE_EPS, 1 - SCORE_EPS] so their logits are always finite;
    ``logits`` is computed from the clamped scores.
    """

    coefficients: np.ndarray
    scores: np.ndarray
    logits: np.ndarray
    converged: bool
    iterations: int
    log_likelihood: float
    covariate_names: tuple[str, ...]

    def __post_init__(self):
        self.coefficients.setflags(write=False)
        self.scores.setflags(write=False)
        self.logits.setflags(write=False)


def _inverse_logit(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    exp_eta = np.exp(eta[~pos])
    out[~pos] = exp_eta / (1.0 + exp_eta)
    return out


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # sum(y*eta - log(1 + exp(eta))), computed without overflow
    return float(np.sum(y * eta) - np.sum(np.logaddexp(0.0, eta)))


def _check_full_rank(x: np.ndarray, names: tuple[str, ...]) -> None:
    rank = 0
    for j in range(x.shape[1]):
        new_rank = int(np.linalg.matrix_rank(x[:, : j + 1]))
        if new_rank == rank:
            raise RankDeficient(names[j])
        rank = new_rank


def fit_logistic(ds: Dataset) -> PropensityModel:
    """Fit the propensity model on a dataset's estimation covariates.

    Convergence requires either a max absolute coefficient change below
    1e-8 or a relative log-likelihood change below 1e-10.  Any coefficient
    exceeding 30 in magnitude during iteration, or failure to converge in
    100 iterations, raises :class:`SeparationDetected`: scores at the 0/1
    boundary would make matching meaningless, so this is fatal rather than
    a warning.  Raises :class:`RankDeficient` on a collinear design.
    """
    y = ds.treatment.astype(float)
    x = np.column_stack([np.ones(ds.n), ds.covariates])
    design_names = ("(intercept)", *ds.covariate_names)
    _check_full_rank(x, design_names)

    beta = np.zeros(x.shape[1])
    eta = x @ beta
    ll = _log_likelihood(eta, y)
    converged = False
    iterations = 0

    for iteration in range(1, MAX_ITER + 1):
        iterations = iteration
        mu = _inverse_logit(eta)
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        # Newton step as a weighted least-squares solve on sqrt(W)X
        sw = np.sqrt(w)
        z = (y - mu) / sw
        try:
            delta, *_ = np.linalg.lstsq(sw[:, None] * x, z, rcond=None)
        except np.linalg.LinAlgError:
            raise SeparationDetected("weighted least-squares step failed") from None

        step = 1.0
        for _ in range(30):
            candidate = beta + step * delta
            eta_new = x @ candidate
            ll_new = _log_likelihood(eta_new, y)
            if ll_new >= ll:
                break
            step *= 0.5
        else:
            candidate = beta + step * delta
            eta_new = x @ candidate
            ll_new = _log_likelihood(eta_new, y)

        coef_change = float(np.max(np.abs(candidate - beta)))
        ll_change = abs(ll_new - ll)
        beta, eta, ll_prev, ll = candidate, eta_new, ll, ll_new

        if float(np.max(np.abs(beta))) > COEF_LIMIT:
            raise SeparationDetected(
                "coefficient magnitude exceeded 30; treatment groups appear separable"
            )
        if coef_change < COEF_TOL or ll_change < LL_RTOL * (abs(ll_prev) + 1e-30):
            converged = True
            break

    if not converged:
        raise SeparationDetected(f"no convergence after {MAX_ITER} iterations")

    scores = np.clip(_inverse_logit(eta), SCORE_EPS, 1.0 - SCORE_EPS)
    logits = np.log(scores / (1.0 - scores))
    return PropensityModel(
        coefficients=beta,
        scores=scores,
        logits=logits,
        converged=converged,
        iterations=iterations,
        log_likelihood=ll,
        covariate_names=ds.covariate_names,
    )


def predict(model: PropensityModel, x) -> float:
    """Score a single covariate vector with a fitted model."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(model.covariate_names),):
        raise DimensionMismatch(
            f"expected {len(model.covariate_names)} covariates, got {x.shape}"
        )
    eta = float(model.coefficients[0] + model.coefficients[1:] @ x)
    p = float(_inverse_logit(np.array([eta]))[0])
    return min(max(p, SCORE_EPS), 1.0 - SCORE_EPS)
