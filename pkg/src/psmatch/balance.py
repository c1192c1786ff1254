"""Covariate balance statistics before and after matching.

Four families of diagnostics:

* Per-term standardized mean differences: group mean difference divided by
  the control-group standard deviation.  The denominator is always the
  full (pre-matching) control SD with an n-1 denominator, so before and
  after values are directly comparable.  Terms optionally expand to all
  quadratic and pairwise interaction terms of the covariates and
  balance-only columns.
* A condensed table of large imbalances (|SMD| above a threshold, sorted
  by magnitude).
* The omnibus chi-square imbalance test of Hansen & Bowers (2008): a
  Mahalanobis-form statistic over all group mean differences.  Only
  defined for unweighted samples (all weights 0 or 1).
* The L1 multivariate imbalance measure of Iacus, King & Porro (2009):
  half the summed absolute difference of within-group relative frequencies
  over a coarsened multivariate contingency table.  Identical bins are
  used before and after matching so the two values are comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .dataset import Dataset
from .errors import SingularCovariance
from .matcher import (
    DISCARDED_SUPPORT,
    MATCHED,
    UNMATCHED_NO_MATCH,
    UNUSED_CONTROL,
    MatchResult,
)

SMD_THRESHOLD = 0.25
L1_MAX_BINS = 20
L1_CATEGORY_LIMIT = 10
PINV_RCOND = 1e-10


@dataclass(frozen=True)
class TermBalance:
    """Balance statistics for one term in one phase.

    ``smd`` is NaN (with ``zero_variance`` set) when the control group has
    no spread on the term.
    """

    term: str
    kind: str  # "linear", "quadratic", or "interaction"
    mean_t: float
    mean_c: float
    sd_c: float
    smd: float
    phase: str  # "before" or "after"
    zero_variance: bool = False


@dataclass(frozen=True)
class OmnibusResult:
    """Omnibus imbalance test outcome.

    ``computed`` is False when the sample is weighted (weights outside
    {0, 1}), for which the test is not defined here.
    """

    statistic: float
    df: int
    p_value: float
    computed: bool


@dataclass(frozen=True)
class L1Result:
    """L1 imbalance before and after matching, with the shared binning."""

    l1_before: float
    l1_after: float
    bins: tuple[tuple[str, str, tuple[float, ...]], ...]  # (name, scheme, edges/values)


@dataclass(frozen=True)
class GroupCounts:
    total: int
    matched: int
    discarded_support: int
    unmatched_no_match: int
    unused_control: int


@dataclass(frozen=True)
class SampleSizes:
    treated: GroupCounts
    control: GroupCounts


def _is_binary(column: np.ndarray) -> bool:
    return bool(np.all((column == 0.0) | (column == 1.0)))


def term_columns(ds: Dataset, expand: bool) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Build the term matrix: base columns, then squares, then interactions.

    Base terms are the estimation covariates followed by the balance-only
    columns.  With ``expand``, squared terms are added for every non-binary
    base column (a 0/1 column equals its own square) and one interaction
    for every unordered pair of base columns.
    """
    names = list(ds.covariate_names) + list(ds.balance_names)
    block = np.hstack([ds.covariates, ds.balance_only])
    kinds = ["linear"] * len(names)
    columns = [block[:, j] for j in range(block.shape[1])]
    if expand:
        for j, name in enumerate(list(names)):
            if not _is_binary(block[:, j]):
                names.append(f"{name}^2")
                kinds.append("quadratic")
                columns.append(block[:, j] ** 2)
        base = len(ds.covariate_names) + len(ds.balance_names)
        base_names = list(ds.covariate_names) + list(ds.balance_names)
        for a in range(base):
            for b in range(a + 1, base):
                names.append(f"{base_names[a]}*{base_names[b]}")
                kinds.append("interaction")
                columns.append(block[:, a] * block[:, b])
    matrix = np.column_stack(columns) if columns else np.empty((ds.n, 0))
    return tuple(names), tuple(kinds), matrix


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    total = float(np.sum(weights))
    if total <= 0.0:
        return math.nan
    return float(np.sum(weights * values) / total)


def smd_table(
    ds: Dataset,
    result: MatchResult | None,
    phase: str,
    expand: bool = False,
) -> list[TermBalance]:
    """Standardized mean differences for every term in one phase.

    Before-phase means are unweighted; after-phase means use the match
    weights (so unmatched units drop out and ratio/replacement weights
    count).  The SMD denominator is the unmatched control-group SD in both
    phases.  Zero-variance terms are reported inline with a NaN SMD.
    """
    if phase not in ("before", "after"):
        raise ValueError(f"phase must be 'before' or 'after', got {phase!r}")
    if phase == "after" and result is None:
        raise ValueError("after-phase balance requires a match result")

    names, kinds, matrix = term_columns(ds, expand)
    treated = ds.treated_mask
    control = ds.control_mask
    if phase == "after":
        weights = np.asarray(result.weights, dtype=float)
    else:
        weights = np.ones(ds.n)

    out = []
    for j, name in enumerate(names):
        column = matrix[:, j]
        mean_t = _weighted_mean(column[treated], weights[treated])
        mean_c = _weighted_mean(column[control], weights[control])
        sd_c = float(np.std(column[control], ddof=1)) if int(np.sum(control)) > 1 else 0.0
        if sd_c > 0.0:
            smd = (mean_t - mean_c) / sd_c
            zero_var = False
        else:
            smd = math.nan
            zero_var = True
        out.append(
            TermBalance(
                term=name,
                kind=kinds[j],
                mean_t=mean_t,
                mean_c=mean_c,
                sd_c=sd_c,
                smd=smd,
                phase=phase,
                zero_variance=zero_var,
            )
        )
    return out


def condensed_table(terms: list[TermBalance], threshold: float = SMD_THRESHOLD) -> list[TermBalance]:
    """Terms with |SMD| above the threshold, sorted by |SMD| descending.

    An empty result is valid (and desirable).  NaN SMDs never qualify.
    """
    large = [t for t in terms if not math.isnan(t.smd) and abs(t.smd) > threshold]
    return sorted(large, key=lambda t: -abs(t.smd))


def omnibus_d2(ds: Dataset, result: MatchResult | None, phase: str) -> OmnibusResult:
    """Omnibus chi-square test over all covariate mean differences.

    The statistic is d' Cov[d]^-1 d where d is the vector of
    treated-control mean differences over covariates and balance-only
    columns, and Cov[d] = (1/n_t + 1/n_c) times the pooled within-group
    covariance (n-2 denominator).  A near-singular covariance is inverted
    by pseudo-inverse with the degrees of freedom reduced to the numerical
    rank.  On weighted data (any weight outside {0, 1}) the test is not
    computed and ``computed`` is False.
    """
    if phase not in ("before", "after"):
        raise ValueError(f"phase must be 'before' or 'after', got {phase!r}")
    names, _, matrix = term_columns(ds, expand=False)
    if phase == "after":
        weights = np.asarray(result.weights, dtype=float)
        if not np.all((weights == 0.0) | (weights == 1.0)):
            return OmnibusResult(math.nan, 0, math.nan, computed=False)
        keep = weights == 1.0
    else:
        keep = np.ones(ds.n, dtype=bool)

    x_t = matrix[keep & ds.treated_mask]
    x_c = matrix[keep & ds.control_mask]
    n_t, n_c = x_t.shape[0], x_c.shape[0]
    if n_t < 1 or n_c < 1 or n_t + n_c < 3 or len(names) == 0:
        return OmnibusResult(math.nan, 0, math.nan, computed=False)

    d = x_t.mean(axis=0) - x_c.mean(axis=0)
    dev_t = x_t - x_t.mean(axis=0)
    dev_c = x_c - x_c.mean(axis=0)
    pooled = (dev_t.T @ dev_t + dev_c.T @ dev_c) / (n_t + n_c - 2)
    cov_d = (1.0 / n_t + 1.0 / n_c) * pooled

    singular_values = np.linalg.svd(cov_d, compute_uv=False)
    rank = int(np.sum(singular_values > PINV_RCOND * singular_values[0])) if singular_values[0] > 0 else 0
    if rank == 0:
        raise SingularCovariance("covariance of group differences has rank zero")
    inverse = np.linalg.pinv(cov_d, rcond=PINV_RCOND)
    statistic = max(float(d @ inverse @ d), 0.0)
    p_value = float(chi2.sf(statistic, rank))
    return OmnibusResult(statistic=statistic, df=rank, p_value=p_value, computed=True)


def _bin_variable(column: np.ndarray) -> tuple[str, np.ndarray]:
    """Choose the coarsening for one variable from the pooled unmatched sample.

    Variables with few distinct values keep those values as categories;
    otherwise bin count comes from Scott's rule (3.49 * sd * n^(-1/3)),
    clamped to [1, 20], with equal-width bins over the observed range.
    """
    uniques = np.unique(column)
    if uniques.size <= L1_CATEGORY_LIMIT:
        return "categories", uniques
    n = column.size
    sd = float(np.std(column, ddof=1))
    lo, hi = float(uniques[0]), float(uniques[-1])
    width = 3.49 * sd * n ** (-1.0 / 3.0)
    n_bins = int(np.clip(math.ceil((hi - lo) / width), 1, L1_MAX_BINS)) if width > 0 else 1
    return "edges", np.linspace(lo, hi, n_bins + 1)


def _cell_indices(column: np.ndarray, scheme: str, edges: np.ndarray) -> np.ndarray:
    if scheme == "categories":
        return np.searchsorted(edges, column)
    n_bins = edges.size - 1
    lo, hi = edges[0], edges[-1]
    span = hi - lo
    idx = np.floor((column - lo) / span * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def l1_measure(ds: Dataset, result: MatchResult) -> L1Result:
    """L1 imbalance over the coarsened joint distribution of all terms.

    Before-phase frequencies are unweighted relative frequencies within
    each group; the after phase uses the match weights normalized within
    group.  Both phases share the binning chosen on the pooled unmatched
    sample, and cells are stored sparsely.
    """
    names, _, matrix = term_columns(ds, expand=False)
    schemes = []
    cell_idx = np.empty((ds.n, len(names)), dtype=np.int64)
    for j, name in enumerate(names):
        scheme, edges = _bin_variable(matrix[:, j])
        schemes.append((name, scheme, tuple(float(e) for e in edges)))
        cell_idx[:, j] = _cell_indices(matrix[:, j], scheme, edges)

    treated = ds.treated_mask
    weights_after = np.asarray(result.weights, dtype=float)

    def half_l1(weights: np.ndarray) -> float:
        # A group with zero total weight contributes empty frequencies.
        t_total = float(np.sum(weights[treated])) or 1.0
        c_total = float(np.sum(weights[~treated])) or 1.0
        cells: dict[tuple[int, ...], list[float]] = {}
        for i in range(ds.n):
            w = float(weights[i])
            if w == 0.0:
                continue
            key = tuple(cell_idx[i])
            entry = cells.setdefault(key, [0.0, 0.0])
            if treated[i]:
                entry[0] += w / t_total
            else:
                entry[1] += w / c_total
        return 0.5 * sum(abs(t - c) for t, c in cells.values())

    l1_before = half_l1(np.ones(ds.n))
    l1_after = half_l1(weights_after)
    return L1Result(l1_before=l1_before, l1_after=l1_after, bins=tuple(schemes))


def sample_size_table(ds: Dataset, result: MatchResult) -> SampleSizes:
    """Per-group counts of matched, discarded, and unmatched units."""

    def count(group_mask: np.ndarray) -> GroupCounts:
        rows = np.flatnonzero(group_mask)
        dispositions = [result.disposition[i] for i in rows]
        return GroupCounts(
            total=len(rows),
            matched=sum(d == MATCHED for d in dispositions),
            discarded_support=sum(d == DISCARDED_SUPPORT for d in dispositions),
            unmatched_no_match=sum(d == UNMATCHED_NO_MATCH for d in dispositions),
            unused_control=sum(d == UNUSED_CONTROL for d in dispositions),
        )

    return SampleSizes(treated=count(ds.treated_mask), control=count(ds.control_mask))
