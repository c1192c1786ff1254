"""Synthetic confounded datasets for tests and calibration runs.

Covariates are drawn multivariate normal (Cholesky factor of the
correlation matrix, scaled by the per-variable SDs), treatment is
Bernoulli with a logistic selection model on the covariates, and the
outcome is a linear model plus a true treatment effect and standard-normal
noise.  All randomness comes from one :class:`~psmatch.rng.SplitMix64`
stream consumed in a fixed order (per unit: the covariate normals, one
uniform for treatment, one normal for noise), so a seed pins the dataset
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import parse_config_file, parse_float_list, parse_name_list
from .dataset import Dataset, _fmt17
from .errors import InputError, NotPositiveDefinite
from .rng import SplitMix64


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one simulated dataset."""

    n: int
    means: tuple[float, ...]
    sds: tuple[float, ...]
    corr: np.ndarray
    select_intercept: float = 0.0
    select_slopes: tuple[float, ...] = ()
    outcome_intercept: float = 0.0
    outcome_slopes: tuple[float, ...] = ()
    effect: float = 0.0
    seed: int = 0
    names: tuple[str, ...] = ()
    treatment_name: str = "treat"
    outcome_name: str = "y"

    def __post_init__(self):
        p = len(self.means)
        if self.n < 2:
            raise InputError("simulation needs n >= 2")
        if p == 0:
            raise InputError("simulation needs at least one covariate")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{j + 1}" for j in range(p)))
        if not self.select_slopes:
            object.__setattr__(self, "select_slopes", (0.0,) * p)
        if not self.outcome_slopes:
            object.__setattr__(self, "outcome_slopes", (0.0,) * p)
        for label, seq in (
            ("sds", self.sds),
            ("names", self.names),
            ("select_slopes", self.select_slopes),
            ("outcome_slopes", self.outcome_slopes),
        ):
            if len(seq) != p:
                raise InputError(f"{label} must have {p} entries, got {len(seq)}")
        corr = np.asarray(self.corr, dtype=float)
        if corr.shape != (p, p):
            raise InputError(f"correlation matrix must be {p}x{p}")
        if not np.allclose(corr, corr.T, atol=1e-12):
            raise NotPositiveDefinite("correlation matrix is not symmetric")
        object.__setattr__(self, "corr", corr)


def _invlogit(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def simulate(spec: SimSpec) -> Dataset:
    """Generate one dataset from the spec; deterministic per seed."""
    p = len(spec.means)
    try:
        chol = np.linalg.cholesky(spec.corr)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("correlation matrix is not positive definite") from None

    rng = SplitMix64(spec.seed)
    means = np.asarray(spec.means)
    sds = np.asarray(spec.sds)
    s_slopes = np.asarray(spec.select_slopes)
    o_slopes = np.asarray(spec.outcome_slopes)

    covariates = np.empty((spec.n, p))
    treatment = np.empty(spec.n, dtype=np.int64)
    outcome = np.empty(spec.n)
    for i in range(spec.n):
        z = np.array([rng.normal() for _ in range(p)])
        x = means + sds * (chol @ z)
        covariates[i] = x
        propensity = _invlogit(spec.select_intercept + float(s_slopes @ x))
        treatment[i] = 1 if rng.random() < propensity else 0
        noise = rng.normal()
        outcome[i] = (
            spec.outcome_intercept + float(o_slopes @ x) + spec.effect * treatment[i] + noise
        )

    return Dataset(
        unit_ids=tuple(str(i + 1) for i in range(spec.n)),
        treatment=treatment,
        covariate_names=spec.names,
        covariates=covariates,
        extra={spec.outcome_name: tuple(_fmt17(v) for v in outcome)},
        treatment_name=spec.treatment_name,
    )


def _parse_corr(text: str, p: int) -> np.ndarray:
    rows = [parse_float_list(row) for row in text.split(";") if row.strip()]
    if len(rows) != p or any(len(r) != p for r in rows):
        raise InputError(f"correlation matrix must be {p}x{p} ('row1;row2;...')")
    return np.array(rows)


def sim_spec_from_mapping(options: dict[str, str]) -> SimSpec:
    """Build a SimSpec from parsed config keys.

    Required: ``n`` and ``means``.  ``corr`` rows are semicolon-separated
    within the value, e.g. ``corr = 1,0.3;0.3,1``; it defaults to the
    identity.  ``sds`` default to 1, slopes and the effect to 0.
    """
    known = {
        "n", "seed", "names", "means", "sds", "corr",
        "select_intercept", "select_slopes",
        "outcome_intercept", "outcome_slopes",
        "effect", "treatment_name", "outcome_name",
    }
    for key in options:
        if key not in known:
            raise InputError(f"unknown simulation option '{key}'")
    if "n" not in options or "means" not in options:
        raise InputError("simulation spec requires 'n' and 'means'")
    try:
        n = int(options["n"])
        seed = int(options.get("seed", "0"))
    except ValueError as exc:
        raise InputError(f"bad integer in simulation spec: {exc}") from None
    means = parse_float_list(options["means"])
    p = len(means)
    sds = parse_float_list(options["sds"]) if "sds" in options else (1.0,) * p
    corr = _parse_corr(options["corr"], p) if "corr" in options else np.eye(p)
    return SimSpec(
        n=n,
        means=means,
        sds=sds,
        corr=corr,
        select_intercept=float(options.get("select_intercept", "0")),
        select_slopes=parse_float_list(options.get("select_slopes", "")),
        outcome_intercept=float(options.get("outcome_intercept", "0")),
        outcome_slopes=parse_float_list(options.get("outcome_slopes", "")),
        effect=float(options.get("effect", "0")),
        seed=seed,
        names=parse_name_list(options.get("names", "")),
        treatment_name=options.get("treatment_name", "treat"),
        outcome_name=options.get("outcome_name", "y"),
    )


def load_sim_spec(path) -> SimSpec:
    """Read a SimSpec from a config file."""
    return sim_spec_from_mapping(parse_config_file(path))
