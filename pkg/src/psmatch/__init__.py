"""Propensity score matching with balance diagnostics.

Pipeline: load a unit-level CSV, estimate propensity scores by logistic
regression, match treated to control units by greedy nearest-neighbor
search (caliper / ratio / replacement / common-support options), quantify
covariate balance before and after, render diagnostic plots, and export
the matched dataset with scores and weights appended.
"""

from .balance import (
    L1Result,
    OmnibusResult,
    SampleSizes,
    TermBalance,
    condensed_table,
    l1_measure,
    omnibus_d2,
    sample_size_table,
    smd_table,
)
from .dataset import ColumnRoles, Dataset, export, load_csv, write_csv
from .diagnostics import OutcomeSummary, kde, render_plots, render_report
from .matcher import MatchResult, MatchSpec, common_support, match
from .propensity import PropensityModel, fit_logistic, predict
from .rng import SplitMix64
from .simgen import SimSpec, load_sim_spec, simulate

__version__ = "0.1.0"

__all__ = [
    "ColumnRoles",
    "Dataset",
    "L1Result",
    "MatchResult",
    "MatchSpec",
    "OmnibusResult",
    "OutcomeSummary",
    "PropensityModel",
    "SampleSizes",
    "SimSpec",
    "SplitMix64",
    "TermBalance",
    "common_support",
    "condensed_table",
    "export",
    "fit_logistic",
    "kde",
    "l1_measure",
    "load_csv",
    "load_sim_spec",
    "match",
    "omnibus_d2",
    "predict",
    "render_plots",
    "render_report",
    "sample_size_table",
    "simulate",
    "smd_table",
    "write_csv",
]
