"""Greedy nearest-neighbor matching on the estimated propensity score.

Treated units are sorted by score (descending, ties broken by input row
order) and matched sequentially.  Options: k:1 ratio matching, matching
with replacement, a caliper expressed in standard deviations of the logit
of the score, and discarding units outside the region of common support.

Matching sequence for ratio k: k full passes over the sorted treated
units, each pass assigning at most one new control per treated unit, so a
scarce control pool is spread across treated units instead of exhausted by
the first few.  When a caliper is set, distances are measured on the logit
scale and, under ``random_within`` mode, the match is drawn uniformly from
all eligible controls inside the caliper; otherwise the nearest eligible
control wins, ties going to the lower row index.

Weights: matched treated units get weight 1; each control matched to a
treated unit with m matched controls gets 1/m per match (summed across
matches when matching with replacement), and the control weights are then
rescaled by one constant so they sum to the number of matched treated
units.  Unmatched and discarded units get weight 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import InvalidSpec, NoControl, NoTreated
from .propensity import PropensityModel
from .rng import SplitMix64

DISCARD_POLICIES = ("none", "treated_only", "control_only", "both")
CALIPER_MODES = ("random_within", "nearest_within")

MATCHED = "matched"
DISCARDED_SUPPORT = "discarded_support"
UNMATCHED_NO_MATCH = "unmatched_no_match"
UNUSED_CONTROL = "unused_control"


@dataclass(frozen=True)
class MatchSpec:
    """User-tunable matching options.

    ``caliper`` is in units of the standard deviation of the logit of the
    score (computed over all units, pre-discard, n-1 denominator);
    ``caliper_mode`` only applies when a caliper is set and defaults to
    the random-within-caliper draw.
    """

    ratio: int = 1
    replace: bool = False
    caliper: float | None = None
    discard: str = "none"
    caliper_mode: str = "random_within"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.ratio, int) or self.ratio < 1:
            raise InvalidSpec(f"ratio must be an integer >= 1, got {self.ratio!r}")
        if self.caliper is not None and not self.caliper > 0:
            raise InvalidSpec(f"caliper must be > 0, got {self.caliper!r}")
        if self.discard not in DISCARD_POLICIES:
            raise InvalidSpec(f"discard must be one of {DISCARD_POLICIES}, got {self.discard!r}")
        if self.caliper_mode not in CALIPER_MODES:
            raise InvalidSpec(
                f"caliper_mode must be one of {CALIPER_MODES}, got {self.caliper_mode!r}"
            )


@dataclass(frozen=True)
class MatchResult:
    """Pair assignments, per-unit weights, and per-unit dispositions.

    ``pairs`` lists (treated_id, control_id) in assignment order;
    ``weights`` and ``disposition`` align with dataset row order.
    """

    pairs: tuple[tuple[str, str], ...]
    weights: np.ndarray
    disposition: tuple[str, ...]
    support_interval: tuple[float, float]
    caliper_width_abs: float | None

    def __post_init__(self):
        self.weights.setflags(write=False)


def common_support(scores_t, scores_c) -> tuple[float, float]:
    """Overlap region of the two groups' score distributions.

    Returns (low, high) with low = max of the group minima and high = min
    of the group maxima; low > high means the supports are disjoint.
    """
    scores_t = np.asarray(scores_t, dtype=float)
    scores_c = np.asarray(scores_c, dtype=float)
    low = max(float(np.min(scores_t)), float(np.min(scores_c)))
    high = min(float(np.max(scores_t)), float(np.max(scores_c)))
    return low, high


def match(model: PropensityModel, ds: Dataset, spec: MatchSpec) -> MatchResult:
    """Run greedy matching and produce pairs, weights, and dispositions.

    Raises :class:`NoTreated` / :class:`NoControl` when the discard policy
    empties a group.  Fixed seed implies a bit-identical result, including
    under the random-within-caliper draw.
    """
    scores = model.scores
    logits = model.logits
    treated_rows = np.flatnonzero(ds.treatment == 1)
    control_rows = np.flatnonzero(ds.treatment == 0)

    low, high = common_support(scores[treated_rows], scores[control_rows])

    outside = (scores < low) | (scores > high)
    discarded = np.zeros(ds.n, dtype=bool)
    if spec.discard in ("treated_only", "both"):
        discarded[treated_rows] = outside[treated_rows]
    if spec.discard in ("control_only", "both"):
        discarded[control_rows] = outside[control_rows]

    active_treated = treated_rows[~discarded[treated_rows]]
    active_controls = control_rows[~discarded[control_rows]]
    if active_treated.size == 0:
        raise NoTreated("all treated units fall outside the region of common support")
    if active_controls.size == 0:
        raise NoControl("all control units fall outside the region of common support")

    caliper_width = None
    if spec.caliper is not None:
        # SD over all units, pre-discard, so the caliper width does not
        # depend on the discard policy.
        caliper_width = spec.caliper * float(np.std(logits, ddof=1))

    positions = logits if spec.caliper is not None else scores
    random_within = spec.caliper is not None and spec.caliper_mode == "random_within"

    # Descending by score, ties broken by input row order.
    order = np.lexsort((active_treated, -scores[active_treated]))
    treated_order = [int(r) for r in active_treated[order]]

    ctrl_pos = positions[active_controls]
    used = np.zeros(active_controls.size, dtype=bool)
    rng = SplitMix64(spec.seed)

    matches: dict[int, list[int]] = {}
    unmatched: set[int] = set()
    pair_rows: list[tuple[int, int]] = []

    for pass_no in range(spec.ratio):
        for t_row in treated_order:
            if t_row in unmatched:
                continue
            if pass_no > 0 and t_row not in matches:
                continue
            dist = np.abs(ctrl_pos - positions[t_row])
            # Fresh mask each draw; a control never re-matches the same
            # treated unit, and is single-use unless matching with replacement.
            eligible = np.ones(active_controls.size, dtype=bool) if spec.replace else ~used
            for c in matches.get(t_row, ()):
                eligible[c] = False
            if caliper_width is not None:
                eligible &= dist <= caliper_width
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                if pass_no == 0:
                    unmatched.add(t_row)
                continue
            if random_within:
                pick = int(candidates[rng.randbelow(candidates.size)])
            else:
                cand_dist = dist[candidates]
                pick = int(candidates[int(np.argmin(cand_dist))])
            used[pick] = True
            matches.setdefault(t_row, []).append(pick)
            pair_rows.append((t_row, pick))

    weights = np.zeros(ds.n)
    for t_row, picks in matches.items():
        weights[t_row] = 1.0
        share = 1.0 / len(picks)
        for c in picks:
            weights[int(active_controls[c])] += share
    n_matched_treated = len(matches)
    control_total = float(np.sum(weights[control_rows]))
    if control_total > 0:
        weights[control_rows] *= n_matched_treated / control_total

    disposition = []
    for i in range(ds.n):
        if discarded[i]:
            disposition.append(DISCARDED_SUPPORT)
        elif ds.treatment[i] == 1:
            if i in matches:
                disposition.append(MATCHED)
            else:
                disposition.append(UNMATCHED_NO_MATCH)
        else:
            disposition.append(MATCHED if weights[i] > 0 else UNUSED_CONTROL)

    pairs = tuple(
        (ds.unit_ids[t], ds.unit_ids[int(active_controls[c])]) for t, c in pair_rows
    )
    return MatchResult(
        pairs=pairs,
        weights=weights,
        disposition=tuple(disposition),
        support_interval=(low, high),
        caliper_width_abs=caliper_width,
    )
