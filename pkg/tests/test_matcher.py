import numpy as np
import pytest

from psmatch.errors import InvalidSpec, NoControl, NoTreated
from psmatch.matcher import MatchSpec, common_support, match
from psmatch.rng import SplitMix64

from conftest import fake_model, make_dataset
from oracles import greedy_reference


def build(t_scores, c_scores):
    """Treated units first, then controls; returns (ds, model)."""
    scores = list(t_scores) + list(c_scores)
    treatment = [1] * len(t_scores) + [0] * len(c_scores)
    ds = make_dataset(treatment, [[0.0]] * len(scores))
    return ds, fake_model(scores)


def pair_ids(result):
    return [(int(t), int(c)) for t, c in result.pairs]


class TestCommonSupport:
    def test_nested(self):
        assert common_support([0.2, 0.8], [0.1, 0.9]) == (0.2, 0.8)

    def test_identical(self):
        assert common_support([0.3, 0.5, 0.7], [0.3, 0.5, 0.7]) == (0.3, 0.7)

    def test_disjoint_is_empty_interval(self):
        low, high = common_support([0.6, 0.9], [0.1, 0.4])
        assert (low, high) == (0.6, 0.4)
        assert low > high


class TestSpecValidation:
    def test_bad_ratio(self):
        with pytest.raises(InvalidSpec):
            MatchSpec(ratio=0)

    def test_bad_caliper(self):
        with pytest.raises(InvalidSpec):
            MatchSpec(caliper=-0.5)

    def test_bad_discard(self):
        with pytest.raises(InvalidSpec):
            MatchSpec(discard="everything")

    def test_bad_mode(self):
        with pytest.raises(InvalidSpec):
            MatchSpec(caliper=0.1, caliper_mode="psychic")


def test_exact_tie_is_nearest():
    ds, model = build([0.50], [0.50, 0.60])
    result = match(model, ds, MatchSpec(ratio=1))
    assert pair_ids(result) == [(1, 2)]
    assert result.weights.tolist() == [1.0, 1.0, 0.0]


def test_greedy_sequence_descending():
    # T1=.80 pairs with C1=.78 first, then T2=.60 with C2=.62; C3 unused
    ds, model = build([0.80, 0.60], [0.78, 0.62, 0.40])
    result = match(model, ds, MatchSpec(ratio=1, replace=False))
    assert pair_ids(result) == [(1, 3), (2, 4)]
    assert result.disposition[4] == "unused_control"


def test_replacement_reuses_control_and_sums_weight():
    ds, model = build([0.80, 0.79], [0.78])
    result = match(model, ds, MatchSpec(ratio=1, replace=True))
    assert pair_ids(result) == [(1, 3), (2, 3)]
    assert result.weights[2] == pytest.approx(2.0, abs=1e-12)
    assert result.weights[ds.control_mask].sum() == pytest.approx(2.0, abs=1e-9)


def test_caliper_width_resolution():
    ds, model = build([0.4, 0.6], [0.3, 0.7])
    result = match(model, ds, MatchSpec(caliper=0.15))
    expected = 0.15 * np.std(model.logits, ddof=1)
    assert result.caliper_width_abs == pytest.approx(expected, rel=1e-12)


def test_caliper_honored_on_logit_scale():
    rng = SplitMix64(314)
    for trial in range(50):
        n_t, n_c = 2 + rng.randbelow(5), 2 + rng.randbelow(5)
        t = [0.05 + 0.9 * rng.random() for _ in range(n_t)]
        c = [0.05 + 0.9 * rng.random() for _ in range(n_c)]
        ds, model = build(t, c)
        spec = MatchSpec(ratio=1 + rng.randbelow(2), caliper=0.5, seed=trial)
        result = match(model, ds, spec)
        logits = model.logits
        ids = {unit_id: i for i, unit_id in enumerate(ds.unit_ids)}
        for t_id, c_id in result.pairs:
            dist = abs(logits[ids[t_id]] - logits[ids[c_id]])
            assert dist <= result.caliper_width_abs + 1e-12


def test_unmatched_when_no_candidate_in_pass_one():
    # control pool too small: lowest-priority treated unit goes unmatched
    ds, model = build([0.8, 0.6, 0.4], [0.75])
    result = match(model, ds, MatchSpec(ratio=1))
    assert len(result.pairs) == 1
    assert result.disposition[0] == "matched"
    assert result.disposition[1] == "unmatched_no_match"
    assert result.disposition[2] == "unmatched_no_match"


def test_ratio_passes_spread_controls():
    # pass 1 gives each treated unit one control before pass 2 hands the
    # leftover control to the first treated unit in sort order
    ds, model = build([0.80, 0.60], [0.78, 0.61, 0.50])
    result = match(model, ds, MatchSpec(ratio=2))
    assert pair_ids(result) == [(1, 3), (2, 4), (1, 5)]


def test_partial_ratio_fill_stays_matched():
    ds, model = build([0.80, 0.60], [0.78, 0.61, 0.50])
    result = match(model, ds, MatchSpec(ratio=2))
    # T1 got 2 controls, T2 got 1; both remain matched
    assert result.disposition[0] == "matched"
    assert result.disposition[1] == "matched"
    t1_controls = [c for t, c in pair_ids(result) if t == 1]
    t2_controls = [c for t, c in pair_ids(result) if t == 2]
    assert len(t1_controls) == 2 and len(t2_controls) == 1
    # weights: T1's controls get 1/2 each, T2's control gets 1; sum = 2
    weights = result.weights
    assert weights[ds.control_mask].sum() == pytest.approx(2.0, abs=1e-9)
    assert weights[t2_controls[0] - 1] == pytest.approx(1.0)
    for c in t1_controls:
        assert weights[c - 1] == pytest.approx(0.5)


def test_discard_policies():
    # support is [.35, .7]: the treated unit at .95 (id 3) and the control
    # at .30 (id 4) fall outside it
    ds, model = build([0.35, 0.5, 0.95], [0.3, 0.55, 0.7])
    for policy, expect_discarded in (
        ("none", []),
        ("treated_only", [3]),
        ("control_only", [4]),
        ("both", [3, 4]),
    ):
        result = match(model, ds, MatchSpec(discard=policy))
        discarded = [i + 1 for i, d in enumerate(result.disposition) if d == "discarded_support"]
        assert discarded == expect_discarded
    # control_only leaves the treated outlier in (it still matches somewhere)
    result = match(model, ds, MatchSpec(discard="control_only"))
    assert result.disposition[2] == "matched"


def test_disjoint_support_discard_both_fatal():
    ds, model = build([0.8, 0.9], [0.1, 0.2])
    with pytest.raises((NoTreated, NoControl)):
        match(model, ds, MatchSpec(discard="both"))


def test_random_within_deterministic_per_seed():
    t = [0.4, 0.5, 0.6]
    c = [0.35, 0.45, 0.52, 0.58, 0.64]
    ds, model = build(t, c)
    spec = MatchSpec(ratio=2, caliper=1.0, caliper_mode="random_within", seed=123)
    a = match(model, ds, spec)
    b = match(model, ds, spec)
    assert a.pairs == b.pairs
    assert np.array_equal(a.weights, b.weights)
    assert a.disposition == b.disposition
    # another seed changes the draw eventually
    other = [
        match(model, ds, MatchSpec(ratio=2, caliper=1.0, seed=s)).pairs for s in range(20)
    ]
    assert any(p != a.pairs for p in other)


def test_random_within_respects_caliper():
    ds, model = build([0.5], [0.1, 0.49, 0.51, 0.9])
    spec = MatchSpec(caliper=0.2, caliper_mode="random_within", seed=0)
    picks = set()
    for seed in range(30):
        result = match(model, ds, MatchSpec(caliper=0.2, caliper_mode="random_within", seed=seed))
        picks.add(result.pairs[0][1])
    assert picks <= {"3", "4"}
    assert len(picks) == 2  # both in-caliper controls get drawn across seeds


def test_without_replacement_controls_unique():
    rng = SplitMix64(2718)
    for trial in range(50):
        n_t, n_c = 2 + rng.randbelow(6), 2 + rng.randbelow(6)
        t = [0.1 + 0.8 * rng.random() for _ in range(n_t)]
        c = [0.1 + 0.8 * rng.random() for _ in range(n_c)]
        ds, model = build(t, c)
        result = match(model, ds, MatchSpec(ratio=1 + rng.randbelow(3), seed=trial))
        controls = [c_id for _, c_id in result.pairs]
        assert len(controls) == len(set(controls))


def test_weight_conservation_random_runs():
    rng = SplitMix64(8128)
    for trial in range(100):
        n_t, n_c = 2 + rng.randbelow(8), 2 + rng.randbelow(8)
        t = [0.1 + 0.8 * rng.random() for _ in range(n_t)]
        c = [0.1 + 0.8 * rng.random() for _ in range(n_c)]
        ds, model = build(t, c)
        spec = MatchSpec(
            ratio=1 + rng.randbelow(3),
            replace=bool(rng.randbelow(2)),
            caliper=0.5 if rng.randbelow(2) else None,
            seed=trial,
        )
        result = match(model, ds, spec)
        n_matched = sum(
            1 for i in range(ds.n) if ds.treatment[i] == 1 and result.disposition[i] == "matched"
        )
        assert result.weights[ds.control_mask].sum() == pytest.approx(n_matched, abs=1e-9)
        for i in range(ds.n):
            if result.disposition[i] in ("matched",):
                if ds.treatment[i] == 1:
                    assert result.weights[i] == 1.0
            else:
                assert result.weights[i] == 0.0


def test_monotone_retention_nearest_within():
    rng = SplitMix64(1234)
    for trial in range(60):
        n_t, n_c = 2 + rng.randbelow(6), 2 + rng.randbelow(6)
        t = [0.1 + 0.8 * rng.random() for _ in range(n_t)]
        c = [0.1 + 0.8 * rng.random() for _ in range(n_c)]
        ds, model = build(t, c)
        matched_counts = []
        for caliper in (0.1, 0.3, 0.8, 2.0):
            spec = MatchSpec(caliper=caliper, caliper_mode="nearest_within", seed=1)
            result = match(model, ds, spec)
            matched_counts.append(len({t_id for t_id, _ in result.pairs}))
        assert matched_counts == sorted(matched_counts)


def test_matches_reference_greedy():
    rng = SplitMix64(424242)
    for trial in range(100):
        n_t, n_c = 1 + rng.randbelow(6), 1 + rng.randbelow(6)
        scores = [0.05 + 0.9 * rng.random() for _ in range(n_t + n_c)]
        treatment = [1] * n_t + [0] * n_c
        ds = make_dataset(treatment, [[0.0]] * (n_t + n_c))
        model = fake_model(scores)
        ratio = 1 + rng.randbelow(2)
        replace = bool(rng.randbelow(2))
        caliper = 0.5 if rng.randbelow(2) else None
        spec = MatchSpec(ratio=ratio, replace=replace, caliper=caliper,
                         caliper_mode="nearest_within", seed=trial)
        result = match(model, ds, spec)
        ref_pairs, ref_weights, *_ = greedy_reference(
            list(model.scores), list(model.logits), treatment,
            ratio=ratio, replace=replace, caliper=caliper,
        )
        got_pairs = [(int(t) - 1, int(c) - 1) for t, c in result.pairs]
        assert got_pairs == ref_pairs
        assert np.allclose(result.weights, ref_weights, atol=1e-12)


def test_zero_matches_is_valid_result():
    # tiny caliper: nobody can match, nobody is discarded
    ds, model = build([0.2, 0.3], [0.7, 0.8])
    result = match(model, ds, MatchSpec(caliper=1e-6, caliper_mode="nearest_within"))
    assert result.pairs == ()
    assert set(result.disposition[:2]) == {"unmatched_no_match"}
    assert set(result.disposition[2:]) == {"unused_control"}
    assert result.weights.sum() == 0.0
