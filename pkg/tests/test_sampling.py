import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arena_rigging.ratings import RatingVector, fit_bt
from arena_rigging.sampling import (
    OutcomeModel,
    PairDistribution,
    SamplingConfigError,
    sample_normal_outcome,
    sample_normal_outcomes,
    sample_pair,
    sample_pairs,
)
from arena_rigging.votes import VoteOutcome, VoteSet

A, B, T = VoteOutcome.A_WINS, VoteOutcome.B_WINS, VoteOutcome.TIE


def test_uniform_two_models(rng):
    d = PairDistribution.uniform(2)
    for _ in range(50):
        assert set(sample_pair(d, rng)) == {0, 1}


def test_uniform_marginals(rng):
    d = PairDistribution.uniform(10)
    pairs = sample_pairs(d, rng, 100_000)
    freq = np.bincount(pairs.ravel(), minlength=10) / 100_000
    np.testing.assert_allclose(freq, 0.2, atol=0.01)
    np.testing.assert_allclose(d.marginals(), 0.2, atol=1e-12)
    assert np.all(pairs[:, 0] != pairs[:, 1])


def test_scalar_and_vector_sampling_agree():
    d = PairDistribution.uniform(7)
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    scalar = np.array([sample_pair(d, r1) for _ in range(200)])
    np.testing.assert_array_equal(scalar, sample_pairs(d, r2, 200))


def test_beta_zero_never_samples_target(rng):
    d = PairDistribution.target_scaled(8, 0.0, 3)
    pairs = sample_pairs(d, rng, 20_000)
    assert not np.any(pairs == 3)


def test_beta_one_is_uniform():
    u = PairDistribution.uniform(9)
    s = PairDistribution.target_scaled(9, 1.0, 4)
    np.testing.assert_array_equal(u.pairs, s.pairs)
    np.testing.assert_array_equal(u.probs, s.probs)


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.5, 0.7, 0.9])
def test_target_marginal_follows_beta(beta):
    k, t = 20, 14
    d = PairDistribution.target_scaled(k, beta, t)
    assert d.marginals()[t] == pytest.approx(beta * 2 / k, abs=1e-12)
    pairs = sample_pairs(d, np.random.default_rng(int(beta * 10)), 100_000)
    hit = np.mean(np.any(pairs == t, axis=1))
    assert abs(hit - beta * 2 / k) < 0.005


def test_target_scaled_needs_parameters():
    with pytest.raises(SamplingConfigError):
        PairDistribution.target_scaled(5, None, 1)
    with pytest.raises(SamplingConfigError):
        PairDistribution.target_scaled(5, 0.5, None)


def test_empirical_single_pair():
    h = VoteSet.from_columns(["x", "y", "z"], [0, 1], [1, 0], [0, 2])
    d = PairDistribution.empirical(h)
    assert d.pair_prob(0, 1) == 1.0


def test_empirical_ratio():
    h = VoteSet.from_columns(["x", "y", "z"], [0, 0, 1, 0], [1, 1, 0, 2], [0, 1, 2, 0])
    d = PairDistribution.empirical(h)
    assert d.pair_prob(0, 1) == 0.75 and d.pair_prob(2, 0) == 0.25


def test_empirical_matches_recount(small_world):
    votes, _ = small_world
    d = PairDistribution.empirical(votes)
    n = len(votes)
    table = {}
    for r in votes.records:
        key = (min(r.a, r.b), max(r.a, r.b))
        table[key] = table.get(key, 0) + 1
    for (i, j), c in table.items():
        assert d.pair_prob(i, j) == pytest.approx(c / n, abs=1e-15)


def test_empirical_needs_history():
    with pytest.raises(SamplingConfigError):
        PairDistribution.empirical(VoteSet.empty(["x", "y"]))


def test_normal_outcome_follows_pair_history(rng):
    h = VoteSet.from_columns(["x", "y"], [0] * 10, [1] * 10, [0] * 8 + [1] * 2)
    m = OutcomeModel.from_votes(h)
    draws = [sample_normal_outcome(m, 0, 1, None, rng) for _ in range(100_000)]
    assert abs(np.mean(np.array(draws) == A) - 0.8) < 0.01
    # the same pair presented in the other order swaps the winner
    draws = sample_normal_outcomes(m, np.ones(100_000, int), np.zeros(100_000, int), None, rng)
    assert abs(np.mean(draws == B) - 0.8) < 0.01


def test_unseen_pair_equal_ratings(rng):
    m = OutcomeModel.from_ratings(2, tie_rate=0.0)
    r = RatingVector.from_scores([1000.0, 1000.0])
    assert m.probabilities(0, 1, r)[0] == 0.5
    draws = np.array([sample_normal_outcome(m, 0, 1, r, rng) for _ in range(20_000)])
    assert abs(np.mean(draws == A) - 0.5) < 0.015


def test_unseen_pair_all_ties(rng):
    m = OutcomeModel.from_ratings(3, tie_rate=1.0)
    r = RatingVector.from_scores([1300.0, 1000.0, 900.0])
    assert all(sample_normal_outcome(m, 0, 2, r, rng) is T for _ in range(200))


def test_unseen_pair_uses_win_rate():
    m = OutcomeModel.from_ratings(2, tie_rate=0.2)
    p = m.probabilities(0, 1, np.array([1000.0, 600.0]))
    np.testing.assert_allclose(p, [0.8 * 10 / 11, 0.8 / 11, 0.2])


def test_normal_votes_reproduce_aggregates(small_world):
    votes, _ = small_world
    m = OutcomeModel.from_votes(votes)
    ratings = fit_bt(votes)
    reps = 50
    a = np.tile(votes.a, reps)
    b = np.tile(votes.b, reps)
    sim = sample_normal_outcomes(m, a, b, ratings, np.random.default_rng(4))
    for code in (A, B, T):
        assert abs(np.mean(sim == code) - np.mean(votes.outcome == code)) < 0.01
    assert not np.any(sim == VoteOutcome.ABSTAIN)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.floats(0, 1), st.data())
def test_target_scaled_is_a_distribution(k, beta, data):
    t = data.draw(st.integers(0, k - 1))
    d = PairDistribution.target_scaled(k, beta, t)
    assert d.probs.sum() == pytest.approx(1.0)
    assert np.all(d.probs >= 0)
    assert d.marginals()[t] == pytest.approx(beta * 2 / k)
    assert d.marginals().sum() == pytest.approx(2.0)


def test_sampling_is_deterministic():
    d = PairDistribution.uniform(6)
    a = sample_pairs(d, np.random.default_rng(3), 50)
    b = sample_pairs(d, np.random.default_rng(3), 50)
    np.testing.assert_array_equal(a, b)
