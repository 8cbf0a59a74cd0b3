import numpy as np
import pytest

from arena_rigging.deanon import (
    UNKNOWN,
    IdentityGuess,
    OracleConfig,
    predict_battle,
    predict_identity,
)

N = 100_000


def test_perfect(rng):
    cfg = OracleConfig.perfect()
    assert all(predict_identity(cfg, k, rng) == IdentityGuess(k) for k in range(30))


def test_anonymous_fraction_rate(rng):
    cfg = OracleConfig.anonymous_fraction(0.5)
    hidden = sum(not predict_identity(cfg, 3, rng).known for _ in range(N))
    assert abs(hidden / N - 0.5) < 0.01


def test_anonymous_battles_hide_both_sides(rng):
    cfg = OracleConfig.anonymous_fraction(0.3)
    guesses = [predict_battle(cfg, 1, 2, rng) for _ in range(20_000)]
    assert all((ga == UNKNOWN) == (gb == UNKNOWN) for ga, gb in guesses)
    assert abs(np.mean([ga == UNKNOWN for ga, _ in guesses]) - 0.3) < 0.015
    assert all(g.truth_hidden for ga, gb in guesses for g in (ga, gb) if not g.known)


def test_noisy_multiclass_accuracy(rng):
    cfg = OracleConfig.noisy_multiclass(0.7923, 25)
    truth = rng.integers(25, size=N)
    guess = np.array([predict_identity(cfg, int(k), rng).guess for k in truth])
    assert abs(np.mean(guess == truth) - 0.7923) < 0.01
    # errors are spread over the other recognized models
    wrong = guess[(truth == 0) & (guess != 0)]
    assert set(np.unique(wrong)) == set(range(1, 25))


def test_unrecognized_model_gets_a_recognized_guess(rng):
    cfg = OracleConfig.noisy_multiclass(1.0, 6, recognized=[0, 1, 2])
    guesses = {predict_identity(cfg, 5, rng).guess for _ in range(500)}
    assert guesses == {0, 1, 2}


def test_binary_target(rng):
    cfg = OracleConfig.binary_target(target=4, accuracy=0.9)
    said_t = np.mean([predict_identity(cfg, 4, rng).guess == 4 for _ in range(20_000)])
    false_t = np.mean([predict_identity(cfg, 2, rng).guess == 4 for _ in range(20_000)])
    assert abs(said_t - 0.9) < 0.01 and abs(false_t - 0.1) < 0.01
    assert predict_identity(OracleConfig.binary_target(4, 1.0), 2, rng).guess is None


def test_confusion_table(rng):
    conf = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    cfg = OracleConfig.noisy_multiclass(0.5, 3, confusion=conf)
    assert [predict_identity(cfg, k, rng).guess for k in range(3)] == [1, 2, 0]


@pytest.mark.parametrize("acc", [0.0, 0.25, 0.6, 1.0])
def test_accuracy_is_realized(acc):
    rng = np.random.default_rng(int(acc * 100))
    cfg = OracleConfig.noisy_multiclass(acc, 10)
    hits = sum(predict_identity(cfg, 7, rng).guess == 7 for _ in range(N))
    assert abs(hits / N - acc) < 0.01


def test_invalid_configs():
    with pytest.raises(ValueError):
        OracleConfig.anonymous_fraction(1.5)
    with pytest.raises(ValueError):
        OracleConfig("guess")
    with pytest.raises(ValueError):
        OracleConfig.noisy_multiclass(0.5, 5, recognized=[])
