"""Synthetic leaderboards with known strengths, for desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .ratings import win_rate
from .sampling import PairDistribution, sample_pairs
from .votes import VoteOutcome, VoteSet


def synthetic_ratings(n_models: int = 20, spacing: float = 25.0, top: float = 1200.0
                      ) -> np.ndarray:
    """Evenly spaced true ratings, strongest model first."""
    return top - spacing * np.arange(n_models, dtype=float)


def synthetic_battles(
    n_models: int = 20,
    spacing: float = 25.0,
    n_votes: int = 50_000,
    tie_rate: float = 0.2,
    seed: int = 0,
) -> tuple[VoteSet, np.ndarray]:
    """Uniformly paired battles between models with evenly spaced ratings.

    A battle ends in a tie with probability ``tie_rate``; otherwise the
    winner follows the Elo win rate of the true ratings.

    Returns:
        The vote set (models named ``m00`` .. strongest first) and the true
        ratings.
    """
    rng = np.random.default_rng(seed)
    true = synthetic_ratings(n_models, spacing)
    pairs = sample_pairs(PairDistribution.uniform(n_models), rng, n_votes)
    a, b = pairs[:, 0], pairs[:, 1]
    u = rng.random(n_votes)
    w = win_rate(true[a], true[b])
    outcome = np.where(
        u < tie_rate,
        VoteOutcome.TIE,
        np.where(u < tie_rate + (1.0 - tie_rate) * w, VoteOutcome.A_WINS, VoteOutcome.B_WINS),
    ).astype(np.int8)
    width = len(str(n_models - 1))
    names = [f"m{i:0{max(width, 2)}d}" for i in range(n_models)]
    return VoteSet.from_columns(names, a, b, outcome), true
