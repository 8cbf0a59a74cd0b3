"""Battle-pair sampling and the normal-user outcome model."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import numpy.typing as npt

from .ratings import RatingVector, win_rate
from .votes import VoteOutcome, VoteSet


class SamplingConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PairDistribution:
    """Probability over unordered pairs ``(i, j)`` with ``i < j``.

    The two models of a sampled battle are presented in random order.
    """

    kind: str
    n_models: int
    pairs: np.ndarray  # (P, 2) int
    probs: np.ndarray  # (P,)
    beta: float | None = None
    target: int | None = None
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not np.isclose(self.probs.sum(), 1.0):
            raise SamplingConfigError("pair probabilities must sum to 1")
        cdf = np.cumsum(self.probs)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def uniform(cls, n_models: int) -> PairDistribution:
        if n_models < 2:
            raise SamplingConfigError("need at least two models")
        pairs = np.array(list(combinations(range(n_models), 2)), dtype=np.int64)
        return cls("uniform", n_models, pairs, np.full(len(pairs), 1.0 / len(pairs)))

    @classmethod
    def target_scaled(cls, n_models: int, beta: float | None, target: int | None
                      ) -> PairDistribution:
        """Pairs with ``target`` scaled by ``beta``; the rest share the deficit.

        The target's marginal becomes ``beta * 2 / K``.
        """
        if beta is None or target is None:
            raise SamplingConfigError("target-scaled sampling needs beta and target")
        if not 0.0 <= beta <= 1.0:
            raise SamplingConfigError("beta must lie in [0, 1]")
        if not 0 <= target < n_models:
            raise SamplingConfigError("target out of range")
        if n_models < 3 and beta < 1.0:
            raise SamplingConfigError("need three models to move mass away from the target")
        pairs = np.array(list(combinations(range(n_models), 2)), dtype=np.int64)
        n_pairs = len(pairs)
        has_t = (pairs == target).any(axis=1)
        if beta == 1.0:
            probs = np.full(n_pairs, 1.0 / n_pairs)
            return cls("target_scaled", n_models, pairs, probs, beta=beta, target=target)
        probs = np.empty(n_pairs)
        probs[has_t] = beta / n_pairs
        n_other = int((~has_t).sum())
        if n_other:
            probs[~has_t] = (1.0 - beta * has_t.sum() / n_pairs) / n_other
        return cls("target_scaled", n_models, pairs, probs, beta=beta, target=target)

    @classmethod
    def empirical(cls, hist: VoteSet) -> PairDistribution:
        """Pair frequencies proportional to historical battle counts."""
        if len(hist) == 0:
            raise SamplingConfigError("empirical distribution needs historical battles")
        lo = np.minimum(hist.a, hist.b)
        hi = np.maximum(hist.a, hist.b)
        k = hist.n_models
        table = np.zeros((k, k), dtype=np.int64)
        np.add.at(table, (lo, hi), 1)
        i, j = np.nonzero(table)
        pairs = np.column_stack([i, j]).astype(np.int64)
        counts = table[i, j].astype(float)
        return cls("empirical", k, pairs, counts / counts.sum())

    def pair_prob(self, i: int, j: int) -> float:
        i, j = min(i, j), max(i, j)
        hit = np.flatnonzero((self.pairs[:, 0] == i) & (self.pairs[:, 1] == j))
        return float(self.probs[hit[0]]) if hit.size else 0.0

    def marginals(self) -> np.ndarray:
        """Probability that each model takes part in a battle."""
        m = np.zeros(self.n_models)
        np.add.at(m, self.pairs[:, 0], self.probs)
        np.add.at(m, self.pairs[:, 1], self.probs)
        return m


def sample_pair(dist: PairDistribution, rng: np.random.Generator) -> tuple[int, int]:
    u, flip = rng.random(2)
    idx = int(np.searchsorted(dist._cdf, u, side="right"))
    idx = min(idx, len(dist.pairs) - 1)
    i, j = dist.pairs[idx]
    return (int(j), int(i)) if flip < 0.5 else (int(i), int(j))


def sample_pairs(dist: PairDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectorized :func:`sample_pair`; returns an ``(n, 2)`` array."""
    u = rng.random((n, 2))
    idx = np.minimum(np.searchsorted(dist._cdf, u[:, 0], side="right"), len(dist.pairs) - 1)
    out = dist.pairs[idx].copy()
    flip = u[:, 1] < 0.5
    out[flip] = out[flip][:, ::-1]
    return out


@dataclass(frozen=True, eq=False)
class OutcomeModel:
    """Empirical outcome frequencies per ordered pair with a rating backoff.

    ``freq[a, b]`` holds the probabilities of (a wins, b wins, tie) for a
    battle presented as ``(a, b)``; rows of unseen pairs are NaN.
    """

    freq: np.ndarray  # (K, K, 3)
    seen: np.ndarray  # (K, K) bool
    tie_rate: float
    use_ratings: bool = True

    @classmethod
    def from_votes(cls, hist: VoteSet) -> OutcomeModel:
        k = hist.n_models
        tally = np.zeros((k, k, 3))
        o = hist.outcome.astype(np.int64)
        # a battle (a, b) with outcome o reads as (b, a) with wins swapped
        swapped = np.array([1, 0, 2])[o]
        np.add.at(tally, (hist.a, hist.b, o), 1.0)
        np.add.at(tally, (hist.b, hist.a, swapped), 1.0)
        totals = tally.sum(axis=2)
        seen = totals > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            freq = tally / totals[..., None]
        freq[~seen] = np.nan
        tie_rate = float(np.mean(o == VoteOutcome.TIE)) if o.size else 0.0
        return cls(freq=freq, seen=seen, tie_rate=tie_rate)

    @classmethod
    def from_ratings(cls, n_models: int, tie_rate: float) -> OutcomeModel:
        """Model that only knows the public leaderboard and a tie rate."""
        freq = np.full((n_models, n_models, 3), np.nan)
        return cls(freq=freq, seen=np.zeros((n_models, n_models), dtype=bool),
                   tie_rate=tie_rate)

    def probabilities(self, a: int | None, b: int | None,
                      ratings: RatingVector | npt.ArrayLike | None) -> np.ndarray:
        """(a wins, b wins, tie) probabilities for one battle."""
        if a is not None and b is not None and self.seen[a, b]:
            return self.freq[a, b]
        if a is None or b is None or ratings is None or not self.use_ratings:
            w = 0.5
        else:
            r = ratings.scores if isinstance(ratings, RatingVector) else np.asarray(ratings)
            w = float(win_rate(r[a], r[b]))
        rest = 1.0 - self.tie_rate
        return np.array([rest * w, rest * (1.0 - w), self.tie_rate])

    def probability_table(self, a: np.ndarray, b: np.ndarray,
                          ratings: RatingVector | npt.ArrayLike | None) -> np.ndarray:
        """Vectorized :meth:`probabilities` over battle columns, shape (n, 3)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.empty((a.size, 3))
        seen = self.seen[a, b]
        out[seen] = self.freq[a[seen], b[seen]]
        unseen = ~seen
        if unseen.any():
            if ratings is None or not self.use_ratings:
                w = np.full(int(unseen.sum()), 0.5)
            else:
                r = ratings.scores if isinstance(ratings, RatingVector) else np.asarray(ratings)
                w = win_rate(r[a[unseen]], r[b[unseen]])
            rest = 1.0 - self.tie_rate
            out[unseen, 0] = rest * w
            out[unseen, 1] = rest * (1.0 - w)
            out[unseen, 2] = self.tie_rate
        return out


_OUTCOMES = (VoteOutcome.A_WINS, VoteOutcome.B_WINS, VoteOutcome.TIE)


def sample_normal_outcome(model: OutcomeModel, a: int | None, b: int | None,
                          ratings: RatingVector | npt.ArrayLike | None,
                          rng: np.random.Generator) -> VoteOutcome:
    """Draw the vote a normal user would cast; never an abstention.

    ``a`` or ``b`` may be ``None`` when the caller cannot identify a model, in
    which case only the global tie rate is used.
    """
    if a is not None and a == b:
        raise ValueError("a battle needs two distinct models")
    p = model.probabilities(a, b, ratings)
    u = rng.random()
    cdf = np.cumsum(p)
    return _OUTCOMES[min(int(np.searchsorted(cdf, u, side="right")), 2)]


def sample_normal_outcomes(model: OutcomeModel, a: np.ndarray, b: np.ndarray,
                           ratings: RatingVector | npt.ArrayLike | None,
                           rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`sample_normal_outcome`; returns outcome codes."""
    p = model.probability_table(a, b, ratings)
    u = rng.random(len(p))
    cdf = np.cumsum(p, axis=1)
    return np.minimum((u[:, None] >= cdf).sum(axis=1), 2).astype(np.int8)
