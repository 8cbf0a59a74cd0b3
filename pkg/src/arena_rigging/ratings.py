"""Bradley-Terry fitting, online Elo updates and ranking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np
import numpy.typing as npt
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit, log_expit

from .votes import VoteSet

logger = logging.getLogger(__name__)

#: Elo points per natural-log unit of strength.
ELO_SCALE = 400.0 / math.log(10.0)
ELO_OFFSET = 1000.0

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 500


class EmptyVoteSetError(ValueError):
    """Raised when there is nothing to fit."""


def win_rate(x: float | np.ndarray, y: float | np.ndarray) -> float | np.ndarray:
    """Expected score of a player rated ``x`` against one rated ``y``."""
    # 10 ** ((y - x) / 400) == exp((y - x) / ELO_SCALE); expit keeps both tails stable
    return expit((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) / ELO_SCALE)[()]


def to_elo(natural: npt.ArrayLike) -> np.ndarray:
    return ELO_SCALE * np.asarray(natural, dtype=float) + ELO_OFFSET


@dataclass(frozen=True, eq=False)
class RatingVector:
    """Fitted strengths on the Elo-like scale.

    ``natural`` holds the log-strengths, mean-zero within every connected
    component of the comparison graph. ``compared`` marks models that appear
    in at least one comparison; the others sit at 1000 and are not ranked.
    """

    scores: np.ndarray
    natural: np.ndarray
    names: tuple[str, ...] = ()
    anchor: str = "mean-zero per connected component"
    converged: bool = True
    iterations: int = 0
    components: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    compared: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    gradient_norm: float = 0.0

    @classmethod
    def from_scores(cls, scores: npt.ArrayLike, names: tuple[str, ...] = ()) -> RatingVector:
        """Wrap a plain score vector, e.g. a published leaderboard."""
        scores = np.asarray(scores, dtype=float).copy()
        k = scores.size
        return cls(
            scores=scores,
            natural=(scores - ELO_OFFSET) / ELO_SCALE,
            names=tuple(names) or tuple(str(i) for i in range(k)),
            anchor="external",
            components=np.zeros(k, dtype=np.int64),
            compared=np.ones(k, dtype=bool),
        )

    def __len__(self) -> int:
        return int(self.scores.size)

    @property
    def n_components(self) -> int:
        return int(np.unique(self.components[self.compared]).size)

    def with_scores(self, scores: npt.ArrayLike) -> RatingVector:
        scores = np.asarray(scores, dtype=float).copy()
        return RatingVector(
            scores=scores,
            natural=(scores - ELO_OFFSET) / ELO_SCALE,
            names=self.names,
            anchor=self.anchor,
            converged=self.converged,
            iterations=self.iterations,
            components=self.components,
            compared=self.compared,
            gradient_norm=self.gradient_norm,
        )


def _component_projector(n_games: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = n_games.shape[0]
    n_comp, labels = connected_components(csr_matrix(n_games > 0), directed=False)
    proj = np.zeros((k, k))
    for c in range(n_comp):
        members = labels == c
        proj[np.ix_(members, members)] = 1.0 / members.sum()
    return labels, proj


def _center(xi: np.ndarray, proj: np.ndarray) -> np.ndarray:
    return xi - proj @ xi


def _loss(xi: np.ndarray, wins: np.ndarray, total: float) -> float:
    diff = xi[:, None] - xi[None, :]
    return float(-(wins * log_expit(diff)).sum() / total)


def _grad_hess(
    xi: np.ndarray, wins: np.ndarray, n_games: np.ndarray, total: float
) -> tuple[np.ndarray, np.ndarray]:
    p = expit(xi[:, None] - xi[None, :])  # p[i, j] = P(i beats j)
    # d/dxi_k of -sum W log p: winners lose (1 - p), losers gain p
    grad = -((wins * p.T).sum(axis=1) - (wins.T * p).sum(axis=1)) / total
    w = n_games * p * p.T / total
    hess = -w
    hess[np.diag_indices_from(hess)] = w.sum(axis=1)
    return grad, hess


@dataclass
class _Problem:
    wins: np.ndarray
    n_games: np.ndarray
    total: float
    labels: np.ndarray
    proj: np.ndarray


def _prepare(counts: np.ndarray, labels: np.ndarray | None = None,
             proj: np.ndarray | None = None) -> _Problem:
    wins = np.asarray(counts, dtype=float)
    if wins.ndim != 2 or wins.shape[0] != wins.shape[1]:
        raise ValueError("counts must be a square matrix")
    total = float(wins.sum())
    if total <= 0:
        raise EmptyVoteSetError("no directed comparisons to fit")
    n_games = wins + wins.T
    if labels is None or proj is None:
        labels, proj = _component_projector(n_games)
    return _Problem(wins, n_games, total, labels, proj)


def _newton(
    prob: _Problem,
    xi0: np.ndarray,
    tolerance: float,
    max_iterations: int,
) -> tuple[np.ndarray, bool, int, float]:
    xi = _center(np.asarray(xi0, dtype=float).copy(), prob.proj)
    loss = _loss(xi, prob.wins, prob.total)
    for it in range(max_iterations + 1):
        grad, hess = _grad_hess(xi, prob.wins, prob.n_games, prob.total)
        gnorm = float(np.abs(grad).max())
        if gnorm <= tolerance:
            return xi, True, it, gnorm
        if it == max_iterations:
            break
        # the projector fills the null space spanned by component indicators
        step = np.linalg.solve(hess + prob.proj, -grad)
        step = _center(step, prob.proj)
        slope = float(grad @ step)
        t = 1.0
        # near the optimum loss changes drop below rounding; allow for that
        slack = 8.0 * np.finfo(float).eps * max(1.0, abs(loss))
        while True:
            cand = xi + t * step
            cand_loss = _loss(cand, prob.wins, prob.total)
            if cand_loss <= loss + 1e-4 * t * slope + slack or t < 1e-10:
                break
            t *= 0.5
        xi, loss = _center(cand, prob.proj), cand_loss
    return xi, False, max_iterations, gnorm


def fit_counts(
    counts: npt.ArrayLike,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    init: npt.ArrayLike | None = None,
    names: tuple[str, ...] = (),
    _structure: tuple[np.ndarray, np.ndarray] | None = None,
) -> RatingVector:
    """Bradley-Terry fit on a directed comparison matrix.

    Minimizes the mean of ``-log sigmoid(xi_w - xi_l)`` over all directed
    comparisons by damped Newton, stopping once the gradient max-norm drops to
    ``tolerance``. ``init`` warm-starts the solver from a previous natural
    vector.
    """
    counts = np.asarray(counts)
    labels, proj = _structure if _structure is not None else (None, None)
    prob = _prepare(counts, labels, proj)
    k = counts.shape[0]
    xi0 = np.zeros(k) if init is None else np.asarray(init, dtype=float)
    xi, converged, iterations, gnorm = _newton(prob, xi0, tolerance, max_iterations)
    if not converged:
        logger.warning("Bradley-Terry fit stopped after %d iterations (|g|=%.3g)",
                       iterations, gnorm)
    compared = prob.n_games.sum(axis=1) > 0
    return RatingVector(
        scores=to_elo(xi),
        natural=xi,
        names=tuple(names) or tuple(str(i) for i in range(k)),
        converged=converged,
        iterations=iterations,
        components=prob.labels,
        compared=compared,
        gradient_norm=gnorm,
    )


def fit_bt(
    votes: VoteSet,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    init: npt.ArrayLike | None = None,
) -> RatingVector:
    """Fit Bradley-Terry scores to every comparison in ``votes``.

    Args:
        votes: Recorded battles.
        tolerance: Gradient max-norm at which the solver stops.
        max_iterations: Newton iteration budget; exhausting it sets
            ``converged=False`` on the result instead of raising.
        init: Optional warm start in natural units.

    Returns:
        The fitted :class:`RatingVector`.
    """
    return fit_counts(votes.counts, tolerance, max_iterations, init, names=votes.names)


def bt_loss(counts: npt.ArrayLike, natural: npt.ArrayLike) -> float:
    """Mean BCE loss of ``natural`` strengths over the directed comparisons."""
    counts = np.asarray(counts, dtype=float)
    return _loss(np.asarray(natural, dtype=float), counts, float(counts.sum()))


@dataclass(frozen=True)
class OnlinePair:
    r_a_on: float
    r_b_on: float
    gamma: float
    mu: float


def online_update(scores: RatingVector | npt.ArrayLike, a: int, b: int,
                  gamma: float, mu: float) -> OnlinePair:
    """One online Elo step for the battle ``(a, b)`` with outcome ``gamma``.

    ``gamma`` is 1 when ``a`` wins, 0 when ``b`` wins and 0.5 for a tie;
    ``mu`` is the step size (0 for an abstention).
    """
    if a == b:
        raise ValueError("online update needs two distinct models")
    if gamma not in (0.0, 0.5, 1.0):
        raise ValueError("gamma must be 0, 0.5 or 1")
    if mu < 0:
        raise ValueError("mu must be non-negative")
    r = scores.scores if isinstance(scores, RatingVector) else np.asarray(scores, dtype=float)
    ra, rb = float(r[a]), float(r[b])
    return OnlinePair(
        r_a_on=ra + mu * (gamma - win_rate(ra, rb)),
        r_b_on=rb + mu * (1.0 - gamma - win_rate(rb, ra)),
        gamma=gamma,
        mu=mu,
    )


def _score_array(scores: RatingVector | npt.ArrayLike) -> np.ndarray:
    if isinstance(scores, RatingVector):
        return scores.scores
    return np.asarray(scores, dtype=float)


def rank_of(scores: RatingVector | npt.ArrayLike, t: int) -> int:
    """1 + number of models scored strictly above ``t``."""
    r = _score_array(scores)
    if not 0 <= t < r.size:
        raise IndexError(f"model {t} out of range")
    return 1 + int(np.count_nonzero(r > r[t]))


@dataclass(frozen=True)
class RankingRow:
    model: int
    name: str
    score: float
    rank: int


def ranking_table(scores: RatingVector | npt.ArrayLike) -> list[RankingRow]:
    """Models by descending score, lower index first on equal scores.

    Models without any comparison are left out when ``scores`` is a fitted
    :class:`RatingVector`.
    """
    r = _score_array(scores)
    if isinstance(scores, RatingVector):
        names = scores.names or tuple(str(i) for i in range(r.size))
        include = scores.compared if scores.compared.size else np.ones(r.size, dtype=bool)
    else:
        names = tuple(str(i) for i in range(r.size))
        include = np.ones(r.size, dtype=bool)
    order = sorted(np.flatnonzero(include), key=lambda i: (-r[i], i))
    return [RankingRow(int(i), names[i], float(r[i]), rank_of(r, int(i))) for i in order]


def cross_component_pairs(ratings: RatingVector) -> bool:
    """True when the comparison graph has several components, so ranks mix
    incomparable scales."""
    return ratings.n_components > 1


def write_ratings(ratings: RatingVector, stream: IO[str]) -> None:
    """Ratings export: ``name,score,rank`` lines with six-decimal scores."""
    for row in ranking_table(ratings):
        stream.write(f"{row.name},{row.score:.6f},{row.rank}\n")


def read_ratings(text: str) -> list[tuple[str, float, int]]:
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        name, score, rank = line.rsplit(",", 2)
        rows.append((name, float(score), int(rank)))
    return rows
