"""Anti-rigging defenses: duplicate-vote suspension, a likelihood test for
malicious users, and win-rate based vote filtering."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .ratings import RatingVector, win_rate
from .sampling import OutcomeModel
from .votes import VoteOutcome, VoteSet

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class DefenseConfig:
    """Which defenses run. ``None`` disables a mechanism."""

    duplicate_eta: int | None = None
    suspension_length: int = 200
    likelihood_alpha: float | None = None
    likelihood_min_history: int = 20
    likelihood_null_users: int = 1000
    filter_tau: float | None = None
    suspension_visible: bool = False

    def __post_init__(self) -> None:
        if self.duplicate_eta is not None and self.duplicate_eta < 2:
            raise ValueError("duplicate_eta must be at least 2")
        if self.suspension_length < 0:
            raise ValueError("suspension_length must be non-negative")
        if self.likelihood_alpha is not None and not 0.0 < self.likelihood_alpha < 1.0:
            raise ValueError("likelihood_alpha must lie in (0, 1)")
        if self.filter_tau is not None and not 0.5 < self.filter_tau < 1.0:
            raise ValueError("filter_tau must lie in (0.5, 1)")

    @property
    def any_enabled(self) -> bool:
        return any(x is not None for x in (self.duplicate_eta, self.likelihood_alpha,
                                           self.filter_tau))


class GateVerdict(enum.Enum):
    ACCEPT = "accept"
    DISCARD = "discard"


@dataclass
class UserState:
    run_length: int = 0
    last_outcome: VoteOutcome | None = None
    suspended: int = 0
    history: list[tuple[int, int, int]] = field(default_factory=list)
    flagged: bool = False


@dataclass
class UserLedger:
    """Per-user voting state for the duplicate gate and the likelihood test."""

    eta: int | None = None
    suspension_length: int = 200
    users: dict[str, UserState] = field(default_factory=dict)

    def state(self, user: str) -> UserState:
        return self.users.setdefault(user, UserState())

    def record(self, user: str, a: int, b: int, outcome: VoteOutcome) -> None:
        if outcome is not VoteOutcome.ABSTAIN:
            self.state(user).history.append((a, b, int(outcome)))


def duplicate_gate(ledger: UserLedger, user: str, outcome: VoteOutcome) -> GateVerdict:
    """Suspend users who submit the same option ``eta`` times in a row.

    While suspended every submission is discarded and only counts down the
    suspension; submissions during suspension do not extend the run.
    """
    if ledger.eta is None:
        raise ValueError("duplicate detection is disabled")
    st = ledger.state(user)
    if st.suspended > 0:
        st.suspended -= 1
        return GateVerdict.DISCARD
    if outcome == st.last_outcome:
        st.run_length += 1
    else:
        st.last_outcome = outcome
        st.run_length = 1
    if st.run_length >= ledger.eta:
        st.suspended = ledger.suspension_length
        return GateVerdict.DISCARD
    return GateVerdict.ACCEPT


@dataclass(frozen=True)
class LikelihoodResult:
    flagged: bool
    statistic: float
    threshold: float
    n_votes: int


def _outcome_log_probs(probs: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(probs, LOG_FLOOR))


def likelihood_flag(
    a: np.ndarray,
    b: np.ndarray,
    outcomes: np.ndarray,
    null_model: OutcomeModel,
    alpha: float,
    rng: np.random.Generator,
    ratings: RatingVector | np.ndarray | None = None,
    n_null: int = 1000,
    min_history: int = 20,
) -> LikelihoodResult:
    """Test a user's votes against the normal-user null hypothesis.

    The statistic is the mean log-probability of the user's outcomes under
    ``null_model``. Its null distribution comes from ``n_null`` simulated
    normal users voting on the same battles; the user is flagged when the
    statistic falls below the ``alpha`` quantile.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    outcomes = np.asarray(outcomes, dtype=np.int64)
    n = a.size
    if n < min_history:
        logger.warning("history of %d votes is below the minimum of %d; not tested",
                       n, min_history)
        return LikelihoodResult(False, float("nan"), float("nan"), n)
    if np.any(outcomes > VoteOutcome.TIE):
        raise ValueError("abstentions carry no likelihood")
    probs = null_model.probability_table(a, b, ratings)
    logp = _outcome_log_probs(probs)
    stat = float(logp[np.arange(n), outcomes].mean())

    cdf = np.cumsum(probs, axis=1)
    u = rng.random((n_null, n))
    sim = np.minimum((u >= cdf[:, 0]).astype(np.int64) + (u >= cdf[:, 1]), 2)
    null_stats = logp[np.arange(n)[None, :], sim].mean(axis=1)
    threshold = float(np.quantile(null_stats, alpha))
    return LikelihoodResult(stat < threshold, stat, threshold, n)


def filter_mask(collected: VoteSet, hist_ratings: RatingVector | np.ndarray, tau: float
                ) -> np.ndarray:
    """Boolean mask of the records the win-rate filter discards."""
    if not 0.5 < tau < 1.0:
        raise ValueError("tau must lie in (0.5, 1)")
    r = hist_ratings.scores if isinstance(hist_ratings, RatingVector) \
        else np.asarray(hist_ratings, dtype=float)
    ra, rb = r[collected.a], r[collected.b]
    a_favoured = win_rate(ra, rb) > tau
    b_favoured = win_rate(rb, ra) > tau
    out = collected.outcome
    return (a_favoured & (out == VoteOutcome.B_WINS)) | (b_favoured & (out == VoteOutcome.A_WINS))


def filter_votes(collected: VoteSet, hist_ratings: RatingVector | np.ndarray, tau: float
                 ) -> VoteSet:
    """Drop votes where a confident historical underdog is recorded as winning.

    Ties are always kept and record order is preserved.
    """
    return collected.take(~filter_mask(collected, hist_ratings, tau))
