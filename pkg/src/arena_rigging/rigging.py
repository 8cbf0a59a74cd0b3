"""Vote manipulation strategies: target-only, Omni-BT and Omni-On."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .deanon import IdentityGuess
from .ratings import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    RatingVector,
    _component_projector,
    fit_counts,
    online_update,
    to_elo,
    win_rate,
)
from .sampling import OutcomeModel, sample_normal_outcome
from .votes import VoteOutcome, VoteSet

TARGET_ONLY = "target_only"
OMNI_BT = "omni_bt"
OMNI_ON = "omni_on"
KINDS = (TARGET_ONLY, OMNI_BT, OMNI_ON)

PASSIVE_OPTIONS = ("tie", "abstain", "random", "normal")
BT_OBJECTIVES = ("relative", "absolute")
ON_OBJECTIVES = ("avg", "min", "max")

#: Candidate order; also the tie-break order of every argmax below.
OPTIONS = (VoteOutcome.A_WINS, VoteOutcome.B_WINS, VoteOutcome.TIE, VoteOutcome.ABSTAIN)

# objective values closer than this (Elo points or win-rate units) count as equal
TIE_TOLERANCE = 1e-7


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyConfig:
    """Which manipulation function to run against target model ``target``.

    ``objective`` defaults to ``relative`` for Omni-BT and ``avg`` for
    Omni-On. ``normal_mix`` is the probability of casting a normal-user vote
    instead of the strategy's choice. ``anonymous_fallback`` decides what the
    omnipresent strategies do when a side cannot be identified: ``abstain``
    or ``normal``.
    """

    kind: str
    target: int
    passive: str = "abstain"
    objective: str | None = None
    mu: float = 4.0
    update_local: bool = False
    normal_mix: float = 0.0
    anonymous_fallback: str = "abstain"
    refit_every: int = 100

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise StrategyError(f"unknown strategy kind {self.kind!r}")
        if self.kind == TARGET_ONLY and self.passive not in PASSIVE_OPTIONS:
            raise StrategyError(f"unknown passive option {self.passive!r}")
        if self.objective is None:
            default = {OMNI_BT: "relative", OMNI_ON: "avg"}.get(self.kind)
            object.__setattr__(self, "objective", default)
        if self.kind == OMNI_BT and self.objective not in BT_OBJECTIVES:
            raise StrategyError(f"unknown Omni-BT objective {self.objective!r}")
        if self.kind == OMNI_ON:
            if self.objective not in ON_OBJECTIVES:
                raise StrategyError(f"unknown Omni-On objective {self.objective!r}")
            if not self.mu > 0:
                raise StrategyError("Omni-On needs mu > 0")
        if not 0.0 <= self.normal_mix <= 1.0:
            raise StrategyError("normal_mix must lie in [0, 1]")
        if self.anonymous_fallback not in ("abstain", "normal"):
            raise StrategyError("anonymous_fallback must be 'abstain' or 'normal'")
        if self.refit_every < 1:
            raise StrategyError("refit_every must be positive")

    @property
    def label(self) -> str:
        if self.kind == TARGET_ONLY:
            return f"T-{self.passive.capitalize()}"
        return "Omni-BT" if self.kind == OMNI_BT else "Omni-On"


@dataclass(frozen=True)
class VoteDecision:
    outcome: VoteOutcome
    objective_values: tuple[float, ...] = ()
    source: str = "strategy"


def _argmax(values: list[float]) -> int:
    best = max(values)
    return next(i for i, v in enumerate(values) if v >= best - TIE_TOLERANCE)


# -- target-only ------------------------------------------------------------

def manipulate_target_only(
    cfg: StrategyConfig,
    a_guess: IdentityGuess,
    b_guess: IdentityGuess,
    outcome_model: OutcomeModel | None,
    ratings: RatingVector | np.ndarray | None,
    rng: np.random.Generator,
) -> VoteDecision:
    """Vote for the target whenever it is recognized, otherwise go passive."""
    if a_guess.guess == cfg.target:
        return VoteDecision(VoteOutcome.A_WINS)
    if b_guess.guess == cfg.target:
        return VoteDecision(VoteOutcome.B_WINS)
    if cfg.passive == "tie":
        return VoteDecision(VoteOutcome.TIE, source="passive")
    if cfg.passive == "abstain":
        return VoteDecision(VoteOutcome.ABSTAIN, source="passive")
    if cfg.passive == "random":
        return VoteDecision(OPTIONS[int(rng.integers(3))], source="passive")
    if outcome_model is None:
        raise StrategyError("T-Normal needs an outcome model")
    a, b = a_guess.guess, b_guess.guess
    if a is not None and a == b:
        a = b = None
    return VoteDecision(sample_normal_outcome(outcome_model, a, b, ratings, rng),
                        source="passive")


# -- Omni-BT ----------------------------------------------------------------

def omni_bt_objective(ratings: RatingVector | np.ndarray, t: int, objective: str = "relative",
                      rival: int | None = None) -> float:
    """Rigging objective for Omni-BT.

    ``relative`` is the margin between the target and ``rival``, by default
    the model ranked one place above it in ``ratings`` (the runner-up when
    the target leads); ``absolute`` is the target's own score.
    """
    r = ratings.scores if isinstance(ratings, RatingVector) else np.asarray(ratings, dtype=float)
    if r.size < 2:
        raise StrategyError("objective needs at least two models")
    if objective == "absolute":
        return float(r[t])
    if objective != "relative":
        raise StrategyError(f"unknown Omni-BT objective {objective!r}")
    if rival is None:
        rival = next_above(r, t)
    return float(r[t] - r[rival])


def next_above(scores: np.ndarray, t: int) -> int:
    """Index of the model ranked exactly one position ahead of ``t``.

    Falls back to the best other model when ``t`` is on top.
    """
    r = np.asarray(scores, dtype=float)
    others = np.arange(r.size) != t
    above = others & (r > r[t])
    if above.any():
        cand = np.flatnonzero(above)
        return int(cand[np.argmin(r[cand])])
    cand = np.flatnonzero(others)
    return int(cand[np.argmax(r[cand])])


def _bump(counts: np.ndarray, a: int, b: int, outcome: VoteOutcome) -> np.ndarray:
    out = counts.copy()
    if outcome in (VoteOutcome.A_WINS, VoteOutcome.TIE):
        out[a, b] += 1
    if outcome in (VoteOutcome.B_WINS, VoteOutcome.TIE):
        out[b, a] += 1
    return out


def _omni_identities(a_guess: IdentityGuess, b_guess: IdentityGuess) -> tuple[int, int] | None:
    if not (a_guess.known and b_guess.known) or a_guess.guess == b_guess.guess:
        return None
    return int(a_guess.guess), int(b_guess.guess)


def evaluate_omni_bt(
    counts: np.ndarray,
    current: np.ndarray,
    a: int,
    b: int,
    t: int,
    objective: str,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    warm: bool = True,
    structure: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[list[float], list[np.ndarray]]:
    """Objective value and fitted natural vector for each of the four options.

    ``current`` is the fit of ``counts`` itself; with ``warm=False`` every
    candidate, Abstain included, is refit from zero. The relative objective
    measures every candidate against the model just above the target in
    ``current``, so overtaking it registers as a gain.
    """
    rival = next_above(current, t)
    values, fits = [], []
    for option in OPTIONS:
        if option is VoteOutcome.ABSTAIN:
            if warm:
                xi = current
            else:
                xi = fit_counts(counts, tolerance, max_iterations).natural
        else:
            cand = _bump(counts, a, b, option)
            init = current if warm else None
            xi = fit_counts(cand, tolerance, max_iterations, init=init,
                            _structure=structure if warm else None).natural
        fits.append(xi)
        values.append(omni_bt_objective(to_elo(xi), t, objective, rival))
    return values, fits


def manipulate_omni_bt(
    local_votes: VoteSet,
    a_guess: IdentityGuess,
    b_guess: IdentityGuess,
    cfg: StrategyConfig,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    current: RatingVector | None = None,
) -> VoteDecision:
    """Pick the option whose refit maximizes the Omni-BT objective.

    ``current`` optionally supplies the fit of ``local_votes`` for warm starts;
    without it everything is fit from scratch.
    """
    ids = _omni_identities(a_guess, b_guess)
    if ids is None:
        return VoteDecision(VoteOutcome.ABSTAIN, source="fallback")
    counts = local_votes.counts
    warm = current is not None
    base = current.natural if warm else fit_counts(counts, tolerance, max_iterations).natural
    values, _ = evaluate_omni_bt(counts, base, ids[0], ids[1], cfg.target, cfg.objective,
                                 tolerance, max_iterations, warm=warm)
    return VoteDecision(OPTIONS[_argmax(values)], tuple(values))


class OmniBTAdversary:
    """Omni-BT with an incrementally maintained local vote set.

    The local set starts as the historical votes and grows with every
    manipulated vote, recorded under the guessed identities. Candidates are
    refit warm from the current local fit; an exact cold refit runs every
    ``cfg.refit_every`` recorded votes.
    """

    def __init__(self, cfg: StrategyConfig, hist: VoteSet,
                 tolerance: float = DEFAULT_TOLERANCE,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS) -> None:
        if cfg.kind != OMNI_BT:
            raise StrategyError("OmniBTAdversary needs an omni_bt config")
        self.cfg = cfg
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.counts = hist.counts.astype(np.int64).copy()
        self._since_refit = 0
        self._refit()

    def _refit(self) -> None:
        n_games = self.counts + self.counts.T
        self._structure = _component_projector(n_games)
        self.current = fit_counts(self.counts, self.tolerance, self.max_iterations).natural
        self._since_refit = 0

    def decide(self, a_guess: IdentityGuess, b_guess: IdentityGuess) -> VoteDecision:
        ids = _omni_identities(a_guess, b_guess)
        if ids is None:
            return VoteDecision(VoteOutcome.ABSTAIN, source="fallback")
        a, b = ids
        # a new edge can merge components, so the cached projector is stale
        structure = self._structure if self.counts[a, b] + self.counts[b, a] > 0 else None
        values, fits = evaluate_omni_bt(self.counts, self.current, a, b, self.cfg.target,
                                        self.cfg.objective, self.tolerance,
                                        self.max_iterations, structure=structure)
        choice = _argmax(values)
        self._pending = (a, b, OPTIONS[choice], fits[choice])
        return VoteDecision(OPTIONS[choice], tuple(values))

    def observe(self, a_guess: IdentityGuess, b_guess: IdentityGuess,
                outcome: VoteOutcome) -> None:
        """Add the adversary's own submitted vote to its local view."""
        ids = _omni_identities(a_guess, b_guess)
        if ids is None or outcome is VoteOutcome.ABSTAIN:
            return
        a, b = ids
        new_edge = self.counts[a, b] + self.counts[b, a] == 0
        self.counts = _bump(self.counts, a, b, outcome)
        pending = getattr(self, "_pending", None)
        self._pending = None
        self._since_refit += 1
        if new_edge or self._since_refit >= self.cfg.refit_every:
            self._refit()
        elif pending is not None and pending[:3] == (a, b, outcome):
            self.current = pending[3]
        else:
            self.current = fit_counts(self.counts, self.tolerance, self.max_iterations,
                                      init=self.current, _structure=self._structure).natural


# -- Omni-On ----------------------------------------------------------------

_GAMMAS = {VoteOutcome.A_WINS: 1.0, VoteOutcome.B_WINS: 0.0, VoteOutcome.TIE: 0.5}


def omni_on_values(scores: np.ndarray, a: int, b: int, t: int, mu: float,
                   objective: str = "avg") -> list[float]:
    """Objective of each option for the battle ``(a, b)``.

    Each option moves ``a`` and ``b`` by one online Elo step; the objective
    aggregates the target's win rate against both updated opponents. When the
    target itself fights, its own updated rating is the one compared.
    """
    values = []
    for option in OPTIONS:
        if option is VoteOutcome.ABSTAIN:
            ra, rb = float(scores[a]), float(scores[b])
        else:
            pair = online_update(scores, a, b, _GAMMAS[option], mu)
            ra, rb = pair.r_a_on, pair.r_b_on
        rt = ra if t == a else rb if t == b else float(scores[t])
        wa, wb = float(win_rate(rt, ra)), float(win_rate(rt, rb))
        if objective == "avg":
            values.append(wa + wb)
        elif objective == "min":
            values.append(min(wa, wb))
        elif objective == "max":
            values.append(max(wa, wb))
        else:
            raise StrategyError(f"unknown Omni-On objective {objective!r}")
    return values


def manipulate_omni_on(
    public_ratings: RatingVector | np.ndarray,
    a_guess: IdentityGuess,
    b_guess: IdentityGuess,
    cfg: StrategyConfig,
) -> VoteDecision:
    """Choose the option with the best online-Elo win-rate objective.

    When ``cfg.update_local`` is set and ``public_ratings`` is a writable
    array, the chosen online values are written back into it.
    """
    ids = _omni_identities(a_guess, b_guess)
    if ids is None:
        return VoteDecision(VoteOutcome.ABSTAIN, source="fallback")
    a, b = ids
    scores = public_ratings.scores if isinstance(public_ratings, RatingVector) \
        else public_ratings
    values = omni_on_values(scores, a, b, cfg.target, cfg.mu, cfg.objective)
    choice = OPTIONS[_argmax(values)]
    if cfg.update_local and isinstance(scores, np.ndarray) and scores.flags.writeable \
            and choice is not VoteOutcome.ABSTAIN:
        pair = online_update(scores, a, b, _GAMMAS[choice], cfg.mu)
        scores[a], scores[b] = pair.r_a_on, pair.r_b_on
    return VoteDecision(choice, tuple(values))


class OmniOnAdversary:
    """Omni-On against a private copy of the public leaderboard snapshot."""

    def __init__(self, cfg: StrategyConfig, public: RatingVector) -> None:
        if cfg.kind != OMNI_ON:
            raise StrategyError("OmniOnAdversary needs an omni_on config")
        self.cfg = cfg
        self.snapshot = np.array(public.scores, dtype=float)

    def decide(self, a_guess: IdentityGuess, b_guess: IdentityGuess) -> VoteDecision:
        return manipulate_omni_on(self.snapshot, a_guess, b_guess, self.cfg)

    def observe(self, a_guess, b_guess, outcome) -> None:
        pass


@dataclass
class TargetOnlyAdversary:
    cfg: StrategyConfig
    outcome_model: OutcomeModel | None
    public: RatingVector | None
    rng: np.random.Generator = field(repr=False, default_factory=np.random.default_rng)

    def decide(self, a_guess: IdentityGuess, b_guess: IdentityGuess) -> VoteDecision:
        return manipulate_target_only(self.cfg, a_guess, b_guess, self.outcome_model,
                                      self.public, self.rng)

    def observe(self, a_guess, b_guess, outcome) -> None:
        pass


def apply_normal_mix(
    cfg: StrategyConfig,
    decision: VoteDecision,
    outcome_model: OutcomeModel,
    a: int | None,
    b: int | None,
    ratings: RatingVector | np.ndarray | None,
    rng: np.random.Generator,
) -> VoteDecision:
    """With probability ``cfg.normal_mix`` cast a normal-user vote instead."""
    if cfg.normal_mix <= 0.0:
        return decision
    if rng.random() >= cfg.normal_mix:
        return decision
    if a is not None and a == b:
        a = b = None
    return VoteDecision(sample_normal_outcome(outcome_model, a, b, ratings, rng),
                        decision.objective_values, source="normal_mix")
