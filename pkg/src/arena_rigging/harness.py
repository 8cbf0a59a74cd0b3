"""Simulation loop: sample battles, rig votes, apply defenses, refit."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from . import rigging
from .config import ConfigError, DataError, SimulationConfig
from .deanon import OracleConfig, predict_battle
from .defense import GateVerdict, UserLedger, duplicate_gate, filter_mask, likelihood_flag
from .ratings import RatingVector, fit_counts, rank_of, ranking_table
from .report import Checkpoint, SimulationReport, emit_report
from .rigging import StrategyConfig, VoteDecision, apply_normal_mix
from .sampling import (
    OutcomeModel,
    PairDistribution,
    sample_normal_outcome,
    sample_pair,
)
from .synthetic import synthetic_battles
from .votes import ParseError, VoteOutcome, VoteSet, filter_by_models, parse_battle_records, \
    split_historical

logger = logging.getLogger(__name__)

_PASSIVE = {"t_tie": "tie", "t_abstain": "abstain", "t_random": "random", "t_normal": "normal"}

ADVERSARY = "adversary"


def load_votes(cfg: SimulationConfig) -> VoteSet:
    """The full battle dataset named by ``cfg``, after the model filter."""
    if cfg.dataset == "synthetic":
        votes, _ = synthetic_battles(cfg.synthetic_models, cfg.synthetic_spacing,
                                     cfg.synthetic_votes, cfg.synthetic_tie_rate,
                                     cfg.synthetic_seed)
    else:
        try:
            with open(cfg.dataset, "rb") as fh:
                votes = parse_battle_records(fh)
        except OSError as exc:
            raise DataError(f"cannot read dataset {cfg.dataset}: {exc}") from exc
        except ParseError as exc:
            raise DataError(f"{cfg.dataset}: {exc}") from exc
    if cfg.models:
        names = [n.strip() for n in cfg.models.split(",") if n.strip()]
        try:
            votes = filter_by_models(votes, names)
        except KeyError as exc:
            raise DataError(str(exc)) from exc
    if len(votes) == 0:
        raise DataError("dataset contains no battles")
    return votes


def strategy_config(cfg: SimulationConfig, target: int) -> StrategyConfig | None:
    if cfg.strategy == "none":
        return None
    common = dict(target=target, normal_mix=cfg.normal_mix,
                  anonymous_fallback=cfg.anonymous_fallback)
    try:
        if cfg.strategy in _PASSIVE:
            return StrategyConfig(rigging.TARGET_ONLY, passive=_PASSIVE[cfg.strategy], **common)
        if cfg.strategy == "omni_bt":
            return StrategyConfig(rigging.OMNI_BT, objective=cfg.objective,
                                  refit_every=cfg.refit_every, **common)
        return StrategyConfig(rigging.OMNI_ON, objective=cfg.objective, mu=cfg.mu,
                              update_local=cfg.update_local, **common)
    except rigging.StrategyError as exc:
        raise ConfigError(str(exc)) from exc


def oracle_config(cfg: SimulationConfig, names: Sequence[str], target: int | None
                  ) -> OracleConfig:
    if cfg.identity == "real_name":
        return OracleConfig.perfect()
    k = len(names)
    recognized = None
    if cfg.oracle_unrecognized:
        hidden = {n.strip() for n in cfg.oracle_unrecognized.split(",") if n.strip()}
        missing = hidden - set(names)
        if missing:
            raise DataError(f"unknown models in oracle_unrecognized: {sorted(missing)}")
        recognized = [i for i, n in enumerate(names) if n not in hidden]
    try:
        if cfg.oracle_mode == "binary_target":
            if target is None:
                raise ConfigError("binary_target oracle needs a target")
            return OracleConfig.binary_target(target, cfg.oracle_param)
        if cfg.oracle_mode == "noisy_multiclass":
            return OracleConfig.noisy_multiclass(cfg.oracle_param, k, recognized)
        return OracleConfig(cfg.oracle_mode, cfg.oracle_param, k,
                            frozenset(recognized) if recognized is not None else None)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def pair_distribution(cfg: SimulationConfig, hist: VoteSet, target: int | None
                      ) -> PairDistribution:
    try:
        if cfg.sampling == "uniform":
            return PairDistribution.uniform(hist.n_models)
        if cfg.sampling == "target_scaled":
            return PairDistribution.target_scaled(hist.n_models, cfg.sampling_beta, target)
        return PairDistribution.empirical(hist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


class _Adversary:
    """Everything on the adversary's side of the threat model.

    Under ``scores_only`` access the strategies are built from the public
    leaderboard alone and never see the historical vote set.
    """

    def __init__(self, cfg: SimulationConfig, strat: StrategyConfig | None, hist: VoteSet,
                 public: RatingVector, rng: np.random.Generator) -> None:
        self.strat = strat
        self.public = public
        self.rng = rng
        if cfg.hist_access == "full_votes":
            self.outcome_model = OutcomeModel.from_votes(hist)
        else:
            self.outcome_model = OutcomeModel.from_ratings(hist.n_models, cfg.assumed_tie_rate)
        if strat is None:
            self.impl = None
        elif strat.kind == rigging.OMNI_BT:
            self.impl = rigging.OmniBTAdversary(strat, hist, cfg.tolerance, cfg.max_iterations)
        elif strat.kind == rigging.OMNI_ON:
            self.impl = rigging.OmniOnAdversary(strat, public)
        else:
            self.impl = rigging.TargetOnlyAdversary(strat, self.outcome_model, public, rng)

    def decide(self, ga, gb) -> VoteDecision:
        d = self.impl.decide(ga, gb)
        if d.source == "fallback" and self.strat.anonymous_fallback == "normal":
            d = VoteDecision(sample_normal_outcome(self.outcome_model, None, None, None,
                                                   self.rng), d.objective_values, "fallback")
        return apply_normal_mix(self.strat, d, self.outcome_model, ga.guess, gb.guess,
                                self.public, self.rng)

    def observe(self, ga, gb, outcome: VoteOutcome) -> None:
        self.impl.observe(ga, gb, outcome)


def _checkpoint_steps(n: int, interval: int) -> list[int]:
    steps = list(range(interval, n + 1, interval))
    if not steps or steps[-1] != n:
        steps.append(n)
    return [s for s in steps if s > 0]


def run_simulation(cfg: SimulationConfig) -> SimulationReport:
    """Run one rigging simulation and report the target's trajectory.

    Raises:
        ConfigError: inconsistent configuration, before any work is done.
        DataError: unusable dataset.
    """
    return simulate(cfg)[0]


def simulate(cfg: SimulationConfig) -> tuple[SimulationReport, VoteSet]:
    """:func:`run_simulation` that also returns every new vote that reached
    the ground-truth set before filtering, in arrival order.

    Rigged votes carry the adversary's user tag; concurrent votes have none.
    """
    cfg.validate()
    votes = load_votes(cfg)
    names = votes.names
    target = None
    if cfg.target is not None:
        if cfg.target not in names:
            raise DataError(f"target {cfg.target!r} is not in the dataset")
        target = names.index(cfg.target)
    strat = strategy_config(cfg, target) if target is not None else None
    oracle = oracle_config(cfg, names, target)

    hist, pool = split_historical(votes, cfg.split_fraction, cfg.split_seed)
    if len(hist) == 0:
        raise DataError("historical split is empty")
    if cfg.concurrent_votes > len(pool):
        raise DataError(f"concurrent_votes={cfg.concurrent_votes} exceeds the "
                        f"{len(pool)} held-out votes")
    dist = pair_distribution(cfg, hist, target)

    ss = np.random.SeedSequence(cfg.seed)
    (rng_pairs, rng_oracle, rng_strategy, rng_normal, rng_other,
     rng_lik) = (np.random.default_rng(s) for s in ss.spawn(6))

    public = fit_counts(hist.counts, cfg.tolerance, cfg.max_iterations, names=names)
    adversary = _Adversary(cfg, strat, hist, public, rng_strategy)
    normal_model = OutcomeModel.from_votes(hist)
    defense = cfg.defense
    ledger = UserLedger(defense.duplicate_eta, defense.suspension_length)

    # held-out votes arrive uniformly over the run
    n = cfg.n_votes
    m = cfg.concurrent_votes if n > 0 else 0
    other_idx = np.sort(rng_other.permutation(len(pool))[:m])
    other_at = np.sort(rng_other.integers(0, n, size=m)) if m else np.zeros(0, dtype=np.int64)

    # collected new votes in arrival order: a, b, outcome, rigged?
    col_a: list[int] = []
    col_b: list[int] = []
    col_o: list[int] = []
    col_rigged: list[bool] = []
    col_user: list[str | None] = []

    stats = dict(abstain=0, discarded_duplicate=0, discarded_likelihood=0,
                 discarded_filter=0, filtered_concurrent=0, accepted=0,
                 concurrent_added=0, flagged_users=[])
    checkpoints: list[Checkpoint] = []

    def fit_now() -> tuple[RatingVector, int, int]:
        collected = VoteSet.from_columns(names, col_a, col_b, col_o, users=col_user)
        dropped = np.zeros(len(collected), dtype=bool)
        if defense.filter_tau is not None and len(collected):
            dropped = filter_mask(collected, public, defense.filter_tau)
        counts = hist.counts + collected.take(~dropped).counts
        rigged = np.asarray(col_rigged, dtype=bool)
        fit = fit_counts(counts, cfg.tolerance, cfg.max_iterations,
                         init=checkpoints_fit[-1].natural if checkpoints_fit else None,
                         names=names)
        return fit, int((dropped & rigged).sum()), int((dropped & ~rigged).sum())

    checkpoints_fit: list[RatingVector] = [public]

    def record_checkpoint(step: int, fit: RatingVector) -> None:
        if target is None:
            checkpoints.append(Checkpoint(step, None, None, None, None, None))
            return
        ahead = rigging.next_above(fit.scores, target)
        checkpoints.append(Checkpoint(
            votes_cast=step,
            rank=rank_of(fit, target),
            score=float(fit.scores[target]),
            next_above=names[ahead],
            next_above_rank=rank_of(fit, ahead),
            next_above_score=float(fit.scores[ahead]),
        ))

    record_checkpoint(0, public)
    steps = set(_checkpoint_steps(n, cfg.checkpoint_interval))
    other_ptr = 0
    for step in range(n):
        while other_ptr < m and other_at[other_ptr] == step:
            j = other_idx[other_ptr]
            col_a.append(int(pool.a[j]))
            col_b.append(int(pool.b[j]))
            col_o.append(int(pool.outcome[j]))
            col_rigged.append(False)
            col_user.append(None)
            stats["concurrent_added"] += 1
            other_ptr += 1

        a, b = sample_pair(dist, rng_pairs)
        user = ADVERSARY if cfg.accounts == 1 else f"{ADVERSARY}-{step % cfg.accounts}"
        if strat is None:
            ga = gb = None
            outcome = sample_normal_outcome(normal_model, a, b, public, rng_normal)
        else:
            ga, gb = predict_battle(oracle, a, b, rng_oracle)
            outcome = adversary.decide(ga, gb).outcome

        verdict = GateVerdict.ACCEPT
        if defense.duplicate_eta is not None:
            verdict = duplicate_gate(ledger, user, outcome)
        if outcome is VoteOutcome.ABSTAIN:
            stats["abstain"] += 1
        elif verdict is GateVerdict.DISCARD:
            stats["discarded_duplicate"] += 1
        elif ledger.state(user).flagged:
            verdict = GateVerdict.DISCARD
            stats["discarded_likelihood"] += 1
        else:
            col_a.append(a)
            col_b.append(b)
            col_o.append(int(outcome))
            col_rigged.append(True)
            col_user.append(user)
            ledger.record(user, a, b, outcome)
            stats["accepted"] += 1

        if strat is not None and (verdict is GateVerdict.ACCEPT or not defense.suspension_visible):
            adversary.observe(ga, gb, outcome)

        if step + 1 in steps:
            if defense.likelihood_alpha is not None:
                for name_u, st in sorted(ledger.users.items()):
                    if st.flagged or len(st.history) < defense.likelihood_min_history:
                        continue
                    h = np.asarray(st.history, dtype=np.int64)
                    res = likelihood_flag(h[:, 0], h[:, 1], h[:, 2], normal_model,
                                          defense.likelihood_alpha, rng_lik, public,
                                          defense.likelihood_null_users,
                                          defense.likelihood_min_history)
                    if res.flagged:
                        st.flagged = True
                        stats["flagged_users"].append(name_u)
            fit, _, _ = fit_now()
            checkpoints_fit.append(fit)
            record_checkpoint(step + 1, fit)

    final, rigged_filtered, other_filtered = fit_now() if n > 0 else (public, 0, 0)
    collected = VoteSet.from_columns(names, col_a, col_b, col_o, users=col_user)
    stats["discarded_filter"] = rigged_filtered
    stats["filtered_concurrent"] = other_filtered
    stats["survived"] = stats["accepted"] - rigged_filtered

    initial_rank = checkpoints[0].rank
    final_rank = checkpoints[-1].rank
    report = SimulationReport(
        config=asdict(cfg),
        strategy=strat.label if strat is not None else "w/o rigging",
        target=cfg.target,
        n_models=len(names),
        n_votes=n,
        checkpoint_interval=cfg.checkpoint_interval,
        initial_rank=initial_rank,
        final_rank=final_rank,
        rank_increase=(initial_rank - final_rank) if target is not None else None,
        checkpoints=checkpoints,
        final_table=[(row.name, row.score, row.rank) for row in ranking_table(final)],
        defense={k: v for k, v in stats.items()},
        unidentified_ranks=final.n_components > 1,
    )
    return report, collected


def cell_seeds(base_seed: int, n: int) -> list[int]:
    """Independent per-cell seeds derived deterministically from ``base_seed``."""
    return [int(s.generate_state(1, dtype=np.uint32)[0])
            for s in np.random.SeedSequence(base_seed).spawn(n)]


def _run_cell(cfg: SimulationConfig) -> SimulationReport:
    try:
        return run_simulation(cfg)
    except Exception as exc:  # noqa: BLE001 - a failing cell must not stop the sweep
        logger.error("sweep cell failed: %s", exc)
        return SimulationReport.failed(asdict(cfg), str(exc))


def run_grid(base: SimulationConfig, axis: str, values: Iterable[Any],
             n_jobs: int = 1) -> list[SimulationReport]:
    """One simulation per value of config key ``axis``.

    Each cell uses its own seed derived from ``base.seed``; failures are
    reported in the affected cell and the sweep carries on.
    """
    values = list(values)
    if not values:
        return []
    seeds = cell_seeds(base.seed, len(values))
    cells = [base.replace(**{axis: v, "seed": s}) for v, s in zip(values, seeds)]
    if n_jobs == 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_cell, cells))


def write_outputs(report: SimulationReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(emit_report(report, "structured"))
    (out / "trajectory.csv").write_bytes(emit_report(report, "delimited-trajectory"))
    (out / "table.txt").write_bytes(emit_report(report, "table-text"))
