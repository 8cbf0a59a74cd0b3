"""Vote rigging and anti-rigging defenses for Bradley-Terry leaderboards."""

from .config import ConfigError, DataError, SimulationConfig, ThreatModel, load_config, \
    parse_config
from .deanon import IdentityGuess, OracleConfig, predict_battle, predict_identity
from .defense import DefenseConfig, duplicate_gate, filter_votes, likelihood_flag
from .harness import run_grid, run_simulation
from .ratings import RatingVector, fit_bt, online_update, rank_of, ranking_table, win_rate
from .report import SimulationReport, emit_report, load_report
from .rigging import StrategyConfig, VoteDecision, manipulate_omni_bt, manipulate_omni_on, \
    manipulate_target_only
from .sampling import OutcomeModel, PairDistribution, sample_normal_outcome, sample_pair
from .votes import VoteOutcome, VoteSet, append_vote, parse_battle_records

__all__ = [
    "ConfigError", "DataError", "DefenseConfig", "IdentityGuess", "OracleConfig",
    "OutcomeModel", "PairDistribution", "RatingVector", "SimulationConfig",
    "SimulationReport", "StrategyConfig", "ThreatModel", "VoteDecision", "VoteOutcome",
    "VoteSet", "append_vote", "duplicate_gate", "emit_report", "filter_votes", "fit_bt",
    "likelihood_flag", "load_config", "load_report", "manipulate_omni_bt",
    "manipulate_omni_on", "manipulate_target_only", "online_update", "parse_battle_records",
    "parse_config", "predict_battle", "predict_identity", "rank_of", "ranking_table",
    "run_grid", "run_simulation", "sample_normal_outcome", "sample_pair", "win_rate",
]
