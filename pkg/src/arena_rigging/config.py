"""Simulation configuration and the flat ``key = value`` config format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .deanon import MODES as ORACLE_MODES
from .defense import DefenseConfig

HIST_ACCESS = ("full_votes", "scores_only")
IDENTITY = ("real_name", "anonymous")
SAMPLING = ("uniform", "target_scaled", "empirical")
STRATEGIES = ("none", "t_tie", "t_abstain", "t_random", "t_normal", "omni_bt", "omni_on")


class ConfigError(ValueError):
    """Invalid or inconsistent simulation configuration."""


class DataError(ValueError):
    """The configured dataset cannot be loaded or does not fit the config."""


@dataclass(frozen=True)
class ThreatModel:
    """Adversary accessibility along the four threat-model axes."""

    hist_access: str = "full_votes"
    identity: str = "real_name"
    sampling_known: bool = True
    concurrent_votes: int = 0


@dataclass(frozen=True)
class SimulationConfig:
    """Every knob of one simulation run.

    ``dataset`` is a cleaned-battles JSON path or ``synthetic``, in which case
    the ``synthetic_*`` keys describe the generated leaderboard. ``models``
    optionally restricts the dataset to a comma-separated list of names.
    ``target`` names the model being promoted. Keys holding ``None`` disable
    the corresponding feature.
    """

    dataset: str = "synthetic"
    synthetic_models: int = 20
    synthetic_spacing: float = 25.0
    synthetic_votes: int = 50_000
    synthetic_tie_rate: float = 0.2
    synthetic_seed: int = 0
    models: str | None = None
    split_fraction: float = 0.9
    split_seed: int = 0
    split_mode: str = "random"

    target: str | None = None
    hist_access: str = "full_votes"
    identity: str = "real_name"
    oracle_mode: str = "perfect"
    oracle_param: float = 1.0
    oracle_unrecognized: str | None = None
    sampling_known: bool = True
    concurrent_votes: int = 0

    sampling: str = "uniform"
    sampling_beta: float | None = None

    strategy: str = "none"
    objective: str | None = None
    mu: float = 4.0
    update_local: bool = False
    normal_mix: float = 0.0
    anonymous_fallback: str = "abstain"
    refit_every: int = 100
    assumed_tie_rate: float = 0.2

    duplicate_eta: int | None = None
    suspension_length: int = 200
    likelihood_alpha: float | None = None
    likelihood_min_history: int = 20
    likelihood_null_users: int = 1000
    filter_tau: float | None = None
    suspension_visible: bool = False

    n_votes: int = 20_000
    checkpoint_interval: int = 500
    accounts: int = 1
    tolerance: float = 1e-9
    max_iterations: int = 500
    seed: int = 0

    @property
    def threat_model(self) -> ThreatModel:
        return ThreatModel(self.hist_access, self.identity, self.sampling_known,
                           self.concurrent_votes)

    @property
    def defense(self) -> DefenseConfig:
        return DefenseConfig(
            duplicate_eta=self.duplicate_eta,
            suspension_length=self.suspension_length,
            likelihood_alpha=self.likelihood_alpha,
            likelihood_min_history=self.likelihood_min_history,
            likelihood_null_users=self.likelihood_null_users,
            filter_tau=self.filter_tau,
            suspension_visible=self.suspension_visible,
        )

    def replace(self, **changes: Any) -> SimulationConfig:
        unknown = set(changes) - FIELD_NAMES
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        """Raise :class:`ConfigError` on any inconsistency."""
        def choice(key: str, allowed: tuple[str, ...]) -> None:
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {', '.join(allowed)}")

        choice("hist_access", HIST_ACCESS)
        choice("identity", IDENTITY)
        choice("sampling", SAMPLING)
        choice("strategy", STRATEGIES)
        choice("oracle_mode", ORACLE_MODES)
        if self.split_mode == "temporal":
            raise ConfigError("temporal splits are not implemented; use split_mode = random")
        choice("split_mode", ("random",))
        if not 0.0 < self.split_fraction <= 1.0:
            raise ConfigError("split_fraction must lie in (0, 1]")
        if self.n_votes < 0:
            raise ConfigError("n_votes must be non-negative")
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval must be positive")
        if self.concurrent_votes < 0:
            raise ConfigError("concurrent_votes must be non-negative")
        if self.accounts < 1:
            raise ConfigError("accounts must be positive")
        if self.strategy == "omni_bt" and self.hist_access != "full_votes":
            raise ConfigError("omni_bt needs hist_access = full_votes")
        if self.identity == "real_name" and self.oracle_mode != "perfect":
            raise ConfigError("real_name identity implies oracle_mode = perfect")
        if self.strategy != "none" and self.target is None:
            raise ConfigError("a rigging strategy needs a target")
        if self.sampling == "target_scaled" and (self.sampling_beta is None or self.target is None):
            raise ConfigError("target_scaled sampling needs sampling_beta and target")
        if self.dataset == "synthetic" and self.synthetic_models < 2:
            raise ConfigError("synthetic leaderboards need at least two models")
        try:
            self.defense
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


FIELD_NAMES = frozenset(f.name for f in dataclasses.fields(SimulationConfig))

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _field_type(name: str) -> str:
    return next(f.type for f in dataclasses.fields(SimulationConfig) if f.name == name)


def coerce_value(key: str, raw: Any) -> Any:
    """Convert a raw (usually string) value to the type of config field ``key``."""
    if key not in FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    typ = str(_field_type(key))
    optional = "None" in typ
    if not isinstance(raw, str):
        if raw is None and not optional:
            raise ConfigError(f"{key} cannot be none")
        return raw
    text = raw.strip()
    if optional and text.lower() in ("none", "null", "", "inf", "disabled"):
        return None
    base = typ.replace("| None", "").strip()
    try:
        if base == "bool":
            return _BOOL[text.lower()]
        if base == "int":
            return int(text.replace("_", ""))
        if base == "float":
            return float(text)
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {base}") from None
    return text


def parse_config(text: str, base: SimulationConfig | None = None) -> SimulationConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = coerce_value(key, raw)
    return (base or SimulationConfig()).replace(**values)


def load_config(path: str | Path) -> SimulationConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: SimulationConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if v is None else str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"
