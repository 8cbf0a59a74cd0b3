"""Simulated de-anonymization of battle participants."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

PERFECT = "perfect"
ANONYMOUS_FRACTION = "anonymous_fraction"
NOISY_MULTICLASS = "noisy_multiclass"
BINARY_TARGET = "binary_target"
MODES = (PERFECT, ANONYMOUS_FRACTION, NOISY_MULTICLASS, BINARY_TARGET)


@dataclass(frozen=True, eq=False)
class OracleConfig:
    """How well the adversary can tell which model produced a response.

    ``param`` is the anonymous-battle probability for ``anonymous_fraction``
    and the top-1 accuracy for ``noisy_multiclass`` / ``binary_target``.
    ``recognized`` lists the models the classifier was trained on (all models
    when ``None``). ``confusion`` optionally replaces uniform
    misclassification: row ``k`` is the guess distribution for true model
    ``k`` over all model indices.
    """

    mode: str = PERFECT
    param: float = 1.0
    n_models: int = 0
    recognized: frozenset[int] | None = None
    target: int | None = None
    confusion: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown oracle mode {self.mode!r}")
        if not 0.0 <= self.param <= 1.0:
            raise ValueError("oracle probability must lie in [0, 1]")
        if self.recognized is not None:
            object.__setattr__(self, "recognized", frozenset(int(k) for k in self.recognized))
            if not self.recognized:
                raise ValueError("recognized must be nonempty")
        if self.mode == BINARY_TARGET and self.target is None:
            raise ValueError("binary_target oracle needs a target")
        if self.mode == NOISY_MULTICLASS and self.recognized is None and self.n_models < 2:
            raise ValueError("noisy_multiclass needs n_models or recognized")

    @property
    def recognized_list(self) -> np.ndarray:
        if self.recognized is None:
            return np.arange(self.n_models)
        return np.array(sorted(self.recognized), dtype=np.int64)

    @classmethod
    def perfect(cls) -> OracleConfig:
        return cls(PERFECT)

    @classmethod
    def anonymous_fraction(cls, p: float) -> OracleConfig:
        return cls(ANONYMOUS_FRACTION, p)

    @classmethod
    def noisy_multiclass(cls, accuracy: float, n_models: int,
                         recognized: Iterable[int] | None = None,
                         confusion: np.ndarray | None = None) -> OracleConfig:
        rec = frozenset(recognized) if recognized is not None else None
        return cls(NOISY_MULTICLASS, accuracy, n_models, rec, confusion=confusion)

    @classmethod
    def binary_target(cls, target: int, accuracy: float) -> OracleConfig:
        return cls(BINARY_TARGET, accuracy, target=target)


@dataclass(frozen=True)
class IdentityGuess:
    """``guess`` is ``None`` when no specific model is named: the battle was
    anonymous (``truth_hidden``) or a binary oracle answered "not the target"."""

    guess: int | None
    truth_hidden: bool = False

    @property
    def known(self) -> bool:
        return self.guess is not None


UNKNOWN = IdentityGuess(None, truth_hidden=True)


def _misclassify(cfg: OracleConfig, true_id: int, rng: np.random.Generator) -> int:
    rec = cfg.recognized_list
    others = rec[rec != true_id]
    if others.size == 0:
        return int(true_id)
    return int(others[rng.integers(others.size)])


def predict_identity(cfg: OracleConfig, true_id: int, rng: np.random.Generator
                     ) -> IdentityGuess:
    """Guess the model behind one response."""
    if cfg.mode == PERFECT:
        return IdentityGuess(int(true_id))
    if cfg.mode == ANONYMOUS_FRACTION:
        if rng.random() < cfg.param:
            return UNKNOWN
        return IdentityGuess(int(true_id))
    if cfg.mode == BINARY_TARGET:
        is_t = true_id == cfg.target
        said_t = is_t if rng.random() < cfg.param else not is_t
        return IdentityGuess(cfg.target if said_t else None)

    # noisy multiclass
    if cfg.confusion is not None:
        row = np.asarray(cfg.confusion[true_id], dtype=float)
        return IdentityGuess(int(rng.choice(row.size, p=row / row.sum())))
    rec = cfg.recognized_list
    if cfg.recognized is not None and true_id not in cfg.recognized:
        # outside the classifier's label set: it still names some known model
        return IdentityGuess(int(rec[rng.integers(rec.size)]))
    if rng.random() < cfg.param:
        return IdentityGuess(int(true_id))
    return IdentityGuess(_misclassify(cfg, true_id, rng))


def predict_battle(cfg: OracleConfig, a: int, b: int, rng: np.random.Generator
                   ) -> tuple[IdentityGuess, IdentityGuess]:
    """Guesses for both sides of a battle.

    Anonymity under ``anonymous_fraction`` is drawn once per battle and hides
    both models together.
    """
    if cfg.mode == ANONYMOUS_FRACTION:
        if rng.random() < cfg.param:
            return UNKNOWN, UNKNOWN
        return IdentityGuess(int(a)), IdentityGuess(int(b))
    return predict_identity(cfg, a, rng), predict_identity(cfg, b, rng)
