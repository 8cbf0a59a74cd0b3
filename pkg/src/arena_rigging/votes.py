"""Battle records, vote sets and dataset ingestion.

A :class:`VoteSet` stores the raw battle stream column-wise together with the
directed comparison matrix ``counts`` where ``counts[i, j]`` is the number of
times model ``i`` was preferred over model ``j``. A tie contributes one
comparison in each direction and an abstention contributes nothing.
"""

from __future__ import annotations

import enum
import io
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import IO, Any

import numpy as np
import numpy.typing as npt


class VoteOutcome(enum.IntEnum):
    A_WINS = 0
    B_WINS = 1
    TIE = 2
    ABSTAIN = 3


#: Canonical one-letter codes used by the line-oriented serialization.
OUTCOME_CODES = {VoteOutcome.A_WINS: "A", VoteOutcome.B_WINS: "B", VoteOutcome.TIE: "T"}

WINNER_TOKENS = {
    "model_a": VoteOutcome.A_WINS,
    "model_b": VoteOutcome.B_WINS,
    "tie": VoteOutcome.TIE,
    "tie (bothbad)": VoteOutcome.TIE,
}


class InvalidBattleError(ValueError):
    """A battle between a model and itself."""


class ParseError(ValueError):
    """Malformed battle-record input."""


@dataclass(frozen=True)
class VoteRecord:
    a: int
    b: int
    outcome: VoteOutcome
    user: str | None = None
    seq: int = 0


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def counts_from_columns(
    k: int,
    a: npt.NDArray[np.int64],
    b: npt.NDArray[np.int64],
    outcome: npt.NDArray[np.int8],
) -> npt.NDArray[np.int64]:
    """Rebuild the directed comparison matrix from battle columns."""
    counts = np.zeros((k, k), dtype=np.int64)
    a_or_tie = (outcome == VoteOutcome.A_WINS) | (outcome == VoteOutcome.TIE)
    b_or_tie = (outcome == VoteOutcome.B_WINS) | (outcome == VoteOutcome.TIE)
    np.add.at(counts, (a[a_or_tie], b[a_or_tie]), 1)
    np.add.at(counts, (b[b_or_tie], a[b_or_tie]), 1)
    return counts


@dataclass(frozen=True, eq=False)
class VoteSet:
    """Immutable multiset of recorded battles over a fixed model table.

    Abstentions are never stored, so every record contributes at least one
    directed comparison to ``counts``.
    """

    names: tuple[str, ...]
    a: npt.NDArray[np.int64]
    b: npt.NDArray[np.int64]
    outcome: npt.NDArray[np.int8]
    seq: npt.NDArray[np.int64]
    users: tuple[str | None, ...]
    counts: npt.NDArray[np.int64] = field(repr=False)

    @classmethod
    def empty(cls, names: Sequence[str]) -> VoteSet:
        return cls.from_columns(names, [], [], [])

    @classmethod
    def from_columns(
        cls,
        names: Sequence[str],
        a: Iterable[int],
        b: Iterable[int],
        outcome: Iterable[int],
        seq: Iterable[int] | None = None,
        users: Iterable[str | None] | None = None,
    ) -> VoteSet:
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("model names must be unique")
        k = len(names)
        a = np.asarray(list(a) if not isinstance(a, np.ndarray) else a, dtype=np.int64)
        b = np.asarray(list(b) if not isinstance(b, np.ndarray) else b, dtype=np.int64)
        outcome = np.asarray(
            list(outcome) if not isinstance(outcome, np.ndarray) else outcome, dtype=np.int8
        )
        if not (a.shape == b.shape == outcome.shape):
            raise ValueError("column lengths differ")
        if a.size and (a.min() < 0 or b.min() < 0 or a.max() >= k or b.max() >= k):
            raise IndexError("model index out of range")
        if np.any(a == b):
            raise InvalidBattleError("a battle needs two distinct models")
        keep = outcome != VoteOutcome.ABSTAIN
        if seq is None:
            seq_arr = np.arange(a.size, dtype=np.int64)
        else:
            seq_arr = np.asarray(list(seq) if not isinstance(seq, np.ndarray) else seq,
                                 dtype=np.int64)
        if users is None:
            users_t: tuple[str | None, ...] = (None,) * a.size
        else:
            users_t = tuple(users)
        if seq_arr.shape != a.shape or len(users_t) != a.size:
            raise ValueError("column lengths differ")
        if not keep.all():
            a, b, outcome, seq_arr = a[keep], b[keep], outcome[keep], seq_arr[keep]
            users_t = tuple(u for u, k_ in zip(users_t, keep) if k_)
        if seq_arr.size > 1 and np.any(np.diff(seq_arr) <= 0):
            raise ValueError("seq must be strictly increasing")
        counts = counts_from_columns(k, a, b, outcome)
        return cls(
            names=names,
            a=_readonly(a),
            b=_readonly(b),
            outcome=_readonly(outcome),
            seq=_readonly(seq_arr),
            users=users_t,
            counts=_readonly(counts),
        )

    @classmethod
    def from_records(cls, names: Sequence[str], records: Iterable[VoteRecord]) -> VoteSet:
        records = list(records)
        return cls.from_columns(
            names,
            [r.a for r in records],
            [r.b for r in records],
            [int(r.outcome) for r in records],
            [r.seq for r in records],
            [r.user for r in records],
        )

    @property
    def n_models(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return int(self.a.size)

    @property
    def n_comparisons(self) -> int:
        return int(self.counts.sum())

    @property
    def next_seq(self) -> int:
        return int(self.seq[-1]) + 1 if self.seq.size else 0

    @property
    def records(self) -> list[VoteRecord]:
        return [
            VoteRecord(int(a), int(b), VoteOutcome(int(o)), u, int(s))
            for a, b, o, u, s in zip(self.a, self.b, self.outcome, self.users, self.seq)
        ]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown model {name!r}") from None

    def take(self, mask_or_index: npt.ArrayLike) -> VoteSet:
        """Subset of records, in original order, over the same model table."""
        idx = np.asarray(mask_or_index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        idx = np.sort(idx)
        return VoteSet.from_columns(
            self.names,
            self.a[idx],
            self.b[idx],
            self.outcome[idx],
            self.seq[idx],
            [self.users[i] for i in idx],
        )

    def concat(self, other: VoteSet) -> VoteSet:
        """Union of two vote sets over the same table, re-sequenced in order."""
        if other.names != self.names:
            raise ValueError("vote sets use different model tables")
        n = len(self) + len(other)
        return VoteSet.from_columns(
            self.names,
            np.concatenate([self.a, other.a]),
            np.concatenate([self.b, other.b]),
            np.concatenate([self.outcome, other.outcome]),
            np.arange(n, dtype=np.int64),
            self.users + other.users,
        )


def append_vote(
    votes: VoteSet,
    a: int,
    b: int,
    outcome: VoteOutcome,
    user: str | None = None,
) -> VoteSet:
    """Return ``votes`` with one more battle; the input is left untouched."""
    if a == b:
        raise InvalidBattleError(f"model {a} cannot battle itself")
    outcome = VoteOutcome(outcome)
    if outcome is VoteOutcome.ABSTAIN:
        return votes
    k = votes.n_models
    if not (0 <= a < k and 0 <= b < k):
        raise IndexError("model index out of range")
    counts = votes.counts.copy()
    if outcome in (VoteOutcome.A_WINS, VoteOutcome.TIE):
        counts[a, b] += 1
    if outcome in (VoteOutcome.B_WINS, VoteOutcome.TIE):
        counts[b, a] += 1
    return VoteSet(
        names=votes.names,
        a=_readonly(np.append(votes.a, a)),
        b=_readonly(np.append(votes.b, b)),
        outcome=_readonly(np.append(votes.outcome, np.int8(outcome))),
        seq=_readonly(np.append(votes.seq, votes.next_seq)),
        users=votes.users + (user,),
        counts=_readonly(counts),
    )


def _load_json(source: bytes | str | IO[Any]) -> Any:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        return json.loads(source)
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)


def parse_battle_records(source: bytes | str | IO[Any]) -> VoteSet:
    """Parse a cleaned-battles JSON array into a :class:`VoteSet`.

    Each record needs string fields ``model_a``, ``model_b`` and ``winner``.
    Model names get dense indices in order of first appearance and records
    keep their file order as ``seq``. The optional ``judge`` field is kept as
    the user tag.
    """
    try:
        data = _load_json(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError("expected a JSON array of battle records")

    index: dict[str, int] = {}
    a_col, b_col, out_col, users = [], [], [], []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise ParseError(f"record {i}: expected an object")
        for key in ("model_a", "model_b", "winner"):
            if key not in rec:
                raise ParseError(f"record {i}: missing field {key!r}")
            if not isinstance(rec[key], str):
                raise ParseError(f"record {i}: field {key!r} must be a string")
        winner = rec["winner"]
        if winner not in WINNER_TOKENS:
            raise ParseError(f"record {i}: unknown winner {winner!r}")
        if rec["model_a"] == rec["model_b"]:
            raise ParseError(f"record {i}: model_a equals model_b")
        a = index.setdefault(rec["model_a"], len(index))
        b = index.setdefault(rec["model_b"], len(index))
        a_col.append(a)
        b_col.append(b)
        out_col.append(int(WINNER_TOKENS[winner]))
        judge = rec.get("judge")
        users.append(judge if isinstance(judge, str) else None)
    return VoteSet.from_columns(list(index), a_col, b_col, out_col, users=users)


def dump_battle_records(votes: VoteSet) -> str:
    """Serialize to the cleaned-battles JSON schema accepted by the parser."""
    inverse = {v: k for k, v in WINNER_TOKENS.items() if k != "tie (bothbad)"}
    out = []
    for a, b, o, u in zip(votes.a, votes.b, votes.outcome, votes.users):
        rec = {
            "model_a": votes.names[a],
            "model_b": votes.names[b],
            "winner": inverse[VoteOutcome(int(o))],
        }
        if u is not None:
            rec["judge"] = u
        out.append(rec)
    return json.dumps(out)


def write_canonical(votes: VoteSet, stream: IO[str] | None = None) -> str:
    """One ``a_name,b_name,outcome,seq`` line per record with outcome in A/B/T."""
    buf = stream if stream is not None else io.StringIO()
    for a, b, o, s in zip(votes.a, votes.b, votes.outcome, votes.seq):
        name_a, name_b = votes.names[a], votes.names[b]
        if "," in name_a or "," in name_b:
            raise ValueError("model names containing commas cannot be serialized")
        buf.write(f"{name_a},{name_b},{OUTCOME_CODES[VoteOutcome(int(o))]},{int(s)}\n")
    return buf.getvalue() if stream is None else ""


def read_canonical(text: str, names: Sequence[str] | None = None) -> VoteSet:
    """Inverse of :func:`write_canonical`.

    With ``names`` the records are mapped onto that table, otherwise names are
    indexed by first appearance.
    """
    decode = {v: k for k, v in OUTCOME_CODES.items()}
    index: dict[str, int] = {n: i for i, n in enumerate(names)} if names is not None else {}
    a_col, b_col, out_col, seq_col = [], [], [], []
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4 or parts[2] not in decode:
            raise ParseError(f"line {lineno}: malformed record {line!r}")
        for name in parts[:2]:
            if name not in index:
                if names is not None:
                    raise ParseError(f"line {lineno}: unknown model {name!r}")
                index[name] = len(index)
        a_col.append(index[parts[0]])
        b_col.append(index[parts[1]])
        out_col.append(int(decode[parts[2]]))
        try:
            seq_col.append(int(parts[3]))
        except ValueError:
            raise ParseError(f"line {lineno}: bad seq {parts[3]!r}") from None
    table = list(names) if names is not None else list(index)
    return VoteSet.from_columns(table, a_col, b_col, out_col, seq_col)


def split_historical(
    votes: VoteSet, fraction: float, seed: int
) -> tuple[VoteSet, VoteSet]:
    """Uniform random by-record split into historical and held-out votes.

    Both parts keep the original record order and the full model table.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    n = len(votes)
    n_hist = int(round(fraction * n))
    perm = np.random.default_rng(seed).permutation(n)
    hist = np.zeros(n, dtype=bool)
    hist[perm[:n_hist]] = True
    return votes.take(hist), votes.take(~hist)


def filter_by_models(votes: VoteSet, keep: Iterable[int | str]) -> VoteSet:
    """Keep battles whose two models both belong to ``keep``.

    The kept models are re-indexed densely in their original relative order.
    """
    indices = set()
    for m in keep:
        idx = votes.index(m) if isinstance(m, str) else int(m)
        if not 0 <= idx < votes.n_models:
            raise KeyError(f"unknown model index {idx}")
        indices.add(idx)
    if not indices:
        raise ValueError("keep must name at least one model")
    kept = sorted(indices)
    remap = np.full(votes.n_models, -1, dtype=np.int64)
    remap[kept] = np.arange(len(kept))
    mask = (remap[votes.a] >= 0) & (remap[votes.b] >= 0)
    idx = np.flatnonzero(mask)
    return VoteSet.from_columns(
        [votes.names[i] for i in kept],
        remap[votes.a[idx]],
        remap[votes.b[idx]],
        votes.outcome[idx],
        votes.seq[idx],
        [votes.users[i] for i in idx],
    )

