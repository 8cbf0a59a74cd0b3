"""Simulation reports and their text, trajectory and JSON renderings."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any

FORMATS = ("table-text", "delimited-trajectory", "structured")
_ALIASES = {"table": "table-text", "trajectory": "delimited-trajectory", "json": "structured"}

SCHEMA = "arena-rigging-report/1"


@dataclass(frozen=True)
class Checkpoint:
    votes_cast: int
    rank: int | None
    score: float | None
    next_above: str | None
    next_above_rank: int | None
    next_above_score: float | None


@dataclass
class SimulationReport:
    """Outcome of one run.

    ``rank_increase`` is the initial minus the final rank of the target, so a
    promotion is positive. ``unidentified_ranks`` is set when the comparison
    graph has several components, in which case ranks across components are
    not meaningful.
    """

    config: dict[str, Any]
    strategy: str
    target: str | None
    n_models: int
    n_votes: int
    checkpoint_interval: int
    initial_rank: int | None
    final_rank: int | None
    rank_increase: int | None
    checkpoints: list[Checkpoint] = field(default_factory=list)
    final_table: list[tuple[str, float, int]] = field(default_factory=list)
    defense: dict[str, Any] = field(default_factory=dict)
    unidentified_ranks: bool = False
    error: str | None = None

    @classmethod
    def failed(cls, config: dict[str, Any], error: str) -> SimulationReport:
        return cls(config=config, strategy="", target=config.get("target"), n_models=0,
                   n_votes=int(config.get("n_votes", 0)),
                   checkpoint_interval=int(config.get("checkpoint_interval", 0)),
                   initial_rank=None, final_rank=None, rank_increase=None, error=error)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["final_table"] = [list(row) for row in self.final_table]
        d["schema"] = SCHEMA
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SimulationReport:
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ValueError(f"unsupported report schema {schema!r}")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields: {sorted(unknown)}")
        d["checkpoints"] = [Checkpoint(**c) for c in d.get("checkpoints", [])]
        d["final_table"] = [(str(n), float(s), int(r)) for n, s, r in d.get("final_table", [])]
        return cls(**d)


def rank_cell(final_rank: int, initial_rank: int) -> str:
    """Render a final rank with its signed increase, e.g. ``84 (+8)``."""
    inc = initial_rank - final_rank
    return f"{final_rank} ({inc:+d})"


def _table_text(report: SimulationReport) -> str:
    out = io.StringIO()
    if report.error is not None:
        out.write(f"error: {report.error}\n")
        return out.getvalue()
    if report.target is not None and report.final_rank is not None:
        out.write(f"strategy: {report.strategy}\n")
        out.write(f"target: {report.target}\n")
        out.write(f"ranking: {rank_cell(report.final_rank, report.initial_rank)}\n")
    if report.unidentified_ranks:
        out.write("warning: comparison graph is disconnected; ranks across components "
                  "are unidentified\n")
    if report.final_table:
        width = max(len("model"), *(len(n) for n, _, _ in report.final_table))
        out.write(f"{'rank':>4}  {'model':<{width}}  {'score':>10}\n")
        for name, score, rank in report.final_table:
            out.write(f"{rank:>4}  {name:<{width}}  {score:>10.3f}\n")
    return out.getvalue()


def _trajectory(report: SimulationReport) -> str:
    lines = ["votes_cast,rank,score"]
    for c in report.checkpoints:
        rank = "" if c.rank is None else str(c.rank)
        score = "" if c.score is None else f"{c.score:.6f}"
        lines.append(f"{c.votes_cast},{rank},{score}")
    return "\n".join(lines) + "\n"


def emit_report(report: SimulationReport, fmt: str = "structured") -> bytes:
    """Serialize ``report``.

    ``table-text`` is the human-readable summary and ranking table,
    ``delimited-trajectory`` one ``votes_cast,rank,score`` line per
    checkpoint, and ``structured`` a JSON document accepted by
    :func:`load_report`.
    """
    fmt = _ALIASES.get(fmt, fmt)
    if fmt == "table-text":
        text = _table_text(report)
    elif fmt == "delimited-trajectory":
        text = _trajectory(report)
    elif fmt == "structured":
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return text.encode("utf-8")


def load_report(data: bytes | str) -> SimulationReport:
    return SimulationReport.from_dict(json.loads(data))
