"""Shared output record type for the engine, the union merge, and the oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .data import Database
from .ranking import RankingFunction


@dataclass(frozen=True)
class OutputTuple:
    """One result: constant ids in head-variable order plus the engine score."""

    values: Tuple[int, ...]
    score: object

    def decoded(self, db: Database) -> Tuple[str, ...]:
        return tuple(db.decode(c) for c in self.values)


def format_score(rf: RankingFunction, db: Database, score) -> str:
    if rf.kind == "lex":
        return ",".join(db.decode(cid) for _, cid in score)
    return str(score)


def format_record(rf: RankingFunction, db: Database, out: OutputTuple) -> str:
    return f"{format_score(rf, db, out.score)}\t{','.join(out.decoded(db))}"
