"""Verdict type shared by the matcher, the baselines and the generators."""

from __future__ import annotations

from dataclasses import dataclass, field

from .ledger import QueryLedger

FOUND = "found"
NOT_FOUND = "not_found"


@dataclass(frozen=True)
class MatchOutcome:
    verdict: str
    offset: tuple[int, ...] | None = None
    ledger: QueryLedger = field(default_factory=QueryLedger)
    trials: int = 0
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.verdict not in (FOUND, NOT_FOUND):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if (self.verdict == FOUND) != (self.offset is not None):
            raise ValueError("an offset is required exactly for a found verdict")
        if self.offset is not None:
            object.__setattr__(self, "offset", tuple(int(v) for v in self.offset))

    @classmethod
    def found(cls, offset, ledger: QueryLedger | None = None, **kw) -> MatchOutcome:
        return cls(FOUND, tuple(offset), (ledger or QueryLedger()).snapshot(), **kw)

    @classmethod
    def not_found(cls, ledger: QueryLedger | None = None, **kw) -> MatchOutcome:
        return cls(NOT_FOUND, None, (ledger or QueryLedger()).snapshot(), **kw)

    @property
    def is_found(self) -> bool:
        return self.verdict == FOUND

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "offset": None if self.offset is None else list(self.offset),
            "trials": self.trials,
            "ledger": self.ledger.as_dict(),
            "details": self.details,
        }
