"""Query accounting shared by every algorithm in the package."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

_FIELDS = ("text_queries", "pattern_queries", "quantum_cost", "classical_work")


@dataclass
class QueryLedger:
    """Mergeable cost counters.

    ``text_queries`` and ``pattern_queries`` count oracle calls issued to the
    text-side and pattern-side functions by the simulated algorithm (for a
    hidden-shift instance, ``f`` is the text side and ``g`` the pattern side).
    ``quantum_cost`` is the modeled quantum query charge. ``classical_work``
    counts reads the simulator actually performed.

    Counters only ever grow. Per-worker ledgers are combined with ``+``.
    """

    text_queries: int = 0
    pattern_queries: int = 0
    quantum_cost: int = 0
    classical_work: int = 0

    def charge(
        self,
        *,
        text: int = 0,
        pattern: int = 0,
        quantum: int = 0,
        work: int = 0,
    ) -> None:
        if min(text, pattern, quantum, work) < 0:
            raise ValueError("ledger charges must be non-negative")
        self.text_queries += int(text)
        self.pattern_queries += int(pattern)
        self.quantum_cost += int(quantum)
        self.classical_work += int(work)

    def charge_role(self, role: str, count: int) -> None:
        """Charge ``count`` actual reads against the ``text`` or ``pattern`` side."""
        if role == "text":
            self.charge(text=count, work=count)
        elif role == "pattern":
            self.charge(pattern=count, work=count)
        else:
            self.charge(work=count)

    def absorb(self, other: QueryLedger) -> None:
        """In-place merge of ``other`` into this ledger."""
        for name in _FIELDS:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def __add__(self, other: QueryLedger) -> QueryLedger:
        if not isinstance(other, QueryLedger):
            return NotImplemented
        return QueryLedger(*(getattr(self, f) + getattr(other, f) for f in _FIELDS))

    def snapshot(self) -> QueryLedger:
        return replace(self)

    @property
    def total_queries(self) -> int:
        return self.text_queries + self.pattern_queries

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> QueryLedger:
        return cls(**{f: int(data.get(f, 0)) for f in _FIELDS})
