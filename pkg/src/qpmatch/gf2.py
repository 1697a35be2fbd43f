"""Incremental linear algebra over GF(2) with rows packed into Python ints."""

from __future__ import annotations

from collections.abc import Sequence


def pack(bits: Sequence[int]) -> int:
    """Pack a bit vector (index 0 = least significant) into an int."""
    out = 0
    for i, b in enumerate(bits):
        if b & 1:
            out |= 1 << i
    return out


def unpack(word: int, width: int) -> list[int]:
    return [(word >> i) & 1 for i in range(width)]


class ParityBasis:
    """Echelon basis of equations ``beta . x = parity`` in ``width`` unknowns.

    Equations are offered one at a time; those that do not raise the rank are
    dropped (their consistency is reported but not enforced).
    """

    def __init__(self, width: int):
        self.width = width
        self._rows: dict[int, tuple[int, int]] = {}  # pivot bit -> (row, rhs)
        self.inconsistent = 0

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def full(self) -> bool:
        return self.rank == self.width

    def _reduce(self, row: int, rhs: int) -> tuple[int, int]:
        while row:
            pivot = row.bit_length() - 1
            hit = self._rows.get(pivot)
            if hit is None:
                break
            row ^= hit[0]
            rhs ^= hit[1]
        return row, rhs

    def add(self, beta: Sequence[int] | int, parity: int) -> bool:
        """Offer one equation; return True if it increased the rank."""
        row = beta if isinstance(beta, int) else pack(beta)
        row, rhs = self._reduce(row, parity & 1)
        if row == 0:
            if rhs:
                self.inconsistent += 1
            return False
        self._rows[row.bit_length() - 1] = (row, rhs)
        return True

    def solve(self) -> list[int]:
        """Back-substitute a full-rank system; returns the unknown bit vector."""
        if not self.full:
            raise ValueError(f"rank {self.rank} < {self.width}")
        x = 0
        for pivot in sorted(self._rows):
            row, rhs = self._rows[pivot]
            rest = row & ~(1 << pivot)
            if (bin(rest & x).count("1") + rhs) & 1:
                x |= 1 << pivot
        return unpack(x, self.width)


def solve_gf2(rows: Sequence[Sequence[int]], rhs: Sequence[int]) -> list[int] | None:
    """Solve a square-or-tall system if it has full column rank, else ``None``."""
    if not rows:
        return None
    basis = ParityBasis(len(rows[0]))
    for r, b in zip(rows, rhs):
        basis.add(r, b)
    return basis.solve() if basis.full else None
