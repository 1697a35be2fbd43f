"""Ground-truth oracles and the classical sampling matcher for injective strings."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError, SizeError
from .grid import GridString
from .ledger import QueryLedger
from .outcome import MatchOutcome
from .sieve import HiddenShiftInstance, PhaseLabel

#: Largest ``n * d`` accepted by :func:`brute_force_shift`.
SHIFT_SCAN_CAP = 12


@dataclass(frozen=True)
class OracleReport:
    all_matches: list[tuple[int, ...]]
    queries_used: QueryLedger = field(default_factory=QueryLedger)

    @property
    def found(self) -> bool:
        return bool(self.all_matches)

    def as_dict(self) -> dict:
        return {"all_matches": [list(s) for s in self.all_matches], "queries_used": self.queries_used.as_dict()}


def match_mask(T: GridString, P: GridString) -> np.ndarray:
    """Boolean array over offsets ``[n-m+1]^d``: True where ``P`` occurs."""
    if T.d != P.d:
        raise ParameterError("text and pattern dimensions differ")
    if P.side > T.side:
        raise ParameterError(f"pattern side {P.side} exceeds text side {T.side}")
    L = T.side - P.side + 1
    t, p = T.array, P.array
    mask = np.ones((L,) * T.d, dtype=bool)
    for z in itertools.product(range(P.side), repeat=T.d):
        mask &= t[tuple(slice(zi, zi + L) for zi in z)] == p[z]
        if not mask.any():
            break
    return mask


def brute_force_match(T: GridString, P: GridString) -> OracleReport:
    """Every offset where ``P`` occurs in ``T``, in lexicographic order."""
    mask = match_mask(T, P)
    matches = [tuple(int(v) for v in s) for s in np.argwhere(mask)]
    ledger = QueryLedger()
    ledger.charge(text=T.side**T.d, pattern=P.side**P.d, work=T.side**T.d + P.side**P.d)
    return OracleReport(matches, ledger)


def classical_injective_match(
    T: GridString,
    P: GridString,
    gamma: float,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
) -> MatchOutcome:
    """Sampling matcher for injective strings.

    Reads the corner ``k``-block of the pattern (``k = min(ceil(sqrt n), m)``),
    probes the text on the lattice ``(k Z)^d`` (every ``k``-cube of the text holds
    exactly one lattice point), and verifies each candidate offset implied by a
    shared symbol with ``ceil(3/gamma)`` random cell comparisons.
    """
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    if T.d != P.d or P.side > T.side:
        raise ParameterError("pattern must fit inside the text")
    ledger = ledger if ledger is not None else QueryLedger()
    n, m, d = T.side, P.side, T.d
    k = min(math.isqrt(n - 1) + 1 if n > 1 else 1, m)
    Tm = T.metered(ledger, "text")
    Pm = P.metered(ledger, "pattern")

    corner = P.array[(slice(0, k),) * d].reshape(-1)
    Pm.charge(corner.size)
    where: dict[int, tuple[int, ...]] = {}
    for idx, sym in enumerate(corner.tolist()):
        if sym in where:
            raise ContractError("pattern corner block repeats a symbol; pattern is not injective")
        where[sym] = tuple(int(v) for v in np.unravel_index(idx, (k,) * d))

    lattice = [np.arange(0, n, k)] * d
    probes = T.array[np.ix_(*lattice)]
    Tm.charge(probes.size)
    if np.unique(probes).size != probes.size:
        raise ContractError("text repeats a symbol across probes; text is not injective")

    samples = math.ceil(3 / gamma - 1e-12)
    candidates = 0
    for pos in itertools.product(*(range(len(a)) for a in lattice)):
        z = where.get(int(probes[pos]))
        if z is None:
            continue
        s = tuple(int(lattice[i][pos[i]]) - z[i] for i in range(d))
        if any(not 0 <= v <= n - m for v in s):
            continue
        candidates += 1
        if _verify(Tm, Pm, s, samples, rng):
            return MatchOutcome.found(s, ledger, trials=candidates, details={"block": k})
    return MatchOutcome.not_found(ledger, trials=candidates, details={"block": k})


def _verify(T: GridString, P: GridString, s: tuple[int, ...], samples: int, rng: np.random.Generator) -> bool:
    m = P.side
    for _ in range(samples):
        x = tuple(int(v) for v in rng.integers(0, m, size=P.d))
        if T.read(tuple(a + b for a, b in zip(s, x))) != P.read(x):
            return False
    return True


def brute_force_shift(inst: HiddenShiftInstance) -> PhaseLabel:
    """``argmax_s |{x : g(x) = f(x+s)}|`` by full scan; ties go to the lexicographically first ``s``."""
    if inst.n * inst.d > SHIFT_SCAN_CAP:
        raise SizeError(f"n*d = {inst.n * inst.d} exceeds the scan cap {SHIFT_SCAN_CAP}")
    axes = tuple(range(inst.d))
    best, best_score = None, -1
    for s in itertools.product(range(inst.side), repeat=inst.d):
        score = int(np.count_nonzero(inst.g == np.roll(inst.f, tuple(-v for v in s), axis=axes)))
        if score > best_score:
            best, best_score = s, score
    return PhaseLabel(inst.n, best)
