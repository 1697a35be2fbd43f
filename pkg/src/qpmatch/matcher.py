"""Pattern matching by hidden-shift recovery on injectivized windows.

The offset search is simulated by a classical loop over candidate offsets.
The quantum cost it stands for is charged separately and deterministically:
``ceil((n / (eps m'))^(d/2))`` uses of one rough check plus one final shift
recovery, independent of how many classical trials the loop needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, RecoveryError
from .grid import DerivedView, GridString, SubgridView
from .ledger import QueryLedger
from .outcome import FOUND, NOT_FOUND, MatchOutcome
from .sieve import HiddenShiftInstance, make_schedule, recover_shift, recover_shift_majority

__all__ = [
    "FOUND",
    "NOT_FOUND",
    "Accept",
    "MatchOutcome",
    "MatchParams",
    "Reject",
    "check",
    "default_epsilon",
    "estimate_gamma",
    "find_match",
    "find_match_auto_nu",
    "window_power",
    "rough_check",
    "rough_check2",
]

#: Failure probability used in the default classical trial budget.
BUDGET_FAILURE = 0.05


@dataclass(frozen=True)
class MatchParams:
    nu: int
    gamma: float
    epsilon: float | None = None
    trial_budget: int | None = None
    pool_constant: float | None = None
    votes: int = 1
    retry_cap: int = 8

    def __post_init__(self):
        if self.nu < 1:
            raise ParameterError("nu must be positive")
        if not 0 < self.gamma <= 1:
            raise ParameterError("gamma must lie in (0, 1]")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise ParameterError("epsilon must lie in (0, 1]")
        if self.trial_budget is not None and self.trial_budget < 1:
            raise ParameterError("trial_budget must be positive")
        if self.pool_constant is not None and self.pool_constant <= 0:
            raise ParameterError("pool_constant must be positive")
        if self.votes < 1:
            raise ParameterError("votes must be positive")

    def as_dict(self) -> dict:
        return {
            "nu": self.nu,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "trial_budget": self.trial_budget,
            "pool_constant": self.pool_constant,
            "votes": self.votes,
            "retry_cap": self.retry_cap,
        }


@dataclass(frozen=True)
class Accept:
    shift: tuple[int, ...]


@dataclass(frozen=True)
class Reject:
    reason: str


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


def window_power(m: int, nu: int) -> int:
    """Largest power of two not exceeding ``m - nu``; refuses when ``m - nu < 2``."""
    if m - nu < 2:
        raise ParameterError(f"m - nu = {m - nu} < 2 leaves no usable window")
    return 1 << ((m - nu).bit_length() - 1)


def default_epsilon(m_prime: int, d: int) -> float:
    """Acceptance tolerance for the rough check, floored at ``1/m'``."""
    bits = math.log2(m_prime)
    eps = 1.0 / (bits**2 * 2 ** math.sqrt(2 * math.log2(3) * d * bits)) if bits > 0 else 1.0
    return min(1.0, max(eps, 1.0 / m_prime))


def _check_shapes(T: GridString, P: GridString, nu: int) -> tuple[int, int, int]:
    if T.d != P.d:
        raise ParameterError("text and pattern dimensions differ")
    n, m = T.side, P.side
    if m > n:
        raise ParameterError(f"pattern side {m} exceeds text side {n}")
    if 2 * nu > m:
        raise ParameterError(f"nu={nu} exceeds m/2={m / 2}")
    return n, m, window_power(m, nu)


def offset_range(n: int, nu: int, m_prime: int) -> int:
    """Number of candidate offsets per dimension, ``n - nu - m' + 2``."""
    return n - nu - m_prime + 2


def trial_budget(n: int, d: int, eps: float, m_prime: int) -> int:
    return math.ceil(8 * (n / (eps * m_prime)) ** d * math.log(1 / BUDGET_FAILURE))


def recovery_cost(bits: int, d: int, nu: int, pool_constant: float | None) -> int:
    """Modeled queries of one shift recovery on ``bits``-bit windows: one sieve per round."""
    prepared = sum(make_schedule(b, d, pool_constant).pool_size for b in range(bits, 0, -1))
    return 2 * nu**d * prepared


def check_cost(gamma: float) -> int:
    return math.ceil(3 / math.sqrt(gamma) - 1e-12)


def rough_check_cost(m_prime: int, d: int, params: MatchParams) -> int:
    return recovery_cost(m_prime.bit_length() - 1, d, params.nu, params.pool_constant) + check_cost(params.gamma)


def modeled_quantum_cost(n: int, m: int, d: int, params: MatchParams) -> int:
    """Grover-style charge: ``ceil((n/(eps m'))^(d/2))`` rough checks plus one pinning recovery."""
    m_prime = window_power(m, params.nu)
    eps = params.epsilon or default_epsilon(m_prime, d)
    uses = math.ceil((n / (eps * m_prime)) ** (d / 2) - 1e-9)
    pin = recovery_cost(m_prime.bit_length() - 1, d, params.nu, params.pool_constant)
    return uses * rough_check_cost(m_prime, d, params) + pin


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check(A, B, gamma: float, rng: np.random.Generator, ledger: QueryLedger | None = None) -> bool:
    """One-sided equality test: sample ``ceil(3/gamma)`` cells and reject on any mismatch.

    Equal inputs are always accepted. Inputs differing on at least a ``gamma``
    fraction are rejected with probability at least ``1 - e^-3``. The modeled
    quantum charge is ``ceil(3/sqrt(gamma))``.
    """
    if (A.d, A.side) != (B.d, B.side):
        raise ParameterError("check needs two views of the same shape")
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    if ledger is not None:
        ledger.charge(quantum=check_cost(gamma))
    for _ in range(math.ceil(3 / gamma - 1e-12)):
        x = tuple(int(v) for v in rng.integers(0, A.side, size=A.d))
        if A.read(x) != B.read(x):
            return False
    return True


def _window_instance(
    T: GridString, P: GridString, nu: int, t: tuple[int, ...], m_prime: int
) -> HiddenShiftInstance:
    """Hidden-shift instance on the ``m'``-windows of the derived strings.

    Megacharacters are replaced by dense identifiers shared by both sides; the
    text window plays ``f`` and the pattern window ``g``.
    """
    d = T.d
    rows_t = DerivedView(T, nu).block_rows(t, m_prime)
    rows_p = DerivedView(P, nu).block_rows((0,) * d, m_prime)
    _, ids = np.unique(np.vstack([rows_t, rows_p]), axis=0, return_inverse=True)
    ids = ids.reshape(-1)
    size = m_prime**d
    bits = m_prime.bit_length() - 1
    shape = (m_prime,) * d
    return HiddenShiftInstance(
        bits,
        d,
        ids[:size].reshape(shape),
        ids[size:].reshape(shape),
        max(2, int(ids.max()) + 1),
        mode="exact",
        query_weight=nu**d,
        check_injective=False,
    )


def _recover(inst, params: MatchParams, rng, ledger):
    if params.votes > 1:
        return recover_shift_majority(
            inst, params.pool_constant, rng, ledger, votes=params.votes, retry_cap=params.retry_cap
        )
    return recover_shift(inst, params.pool_constant, rng, ledger, retry_cap=params.retry_cap)


def _window_shift(T, P, params, t, rng, ledger) -> tuple[tuple[int, ...] | None, str, int, float]:
    n, m, m_prime = _check_shapes(T, P, params.nu)
    L = offset_range(n, params.nu, m_prime)
    t = tuple(int(v) for v in t)
    if len(t) != T.d or any(not 0 <= v < L for v in t):
        raise ParameterError(f"offset {t} outside [0, {L})^{T.d}")
    eps = params.epsilon or default_epsilon(m_prime, T.d)
    inst = _window_instance(T.metered(ledger, "text"), P.metered(ledger, "pattern"), params.nu, t, m_prime)
    try:
        ell = _recover(inst, params, rng, ledger).components
    except RecoveryError as exc:
        return None, f"recovery failed: {exc}", m_prime, eps
    if any(v > eps * m_prime for v in ell):
        return None, f"shift {ell} outside tolerance {eps * m_prime:.3g}", m_prime, eps
    return ell, "", m_prime, eps


def rough_check(T: GridString, P: GridString, params: MatchParams, t, rng, ledger: QueryLedger | None = None):
    """Accept ``(l)`` when the pattern appears to match at ``t + l`` with ``l`` within tolerance."""
    ledger = ledger if ledger is not None else QueryLedger()
    ell, why, _, _ = _window_shift(T, P, params, t, rng, ledger)
    if ell is None:
        return Reject(why)
    s = tuple(a + b for a, b in zip(t, ell))
    if any(v > T.side - P.side for v in s):
        return Reject(f"offset {s} is not a valid match position")
    Tm = T.metered(ledger, "text")
    Pm = P.metered(ledger, "pattern")
    if check(SubgridView(Tm, s, P.side), Pm, params.gamma, rng, ledger):
        return Accept(ell)
    return Reject("check rejected")


def rough_check2(T: GridString, P: GridString, params: MatchParams, t, rng, ledger: QueryLedger | None = None):
    """As :func:`rough_check`, confirming with one megacharacter comparison instead of sampling."""
    ledger = ledger if ledger is not None else QueryLedger()
    ell, why, _, _ = _window_shift(T, P, params, t, rng, ledger)
    if ell is None:
        return Reject(why)
    s = tuple(a + b for a, b in zip(t, ell))
    Vt = DerivedView(T.metered(ledger, "text"), params.nu)
    Vp = DerivedView(P.metered(ledger, "pattern"), params.nu)
    if any(v >= Vt.side for v in s):
        return Reject(f"offset {s} overruns the derived text")
    ledger.charge(quantum=2 * params.nu**T.d)
    if Vt.read(s) == Vp.read((0,) * T.d):
        return Accept(ell)
    return Reject("megacharacter mismatch")


# ---------------------------------------------------------------------------
# offset search
# ---------------------------------------------------------------------------


def _merge_classical(into: QueryLedger, trial: QueryLedger) -> None:
    into.charge(text=trial.text_queries, pattern=trial.pattern_queries, work=trial.classical_work)


def find_match(
    T: GridString,
    P: GridString,
    params: MatchParams,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
    *,
    second_check: bool = False,
) -> MatchOutcome:
    """Search candidate offsets in random order (without repetition) until a rough check accepts.

    On acceptance the window shift is recovered once more to pin the offset.
    ``second_check`` selects the megacharacter confirmation variant.
    """
    ledger = ledger if ledger is not None else QueryLedger()
    n, m, m_prime = _check_shapes(T, P, params.nu)
    d = T.d
    eps = params.epsilon or default_epsilon(m_prime, d)
    L = offset_range(n, params.nu, m_prime)
    budget = params.trial_budget or trial_budget(n, d, eps, m_prime)
    verify = rough_check2 if second_check else rough_check
    order = rng.permutation(L**d)[:budget]
    details = {"m_prime": m_prime, "epsilon": eps, "candidates": L**d, "budget": budget, "nu": params.nu}
    outcome = None
    trials = 0
    for flat in order:
        trials += 1
        t = tuple(int(v) for v in np.unravel_index(int(flat), (L,) * d))
        scratch = QueryLedger()
        verdict = verify(T, P, params, t, rng, scratch)
        if isinstance(verdict, Accept):
            ell = _pin(T, P, params, t, verdict.shift, rng, scratch)
            _merge_classical(ledger, scratch)
            outcome = tuple(a + b for a, b in zip(t, ell))
            break
        _merge_classical(ledger, scratch)
    ledger.charge(quantum=modeled_quantum_cost(n, m, d, params))
    details["trials"] = trials
    if outcome is None:
        return MatchOutcome.not_found(ledger, trials=trials, details=details)
    return MatchOutcome.found(outcome, ledger, trials=trials, details=details)


def _pin(T, P, params, t, ell, rng, ledger) -> tuple[int, ...]:
    """Second recovery of the window shift; keep it if it agrees or itself passes check."""
    ell2, _, _, _ = _window_shift(T, P, params, t, rng, ledger)
    if ell2 is None or ell2 == ell:
        return ell
    s2 = tuple(a + b for a, b in zip(t, ell2))
    if any(v > T.side - P.side for v in s2):
        return ell
    Tm = T.metered(ledger, "text")
    if check(SubgridView(Tm, s2, P.side), P.metered(ledger, "pattern"), params.gamma, rng, ledger):
        return ell2
    return ell


def confirm_reps(nu: int) -> int:
    return 2 + math.ceil(math.log2(nu)) if nu > 1 else 2


def find_match_auto_nu(
    T: GridString,
    P: GridString,
    gamma: float,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
    *,
    base: MatchParams | None = None,
) -> MatchOutcome:
    """Try ``nu = 1, 2, 4, ...`` up to ``m/2``; a claimed match must survive
    ``2 + ceil(log2 nu)`` further checks before it is returned."""
    ledger = ledger if ledger is not None else QueryLedger()
    base = base or MatchParams(nu=1, gamma=gamma)
    m = P.side
    tried = []
    nu = 1
    total_trials = 0
    while 2 * nu <= m and m - nu >= 2:
        params = replace(base, nu=nu, gamma=gamma)
        out = find_match(T, P, params, rng, ledger)
        total_trials += out.trials
        tried.append(nu)
        if out.is_found:
            Tm, Pm = T.metered(ledger, "text"), P.metered(ledger, "pattern")
            if all(
                check(SubgridView(Tm, out.offset, m), Pm, gamma, rng, ledger) for _ in range(confirm_reps(nu))
            ):
                return MatchOutcome.found(out.offset, ledger, trials=total_trials, details={"nu": nu, "tried": tried})
        nu *= 2
    return MatchOutcome.not_found(ledger, trials=total_trials, details={"tried": tried})


def estimate_gamma(T: GridString, P: GridString, samples: int, rng: np.random.Generator) -> float:
    """Exploratory estimate of the mismatch floor: the smallest nonzero mismatch
    fraction over ``samples`` random offsets. Not part of any guarantee."""
    n, m, d = T.side, P.side, T.d
    best = 1.0
    p = P.array
    for _ in range(samples):
        s = rng.integers(0, n - m + 1, size=d)
        frac = float(np.mean(T.array[tuple(slice(int(v), int(v) + m) for v in s)] != p))
        if 0 < frac < best:
            best = frac
    return best
