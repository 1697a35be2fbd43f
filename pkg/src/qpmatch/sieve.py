"""Label-level simulation of the staged hidden-shift sieve over ``Z_{2^n}^d``.

A prepared state is the single qubit ``(|0> + w^phi |1>)/sqrt(2)`` with
``w = exp(2 pi i / 2^n)``. The simulation never evaluates ``w``: it carries the
known label ``r`` and the integer exponent ``phi`` (mod ``2^n``), which for a
clean state of an exact instance equals ``r . s``. Combining two states
multiplies or divides their phases, so both the label and ``phi`` transform by
the same integer rule, and the final Hadamard measurement is decided from
``phi`` alone.

States that would not be of this form (the "poisoned" ones) carry a flag and
yield a fair coin when measured.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ParameterError, RecoveryError, ShapeError, SieveInvariantError
from .gf2 import ParityBasis
from .grid import GridString
from .ledger import QueryLedger

LOG2_3 = math.log2(3)
#: Optimal stage count is this factor times ``sqrt(d n)``.
STAGE_FACTOR = math.sqrt(2 * math.log(2, 3))
#: Limit of the schedule constant ``c`` for ``d = 1`` (``sqrt(2 log2 3)``).
ASYMPTOTIC_C = math.sqrt(2 * LOG2_3)


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SieveSchedule:
    n: int
    d: int
    stage_count: int
    bit_widths: tuple[int, ...]
    pool_size: int
    stop_threshold: int
    c: float
    pool_constant: float

    def __post_init__(self):
        if len(self.bit_widths) != self.stage_count:
            raise ParameterError("one bit width per stage is required")
        if any(b < 0 for b in self.bit_widths):
            raise ParameterError(f"negative bit width in {self.bit_widths}")
        if sum(self.bit_widths) != self.n - 1:
            raise ParameterError(f"bit widths must sum to n-1={self.n - 1}: {self.bit_widths}")
        if self.pool_size < 2:
            raise ParameterError("pool size must be at least 2")

    def block_start(self, stage: int) -> int:
        """Least-significant bit position zeroed by 1-based ``stage``."""
        return sum(self.bit_widths[: stage - 1])

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "stage_count": self.stage_count,
            "bit_widths": list(self.bit_widths),
            "pool_size": self.pool_size,
            "stop_threshold": self.stop_threshold,
            "c": self.c,
            "pool_constant": self.pool_constant,
        }


def optimal_stage_count(n: int, d: int) -> int:
    return max(1, round(STAGE_FACTOR * math.sqrt(d * n)))


def schedule_constant(n: int, d: int, stages: int) -> float:
    """The ``c`` that makes every stage term ``3^i 2^{d b_i}`` equal ``2^{c sqrt(n)}``."""
    return d * math.sqrt(n) / stages + LOG2_3 * (stages + 1) / (2 * math.sqrt(n))


def real_bit_widths(n: int, d: int, stages: int, c: float) -> list[float]:
    return [(c * math.sqrt(n) - LOG2_3 * i) / d for i in range(1, stages + 1)]


def round_bit_widths(real: Sequence[float], total: int) -> tuple[int, ...]:
    """Integer widths, each >= 0, summing to ``total``.

    Starts from the floors and hands out the remainder to the largest
    fractional parts; an excess is taken back from the smallest fractional
    parts among positive widths.
    """
    real = [max(0.0, r) for r in real]
    widths = [math.floor(r) for r in real]
    frac = [r - w for r, w in zip(real, widths)]
    by_frac = sorted(range(len(real)), key=lambda i: (-frac[i], i))
    deficit = total - sum(widths)
    j = 0
    while deficit > 0:
        widths[by_frac[j % len(widths)]] += 1
        deficit -= 1
        j += 1
    for i in reversed(by_frac):
        if deficit >= 0:
            break
        take = min(widths[i], -deficit)
        widths[i] -= take
        deficit += take
    return tuple(widths)


def make_schedule(n: int, d: int, pool_constant: float | None = None) -> SieveSchedule:
    """Stage count, per-stage widths and pool size for ``n`` bits in ``d`` dimensions.

    ``pool_constant=None`` uses the calibrated constant.
    """
    if pool_constant is None:
        pool_constant = default_pool_constant()
    return _make_schedule(int(n), int(d), float(pool_constant))


@lru_cache(maxsize=512)
def _make_schedule(n: int, d: int, pool_constant: float) -> SieveSchedule:
    if n < 1 or d < 1:
        raise ParameterError(f"need n >= 1 and d >= 1 (got n={n}, d={d})")
    if pool_constant <= 0:
        raise ParameterError("pool_constant must be positive")
    stages = optimal_stage_count(n, d)
    c = schedule_constant(n, d, stages)
    widths = round_bit_widths(real_bit_widths(n, d, stages, c), n - 1)
    pool = max(2, math.ceil(pool_constant * n * 2 ** (c * math.sqrt(n))))
    return SieveSchedule(n, d, stages, widths, pool, n * n, c, float(pool_constant))


def default_pool_constant() -> float:
    from .calibration import load_pool_constant

    return load_pool_constant()


# ---------------------------------------------------------------------------
# labels and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseLabel:
    n_bits: int
    components: tuple[int, ...]

    def __post_init__(self):
        mod = 1 << self.n_bits
        comps = tuple(int(c) for c in self.components)
        if any(not 0 <= c < mod for c in comps):
            raise ParameterError(f"components {comps} not in Z_{mod}")
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return len(self.components)

    def _check(self, other: PhaseLabel) -> None:
        if (self.n_bits, self.d) != (other.n_bits, other.d):
            raise ShapeError(f"cannot combine Z_2^{self.n_bits}^{self.d} with Z_2^{other.n_bits}^{other.d}")

    def __add__(self, other: PhaseLabel) -> PhaseLabel:
        self._check(other)
        mod = 1 << self.n_bits
        return PhaseLabel(self.n_bits, tuple((a + b) % mod for a, b in zip(self.components, other.components)))

    def __sub__(self, other: PhaseLabel) -> PhaseLabel:
        self._check(other)
        mod = 1 << self.n_bits
        return PhaseLabel(self.n_bits, tuple((a - b) % mod for a, b in zip(self.components, other.components)))

    def dot(self, other: Sequence[int]) -> int:
        return sum(a * int(b) for a, b in zip(self.components, other)) % (1 << self.n_bits)


@dataclass(frozen=True)
class PhaseState:
    """One sieve element. ``phase`` is the exponent of ``w`` on ``|1>``."""

    label: PhaseLabel
    poisoned: bool = False
    phase: int = 0
    leaves: int = 1


@dataclass(frozen=True)
class ParitySample:
    beta: tuple[int, ...]
    parity: int


@dataclass
class StatePool:
    """Struct-of-arrays batch of states used inside the sieve."""

    n_bits: int
    labels: np.ndarray  # (N, d) int64
    phases: np.ndarray  # (N,) int64
    poisoned: np.ndarray  # (N,) bool
    leaves: np.ndarray  # (N,) int64

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def d(self) -> int:
        return int(self.labels.shape[1])

    def take(self, idx) -> StatePool:
        return StatePool(self.n_bits, self.labels[idx], self.phases[idx], self.poisoned[idx], self.leaves[idx])

    @classmethod
    def empty(cls, n_bits: int, d: int) -> StatePool:
        return cls(
            n_bits,
            np.zeros((0, d), dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=bool),
            np.zeros(0, dtype=np.int64),
        )

    @classmethod
    def concat(cls, pools: Sequence[StatePool], n_bits: int, d: int) -> StatePool:
        pools = [p for p in pools if len(p)]
        if not pools:
            return cls.empty(n_bits, d)
        return cls(
            n_bits,
            np.concatenate([p.labels for p in pools]),
            np.concatenate([p.phases for p in pools]),
            np.concatenate([p.poisoned for p in pools]),
            np.concatenate([p.leaves for p in pools]),
        )

    @classmethod
    def from_states(cls, states: Sequence[PhaseState]) -> StatePool:
        if not states:
            raise ParameterError("cannot infer shape from an empty state list")
        n = states[0].label.n_bits
        d = states[0].label.d
        for s in states:
            if (s.label.n_bits, s.label.d) != (n, d):
                raise ShapeError("states in one pool must share n_bits and d")
        return cls(
            n,
            np.array([s.label.components for s in states], dtype=np.int64).reshape(-1, d),
            np.array([s.phase for s in states], dtype=np.int64),
            np.array([s.poisoned for s in states], dtype=bool),
            np.array([s.leaves for s in states], dtype=np.int64),
        )

    def to_states(self) -> list[PhaseState]:
        return [
            PhaseState(
                PhaseLabel(self.n_bits, tuple(int(v) for v in self.labels[i])),
                bool(self.poisoned[i]),
                int(self.phases[i]),
                int(self.leaves[i]),
            )
            for i in range(len(self))
        ]


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def _unravel(flat: np.ndarray, n: int, d: int) -> np.ndarray:
    """Flat row-major indices -> (N, d) coordinates in Z_{2^n}."""
    mask = (1 << n) - 1
    cols = [(flat >> (n * (d - 1 - c))) & mask for c in range(d)]
    return np.stack(cols, axis=-1).astype(np.int64)


class HiddenShiftInstance:
    """Functions ``f, g`` on ``Z_{2^n}^d`` stored as tables, plus the state-preparation oracle.

    ``mode="poison"`` (the default for generated instances) needs the sealed
    shift: every prepared state is clean with phase ``r . s`` unless it is
    poisoned, which happens independently with probability
    ``min(1, 2 * noise_fraction)``.

    ``mode="exact"`` needs no sealed shift. It samples the measured value ``z``
    from the tables exactly as the physical procedure would: if ``z`` has a
    unique preimage under both functions the state is clean with phase
    ``r . (f^-1(z) - g^-1(z))``; otherwise it is poisoned.
    """

    def __init__(
        self,
        n: int,
        d: int,
        f_table,
        g_table,
        q: int,
        *,
        shift: Sequence[int] | None = None,
        mode: str = "poison",
        query_weight: int = 1,
        check_injective: bool = True,
    ):
        if n < 1 or d < 1:
            raise ParameterError("need n >= 1 and d >= 1")
        if mode not in ("poison", "exact"):
            raise ParameterError(f"unknown mode {mode!r}")
        shape = (1 << n,) * d
        f = np.asarray(f_table, dtype=np.int64).reshape(shape)
        g = np.asarray(g_table, dtype=np.int64).reshape(shape)
        if check_injective:
            for name, t in (("f", f), ("g", g)):
                if np.unique(t).size != t.size:
                    raise ParameterError(f"{name} is not injective")
        if mode == "poison" and shift is None:
            raise ParameterError("poison mode needs the sealed shift")
        self.n, self.d, self.q = int(n), int(d), int(q)
        self.f = f
        self.g = g
        self.mode = mode
        self.query_weight = int(query_weight)
        self._shift = None if shift is None else tuple(int(v) % (1 << n) for v in shift)
        self._inverse = None
        self.corrupted = np.zeros(0, dtype=np.int64)
        self.noise_fraction = 0.0 if self._shift is None else self.mismatch_fraction(self._shift)

    @property
    def side(self) -> int:
        return 1 << self.n

    @property
    def has_sealed_shift(self) -> bool:
        return self._shift is not None

    def unseal(self) -> PhaseLabel:
        """The planted shift. For test tooling and reports in test mode only."""
        if self._shift is None:
            raise ParameterError("instance carries no sealed shift")
        return PhaseLabel(self.n, self._shift)

    def mismatch_fraction(self, shift: Sequence[int]) -> float:
        """``Pr_x[g(x) != f(x + shift)]``."""
        shifted = np.roll(self.f, tuple(-int(v) for v in shift), axis=tuple(range(self.d)))
        return float(np.mean(self.g != shifted))

    def f_grid(self) -> GridString:
        return GridString(self.f, self.d, self.side, self.q)

    def g_grid(self) -> GridString:
        return GridString(self.g, self.d, self.side, self.q)

    def halve(self, beta: Sequence[int], offset: Sequence[int] | None = None) -> HiddenShiftInstance:
        """Instance on ``Z_{2^{n-1}}^d`` with ``f'(x) = f(2x+a)`` and ``g'(x) = g(2x+a-beta)``."""
        if self.n < 2:
            raise ParameterError("cannot halve a one-bit instance")
        a = [0] * self.d if offset is None else [int(v) & 1 for v in offset]
        beta = [int(v) & 1 for v in beta]
        half = 1 << (self.n - 1)
        base = 2 * np.arange(half)
        f_idx = [base + a[c] for c in range(self.d)]
        g_idx = [(base + a[c] - beta[c]) % self.side for c in range(self.d)]
        f2 = self.f[np.ix_(*f_idx)]
        g2 = self.g[np.ix_(*g_idx)]
        shift = None
        if self._shift is not None:
            shift = [((s - b) % self.side) >> 1 for s, b in zip(self._shift, beta)]
        return HiddenShiftInstance(
            self.n - 1,
            self.d,
            f2,
            g2,
            self.q,
            shift=shift,
            mode=self.mode,
            query_weight=self.query_weight,
            check_injective=False,
        )

    def _inverse_maps(self):
        if self._inverse is None:
            maps = []
            for t in (self.f, self.g):
                vals, first, counts = np.unique(t.reshape(-1), return_index=True, return_counts=True)
                maps.append((vals, first, counts))
            self._inverse = maps
        return self._inverse

    def _lookup(self, which: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vals, first, counts = self._inverse_maps()[which]
        pos = np.clip(np.searchsorted(vals, z), 0, vals.size - 1)
        ok = (vals[pos] == z) & (counts[pos] == 1)
        return ok, first[pos]

    def prepare(self, count: int, rng: np.random.Generator, ledger: QueryLedger | None = None) -> StatePool:
        """Prepare ``count`` states; one query to each of ``f`` and ``g`` per state."""
        n, d = self.n, self.d
        mod = 1 << n
        labels = rng.integers(0, mod, size=(count, d), dtype=np.int64)
        if self.mode == "poison":
            s = np.array(self._shift, dtype=np.int64)
            phases = (labels * s).sum(axis=1) % mod
            p = min(1.0, 2.0 * self.noise_fraction)
            poisoned = rng.random(count) < p if p > 0 else np.zeros(count, dtype=bool)
            work = 0
        else:
            side_bit = rng.integers(0, 2, size=count).astype(bool)
            x = rng.integers(0, mod**d, size=count, dtype=np.int64)
            z = np.where(side_bit, self.g.reshape(-1)[x], self.f.reshape(-1)[x])
            ok_f, a = self._lookup(0, z)
            ok_g, b = self._lookup(1, z)
            clean = ok_f & ok_g
            delta = (_unravel(a, n, d) - _unravel(b, n, d)) % mod
            phases = (labels * delta).sum(axis=1) % mod
            poisoned = ~clean
            work = count
        if ledger is not None:
            w = self.query_weight * count
            ledger.charge(text=w, pattern=w, quantum=2 * w, work=work)
        return StatePool(n, labels, phases.astype(np.int64), poisoned, np.ones(count, dtype=np.int64))


def prepare_state(inst: HiddenShiftInstance, rng: np.random.Generator, ledger: QueryLedger | None = None) -> PhaseState:
    return inst.prepare(1, rng, ledger).to_states()[0]


def combine(a: PhaseState, b: PhaseState, rng: np.random.Generator) -> tuple[PhaseState, bool]:
    """Parity measurement on two states: ``r - t`` on success, ``r + t`` on failure."""
    success = bool(rng.integers(0, 2))
    mod = 1 << a.label.n_bits
    if success:
        label, phase = a.label - b.label, (a.phase - b.phase) % mod
    else:
        label, phase = a.label + b.label, (a.phase + b.phase) % mod
    return PhaseState(label, a.poisoned or b.poisoned, phase, a.leaves + b.leaves), success


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


@dataclass
class StageStats:
    stage: int
    bit_width: int
    bins: int
    input_size: int
    output_size: int
    steps: int = 0
    combinations: int = 0
    discarded: int = 0
    skipped: bool = False

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _low_bits_zero(labels: np.ndarray, nbits: int) -> bool:
    if nbits <= 0 or labels.size == 0:
        return True
    return not np.any(labels & ((1 << nbits) - 1))


def _step_rng(run_key: int, stage: int, step: int) -> np.random.Generator:
    return np.random.default_rng([run_key, stage, step])


def run_stage(
    pool: StatePool | Sequence[PhaseState],
    stage_index: int,
    schedule: SieveSchedule,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    *,
    run_key: int | None = None,
) -> tuple[StatePool, StageStats]:
    """Bin by this stage's block of bits and combine within bins until the pool is small.

    Every step pairs the states of each bin in arrival order (an odd one out is
    discarded), sends successes to the output and keeps failures for the next
    step, rebinned by their current block bits. The stage ends once at most
    ``stop_threshold`` states remain or no bin holds a pair.
    """
    if not isinstance(pool, StatePool):
        pool = StatePool.from_states(list(pool))
    n, d = schedule.n, schedule.d
    if (pool.n_bits, pool.d) != (n, d) and len(pool):
        raise ShapeError("pool does not match the schedule")
    if run_key is None:
        if rng is None:
            raise ParameterError("run_stage needs rng or run_key")
        run_key = int(rng.integers(0, 2**63))
    width = schedule.bit_widths[stage_index - 1]
    lo = schedule.block_start(stage_index)
    if not _low_bits_zero(pool.labels, lo):
        raise SieveInvariantError(f"stage {stage_index} input has non-zero bits below position {lo}")
    mod = 1 << n
    stats = StageStats(stage_index, width, 1 << (d * width), len(pool), 0)
    block_mask = (1 << width) - 1
    shifts = np.array([width * (d - 1 - c) for c in range(d)], dtype=np.int64)

    outputs: list[StatePool] = []
    active = pool
    step = 0
    while len(active) > schedule.stop_threshold:
        keys = (((active.labels >> lo) & block_mask) << shifts).sum(axis=1)
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
        group_start = np.repeat(starts, np.diff(np.r_[starts, sk.size]))
        rank = np.arange(sk.size) - group_start
        has_next = np.r_[sk[1:] == sk[:-1], False]
        lead = np.flatnonzero((rank % 2 == 0) & has_next)
        if lead.size == 0:
            break
        first = order[lead]
        second = order[lead + 1]
        stats.discarded += len(active) - 2 * lead.size
        success = _step_rng(run_key, stage_index, step).integers(0, 2, size=lead.size).astype(bool)
        la, lb = active.labels[first], active.labels[second]
        pa, pb = active.phases[first], active.phases[second]
        sign = np.where(success, -1, 1)
        merged = StatePool(
            n,
            (la + sign[:, None] * lb) % mod,
            (pa + sign * pb) % mod,
            active.poisoned[first] | active.poisoned[second],
            active.leaves[first] + active.leaves[second],
        )
        outputs.append(merged.take(success))
        active = merged.take(~success)
        stats.combinations += int(lead.size)
        step += 1
    stats.steps = step
    stats.discarded += len(active)
    out = StatePool.concat(outputs, n, d)
    if not _low_bits_zero(out.labels, lo + width):
        raise SieveInvariantError(f"stage {stage_index} output has non-zero bits below position {lo + width}")
    stats.output_size = len(out)
    return out, stats


@dataclass
class SieveRun:
    final: StatePool
    k_target: int
    prepared: int
    stages: list[StageStats] = field(default_factory=list)
    invariant_checks: int = 0

    @property
    def success(self) -> bool:
        return len(self.final) >= self.k_target

    @property
    def shortfall(self) -> bool:
        return not self.success

    def as_dict(self) -> dict:
        return {
            "prepared": self.prepared,
            "final_size": len(self.final),
            "k_target": self.k_target,
            "stages_run": sum(not s.skipped for s in self.stages),
            "success": self.success,
            "stages": [s.as_dict() for s in self.stages],
        }


def run_sieve(
    inst: HiddenShiftInstance,
    schedule: SieveSchedule,
    k_target: int,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
) -> SieveRun:
    """Prepare ``N`` states and run every stage; never raises on pool exhaustion.

    Stages whose rounded width is zero are skipped, so with ``n = 1`` the
    prepared states are returned unchanged.
    """
    if (schedule.n, schedule.d) != (inst.n, inst.d):
        raise ParameterError(f"schedule ({schedule.n},{schedule.d}) does not fit instance ({inst.n},{inst.d})")
    run_key = int(rng.integers(0, 2**63))
    pool = inst.prepare(schedule.pool_size, rng, ledger)
    run = SieveRun(pool, k_target, schedule.pool_size)
    for i, width in enumerate(schedule.bit_widths, start=1):
        if width == 0:
            run.stages.append(StageStats(i, 0, 1, len(pool), len(pool), skipped=True))
            continue
        pool, stats = run_stage(pool, i, schedule, ledger=ledger, run_key=run_key)
        run.stages.append(stats)
        run.invariant_checks += 2
    if not _low_bits_zero(pool.labels, inst.n - 1):
        raise SieveInvariantError("final labels are not of the form {0, 2^(n-1)}^d")
    run.invariant_checks += 1
    run.final = pool
    return run


# ---------------------------------------------------------------------------
# measurement and recovery
# ---------------------------------------------------------------------------


def measure_pool(pool: StatePool, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Hadamard-measure every final state. Returns ``(betas, parities)``."""
    n = pool.n_bits
    if not _low_bits_zero(pool.labels, n - 1):
        raise ParameterError("measurement needs labels in {0, 2^(n-1)}^d")
    betas = (pool.labels >> (n - 1)) & 1
    half = 1 << (n - 1)
    phases = pool.phases % (1 << n)
    coin = rng.random(len(pool))
    exact = phases % half == 0
    parities = np.where(exact, (phases >> (n - 1)) & 1, 0)
    # states whose phase is not a multiple of 2^(n-1): P(1) = sin^2(pi phi / 2^n)
    p_one = np.sin(np.pi * phases / (1 << n)) ** 2
    parities = np.where(exact, parities, coin < p_one)
    parities = np.where(pool.poisoned, coin < 0.5, parities)
    return betas.astype(np.int64), parities.astype(np.int64)


def measure_final(state: PhaseState, inst: HiddenShiftInstance | None, rng: np.random.Generator) -> ParitySample:
    if inst is not None and (state.label.n_bits, state.label.d) != (inst.n, inst.d):
        raise ShapeError("state does not belong to this instance")
    betas, parities = measure_pool(StatePool.from_states([state]), rng)
    return ParitySample(tuple(int(b) for b in betas[0]), int(parities[0]))


def recover_low_bits(
    inst: HiddenShiftInstance,
    schedule: SieveSchedule,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
    *,
    k_target: int = 4,
    retry_cap: int = 8,
    samples: list[ParitySample] | None = None,
) -> list[int]:
    """Lowest bit of every component of the shift, from parity samples of final states."""
    basis = ParityBasis(inst.d)
    for _ in range(retry_cap):
        run = run_sieve(inst, schedule, k_target, rng, ledger)
        betas, parities = measure_pool(run.final, rng)
        for beta, parity in zip(betas, parities):
            if samples is not None:
                samples.append(ParitySample(tuple(int(b) for b in beta), int(parity)))
            basis.add([int(b) for b in beta], int(parity))
            if basis.full:
                return basis.solve()
    raise RecoveryError(f"parity samples reached rank {basis.rank} < {inst.d} after {retry_cap} sieve runs")


def recover_shift(
    inst: HiddenShiftInstance,
    pool_constant: float | None,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
    *,
    random_offset: bool = False,
    k_target: int = 4,
    retry_cap: int = 8,
) -> PhaseLabel:
    """Learn the shift one bit per component at a time, halving the domain each round."""
    n, d = inst.n, inst.d
    shift = [0] * d
    cur = inst
    for rnd in range(n):
        schedule = make_schedule(cur.n, d, pool_constant)
        try:
            beta = recover_low_bits(cur, schedule, rng, ledger, k_target=k_target, retry_cap=retry_cap)
        except RecoveryError as exc:
            raise RecoveryError(f"round {rnd}: {exc}", round_index=rnd) from exc
        for c in range(d):
            shift[c] |= beta[c] << rnd
        if cur.n > 1:
            offset = rng.integers(0, 2, size=d) if random_offset else None
            cur = cur.halve(beta, offset)
    return PhaseLabel(n, tuple(shift))


def recover_shift_majority(
    inst: HiddenShiftInstance,
    pool_constant: float | None,
    rng: np.random.Generator,
    ledger: QueryLedger | None = None,
    *,
    votes: int = 3,
    **kwargs,
) -> PhaseLabel:
    """Plurality vote over independent :func:`recover_shift` runs (ties: earliest)."""
    results: list[PhaseLabel] = []
    last_error: RecoveryError | None = None
    for _ in range(votes):
        try:
            results.append(recover_shift(inst, pool_constant, rng, ledger, **kwargs))
        except RecoveryError as exc:
            last_error = exc
        if results and Counter(r.components for r in results).most_common(1)[0][1] * 2 > votes:
            break  # a strict majority cannot be overturned
    if not results:
        raise last_error or RecoveryError("no votes")
    tally = Counter(r.components for r in results)
    best = max(tally.values())
    for r in results:
        if tally[r.components] == best:
            return r
    raise AssertionError("unreachable")
