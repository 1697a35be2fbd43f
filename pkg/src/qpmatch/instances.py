"""Generators for the input families: random and planted strings, the adversarial
and permutation lower-bound families, megacharacter blocking and noisy
hidden-shift instances.

Every generator is a pure function of its seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import GridString, derived_is_injective
from .outcome import MatchOutcome
from .sieve import HiddenShiftInstance
from .stats import wilson_interval

MODES = ("planted", "unplanted", "adversarial", "perm_d0", "perm_d1")


@dataclass(frozen=True)
class GenSpec:
    n: int
    m: int
    d: int = 1
    q: int = 2
    seed: int = 0
    mode: str = "planted"
    gamma: float | None = None
    noise: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.d < 1:
            raise ParameterError("d must be positive")
        if not 1 <= self.m <= self.n:
            raise ParameterError(f"need 1 <= m <= n (got m={self.m}, n={self.n})")
        if self.q < 2:
            raise ParameterError("alphabet size must be at least 2")
        if self.mode == "adversarial" and self.gamma is None:
            raise ParameterError("adversarial mode needs gamma")
        if not 0 <= self.noise < 1:
            raise ParameterError("noise must lie in [0, 1)")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> GenSpec:
        names = cls.__dataclass_fields__
        return cls(**{k: v for k, v in data.items() if k in names})


@dataclass(frozen=True)
class GeneratedPair:
    text: GridString
    pattern: GridString
    planted_offset: tuple[int, ...] | None = None
    answer: MatchOutcome | None = None
    record: dict = field(default_factory=dict, compare=False)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _window(arr: np.ndarray, offset, size: int) -> np.ndarray:
    return arr[tuple(slice(o, o + size) for o in offset)]


def gen_random(spec: GenSpec) -> GeneratedPair:
    """Uniform text; the pattern is copied from a uniform offset (planted) or drawn independently."""
    if spec.mode not in ("planted", "unplanted"):
        raise ParameterError(f"gen_random handles planted/unplanted, not {spec.mode!r}")
    rng = _rng(spec.seed)
    shape = (spec.n,) * spec.d
    T = rng.integers(0, spec.q, size=shape)
    if spec.mode == "planted":
        offset = tuple(int(v) for v in rng.integers(0, spec.n - spec.m + 1, size=spec.d))
        P = _window(T, offset, spec.m).copy()
    else:
        offset = None
        P = rng.integers(0, spec.q, size=(spec.m,) * spec.d)
    return GeneratedPair(GridString(T, spec.d, spec.n, spec.q), GridString(P, spec.d, spec.m, spec.q), offset)


def tail_threshold(n: int, d: int, q: int) -> int:
    """``ceil((3 d log_q n)^(1/d))``, the block size in the injectivity tail bound."""
    return math.ceil((3 * d * math.log(n, q)) ** (1 / d) - 1e-12)


@dataclass(frozen=True)
class TailResult:
    frequency: float
    hits: int
    trials: int
    threshold: int
    interval: tuple[float, float]
    bound: float


def injectivity_tail_experiment(n: int, d: int, q: int, trials: int, seed: int) -> TailResult:
    """Frequency of ``upsilon(S) >= k`` for uniform strings, ``k`` the tail threshold.

    ``upsilon(S) >= k`` holds exactly when ``S^{>k-1}`` is not injective, so one
    injectivity probe per trial suffices.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    k = tail_threshold(n, d, q)
    hits = 0
    for i in range(trials):
        S = GridString(_rng([seed, i]).integers(0, q, size=(n,) * d), d, n, q)
        if k <= 1 or not derived_is_injective(S, k - 1):
            hits += 1
    return TailResult(hits / trials, hits, trials, k, wilson_interval(hits, trials), 1 / n**d)


def _coordinate_code(m: int, d: int) -> np.ndarray:
    """``P(x) = sum_i x_i (2m)^i`` on ``[m]^d`` (axis 0 is the least significant digit)."""
    grids = np.indices((m,) * d)
    return sum(grids[i] * (2 * m) ** i for i in range(d))


def gen_adversarial(
    n: int, m: int, d: int, gamma: float, seed: int, *, clean_block: bool = True
) -> GeneratedPair:
    """Tiled coordinate-identity pattern with a ``gamma`` fraction displaced in every
    block but (optionally) one uniformly chosen clean block."""
    if m < 1 or n % m:
        raise ParameterError(f"n={n} must be a positive multiple of m={m}")
    cells = m**d
    count = round(gamma * cells)
    if count < 1 or abs(gamma * cells - count) > 1e-9:
        raise ParameterError(f"gamma * m^d = {gamma * cells} must be an integer >= 1")
    p = n // m
    q = (2 * m) ** d
    rng = _rng(seed)
    P = _coordinate_code(m, d)
    shift = sum(m * (2 * m) ** i for i in range(d))
    blocks = list(np.ndindex(*(p,) * d))
    clean = blocks[int(rng.integers(len(blocks)))] if clean_block else None
    T = np.empty((n,) * d, dtype=np.int64)
    displaced: dict[str, list[int]] = {}
    for b in blocks:
        block = P.copy().reshape(-1)
        if b != clean:
            pos = np.sort(rng.choice(cells, size=count, replace=False))
            block[pos] += shift
            displaced[",".join(map(str, b))] = pos.tolist()
        T[tuple(slice(i * m, (i + 1) * m) for i in b)] = block.reshape((m,) * d)
    offset = None if clean is None else tuple(i * m for i in clean)
    answer = MatchOutcome.found(offset) if offset is not None else MatchOutcome.not_found()
    return GeneratedPair(
        GridString(T, d, n, q),
        GridString(P, d, m, q),
        offset,
        answer,
        {"displaced_per_block": count, "displaced": displaced, "clean_block": None if clean is None else list(clean)},
    )


def gen_permutation_pair(n: int, m: int, d: int, same_source: bool, seed: int) -> GeneratedPair:
    """Text is a uniform permutation of ``[n^d]``; the pattern is either a fresh
    random injective block (``same_source=False``) or a uniform sub-block of the text."""
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n (got m={m}, n={n})")
    rng = _rng(seed)
    q = max(2, n**d)
    T = rng.permutation(n**d).reshape((n,) * d)
    if same_source:
        offset = tuple(int(v) for v in rng.integers(0, n - m + 1, size=d))
        P = _window(T, offset, m).copy()
    else:
        offset = None
        P = rng.permutation(rng.choice(n**d, size=m**d, replace=False)).reshape((m,) * d)
    return GeneratedPair(GridString(T, d, n, q), GridString(P, d, m, q), offset)


def _blocks(arr: np.ndarray, b: int) -> np.ndarray:
    """Rows of the ``b``-blocks of ``arr`` (block-major, cells row-major)."""
    d = arr.ndim
    k = arr.shape[0] // b
    split = arr.reshape(sum(((k, b) for _ in range(d)), ()))
    order = tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2))
    return split.transpose(order).reshape(k**d, b**d)


def megacharacter_blocking(T: GridString, P: GridString, b: int) -> tuple[GridString, GridString]:
    """Re-encode every aligned ``b``-block as one symbol.

    Blocks are coded in base ``q`` when ``q^(b^d)`` fits in 63 bits and are
    otherwise assigned dense identifiers shared by text and pattern.
    """
    b = int(b)
    if b < 1 or T.side % b or P.side % b:
        raise ParameterError(f"block size {b} must divide both sides ({T.side}, {P.side})")
    if T.d != P.d or T.q != P.q:
        raise ParameterError("text and pattern must share d and q")
    if b == 1:
        return T, P
    rows_t = _blocks(T.array.astype(np.int64), b)
    rows_p = _blocks(P.array.astype(np.int64), b)
    width = b**T.d
    if width * math.log2(T.q) <= 63:
        weights = np.array([T.q**i for i in range(width - 1, -1, -1)], dtype=np.int64)
        code_t, code_p = rows_t @ weights, rows_p @ weights
        q = T.q**width
    else:
        _, ids = np.unique(np.vstack([rows_t, rows_p]), axis=0, return_inverse=True)
        ids = ids.reshape(-1)
        code_t, code_p = ids[: len(rows_t)], ids[len(rows_t) :]
        q = max(2, int(ids.max()) + 1)
    kt, kp = T.side // b, P.side // b
    return GridString(code_t, T.d, kt, q), GridString(code_p, P.d, kp, q)


def gen_shift_instance(
    n: int, d: int, seed: int, *, shift=None, q: int | None = None
) -> HiddenShiftInstance:
    """Exact instance: uniformly random injective ``f`` and ``g(x) = f(x + s)``."""
    rng = _rng(seed)
    size = (1 << n) ** d
    q = 4 * size if q is None else int(q)
    if q < size:
        raise ParameterError(f"alphabet {q} too small for an injective table of {size} cells")
    if shift is None:
        shift = tuple(int(v) for v in rng.integers(0, 1 << n, size=d))
    f = rng.choice(q, size=size, replace=False).reshape((1 << n,) * d)
    g = np.roll(f, tuple(-int(s) for s in shift), axis=tuple(range(d)))
    return HiddenShiftInstance(n, d, f, g, q, shift=shift)


def inject_noise(inst: HiddenShiftInstance, eps: float, seed: int) -> HiddenShiftInstance:
    """Overwrite exactly ``ceil(eps 2^(nd))`` entries of ``g`` with unused symbols.

    The returned instance records the flat indices it corrupted in ``corrupted``.
    """
    if not 0 <= eps < 1:
        raise ParameterError("eps must lie in [0, 1)")
    size = inst.g.size
    count = math.ceil(eps * size - 1e-9)
    if count == 0:
        return inst
    used = np.union1d(inst.f.reshape(-1), inst.g.reshape(-1))
    if inst.q - used.size < count:
        raise ParameterError(f"alphabet {inst.q} has only {inst.q - used.size} unused symbols, need {count}")
    rng = _rng(seed)
    where = np.sort(rng.choice(size, size=count, replace=False))
    fresh = np.zeros(0, dtype=np.int64)
    while fresh.size < count:
        draw = rng.integers(0, inst.q, size=2 * (count - fresh.size) + 8)
        draw = draw[~np.isin(draw, used)]
        _, first = np.unique(draw, return_index=True)
        draw = draw[np.sort(first)]
        draw = draw[~np.isin(draw, fresh)]
        fresh = np.concatenate([fresh, draw[: count - fresh.size]])
    g = inst.g.copy().reshape(-1)
    g[where] = fresh
    out = HiddenShiftInstance(
        inst.n,
        inst.d,
        inst.f,
        g.reshape(inst.g.shape),
        inst.q,
        shift=inst.unseal().components if inst.has_sealed_shift else None,
        mode=inst.mode,
        query_weight=inst.query_weight,
    )
    out.corrupted = where
    return out

