"""d-dimensional strings, their substring and derived views, and injectivity lengths.

All multi-dimensional data is row-major with the last coordinate fastest.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CoordinateError, ParameterError
from .ledger import QueryLedger


def symbol_dtype(q: int) -> np.dtype:
    """Smallest unsigned integer dtype that holds ``q - 1``."""
    top = int(q) - 1
    for dt in (np.uint8, np.uint16, np.uint32, np.uint64):
        if top <= np.iinfo(dt).max:
            return np.dtype(dt)
    raise ParameterError(f"alphabet size {q} does not fit in 64 bits")


class GridString:
    """An immutable ``side x ... x side`` array over the alphabet ``{0..q-1}``.

    A string may be bound to a :class:`QueryLedger` with :meth:`metered`; every
    :meth:`read` through the bound copy is then charged to the ledger under the
    given role (``"text"`` or ``"pattern"``).
    """

    __slots__ = ("d", "side", "q", "cells", "ledger", "role")

    def __init__(
        self,
        cells,
        d: int,
        side: int,
        q: int,
        *,
        ledger: QueryLedger | None = None,
        role: str = "text",
    ):
        d, side, q = int(d), int(side), int(q)
        if d < 1 or side < 1 or q < 2:
            raise ParameterError(f"need d >= 1, side >= 1, q >= 2 (got {d}, {side}, {q})")
        flat = np.asarray(cells).reshape(-1)
        if flat.size != side**d:
            raise ParameterError(f"expected {side**d} cells, got {flat.size}")
        if flat.size and (flat.min() < 0 or int(flat.max()) >= q):
            raise ParameterError(f"cell values must lie in [0, {q})")
        flat = flat.astype(symbol_dtype(q), copy=True)
        flat.flags.writeable = False
        self.d = d
        self.side = side
        self.q = q
        self.cells = flat
        self.ledger = ledger
        self.role = role

    @classmethod
    def from_array(cls, arr, q: int | None = None) -> GridString:
        """Build from a cubic ndarray; ``q`` defaults to ``max(2, max + 1)``."""
        arr = np.asarray(arr)
        if arr.ndim < 1 or len(set(arr.shape)) != 1:
            raise ParameterError(f"array must be cubic, got shape {arr.shape}")
        if q is None:
            q = max(2, int(arr.max()) + 1) if arr.size else 2
        return cls(arr, arr.ndim, arr.shape[0], q)

    @property
    def array(self) -> np.ndarray:
        return self.cells.reshape((self.side,) * self.d)

    def metered(self, ledger: QueryLedger | None, role: str = "text") -> GridString:
        out = object.__new__(GridString)
        out.d, out.side, out.q, out.cells = self.d, self.side, self.q, self.cells
        out.ledger, out.role = ledger, role
        return out

    def charge(self, count: int) -> None:
        if self.ledger is not None and count:
            self.ledger.charge_role(self.role, count)

    def read(self, x: Sequence[int]) -> int:
        x = _check_coord(x, self.d, self.side)
        self.charge(1)
        return int(self.cells[np.ravel_multi_index(x, (self.side,) * self.d)])

    def subgrid(self, offset: Sequence[int], k: int) -> SubgridView:
        return SubgridView(self, offset, k)

    def derived(self, k: int) -> DerivedView:
        return DerivedView(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridString):
            return NotImplemented
        return (
            (self.d, self.side, self.q) == (other.d, other.side, other.q)
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self) -> int:
        return hash((self.d, self.side, self.q, self.cells.tobytes()))

    def __repr__(self) -> str:
        return f"GridString(d={self.d}, side={self.side}, q={self.q})"


def _check_coord(x: Sequence[int], d: int, side: int) -> tuple[int, ...]:
    x = tuple(int(v) for v in np.atleast_1d(x))
    if len(x) != d:
        raise CoordinateError(f"expected a {d}-vector, got {x}")
    for v in x:
        if not 0 <= v < side:
            raise CoordinateError(f"coordinate {x} outside [0, {side})^{d}")
    return x


def read(S: GridString, x: Sequence[int]) -> int:
    return S.read(x)


class DerivedView:
    """The string ``S^{>k}`` whose symbol at ``s`` is the ``k``-block of ``S`` at ``s``.

    One logical read costs ``k**d`` base reads.
    """

    def __init__(self, base: GridString, k: int):
        k = int(k)
        if not 1 <= k <= base.side:
            raise ParameterError(f"block size {k} outside [1, {base.side}]")
        self.base = base
        self.k = k
        self.d = base.d
        self.side = base.side - k + 1

    def read(self, s: Sequence[int]) -> tuple[int, ...]:
        return megachar(self, s)

    def block_rows(self, offset: Sequence[int], size: int) -> np.ndarray:
        """Megacharacters of the ``size``-cube at ``offset`` as rows, row-major.

        Returns an array of shape ``(size**d, k**d)``. Only the distinct base
        cells are charged, as ``classical_work``.
        """
        offset = tuple(int(v) for v in offset)
        if len(offset) != self.d or any(o < 0 or o + size > self.side for o in offset):
            raise CoordinateError(f"window {offset}+{size} exceeds derived side {self.side}")
        span = size + self.k - 1
        region = self.base.array[tuple(slice(o, o + span) for o in offset)]
        if self.base.ledger is not None:
            self.base.ledger.charge(work=span**self.d)
        win = sliding_window_view(region, (self.k,) * self.d)
        return win.reshape(size**self.d, self.k**self.d)

    def subgrid(self, offset: Sequence[int], k: int) -> SubgridView:
        return SubgridView(self, offset, k)


class SubgridView:
    """Read-only window ``base_{s,k}`` of a :class:`GridString` or :class:`DerivedView`."""

    def __init__(self, base: GridString | DerivedView, offset: Sequence[int], k: int):
        offset = tuple(int(v) for v in offset)
        k = int(k)
        if len(offset) != base.d:
            raise CoordinateError(f"offset {offset} is not a {base.d}-vector")
        if k < 1 or any(o < 0 or o + k > base.side for o in offset):
            raise CoordinateError(f"window at {offset} of side {k} overruns side {base.side}")
        self.base = base
        self.offset = offset
        self.side = k
        self.d = base.d

    def read(self, z: Sequence[int]):
        z = _check_coord(z, self.d, self.side)
        return self.base.read(tuple(o + v for o, v in zip(self.offset, z)))

    def to_array(self) -> np.ndarray:
        """Materialize a window of a plain string (uncharged)."""
        if not isinstance(self.base, GridString):
            raise TypeError("to_array is defined for windows of plain strings")
        return self.base.array[tuple(slice(o, o + self.side) for o in self.offset)]


def megachar(V: DerivedView, s: Sequence[int]) -> tuple[int, ...]:
    s = tuple(int(v) for v in np.atleast_1d(s))
    if len(s) != V.d or any(not 0 <= v < V.side for v in s):
        raise CoordinateError(f"offset {s} overruns derived side {V.side}")
    block = V.base.array[tuple(slice(v, v + V.k) for v in s)]
    V.base.charge(V.k**V.d)
    return tuple(int(c) for c in block.reshape(-1))


# ---------------------------------------------------------------------------
# injectivity
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _hash_weights(count: int) -> np.ndarray:
    rng = np.random.default_rng(0x9E3779B97F4A7C15)
    return rng.integers(0, 2**63, size=count, dtype=np.uint64) * np.uint64(2) + np.uint64(1)


def block_hashes(arr: np.ndarray, k: int) -> np.ndarray:
    """64-bit content hash of every ``k``-block of ``arr`` (shape ``(L,)*d``)."""
    d = arr.ndim
    L = arr.shape[0] - k + 1
    src = arr.astype(np.uint64)
    weights = _hash_weights(k**d)
    h = np.zeros((L,) * d, dtype=np.uint64)
    for w, z in zip(weights, itertools.product(range(k), repeat=d)):
        h += w * src[tuple(slice(zi, zi + L) for zi in z)]
    h ^= h >> np.uint64(31)
    return h


def equal_block_groups(arr: np.ndarray, k: int) -> list[np.ndarray]:
    """Groups (flat position arrays) of ``k``-blocks of ``arr`` that are exactly equal.

    Candidates are found by hash and then verified by exact comparison; only
    groups of size at least two are returned.
    """
    h = block_hashes(arr, k).reshape(-1)
    order = np.argsort(h, kind="stable")
    hs = h[order]
    dup = np.zeros(hs.size, dtype=bool)
    if hs.size > 1:
        eq = hs[1:] == hs[:-1]
        dup[1:] |= eq
        dup[:-1] |= eq
    if not dup.any():
        return []
    cand = order[dup]
    rows = sliding_window_view(arr, (k,) * arr.ndim).reshape(-1, k**arr.ndim)[cand]
    _, inverse, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    groups = []
    for gid in np.flatnonzero(counts > 1):
        groups.append(np.sort(cand[inverse == gid]))
    return groups


def derived_is_injective(S: GridString, k: int) -> bool:
    return not equal_block_groups(S.array, k)


def injectivity_length(S: GridString) -> int:
    """Smallest ``k`` such that all ``k``-blocks of ``S`` are pairwise distinct."""
    return _bisect_min(1, S.side, lambda k: derived_is_injective(S, k))


def _close_pair(points: np.ndarray, reach: int) -> bool:
    """True if two distinct points have Chebyshev distance at most ``reach``."""
    if len(points) < 2:
        return False
    if points.shape[1] == 1:
        p = np.sort(points[:, 0])
        return bool(np.any(np.diff(p) <= reach))
    cell = reach + 1
    buckets: dict[tuple[int, ...], np.ndarray] = {}
    for p in points:
        key = tuple(int(v) // cell for v in p)
        if key in buckets:
            return True
        buckets[key] = p
    deltas = [dz for dz in itertools.product((-1, 0, 1), repeat=points.shape[1]) if any(dz)]
    for key, p in buckets.items():
        for dz in deltas:
            other = buckets.get(tuple(a + b for a, b in zip(key, dz)))
            if other is not None and int(np.max(np.abs(other - p))) <= reach:
                return True
    return False


def windows_injective(S: GridString, k: int, m: int) -> bool:
    """Whether every ``m``-cube window of ``S^{>k}`` is injective.

    When ``S^{>k}`` is shorter than ``m`` the single (clipped) window is the
    whole derived string.
    """
    L = S.side - k + 1
    reach = min(m, L) - 1
    for group in equal_block_groups(S.array, k):
        pts = np.stack(np.unravel_index(group, (L,) * S.d), axis=1)
        if _close_pair(pts, reach):
            return False
    return True


def m_injectivity_length(S: GridString, m: int) -> int:
    """Smallest ``k`` such that every ``m``-window of ``S^{>k}`` is injective."""
    m = int(m)
    if not 1 <= m <= S.side:
        raise ParameterError(f"window size m={m} outside [1, {S.side}]")
    return _bisect_min(1, S.side, lambda k: windows_injective(S, k, m))


def _bisect_min(lo: int, hi: int, ok) -> int:
    # ok is monotone in k and ok(hi) holds
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo
