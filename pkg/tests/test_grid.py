from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qpmatch.errors import CoordinateError, ParameterError
from qpmatch.grid import (
    DerivedView,
    GridString,
    block_hashes,
    derived_is_injective,
    equal_block_groups,
    injectivity_length,
    m_injectivity_length,
    megachar,
    read,
    symbol_dtype,
)
from qpmatch.ledger import QueryLedger

A, B = 0, 1
# binary 5x5 worked example with injectivity length 3
EXAMPLE_5X5 = np.array(
    [[0, 0, 1, 1, 1], [1, 1, 1, 0, 0], [1, 1, 0, 0, 1], [1, 0, 1, 0, 1], [1, 0, 1, 1, 0]]
)


def grids(max_side=7, max_d=2, max_q=3):
    @st.composite
    def build(draw):
        d = draw(st.integers(1, max_d))
        side = draw(st.integers(1, max_side if d == 1 else 5))
        q = draw(st.integers(2, max_q))
        cells = draw(st.lists(st.integers(0, q - 1), min_size=side**d, max_size=side**d))
        return GridString(np.array(cells), d, side, q)

    return build()


class TestGridString:
    def test_invariants_rejected(self):
        with pytest.raises(ParameterError):
            GridString([0, 1, 2], 1, 3, 2)
        with pytest.raises(ParameterError):
            GridString([0, 1], 1, 3, 2)
        with pytest.raises(ParameterError):
            GridString([0], 0, 1, 2)
        with pytest.raises(ParameterError):
            GridString([0], 1, 1, 1)

    def test_cells_are_immutable(self):
        S = GridString([0, 1, 0, 1], 1, 4, 2)
        with pytest.raises(ValueError):
            S.cells[0] = 1

    @pytest.mark.parametrize("q,dtype", [(2, np.uint8), (256, np.uint8), (257, np.uint16), (2**20, np.uint32)])
    def test_smallest_dtype(self, q, dtype):
        assert symbol_dtype(q) == dtype

    def test_read_constant(self):
        S = GridString(np.zeros(16), 2, 4, 2)
        assert all(read(S, (i, j)) == 0 for i in range(4) for j in range(4))

    def test_read_1d(self):
        assert read(GridString([0, 1, 0, 1], 1, 4, 2), (2,)) == 0

    def test_read_row_major(self):
        S = GridString(np.arange(9), 2, 3, 9)
        assert read(S, (1, 2)) == 5

    @pytest.mark.parametrize("x", [(3,), (-1,), (0, 0)])
    def test_read_out_of_range(self, x):
        with pytest.raises(CoordinateError):
            read(GridString([0, 1, 0], 1, 3, 2), x)

    def test_read_charges_bound_ledger(self):
        led = QueryLedger()
        S = GridString([0, 1, 0, 1], 1, 4, 2).metered(led, "pattern")
        S.read((1,))
        S.read((2,))
        assert led.pattern_queries == 2 and led.text_queries == 0 and led.classical_work == 2

    def test_subgrid_reads_offset(self):
        S = GridString(np.arange(16), 2, 4, 16)
        V = S.subgrid((1, 2), 2)
        assert V.read((1, 1)) == S.read((2, 3))
        with pytest.raises(CoordinateError):
            S.subgrid((3, 0), 2)


class TestMegachar:
    def test_enumeration(self):
        V = GridString([A, B, A, B], 1, 4, 2).derived(2)
        assert [megachar(V, (s,)) for s in range(3)] == [(A, B), (B, A), (A, B)]

    def test_whole_string_block(self):
        S = GridString(np.arange(9), 2, 3, 9)
        assert megachar(S.derived(3), (0, 0)) == tuple(range(9))

    def test_constant(self):
        V = GridString(np.zeros(25), 2, 5, 2).derived(3)
        assert megachar(V, (2, 1)) == (0,) * 9

    def test_overrun(self):
        with pytest.raises(CoordinateError):
            megachar(GridString([0, 1, 0, 1], 1, 4, 2).derived(2), (3,))

    @pytest.mark.parametrize("d,k", [(1, 3), (2, 2), (3, 2)])
    def test_charges_k_to_the_d(self, d, k):
        led = QueryLedger()
        S = GridString(np.zeros(4**d), d, 4, 2).metered(led, "text")
        megachar(S.derived(k), (0,) * d)
        assert led.text_queries == k**d

    def test_block_rows_match_megachar(self):
        rng = np.random.default_rng(3)
        S = GridString(rng.integers(0, 3, size=(6, 6)), 2, 6, 3)
        V = DerivedView(S, 2)
        rows = V.block_rows((1, 2), 3)
        expect = [megachar(V, (1 + i, 2 + j)) for i in range(3) for j in range(3)]
        assert [tuple(r) for r in rows] == expect

    @settings(max_examples=60, deadline=None)
    @given(grids(), st.data())
    def test_equal_iff_blocks_agree(self, S, data):
        k = data.draw(st.integers(1, S.side))
        L = S.side - k + 1
        s = tuple(data.draw(st.integers(0, L - 1)) for _ in range(S.d))
        t = tuple(data.draw(st.integers(0, L - 1)) for _ in range(S.d))
        V = S.derived(k)
        a = S.array[tuple(slice(v, v + k) for v in s)]
        b = S.array[tuple(slice(v, v + k) for v in t)]
        assert (megachar(V, s) == megachar(V, t)) == bool(np.array_equal(a, b))


class TestInjectivity:
    def test_constant_string(self):
        S = GridString(np.zeros(7), 1, 7, 2)
        assert injectivity_length(S) == 7
        assert m_injectivity_length(S, 1) == 1

    def test_distinct_symbols(self):
        assert injectivity_length(GridString(np.arange(8), 1, 8, 8)) == 1

    def test_abab(self):
        assert injectivity_length(GridString([A, B, A, B], 1, 4, 2)) == 3

    def test_worked_example_string(self):
        S = GridString.from_array(EXAMPLE_5X5)
        assert injectivity_length(S) == 3
        assert m_injectivity_length(S, 2) == 3
        assert not derived_is_injective(S, 2)

    def test_m_out_of_range(self):
        S = GridString([0, 1, 0], 1, 3, 2)
        for m in (0, 4):
            with pytest.raises(ParameterError):
                m_injectivity_length(S, m)

    def test_hash_groups_are_exact(self):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 2, size=(12, 12))
        ref = oracles.blocks(arr, 2)
        for group in equal_block_groups(arr, 2):
            offsets = [tuple(int(v) for v in np.unravel_index(p, (11, 11))) for p in group]
            assert len({ref[o] for o in offsets}) == 1

    def test_block_hash_shape(self):
        assert block_hashes(np.zeros((5, 5), dtype=np.uint8), 2).shape == (4, 4)

    @settings(max_examples=80, deadline=None)
    @given(grids())
    def test_against_linear_scan(self, S):
        assert injectivity_length(S) == oracles.injectivity_length(S.array)

    @settings(max_examples=60, deadline=None)
    @given(grids(), st.data())
    def test_m_length_against_window_scan(self, S, data):
        m = data.draw(st.integers(1, S.side))
        got = m_injectivity_length(S, m)
        assert got == oracles.m_injectivity_length(S.array, m)
        assert got <= injectivity_length(S) <= S.side

    @settings(max_examples=40, deadline=None)
    @given(grids())
    def test_monotone_in_k(self, S):
        flags = [oracles.injective_at(S.array, k) for k in range(1, S.side + 1)]
        first = flags.index(True)
        assert all(flags[first:])

    def test_boundary_window_equals_scan(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            S = GridString(rng.integers(0, 2, size=9), 1, 9, 2)
            u = injectivity_length(S)
            m = S.side - u + 1
            assert m_injectivity_length(S, m) == oracles.m_injectivity_length(S.array, m)

    def test_worked_example_windows(self):
        # at the reported length every 2x2 window of the derived string is injective;
        # one step shorter, some window is not
        rng = np.random.default_rng(5)

        def windows_ok(arr, k):
            b = oracles.blocks(arr, k)
            L = arr.shape[0] - k + 1
            w = min(2, L)
            for i in range(L - w + 1):
                for j in range(L - w + 1):
                    vals = [b[(i + a, j + c)] for a in range(w) for c in range(w)]
                    if len(set(vals)) < len(vals):
                        return False
            return True

        for _ in range(30):
            arr = rng.integers(0, 2, size=(5, 5))
            k = m_injectivity_length(GridString(arr, 2, 5, 2), 2)
            assert windows_ok(arr, k)
            if k > 1:
                assert not windows_ok(arr, k - 1)
