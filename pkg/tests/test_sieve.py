from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import stats

import oracles
from qpmatch.baseline import brute_force_shift
from qpmatch.errors import ParameterError, RecoveryError, ShapeError, SieveInvariantError
from qpmatch.instances import gen_shift_instance, inject_noise
from qpmatch.ledger import QueryLedger
from qpmatch.sieve import (
    ASYMPTOTIC_C,
    HiddenShiftInstance,
    PhaseLabel,
    PhaseState,
    SieveSchedule,
    StatePool,
    combine,
    make_schedule,
    measure_final,
    measure_pool,
    prepare_state,
    recover_low_bits,
    recover_shift,
    recover_shift_majority,
    round_bit_widths,
    run_sieve,
    run_stage,
)


def rng(*seed):
    return np.random.default_rng(list(seed) or None)


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------


class TestSchedule:
    def test_asymptotic_constant(self):
        assert ASYMPTOTIC_C == pytest.approx(1.7804, abs=1e-4)
        assert abs(make_schedule(10_000, 1, 1.0).c - ASYMPTOTIC_C) < 0.05

    def test_constant_decreases_towards_limit(self):
        cs = [make_schedule(n, 1, 1.0).c for n in (100, 1000, 10_000, 100_000)]
        assert all(a > b for a, b in zip(cs, cs[1:]))
        assert cs[-1] - ASYMPTOTIC_C < 0.02

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_single_bit(self, d):
        s = make_schedule(1, d, 1.0)
        assert sum(s.bit_widths) == 0 and all(b == 0 for b in s.bit_widths)
        assert s.stage_count >= 1

    def test_n17_against_formula_oracle(self):
        S, c, widths, N = oracles.schedule(17, 1, 1.0)
        got = make_schedule(17, 1, 1.0)
        assert (got.stage_count, list(got.bit_widths), got.pool_size) == (S, widths, N)
        assert got.c == pytest.approx(c)
        assert got.stop_threshold == 17**2

    @pytest.mark.parametrize("n,d,widths", [(8, 1, (4, 2, 1)), (16, 1, (6, 5, 3, 1)), (8, 2, (3, 2, 1, 1))])
    def test_worked_examples(self, n, d, widths):
        assert make_schedule(n, d, 1.0).bit_widths == widths

    @pytest.mark.parametrize("n", range(1, 40))
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_widths_sum_and_sign(self, n, d):
        s = make_schedule(n, d, 0.5)
        assert sum(s.bit_widths) == n - 1
        assert min(s.bit_widths) >= 0 and s.pool_size >= 2
        assert s.stage_count == max(1, round(math.sqrt(2 * math.log(2, 3)) * math.sqrt(d * n)))

    def test_rounding_repairs_excess(self):
        assert round_bit_widths([2.9, 2.8, 0.1], 4) == (2, 2, 0)

    @pytest.mark.parametrize("n,d", [(0, 1), (1, 0)])
    def test_rejects_empty(self, n, d):
        with pytest.raises(ParameterError):
            make_schedule(n, d, 1.0)

    def test_schedule_invariants_checked(self):
        with pytest.raises(ParameterError):
            SieveSchedule(4, 1, 2, (1, 1), 10, 16, 1.0, 1.0)

    def test_pool_scales_with_constant(self):
        a, b = make_schedule(12, 1, 1.0), make_schedule(12, 1, 2.0)
        assert abs(b.pool_size - 2 * a.pool_size) <= 1


# ---------------------------------------------------------------------------
# labels, preparation, combination
# ---------------------------------------------------------------------------


class TestLabels:
    def test_modular_arithmetic(self):
        r, t = PhaseLabel(3, (5,)), PhaseLabel(3, (3,))
        assert (r - t).components == (2,) and (r + t).components == (0,)

    def test_range_checked(self):
        with pytest.raises(ParameterError):
            PhaseLabel(2, (4,))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            PhaseLabel(3, (1,)) + PhaseLabel(3, (1, 2))
        with pytest.raises(ShapeError):
            combine(PhaseState(PhaseLabel(3, (1,))), PhaseState(PhaseLabel(4, (1,))), rng(0))


class TestCombine:
    def test_both_branches(self):
        a, b = PhaseState(PhaseLabel(3, (5,))), PhaseState(PhaseLabel(3, (3,)))
        seen = {}
        g = rng(1)
        while len(seen) < 2:
            out, ok = combine(a, b, g)
            seen[ok] = out.label.components
        assert seen == {True: (2,), False: (0,)}

    def test_self_cancellation(self):
        a = PhaseState(PhaseLabel(5, (7, 9)))
        g = rng(2)
        for _ in range(20):
            out, ok = combine(a, a, g)
            if ok:
                assert out.label.components == (0, 0)

    def test_poison_propagates(self):
        clean = PhaseState(PhaseLabel(4, (3,)))
        bad = PhaseState(PhaseLabel(4, (6,)), poisoned=True)
        g = rng(3)
        assert all(combine(clean, bad, g)[0].poisoned for _ in range(20))
        assert all(combine(bad, clean, g)[0].poisoned for _ in range(20))
        assert not any(combine(clean, clean, g)[0].poisoned for _ in range(20))

    def test_success_probability_half(self):
        a, b = PhaseState(PhaseLabel(4, (3,))), PhaseState(PhaseLabel(4, (5,)))
        g = rng(4)
        wins = sum(combine(a, b, g)[1] for _ in range(10_000))
        assert stats.binomtest(wins, 10_000, 0.5).pvalue > 0.001


class TestPrepare:
    def test_exact_instance_never_poisoned(self):
        inst = gen_shift_instance(6, 1, 0)
        pool = inst.prepare(5000, rng(0))
        assert not pool.poisoned.any()
        assert not prepare_state(inst, rng(1)).poisoned

    def test_labels_uniform(self):
        inst = gen_shift_instance(4, 2, 1)
        pool = inst.prepare(100_000, rng(2))
        for c in range(2):
            counts = np.bincount(pool.labels[:, c], minlength=16)
            assert stats.chisquare(counts).pvalue > 0.01

    def test_poison_rate_tracks_noise(self):
        inst = inject_noise(gen_shift_instance(8, 2, 3), 0.01, 4)
        assert inst.noise_fraction == pytest.approx(0.01, abs=2e-5)
        pool = inst.prepare(100_000, rng(5))
        assert 0.015 <= pool.poisoned.mean() <= 0.025

    def test_query_charges(self):
        inst = gen_shift_instance(5, 1, 2)
        led = QueryLedger()
        inst.prepare(123, rng(0), led)
        assert (led.text_queries, led.pattern_queries, led.quantum_cost) == (123, 123, 246)

    def test_clean_phase_is_label_dot_shift(self):
        inst = gen_shift_instance(5, 2, 7)
        s = inst.unseal().components
        for mode in ("poison", "exact"):
            if mode == "exact":
                inst = HiddenShiftInstance(5, 2, inst.f, inst.g, inst.q, mode="exact")
            pool = inst.prepare(2000, rng(8))
            expect = (pool.labels * np.array(s)).sum(axis=1) % 32
            np.testing.assert_array_equal(pool.phases, expect)

    def test_exact_mode_poisons_ambiguous_values(self):
        f = np.array([0, 1, 2, 2])  # value 2 has two preimages
        g = np.array([1, 2, 2, 0])
        inst = HiddenShiftInstance(2, 1, f, g, 3, mode="exact", check_injective=False)
        pool = inst.prepare(4000, rng(1))
        # z = 2 is drawn with probability 1/2 and is always poisoned; others are clean
        assert 0.45 < pool.poisoned.mean() < 0.55

    def test_injectivity_enforced(self):
        with pytest.raises(ParameterError):
            HiddenShiftInstance(2, 1, [0, 0, 1, 2], [0, 1, 2, 3], 4, shift=(0,))


# ---------------------------------------------------------------------------
# stages and runs
# ---------------------------------------------------------------------------


def _pool(labels, n):
    labels = np.asarray(labels, dtype=np.int64).reshape(len(labels), -1)
    k = len(labels)
    return StatePool(n, labels, np.zeros(k, dtype=np.int64), np.zeros(k, dtype=bool), np.ones(k, dtype=np.int64))


class TestStage:
    def test_zero_width_passes_about_a_third(self):
        sched = SieveSchedule(3, 1, 2, (0, 2), 30_000, 9, 1.0, 1.0)
        pool = _pool(rng(0).integers(0, 8, size=(30_000, 1)), 3)
        out, st = run_stage(pool, 1, sched, rng(1))
        assert abs(len(out) / 30_000 - 1 / 3) < 0.02
        assert st.bins == 1

    def test_pair_of_states(self):
        sched = SieveSchedule(4, 1, 1, (3,), 2, 1, 1.0, 1.0)
        out, st = run_stage(_pool([[8], [8]], 4), 1, sched, rng(2))
        assert st.combinations <= 1 and len(out) <= 1

    def test_identical_labels(self):
        sched = SieveSchedule(4, 1, 2, (2, 1), 100, 1, 1.0, 1.0)
        out, _ = run_stage(_pool([[5]] * 100, 4), 1, sched, rng(3))
        assert len(out) > 0 and not out.labels.any()

    def test_precondition_violation(self):
        sched = SieveSchedule(4, 1, 2, (2, 1), 100, 1, 1.0, 1.0)
        with pytest.raises(SieveInvariantError):
            run_stage(_pool([[1], [3]], 4), 2, sched, rng(4))

    def test_accepts_state_lists(self):
        sched = make_schedule(4, 1, 1.0)
        states = [PhaseState(PhaseLabel(4, (v,))) for v in rng(5).integers(0, 16, 200)]
        out, _ = run_stage(states, 1, sched, rng(6))
        assert isinstance(out, StatePool)

    def test_high_bits_stay_uniform(self):
        # after stage 1 (low 3 bits zeroed) the remaining 3 bits are uniform
        sched = SieveSchedule(7, 1, 2, (3, 3), 50_000, 4, 1.0, 1.0)
        pool = _pool(rng(7).integers(0, 128, size=(50_000, 1)), 7)
        out, _ = run_stage(pool, 1, sched, rng(8))
        assert not (out.labels & 7).any()
        high = (out.labels[:, 0] >> 3) & 7
        assert stats.chisquare(np.bincount(high, minlength=8)).pvalue > 0.01


class TestRun:
    def test_single_bit_passthrough(self):
        inst = gen_shift_instance(1, 2, 0)
        sched = make_schedule(1, 2, 1.0)
        run = run_sieve(inst, sched, 4, rng(0))
        assert len(run.final) == sched.pool_size and run.success
        assert all(s.skipped for s in run.stages)

    @pytest.mark.parametrize("n,d", [(6, 1), (9, 1), (5, 2), (4, 3)])
    def test_final_labels_are_top_bit_only(self, n, d):
        inst = gen_shift_instance(n, d, n)
        for seed in range(10):
            run = run_sieve(inst, make_schedule(n, d), 4, rng(seed))
            assert not (run.final.labels & ((1 << (n - 1)) - 1)).any()

    def test_starvation_reports_shortfall(self):
        inst = gen_shift_instance(10, 1, 0)
        run = run_sieve(inst, make_schedule(10, 1, 0.01), 4, rng(0))
        assert run.shortfall and not run.success

    def test_schedule_must_fit(self):
        with pytest.raises(ParameterError):
            run_sieve(gen_shift_instance(4, 1, 0), make_schedule(5, 1), 4, rng(0))

    def test_prepares_exactly_pool_size(self):
        inst = gen_shift_instance(8, 1, 0)
        led = QueryLedger()
        sched = make_schedule(8, 1)
        run_sieve(inst, sched, 4, rng(1), led)
        assert led.text_queries == led.pattern_queries == sched.pool_size
        assert led.quantum_cost == 2 * sched.pool_size

    def test_seeded_runs_repeat(self):
        inst = gen_shift_instance(8, 1, 0)
        a = run_sieve(inst, make_schedule(8, 1), 4, rng(9))
        b = run_sieve(inst, make_schedule(8, 1), 4, rng(9))
        np.testing.assert_array_equal(a.final.labels, b.final.labels)
        np.testing.assert_array_equal(a.final.phases, b.final.phases)

    def test_runtime_scales_near_linearly_in_pool(self):
        inst = gen_shift_instance(12, 1, 0)
        small, large = make_schedule(12, 1, 16.0), make_schedule(12, 1, 32.0)

        def timed(schedule, i):
            t = time.perf_counter()
            run_sieve(inst, schedule, 4, rng(i))
            return time.perf_counter() - t

        timed(small, 0)  # warm up
        # interleave the two sizes so load drift hits both equally; keep the fastest of each
        pairs = [(timed(small, i), timed(large, i)) for i in range(9)]
        assert min(b for _, b in pairs) / min(a for a, _ in pairs) <= 2.3


# ---------------------------------------------------------------------------
# measurement and recovery
# ---------------------------------------------------------------------------


class TestMeasure:
    def test_empty_parity(self):
        inst = gen_shift_instance(4, 2, 3)
        st = PhaseState(PhaseLabel(4, (0, 0)), phase=0)
        assert measure_final(st, inst, rng(0)).parity == 0

    @pytest.mark.parametrize("s", [1, 3, 7, 2])
    def test_single_bit_dot(self, s):
        n = 3
        st = PhaseState(PhaseLabel(n, (4,)), phase=(4 * s) % 8)
        sample = measure_final(st, None, rng(0))
        assert sample.beta == (1,) and sample.parity == s % 2

    def test_poisoned_is_fair(self):
        st = PhaseState(PhaseLabel(4, (8,)), poisoned=True)
        g = rng(1)
        ones = sum(measure_final(st, None, g).parity for _ in range(10_000))
        assert abs(ones - 5000) <= 3 * 50

    def test_non_final_rejected(self):
        with pytest.raises(ParameterError):
            measure_final(PhaseState(PhaseLabel(4, (2,))), None, rng(0))

    def test_general_phase_uses_born_rule(self):
        # phase 2^(n-2): probability of parity 1 is sin^2(pi/4) = 1/2
        pool = _pool([[8]] * 20_000, 4)
        pool.phases[:] = 4
        _, par = measure_pool(pool, rng(2))
        assert abs(par.mean() - 0.5) < 0.02


class TestRecover:
    def test_low_bits_d1(self):
        for seed in range(10):
            inst = gen_shift_instance(6, 1, seed)
            assert recover_low_bits(inst, make_schedule(6, 1), rng(seed)) == [inst.unseal().components[0] & 1]

    def test_low_bits_d2(self):
        for seed in range(10):
            inst = gen_shift_instance(5, 2, seed)
            want = [c & 1 for c in inst.unseal().components]
            assert recover_low_bits(inst, make_schedule(5, 2), rng(seed)) == want

    def test_zero_shift(self):
        inst = gen_shift_instance(6, 2, 0, shift=(0, 0))
        assert recover_shift(inst, None, rng(0)).components == (0, 0)

    def test_halving_identity(self):
        inst = gen_shift_instance(5, 2, 4)
        s = inst.unseal().components
        beta = [c & 1 for c in s]
        half = inst.halve(beta)
        assert half.noise_fraction == 0.0
        assert half.unseal().components == tuple(c >> 1 for c in s)
        wrong = inst.halve([1 - b for b in beta])
        assert wrong.noise_fraction == 1.0

    def test_random_offset_mode(self):
        for seed in range(5):
            inst = gen_shift_instance(6, 1, seed)
            assert recover_shift(inst, None, rng(seed), random_offset=True) == inst.unseal()

    def test_exact_mode_instances(self):
        for seed in range(5):
            sealed = gen_shift_instance(6, 2, seed)
            plain = HiddenShiftInstance(6, 2, sealed.f, sealed.g, sealed.q, mode="exact")
            assert recover_shift(plain, None, rng(seed)) == sealed.unseal()

    @pytest.mark.parametrize("d", [1, 2])
    def test_n4_planted_majority(self, d):
        hits = 0
        for seed in range(200):
            inst = gen_shift_instance(4, d, seed)
            got = recover_shift_majority(inst, None, rng(seed))
            hits += got == inst.unseal()
            assert brute_force_shift(inst) == inst.unseal()
        assert hits >= 190

    def test_failure_carries_round(self):
        inst = gen_shift_instance(8, 1, 0)
        with pytest.raises(RecoveryError) as err:
            recover_shift(inst, 1e-4, rng(0), retry_cap=1)
        assert err.value.round_index == 0

    def test_clean_phase_tracking_through_sieve(self):
        inst = gen_shift_instance(7, 2, 5)
        s = np.array(inst.unseal().components)
        run = run_sieve(inst, make_schedule(7, 2), 4, rng(3))
        expect = (run.final.labels * s).sum(axis=1) % 128
        np.testing.assert_array_equal(run.final.phases, expect)
