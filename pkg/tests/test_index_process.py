"""Jump-time sampling, index transitions, and process bookkeeping.

The closed-form waiting-time inverses are checked against an independent
oracle that integrates the switching rate numerically and inverts the
cumulative by bisection.
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import kstest

from subeki.index_process import (
    ConstantRate,
    ExponentialRate,
    IndexProcessState,
    JumpEvent,
    PiecewiseRate,
    ReciprocalRate,
    advance,
    load_jump_log,
    next_index,
    sample_waiting_time,
    save_jump_log,
    start_process,
)


def _oracle_wait(schedule, t0: float, s: float) -> float:
    """Invert int_0^w 1/eta(u + t0) du = s by quadrature plus bisection."""
    def cum(w):
        val, _ = quad(lambda u: 1.0 / schedule.value(u + t0), 0.0, w,
                      limit=200, epsabs=1e-14, epsrel=1e-13)
        return val - s
    hi = 1.0
    while cum(hi) < 0.0:
        hi *= 2.0
    return brentq(cum, 0.0, hi, xtol=1e-13, rtol=8.9e-16)


class TestSchedules:
    def test_parameters_validated(self):
        for bad in (0.0, -1.0):
            with pytest.raises(ValueError):
                ConstantRate(bad)
            with pytest.raises(ValueError):
                ExponentialRate(bad, 1.0)
            with pytest.raises(ValueError):
                ReciprocalRate(1.0, bad)
            with pytest.raises(ValueError):
                PiecewiseRate(ConstantRate(1.0), t_switch=1.0, step=bad)

    def test_values(self):
        assert ConstantRate(0.5).value(3.0) == 0.5
        assert ExponentialRate(0.01, 10.0).value(0.0) == pytest.approx(0.01)
        assert ReciprocalRate(100.0, 100.0).value(0.0) == pytest.approx(0.01)
        pw = PiecewiseRate(ReciprocalRate(100.0, 100.0), t_switch=10.0, step=2.0)
        assert pw.value(5.0) == pytest.approx(1.0 / 600.0)
        assert pw.value(10.0) == 2.0

    def test_exponential_inverse_vs_quadrature_oracle(self):
        rng = np.random.default_rng(0)
        sched = ExponentialRate(a=0.01, b=10.0)
        for _ in range(100):
            t0 = float(rng.uniform(0.0, 0.8))
            s = float(rng.standard_exponential())
            got = sched.invert_wait(t0, s)
            want = _oracle_wait(sched, t0, s)
            assert abs(got - want) <= 1e-8

    def test_reciprocal_inverse_vs_quadrature_oracle(self):
        rng = np.random.default_rng(1)
        sched = ReciprocalRate(a=100.0, b=100.0)
        for _ in range(100):
            t0 = float(rng.uniform(0.0, 5.0))
            s = float(rng.standard_exponential())
            got = sched.invert_wait(t0, s)
            want = _oracle_wait(sched, t0, s)
            assert abs(got - want) <= 1e-8

    def test_piecewise_crossing_rule(self):
        pw = PiecewiseRate(ConstantRate(100.0), t_switch=10.0, step=0.5)
        # a wait that would cross t_switch is replaced by t_switch + step
        s_large = 1.0  # constant inverse: wait = 100 * 1 = 100 >> 10
        assert pw.invert_wait(0.0, s_large) == pytest.approx(10.5)
        # past the switch the step is deterministic
        assert pw.invert_wait(12.0, 0.3) == 0.5
        # short waits before the switch follow the decaying schedule
        assert pw.invert_wait(0.0, 0.001) == pytest.approx(0.1)

    def test_piecewise_consumes_no_randomness_after_switch(self):
        pw = PiecewiseRate(ConstantRate(1.0), t_switch=1.0, step=0.25)
        rng = np.random.default_rng(2)
        before = rng.bit_generator.state["state"]["state"]
        assert sample_waiting_time(pw, 5.0, rng) == 0.25
        assert rng.bit_generator.state["state"]["state"] == before


class TestWaitingTimeLaw:
    def test_constant_rate_is_exponential(self):
        rng = np.random.default_rng(3)
        c = 0.5
        draws = np.array([sample_waiting_time(ConstantRate(c), 0.0, rng)
                          for _ in range(10_000)])
        assert 0.47 <= draws.mean() <= 0.53
        stat = kstest(draws, "expon", args=(0.0, c)).statistic
        assert stat < 0.02

    def test_waits_are_positive(self):
        rng = np.random.default_rng(4)
        for sched in (ConstantRate(0.1), ExponentialRate(0.01, 10.0),
                      ReciprocalRate(100.0, 100.0)):
            for t0 in (0.0, 0.5, 3.0):
                assert sample_waiting_time(sched, t0, rng) > 0.0


class TestNextIndex:
    def test_forced_flip_with_two_blocks(self):
        rng = np.random.default_rng(5)
        for current in (0, 1):
            for _ in range(20):
                assert next_index(current, 2, rng) == 1 - current

    def test_never_self(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            assert next_index(3, 6, rng) != 3

    def test_uniform_over_others(self):
        rng = np.random.default_rng(7)
        n = 100_000
        draws = np.array([next_index(2, 6, rng) for _ in range(n)])
        counts = np.bincount(draws, minlength=6)
        assert counts[2] == 0
        freq = counts / n
        others = np.delete(freq, 2)
        assert np.abs(others - 0.2).max() <= 0.01
        # chi-square against the uniform law over the 5 admissible targets
        expected = n / 5.0
        chi2 = float(((np.delete(counts, 2) - expected) ** 2 / expected).sum())
        from scipy.stats import chi2 as chi2_dist
        assert chi2_dist.sf(chi2, df=4) > 0.01

    def test_rejects_single_block(self):
        with pytest.raises(ValueError):
            next_index(0, 1, np.random.default_rng(8))


class TestStartProcess:
    def test_initial_index_uniform(self):
        n = 100_000
        rng = np.random.default_rng(9)
        states = [start_process(ConstantRate(1.0), 6, "single", rng)
                  for _ in range(n)]
        counts = np.bincount([int(s.current[0]) for s in states], minlength=6)
        assert np.abs(counts / n - 1.0 / 6.0).max() <= 0.01

    def test_batch_needs_coordinate_count(self):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError):
            start_process(ConstantRate(1.0), 4, "batch", rng)
        st = start_process(ConstantRate(1.0), 4, "batch", rng, n_coords=5)
        assert st.current.shape == (5,)
        assert st.next_jump.shape == (5,)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            start_process(ConstantRate(1.0), 4, "both", np.random.default_rng(0))

    def test_indices_for_broadcasts(self):
        rng = np.random.default_rng(11)
        single = start_process(ConstantRate(1.0), 4, "single", rng)
        assert np.all(single.indices_for(5) == single.current[0])
        batch = start_process(ConstantRate(1.0), 4, "batch", rng, n_coords=5)
        assert np.array_equal(batch.indices_for(5), batch.current)
        with pytest.raises(ValueError):
            batch.indices_for(7)


class TestAdvance:
    def test_no_jump_before_next(self):
        rng = np.random.default_rng(12)
        st = start_process(ConstantRate(10.0), 4, "single", rng)
        before = int(st.current[0])
        _, events = advance(st, st.next_jump[0] * 0.5)
        assert events == []
        assert int(st.current[0]) == before

    def test_backwards_rejected(self):
        rng = np.random.default_rng(13)
        st = start_process(ConstantRate(1.0), 4, "single", rng)
        advance(st, 1.0)
        with pytest.raises(ValueError):
            advance(st, 0.5)

    def test_mean_jump_count_constant_rate(self):
        rng = np.random.default_rng(14)
        counts = []
        for _ in range(50):
            st = start_process(ConstantRate(0.01), 6, "single", rng)
            _, events = advance(st, 1.0)
            counts.append(len(events))
        assert 80 <= np.mean(counts) <= 120

    def test_events_sorted_and_never_self(self):
        rng = np.random.default_rng(15)
        st = start_process(ConstantRate(0.05), 5, "single", rng)
        path = [int(st.current[0])]
        _, events = advance(st, 3.0)
        times = [ev.time for ev in events]
        assert times == sorted(times)
        for ev in events:
            assert ev.new_index != path[-1]
            path.append(ev.new_index)

    def test_batch_coordinates_have_distinct_jump_times(self):
        rng = np.random.default_rng(16)
        for _ in range(100):
            st = start_process(ConstantRate(0.2), 4, "batch", rng, n_coords=5)
            _, events = advance(st, 1.0)
            by_coord = {}
            for ev in events:
                by_coord.setdefault(ev.coordinate, set()).add(ev.time)
            coords = list(by_coord)
            for i in range(len(coords)):
                for j in range(i + 1, len(coords)):
                    assert not (by_coord[coords[i]] & by_coord[coords[j]])

    def test_batch_no_self_jump_per_coordinate(self):
        rng = np.random.default_rng(17)
        st = start_process(ConstantRate(0.05), 4, "batch", rng, n_coords=3)
        last = {k: int(st.current[k]) for k in range(3)}
        _, events = advance(st, 2.0)
        for ev in events:
            assert ev.new_index != last[ev.coordinate]
            last[ev.coordinate] = ev.new_index

    def test_long_run_occupancy(self):
        rng = np.random.default_rng(18)
        eta = 0.05
        st = start_process(ConstantRate(eta), 4, "single", rng)
        horizon = 1000.0 * eta
        t_prev = 0.0
        idx_prev = int(st.current[0])
        occupancy = np.zeros(4)
        _, events = advance(st, horizon)
        for ev in events:
            occupancy[idx_prev] += ev.time - t_prev
            t_prev, idx_prev = ev.time, ev.new_index
        occupancy[idx_prev] += horizon - t_prev
        assert np.abs(occupancy / horizon - 0.25).max() <= 0.02

    def test_reproducible_bit_for_bit(self):
        logs = []
        for _ in range(2):
            rng = np.random.default_rng(19)
            st = start_process(ExponentialRate(0.01, 10.0), 6, "batch", rng,
                               n_coords=4)
            _, events = advance(st, 0.9)
            logs.append(events)
        assert logs[0] == logs[1]


class TestJumpLog:
    def test_round_trip(self, tmp_path):
        events = [JumpEvent(0.125, 0, 3), JumpEvent(0.75, 2, 1)]
        path = tmp_path / "jumps.csv"
        save_jump_log(path, events)
        assert load_jump_log(path) == events

    def test_header_checked(self, tmp_path):
        path = tmp_path / "jumps.csv"
        path.write_text("when,who,where\n0.1,0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_jump_log(path)


class TestStateInvariants:
    def test_next_jump_after_now(self):
        rng = np.random.default_rng(20)
        st = start_process(ConstantRate(0.3), 5, "batch", rng, n_coords=4)
        for target in (0.5, 1.7, 4.0):
            advance(st, target)
            assert st.t_now == target
            assert np.all(st.next_jump > st.t_now)
            assert np.all((0 <= st.current) & (st.current < 5))

    def test_manual_state_freezes_indices(self):
        # a state whose clocks never ring keeps its indices forever
        rng = np.random.default_rng(21)
        st = IndexProcessState("batch", 4, ConstantRate(1.0),
                               np.array([1, 3, 0], dtype=np.intp),
                               np.full(3, np.inf), 0.0, rng)
        _, events = advance(st, 100.0)
        assert events == []
        assert np.array_equal(st.current, [1, 3, 0])
