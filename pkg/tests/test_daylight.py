import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circaforage.daylight import (day_rel_step, day_windows, make_clamped,
                                  make_periodic, make_phase_shift,
                                  make_pulse_inverted, signal_at)


def signal_series(schedule, horizon):
    return [signal_at(schedule, t) for t in range(1, horizon + 1)]


class TestPeriodic:
    def test_first_day_steps(self):
        s = make_periodic(20, 20)
        assert signal_at(s, 1) == 1
        assert signal_at(s, 20) == 1
        assert signal_at(s, 21) == 0
        assert signal_at(s, 40) == 0
        assert signal_at(s, 41) == 1

    def test_custom_cycle_length(self):
        s = make_periodic(23, 23)
        assert s.cycle_len == 46
        assert signal_at(s, 23) == 1
        assert signal_at(s, 24) == 0
        assert signal_at(s, 47) == 1

    def test_rejects_degenerate_lengths(self):
        with pytest.raises(ValueError):
            make_periodic(0, 20)
        with pytest.raises(ValueError):
            make_periodic(20, -1)

    @given(day=st.integers(1, 30), night=st.integers(1, 30),
           t=st.integers(1, 500))
    @settings(max_examples=200)
    def test_periodicity(self, day, night, t):
        s = make_periodic(day, night)
        assert signal_at(s, t) == signal_at(s, t + day + night)

    def test_purity(self):
        s = make_periodic(20, 20)
        assert [signal_at(s, 7)] * 5 == [signal_at(s, 7) for _ in range(5)]


class TestClamped:
    def test_constant_after_clamp(self):
        s = make_clamped(make_periodic(20, 20), 161, 1)
        assert signal_at(s, 160) == 0  # base value just before the clamp
        assert all(signal_at(s, t) == 1 for t in range(161, 400, 13))

    def test_equals_base_before_clamp(self):
        base = make_periodic(20, 20)
        s = make_clamped(base, 161, 0)
        assert signal_series(s, 160) == signal_series(base, 160)

    def test_degenerate_full_clamp(self):
        s = make_clamped(make_periodic(20, 20), 1, 0)
        assert signal_series(s, 80) == [0] * 80

    def test_rejects_bad_value(self):
        with pytest.raises(ValueError):
            make_clamped(make_periodic(20, 20), 10, 2)


class TestPhaseShift:
    def test_extend_daytime_day2(self):
        base = make_periodic(20, 20)
        s = make_phase_shift(base, 2, "extend_daytime", 10)
        # day 2 daytime lasts 30 steps (41..70), night 71..90, day 3 at 91
        assert signal_series(s, 40) == signal_series(base, 40)
        assert all(signal_at(s, t) == 1 for t in range(41, 71))
        assert all(signal_at(s, t) == 0 for t in range(71, 91))
        assert signal_at(s, 91) == 1
        # permanently delayed afterwards
        assert [signal_at(s, t + 10) for t in range(91, 400)] == \
            [signal_at(base, t) for t in range(91, 400)]

    def test_extend_night_day2(self):
        base = make_periodic(20, 20)
        s = make_phase_shift(base, 2, "extend_night", 10)
        assert all(signal_at(s, t) == 0 for t in range(61, 91))
        assert signal_at(s, 91) == 1

    def test_zero_extension_is_identity(self):
        base = make_periodic(20, 20)
        s = make_phase_shift(base, 2, "extend_night", 0)
        assert signal_series(s, 200) == signal_series(base, 200)

    def test_reverse_from_day1(self):
        base = make_periodic(20, 20)
        s = make_phase_shift(base, 1, "reverse")
        assert all(signal_at(s, t) == 1 - signal_at(base, t)
                   for t in range(1, 200))

    def test_reverse_from_day2_keeps_day1(self):
        base = make_periodic(20, 20)
        s = make_phase_shift(base, 2, "reverse")
        assert signal_series(s, 40) == signal_series(base, 40)
        assert signal_at(s, 41) == 0

    def test_rejects_day_zero(self):
        with pytest.raises(ValueError):
            make_phase_shift(make_periodic(20, 20), 0, "reverse")

    def test_day_windows_shift(self):
        s = make_phase_shift(make_periodic(20, 20), 2, "extend_daytime", 10)
        assert day_windows(s, 4) == [(1, 20, 20), (41, 30, 20),
                                     (91, 20, 20), (131, 20, 20)]
        assert day_rel_step(s, 70) == (2, 30)
        assert day_rel_step(s, 91) == (3, 1)


class TestPulse:
    def test_single_step_inversion(self):
        base = make_clamped(make_periodic(20, 20), 161, 0)
        s = make_pulse_inverted(base, 175)
        assert signal_at(s, 174) == 0
        assert signal_at(s, 175) == 1
        assert signal_at(s, 176) == 0

    @given(pulse=st.integers(1, 300))
    @settings(max_examples=50)
    def test_pulse_locality(self, pulse):
        base = make_periodic(20, 20)
        s = make_pulse_inverted(base, pulse)
        diffs = sum(abs(signal_at(s, t) - signal_at(base, t))
                    for t in range(1, 301))
        assert diffs == 1


def test_describe_round_trips_composition():
    s = make_pulse_inverted(make_clamped(make_periodic(20, 20), 161, 0), 175)
    text = s.describe()
    assert "pulse_inverted" in text and "clamped" in text and "periodic" in text
    assert "start=161" in text and "step=175" in text
