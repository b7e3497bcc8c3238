"""Daylight signal schedules.

The environment's only exogenous variable is a binary daylight signal:
1 during daytime, 0 at night.  The default schedule alternates 20 steps of
daytime with 20 steps of night (cycle length 40).  Experimental protocols
derive variants from a base schedule: clamping to a constant value from a
given step, extending a single daytime or night phase, reversing day and
night, or inverting the signal for exactly one step.

All schedules are immutable and random-access: ``signal_at(t)`` is a pure
function of the schedule and the 1-indexed global step ``t``, so analysis
code can query arbitrary steps without replaying a generator.  Phase
extensions are piecewise definitions over global time; every cycle after an
extended phase keeps the base periodicity but is permanently delayed by the
extension (subsequent days do not re-align to the original clock).
"""

from __future__ import annotations

from dataclasses import dataclass, field


SHIFT_KINDS = ("extend_daytime", "extend_night", "reverse")


@dataclass(frozen=True)
class DaylightSchedule:
    """A composable rule mapping global step -> binary daylight value.

    ``kind`` is one of ``periodic``, ``clamped``, ``phase_shifted``,
    ``pulse_inverted``.  Wrapper kinds hold their base schedule in ``base``;
    arbitrary nesting yields composite schedules.
    """

    kind: str
    day_len: int = 20
    night_len: int = 20
    base: "DaylightSchedule | None" = field(default=None, repr=False)
    clamp_start: int | None = None
    clamp_value: int | None = None
    shift_day_index: int | None = None
    shift_kind: str | None = None
    shift_extra: int = 0
    pulse_step: int | None = None

    @property
    def cycle_len(self) -> int:
        """Nominal cycle length of the underlying periodic signal."""
        if self.kind == "periodic":
            return self.day_len + self.night_len
        return self.base.cycle_len

    def signal_at(self, t: int) -> int:
        return signal_at(self, t)

    def day_windows(self, n_days: int) -> list[tuple[int, int, int]]:
        return day_windows(self, n_days)

    def describe(self) -> str:
        """Structured one-line text form, embedded in configs and trace headers."""
        if self.kind == "periodic":
            return f"periodic(day={self.day_len},night={self.night_len})"
        if self.kind == "clamped":
            return (f"clamped({self.base.describe()},"
                    f"start={self.clamp_start},value={self.clamp_value})")
        if self.kind == "phase_shifted":
            return (f"phase_shifted({self.base.describe()},day={self.shift_day_index},"
                    f"kind={self.shift_kind},extra={self.shift_extra})")
        if self.kind == "pulse_inverted":
            return f"pulse_inverted({self.base.describe()},step={self.pulse_step})"
        raise ValueError(f"unknown schedule kind {self.kind!r}")


def make_periodic(day_len: int = 20, night_len: int = 20) -> DaylightSchedule:
    """Alternating schedule: 1 for the first ``day_len`` steps of every cycle,
    0 for the following ``night_len`` steps."""
    if day_len < 1 or night_len < 1:
        raise ValueError("day_len and night_len must both be >= 1")
    return DaylightSchedule(kind="periodic", day_len=day_len, night_len=night_len)


def make_clamped(base: DaylightSchedule, clamp_start: int, value: int) -> DaylightSchedule:
    """Equal to ``base`` for t < clamp_start, constant ``value`` afterwards."""
    if clamp_start < 1:
        raise ValueError("clamp_start must be >= 1")
    if value not in (0, 1):
        raise ValueError("clamp value must be 0 or 1")
    return DaylightSchedule(kind="clamped", day_len=base.day_len,
                            night_len=base.night_len, base=base,
                            clamp_start=clamp_start, clamp_value=value)


def make_phase_shift(base: DaylightSchedule, day_index: int, kind: str,
                     extra: int = 0) -> DaylightSchedule:
    """Lengthen one phase of a single day, or swap day/night from a given day.

    ``extend_daytime`` / ``extend_night`` insert ``extra`` steps of the
    respective phase into day ``day_index``; every later step is the base
    signal delayed by ``extra``.  ``reverse`` returns ``1 - base(t)`` from the
    first step of day ``day_index`` onward (``extra`` is ignored).
    """
    if day_index < 1:
        raise ValueError("day_index must be >= 1")
    if kind not in SHIFT_KINDS:
        raise ValueError(f"shift kind must be one of {SHIFT_KINDS}")
    if extra < 0:
        raise ValueError("extra must be >= 0")
    return DaylightSchedule(kind="phase_shifted", day_len=base.day_len,
                            night_len=base.night_len, base=base,
                            shift_day_index=day_index, shift_kind=kind,
                            shift_extra=extra)


def make_pulse_inverted(base: DaylightSchedule, pulse_step: int) -> DaylightSchedule:
    """Invert the base signal at exactly one global step."""
    if pulse_step < 1:
        raise ValueError("pulse_step must be >= 1")
    return DaylightSchedule(kind="pulse_inverted", day_len=base.day_len,
                            night_len=base.night_len, base=base,
                            pulse_step=pulse_step)


def signal_at(schedule: DaylightSchedule, t: int) -> int:
    """Daylight value at global step t (1-indexed). Pure and deterministic."""
    if t < 1:
        raise ValueError("global steps are 1-indexed; t must be >= 1")
    kind = schedule.kind
    if kind == "periodic":
        day_rel = (t - 1) % (schedule.day_len + schedule.night_len) + 1
        return 1 if day_rel <= schedule.day_len else 0
    if kind == "clamped":
        if t >= schedule.clamp_start:
            return schedule.clamp_value
        return signal_at(schedule.base, t)
    if kind == "pulse_inverted":
        value = signal_at(schedule.base, t)
        return 1 - value if t == schedule.pulse_step else value
    if kind == "phase_shifted":
        base = schedule.base
        cycle = base.cycle_len
        if schedule.shift_kind == "reverse":
            reverse_from = (schedule.shift_day_index - 1) * cycle + 1
            value = signal_at(base, t)
            return 1 - value if t >= reverse_from else value
        extra = schedule.shift_extra
        if schedule.shift_kind == "extend_daytime":
            # extension opens where day `shift_day_index`'s daytime would end
            ext_start = (schedule.shift_day_index - 1) * cycle + base.day_len + 1
            ext_value = 1
        else:  # extend_night: extension opens where that day's night would end
            ext_start = schedule.shift_day_index * cycle + 1
            ext_value = 0
        if t < ext_start:
            return signal_at(base, t)
        if t < ext_start + extra:
            return ext_value
        return signal_at(base, t - extra)
    raise ValueError(f"unknown schedule kind {kind!r}")


def day_rel_step(schedule: DaylightSchedule, t: int) -> tuple[int, int]:
    """(day_index, step within that day) for global step t, both 1-indexed.

    Day boundaries follow the schedule's nominal cycle structure: extensions
    stretch the affected day and delay all later days; clamping, reversal and
    pulses leave the day grid of their base schedule untouched.
    """
    day = 1
    for start, day_len, night_len in _iter_windows(schedule):
        length = day_len + night_len
        if t < start + length:
            return day, t - start + 1
        day += 1
    raise AssertionError("unreachable")


def day_windows(schedule: DaylightSchedule, n_days: int) -> list[tuple[int, int, int]]:
    """First ``n_days`` day windows as (start_step, day_len, night_len)."""
    out = []
    for window in _iter_windows(schedule):
        out.append(window)
        if len(out) == n_days:
            return out
    raise AssertionError("unreachable")


def _iter_windows(schedule: DaylightSchedule):
    if schedule.kind == "periodic":
        cycle = schedule.day_len + schedule.night_len
        start = 1
        while True:
            yield start, schedule.day_len, schedule.night_len
            start += cycle
    elif schedule.kind == "phase_shifted" and schedule.shift_kind != "reverse":
        day = 1
        shift = 0
        for start, day_len, night_len in _iter_windows(schedule.base):
            if day == schedule.shift_day_index:
                if schedule.shift_kind == "extend_daytime":
                    day_len += schedule.shift_extra
                else:
                    night_len += schedule.shift_extra
                yield start + shift, day_len, night_len
                shift = schedule.shift_extra
            else:
                yield start + shift, day_len, night_len
            day += 1
    else:
        # clamp / pulse / reverse keep the base day grid
        yield from _iter_windows(schedule.base)
