"""Per-wavelength transmit timeline: busy intervals, derived voids, window classification.

A timeline holds the committed transmission intervals of one wavelength in
integer nanoseconds. Voids are the idle gaps between busy intervals, derived
on demand as the complement of busy time within [now, latest_finish). Gaps
that fall entirely into the past are recycled into a census record so the
live structure stays small over long runs.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .config import us_str


class ScheduleError(RuntimeError):
    """A commit overlapped existing busy time or targeted the past.

    This is always a scheduler bug, never a recoverable condition; runs abort.
    """


@dataclass(frozen=True)
class Void:
    """A maximal idle interval [start, end) on one wavelength."""

    start: int
    end: int

    @property
    def size(self) -> int:
        return self.end - self.start

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"void with non-positive size: [{self.start}, {self.end})")


@dataclass
class VoidClassification:
    """Usable voids of one wavelength split against a scheduling window.

    `straddle_start` opens before the window, `straddle_end` closes after it,
    `spanning` does both, and `interior` voids lie fully inside. At most one
    void can straddle either boundary, and a spanning void excludes all other
    classes.
    """

    straddle_start: Void | None = None
    interior: list[Void] = field(default_factory=list)
    straddle_end: Void | None = None
    spanning: Void | None = None


class WavelengthTimeline:
    """Sorted, non-overlapping busy intervals plus void bookkeeping for one wavelength."""

    def __init__(self, wavelength_id: int = 0, keep_history: bool = False):
        self.wavelength_id = wavelength_id
        self.now = 0
        self.busy: list[tuple[int, int]] = []
        self.busy_committed_ns = 0
        # Census of already-closed idle gaps, in chronological order.
        self.closed_voids: list[tuple[int, int]] = []
        self._past_end = 0  # end of the last busy interval recycled by advance()
        self.keep_history = keep_history
        self.history: list[tuple[int, int]] = []

    # -- queries ------------------------------------------------------------

    @property
    def latest_finish(self) -> int:
        """End of the last committed interval, or the current time when idle."""
        return self.busy[-1][1] if self.busy else self.now

    def voids(self) -> list[Void]:
        """Idle gaps within [now, latest_finish), clipped at the current time."""
        out = []
        cursor = self.now
        for s, e in self.busy:
            if s > cursor:
                out.append(Void(cursor, s))
            if e > cursor:
                cursor = e
        return out

    def find_slot(self, earliest: int, duration: int) -> int:
        """Earliest start >= earliest where `duration` fits without overlap."""
        start = max(earliest, self.now)
        i = bisect.bisect_left(self.busy, (start, start)) if self.busy else 0
        if i > 0 and self.busy[i - 1][1] > start:
            start = self.busy[i - 1][1]
        while i < len(self.busy):
            s, e = self.busy[i]
            if s - start >= duration:
                return start
            start = max(start, e)
            i += 1
        return start

    def total_busy_ns(self) -> int:
        return self.busy_committed_ns

    # -- mutation -----------------------------------------------------------

    def commit(self, start: int, end: int) -> None:
        """Mark [start, end) busy, merging with abutting neighbours.

        Overlap with existing busy time or a start before `now` raises
        ScheduleError.
        """
        if end <= start:
            raise ScheduleError(f"w={self.wavelength_id}: empty commit [{start}, {end})")
        if start < self.now:
            raise ScheduleError(
                f"w={self.wavelength_id}: commit [{start}, {end}) starts before t={self.now}")
        i = bisect.bisect_left(self.busy, (start, start))
        if i > 0 and self.busy[i - 1][1] > start:
            raise ScheduleError(
                f"w={self.wavelength_id}: [{start}, {end}) overlaps {self.busy[i - 1]}")
        if i < len(self.busy) and self.busy[i][0] < end:
            raise ScheduleError(
                f"w={self.wavelength_id}: [{start}, {end}) overlaps {self.busy[i]}")
        self.busy_committed_ns += end - start
        if self.keep_history:
            self.history.append((start, end))
        # Merge with neighbours that exactly abut.
        lo, hi = start, end
        j = i
        if i > 0 and self.busy[i - 1][1] == start:
            lo = self.busy[i - 1][0]
            i -= 1
        if j < len(self.busy) and self.busy[j][0] == end:
            hi = self.busy[j][1]
            j += 1
        self.busy[i:j] = [(lo, hi)]

    def advance(self, now: int) -> None:
        """Move the clock forward, recycling busy intervals and voids now in the past."""
        if now < self.now:
            raise ScheduleError(f"w={self.wavelength_id}: clock moved backwards")
        self.now = now
        while self.busy and self.busy[0][1] <= now:
            s, e = self.busy.pop(0)
            if s > self._past_end:
                self.closed_voids.append((self._past_end, s))
            self._past_end = e

    # -- census -------------------------------------------------------------

    def off_intervals(self, horizon: int) -> list[tuple[int, int]]:
        """All idle gaps over [0, horizon), closed and live, clipped at the horizon."""
        out = [(s, min(e, horizon)) for s, e in self.closed_voids if s < horizon]
        cursor = self._past_end
        for s, e in self.busy:
            if s > cursor and cursor < horizon:
                out.append((cursor, min(s, horizon)))
            cursor = max(cursor, e)
        if cursor < horizon:
            out.append((cursor, horizon))
        return out

    def off_intervals_from_history(self, horizon: int) -> list[tuple[int, int]]:
        """Independent census recomputed from the raw commit history (keep_history runs)."""
        if not self.keep_history:
            raise ValueError("timeline was not recording history")
        merged: list[list[int]] = []
        for s, e in sorted(self.history):
            if merged and merged[-1][1] == s:
                merged[-1][1] = e
            else:
                merged.append([s, e])
        out = []
        cursor = 0
        for s, e in merged:
            if s > cursor and cursor < horizon:
                out.append((cursor, min(s, horizon)))
            cursor = max(cursor, e)
        if cursor < horizon:
            out.append((cursor, horizon))
        return out

    def dump(self) -> str:
        """One-line debug rendering of the live window (times in us)."""
        busy = " ".join(f"[{us_str(s)},{us_str(e)})" for s, e in self.busy)
        voids = " ".join(f"[{us_str(v.start)},{us_str(v.end)})" for v in self.voids())
        return (f"w={self.wavelength_id} busy={busy or '-'} voids={voids or '-'} "
                f"tlf={us_str(self.latest_finish)}")

    def census_dump(self, horizon: int) -> str:
        """Full-run rendering of all idle gaps; equal strings mean equal timelines."""
        offs = " ".join(f"[{us_str(s)},{us_str(e)})" for s, e in self.off_intervals(horizon))
        return f"w={self.wavelength_id} off={offs or '-'} busy_ns={self.busy_committed_ns}"


def commit_interval(timeline: WavelengthTimeline, start: int, end: int) -> WavelengthTimeline:
    """Functional-style wrapper over WavelengthTimeline.commit."""
    timeline.commit(start, end)
    return timeline


def latest_finish(timeline: WavelengthTimeline) -> int:
    return timeline.latest_finish


def classify_voids(timeline: WavelengthTimeline, earliest: int, deadline: int) -> VoidClassification:
    """Partition usable voids against the window [earliest, deadline].

    A void is usable when it overlaps the open window (ends after `earliest`
    and starts before `deadline`); every usable void lands in exactly one
    class.
    """
    if earliest >= deadline:
        raise ValueError(f"window is empty: earliest={earliest} deadline={deadline}")
    cls = VoidClassification()
    for v in timeline.voids():
        if v.end <= earliest or v.start >= deadline:
            continue
        opens_before = v.start < earliest
        closes_after = v.end > deadline
        if opens_before and closes_after:
            cls.spanning = v
        elif opens_before:
            cls.straddle_start = v
        elif closes_after:
            cls.straddle_end = v
        else:
            cls.interior.append(v)
    return cls
