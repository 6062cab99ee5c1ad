"""Upstream grant scheduling: GATE timing, burst placement, receiver timelines.

The exact upstream protocol is pluggable. Two strategies ship:

``novm-like``
    Prefers bursts that exactly fill an existing receiver void; otherwise
    appends at the frontier of the least-loaded receiver wavelength when that
    is already reachable, and defers the burst toward a fraction of the delay
    budget when the receiver would otherwise sit idle. Deferral spaces the
    polling cycles out, which is what lets GATE transmissions coalesce instead
    of peppering the transmit timelines.

``roundrobin-firstfit``
    Baseline: next wavelength round-robin, earliest feasible slot.

GATEs ride the downstream transmitters, so their placement matters for
transmitter energy: the strategies anchor each GATE against already-committed
busy time on the ONU's listening wavelength whenever the timing budget allows,
falling back to the just-in-time instant.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import GATE_NS, GATE_PROC_NS, GUARD_NS, REPORT_NS
from .timeline import WavelengthTimeline


@dataclass
class UpstreamGrant:
    """Result of one REPORT: GATE instant, transmit wavelength, burst window."""

    onu: int
    t_gate: int
    w_tx: int
    us_interval: tuple[int, int]


def reserve_gate_transmission(timeline: WavelengthTimeline, t_gate: int,
                              gate_duration: int = GATE_NS) -> int:
    """Commit a GATE at `t_gate`, sliding to the earliest adjacent idle instant on collision.

    Returns the actual transmission start. Splitting a void in two is
    accepted; overlapping committed traffic is not.
    """
    actual = timeline.find_slot(t_gate, gate_duration)
    timeline.commit(actual, actual + gate_duration)
    return actual


def _anchored_gate_time(timeline: WavelengthTimeline, lo: int, hi: int,
                        gate_duration: int = GATE_NS) -> int:
    """Latest GATE start in [lo, hi] that abuts committed busy time, else hi.

    Abutting an interval edge never creates a new void; a free-standing GATE
    does, so anchoring is preferred whenever the window contains any busy
    edge.
    """
    import bisect
    best = None
    busy = timeline.busy
    i = max(0, bisect.bisect_left(busy, (lo, lo)) - 1)
    while i < len(busy):
        s, e = busy[i]
        if s - gate_duration > hi and e > hi:
            break
        cand = s - gate_duration  # ends exactly where busy begins
        if lo <= cand <= hi and timeline.find_slot(cand, gate_duration) == cand:
            if best is None or cand > best:
                best = cand
        if lo <= e <= hi and timeline.find_slot(e, gate_duration) == e:
            if best is None or e > best:
                best = e  # starts exactly where busy ends
        i += 1
    return best if best is not None else hi


class NovmLike:
    """Void-averse upstream strategy with deferred polling."""

    key = "novm-like"

    def __init__(self, poll_slack_ns: int):
        self.poll_slack_ns = poll_slack_ns

    def place(self, onu, duration: int, now: int,
              rx_timelines: list[WavelengthTimeline], earliest_fn) -> tuple[int, int]:
        total = duration + GUARD_NS
        for tl in rx_timelines:
            for v in tl.voids():
                if v.size == total and v.start >= earliest_fn(tl.wavelength_id):
                    return tl.wavelength_id, v.start
        tl = min(rx_timelines, key=lambda t: (t.total_busy_ns(), t.wavelength_id))
        ef = earliest_fn(tl.wavelength_id)
        if tl.latest_finish >= ef:
            return tl.wavelength_id, tl.find_slot(tl.latest_finish, total)
        start = max(ef, now + self.poll_slack_ns - duration)
        return tl.wavelength_id, tl.find_slot(start, total)


class RoundRobinFirstFit:
    """Earliest feasible slot on the next wavelength in rotation."""

    key = "roundrobin-firstfit"

    def __init__(self, poll_slack_ns: int = 0):
        del poll_slack_ns

    def place(self, onu, duration: int, now: int,
              rx_timelines: list[WavelengthTimeline], earliest_fn) -> tuple[int, int]:
        w = (onu.us_w_prev + 1) % len(rx_timelines)
        tl = rx_timelines[w]
        return w, tl.find_slot(earliest_fn(w), duration + GUARD_NS)


STRATEGIES = {
    NovmLike.key: NovmLike,
    RoundRobinFirstFit.key: RoundRobinFirstFit,
}


def upstream_schedule(onu, report_bits: int, strategy,
                      rx_timelines: list[WavelengthTimeline],
                      tx_timelines: list[WavelengthTimeline],
                      now: int, t_t_ns: int) -> UpstreamGrant:
    """Steps 1 and 2 of REPORT handling: pick the burst window, then fit the GATE.

    The burst must start one GATE flight plus processing and transmitter
    tuning after the GATE leaves; if the GATE cannot be committed early
    enough on the listening wavelength, the burst is pushed forward and
    replaced until both fit.
    """
    half_rtt = onu.rtt_ns // 2
    duration = report_bits + REPORT_NS  # 1 Gbps feeder: bits == ns
    lo = max(now, onu.rx_ready)
    min_start = 0

    def earliest_fn(w: int) -> int:
        tune = abs(onu.us_w_prev - w) * t_t_ns
        return max(lo + GATE_NS + half_rtt + GATE_PROC_NS + tune, min_start)

    gate_tl = tx_timelines[onu.w_prev]
    for _ in range(64):
        w_tx, bs = strategy.place(onu, duration, now, rx_timelines, earliest_fn)
        tune = abs(onu.us_w_prev - w_tx) * t_t_ns
        t_gate_latest = bs - half_rtt - GATE_PROC_NS - tune - GATE_NS
        desired = _anchored_gate_time(gate_tl, lo, t_gate_latest)
        actual = gate_tl.find_slot(desired, GATE_NS)
        if actual + GATE_NS + half_rtt + GATE_PROC_NS + tune <= bs:
            reserve_gate_transmission(gate_tl, actual)
            rx = rx_timelines[w_tx]
            rx.commit(bs, bs + duration + GUARD_NS)
            onu.us_w_prev = w_tx
            return UpstreamGrant(onu=onu.id, t_gate=actual, w_tx=w_tx,
                                 us_interval=(bs, bs + duration))
        min_start = actual + GATE_NS + half_rtt + GATE_PROC_NS + tune
    raise RuntimeError(f"could not fit GATE for onu {onu.id} at t={now}")
