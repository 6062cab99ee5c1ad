"""Self-similar packet arrival generation and tail-drop buffering.

Each traffic stream aggregates 32 independent ON-OFF sources with Pareto
period lengths (shape 1.2 ON, 1.4 OFF). During ON a source emits fixed-size
packets back to back at the access line rate. The OFF minimum is calibrated
numerically so the stream's mean rate hits the requested fraction of its
line-rate share. Period draws are capped (1 s for ON, load-dependent for OFF)
so finite-horizon sample means concentrate; the caps sit far above every
time constant of the system.
"""

from __future__ import annotations

import csv
from array import array
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .config import (ACCESS_RATE_BPS, BUFFER_BITS, NS_PER_S, PACKET_BITS,
                     SOURCES_PER_STREAM)

SHAPE_ON = 1.2
SHAPE_OFF = 1.4
ON_CAP_NS = NS_PER_S


@dataclass(frozen=True)
class ParetoSource:
    """Calibrated parameters of one ON-OFF source."""

    shape_on: float
    shape_off: float
    min_on_ns: int
    min_off_ns: float
    off_cap_ns: float
    peak_rate_bps: int
    p_on: float


def _truncated_pareto_mean(minimum: float, shape: float, cap: float) -> float:
    # E[min(X, cap)] for X ~ Pareto(shape, minimum)
    m = shape * minimum / (shape - 1.0) * (1.0 - (minimum / cap) ** (shape - 1.0))
    return m + cap * (minimum / cap) ** shape


def _expected_on_packets(pkt_ns: int, cap_ns: int, shape: float) -> float:
    # E[floor(X / pkt)] with X ~ Pareto(shape, pkt) capped at cap_ns
    ks = np.arange(1, cap_ns // pkt_ns + 1, dtype=np.float64)
    return float(np.sum(ks ** -shape))


def source_parameters(target_rate_bps: float, peak_rate_bps: int = ACCESS_RATE_BPS,
                      ) -> ParetoSource:
    """Calibrate one source so its long-run mean rate is `target_rate_bps`."""
    if target_rate_bps <= 0:
        raise ValueError("target rate must be positive")
    p_on_raw = target_rate_bps / peak_rate_bps
    if p_on_raw >= 1.0:
        raise ValueError("target rate exceeds the source peak rate")
    pkt_ns = int(PACKET_BITS * NS_PER_S // peak_rate_bps)
    mean_pkts = _expected_on_packets(pkt_ns, ON_CAP_NS, SHAPE_ON)
    mean_on_used = mean_pkts * pkt_ns
    target_off = mean_on_used * (1.0 - p_on_raw) / p_on_raw
    cap_off = max(float(ON_CAP_NS), 100.0 * target_off)
    lo, hi = 1.0, cap_off
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _truncated_pareto_mean(mid, SHAPE_OFF, cap_off) < target_off:
            lo = mid
        else:
            hi = mid
    p_on = mean_on_used / (mean_on_used + target_off)
    return ParetoSource(shape_on=SHAPE_ON, shape_off=SHAPE_OFF, min_on_ns=pkt_ns,
                        min_off_ns=lo, off_cap_ns=cap_off,
                        peak_rate_bps=peak_rate_bps, p_on=p_on)


def _source_arrivals(src: ParetoSource, rng: np.random.Generator,
                     horizon_ns: int) -> np.ndarray:
    """Packet times of one source over [0, horizon); vectorized cycle blocks."""
    pkt = src.min_on_ns
    mean_cycle = (src.min_on_ns * _expected_on_packets(pkt, ON_CAP_NS, SHAPE_ON)
                  + _truncated_pareto_mean(src.min_off_ns, SHAPE_OFF, src.off_cap_ns))
    t0 = 0.0
    if rng.random() >= src.p_on:
        # start inside an OFF period (residual fraction of one draw)
        u = 1.0 - rng.random()
        t0 = min(src.min_off_ns * u ** (-1.0 / SHAPE_OFF), src.off_cap_ns) * rng.random()
    chunks: list[np.ndarray] = []
    t = t0
    while t < horizon_ns:
        n_cycles = max(16, int((horizon_ns - t) / mean_cycle * 1.3) + 4)
        u_on = 1.0 - rng.random(n_cycles)
        u_off = 1.0 - rng.random(n_cycles)
        on = np.minimum(pkt * u_on ** (-1.0 / SHAPE_ON), ON_CAP_NS)
        n_pkts = np.maximum(1, (on // pkt).astype(np.int64))
        used = n_pkts * pkt
        off = np.minimum(src.min_off_ns * u_off ** (-1.0 / SHAPE_OFF), src.off_cap_ns)
        cycle = used + off
        starts = t + np.concatenate(([0.0], np.cumsum(cycle)[:-1]))
        keep = starts < horizon_ns
        starts, n_pkts = starts[keep], n_pkts[keep]
        if len(starts):
            total = int(n_pkts.sum())
            base = np.repeat(starts.astype(np.int64), n_pkts)
            first = np.repeat(np.concatenate(([0], np.cumsum(n_pkts)[:-1])), n_pkts)
            times = base + (np.arange(total, dtype=np.int64) - first) * pkt
            chunks.append(times[times < horizon_ns])
        t += float(np.sum(cycle))
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def generate_stream(seed, target_uf: float, line_rate_share_bps: float,
                    horizon_s: float) -> np.ndarray:
    """Sorted packet arrival times (ns) for one ONU-direction stream.

    `line_rate_share_bps` is the stream's share of the feeder rate; the
    aggregate of 32 sources offers `target_uf` times that share on average.
    Identical seeds give byte-identical streams.
    """
    if not 0.0 <= target_uf < 1.0:
        raise ValueError(f"target_uf must be in [0, 1), got {target_uf}")
    horizon_ns = round(horizon_s * NS_PER_S)
    if target_uf == 0.0 or horizon_ns == 0:
        return np.empty(0, dtype=np.int64)
    per_source = target_uf * line_rate_share_bps / SOURCES_PER_STREAM
    src = source_parameters(per_source)
    streams = []
    root = np.random.SeedSequence(seed)
    for child in root.spawn(SOURCES_PER_STREAM):
        rng = np.random.default_rng(child)
        streams.append(_source_arrivals(src, rng, horizon_ns))
    out = np.concatenate(streams)
    out.sort(kind="stable")
    return out


def measured_load(arrivals: np.ndarray, line_rate_share_bps: float,
                  horizon_s: float) -> float:
    """Offered load of a stream as a fraction of its line-rate share."""
    bits = len(arrivals) * PACKET_BITS
    return bits / (line_rate_share_bps * horizon_s)


class PacketBuffer:
    """Tail-drop FIFO accounting for one queue.

    Occupancy is derived from admitted and departed packet counts; departures
    are appended in time order as grants commit, so a binary search gives the
    occupancy at any arrival instant.
    """

    def __init__(self, capacity_bits: int = BUFFER_BITS):
        self.capacity_bits = capacity_bits
        self.admitted = array("q")
        self.departures = array("q")
        self.drops = 0

    def occupancy_bits(self, at: int) -> int:
        freed = bisect_right(self.departures, at)
        return (len(self.admitted) - freed) * PACKET_BITS

    def enqueue(self, arrival: int, size: int = PACKET_BITS) -> bool:
        """Admit one packet, or count a drop when it would overflow."""
        if self.occupancy_bits(arrival) + size > self.capacity_bits:
            self.drops += 1
            return False
        self.admitted.append(arrival)
        return True

    def schedule_departures(self, times) -> None:
        self.departures.extend(times)


def export_arrivals(path: str, streams: dict[tuple[str, int], np.ndarray]) -> None:
    """Write arrival traces as CSV rows `time_ns,dir,onu,bits`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time_ns", "dir", "onu", "bits"])
        rows = []
        for (direction, onu), arr in streams.items():
            rows.extend((int(t), direction, onu, PACKET_BITS) for t in arr)
        rows.sort()
        w.writerows(rows)


def import_arrivals(path: str) -> dict[tuple[str, int], np.ndarray]:
    """Read an arrival trace written by export_arrivals."""
    buckets: dict[tuple[str, int], list[int]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (row["dir"], int(row["onu"]))
            buckets.setdefault(key, []).append(int(row["time_ns"]))
    return {k: np.array(sorted(v), dtype=np.int64) for k, v in buckets.items()}
