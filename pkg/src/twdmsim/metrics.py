"""Run metrics: transmitter off-time, delay-bound violations, confidence intervals.

Energy savings count, per wavelength, the idle gaps longer than the
sleep-to-wake time; each sleep episode pays the wake-up overhead, so a gap of
size s contributes s - t_sw (the `full` accounting mode credits the whole gap
instead). The final stretch of idle time up to the horizon counts as a gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class MetricsRecord:
    """Per-run outputs; confidence halfwidths appear only on aggregates."""

    e_s: float                      # percent of time transmitters are off
    p_v: float                      # percent of admitted DS traffic past its bound
    mean_ds_delay_ms: float
    drops: int
    per_wavelength_off_ns: tuple[int, ...]
    ci_halfwidth: dict | None = None


def _window_off_ns(off_intervals, t_sw_ns: int, w_start: int, w_end: int,
                   accounting: str) -> int:
    total = 0
    for s, e in off_intervals:
        s, e = max(s, w_start), min(e, w_end)
        size = e - s
        if size > t_sw_ns:
            total += size if accounting == "full" else size - t_sw_ns
    return total


def per_wavelength_off_time(timelines, t_sw_ns: int, horizon_ns: int,
                            window_start_ns: int = 0,
                            accounting: str = "overhead") -> list[int]:
    return [_window_off_ns(tl.off_intervals(horizon_ns), t_sw_ns,
                           window_start_ns, horizon_ns, accounting)
            for tl in timelines]


def energy_savings(timelines, t_sw_ns: int, horizon_ns: int,
                   window_start_ns: int = 0, accounting: str = "overhead") -> float:
    """Percent of the metrics window the transmitters can be switched off."""
    window = horizon_ns - window_start_ns
    if window <= 0 or not timelines:
        return 0.0
    off = per_wavelength_off_time(timelines, t_sw_ns, horizon_ns,
                                  window_start_ns, accounting)
    return 100.0 * sum(off) / (len(timelines) * window)


def energy_savings_from_history(timelines, t_sw_ns: int, horizon_ns: int,
                                window_start_ns: int = 0,
                                accounting: str = "overhead") -> float:
    """Census oracle: same figure recomputed from the raw commit history."""
    window = horizon_ns - window_start_ns
    if window <= 0 or not timelines:
        return 0.0
    off = [_window_off_ns(tl.off_intervals_from_history(horizon_ns), t_sw_ns,
                          window_start_ns, horizon_ns, accounting)
           for tl in timelines]
    return 100.0 * sum(off) / (len(timelines) * window)


def delay_violation_rate(delays_ns, d_ub_ns: int) -> float:
    """Percent of the given per-packet delays exceeding the bound.

    Dropped packets never produce a delay sample; they are excluded from both
    numerator and denominator and reported separately.
    """
    delays = np.asarray(delays_ns)
    if delays.size == 0:
        return 0.0
    return 100.0 * float(np.count_nonzero(delays > d_ub_ns)) / delays.size


def confidence_interval(samples, level: float = 0.95) -> tuple[float, float | None]:
    """Student-t mean interval over replication samples; halfwidth None below 2 samples."""
    xs = np.asarray(samples, dtype=np.float64)
    if xs.size == 0:
        raise ValueError("no samples")
    mean = float(xs.mean())
    if xs.size < 2:
        return mean, None
    sd = float(xs.std(ddof=1))
    t = float(stats.t.ppf(0.5 + level / 2.0, xs.size - 1))
    return mean, t * sd / float(np.sqrt(xs.size))


def bruteforce_max_fill(voids, grant: int) -> int:
    """Exhaustive check: most voids whose sizes sum to at most `grant`.

    Enumerates every subset (sizes via doubling), so the input is capped at
    20 voids.
    """
    sizes = [v.size if hasattr(v, "size") else int(v) for v in voids]
    n = len(sizes)
    if n > 20:
        raise ValueError(f"refusing exhaustive search over {n} voids (cap 20)")
    if n == 0:
        return 0
    sums = np.zeros(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int16)
    for i, s in enumerate(sizes):
        half = 1 << i
        sums[half:2 * half] = sums[:half] + s
        counts[half:2 * half] = counts[:half] + 1
    return int(counts[sums <= grant].max())
