"""Downstream grant partitioning and wavelength selection.

The scheduler receives one grant per REPORT and, for every wavelength, builds
a candidate plan: greedily fill as many whole voids as possible (smallest
first), then place the remaining grant by a fixed decision tree that prefers
positions adjacent to already-committed traffic and, failing that, the latest
feasible position inside the window. The wavelength with the best void
reduction wins; later finish breaks ties, then a seeded coin.

Grants are multiples of the fixed packet duration. A void counts as
completely filled when the whole-packet fit leaves less than one packet of
residue; the residue stays idle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .config import PACKET_NS
from .timeline import Void, VoidClassification, WavelengthTimeline, classify_voids


@dataclass
class SchedulingWindow:
    """Per-wavelength admissible start times plus the shared finish deadline."""

    earliest: dict[int, int]
    deadline: int


@dataclass
class CandidatePlan:
    """One wavelength's proposal for a grant.

    `voids_removed` is the net change in void count the plan promises: the
    number of completely filled voids, or -1 when scheduling on this
    wavelength necessarily creates a new void. `latest_end` is the latest
    time any part of the grant would occupy.
    """

    wavelength: int
    intervals: list[tuple[int, int]] = field(default_factory=list)
    voids_removed: int = 0
    latest_end: int = 0
    sla_risk: bool = False


@dataclass
class GrantAllocation:
    """Committed placement of one downstream grant."""

    onu: int
    wavelength: int
    intervals: list[tuple[int, int]]
    deadline_met: bool
    risk_fallback: bool = False


def quantized_demand(size: int, quantum: int | None) -> int:
    """Whole-packet time a void can absorb; equals `size` in continuous mode."""
    if quantum is None:
        return size
    return (size // quantum) * quantum


def compute_lower_bound(onu, wavelength: int, t_gate: int, now: int, tuning_fn) -> int:
    """Earliest admissible start of this grant on `wavelength`.

    On the wavelength the receiver already listens to, only ordering behind
    the previous grant constrains the start. Anywhere else the receiver must
    first see the GATE and retune, and retuning may begin only after the
    previously scheduled traffic has been delivered.
    """
    if wavelength == onu.w_prev:
        return max(now, onu.t_lt)
    return max(t_gate, onu.t_lt) + tuning_fn(onu.w_prev, wavelength)


def compute_upper_bound(onu) -> int:
    """Latest admissible finish: head-of-queue arrival plus the delay bound."""
    t_af = onu.ds_head_arrival()
    if t_af is None:
        raise ValueError("downstream queue is empty; nothing to schedule")
    return t_af + onu.d_ub_ns


def greedy_complete_fill(voids: list[Void], grant: int,
                         quantum: int | None = None) -> tuple[list[Void], int]:
    """Fill whole voids smallest-first until the next one no longer fits.

    Returns the filled voids (in fill order) and the unplaced remainder. No
    other selection fills strictly more voids completely. Equal sizes are
    taken in ascending start order.
    """
    remaining = grant
    filled: list[Void] = []
    for v in sorted(voids, key=lambda v: (v.size, v.start)):
        need = quantized_demand(v.size, quantum)
        if need == 0:
            continue
        if need > remaining:
            break
        filled.append(v)
        remaining -= need
    return filled, remaining


def place_remaining_grant(cls: VoidClassification, earliest: int, deadline: int,
                          t_lf: int, remaining: int, filled: list[Void],
                          quantum: int | None = None,
                          ) -> tuple[list[tuple[int, int]], int, bool]:
    """Place the grant remainder after complete fills; returns (intervals, latest_end, sla_risk).

    Decision order: a spanning void or a start bound beyond the frontier
    forces a single latest block (or an SLA risk verdict); otherwise the
    remainder goes into the end-straddling void from its start, or appends at
    the frontier, saturating either up to the deadline; any leftover lands
    end-aligned in an unfilled interior void (latest end first) or in the
    start-straddling void, else the wavelength is flagged as an SLA risk.
    """
    fill_ends = [v.end for v in filled]

    def latest_end(intervals):
        ends = [e for _, e in intervals] + fill_ends
        return max(ends) if ends else deadline

    if remaining == 0:
        return [], latest_end([]), False

    # Scheduling here necessarily opens a new void; go as late as possible.
    if cls.spanning is not None or earliest > t_lf:
        if deadline - earliest <= remaining:
            return [], deadline, True
        iv = [(deadline - remaining, deadline)]
        return iv, deadline, False

    intervals: list[tuple[int, int]] = []
    rem = remaining
    if cls.straddle_end is not None:
        v = cls.straddle_end
        if deadline - v.start > rem:
            intervals.append((v.start, v.start + rem))
            rem = 0
        else:
            take = quantized_demand(deadline - v.start, quantum)
            if take > 0:
                intervals.append((v.start, v.start + take))
                rem -= take
    elif deadline > t_lf:
        start = max(t_lf, earliest)
        if deadline - start > rem:
            intervals.append((start, start + rem))
            rem = 0
        else:
            take = quantized_demand(deadline - start, quantum)
            if take > 0:
                intervals.append((start, start + take))
                rem -= take

    if rem > 0:
        filled_set = set(filled)
        leftovers = [v for v in cls.interior if v not in filled_set and v.size >= rem]
        if leftovers:
            v = max(leftovers, key=lambda v: v.end)
            intervals.append((v.end - rem, v.end))
        elif cls.straddle_start is not None and cls.straddle_start.end - earliest > rem:
            v = cls.straddle_start
            intervals.append((v.end - rem, v.end))
        else:
            return intervals, latest_end(intervals), True

    return intervals, latest_end(intervals), False


def build_candidate_plan(timeline: WavelengthTimeline, earliest: int, deadline: int,
                         grant: int, quantum: int | None = PACKET_NS) -> CandidatePlan:
    """Full per-wavelength proposal: classify, fill, place remainder."""
    plan = CandidatePlan(wavelength=timeline.wavelength_id)
    if deadline <= earliest:
        plan.sla_risk = True
        plan.latest_end = deadline
        return plan
    cls = classify_voids(timeline, earliest, deadline)
    t_lf = timeline.latest_finish
    new_void_forced = cls.spanning is not None or earliest > t_lf
    if new_void_forced:
        filled: list[Void] = []
        rem = grant
    else:
        filled, rem = greedy_complete_fill(cls.interior, grant, quantum)
    tail, t_m, risk = place_remaining_grant(cls, earliest, deadline, t_lf, rem,
                                            filled, quantum)
    if risk:
        plan.sla_risk = True
        plan.latest_end = t_m
        return plan
    fills = [(v.end - quantized_demand(v.size, quantum), v.end) for v in filled]
    plan.intervals = sorted(fills + tail)
    plan.voids_removed = -1 if new_void_forced else len(filled)
    plan.latest_end = t_m
    return plan


def build_late_block_plan(timeline: WavelengthTimeline, earliest: int, deadline: int,
                          grant: int, quantum: int | None = PACKET_NS) -> CandidatePlan:
    """Ablation baseline: the whole grant as one block at the latest feasible position.

    No void is ever filled deliberately; this isolates the gain contributed
    by complete-fill partitioning in the main scheduler.
    """
    plan = CandidatePlan(wavelength=timeline.wavelength_id)
    plan.latest_end = deadline
    if deadline <= earliest:
        plan.sla_risk = True
        return plan
    best: tuple[int, int] | None = None
    for v in timeline.voids():
        s = max(v.start, earliest)
        e = min(v.end, deadline)
        if e - s >= grant and (best is None or e > best[1]):
            best = (e - grant, e)
    t_lf = timeline.latest_finish
    s0 = max(t_lf, earliest)
    if deadline - s0 >= grant and (best is None or deadline > best[1]):
        best = (deadline - grant, deadline)
    if best is None:
        plan.sla_risk = True
        return plan
    plan.intervals = [best]
    plan.latest_end = best[1]
    # Census effect of the single block: clubbed at a void end or at the
    # frontier keeps the count, anything else opens a new void.
    s, e = best
    clubbed = any(e == v.end for v in timeline.voids()) or s == t_lf
    plan.voids_removed = 0 if clubbed else -1
    return plan


def select_wavelength(plans: list[CandidatePlan], rng: random.Random) -> CandidatePlan | None:
    """Best non-risky plan: max voids_removed, then max latest_end, then seeded coin.

    Returns None when every wavelength carries SLA risk; the caller falls
    back to earliest-finish scheduling.
    """
    ok = [p for p in plans if not p.sla_risk]
    if not ok:
        return None
    best_nf = max(p.voids_removed for p in ok)
    ok = [p for p in ok if p.voids_removed == best_nf]
    best_tm = max(p.latest_end for p in ok)
    ok = [p for p in ok if p.latest_end == best_tm]
    if len(ok) == 1:
        return ok[0]
    return ok[rng.randrange(len(ok))]


def schedule_earliest_finish(grant: int, earliest: dict[int, int],
                             timelines: list[WavelengthTimeline],
                             quantum: int | None = PACKET_NS,
                             ) -> tuple[int, list[tuple[int, int]], int]:
    """Pack the grant as early as possible; pick the wavelength finishing first.

    Used only when every wavelength risks the delay bound: voids after the
    start bound are used in start order, the rest appends at the frontier.
    """
    best: tuple[int, list[tuple[int, int]], int] | None = None
    for tl in timelines:
        lb = earliest[tl.wavelength_id]
        rem = grant
        ivs: list[tuple[int, int]] = []
        for v in tl.voids():
            if rem == 0:
                break
            if v.end <= lb:
                continue
            s = max(v.start, lb)
            cap = quantized_demand(v.end - s, quantum)
            take = min(rem, cap)
            if take > 0:
                ivs.append((s, s + take))
                rem -= take
        if rem > 0:
            s = max(tl.latest_finish, lb)
            ivs.append((s, s + rem))
        finish = ivs[-1][1]
        if best is None or finish < best[2]:
            best = (tl.wavelength_id, ivs, finish)
    assert best is not None
    return best


def schedule_downstream(onu, grant: int, timelines: list[WavelengthTimeline],
                        now: int, t_gate: int, tuning_fn, rng: random.Random,
                        scheduler: str = "eotx-novm",
                        quantum: int | None = PACKET_NS,
                        trace=None) -> GrantAllocation:
    """Top-level decision for one REPORT: plan every wavelength, pick one, commit.

    Updates the ONU's last-scheduled time and, when the grant moves to a new
    wavelength, the receiver wavelength carried in the next GATE.
    """
    deadline = compute_upper_bound(onu)
    earliest = {tl.wavelength_id: compute_lower_bound(onu, tl.wavelength_id,
                                                      t_gate, now, tuning_fn)
                for tl in timelines}
    builder = build_late_block_plan if scheduler == "late-only-baseline" else build_candidate_plan
    plans = [builder(tl, earliest[tl.wavelength_id], deadline, grant, quantum)
             for tl in timelines]
    chosen = select_wavelength(plans, rng)
    if chosen is not None:
        wavelength = chosen.wavelength
        intervals = chosen.intervals
        deadline_met = True
        fallback = False
        nf, tm = chosen.voids_removed, chosen.latest_end
    else:
        wavelength, intervals, finish = schedule_earliest_finish(
            grant, earliest, timelines, quantum)
        deadline_met = finish <= deadline
        fallback = True
        nf, tm = -1, finish
    tl = next(t for t in timelines if t.wavelength_id == wavelength)
    for s, e in intervals:
        tl.commit(s, e)
    if trace is not None:
        from .config import us_str
        ivs = "".join(f"[{us_str(s)},{us_str(e)})" for s, e in intervals)
        trace(f"t={us_str(now)} onu={onu.id} w={wavelength} nf={nf} "
              f"tm={us_str(tm)} intervals={ivs}")
    onu.t_lt = max(e for _, e in intervals)
    if wavelength != onu.w_prev:
        onu.rx_ready = earliest[wavelength]
        onu.w_prev = wavelength
    return GrantAllocation(onu=onu.id, wavelength=wavelength,
                           intervals=sorted(intervals),
                           deadline_met=deadline_met, risk_fallback=fallback)
