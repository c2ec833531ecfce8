"""Brute-force reference computations used to cross-check the fast paths.

Everything here recomputes quantities from first principles: an
event-by-event schedule simulator, a discretized speed-choice dynamic
program, an exhaustive routing enumerator for tiny instances, and a
subset-enumeration referee for the set-partitioning solver.  These run
in tests and behind the ``oracle`` CLI subcommand; nothing in the search
path depends on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import optimal_speed_fuel
from .errors import InfeasibleRouteError
from .soa import optimize_speeds


@dataclass
class SimulatedSchedule:
    """Forward simulation of one subsequence from a fixed first-visit time."""

    duration: float
    warp: float
    load: float
    distance: float
    travel_time: float
    load_distance: float
    speed2_distance: float


def simulate(seq: Sequence[int], inst, speeds, t0: float) -> SimulatedSchedule:
    """Walk the sequence event by event.

    Early arrivals wait for the window to open.  Late arrivals accumulate
    time warp and rewind the clock to the window close, but the elapsed
    duration keeps the overshoot: the schedule "pays" the full travel and
    waiting time while the warp deficit is tracked separately.
    """
    a, b, tau, q, dist = (inst.tw_start, inst.tw_end, inst.service_time,
                          inst.demand, inst.distance)
    clock = t0          # service-start time at the current node, after rewinds
    duration = 0.0      # service + travel + waiting, never rewound
    warp = 0.0
    load = q[seq[0]]
    d_total = 0.0
    tt = 0.0
    ss = 0.0
    remaining_weighted = 0.0
    # per-arc loads need the demand still to be delivered downstream
    suffix_load = [0.0] * (len(seq) + 1)
    for k in range(len(seq) - 1, -1, -1):
        suffix_load[k] = suffix_load[k + 1] + q[seq[k]]
    for i in range(1, len(seq)):
        u, w = seq[i - 1], seq[i]
        d = dist[u][w]
        v = speeds[i - 1]
        delta = d / v if d > 0 else 0.0
        arrival = clock + tau[u] + delta
        duration += tau[u] + delta
        d_total += d
        tt += delta
        ss += v * v * d
        remaining_weighted += suffix_load[i] * d
        load += q[w]
        if arrival > b[w]:
            warp += arrival - b[w]
            clock = b[w]
        elif arrival < a[w]:
            duration += a[w] - arrival
            clock = a[w]
        else:
            clock = arrival
    duration += tau[seq[-1]]
    return SimulatedSchedule(
        duration=duration, warp=warp, load=load, distance=d_total,
        travel_time=tt, load_distance=remaining_weighted, speed2_distance=ss,
    )


def earliest_latest_start(seq: Sequence[int], inst, speeds):
    """(E, L, T, TW): the first-visit start range achieving minimum warp and,
    among those, minimum duration.

    Duration and warp are piecewise linear in the start time with
    breakpoints generated by the window bounds, so scanning candidate
    breakpoints is exact.
    """
    a, b, tau, dist = inst.tw_start, inst.tw_end, inst.service_time, inst.distance
    lo, hi = a[seq[0]], b[seq[0]]
    offset = 0.0
    candidates = {lo, hi}
    for i in range(1, len(seq)):
        d = dist[seq[i - 1]][seq[i]]
        v = speeds[i - 1]
        offset += tau[seq[i - 1]] + (d / v if d > 0 else 0.0)
        for bound in (a[seq[i]] - offset, b[seq[i]] - offset):
            if lo <= bound <= hi:
                candidates.add(bound)
    sims = [(t0, simulate(seq, inst, speeds, t0)) for t0 in sorted(candidates)]
    tw_min = min(s.warp for _, s in sims)
    with_min_warp = [(t0, s) for t0, s in sims if s.warp <= tw_min + 1e-9]
    dur_min = min(s.duration for _, s in with_min_warp)
    optimal = [t0 for t0, s in with_min_warp if s.duration <= dur_min + 1e-9]
    return min(optimal), max(optimal), dur_min, tw_min


def carve_feasible_windows(inst, seq: Sequence[int], rng,
                           width_range=(60, 300), wait_max=240.0,
                           margin=5.0) -> None:
    """Rewrite the windows of the customers on ``seq`` around a random
    witness schedule, guaranteeing a feasible speed profile exists.

    The witness drives each arc at a random legal speed and may idle at
    stops; windows are integer-valued and contain the witness service
    start with at least ``margin`` slack on the late side.  Mutates the
    instance's window arrays in place.
    """
    from .energy import optimal_speed_fuel

    v_lo = max(optimal_speed_fuel(inst.objective_params), inst.speed_min)
    v_hi = inst.speed_max
    t = 0.0
    for i in range(1, len(seq) - 1):
        u, w = seq[i - 1], seq[i]
        d = inst.distance[u][w]
        v = rng.uniform(v_lo, v_hi)
        t += inst.service_time[u] + (d / v if d > 0 else 0.0)
        t += rng.uniform(0.0, wait_max)
        width = rng.randint(*width_range)
        lead = rng.uniform(0.0, width - margin)
        a = max(0.0, math.floor(t - lead))
        b = math.ceil(max(t + margin, a + width))
        inst.tw_start[w] = float(a)
        inst.tw_end[w] = float(b)
        cust = inst.customers[w - 1]
        object.__setattr__(cust, "tw_start", float(a))
        object.__setattr__(cust, "tw_end", float(b))


def brute_force_speed_oracle(seq: Sequence[int], inst, levels: int = 500,
                             time_step: float = 1.0) -> float:
    """Minimal route cost over a discretized speed grid.

    Dynamic program over per-arc speeds drawn from ``levels`` equal steps
    between the fuel-optimal speed and the limit, with service-start
    times rounded up to the grid.  Rounding only delays service, so the
    result upper-bounds the continuous optimum.
    """
    params = inst.objective_params
    vmax = inst.speed_max
    v_lo = max(optimal_speed_fuel(params), inst.speed_min)
    if levels == 1:
        grid = np.array([vmax])
    else:
        grid = np.linspace(v_lo, vmax, levels)
    a, b, tau, q, dist = (inst.tw_start, inst.tw_end, inst.service_time,
                          inst.demand, inst.distance)
    remaining = sum(q[c] for c in seq[1:-1])
    wfc, wfd = params.fuel_price, params.driver_wage

    starts = np.array([a[seq[0]]])
    values = np.array([0.0])
    for i in range(1, len(seq)):
        u, w = seq[i - 1], seq[i]
        d = dist[u][w]
        fuel_per_speed = wfc * d * (params.w1 / grid + params.w2
                                    + params.w3 * remaining + params.w4 * grid * grid)
        travel = np.where(d > 0, d / grid, 0.0)
        arrivals = starts[:, None] + tau[u] + travel[None, :]
        cand_values = values[:, None] + fuel_per_speed[None, :]
        feasible = arrivals <= b[w] + 1e-9
        if not feasible.any():
            raise InfeasibleRouteError(f"no feasible speed profile reaches node {w}")
        if i == len(seq) - 1:
            total = cand_values + wfd * arrivals
            remaining -= q[w]
            return float(total[feasible].min())
        snext = np.maximum(np.ceil(arrivals / time_step) * time_step, a[w])
        snext = snext[feasible]
        vals = cand_values[feasible]
        lo = a[w]
        width = int(round((b[w] - lo) / time_step)) + 1
        bucket = np.full(width, np.inf)
        idx = np.round((snext - lo) / time_step).astype(np.int64)
        idx = np.clip(idx, 0, width - 1)
        np.minimum.at(bucket, idx, vals)
        keep = np.isfinite(bucket)
        starts = lo + np.nonzero(keep)[0] * time_step
        values = bucket[keep]
        remaining -= q[w]
    raise AssertionError("unreachable")


def enumerate_route_orderings(inst, time_check_speed: Optional[float] = None):
    """All capacity- and window-feasible orderings, grouped by customer set.

    DFS over visit prefixes; a prefix dies as soon as its earliest
    schedule at top speed misses a window or its load exceeds capacity.
    Yields (bitmask, sequence) pairs for every feasible closed route.
    """
    vmax = time_check_speed or inst.speed_max
    a, b, tau, q, dist = (inst.tw_start, inst.tw_end, inst.service_time,
                          inst.demand, inst.distance)
    n = inst.n
    out = []

    def extend(prefix, mask, load, start_time):
        last = prefix[-1]
        # closing the route is always attempted
        d_back = dist[last][0]
        back = start_time + tau[last] + (d_back / vmax if d_back > 0 else 0.0)
        if back <= b[0] + 1e-9:
            out.append((mask, prefix + [0]))
        for c in range(1, n + 1):
            bit = 1 << (c - 1)
            if mask & bit:
                continue
            if load + q[c] > inst.capacity + 1e-9:
                continue
            d = dist[last][c]
            arrival = start_time + tau[last] + (d / vmax if d > 0 else 0.0)
            if arrival > b[c] + 1e-9:
                continue
            extend(prefix + [c], mask | bit, load + q[c],
                   max(arrival, a[c]))
        return

    for c in range(1, n + 1):
        if q[c] > inst.capacity + 1e-9:
            continue
        d = dist[0][c]
        arrival = a[0] + (d / vmax if d > 0 else 0.0)
        if arrival > b[c] + 1e-9:
            continue
        extend([0, c], 1 << (c - 1), q[c], max(arrival, a[c]))
    return out


def exhaustive_optimum(inst, route_cost_fn: Optional[Callable] = None,
                       max_duration_check: bool = True):
    """Exact optimum of a tiny instance by full routing enumeration.

    Every feasible ordering of every customer subset is priced (by the
    speed optimizer unless a costing function is supplied), the cheapest
    ordering per subset is kept, and an exact cover over subsets with at
    most ``fleet_size`` parts is solved by subset dynamic programming.
    Returns (cost, list of sequences).
    """
    if route_cost_fn is None:
        def route_cost_fn(seq):
            try:
                return optimize_speeds(seq, inst).cost
            except InfeasibleRouteError:
                return None

    best_route: dict[int, tuple[float, list]] = {}
    for mask, seq in enumerate_route_orderings(inst):
        if (inst.max_route_duration is not None and max_duration_check):
            pass  # duration feasibility is enforced by the costing function
        cost = route_cost_fn(seq)
        if cost is None:
            continue
        cur = best_route.get(mask)
        if cur is None or cost < cur[0]:
            best_route[mask] = (cost, seq)

    n = inst.n
    full = (1 << n) - 1
    m = inst.fleet_size
    INF = math.inf
    dp = [[INF] * (m + 1) for _ in range(full + 1)]
    choice: dict[tuple[int, int], int] = {}
    for k in range(m + 1):
        dp[0][k] = 0.0
    subsets_by_low: dict[int, list[int]] = {}
    for mask in best_route:
        low = mask & -mask
        subsets_by_low.setdefault(low, []).append(mask)
    for mask in range(1, full + 1):
        low = mask & -mask
        for sub in subsets_by_low.get(low, ()):
            if sub & mask != sub:
                continue
            rest = mask ^ sub
            c = best_route[sub][0]
            for k in range(1, m + 1):
                cand = dp[rest][k - 1] + c
                if cand < dp[mask][k]:
                    dp[mask][k] = cand
                    choice[(mask, k)] = sub
    best_k = min(range(m + 1), key=lambda k: dp[full][k])
    if not math.isfinite(dp[full][best_k]):
        raise InfeasibleRouteError("no feasible partition covers all customers")
    routes = []
    mask, k = full, best_k
    while mask:
        sub = choice[(mask, k)]
        routes.append(best_route[sub][1])
        mask ^= sub
        k -= 1
    return dp[full][best_k], routes


def brute_force_partition(route_masks: Sequence[int], costs: Sequence[float],
                          n_customers: int, max_routes: int):
    """Reference set-partitioning optimum by enumerating all route subsets."""
    full = (1 << n_customers) - 1
    best = (math.inf, None)
    r = len(route_masks)
    for size in range(1, min(r, max_routes) + 1):
        for combo in combinations(range(r), size):
            mask = 0
            ok = True
            for idx in combo:
                if mask & route_masks[idx]:
                    ok = False
                    break
                mask |= route_masks[idx]
            if ok and mask == full:
                cost = sum(costs[i] for i in combo)
                if cost < best[0]:
                    best = (cost, combo)
    return best
