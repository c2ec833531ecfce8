"""Recursive per-arc speed optimization for a fixed visit sequence.

Given a route that is time-feasible at top speed, the optimizer picks
arc speeds minimizing fuel plus driver cost subject to the customer
windows.  The terminal arrival is seeded at the fuel-plus-wage-optimal
cruise speed and clamped into its window; the segment is then driven at
one reference speed, the worst window violation is pinned to its nearest
bound, and the two halves are solved recursively.  Afterwards any
implied speed below the fuel-optimal one is raised to it, turning the
slack into waiting time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .energy import (ObjectiveParams, optimal_speed_fuel,
                     optimal_speed_fuel_driver, route_cost)
from .errors import InfeasibleRouteError

_EPS = 1e-9
_TW_EPS = 1e-6  # seconds; tolerance for window-feasibility classification


@dataclass
class SpeedSchedule:
    """Optimized speeds and the resulting schedule for one route."""

    speeds: list
    service_starts: list
    arrivals: list
    cost: float
    fuel_liters: float
    driver_seconds: float


def route_time_warp(seq: Sequence[int], inst, speed: float) -> float:
    """Total lateness of the earliest schedule driving every arc at ``speed``."""
    a, b, tau, dist = inst.tw_start, inst.tw_end, inst.service_time, inst.distance
    t = a[seq[0]]
    warp = 0.0
    for i in range(1, len(seq)):
        d = dist[seq[i - 1]][seq[i]]
        t = t + tau[seq[i - 1]] + (d / speed if d > 0 else 0.0)
        w = seq[i]
        if t > b[w]:
            warp += t - b[w]
            t = b[w]
        elif t < a[w]:
            t = a[w]
    return warp


def optimize_speeds(seq: Sequence[int], inst,
                    params: Optional[ObjectiveParams] = None,
                    trace: Optional[list] = None) -> SpeedSchedule:
    """Optimal speed schedule for a depot-bounded, time-feasible route.

    ``trace``, when given, collects one ``(segment_start, pinned_index,
    segment_end, side)`` tuple per recursion split, ``side`` being
    "late" or "early" for the bound the violator was pinned to.
    """
    params = params or inst.objective_params
    if seq[0] != 0 or seq[-1] != 0:
        raise InfeasibleRouteError("route must start and end at the depot")
    vmax = inst.speed_max
    v_floor = max(optimal_speed_fuel(params), inst.speed_min)
    v_seed = min(max(optimal_speed_fuel_driver(params), v_floor), vmax)

    a, b, tau, dist = inst.tw_start, inst.tw_end, inst.service_time, inst.distance
    n = len(seq)
    tprime = [0.0] * n
    tprime[0] = a[seq[0]]
    last = n - 1

    def segment_sums(s, e):
        dsum = 0.0
        tsum = 0.0
        for k in range(s, e):
            dsum += dist[seq[k]][seq[k + 1]]
            tsum += tau[seq[k]]
        return dsum, tsum

    def solve(s, e, depth):
        if depth > 4 * n:
            raise InfeasibleRouteError("speed optimization failed to converge")
        dsum, tsum = segment_sums(s, e)
        if e == last:
            tprime[e] = min(max(a[seq[e]], tprime[s] + dsum / v_seed + tsum), b[seq[e]])
        budget = tprime[e] - tprime[s] - tsum
        if dsum > 0.0:
            if budget <= 0.0:
                raise InfeasibleRouteError(
                    f"segment {s}..{e} has no driving time at any speed")
            v_ref = dsum / budget
            if v_ref > vmax * (1.0 + 1e-9):
                raise InfeasibleRouteError(
                    f"segment {s}..{e} requires speed {v_ref:.3f} above the limit {vmax}")
        else:
            v_ref = None
            if budget < -_TW_EPS:
                raise InfeasibleRouteError(
                    f"segment {s}..{e} cannot fit its service times")
        max_violation = 0.0
        p = -1
        t = tprime[s]
        for i in range(s + 1, e + 1):
            d = dist[seq[i - 1]][seq[i]]
            t = t + tau[seq[i - 1]] + (d / v_ref if (v_ref and d > 0.0) else 0.0)
            tprime[i] = t
            node = seq[i]
            violation = max(0.0, t - b[node], a[node] - t)
            if violation > max_violation:
                max_violation = violation
                p = i
        if max_violation > _EPS and s < p < e:
            node = seq[p]
            if trace is not None:
                trace.append((s, p, e, "late" if tprime[p] > b[node] else "early"))
            tprime[p] = min(max(a[node], tprime[p]), b[node])
            solve(s, p, depth + 1)
            solve(p, e, depth + 1)

    solve(0, last, 0)
    return _finish(seq, tprime, inst, params, v_floor, vmax, v_seed)


def _finish(seq, tprime, inst, params, v_floor, vmax, v_seed) -> SpeedSchedule:
    a, b, tau, dist = inst.tw_start, inst.tw_end, inst.service_time, inst.distance
    n = len(seq)
    speeds = []
    for i in range(1, n):
        d = dist[seq[i - 1]][seq[i]]
        if d <= 0.0:
            speeds.append(v_seed)
            continue
        gap = tprime[i] - tprime[i - 1] - tau[seq[i - 1]]
        if gap <= 0.0:
            v = vmax
        else:
            v = d / gap
        if v > vmax * (1.0 + 1e-9):
            raise InfeasibleRouteError(
                f"arc {seq[i - 1]}->{seq[i]} requires speed {v:.3f} above the limit")
        v = min(max(v, v_floor), vmax)
        speeds.append(v)

    breakdown = route_cost(seq, speeds, inst)
    starts = breakdown.service_starts
    for i, node in enumerate(seq):
        if starts[i] > b[node] + _TW_EPS:
            raise InfeasibleRouteError(
                f"node {node} served at {starts[i]:.3f} after window close {b[node]}")
    return SpeedSchedule(
        speeds=speeds,
        service_starts=starts,
        arrivals=breakdown.arrival_times,
        cost=breakdown.total,
        fuel_liters=breakdown.fuel_liters,
        driver_seconds=breakdown.driver_seconds,
    )


class SpeedMatrix:
    """Shared per-arc decision speeds, dense over all node pairs."""

    def __init__(self, n: int, vmax: float):
        self.vmax = vmax
        self.values = np.full((n + 1, n + 1), vmax, dtype=np.float64)

    def reset(self) -> None:
        self.values[:] = self.vmax

    def get(self, u: int, w: int) -> float:
        return float(self.values[u, w])

    def set_route(self, seq: Sequence[int], speeds: Sequence[float]) -> None:
        for i in range(1, len(seq)):
            self.values[seq[i - 1], seq[i]] = speeds[i - 1]


def update_speed_matrix(matrix: SpeedMatrix, solution_routes) -> None:
    """Write the optimized speeds of every scheduled route into the matrix."""
    for route in solution_routes:
        if route.schedule is not None:
            matrix.set_route(route.seq, route.schedule.speeds)


def reinitialize_speed_matrix(matrix: SpeedMatrix, best_routes) -> None:
    """Reset all arcs to top speed, then restore the incumbent's speeds."""
    matrix.reset()
    if best_routes:
        update_speed_matrix(matrix, best_routes)
