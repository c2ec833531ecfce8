"""Randomized variable neighborhood descent and the shaking moves.

The descent owns a working set of packed routes.  Five inter-route and
five intra-route neighborhoods are explored in random order; each
improvement re-randomizes the unexplored set.  Moves are priced by the
jitted scans in ``kernels`` against the shared speed matrix, with time
windows relaxed into warp penalties; capacity and route-duration caps
are hard.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

import numpy as np

from . import kernels, routeval
from .energy import optimal_speed_fuel, optimal_speed_fuel_driver
from .errors import PerturbationError, ValidationError
from .soa import SpeedMatrix

INTER_KINDS = ("shift10", "shift20", "swap11", "swap22", "twooptstar")
INTRA_KINDS = ("reinsertion", "oropt2", "oropt3", "exchange", "twoopt")
ALL_KINDS = INTER_KINDS + INTRA_KINDS

_EPS = 1e-9


class SearchContext:
    """Packed instance data, objective weights and the shared speed matrix."""

    def __init__(self, inst, matrix: Optional[SpeedMatrix] = None,
                 debug_checks: bool = False,
                 warp_penalty: Optional[float] = None):
        self.inst = inst
        self.matrix = matrix or SpeedMatrix(inst.n, inst.speed_max)
        self.dist = np.asarray(inst.distance, dtype=np.float64)
        self.a = np.asarray(inst.tw_start, dtype=np.float64)
        self.b = np.asarray(inst.tw_end, dtype=np.float64)
        self.tau = np.asarray(inst.service_time, dtype=np.float64)
        self.q = np.asarray(inst.demand, dtype=np.float64)
        self.ectx = routeval.EvalContext.from_instance(inst, self.matrix.values)
        if warp_penalty is not None:
            self.ectx.warp_penalty = warp_penalty
        self.pv = kernels.params_vector(self.ectx)
        p = inst.objective_params
        self.v_fuel = max(optimal_speed_fuel(p), inst.speed_min)
        self.v_fuel_driver = min(max(optimal_speed_fuel_driver(p), self.v_fuel),
                                 inst.speed_max)
        self.debug_checks = debug_checks

    @property
    def spd(self):
        return self.matrix.values

    def kernel_args(self):
        return (self.dist, self.spd, self.a, self.b, self.tau, self.q, self.pv)


class SRoute:
    """One packed route: sequence plus jitted aggregate tables."""

    __slots__ = ("seq", "arr", "pre", "suf", "cost", "load", "warp", "schedule")

    def __init__(self, ctx: SearchContext, seq: Sequence[int]):
        self.seq = list(seq)
        self.schedule = None
        self.repack(ctx)

    def repack(self, ctx: SearchContext) -> None:
        self.arr = np.asarray(self.seq, dtype=np.int64)
        self.pre, self.suf = kernels.build_tables(self.arr, *ctx.kernel_args()[:-1])
        last = self.pre[len(self.seq) - 1]
        self.cost = float(kernels.route_cost_from_pre(self.pre, ctx.pv))
        self.load = float(last[4])
        self.warp = float(last[1])

    def customers(self) -> list[int]:
        return self.seq[1:-1]

    def is_empty(self) -> bool:
        return len(self.seq) <= 2

    def true_cost(self) -> float:
        return self.schedule.cost if self.schedule is not None else self.cost


def make_routes(ctx: SearchContext, seqs: Sequence[Sequence[int]]) -> list[SRoute]:
    return [SRoute(ctx, s) for s in seqs]


def solution_cost(routes: Sequence[SRoute]) -> float:
    return sum(r.cost for r in routes)


def solution_true_cost(routes: Sequence[SRoute]) -> float:
    return sum(r.true_cost() for r in routes if not r.is_empty())


def solution_warp(routes: Sequence[SRoute]) -> float:
    return sum(r.warp for r in routes)


def _scan_inter(kind, r1: SRoute, r2: SRoute, ctx: SearchContext):
    fn = {"shift10": kernels.scan_shift10, "shift20": kernels.scan_shift20,
          "swap11": kernels.scan_swap11, "swap22": kernels.scan_swap22,
          "twooptstar": kernels.scan_twooptstar}[kind]
    return fn(r1.arr, r1.pre, r1.suf, r2.arr, r2.pre, r2.suf, *ctx.kernel_args())


def _scan_intra(kind, r: SRoute, ctx: SearchContext):
    if kind == "reinsertion":
        return kernels.scan_relocate_segment(r.arr, r.pre, r.suf, 1, *ctx.kernel_args())
    if kind == "oropt2":
        return kernels.scan_relocate_segment(r.arr, r.pre, r.suf, 2, *ctx.kernel_args())
    if kind == "oropt3":
        return kernels.scan_relocate_segment(r.arr, r.pre, r.suf, 3, *ctx.kernel_args())
    if kind == "exchange":
        return kernels.scan_exchange(r.arr, r.pre, r.suf, *ctx.kernel_args())
    return kernels.scan_twoopt(r.arr, r.pre, r.suf, *ctx.kernel_args())


def _apply(ctx: SearchContext, routes: list[SRoute], kind: str,
           i1: int, i2: int, mi: int, mj: int, predicted: float) -> None:
    seqs = [routes[i1].seq, routes[i2].seq] if i1 != i2 else [routes[i1].seq]
    if kind in INTER_KINDS:
        mv = routeval.Move(kind, 0, mi, 1, mj)
    else:
        mv = routeval.Move(kind, 0, mi, 0, mj)
    new_seqs = routeval.apply_move(seqs, mv)
    if ctx.debug_checks:
        _assert_delta(ctx, seqs, new_seqs, predicted, kind, mi, mj)
    # replace in order; moves can empty a route entirely
    keep = [r for k, r in enumerate(routes) if k not in (i1, i2)]
    keep.extend(SRoute(ctx, s) for s in new_seqs)
    routes[:] = keep


def _assert_delta(ctx, old_seqs, new_seqs, predicted, kind, mi, mj):
    old = sum(routeval.penalized_cost(routeval.fold(ctx.ectx, s), ctx.ectx)
              for s in old_seqs)
    new = sum(routeval.penalized_cost(routeval.fold(ctx.ectx, s), ctx.ectx)
              for s in new_seqs)
    if abs(predicted - (new - old)) > 1e-6 + 1e-13 * (abs(new) + abs(old)):
        raise AssertionError(
            f"move {kind}({mi},{mj}) predicted {predicted} but rescan says {new - old}")


def rvnd_descend(routes: list[SRoute], ctx: SearchContext,
                 rng: random.Random) -> None:
    """Descend to a local optimum of all ten neighborhoods, in place."""
    fleet = ctx.inst.fleet_size

    def ensure_spare(lst):
        nonempty = [r for r in lst if not r.is_empty()]
        if len(nonempty) < fleet:
            nonempty.append(SRoute(ctx, [0, 0]))
        lst[:] = nonempty

    ensure_spare(routes)
    active = list(ALL_KINDS)
    while active:
        kind = active[rng.randrange(len(active))]
        best = (np.inf, -1, -1, -1, -1)
        if kind in INTER_KINDS:
            for x in range(len(routes)):
                for y in range(len(routes)):
                    if x == y:
                        continue
                    if kind in ("swap11", "swap22") and y < x:
                        continue  # symmetric neighborhoods
                    delta, mi, mj = _scan_inter(kind, routes[x], routes[y], ctx)
                    if delta < best[0]:
                        best = (delta, x, y, mi, mj)
        else:
            for x, r in enumerate(routes):
                if len(r.seq) < 4:
                    continue
                delta, mi, mj = _scan_intra(kind, r, ctx)
                if delta < best[0]:
                    best = (delta, x, x, mi, mj)
        # demand an improvement clearly above float noise at the cost scale
        # of the touched routes, or the descent can cycle on rounding ghosts
        if best[1] >= 0:
            scale = abs(routes[best[1]].cost) + abs(routes[best[2]].cost)
            threshold = _EPS + 1e-10 * scale
        else:
            threshold = _EPS
        if best[0] < -threshold:
            _apply(ctx, routes, kind, best[1], best[2], best[3], best[4], best[0])
            ensure_spare(routes)
            active = list(ALL_KINDS)
        else:
            active.remove(kind)
    routes[:] = [r for r in routes if not r.is_empty()]


def build_initial(inst, ctx: SearchContext, rng: random.Random) -> list[SRoute]:
    """Cheapest-insertion construction under the penalized objective.

    Seeds one empty route per vehicle and inserts customers at the
    globally cheapest capacity-feasible position; lateness is allowed
    and priced as warp.  Random insertion order can paint itself into a
    corner when the fleet is capacity-tight, so failed attempts retry
    and finally fall back to demand-descending order, which packs like
    first-fit-decreasing.
    """
    for attempt in range(24):
        order = list(range(1, inst.n + 1))
        rng.shuffle(order)
        if attempt >= 12:
            order.sort(key=lambda u: -inst.demand[u])
        routes = _try_insert_all(inst, ctx, order)
        if routes is not None:
            return routes
    raise ValidationError(
        "no capacity-feasible construction found; fleet is too small")


def _try_insert_all(inst, ctx, order):
    routes = [SRoute(ctx, [0, 0]) for _ in range(inst.fleet_size)]
    for u in order:
        best = (np.inf, -1, -1)
        for k, r in enumerate(routes):
            delta, pos = kernels.best_insertion(r.arr, r.pre, r.suf, u,
                                                *ctx.kernel_args())
            if delta < best[0]:
                best = (delta, k, pos)
        if best[1] < 0:
            return None
        r = routes[best[1]]
        r.seq.insert(best[2] + 1, u)
        r.repack(ctx)
    return [r for r in routes if not r.is_empty()]


def perturb(routes: list[SRoute], kind: str, ctx: SearchContext,
            rng: random.Random) -> Optional[list[list[int]]]:
    """One shaking move on the visit sequences; None when not applicable.

    Capacity violations are the caller's cue to redraw; windows stay
    relaxed.
    """
    seqs = [list(r.seq) for r in routes if not r.is_empty()]
    if kind == "shift_to_end":
        if len(seqs) < 2:
            return None
        spots = [(ri, pi) for ri, s in enumerate(seqs)
                 for pi in range(1, len(s) - 1)]
        ri, pi = spots[rng.randrange(len(spots))]
        others = [k for k in range(len(seqs)) if k != ri]
        target = others[rng.randrange(len(others))]
        u = seqs[ri].pop(pi)
        load = sum(ctx.inst.demand[c] for c in seqs[target][1:-1])
        if load + ctx.inst.demand[u] > ctx.inst.capacity + 1e-9:
            return None
        seqs[target].insert(len(seqs[target]) - 1, u)
        return [s for s in seqs if len(s) > 2]
    if kind == "merge_routes":
        if len(seqs) < 2:
            return None
        by_load = sorted(range(len(seqs)),
                         key=lambda k: sum(ctx.inst.demand[c] for c in seqs[k][1:-1]))
        ka, kb = by_load[0], by_load[1]
        load = sum(ctx.inst.demand[c] for c in seqs[ka][1:-1] + seqs[kb][1:-1])
        if load > ctx.inst.capacity + 1e-9:
            return None
        merged = seqs[ka][:-1] + seqs[kb][1:]
        rest = [seqs[k] for k in range(len(seqs)) if k not in (ka, kb)]
        return rest + [merged]
    raise ValidationError(f"unknown perturbation {kind!r}")


def random_perturbation(routes: list[SRoute], ctx: SearchContext,
                        rng: random.Random, max_attempts: int = 50) -> list[list[int]]:
    """Draw shift-to-end vs merge at 90/10 and retry until one applies."""
    if len([r for r in routes if not r.is_empty()]) < 2:
        return [list(r.seq) for r in routes if not r.is_empty()]
    for _ in range(max_attempts):
        kind = "shift_to_end" if rng.random() < 0.9 else "merge_routes"
        out = perturb(routes, kind, ctx, rng)
        if out is not None:
            return out
    raise PerturbationError(f"no feasible perturbation in {max_attempts} draws")


def change_speeds(best_routes: list[SRoute], ctx: SearchContext,
                  rng: random.Random) -> None:
    """Overwrite one random incumbent route's arcs with one speed drawn
    from the fuel-optimal / fuel-and-wage-optimal / maximum set."""
    candidates = [r for r in best_routes if not r.is_empty()]
    if not candidates:
        return
    route = candidates[rng.randrange(len(candidates))]
    v = (ctx.v_fuel, ctx.v_fuel_driver, ctx.inst.speed_max)[rng.randrange(3)]
    ctx.matrix.set_route(route.seq, [v] * (len(route.seq) - 1))
