"""End-to-end solver: multi-start iterated local search with interleaved
speed optimization and exact route recombination.

Each restart rebuilds a solution from scratch, descends, then loops:
shake the incumbent, descend, re-optimize speeds, feed feasible routes
to the temporary pool, accept improvements.  The speed matrix is
refreshed from each local optimum (dynamic mode), reset to top speed
once a plateau reaches half the iteration budget, and perturbed toward
one of the three reference speeds after a full customer-count plateau.
Small instances run the recombination once before the final restart;
large ones after every restart.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .energy import emvrp_cost, fcvrp_cost
from .errors import PerturbationError, ValidationError
from .localsearch import (SearchContext, SRoute, build_initial, change_speeds,
                          make_routes, random_perturbation, rvnd_descend,
                          solution_true_cost)
from .setpart import PooledRoute, RoutePool, solve_partition
from .soa import (optimize_speeds, reinitialize_speed_matrix, route_time_warp,
                  update_speed_matrix)

_EPS = 1e-9


def _improves(new_cost: float, old_cost: float) -> bool:
    """Strict improvement beyond float rounding at the cost magnitude."""
    return new_cost < old_cost - (_EPS + 1e-12 * abs(old_cost))


@dataclass(frozen=True)
class SearchParams:
    """Termination and pooling knobs of the multi-start search."""

    n_restarts: int = 20
    n_ils: Optional[int] = None       # defaults to n/n_ils_divisor + 5m at solve time
    n_ils_divisor: int = 1
    n_sp: int = 150
    n_pool: int = 2
    t_mip: float = 360.0
    warp_penalty: float = 1e8
    rng_seed: int = 0
    wall_clock_limit: Optional[float] = None

    @classmethod
    def for_problem(cls, kind: str, seed: int = 0, **overrides) -> "SearchParams":
        """Published parameter regimes per problem family."""
        if kind == "FCVRP":
            base = dict(n_restarts=4, t_mip=60.0, n_ils_divisor=5)
        elif kind == "EMVRP":
            base = dict(n_restarts=20, t_mip=60.0)
        else:
            base = dict(n_restarts=20, t_mip=360.0)
        return cls(rng_seed=seed, **{**base, **overrides})

    def iteration_cap(self, inst) -> int:
        if self.n_ils is not None:
            return self.n_ils
        m_eff = effective_fleet(inst)
        return max(1, inst.n // self.n_ils_divisor + 5 * m_eff)


def effective_fleet(inst) -> int:
    """Vehicle count driving the iteration budget: the declared fleet, or
    the capacity lower bound when the fleet is effectively unbounded."""
    lb = max(1, math.ceil(sum(inst.demand[1:]) / inst.capacity - 1e-9))
    if inst.fleet_size >= inst.n:
        return lb
    return inst.fleet_size


@dataclass
class TraceRecord:
    restart: int
    iteration: int
    phase: str
    cost: float
    best_cost: float
    elapsed: float


@dataclass
class SearchTrace:
    records: list = field(default_factory=list)
    sp_log: list = field(default_factory=list)
    percent_dist_other: Optional[float] = None
    wall_time: float = 0.0

    def record(self, progress, restart, iteration, phase, cost, best_cost, t0):
        rec = TraceRecord(restart, iteration, phase, cost, best_cost,
                          time.monotonic() - t0)
        self.records.append(rec)
        if progress is not None:
            progress({"restart": restart, "iteration": iteration, "phase": phase,
                      "cost": cost, "best": best_cost,
                      "elapsed": round(rec.elapsed, 3)})

    def best_curve(self):
        return [r.best_cost for r in self.records]


@dataclass
class SolvedRoute:
    seq: list
    speeds: list
    cost: float
    load: float


@dataclass
class SolveResult:
    cost: float
    routes: list
    feasible: bool
    problem_kind: str
    mode: str
    seed: int
    wall_time: float
    trace: SearchTrace

    @property
    def n_routes(self) -> int:
        return len(self.routes)

    def sequences(self):
        return [list(r.seq) for r in self.routes]

    def total_distance(self, inst) -> float:
        return sum(inst.distance[s[i]][s[i + 1]]
                   for s in self.sequences() for i in range(len(s) - 1))


def _apply_soa(routes: list[SRoute], ctx: SearchContext, use_soa: bool) -> None:
    """Attach optimal speed schedules to every window-feasible route."""
    if not use_soa:
        return
    inst = ctx.inst
    for r in routes:
        if r.is_empty():
            continue
        if route_time_warp(r.seq, inst, inst.speed_max) <= 1e-6:
            r.schedule = optimize_speeds(r.seq, inst)
        else:
            r.schedule = None


def _pool_feasible(pool: RoutePool, routes: list[SRoute], use_soa: bool,
                   origin: str) -> None:
    for r in routes:
        if r.is_empty():
            continue
        if use_soa:
            if r.schedule is not None:
                pool.add(r.seq, r.schedule.cost, r.schedule.speeds, origin)
        elif r.warp <= 1e-6:
            pool.add(r.seq, r.cost, (), origin)


def _as_pooled(routes: list[SRoute], use_soa: bool) -> Optional[list[PooledRoute]]:
    out = []
    for r in routes:
        if r.is_empty():
            continue
        if use_soa:
            if r.schedule is None:
                return None
            out.append(PooledRoute(tuple(r.seq), _mask(r.seq), r.schedule.cost,
                                   tuple(r.schedule.speeds)))
        else:
            if r.warp > 1e-6:
                return None
            out.append(PooledRoute(tuple(r.seq), _mask(r.seq), r.cost))
    return out


def _mask(seq) -> int:
    m = 0
    for c in seq[1:-1]:
        m |= 1 << (c - 1)
    return m


def _materialize(selection, ctx: SearchContext, use_soa: bool) -> list[SRoute]:
    routes = []
    for pr in selection:
        r = SRoute(ctx, list(pr.seq))
        if use_soa:
            r.schedule = optimize_speeds(list(pr.seq), ctx.inst)
        routes.append(r)
    return routes


def solve(inst, params: Optional[SearchParams] = None, mode: str = "dynamic",
          progress: Optional[Callable] = None) -> tuple[SolveResult, SearchTrace]:
    """Run the full search and return the best solution plus its trace."""
    if mode not in ("dynamic", "static"):
        raise ValidationError(f"unknown mode {mode!r}")
    params = params or SearchParams.for_problem(inst.problem_kind)
    rng = random.Random(params.rng_seed)
    is_prp = inst.problem_kind == "PRP"
    use_soa = is_prp
    dynamic = mode == "dynamic" and is_prp

    ctx = SearchContext(inst, warp_penalty=params.warp_penalty)
    n_ils_cap = params.iteration_cap(inst)
    n_trigger = inst.n
    t0 = time.monotonic()
    trace = SearchTrace()

    def out_of_time():
        return (params.wall_clock_limit is not None
                and time.monotonic() - t0 > params.wall_clock_limit)

    p_perm = RoutePool()
    p_temp = RoutePool()
    consec_restarts = 0
    best_all: Optional[list[SRoute]] = None
    f_best_all = math.inf

    for i_r in range(params.n_restarts):
        if out_of_time():
            break
        ctx.matrix.reset()
        routes = build_initial(inst, ctx, rng)
        rvnd_descend(routes, ctx, rng)
        _apply_soa(routes, ctx, use_soa)
        if dynamic:
            update_speed_matrix(ctx.matrix, routes)
        s_best = routes
        f_best = solution_true_cost(routes)
        trace.record(progress, i_r, 0, "restart", f_best,
                     min(f_best, f_best_all), t0)
        i_ils = 0
        reinit_armed = True
        change_armed = True
        while i_ils < n_ils_cap:
            if out_of_time():
                break
            i_ils += 1
            if dynamic and change_armed and i_ils == n_trigger:
                change_speeds(s_best, ctx, rng)
                change_armed = False
                seqs = [list(r.seq) for r in s_best if not r.is_empty()]
            else:
                try:
                    seqs = random_perturbation(s_best, ctx, rng)
                except PerturbationError:
                    # capacity leaves no legal shake; restart the descent
                    # from the incumbent and let neighborhood order vary
                    seqs = [list(r.seq) for r in s_best if not r.is_empty()]
            routes = make_routes(ctx, seqs)
            rvnd_descend(routes, ctx, rng)
            _apply_soa(routes, ctx, use_soa)
            if dynamic:
                update_speed_matrix(ctx.matrix, routes)
            _pool_feasible(p_temp, routes, use_soa, "temp")
            f = solution_true_cost(routes)
            trace.record(progress, i_r, i_ils, "ils", f,
                         min(f_best, f_best_all), t0)
            if _improves(f, f_best):
                s_best = routes
                f_best = f
                i_ils = 0
                reinit_armed = True
                change_armed = True
            if dynamic and reinit_armed and i_ils >= n_ils_cap / 2:
                reinitialize_speed_matrix(ctx.matrix, s_best)
                reinit_armed = False

        if (inst.n <= params.n_sp and i_r == params.n_restarts - 1) \
                or inst.n > params.n_sp:
            s_best, f_best = _sp_phase(s_best, f_best, p_temp, p_perm, ctx,
                                       rng, params, use_soa, trace, progress,
                                       i_r, t0)
        if best_all is None or _improves(f_best, f_best_all):
            best_all = s_best
            f_best_all = f_best
        _pool_feasible(p_perm, s_best, use_soa, "perm")
        consec_restarts += 1
        if consec_restarts >= params.n_pool:
            p_temp.clear()
            consec_restarts = 0

    wall = time.monotonic() - t0
    trace.wall_time = wall
    result = _build_result(best_all, f_best_all, inst, ctx, mode, params,
                           use_soa, wall, trace)
    trace.percent_dist_other = (percent_dist_other_speeds(result, ctx)
                                if use_soa and result.feasible else None)
    return result, trace


def _sp_phase(s_best, f_best, p_temp, p_perm, ctx, rng, params, use_soa,
              trace, progress, i_r, t0):
    incumbent = _as_pooled(s_best, use_soa)
    if incumbent is None:
        return s_best, f_best  # nothing feasible to recombine around
    candidates = p_temp.routes() + p_perm.routes()

    def on_incumbent(cost, selection):
        routes = _materialize(selection, ctx, use_soa)
        rvnd_descend(routes, ctx, rng)
        _apply_soa(routes, ctx, use_soa)
        _pool_feasible(p_temp, routes, use_soa, "temp")
        f = solution_true_cost(routes)
        if _improves(f, cost):
            pooled = _as_pooled(routes, use_soa)
            if pooled is not None:
                return f, pooled
        return None

    while True:
        res = solve_partition(candidates, ctx.inst.n, ctx.inst.fleet_size,
                              incumbent, f_best, time_limit=params.t_mip,
                              on_incumbent=on_incumbent)
        trace.sp_log.append((i_r, res.cost, res.proven, res.nodes))
        if _improves(res.cost, f_best):
            f_best = res.cost
            incumbent = list(res.routes)
            s_best = _materialize(res.routes, ctx, use_soa)
            trace.record(progress, i_r, -1, "sp", res.cost, f_best, t0)
        else:
            break
    return s_best, f_best


def _build_result(best_all, f_best_all, inst, ctx, mode, params, use_soa,
                  wall, trace) -> SolveResult:
    if best_all is None:
        return SolveResult(cost=math.inf, routes=[], feasible=False,
                           problem_kind=inst.problem_kind, mode=mode,
                           seed=params.rng_seed, wall_time=wall, trace=trace)
    solved = []
    feasible = True
    for r in best_all:
        if r.is_empty():
            continue
        if use_soa:
            if r.schedule is None:
                feasible = False
                solved.append(SolvedRoute(list(r.seq), [], r.cost, r.load))
            else:
                solved.append(SolvedRoute(list(r.seq), list(r.schedule.speeds),
                                          r.schedule.cost, r.load))
        else:
            if r.warp > 1e-6 or r.load > inst.capacity + 1e-9:
                feasible = False
            solved.append(SolvedRoute(list(r.seq),
                                      [1.0] * (len(r.seq) - 1), r.cost, r.load))
    if len(solved) > inst.fleet_size:
        feasible = False
    return SolveResult(cost=f_best_all, routes=solved, feasible=feasible,
                       problem_kind=inst.problem_kind, mode=mode,
                       seed=params.rng_seed, wall_time=wall, trace=trace)


def reference_cost(result: SolveResult, inst) -> float:
    """Recompute the reported cost from the raw sequences with the
    problem's authoritative evaluator (a cross-check for the search cost)."""
    seqs = result.sequences()
    if inst.problem_kind == "FCVRP":
        return fcvrp_cost(seqs, inst)
    if inst.problem_kind == "EMVRP":
        return emvrp_cost(seqs, inst)
    total = 0.0
    for r in result.routes:
        total += optimize_speeds(r.seq, inst).cost if r.speeds else math.inf
    return total


def percent_dist_other_speeds(result: SolveResult, ctx: SearchContext,
                              tol: float = 1e-6) -> float:
    """Share of distance driven at neither reference cruise speed."""
    v_f = ctx.v_fuel
    v_fd = ctx.v_fuel_driver
    total = 0.0
    other = 0.0
    for r in result.routes:
        for i in range(len(r.seq) - 1):
            d = ctx.inst.distance[r.seq[i]][r.seq[i + 1]]
            total += d
            v = r.speeds[i]
            if abs(v - v_f) > tol and abs(v - v_fd) > tol:
                other += d
    return 100.0 * other / total if total > 0 else 0.0
