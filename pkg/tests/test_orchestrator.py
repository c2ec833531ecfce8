import math

import pytest

from greenrouter.energy import optimal_speed_fuel_driver, preset
from greenrouter.instance import (GeneratorConfig, SET_C_WIDTHS,
                                  generate_tight_instance, random_prp_instance)
from greenrouter.localsearch import SearchContext
from greenrouter.oracles import exhaustive_optimum
from greenrouter.orchestrator import (SearchParams, SolveResult,
                                      effective_fleet, percent_dist_other_speeds,
                                      reference_cost, solve)
from greenrouter.soa import optimize_speeds


def tight_instance(n, seed, *, widths=SET_C_WIDTHS, demands=(900, 1700),
                   fleet=None, capacity=3650.0, box_km=60.0):
    base = random_prp_instance(n, seed=seed, fleet_size=n,
                               capacity=capacity, box_km=box_km,
                               demand_range=demands, service_time=600.0)
    if fleet is None:
        fleet = math.ceil(sum(base.demand[1:]) / capacity) + 2
    base.fleet_size = min(fleet, n)
    return generate_tight_instance(
        GeneratorConfig(base=base, width_range=widths, rng_seed=seed + 1))


class TestSolveBasics:
    def test_single_customer_instance_solved_to_closed_form(self):
        inst = random_prp_instance(1, seed=4, fleet_size=1)
        params = SearchParams(n_restarts=2, rng_seed=0)
        result, trace = solve(inst, params)
        assert result.feasible
        assert result.n_routes == 1
        expect = optimize_speeds([0, 1, 0], inst).cost
        assert result.cost == pytest.approx(expect, rel=1e-9)
        # open horizon: both arcs cruise at the fuel-plus-wage optimum
        vfd = optimal_speed_fuel_driver(inst.objective_params)
        for v in result.routes[0].speeds:
            assert v == pytest.approx(vfd, rel=1e-9)

    def test_deterministic_replay(self):
        inst = tight_instance(8, seed=12)
        params = SearchParams(n_restarts=3, rng_seed=42)
        r1, t1 = solve(inst, params)
        r2, t2 = solve(inst, params)
        assert r1.cost == r2.cost
        assert r1.sequences() == r2.sequences()
        assert ([(x.restart, x.iteration, x.phase, x.cost) for x in t1.records]
                == [(x.restart, x.iteration, x.phase, x.cost) for x in t2.records])

    def test_monotone_best_curve_and_zero_warp(self):
        inst = tight_instance(10, seed=3)
        result, trace = solve(inst, SearchParams(n_restarts=3, rng_seed=7))
        curve = trace.best_curve()
        assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(curve, curve[1:]))
        assert result.feasible
        for r in result.routes:
            sched = optimize_speeds(r.seq, inst)  # raises if infeasible
            assert sched.cost == pytest.approx(r.cost, rel=1e-9)
        assert result.n_routes <= inst.fleet_size

    def test_each_customer_served_exactly_once(self):
        inst = tight_instance(12, seed=9)
        result, _ = solve(inst, SearchParams(n_restarts=2, rng_seed=1))
        seen = sorted(c for s in result.sequences() for c in s[1:-1])
        assert seen == list(range(1, 13))

    def test_effective_fleet_for_unbounded_instances(self):
        inst = random_prp_instance(10, seed=1, fleet_size=10, capacity=3650.0,
                                   demand_range=(900, 1700))
        assert effective_fleet(inst) == math.ceil(
            sum(inst.demand[1:]) / inst.capacity - 1e-9)


class TestAgainstExhaustiveOptimum:
    def test_reaches_optimum_on_tiny_instances(self):
        hits = 0
        for seed in range(6):
            inst = tight_instance(7, seed=100 + seed, fleet=4)
            opt_cost, opt_routes = exhaustive_optimum(inst)
            best = math.inf
            for run_seed in range(3):
                result, _ = solve(inst, SearchParams(
                    n_restarts=5, rng_seed=run_seed))
                assert result.feasible
                assert result.cost >= opt_cost - 1e-6  # never below true optimum
                best = min(best, result.cost)
            if best <= opt_cost + max(1e-6, 1e-6 * opt_cost):
                hits += 1
        assert hits >= 5, f"optimum found on only {hits}/6 tiny instances"


class TestModes:
    def test_static_mode_never_writes_matrix(self):
        inst = tight_instance(8, seed=21)
        params = SearchParams(n_restarts=2, rng_seed=3)
        result, _ = solve(inst, params, mode="static")
        assert result.feasible
        assert result.mode == "static"

    def test_modes_coincide_when_dynamics_disabled_by_open_windows(self):
        # fully open windows: optimized speeds are always the fuel+wage
        # optimum, so the modes differ only through matrix bookkeeping
        inst = random_prp_instance(8, seed=33, fleet_size=3,
                                   demand_range=(400, 900))
        vfd = optimal_speed_fuel_driver(inst.objective_params)
        for mode in ("dynamic", "static"):
            result, _ = solve(inst, SearchParams(n_restarts=2, rng_seed=5),
                              mode=mode)
            assert result.feasible
            for r in result.routes:
                for v in r.speeds:
                    assert v == pytest.approx(vfd, rel=1e-9)

    def test_wall_clock_budget_respected(self):
        inst = tight_instance(15, seed=2)
        params = SearchParams(n_restarts=50, rng_seed=1, wall_clock_limit=1.0)
        result, trace = solve(inst, params)
        assert trace.wall_time < 6.0  # limit plus one iteration of slack


class TestVariantProblems:
    def fcvrp_instance(self, n=10, seed=5):
        inst = random_prp_instance(n, seed=seed, fleet_size=n, capacity=4000.0,
                                   demand_range=(400, 1200), service_time=0.0)
        inst.problem_kind = "FCVRP"
        inst.objective_params = preset("fcvrp-classic")
        for c in range(1, n + 1):
            inst.tw_start[c] = 0.0
            inst.tw_end[c] = math.inf
        inst.tw_end[0] = math.inf
        object.__setattr__(inst, "speed_min", 1.0)
        object.__setattr__(inst, "speed_max", 1.0)
        return inst

    def test_fcvrp_search_cost_matches_reference_evaluator(self):
        inst = self.fcvrp_instance()
        result, _ = solve(inst, SearchParams(n_restarts=2, rng_seed=9))
        assert result.feasible
        assert result.cost == pytest.approx(reference_cost(result, inst),
                                            rel=1e-9)

    def test_emvrp_search_cost_matches_reference_evaluator(self):
        inst = self.fcvrp_instance(seed=6)
        inst.problem_kind = "EMVRP"
        inst.objective_params = preset("emvrp-classic", capacity=inst.capacity)
        result, _ = solve(inst, SearchParams(n_restarts=2, rng_seed=9))
        assert result.feasible
        assert result.cost == pytest.approx(reference_cost(result, inst),
                                            rel=1e-9)

    def test_published_parameter_regimes(self):
        prp = SearchParams.for_problem("PRP")
        assert (prp.n_restarts, prp.t_mip) == (20, 360.0)
        fc = SearchParams.for_problem("FCVRP")
        assert (fc.n_restarts, fc.t_mip, fc.n_ils_divisor) == (4, 60.0, 5)
        em = SearchParams.for_problem("EMVRP")
        assert (em.n_restarts, em.t_mip, em.n_ils_divisor) == (20, 60.0, 1)


class TestPercentDist:
    def test_all_fuel_driver_speed_is_zero(self):
        inst = random_prp_instance(5, seed=11, fleet_size=2,
                                   demand_range=(200, 500))
        result, trace = solve(inst, SearchParams(n_restarts=1, rng_seed=2))
        assert trace.percent_dist_other == pytest.approx(0.0, abs=1e-9)

    def test_hand_built_mix(self):
        inst = random_prp_instance(2, seed=3, fleet_size=1)
        ctx = SearchContext(inst)
        vfd = ctx.v_fuel_driver
        res = SolveResult(
            cost=0.0, feasible=True, problem_kind="PRP", mode="dynamic",
            seed=0, wall_time=0.0, trace=None,
            routes=[type("R", (), {"seq": [0, 1, 2, 0],
                                   "speeds": [vfd, 24.0, ctx.v_fuel]})()])
        d = inst.distance
        total = d[0][1] + d[1][2] + d[2][0]
        assert percent_dist_other_speeds(res, ctx) == pytest.approx(
            100.0 * d[1][2] / total, rel=1e-9)

    def test_all_vmax_is_hundred(self):
        inst = random_prp_instance(2, seed=3, fleet_size=1)
        ctx = SearchContext(inst)
        res = SolveResult(
            cost=0.0, feasible=True, problem_kind="PRP", mode="dynamic",
            seed=0, wall_time=0.0, trace=None,
            routes=[type("R", (), {"seq": [0, 1, 2, 0],
                                   "speeds": [25.0, 25.0, 25.0]})()])
        assert percent_dist_other_speeds(res, ctx) == pytest.approx(100.0)
