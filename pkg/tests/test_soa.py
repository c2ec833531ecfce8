import random

import pytest

from greenrouter.energy import (optimal_speed_fuel, optimal_speed_fuel_driver,
                                route_cost)
from greenrouter.errors import InfeasibleRouteError
from greenrouter.oracles import brute_force_speed_oracle, carve_feasible_windows
from greenrouter.soa import (SpeedMatrix, optimize_speeds,
                             reinitialize_speed_matrix, route_time_warp)

from conftest import build_instance


def feasible_case(seed, n_customers, box=40000.0, width_range=(120, 600)):
    rng = random.Random(seed)
    inst = build_instance(rng, n_customers, window_style="open", box=box,
                          service_range=(60.0, 400.0))
    seq = [0] + rng.sample(range(1, n_customers + 1),
                           rng.randint(1, n_customers)) + [0]
    carve_feasible_windows(inst, seq, rng, width_range=width_range)
    return inst, seq


class TestOptimizeSpeeds:
    def test_open_windows_all_fuel_driver_speed(self, rng):
        inst = build_instance(rng, 6, window_style="open")
        vfd = optimal_speed_fuel_driver(inst.objective_params)
        seq = [0, 2, 5, 1, 0]
        sched = optimize_speeds(seq, inst)
        for v in sched.speeds:
            assert v == pytest.approx(vfd, rel=1e-9)
        # no waiting: service starts immediately on arrival
        for arr, start in zip(sched.arrivals[1:], sched.service_starts[1:]):
            assert start == pytest.approx(arr, abs=1e-9)

    def test_zero_violations_on_random_feasible_routes(self):
        for seed in range(120):
            inst, seq = feasible_case(seed, 8)
            assert route_time_warp(seq, inst, inst.speed_max) <= 1e-9
            sched = optimize_speeds(seq, inst)
            for node, start in zip(seq, sched.service_starts):
                assert inst.tw_start[node] - 1e-6 <= start <= inst.tw_end[node] + 1e-6

    def test_speed_bounds_respected(self):
        for seed in range(60):
            inst, seq = feasible_case(seed + 1000, 7)
            vf = optimal_speed_fuel(inst.objective_params)
            sched = optimize_speeds(seq, inst)
            for v in sched.speeds:
                assert vf - 1e-9 <= v <= inst.speed_max + 1e-9

    def test_idempotent_cost(self):
        for seed in range(30):
            inst, seq = feasible_case(seed + 2000, 6)
            first = optimize_speeds(seq, inst)
            second = optimize_speeds(seq, inst)
            assert second.cost == pytest.approx(first.cost, rel=1e-9)

    def test_dominates_fixed_speed_profiles(self):
        for seed in range(60):
            inst, seq = feasible_case(seed + 3000, 7)
            sched = optimize_speeds(seq, inst)
            vmax_bd = route_cost(seq, [inst.speed_max] * (len(seq) - 1), inst)
            assert vmax_bd.windows_ok
            assert sched.cost <= vmax_bd.total + 1e-9
            vfd = optimal_speed_fuel_driver(inst.objective_params)
            vfd_bd = route_cost(seq, [vfd] * (len(seq) - 1), inst)
            if vfd_bd.windows_ok:
                assert sched.cost <= vfd_bd.total + 1e-9

    def test_infeasible_route_raises(self, rng):
        inst = build_instance(rng, 2, window_style="open")
        inst.tw_end[1] = 1.0  # unreachable
        inst.tw_start[1] = 0.0
        with pytest.raises(InfeasibleRouteError):
            optimize_speeds([0, 1, 0], inst)

    def test_empty_route(self, rng):
        inst = build_instance(rng, 2, window_style="open")
        sched = optimize_speeds([0, 0], inst)
        assert sched.cost == 0.0

    def test_waiting_inserted_below_fuel_speed(self, rng):
        # one customer whose window opens far later than any legal arrival:
        # the vehicle must drive at the fuel-optimal speed and wait
        inst = build_instance(rng, 1, window_style="open")
        d = inst.distance[0][1]
        vf = optimal_speed_fuel(inst.objective_params)
        open_at = 3.0 * d / vf
        inst.tw_start[1] = open_at
        inst.tw_end[1] = open_at + 600.0
        sched = optimize_speeds([0, 1, 0], inst)
        assert sched.speeds[0] == pytest.approx(vf, rel=1e-9)
        assert sched.service_starts[1] == pytest.approx(open_at, rel=1e-9)
        assert sched.arrivals[1] < open_at  # waited


class TestAgainstDiscretizedOracle:
    def test_within_tolerance_on_small_routes(self):
        worst = 0.0
        for seed in range(60):
            inst, seq = feasible_case(seed + 4000, 8, width_range=(60, 240))
            sched = optimize_speeds(seq, inst)
            oracle = brute_force_speed_oracle(seq, inst, levels=500)
            assert sched.cost <= oracle * 1.001 + 1e-9
            worst = max(worst, (sched.cost - oracle) / oracle)
        # SOA is continuous, the oracle discretized: SOA should win slightly
        assert worst <= 1e-3

    def test_single_level_equals_vmax_cost(self):
        inst, seq = feasible_case(4100, 5, width_range=(300, 900))
        oracle = brute_force_speed_oracle(seq, inst, levels=1)
        bd = route_cost(seq, [inst.speed_max] * (len(seq) - 1), inst)
        # grid rounding can only delay service starts, one step per node
        wage = inst.objective_params.driver_wage
        assert oracle == pytest.approx(bd.total, abs=wage * len(seq) + 1e-9)
        assert oracle >= bd.total - 1e-9

    def test_open_windows_grid_optimum_near_fuel_driver_speed(self, rng):
        inst = build_instance(rng, 4, window_style="open")
        seq = [0, 1, 3, 0]
        oracle = brute_force_speed_oracle(seq, inst, levels=500)
        vfd = optimal_speed_fuel_driver(inst.objective_params)
        bd = route_cost(seq, [vfd] * (len(seq) - 1), inst)
        assert oracle == pytest.approx(bd.total, rel=1e-4)
        assert oracle >= bd.total - 1e-9


class TestSoaTraceShape:
    def test_eight_stop_worked_example(self):
        # eight stops on a line, one time unit apart at the cruise speed;
        # the sixth visit closes early (late violation 200 s, the worst),
        # the third opens late (early violation 100 s).  The recursion must
        # pin the late violator first, then the early one inside the head
        # segment, and terminate with a feasible schedule.
        from greenrouter.energy import preset
        from greenrouter.instance import Customer, Instance

        params = preset("prp-uk-2012")
        vfd = optimal_speed_fuel_driver(params)
        d = vfd * 1000.0
        horizon = 32400.0
        wins = {3: (3100.0, horizon), 6: (0.0, 5800.0)}
        customers = [
            Customer(i, i * d, 0.0, 10.0, 0.0,
                     *wins.get(i, (0.0, horizon)))
            for i in range(1, 7)
        ]
        matrix = [[abs(i - j) * d for j in range(7)] for i in range(7)]
        inst = Instance(name="worked", depot_x=0.0, depot_y=0.0,
                        depot_tw=(0.0, horizon), customers=customers,
                        fleet_size=1, capacity=100.0, speed_min=5.5,
                        speed_max=25.0, objective_params=params,
                        explicit_distance=matrix)
        trace = []
        seq = [0, 1, 2, 3, 4, 5, 6, 0]
        sched = optimize_speeds(seq, inst, trace=trace)
        assert trace == [(0, 6, 7, "late"), (0, 3, 6, "early")]
        assert sched.service_starts[6] == pytest.approx(5800.0, abs=1e-6)
        assert sched.service_starts[3] == pytest.approx(3100.0, abs=1e-6)
        for node, start in zip(seq, sched.service_starts):
            assert inst.tw_start[node] - 1e-6 <= start <= inst.tw_end[node] + 1e-6

    def test_monotone_service_starts(self):
        inst, seq = feasible_case(5000, 8, width_range=(90, 240))
        sched = optimize_speeds(seq, inst)
        starts = sched.service_starts
        assert all(s2 >= s1 - 1e-9 for s1, s2 in zip(starts, starts[1:]))


class TestSpeedMatrix:
    def test_update_and_query(self, rng):
        inst = build_instance(rng, 5, window_style="open")
        m = SpeedMatrix(inst.n, inst.speed_max)
        assert m.get(1, 2) == inst.speed_max
        m.set_route([0, 1, 2, 0], [20.0, 18.0, 17.0])
        assert m.get(0, 1) == 20.0
        assert m.get(1, 2) == 18.0
        assert m.get(2, 0) == 17.0
        assert m.get(2, 1) == inst.speed_max  # reverse arc untouched

    def test_disjoint_updates_commute(self, rng):
        inst = build_instance(rng, 6, window_style="open")
        m1 = SpeedMatrix(inst.n, inst.speed_max)
        m2 = SpeedMatrix(inst.n, inst.speed_max)
        m1.set_route([0, 1, 2, 0], [20.0, 19.0, 18.0])
        m1.set_route([0, 3, 4, 0], [17.0, 16.0, 15.0])
        m2.set_route([0, 3, 4, 0], [17.0, 16.0, 15.0])
        m2.set_route([0, 1, 2, 0], [20.0, 19.0, 18.0])
        assert (m1.values == m2.values).all()

    def test_reset_restores_vmax(self, rng):
        inst = build_instance(rng, 4, window_style="open")
        m = SpeedMatrix(inst.n, inst.speed_max)
        m.set_route([0, 1, 0], [10.0, 10.0])
        m.reset()
        assert m.get(0, 1) == inst.speed_max

    def test_reinitialize_keeps_best_routes(self, rng):
        inst = build_instance(rng, 6, window_style="open")
        m = SpeedMatrix(inst.n, inst.speed_max)
        m.set_route([0, 5, 0], [11.0, 11.0])  # exploration noise

        class FakeRoute:
            def __init__(self, seq, speeds):
                self.seq = seq
                self.schedule = type("S", (), {"speeds": speeds})()

        best = [FakeRoute([0, 1, 2, 0], [20.0, 19.0, 18.0])]
        reinitialize_speed_matrix(m, best)
        assert m.get(0, 5) == inst.speed_max  # noise cleared
        assert m.get(1, 2) == 19.0            # incumbent restored
