import random

import numpy as np
import pytest

from greenrouter import kernels, routeval as rv
from greenrouter.localsearch import (ALL_KINDS, INTER_KINDS, SearchContext,
                                     SRoute, build_initial, make_routes,
                                     rvnd_descend, solution_cost)
from conftest import build_instance, random_partition, random_speed_matrix


def all_moves(kind, seqs):
    """Every legal descriptor of one kind over the sequences."""
    out = []
    if kind in INTER_KINDS:
        for r1 in range(len(seqs)):
            for r2 in range(len(seqs)):
                if r1 == r2:
                    continue
                L1, L2 = len(seqs[r1]), len(seqs[r2])
                if kind == "shift10":
                    out += [rv.Move(kind, r1, i, r2, j)
                            for i in range(1, L1 - 1) for j in range(L2 - 1)]
                elif kind == "shift20":
                    out += [rv.Move(kind, r1, i, r2, j)
                            for i in range(1, L1 - 2) for j in range(L2 - 1)]
                elif kind == "swap11":
                    out += [rv.Move(kind, r1, i, r2, j)
                            for i in range(1, L1 - 1) for j in range(1, L2 - 1)]
                elif kind == "swap22":
                    out += [rv.Move(kind, r1, i, r2, j)
                            for i in range(1, L1 - 2) for j in range(1, L2 - 2)]
                else:
                    out += [rv.Move(kind, r1, i, r2, j)
                            for i in range(L1 - 1) for j in range(L2 - 1)]
    else:
        for r1, s in enumerate(seqs):
            L = len(s)
            if kind == "reinsertion":
                out += [rv.Move(kind, r1, i, r1, j)
                        for i in range(1, L - 1) for j in range(L - 1)
                        if j not in (i - 1, i)]
            elif kind in ("oropt2", "oropt3"):
                ln = 2 if kind == "oropt2" else 3
                out += [rv.Move(kind, r1, i, r1, j)
                        for i in range(1, L - ln) for j in range(L - 1)
                        if j <= i - 2 or j >= i + ln]
            elif kind == "exchange":
                out += [rv.Move(kind, r1, i, r1, j)
                        for i in range(1, L - 2) for j in range(i + 1, L - 1)]
            else:
                out += [rv.Move(kind, r1, i, r1, j)
                        for i in range(1, L - 2) for j in range(i + 1, L - 1)]
    return out


def brute_best(ctx_py, routes_py, seqs, kind):
    best = np.inf
    for mv in all_moves(kind, seqs):
        d = rv.evaluate_move(ctx_py, routes_py, mv)
        if d < best:
            best = d
    return best


class TestKernelParity:
    def test_scans_match_python_reference(self):
        rng = random.Random(1234)
        counts = {k: 0 for k in ALL_KINDS}
        for trial in range(70):
            n = rng.randint(6, 14)
            inst = build_instance(rng, n,
                                  window_style=rng.choice(["open", "random"]),
                                  capacity=rng.choice([2500.0, 4000.0, 1e9]))
            matrix = random_speed_matrix(rng, inst)
            sctx = SearchContext(inst, matrix)
            pctx = sctx.ectx
            seqs = random_partition(rng, n, rng.randint(2, 4))
            sroutes = make_routes(sctx, seqs)
            proutes = [rv.Route(pctx, s) for s in seqs]
            # both sides subtract full route costs, so rounding scales with
            # the warped cost magnitude, not with the delta
            scale = sum(abs(r.cost) for r in proutes)
            for kind in ALL_KINDS:
                ref = brute_best(pctx, proutes, seqs, kind)
                if kind in INTER_KINDS:
                    got = np.inf
                    for x in range(len(sroutes)):
                        for y in range(len(sroutes)):
                            if x == y:
                                continue
                            d, _, _ = {
                                "shift10": kernels.scan_shift10,
                                "shift20": kernels.scan_shift20,
                                "swap11": kernels.scan_swap11,
                                "swap22": kernels.scan_swap22,
                                "twooptstar": kernels.scan_twooptstar,
                            }[kind](sroutes[x].arr, sroutes[x].pre, sroutes[x].suf,
                                    sroutes[y].arr, sroutes[y].pre, sroutes[y].suf,
                                    *sctx.kernel_args())
                            got = min(got, d)
                else:
                    got = np.inf
                    for r in sroutes:
                        if len(r.seq) < 4:
                            continue
                        if kind == "reinsertion":
                            d, _, _ = kernels.scan_relocate_segment(
                                r.arr, r.pre, r.suf, 1, *sctx.kernel_args())
                        elif kind == "oropt2":
                            d, _, _ = kernels.scan_relocate_segment(
                                r.arr, r.pre, r.suf, 2, *sctx.kernel_args())
                        elif kind == "oropt3":
                            d, _, _ = kernels.scan_relocate_segment(
                                r.arr, r.pre, r.suf, 3, *sctx.kernel_args())
                        elif kind == "exchange":
                            d, _, _ = kernels.scan_exchange(
                                r.arr, r.pre, r.suf, *sctx.kernel_args())
                        else:
                            d, _, _ = kernels.scan_twoopt(
                                r.arr, r.pre, r.suf, *sctx.kernel_args())
                        got = min(got, d)
                if np.isinf(ref):
                    assert np.isinf(got)
                else:
                    counts[kind] += 1
                    tol = 1e-6 + 1e-12 * scale
                    assert abs(got - ref) <= tol, (kind, got, ref)
        assert all(v >= 25 for v in counts.values()), counts

    def test_build_tables_match_python_route(self):
        rng = random.Random(9)
        for _ in range(40):
            n = rng.randint(4, 12)
            inst = build_instance(rng, n, window_style="random")
            matrix = random_speed_matrix(rng, inst)
            sctx = SearchContext(inst, matrix)
            seq = [0] + rng.sample(range(1, n + 1), rng.randint(2, n)) + [0]
            sr = SRoute(sctx, seq)
            pr = rv.Route(sctx.ectx, seq)
            assert np.allclose(sr.pre, np.array([list(t) for t in pr.pre]),
                               rtol=1e-12, atol=1e-9)
            assert np.allclose(sr.suf, np.array([list(t) for t in pr.suf]),
                               rtol=1e-12, atol=1e-9)
            assert sr.cost == pytest.approx(pr.cost, rel=1e-12, abs=1e-9)


class TestDescent:
    def test_never_increases_cost_and_reaches_local_optimum(self):
        rng = random.Random(77)
        for trial in range(12):
            n = rng.randint(8, 16)
            inst = build_instance(rng, n, window_style="random", capacity=4000.0)
            sctx = SearchContext(inst, debug_checks=True)
            seqs = random_partition(rng, n, 3)
            routes = make_routes(sctx, seqs)
            start_cost = solution_cost(routes)
            rvnd_descend(routes, sctx, rng)
            end_cost = solution_cost(routes)
            assert end_cost <= start_cost + 1e-6
            # customers preserved
            seen = sorted(c for r in routes for c in r.customers())
            assert seen == list(range(1, n + 1))
            # no improving move remains in any neighborhood
            pctx = sctx.ectx
            proutes = [rv.Route(pctx, r.seq) for r in routes]
            cur_seqs = [list(r.seq) for r in routes]
            for kind in ALL_KINDS:
                ref = brute_best(pctx, proutes, cur_seqs, kind)
                assert ref >= -1e-6, (kind, ref)

    def test_four_customer_single_route_reaches_bruteforce_optimum(self):
        from itertools import permutations
        rng = random.Random(5)
        for seed in range(8):
            inst = build_instance(random.Random(seed), 4, window_style="open",
                                  capacity=1e9, fleet_size=1)
            sctx = SearchContext(inst)
            routes = make_routes(sctx, [[0, 1, 2, 3, 4, 0]])
            rvnd_descend(routes, sctx, rng)
            got = solution_cost(routes)
            best = min(
                sum(rv.penalized_cost(rv.fold(sctx.ectx, [0, *perm, 0]), sctx.ectx)
                    for _ in [0])
                for perm in permutations([1, 2, 3, 4]))
            assert got == pytest.approx(best, rel=1e-9)

    def test_descent_prefers_dropping_warp(self):
        # construct two customers with disjoint late windows; a single route
        # serving both in the wrong order carries warp that a swap removes
        rng = random.Random(42)
        inst = build_instance(rng, 2, window_style="open", capacity=1e9)
        d01 = inst.distance[0][1]
        d02 = inst.distance[0][2]
        inst.tw_start[1] = 0.0
        inst.tw_end[1] = d01 / 10.0
        inst.tw_start[2] = d01 / 10.0 + 3600.0
        inst.tw_end[2] = 32400.0
        sctx = SearchContext(inst)
        routes = make_routes(sctx, [[0, 2, 1, 0]])
        assert routes[0].warp > 0
        rvnd_descend(routes, sctx, random.Random(1))
        assert sum(r.warp for r in routes) <= 1e-6


class TestConstruction:
    def test_initial_solution_covers_all_customers(self):
        rng = random.Random(3)
        inst = build_instance(rng, 20, window_style="feasible", capacity=4000.0,
                              fleet_size=6)
        sctx = SearchContext(inst)
        routes = build_initial(inst, sctx, rng)
        seen = sorted(c for r in routes for c in r.customers())
        assert seen == list(range(1, 21))
        assert len(routes) <= 6
        for r in routes:
            assert r.load <= inst.capacity + 1e-9

    def test_initial_deterministic_under_seed(self):
        inst = build_instance(random.Random(8), 15, window_style="feasible",
                              fleet_size=5)
        a = build_initial(inst, SearchContext(inst), random.Random(99))
        b = build_initial(inst, SearchContext(inst), random.Random(99))
        assert [r.seq for r in a] == [r.seq for r in b]
