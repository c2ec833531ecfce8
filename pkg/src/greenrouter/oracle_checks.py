"""Self-contained verifier runs behind the ``oracle`` CLI subcommand.

Each check pits a fast production path against its brute-force referee
on freshly drawn random cases and prints one PASS/FAIL line.  Sizes are
chosen to finish in well under a minute; the pytest suite runs the same
comparisons at full acceptance scale.
"""

from __future__ import annotations

import random

from . import routeval as rv
from .instance import random_prp_instance
from .oracles import (brute_force_partition, brute_force_speed_oracle,
                      carve_feasible_windows, simulate)
from .setpart import PooledRoute, route_mask, solve_partition
from .soa import SpeedMatrix, optimize_speeds, route_time_warp


def _random_instance(rng, n, horizon=32400.0):
    inst = random_prp_instance(n, seed=rng.randrange(1 << 30), fleet_size=4,
                               capacity=1e9, box_km=50.0)
    for c in range(1, n + 1):
        start = rng.uniform(0, horizon * 0.7)
        inst.tw_start[c] = start
        inst.tw_end[c] = start + rng.uniform(900.0, horizon * 0.3)
    return inst


def check_fold_vs_simulator(rng, cases=300) -> bool:
    for _ in range(cases):
        n = rng.randint(2, 12)
        inst = _random_instance(rng, n)
        matrix = SpeedMatrix(n, 25.0)
        for i in range(n + 1):
            for j in range(n + 1):
                matrix.values[i, j] = rng.uniform(12.0, 25.0)
        ctx = rv.EvalContext.from_instance(inst, matrix.values)
        seq = [0] + rng.sample(range(1, n + 1), rng.randint(1, n)) + [0]
        ads = rv.fold(ctx, seq)
        speeds = [matrix.values[seq[i - 1], seq[i]] for i in range(1, len(seq))]
        sim = simulate(seq, inst, speeds, 0.0)
        if abs(ads[rv.T] - sim.duration) > 1e-9 or abs(ads[rv.TW] - sim.warp) > 1e-9:
            return False
        if abs(ads[rv.QD] - sim.load_distance) > 1e-9 * max(1.0, sim.load_distance):
            return False
    return True


def check_soa_vs_dp(rng, cases=25) -> bool:
    for _ in range(cases):
        n = rng.randint(3, 7)
        inst = random_prp_instance(n, seed=rng.randrange(1 << 30),
                                   fleet_size=2, capacity=1e9, box_km=35.0,
                                   service_time=120.0)
        seq = [0] + rng.sample(range(1, n + 1), n) + [0]
        carve_feasible_windows(inst, seq, rng, width_range=(60, 240))
        if route_time_warp(seq, inst, inst.speed_max) > 1e-9:
            return False
        cost = optimize_speeds(seq, inst).cost
        ref = brute_force_speed_oracle(seq, inst, levels=500)
        if cost > ref * 1.001 + 1e-9:
            return False
    return True


def check_partition_vs_enumeration(rng, cases=20) -> bool:
    for _ in range(cases):
        n = rng.randint(4, 10)
        pool = []
        ids = list(range(1, n + 1))
        rng.shuffle(ids)
        k = rng.randint(1, 3)
        cuts = sorted(rng.sample(range(1, n), k - 1)) if k > 1 else []
        prev = 0
        for cut in cuts + [n]:
            seq = (0, *ids[prev:cut], 0)
            pool.append(PooledRoute(seq, route_mask(seq), rng.uniform(10, 100)))
            prev = cut
        for _ in range(rng.randint(3, 10)):
            size = rng.randint(1, max(1, n // 2))
            seq = (0, *rng.sample(range(1, n + 1), size), 0)
            pool.append(PooledRoute(seq, route_mask(seq), rng.uniform(5, 120)))
        inc, covered = [], 0
        for r in sorted(pool, key=lambda r: -r.size):
            if not (r.mask & covered):
                inc.append(r)
                covered |= r.mask
        if covered != (1 << n) - 1:
            continue
        m = rng.randint(max(2, len(inc)), 6)
        res = solve_partition(pool, n, m, inc, sum(r.cost for r in inc))
        ref_cost, ref = brute_force_partition([r.mask for r in pool],
                                              [r.cost for r in pool], n, m)
        target = min(ref_cost, sum(r.cost for r in inc))
        if abs(res.cost - target) > 1e-6:
            return False
    return True


def run_all(seed: int = 0, verbose: bool = False) -> list[str]:
    """Run every verifier; returns the names of the failing ones."""
    checks = [
        ("aggregate-fold-vs-schedule-simulator", check_fold_vs_simulator),
        ("speed-optimizer-vs-discretized-dp", check_soa_vs_dp),
        ("partition-solver-vs-subset-enumeration", check_partition_vs_enumeration),
    ]
    failures = []
    for name, fn in checks:
        ok = fn(random.Random(seed))
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)
    return failures
