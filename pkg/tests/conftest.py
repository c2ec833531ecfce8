import random

import pytest

from greenrouter import routeval as rv

from greenrouter.instance import Customer, Instance
from greenrouter.energy import preset
from greenrouter.soa import SpeedMatrix


def build_instance(rng: random.Random, n: int, *, window_style="random",
                   fleet_size=4, capacity=4000.0, box=60000.0,
                   service_range=(300.0, 1200.0), demand_range=(300, 1200),
                   horizon=32400.0) -> Instance:
    """Random instance for property tests.

    ``window_style``: "open" leaves every window at the full horizon,
    "random" draws arbitrary subwindows (routes may be infeasible, which
    the ADS must price as warp), "feasible" windows are carved around a
    simulated top-speed visit so single-customer routes stay feasible.
    """
    customers = []
    for cid in range(1, n + 1):
        x, y = rng.uniform(0, box), rng.uniform(0, box)
        service = rng.uniform(*service_range)
        if window_style == "open":
            tw = (0.0, horizon)
        elif window_style == "random":
            start = rng.uniform(0, horizon * 0.8)
            tw = (start, start + rng.uniform(600.0, horizon * 0.3))
        else:
            d = ((x - box / 2) ** 2 + (y - box / 2) ** 2) ** 0.5
            lo = d / 25.0
            start = rng.uniform(lo, max(lo, horizon * 0.5))
            tw = (start, start + rng.uniform(1800.0, 7200.0))
        customers.append(Customer(cid, x, y, float(rng.randint(*demand_range)),
                                  service, tw[0], tw[1]))
    return Instance(
        name=f"test-{n}", depot_x=box / 2, depot_y=box / 2,
        depot_tw=(0.0, horizon), customers=customers,
        fleet_size=fleet_size, capacity=capacity,
        speed_min=5.5, speed_max=25.0,
        objective_params=preset("prp-uk-2012"), problem_kind="PRP",
    )


def random_speed_matrix(rng: random.Random, inst, lo=10.0, hi=25.0) -> SpeedMatrix:
    m = SpeedMatrix(inst.n, inst.speed_max)
    for i in range(inst.n + 1):
        for j in range(inst.n + 1):
            m.values[i, j] = rng.uniform(lo, hi)
    return m


def random_partition(rng: random.Random, n: int, routes: int) -> list[list[int]]:
    """Split customers 1..n into ``routes`` nonempty depot-bounded sequences."""
    ids = list(range(1, n + 1))
    rng.shuffle(ids)
    cuts = sorted(rng.sample(range(1, n), routes - 1)) if routes > 1 else []
    seqs = []
    prev = 0
    for c in cuts + [n]:
        seqs.append([0] + ids[prev:c] + [0])
        prev = c
    return seqs


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_move(rng, seqs):
    """Draw one valid move descriptor of a random kind for the sequences."""
    kinds = ["shift10", "shift20", "swap11", "swap22", "twooptstar",
             "reinsertion", "oropt2", "oropt3", "exchange", "twoopt"]
    rng.shuffle(kinds)
    for kind in kinds:
        inter = kind in ("shift10", "shift20", "swap11", "swap22", "twooptstar")
        if inter:
            if len(seqs) < 2:
                continue
            r1, r2 = rng.sample(range(len(seqs)), 2)
            L1, L2 = len(seqs[r1]), len(seqs[r2])
            if kind == "shift10":
                if L1 < 3:
                    continue
                return rv.Move(kind, r1, rng.randint(1, L1 - 2), r2,
                               rng.randint(0, L2 - 2))
            if kind == "shift20":
                if L1 < 4:
                    continue
                return rv.Move(kind, r1, rng.randint(1, L1 - 3), r2,
                               rng.randint(0, L2 - 2))
            if kind == "swap11":
                if L1 < 3 or L2 < 3:
                    continue
                return rv.Move(kind, r1, rng.randint(1, L1 - 2), r2,
                               rng.randint(1, L2 - 2))
            if kind == "swap22":
                if L1 < 4 or L2 < 4:
                    continue
                return rv.Move(kind, r1, rng.randint(1, L1 - 3), r2,
                               rng.randint(1, L2 - 3))
            if kind == "twooptstar":
                return rv.Move(kind, r1, rng.randint(0, L1 - 2), r2,
                               rng.randint(0, L2 - 2))
        else:
            r1 = rng.randrange(len(seqs))
            L = len(seqs[r1])
            if kind == "reinsertion":
                if L < 4:
                    continue
                i = rng.randint(1, L - 2)
                js = [j for j in range(0, L - 1) if j not in (i - 1, i)]
                return rv.Move(kind, r1, i, r1, rng.choice(js))
            if kind in ("oropt2", "oropt3"):
                ln = 2 if kind == "oropt2" else 3
                if L < ln + 3:
                    continue
                i = rng.randint(1, L - 1 - ln)
                js = [j for j in range(0, L - 1)
                      if j <= i - 2 or j >= i + ln]
                if not js:
                    continue
                return rv.Move(kind, r1, i, r1, rng.choice(js))
            if kind == "exchange":
                if L < 4:
                    continue
                i, j = sorted(rng.sample(range(1, L - 1), 2))
                return rv.Move(kind, r1, i, r1, j)
            if kind == "twoopt":
                if L < 4:
                    continue
                i, j = sorted(rng.sample(range(1, L - 1), 2))
                return rv.Move(kind, r1, i, r1, j)
    return None
