"""Subsequence aggregates and amortized O(1) move evaluation.

Every contiguous visit sequence is summarized by nine numbers:

    T    minimum duration (service + travel + forced waiting)
    TW   minimum time warp (lateness absorbed when windows are relaxed)
    E,L  earliest/latest start at the first vertex achieving (T, TW)
    Q    cumulated load
    D    distance
    TT   travel time
    QD   load x distance, with each unit of load charged over the
         distance it is actually carried
    SSD  speed^2 x distance

Aggregates of two adjacent subsequences combine in constant time, so a
candidate move is priced by concatenating a handful of cached prefix,
suffix and segment aggregates instead of rescanning routes.  Arc travel
times come from the shared speed matrix at evaluation time.

This module is the plain-Python reference for that algebra; the jitted
scan kernels in ``kernels`` mirror it for the hot loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError

INFEASIBLE = float("inf")

# index names for the nine-field aggregate tuples
T, TW, E, L, Q, D, TT, QD, SSD = range(9)


@dataclass
class EvalContext:
    """Everything a move evaluation needs: node data, matrices, weights."""

    dist: list            # (n+1) x (n+1) meters
    spd: list             # (n+1) x (n+1) current decision speeds, m/s
    tw_start: list
    tw_end: list
    service: list
    demand: list
    fuel_price: float
    w1: float
    w2: float
    w3: float
    w4: float
    driver_wage: float
    warp_penalty: float
    capacity: float
    max_duration: float   # inf when unconstrained

    @classmethod
    def from_instance(cls, inst, spd) -> "EvalContext":
        """Search weights for the instance's objective.

        The fuel/driver form prices travel time, distance, load-distance
        and speed^2-distance; the fixed-speed variants are linear in
        distance and load-distance, so they reuse the same aggregate
        cost with the other coefficients zeroed.
        """
        p = inst.objective_params
        if inst.problem_kind == "FCVRP":
            w1, w2, w3, w4 = 0.0, p.rho_0, (p.rho_star - p.rho_0) / inst.capacity, 0.0
            fuel_price, wage = p.fuel_price, 0.0
        elif inst.problem_kind == "EMVRP":
            w1, w2, w3, w4 = 0.0, p.empty_weight, 1.0, 0.0
            fuel_price, wage = 1.0, 0.0
        else:
            w1, w2, w3, w4 = p.w1, p.w2, p.w3, p.w4
            fuel_price, wage = p.fuel_price, p.driver_wage
        return cls(
            dist=inst.distance, spd=spd,
            tw_start=inst.tw_start, tw_end=inst.tw_end,
            service=inst.service_time, demand=inst.demand,
            fuel_price=fuel_price, w1=w1, w2=w2, w3=w3, w4=w4,
            driver_wage=wage, warp_penalty=p.warp_penalty,
            capacity=inst.capacity,
            max_duration=(inst.max_route_duration
                          if inst.max_route_duration is not None else float("inf")),
        )


def single(ctx: EvalContext, node: int, first: bool = False) -> tuple:
    """Aggregate of a one-vertex sequence.

    A leading depot gets E = L = 0 so the schedule cannot delay departure.
    """
    if first:
        return (ctx.service[node], 0.0, 0.0, 0.0, ctx.demand[node], 0.0, 0.0, 0.0, 0.0)
    return (ctx.service[node], 0.0, ctx.tw_start[node], ctx.tw_end[node],
            ctx.demand[node], 0.0, 0.0, 0.0, 0.0)


def concat(x: tuple, y: tuple, delta: float, d: float, v: float) -> tuple:
    """Combine aggregates of two adjacent subsequences linked by one arc."""
    t1, w1, e1, l1, q1, d1, tt1, qd1, ss1 = x
    t2, w2, e2, l2, q2, d2, tt2, qd2, ss2 = y
    gap = t1 - w1 + delta
    dwt = e2 - gap - l1
    if dwt < 0.0:
        dwt = 0.0
    dtw = e1 + gap - l2
    if dtw < 0.0:
        dtw = 0.0
    e_shift = e2 - gap
    e_new = (e_shift if e_shift > e1 else e1) - dwt
    l_shift = l2 - gap
    l_new = (l_shift if l_shift < l1 else l1) + dtw
    return (
        t1 + t2 + delta + dwt,
        w1 + w2 + dtw,
        e_new,
        l_new,
        q1 + q2,
        d1 + d2 + d,
        tt1 + tt2 + delta,
        qd1 + qd2 + q2 * (d1 + d),
        ss1 + ss2 + v * v * d,
    )


def link(ctx: EvalContext, u: int, w: int) -> tuple[float, float, float]:
    """(travel time, distance, speed) of arc u->w at current matrix speeds."""
    d = ctx.dist[u][w]
    v = ctx.spd[u][w]
    return ((d / v if d > 0.0 else 0.0), d, v)


def join(ctx: EvalContext, x: tuple, xlast: int, y: tuple, yfirst: int) -> tuple:
    dlt, d, v = link(ctx, xlast, yfirst)
    return concat(x, y, dlt, d, v)


def fold(ctx: EvalContext, seq: Sequence[int]) -> tuple:
    """Aggregate of a whole sequence, folding singles left to right."""
    acc = single(ctx, seq[0], first=seq[0] == 0)
    for i in range(1, len(seq)):
        acc = join(ctx, acc, seq[i - 1], single(ctx, seq[i]), seq[i])
    return acc


def penalized_cost(ads: tuple, ctx: EvalContext) -> float:
    """Fuel + wage + warp penalty of a depot-to-depot aggregate."""
    return (ctx.fuel_price * (ctx.w1 * ads[TT] + ctx.w2 * ads[D]
                              + ctx.w3 * ads[QD] + ctx.w4 * ads[SSD])
            + ctx.driver_wage * ads[T]
            + ctx.warp_penalty * ads[TW])


def route_feasible_load_duration(ads: tuple, ctx: EvalContext) -> bool:
    return ads[Q] <= ctx.capacity + 1e-9 and ads[T] <= ctx.max_duration + 1e-9


class Route:
    """A depot-bounded route with cached prefix/suffix aggregates.

    ``pre[k]`` spans visits 0..k (leading depot pinned to depart at 0),
    ``suf[k]`` spans visits k..end.  Caches are rebuilt whenever the
    sequence changes, so they are always consistent with ``seq``.
    """

    __slots__ = ("seq", "pre", "suf", "ads", "cost", "load", "schedule")

    def __init__(self, ctx: EvalContext, seq: Sequence[int]):
        if seq[0] != 0 or seq[-1] != 0:
            raise ValidationError("route must start and end at the depot")
        self.seq = list(seq)
        self.schedule = None
        self.rebuild(ctx)

    def rebuild(self, ctx: EvalContext) -> None:
        seq = self.seq
        n = len(seq)
        pre = [None] * n
        suf = [None] * n
        pre[0] = single(ctx, seq[0], first=True)
        for i in range(1, n):
            pre[i] = join(ctx, pre[i - 1], seq[i - 1], single(ctx, seq[i]), seq[i])
        suf[n - 1] = single(ctx, seq[n - 1])
        for i in range(n - 2, 0, -1):
            suf[i] = join(ctx, single(ctx, seq[i]), seq[i], suf[i + 1], seq[i + 1])
        suf[0] = join(ctx, single(ctx, seq[0], first=True), seq[0], suf[1], seq[1])
        self.pre = pre
        self.suf = suf
        self.ads = pre[n - 1]
        self.cost = penalized_cost(self.ads, ctx)
        self.load = self.ads[Q]

    def customers(self) -> list[int]:
        return self.seq[1:-1]

    def __len__(self):
        return len(self.seq)


class Solution:
    """A set of routes covering every customer exactly once."""

    __slots__ = ("routes",)

    def __init__(self, routes: list[Route]):
        self.routes = routes

    def cost(self) -> float:
        return sum(r.cost for r in self.routes)

    def sequences(self) -> list[list[int]]:
        return [list(r.seq) for r in self.routes]

    def customer_multiset(self):
        out = []
        for r in self.routes:
            out.extend(r.customers())
        return sorted(out)

    def total_warp(self) -> float:
        return sum(r.ads[TW] for r in self.routes)


@dataclass(frozen=True)
class Move:
    """Descriptor of one local-search move.

    Positions index the original sequences; ``r1``/``r2`` index routes in
    the solution (equal for intra-route kinds).
    """

    kind: str
    r1: int
    i: int
    r2: int = -1
    j: int = -1


def apply_move(seqs: list[list[int]], mv: Move) -> list[list[int]]:
    """Return new sequences with the move applied (pure, for checking)."""
    seqs = [list(s) for s in seqs]
    k = mv.kind
    if k == "shift10":
        s1, s2 = seqs[mv.r1], seqs[mv.r2]
        u = s1.pop(mv.i)
        s2.insert(mv.j + 1, u)
    elif k == "shift20":
        s1, s2 = seqs[mv.r1], seqs[mv.r2]
        seg = s1[mv.i:mv.i + 2]
        del s1[mv.i:mv.i + 2]
        seqs[mv.r2][mv.j + 1:mv.j + 1] = seg
    elif k == "swap11":
        s1, s2 = seqs[mv.r1], seqs[mv.r2]
        s1[mv.i], s2[mv.j] = s2[mv.j], s1[mv.i]
    elif k == "swap22":
        s1, s2 = seqs[mv.r1], seqs[mv.r2]
        s1[mv.i:mv.i + 2], s2[mv.j:mv.j + 2] = s2[mv.j:mv.j + 2], s1[mv.i:mv.i + 2]
    elif k == "twooptstar":
        s1, s2 = seqs[mv.r1], seqs[mv.r2]
        new1 = s1[:mv.i + 1] + s2[mv.j + 1:]
        new2 = s2[:mv.j + 1] + s1[mv.i + 1:]
        seqs[mv.r1], seqs[mv.r2] = new1, new2
    elif k == "reinsertion":
        s = seqs[mv.r1]
        u = s[mv.i]
        if mv.j < mv.i:
            del s[mv.i]
            s.insert(mv.j + 1, u)
        else:
            s.insert(mv.j + 1, u)
            del s[mv.i]
    elif k in ("oropt2", "oropt3"):
        ln = 2 if k == "oropt2" else 3
        s = seqs[mv.r1]
        seg = s[mv.i:mv.i + ln]
        if mv.j < mv.i:
            del s[mv.i:mv.i + ln]
            s[mv.j + 1:mv.j + 1] = seg
        else:
            s[mv.j + 1:mv.j + 1] = seg
            del s[mv.i:mv.i + ln]
    elif k == "exchange":
        s = seqs[mv.r1]
        s[mv.i], s[mv.j] = s[mv.j], s[mv.i]
    elif k == "twoopt":
        s = seqs[mv.r1]
        s[mv.i:mv.j + 1] = reversed(s[mv.i:mv.j + 1])
    else:
        raise ValidationError(f"unknown move kind {k!r}")
    return [s for s in seqs if len(s) > 2]


def _seg_ads(ctx: EvalContext, seq: Sequence[int], i: int, j: int) -> tuple:
    """Aggregate of seq[i..j] (customers only, forward order)."""
    acc = single(ctx, seq[i])
    for k in range(i + 1, j + 1):
        acc = join(ctx, acc, seq[k - 1], single(ctx, seq[k]), seq[k])
    return acc


def _rev_seg_ads(ctx: EvalContext, seq: Sequence[int], i: int, j: int) -> tuple:
    """Aggregate of seq[i..j] traversed in reverse order."""
    acc = single(ctx, seq[j])
    for k in range(j - 1, i - 1, -1):
        acc = join(ctx, acc, seq[k + 1], single(ctx, seq[k]), seq[k])
    return acc


def evaluate_move(ctx: EvalContext, routes: list[Route], mv: Move) -> float:
    """Cost delta of a move, from cached aggregates only.

    Returns +inf when the move violates capacity or the duration cap.
    Segment aggregates of the few moved/reversed customers are folded on
    the fly; everything else comes from the prefix/suffix caches.
    """
    k = mv.kind
    if k in ("shift10", "shift20", "swap11", "swap22", "twooptstar"):
        r1, r2 = routes[mv.r1], routes[mv.r2]
        s1, s2 = r1.seq, r2.seq
        if k == "shift10":
            u = s1[mv.i]
            new1 = join(ctx, r1.pre[mv.i - 1], s1[mv.i - 1], r1.suf[mv.i + 1], s1[mv.i + 1])
            mid = join(ctx, r2.pre[mv.j], s2[mv.j], single(ctx, u), u)
            new2 = join(ctx, mid, u, r2.suf[mv.j + 1], s2[mv.j + 1])
        elif k == "shift20":
            seg = _seg_ads(ctx, s1, mv.i, mv.i + 1)
            new1 = join(ctx, r1.pre[mv.i - 1], s1[mv.i - 1], r1.suf[mv.i + 2], s1[mv.i + 2])
            mid = join(ctx, r2.pre[mv.j], s2[mv.j], seg, s1[mv.i])
            new2 = join(ctx, mid, s1[mv.i + 1], r2.suf[mv.j + 1], s2[mv.j + 1])
        elif k == "swap11":
            u, w = s1[mv.i], s2[mv.j]
            mid1 = join(ctx, r1.pre[mv.i - 1], s1[mv.i - 1], single(ctx, w), w)
            new1 = join(ctx, mid1, w, r1.suf[mv.i + 1], s1[mv.i + 1])
            mid2 = join(ctx, r2.pre[mv.j - 1], s2[mv.j - 1], single(ctx, u), u)
            new2 = join(ctx, mid2, u, r2.suf[mv.j + 1], s2[mv.j + 1])
        elif k == "swap22":
            seg1 = _seg_ads(ctx, s1, mv.i, mv.i + 1)
            seg2 = _seg_ads(ctx, s2, mv.j, mv.j + 1)
            mid1 = join(ctx, r1.pre[mv.i - 1], s1[mv.i - 1], seg2, s2[mv.j])
            new1 = join(ctx, mid1, s2[mv.j + 1], r1.suf[mv.i + 2], s1[mv.i + 2])
            mid2 = join(ctx, r2.pre[mv.j - 1], s2[mv.j - 1], seg1, s1[mv.i])
            new2 = join(ctx, mid2, s1[mv.i + 1], r2.suf[mv.j + 2], s2[mv.j + 2])
        else:  # twooptstar
            new1 = join(ctx, r1.pre[mv.i], s1[mv.i], r2.suf[mv.j + 1], s2[mv.j + 1])
            new2 = join(ctx, r2.pre[mv.j], s2[mv.j], r1.suf[mv.i + 1], s1[mv.i + 1])
        if not (route_feasible_load_duration(new1, ctx)
                and route_feasible_load_duration(new2, ctx)):
            return INFEASIBLE
        return (penalized_cost(new1, ctx) + penalized_cost(new2, ctx)
                - r1.cost - r2.cost)

    r = routes[mv.r1]
    s = r.seq
    if k in ("reinsertion", "oropt2", "oropt3"):
        ln = {"reinsertion": 1, "oropt2": 2, "oropt3": 3}[k]
        seg = _seg_ads(ctx, s, mv.i, mv.i + ln - 1)
        if mv.j < mv.i:
            head = join(ctx, r.pre[mv.j], s[mv.j], seg, s[mv.i])
            mid = _seg_ads(ctx, s, mv.j + 1, mv.i - 1)
            head = join(ctx, head, s[mv.i + ln - 1], mid, s[mv.j + 1])
            new = join(ctx, head, s[mv.i - 1], r.suf[mv.i + ln], s[mv.i + ln])
        else:
            head = join(ctx, r.pre[mv.i - 1], s[mv.i - 1],
                        _seg_ads(ctx, s, mv.i + ln, mv.j), s[mv.i + ln])
            head = join(ctx, head, s[mv.j], seg, s[mv.i])
            new = join(ctx, head, s[mv.i + ln - 1], r.suf[mv.j + 1], s[mv.j + 1])
    elif k == "exchange":
        i, j = mv.i, mv.j
        u, w = s[i], s[j]
        head = join(ctx, r.pre[i - 1], s[i - 1], single(ctx, w), w)
        if j > i + 1:
            head = join(ctx, head, w, _seg_ads(ctx, s, i + 1, j - 1), s[i + 1])
            head = join(ctx, head, s[j - 1], single(ctx, u), u)
        else:
            head = join(ctx, head, w, single(ctx, u), u)
        new = join(ctx, head, u, r.suf[j + 1], s[j + 1])
    elif k == "twoopt":
        rev = _rev_seg_ads(ctx, s, mv.i, mv.j)
        head = join(ctx, r.pre[mv.i - 1], s[mv.i - 1], rev, s[mv.j])
        new = join(ctx, head, s[mv.i], r.suf[mv.j + 1], s[mv.j + 1])
    else:
        raise ValidationError(f"unknown move kind {k!r}")
    if not route_feasible_load_duration(new, ctx):
        return INFEASIBLE
    return penalized_cost(new, ctx) - r.cost
