"""Route pool and the exact recombination solver.

Feasible routes discovered during the search are pooled with their
frozen speed profiles and costs.  The recombination step then picks a
minimum-cost subset of pooled routes serving every customer exactly
once with at most ``fleet_size`` vehicles, by depth-first branch and
bound: branch on the uncovered customer with the fewest compatible
routes, try candidate routes cheapest-density first, and prune with a
per-customer cheapest-share bound.  Every new incumbent is surfaced
through a callback so the caller can descend from it and tighten the
upper bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class PooledRoute:
    """A feasible route frozen at pooling time."""

    seq: tuple
    mask: int              # bit i-1 set when customer i is visited
    cost: float
    speeds: tuple = ()
    origin: str = "temp"

    @property
    def size(self) -> int:
        return bin(self.mask).count("1")


def route_mask(seq: Sequence[int]) -> int:
    mask = 0
    for c in seq[1:-1]:
        mask |= 1 << (c - 1)
    return mask


class RoutePool:
    """Deduplicated pooled routes keyed by visit order, cheaper kept."""

    def __init__(self):
        self._routes: dict[tuple, PooledRoute] = {}

    def add(self, seq: Sequence[int], cost: float, speeds: Sequence[float] = (),
            origin: str = "temp", warp: float = 0.0) -> bool:
        if warp > 1e-6:
            raise ValidationError("only feasible (zero-warp) routes may be pooled")
        if len(seq) <= 2:
            return False
        key = tuple(seq)
        cur = self._routes.get(key)
        if cur is not None and cur.cost <= cost:
            return False
        self._routes[key] = PooledRoute(key, route_mask(seq), cost,
                                        tuple(speeds), origin)
        return True

    def clear(self) -> None:
        self._routes.clear()

    def __len__(self) -> int:
        return len(self._routes)

    def routes(self) -> list[PooledRoute]:
        return list(self._routes.values())


@dataclass
class PartitionResult:
    cost: float
    routes: list
    proven: bool
    nodes: int = 0
    incumbents: int = 0


def solve_partition(candidates: Sequence[PooledRoute], n_customers: int,
                    max_routes: int, incumbent: Sequence[PooledRoute],
                    incumbent_cost: float, time_limit: float = 360.0,
                    on_incumbent: Optional[Callable] = None) -> PartitionResult:
    """Exact minimum-cost cover of every customer by disjoint pooled routes.

    Starts from the incumbent as upper bound; returns it unchanged when
    nothing better exists in the pool.  ``on_incumbent`` sees every new
    best selection and may return an improved ``(cost, routes)`` pair
    (from a descent) that tightens the bound further.
    """
    full = (1 << n_customers) - 1
    # cheapest-density order stabilizes the DFS; ties by cost
    routes = sorted(set(candidates) | set(incumbent),
                    key=lambda r: (r.cost / max(r.size, 1), r.cost))
    by_customer: list[list[int]] = [[] for _ in range(n_customers)]
    for idx, r in enumerate(routes):
        m = r.mask
        c = 0
        while m:
            if m & 1:
                by_customer[c].append(idx)
            m >>= 1
            c += 1
    for c in range(n_customers):
        if not by_customer[c]:
            raise ValidationError(f"customer {c + 1} appears in no pooled route")

    share = [min(routes[i].cost / routes[i].size for i in by_customer[c])
             for c in range(n_customers)]

    best_cost = incumbent_cost
    best_sel: list[PooledRoute] = list(incumbent)
    deadline = time.monotonic() + time_limit
    state = {"nodes": 0, "proven": True, "incumbents": 0}

    def lower_bound(covered: int) -> float:
        lb = 0.0
        m = ~covered & full
        c = 0
        while m:
            if m & 1:
                lb += share[c]
            m >>= 1
            c += 1
        return lb

    def dfs(covered: int, count: int, cost: float, chosen: list) -> None:
        nonlocal best_cost, best_sel
        state["nodes"] += 1
        if state["nodes"] % 2048 == 0 and time.monotonic() > deadline:
            state["proven"] = False
            raise TimeoutError
        if covered == full:
            if cost < best_cost - 1e-9:
                best_cost = cost
                best_sel = list(chosen)
                state["incumbents"] += 1
                if on_incumbent is not None:
                    improved = on_incumbent(best_cost, best_sel)
                    if improved is not None and improved[0] < best_cost - 1e-9:
                        best_cost, best_sel = improved[0], list(improved[1])
                        state["incumbents"] += 1
            return
        if count >= max_routes:
            return
        # fail-first: branch on the uncovered customer with fewest options
        branch_c = -1
        branch_opts = None
        m = ~covered & full
        c = 0
        while m:
            if m & 1:
                opts = [i for i in by_customer[c] if not routes[i].mask & covered]
                if not opts:
                    return
                if branch_opts is None or len(opts) < len(branch_opts):
                    branch_c = c
                    branch_opts = opts
                    if len(opts) == 1:
                        break
            m >>= 1
            c += 1
        for i in branch_opts:
            r = routes[i]
            new_cost = cost + r.cost
            if new_cost + lower_bound(covered | r.mask) >= best_cost - 1e-9:
                continue
            chosen.append(r)
            dfs(covered | r.mask, count + 1, new_cost, chosen)
            chosen.pop()

    try:
        dfs(0, 0, 0.0, [])
    except TimeoutError:
        pass
    return PartitionResult(cost=best_cost, routes=best_sel,
                           proven=state["proven"], nodes=state["nodes"],
                           incumbents=state["incumbents"])
