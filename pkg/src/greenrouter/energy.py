"""Cost models: fuel/driver objective for pollution routing, plus the
distance-and-load objectives of the fuel-consumption (FCVRP) and
energy-minimizing (EMVRP) variants.

The fuel rate of a loaded vehicle on one arc is

    rate(v, f) = w1/v + w2 + w3*f + w4*v^2      [liters per meter]

with the four coefficients derived from raw physical vehicle/fuel
parameters (see ``derive_w_coefficients``).  The rate is strictly convex
in the speed ``v``, which gives closed forms for the fuel-optimal and
fuel-plus-wage-optimal cruise speeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Sequence

from .errors import ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .instance import Instance


@dataclass(frozen=True)
class PhysicalParams:
    """Raw vehicle, fuel and road parameters (SI units)."""

    curb_weight: float = 6350.0        # kg
    fuel_air_ratio: float = 1.0
    engine_friction: float = 0.2       # kJ/rev/l
    engine_speed: float = 33.0         # rev/s
    engine_displacement: float = 5.0   # l
    gravity: float = 9.81              # m/s^2
    drag_coeff: float = 0.7
    air_density: float = 1.2041        # kg/m^3
    frontal_area: float = 3.912        # m^2
    rolling_resistance: float = 0.01
    drivetrain_eff: float = 0.4
    engine_eff: float = 0.9
    heating_value: float = 44.0        # kJ/g
    conversion: float = 737.0          # g/s -> l/s
    acceleration: float = 0.0          # m/s^2, zero in the flat-road reduction
    road_angle: float = 0.0            # rad, zero in the flat-road reduction

    def __post_init__(self):
        for name in (
            "curb_weight", "fuel_air_ratio", "engine_friction", "engine_speed",
            "engine_displacement", "gravity", "drag_coeff", "air_density",
            "frontal_area", "rolling_resistance", "drivetrain_eff",
            "engine_eff", "heating_value", "conversion",
        ):
            if getattr(self, name) <= 0:
                raise ValidationError(f"physical parameter {name} must be positive")


def derive_w_coefficients(p: PhysicalParams) -> tuple[float, float, float, float]:
    """Collapse raw physical parameters into the four arc-fuel coefficients.

    Assumes the flat-road reduction (zero acceleration and road angle).
    """
    if p.acceleration != 0.0 or p.road_angle != 0.0:
        raise ValidationError("coefficient derivation assumes zero acceleration and road angle")
    lam = p.fuel_air_ratio / (p.heating_value * p.conversion)
    gam = 1.0 / (1000.0 * p.drivetrain_eff * p.engine_eff)
    beta = 0.5 * p.drag_coeff * p.air_density * p.frontal_area
    w1 = lam * p.engine_friction * p.engine_speed * p.engine_displacement
    w2 = lam * p.curb_weight * gam * p.gravity * p.rolling_resistance
    w3 = lam * gam * p.gravity * p.rolling_resistance
    w4 = lam * beta * gam
    return (w1, w2, w3, w4)


@dataclass(frozen=True)
class ObjectiveParams:
    """Weights of the routing objectives.

    ``w1..w4`` and the two unit prices drive the fuel/driver objective;
    ``empty_weight`` drives the EMVRP; ``rho_0/rho_star/fixed_cost`` drive
    the FCVRP; ``warp_penalty`` prices one second of relaxed lateness
    during search.
    """

    w1: float
    w2: float
    w3: float
    w4: float
    fuel_price: float = 1.4            # currency / liter
    driver_wage: float = 8.0 / 3600.0  # currency / second
    empty_weight: float = 0.0          # EMVRP: weight of an unloaded vehicle, load units
    rho_0: float = 1.0                 # FCVRP: empty fuel rate
    rho_star: float = 2.0              # FCVRP: full-load fuel rate
    fixed_cost: float = 0.0            # FCVRP: per-route fixed cost
    warp_penalty: float = 1e8          # currency / second of time warp

    def __post_init__(self):
        if self.w1 <= 0 or self.w4 <= 0:
            raise ValidationError("w1 and w4 must be positive (convex arc fuel rate)")
        if self.fuel_price < 0 or self.driver_wage < 0:
            raise ValidationError("unit prices must be nonnegative")
        if self.warp_penalty <= 0:
            raise ValidationError("warp_penalty must be positive")

    def with_(self, **kw) -> "ObjectiveParams":
        return replace(self, **kw)


def preset(name: str, capacity: float | None = None) -> ObjectiveParams:
    """Named parameter presets.

    ``prp-uk-2012``: UK cost figures with the standard vehicle parameters.
    ``fcvrp-classic``: h=0, fuel price 1, empty/full rates 1 and 2.
    ``emvrp-classic``: empty vehicle weight 0.15*Q (requires ``capacity``).
    """
    w1, w2, w3, w4 = derive_w_coefficients(PhysicalParams())
    if name == "prp-uk-2012":
        return ObjectiveParams(w1, w2, w3, w4)
    if name == "fcvrp-classic":
        return ObjectiveParams(w1, w2, w3, w4, fuel_price=1.0, driver_wage=0.0,
                               rho_0=1.0, rho_star=2.0, fixed_cost=0.0)
    if name == "emvrp-classic":
        if capacity is None:
            raise ValidationError("emvrp-classic preset needs the vehicle capacity")
        return ObjectiveParams(w1, w2, w3, w4, fuel_price=1.0, driver_wage=0.0,
                               empty_weight=0.15 * capacity)
    raise ValidationError(f"unknown preset {name!r}")


_PARAM_FIELDS = ("w1", "w2", "w3", "w4", "fuel_price", "driver_wage",
                 "empty_weight", "rho_0", "rho_star", "fixed_cost", "warp_penalty")


def load_params(path) -> ObjectiveParams:
    """Read objective parameters from a ``key value`` text file.

    Unknown keys are rejected; missing keys fall back to the
    ``prp-uk-2012`` preset values.
    """
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'key value'")
            key, val = parts
            if key not in _PARAM_FIELDS:
                raise ValidationError(f"{path}:{lineno}: unknown parameter {key!r}")
            values[key] = float(val)
    return preset("prp-uk-2012").with_(**values)


def save_params(params: ObjectiveParams, path) -> None:
    with open(path, "w") as fh:
        for name in _PARAM_FIELDS:
            fh.write(f"{name} {getattr(params, name)!r}\n")


def arc_fuel(d: float, f: float, v: float, params: ObjectiveParams) -> float:
    """Fuel burned (liters) to carry load ``f`` over ``d`` meters at speed ``v``."""
    if v <= 0:
        raise ValidationError("speed must be positive")
    return d * (params.w1 / v + params.w2 + params.w3 * f + params.w4 * v * v)


def optimal_speed_fuel(params: ObjectiveParams,
                       bounds: Optional[tuple[float, float]] = None) -> float:
    """Speed minimizing fuel alone: (w1 / 2 w4)^(1/3), clamped into bounds."""
    v = (params.w1 / (2.0 * params.w4)) ** (1.0 / 3.0)
    return _clamp(v, bounds)


def optimal_speed_fuel_driver(params: ObjectiveParams,
                              bounds: Optional[tuple[float, float]] = None) -> float:
    """Speed minimizing fuel plus driver wage on the arc's travel time."""
    if params.fuel_price <= 0:
        raise ValidationError("fuel_price must be positive for the fuel+wage optimum")
    v = ((params.driver_wage / params.fuel_price + params.w1)
         / (2.0 * params.w4)) ** (1.0 / 3.0)
    return _clamp(v, bounds)


def _clamp(v: float, bounds: Optional[tuple[float, float]]) -> float:
    if bounds is None:
        return v
    lo, hi = bounds
    return min(max(v, lo), hi)


@dataclass
class CostBreakdown:
    """Cost components and feasibility flags of one evaluated route."""

    fuel_liters: float
    driver_seconds: float
    total: float
    distance: float
    load_distance: float
    capacity_ok: bool
    windows_ok: bool
    duration_ok: bool
    arrival_times: list
    service_starts: list

    @property
    def feasible(self) -> bool:
        return self.capacity_ok and self.windows_ok and self.duration_ok


def route_cost(route: Sequence[int], speeds: Sequence[float],
               inst: "Instance") -> CostBreakdown:
    """Cost of a depot-bounded route at the given per-arc speeds.

    Departure is fixed at time zero; early arrivals wait for the window
    to open; lateness is flagged, not priced.  Driver time is charged up
    to the arrival back at the depot.
    """
    params = inst.objective_params
    if route[0] != 0 or route[-1] != 0:
        raise ValidationError("route must start and end at the depot")
    if len(speeds) != len(route) - 1:
        raise ValidationError("need one speed per arc")
    q, tau, a, b, dist = inst.demand, inst.service_time, inst.tw_start, inst.tw_end, inst.distance

    # forward pass; the load on each arc is what is still to be delivered
    remaining = sum(q[c] for c in route[1:-1])
    fuel = 0.0
    dist_total = 0.0
    qd = 0.0
    t = 0.0
    arrivals = [0.0]
    starts = [0.0]
    windows_ok = True
    for i in range(1, len(route)):
        u, w = route[i - 1], route[i]
        d = dist[u][w]
        v = speeds[i - 1]
        f = remaining
        fuel += arc_fuel(d, f, v, params)
        dist_total += d
        qd += f * d
        start_prev = max(a[u], t) if i > 1 else 0.0
        t = start_prev + tau[u] + (d / v if d > 0 else 0.0)
        arrivals.append(t)
        starts.append(max(a[w], t))
        if t > b[w] + 1e-9:
            windows_ok = False
        remaining -= q[w]
    driver_seconds = t
    total = params.fuel_price * fuel + params.driver_wage * driver_seconds
    load = sum(q[c] for c in route[1:-1])
    duration_ok = (inst.max_route_duration is None
                   or driver_seconds <= inst.max_route_duration + 1e-9)
    return CostBreakdown(
        fuel_liters=fuel, driver_seconds=driver_seconds, total=total,
        distance=dist_total, load_distance=qd,
        capacity_ok=load <= inst.capacity + 1e-9,
        windows_ok=windows_ok, duration_ok=duration_ok,
        arrival_times=arrivals, service_starts=starts,
    )


def _dist_load_sums(solution, inst) -> tuple[float, float, int]:
    dist = inst.distance
    q = inst.demand
    total_d = 0.0
    total_qd = 0.0
    nroutes = 0
    for route in solution:
        if len(route) <= 2:
            continue
        nroutes += 1
        remaining = sum(q[c] for c in route[1:-1])
        for i in range(1, len(route)):
            d = dist[route[i - 1]][route[i]]
            total_d += d
            total_qd += remaining * d
            remaining -= q[route[i]]
    return total_d, total_qd, nroutes


def fcvrp_cost(solution: Sequence[Sequence[int]], inst: "Instance") -> float:
    """Fixed cost per route plus fuel interpolated between empty and full rates."""
    p = inst.objective_params
    total_d, total_qd, nroutes = _dist_load_sums(solution, inst)
    rate_slope = (p.rho_star - p.rho_0) / inst.capacity
    return nroutes * p.fixed_cost + p.fuel_price * (p.rho_0 * total_d + rate_slope * total_qd)


def emvrp_cost(solution: Sequence[Sequence[int]], inst: "Instance") -> float:
    """Total hauled weight (empty vehicle plus remaining cargo) times distance."""
    p = inst.objective_params
    total_d, total_qd, _ = _dist_load_sums(solution, inst)
    return p.empty_weight * total_d + total_qd
