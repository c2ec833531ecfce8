"""Instance data model, file formats and the tightened-time-window generator.

Two on-disk formats are supported:

``canonical-prp``
    Self-documented text format owned by this repo.  Header keywords
    (NAME, KIND, CUSTOMERS, VEHICLES, CAPACITY, SPEED, DEPOT, optional
    MAXDURATION), a NODES section with one ``id x y demand service
    tw_start tw_end`` line per customer, an optional DISTANCES section
    with an explicit (n+1)^2 matrix, then END.  Floats are written at
    full precision so write->parse round-trips bit-identically.

``cvrp-classic``
    The classic capacitated-benchmark layout: first line
    ``n capacity max_route_time service_time`` (zeros mean absent),
    a depot ``x y`` line, then ``x y demand`` per customer.  An optional
    fifth header number fixes the fleet size; the published results for
    these benchmarks assume the standard per-instance vehicle counts,
    which the bare format does not carry.

When no explicit matrix is present distances are unrounded Euclidean
distances on the coordinates.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .energy import ObjectiveParams, preset
from .errors import InfeasibleWindowError, ParseError, ValidationError

PROBLEM_KINDS = ("PRP", "FCVRP", "EMVRP")


@dataclass(frozen=True)
class Customer:
    """One customer: location, demand, service duration and time window."""

    id: int
    x: float
    y: float
    demand: float
    service_time: float
    tw_start: float
    tw_end: float

    def __post_init__(self):
        if self.id < 1:
            raise ValidationError(f"customer id must be >= 1, got {self.id}")
        if self.demand < 0:
            raise ValidationError(f"customer {self.id}: negative demand")
        if self.service_time < 0:
            raise ValidationError(f"customer {self.id}: negative service time")
        if self.tw_start > self.tw_end:
            raise ValidationError(
                f"customer {self.id}: tw_start {self.tw_start} > tw_end {self.tw_end}")


@dataclass
class Instance:
    """A routing instance over depot 0 and customers 1..n.

    ``distance`` is a dense (n+1) x (n+1) list-of-lists in meters.  The
    convenience arrays ``demand``/``service_time``/``tw_start``/``tw_end``
    are indexed by node id, with the depot at index 0.  Instances are
    treated as immutable once built.
    """

    name: str
    depot_x: float
    depot_y: float
    depot_tw: tuple[float, float]
    customers: list[Customer]
    fleet_size: int
    capacity: float
    speed_min: float
    speed_max: float
    objective_params: ObjectiveParams
    problem_kind: str = "PRP"
    max_route_duration: Optional[float] = None
    explicit_distance: Optional[list[list[float]]] = None

    demand: list = field(init=False, repr=False)
    service_time: list = field(init=False, repr=False)
    tw_start: list = field(init=False, repr=False)
    tw_end: list = field(init=False, repr=False)
    xs: list = field(init=False, repr=False)
    ys: list = field(init=False, repr=False)
    distance: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.problem_kind not in PROBLEM_KINDS:
            raise ValidationError(f"unknown problem kind {self.problem_kind!r}")
        if self.fleet_size < 1:
            raise ValidationError("fleet_size must be >= 1")
        if self.capacity <= 0:
            raise ValidationError("capacity must be positive")
        # speed is only a decision variable for PRP; the fixed-speed variants
        # pin both bounds to one unit speed
        if self.problem_kind == "PRP":
            if not (self.speed_min < self.speed_max):
                raise ValidationError("need speed_min < speed_max")
        elif not (0 < self.speed_min <= self.speed_max):
            raise ValidationError("need 0 < speed_min <= speed_max")
        if self.depot_tw[0] > self.depot_tw[1]:
            raise ValidationError("depot window is empty")
        ids = [c.id for c in self.customers]
        if ids != list(range(1, len(ids) + 1)):
            raise ValidationError("customer ids must be 1..n in order")
        for c in self.customers:
            if c.demand > self.capacity:
                raise ValidationError(
                    f"customer {c.id} demand {c.demand} exceeds capacity {self.capacity}")
        self.xs = [self.depot_x] + [c.x for c in self.customers]
        self.ys = [self.depot_y] + [c.y for c in self.customers]
        self.demand = [0.0] + [c.demand for c in self.customers]
        self.service_time = [0.0] + [c.service_time for c in self.customers]
        self.tw_start = [self.depot_tw[0]] + [c.tw_start for c in self.customers]
        self.tw_end = [self.depot_tw[1]] + [c.tw_end for c in self.customers]
        if self.explicit_distance is not None:
            m = self.explicit_distance
            size = self.n + 1
            if len(m) != size or any(len(row) != size for row in m):
                raise ValidationError("distance matrix shape mismatch")
            for i in range(size):
                if m[i][i] != 0.0:
                    raise ValidationError("distance matrix diagonal must be zero")
                for j in range(size):
                    if m[i][j] < 0:
                        raise ValidationError("negative distance")
            self.distance = [list(row) for row in m]
        else:
            self.distance = self._euclidean_matrix()

    @property
    def n(self) -> int:
        return len(self.customers)

    def _euclidean_matrix(self):
        xs, ys = self.xs, self.ys
        size = self.n + 1
        out = [[0.0] * size for _ in range(size)]
        for i in range(size):
            xi, yi = xs[i], ys[i]
            row = out[i]
            for j in range(i + 1, size):
                d = math.hypot(xi - xs[j], yi - ys[j])
                row[j] = d
                out[j][i] = d
        return out

    def equals(self, other: "Instance") -> bool:
        """Field-for-field equality, including the effective distance matrix."""
        return (
            self.name == other.name
            and self.problem_kind == other.problem_kind
            and (self.depot_x, self.depot_y) == (other.depot_x, other.depot_y)
            and self.depot_tw == other.depot_tw
            and self.customers == other.customers
            and self.fleet_size == other.fleet_size
            and self.capacity == other.capacity
            and (self.speed_min, self.speed_max) == (other.speed_min, other.speed_max)
            and self.max_route_duration == other.max_route_duration
            and self.distance == other.distance
        )


def _fmt(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_instance(inst: Instance, path) -> None:
    """Emit the canonical-prp text form; ``parse(write(x))`` equals ``x``."""
    lines = [
        f"NAME {inst.name}",
        f"KIND {inst.problem_kind}",
        f"CUSTOMERS {inst.n}",
        f"VEHICLES {inst.fleet_size}",
        f"CAPACITY {_fmt(inst.capacity)}",
        f"SPEED {_fmt(inst.speed_min)} {_fmt(inst.speed_max)}",
        f"DEPOT {_fmt(inst.depot_x)} {_fmt(inst.depot_y)} "
        f"{_fmt(inst.depot_tw[0])} {_fmt(inst.depot_tw[1])}",
    ]
    if inst.max_route_duration is not None:
        lines.append(f"MAXDURATION {_fmt(inst.max_route_duration)}")
    lines.append("NODES")
    for c in inst.customers:
        lines.append(" ".join([str(c.id), _fmt(c.x), _fmt(c.y), _fmt(c.demand),
                               _fmt(c.service_time), _fmt(c.tw_start), _fmt(c.tw_end)]))
    if inst.explicit_distance is not None:
        lines.append("DISTANCES")
        for row in inst.explicit_distance:
            lines.append(" ".join(_fmt(v) for v in row))
    lines.append("END")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_instance(path, format: str = "canonical-prp",
                   problem_kind: Optional[str] = None,
                   params: Optional[ObjectiveParams] = None,
                   fleet_size: Optional[int] = None) -> Instance:
    """Parse an instance file in the given format.

    ``problem_kind`` overrides the kind recorded in (or implied by) the
    file; ``params`` overrides the default objective preset for that
    kind; ``fleet_size`` overrides the vehicle count (cvrp-classic only).
    """
    if format == "canonical-prp":
        return _parse_canonical(path, problem_kind, params)
    if format == "cvrp-classic":
        return _parse_cvrp_classic(path, problem_kind or "FCVRP", params, fleet_size)
    if format == "prplib-uk":
        return parse_prplib_uk(path, params=params, fleet_size=fleet_size)
    raise ValidationError(f"unknown instance format {format!r}")


def _default_params(kind: str, capacity: float) -> ObjectiveParams:
    if kind == "FCVRP":
        return preset("fcvrp-classic")
    if kind == "EMVRP":
        return preset("emvrp-classic", capacity=capacity)
    return preset("prp-uk-2012")


def _parse_canonical(path, problem_kind, params) -> Instance:
    header = {}
    customers = []
    matrix = None
    section = None
    n = None
    try:
        fh = open(path)
    except OSError as exc:
        raise ParseError(path, 0, str(exc)) from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if section is None:
                key, _, rest = line.partition(" ")
                key = key.upper()
                if key == "NODES":
                    section = "nodes"
                    for need in ("CUSTOMERS", "VEHICLES", "CAPACITY", "SPEED", "DEPOT"):
                        if need not in header:
                            raise ParseError(path, lineno, f"missing header {need}")
                    n = int(header["CUSTOMERS"])
                elif key in ("NAME", "KIND", "CUSTOMERS", "VEHICLES", "CAPACITY",
                             "SPEED", "DEPOT", "MAXDURATION"):
                    header[key] = rest.strip()
                else:
                    raise ParseError(path, lineno, f"unexpected header line {line!r}")
            elif section == "nodes":
                if line.upper() == "DISTANCES":
                    section = "distances"
                    matrix = []
                    continue
                if line.upper() == "END":
                    section = "end"
                    continue
                parts = line.split()
                if len(parts) != 7:
                    raise ParseError(path, lineno,
                                     f"expected 'id x y demand service tw_start tw_end', got {line!r}")
                try:
                    cid = int(parts[0])
                    vals = [float(p) for p in parts[1:]]
                except ValueError as exc:
                    raise ParseError(path, lineno, str(exc)) from exc
                try:
                    customers.append(Customer(cid, *vals))
                except ValidationError as exc:
                    raise ParseError(path, lineno, str(exc)) from exc
            elif section == "distances":
                if line.upper() == "END":
                    section = "end"
                    continue
                try:
                    matrix.append([float(p) for p in line.split()])
                except ValueError as exc:
                    raise ParseError(path, lineno, str(exc)) from exc
            else:
                raise ParseError(path, lineno, "content after END")
    if section != "end":
        raise ParseError(path, 0, "missing END line")
    if len(customers) != n:
        raise ParseError(path, 0, f"expected {n} customers, found {len(customers)}")
    kind = problem_kind or header.get("KIND", "PRP").upper()
    try:
        depot = [float(v) for v in header["DEPOT"].split()]
        if len(depot) != 4:
            raise ValueError("DEPOT needs 'x y tw_start tw_end'")
        smin, smax = (float(v) for v in header["SPEED"].split())
        capacity = float(header["CAPACITY"])
        inst = Instance(
            name=header.get("NAME", "unnamed"),
            depot_x=depot[0], depot_y=depot[1], depot_tw=(depot[2], depot[3]),
            customers=customers,
            fleet_size=int(header["VEHICLES"]),
            capacity=capacity,
            speed_min=smin, speed_max=smax,
            objective_params=params or _default_params(kind, capacity),
            problem_kind=kind,
            max_route_duration=(float(header["MAXDURATION"])
                                if "MAXDURATION" in header else None),
            explicit_distance=matrix,
        )
    except (ValueError, ValidationError) as exc:
        raise ParseError(path, 0, str(exc)) from exc
    return inst


def _parse_cvrp_classic(path, problem_kind, params, fleet_size=None) -> Instance:
    try:
        fh = open(path)
    except OSError as exc:
        raise ParseError(path, 0, str(exc)) from exc
    with fh:
        tokens = []
        line_of_token = []
        header_len = None
        for lineno, raw in enumerate(fh, 1):
            for t in raw.split():
                tokens.append(t)
                line_of_token.append(lineno)
            if lineno == 1:
                header_len = len(tokens)
    if header_len not in (4, 5):
        raise ParseError(path, 1,
                         "header needs 'n capacity max_route_time service_time [fleet]'")

    def take(i, count):
        if i + count > len(tokens):
            raise ParseError(path, line_of_token[-1], "unexpected end of file")
        return tokens[i:i + count]

    try:
        n = int(tokens[0])
        capacity = float(tokens[1])
        max_rt = float(tokens[2])
        service = float(tokens[3])
        file_fleet = int(tokens[4]) if header_len == 5 else None
    except ValueError as exc:
        raise ParseError(path, line_of_token[0], str(exc)) from exc
    idx = header_len
    try:
        dx, dy = (float(t) for t in take(idx, 2))
    except ValueError as exc:
        raise ParseError(path, line_of_token[idx], str(exc)) from exc
    idx += 2
    customers = []
    for cid in range(1, n + 1):
        chunk = take(idx, 3)
        try:
            x, y, dem = (float(t) for t in chunk)
        except ValueError as exc:
            raise ParseError(path, line_of_token[idx], str(exc)) from exc
        idx += 3
        customers.append(Customer(cid, x, y, dem, service, 0.0, math.inf))
    if idx != len(tokens):
        raise ParseError(path, line_of_token[idx], "trailing content")
    kind = problem_kind
    # fall back to an effectively unbounded fleet when no count is known
    m = fleet_size or file_fleet or n
    return Instance(
        name=str(path),
        depot_x=dx, depot_y=dy, depot_tw=(0.0, math.inf),
        customers=customers,
        fleet_size=m,
        capacity=capacity,
        speed_min=1.0, speed_max=1.0,
        objective_params=params or _default_params(kind, capacity),
        problem_kind=kind,
        max_route_duration=max_rt if max_rt > 0 else None,
    )


def parse_prplib_uk(path, params: Optional[ObjectiveParams] = None,
                    fleet_size: Optional[int] = None) -> Instance:
    """Thin adapter for externally obtained UK pollution-routing files.

    Assumed layout (the upstream archive does not document one): a first
    line ``n`` counting customers, then one line per node starting with
    the depot: ``id x y demand ready_time due_time service_time``, with
    distances in meters taken as Euclidean on the coordinates unless a
    full (n+1)^2 matrix block follows the node lines.  Speed bounds
    default to 5.5..25 m/s and the fleet to the customer count; both can
    be overridden.  Verify converted files against known objective
    values before trusting this adapter.
    """
    try:
        fh = open(path)
    except OSError as exc:
        raise ParseError(path, 0, str(exc)) from exc
    with fh:
        tokens = []
        for raw in fh:
            tokens.extend(raw.replace(",", " ").split())
    if not tokens:
        raise ParseError(path, 1, "empty file")
    n = int(float(tokens[0]))
    idx = 1
    nodes = []
    for _ in range(n + 1):
        if idx + 7 > len(tokens):
            raise ParseError(path, 0, "truncated node line")
        vals = [float(t) for t in tokens[idx:idx + 7]]
        nodes.append(vals)
        idx += 7
    matrix = None
    rest = len(tokens) - idx
    if rest >= (n + 1) * (n + 1):
        flat = [float(t) for t in tokens[idx:idx + (n + 1) * (n + 1)]]
        matrix = [flat[i * (n + 1):(i + 1) * (n + 1)] for i in range(n + 1)]
    depot = nodes[0]
    customers = [Customer(i, v[1], v[2], v[3], v[6], v[4], v[5])
                 for i, v in enumerate(nodes[1:], 1)]
    return Instance(
        name=str(path), depot_x=depot[1], depot_y=depot[2],
        depot_tw=(depot[4], depot[5]), customers=customers,
        fleet_size=fleet_size or n, capacity=3650.0,
        speed_min=5.5, speed_max=25.0,
        objective_params=params or preset("prp-uk-2012"),
        problem_kind="PRP", explicit_distance=matrix,
    )


@dataclass(frozen=True)
class GeneratorConfig:
    """Configuration of the tightened-window instance generator."""

    base: Instance
    horizon: float = 32400.0
    width_range: tuple[float, float] = (2000.0, 5000.0)
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = self.width_range
        if lo > hi:
            raise ValidationError("width range is empty")
        if hi >= self.horizon:
            raise ValidationError("window width must stay below the horizon")


SET_B_WIDTHS = (2000.0, 5000.0)
SET_C_WIDTHS = (2000.0, 15000.0)


def generate_tight_instance(cfg: GeneratorConfig) -> Instance:
    """Redraw every customer window inside the horizon so that serving the
    customer alone at top speed and returning before closure stays feasible.

    Width is uniform on the configured range; the window start is uniform
    on the interval that keeps the lone round trip feasible.  Integer
    seconds are drawn from a seeded Mersenne Twister so identical seeds
    reproduce identical instances.
    """
    base = cfg.base
    rng = random.Random(cfg.rng_seed)
    a0, b0 = 0.0, cfg.horizon
    vmax = base.speed_max
    w_lo, w_hi = cfg.width_range
    new_customers = []
    for c in base.customers:
        width = float(rng.randint(int(w_lo), int(w_hi)))
        d_out = base.distance[0][c.id]
        d_back = base.distance[c.id][0]
        lo = a0 + math.floor(d_out / vmax)
        hi = b0 - math.ceil(d_back / vmax) - c.service_time - width
        if lo > hi:
            raise InfeasibleWindowError(
                f"customer {c.id}: no feasible window of width {width} in horizon")
        start = float(rng.randint(int(lo), int(math.floor(hi))))
        new_customers.append(Customer(c.id, c.x, c.y, c.demand, c.service_time,
                                      start, start + width))
    return Instance(
        name=f"{base.name}-w{int(w_lo)}-{int(w_hi)}-s{cfg.rng_seed}",
        depot_x=base.depot_x, depot_y=base.depot_y, depot_tw=(a0, b0),
        customers=new_customers,
        fleet_size=base.fleet_size, capacity=base.capacity,
        speed_min=base.speed_min, speed_max=base.speed_max,
        objective_params=base.objective_params,
        problem_kind=base.problem_kind,
        max_route_duration=base.max_route_duration,
        explicit_distance=base.explicit_distance,
    )


def random_prp_instance(n: int, seed: int, fleet_size: int = 3,
                        capacity: float = 3650.0,
                        box_km: float = 80.0,
                        demand_range: tuple[float, float] = (500.0, 1500.0),
                        service_time: float = 900.0,
                        params: Optional[ObjectiveParams] = None) -> Instance:
    """Synthesize a wide-window instance on random coordinates.

    Used as generation base material and by the benchmark harness when no
    external files are at hand.  Windows start wide open at the horizon;
    pass the result through ``generate_tight_instance`` for tight sets.
    """
    rng = random.Random(seed)
    horizon = 32400.0
    customers = []
    for cid in range(1, n + 1):
        x = rng.uniform(0.0, box_km * 1000.0)
        y = rng.uniform(0.0, box_km * 1000.0)
        dem = float(rng.randint(int(demand_range[0]), int(demand_range[1])))
        customers.append(Customer(cid, x, y, dem, service_time, 0.0, horizon))
    return Instance(
        name=f"rand{n}-s{seed}",
        depot_x=box_km * 500.0, depot_y=box_km * 500.0, depot_tw=(0.0, horizon),
        customers=customers,
        fleet_size=fleet_size, capacity=capacity,
        speed_min=5.5, speed_max=25.0,
        objective_params=params or preset("prp-uk-2012"),
        problem_kind="PRP",
    )
