"""Green vehicle routing: pollution routing with per-arc speed decisions,
plus the classic fuel-consumption and energy-minimizing variants."""

from .energy import (CostBreakdown, ObjectiveParams, PhysicalParams, arc_fuel,
                     derive_w_coefficients, emvrp_cost, fcvrp_cost, load_params,
                     optimal_speed_fuel, optimal_speed_fuel_driver, preset,
                     route_cost)
from .errors import (GreenRouterError, InfeasibleRouteError,
                     InfeasibleWindowError, ParseError, PerturbationError,
                     ValidationError)
from .instance import (SET_B_WIDTHS, SET_C_WIDTHS, Customer, GeneratorConfig,
                       Instance, generate_tight_instance, parse_instance,
                       random_prp_instance, write_instance)
from .soa import SpeedMatrix, SpeedSchedule, optimize_speeds

__version__ = "0.1.0"

__all__ = [
    "CostBreakdown", "ObjectiveParams", "PhysicalParams", "arc_fuel",
    "derive_w_coefficients", "emvrp_cost", "fcvrp_cost", "load_params",
    "optimal_speed_fuel", "optimal_speed_fuel_driver", "preset", "route_cost",
    "GreenRouterError", "InfeasibleRouteError", "InfeasibleWindowError",
    "ParseError", "PerturbationError", "ValidationError",
    "SET_B_WIDTHS", "SET_C_WIDTHS", "Customer", "GeneratorConfig", "Instance",
    "generate_tight_instance", "parse_instance", "random_prp_instance",
    "write_instance",
    "SpeedMatrix", "SpeedSchedule", "optimize_speeds",
    "__version__",
]
