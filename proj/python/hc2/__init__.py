"""Python access to the hc2 solvers."""

from ._hc2 import (
    ConfigError,
    SolverError,
    __version__,
    abrikosov,
    discrete_landau_level,
    estimate_E1,
    estimate_E2,
    halfstrip,
    lll_project,
    lowest_eigenspace,
    parse_plan,
    solve_gl,
)

__all__ = [
    "ConfigError",
    "SolverError",
    "__version__",
    "abrikosov",
    "discrete_landau_level",
    "estimate_E1",
    "estimate_E2",
    "halfstrip",
    "lll_project",
    "lowest_eigenspace",
    "parse_plan",
    "solve_gl",
]
