"""Robust singular stochastic optimal control analysis toolkit."""

from ._rsonc import (  # noqa: F401
    RsoncConfigError,
    RsoncDegeneracyError,
    RsoncPreconditionError,
    __version__,
    builtin_names,
    check_singular,
    example_summary,
    expansion,
    generate_increments,
    integral_sonc,
    pointwise_sonc,
    robust_cost,
    simulate_state,
    validate,
)
