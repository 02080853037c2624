"""Semi-Markov processes built path by path from a Poisson random measure."""

__version__ = "0.1.0"

from .catalog import CATALOG, build  # noqa: E402
from .coupling import (  # noqa: E402
    CoupledPath,
    TestFunction,
    dynkin_residual,
    generator_apply,
    meeting_stats,
    simulate_coupled,
)
from .layout import MarkResolution  # noqa: E402
from .oracle import OracleSampler, simulate_path_oracle  # noqa: E402
from .prm import PointStream  # noqa: E402
from .rates import (  # noqa: E402
    RateModel,
    embedded_probs,
    gamma,
    holding_cdf,
    holding_pdf,
    kernel,
    rate_identity_residual,
    validate,
)
from .solver import Initial, Trajectory, holding_time_samples, simulate_batch, simulate_path  # noqa: E402

__all__ = [
    "CATALOG",
    "CoupledPath",
    "Initial",
    "MarkResolution",
    "OracleSampler",
    "PointStream",
    "RateModel",
    "TestFunction",
    "Trajectory",
    "build",
    "dynkin_residual",
    "embedded_probs",
    "gamma",
    "generator_apply",
    "holding_cdf",
    "holding_pdf",
    "holding_time_samples",
    "kernel",
    "meeting_stats",
    "rate_identity_residual",
    "simulate_batch",
    "simulate_coupled",
    "simulate_path",
    "simulate_path_oracle",
    "validate",
]
