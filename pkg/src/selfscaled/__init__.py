"""Self-scaled Broyden quasi-Newton methods with line-search and trust-region
globalization, plus small benchmark problems."""
from .linesearch import LineSearchConfig
from .optimizers import (
    AdamConfig,
    ConvergenceCriteria,
    NumericalError,
    OptimizerConfig,
    RunResult,
    minimize,
)
from .testfns import ObjectiveProblem, grad_check, quadratic_xy, rosenbrock
from .trustregion import TrustRegionConfig

__all__ = [
    "AdamConfig",
    "ConvergenceCriteria",
    "LineSearchConfig",
    "NumericalError",
    "ObjectiveProblem",
    "OptimizerConfig",
    "RunResult",
    "TrustRegionConfig",
    "grad_check",
    "minimize",
    "quadratic_xy",
    "rosenbrock",
]
