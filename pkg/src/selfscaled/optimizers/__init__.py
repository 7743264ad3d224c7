from .driver import (
    ConvergenceCriteria,
    NumericalError,
    OptimizerConfig,
    RunResult,
    StepAudit,
    TraceRecord,
    minimize,
)
from .first_order import AdamConfig, AdamState, adam_step, gd_step
from .lbfgs import LBFGSHistory, lbfgs_direction
from .updates import (
    ScalingQuantities,
    bfgs_inverse_update,
    broyden_scaling_chain,
    dfp_inverse_update,
    scaling_chain,
    ssbfgs_update,
    ssbroyden_direct_update,
    ssbroyden_inverse_update,
)
