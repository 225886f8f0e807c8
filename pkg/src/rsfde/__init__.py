"""Matrix-free solver for 2-D Riesz space-fractional diffusion on convex domains.

The domain is embedded in a rectangle by volume penalization, discretized by
shifted Grünwald-Letnikov differences and implicit Euler, and each step is
solved by GMRES preconditioned with sine-transform (tau) resolvents.
"""

from .discretization import (
    DomainMask,
    FractionalParams,
    GridSpec,
    PenalizedOperator,
    apply_M,
    build_mask,
    dense_M,
)
from .errors import (
    NumericBreakdownError,
    ParameterError,
    SingularOperatorError,
    SizeCapError,
    SizeError,
    StepFailure,
)
from .grunwald import GrunwaldSequence, grunwald_coeffs
from .krylov import IterationReport, SolverConfig, gmres_solve
from .precond import TauPreconditioner, apply_Phat_inv, dense_P
from .solver import (
    PenalizedSystem,
    ProblemDef,
    SolveReport,
    TimeStepState,
    example1_problem,
    run,
    step,
)
from .structured import (
    SineTransform,
    SymmetricToeplitz,
    TauSpectrum,
    dst1,
    dst1_apply,
    tau_from_toeplitz,
    tau_solve_shifted,
    toeplitz_from_grunwald,
    toeplitz_matvec,
)

__version__ = "0.1.0"
