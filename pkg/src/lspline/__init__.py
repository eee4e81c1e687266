"""Fast natural L-spline interpolation for order-4 constant-coefficient operators."""
from .assembly import BandedQ, KnotVector, TridiagonalR, basis_eval, build_Q, build_R, row_dominance
from .errors import (
    ConditionViolation,
    DomainError,
    LSplineError,
    NumericalError,
    SingularPivot,
    SingularSystem,
    ZeroDiagonal,
)
from .expcore import (
    Classification,
    ExpPoly,
    FrequencyVector,
    classify,
    max_step_delta,
    phi_deriv,
    phi_eval,
    phi_expand,
    phi_taylor,
)
from .kernel import (
    DominanceReport,
    KernelContext,
    dominance_bound,
    kernel_build,
    local_max_at_zero,
    rho_eval,
    sigma_eval,
    tau_eval,
    tau_taylor2,
)
from .splinefit import (
    NaturalLSpline,
    interpolate,
    oracle_interpolate,
    spline_eval,
    spline_eval_L1,
    thomas_solve,
    identity_residual,
)

__version__ = "0.1.0"
