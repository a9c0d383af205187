"""Exact verification of quadratic sublevel invariants for stable
discrete-time affine systems.

The engine certifies a finite cutoff K such that the supremum of the
objective over all reachable states is attained within the first K steps,
then decides the property by enumerating vertex trajectories.  It can both
prove and disprove, returning a witness trajectory in the latter case.
"""

from .config import DEFAULTS, Tolerances
from .errors import (
    AssumptionViolated,
    ConvergenceFailure,
    DegenerateRange,
    DimensionMismatch,
    DimensionTooLarge,
    EmptyBox,
    InfeasiblePair,
    InvalidUserP,
    MatrixError,
    ModelError,
    NotPositiveDefinite,
    NotSymmetric,
    NumeratorOutOfRange,
    ParseError,
    QuadinvError,
    SingularShift,
    SingularSystem,
    Unstable,
)
from .horizon import (
    BoundScalars,
    Candidate,
    CandidateBound,
    HorizonBound,
    StabilityCertificate,
    K_of,
    best_K,
    candidate_Ps,
    evaluate_candidates,
    find_k_strict,
    mu,
    nu,
    nu_sequence,
    objective_scores,
    s_value,
    stability_certificate,
    tail_bound,
)
from .matcore import (
    SymEig,
    generalized_lmax,
    inv_sqrt,
    lyapunov_solve,
    mat_pow,
    sym_eig,
    weighted_opnorm,
)
from .model import (
    AffineSystem,
    InitialSet,
    QuadraticObjective,
    VerificationTask,
    box_to_vertices,
    fixed_point,
    homogenize,
    linear_range_property,
)
from .verifier import (
    OracleReport,
    Optimum,
    TailInfo,
    Verdict,
    VerdictStatus,
    brute_force_oracle,
    optimize,
    trajectory,
    verify,
)

__version__ = "0.1.0"
