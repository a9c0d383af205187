"""The horizon bound engine.

Given a homogenized task (b = 0), this module certifies stability through a
discrete Lyapunov solve, locates the first strictly positive step value, and
turns a feasible scaling/shape pair (t, P) into an integer cutoff K beyond
which the running maximum can no longer be improved:

    K(t, P) = floor( ln g / ln |A|_P ) + 1,
    g = (sqrt(S + V^2) - V) / (sqrt(t) * mu(P)),

with V = |q|_2 / (2 sqrt(t lmin(P))), mu(P) the largest P-norm over initial
vertices, and S the positive threshold min(sup x^T Q x, nu_{k_strict}).

Step values nu_k here are always the *constant-free* part of the objective,
max over vertices of (A^k v)^T Q (A^k v) + q^T (A^k v).  The public
:func:`nu` adds the objective's constant back so it reports the value of the
original (pre-homogenization) objective at step k; the bound theory needs
the constant-free sequence because only that sequence decays to zero.

Per-step evaluations are order-independent max reductions, so they can be
distributed freely; this implementation vectorizes them instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import (
    AssumptionViolated,
    InfeasiblePair,
    InvalidUserP,
    NotPositiveDefinite,
    NumeratorOutOfRange,
    SingularSystem,
    Unstable,
)
from .matcore import (
    as_matrix,
    frobenius,
    generalized_lmax,
    lyapunov_solve,
    mat_pow,
    sym_eig,
    weighted_opnorm,
)
from .model import InitialSet, VerificationTask

__all__ = [
    "StabilityCertificate",
    "BoundScalars",
    "HorizonBound",
    "Candidate",
    "CandidateBound",
    "NuResult",
    "stability_certificate",
    "nu",
    "nu_sequence",
    "find_k_strict",
    "s_value",
    "mu",
    "K_of",
    "tail_bound",
    "candidate_Ps",
    "objective_scores",
    "evaluate_candidates",
    "best_K",
]

STRATEGIES = ("auto", "identity", "q-augmented", "blend", "user")
BLEND_WEIGHTS = (0.25, 0.5, 0.75)
DEFAULT_KSTRICT_CAP = 10_000
DEFAULT_EPSILON = 0.01


@dataclass(frozen=True)
class StabilityCertificate:
    """A shape matrix P > 0 with P - A^T P A > 0, plus cached scalars.

    ``residual_margin`` is lmin(P - A^T P A); a valid certificate always has
    margin > 0 and ``norm_A_P`` strictly inside (0, 1).
    """

    P: np.ndarray
    residual_margin: float
    norm_A_P: float
    lmin_P: float


@dataclass(frozen=True)
class BoundScalars:
    """The scalar ingredients of one evaluated cutoff K(t, P)."""

    t: float
    S: float
    V: float
    mu: float
    k_strict: int


@dataclass(frozen=True)
class HorizonBound:
    """A certified cutoff with full provenance."""

    K: int
    scalars: BoundScalars
    certificate: StabilityCertificate
    strategy_id: str


@dataclass(frozen=True)
class Candidate:
    """A scaling/shape pair proposed by one of the built-in strategies."""

    strategy_id: str
    t: float
    P: np.ndarray


@dataclass(frozen=True)
class CandidateBound:
    """An evaluated candidate, kept for reporting."""

    bound: HorizonBound
    scores: tuple[float, float, float, float, float]


class NuResult(NamedTuple):
    value: float
    vertex: np.ndarray
    vertex_index: int


def _require_linear(task: VerificationTask) -> None:
    if not task.system.is_linear:
        raise ValueError("task must be homogenized first (translation b is nonzero)")


def _certificate_for(
    A: np.ndarray, P: np.ndarray, tol: Tolerances, error_cls=InfeasiblePair
) -> StabilityCertificate:
    """Validate P as a strict Lyapunov shape for A and cache its scalars."""
    eig = sym_eig(P, tol)
    if eig.lmin <= tol.pd_rel * max(1.0, eig.lmax):
        raise error_cls(f"shape matrix is not positive definite (lmin {eig.lmin:.3e})")
    margin = sym_eig(P - A.T @ P @ A, tol).lmin
    if margin <= 0.0:
        raise error_cls(f"P - A^T P A is not positive definite (lmin {margin:.3e})")
    norm = weighted_opnorm(A, P, tol)
    if not 0.0 < norm <= 1.0 - tol.norm_margin:
        raise error_cls(f"|A|_P = {norm:.12f} is not strictly below one")
    return StabilityCertificate(
        P=P, residual_margin=float(margin), norm_A_P=float(norm), lmin_P=eig.lmin
    )


def stability_certificate(a_matrix, tol: Tolerances = DEFAULTS) -> StabilityCertificate:
    """Certify spectral radius < 1 by solving P - A^T P A = Id.

    Raises :class:`Unstable` when the Kronecker system is singular or the
    solution fails positive definiteness: the finite-horizon method does not
    apply to such systems.
    """
    a = as_matrix(a_matrix, "A")
    try:
        p = lyapunov_solve(a, np.eye(a.shape[0]), tol)
        return _certificate_for(a, p, tol, error_cls=Unstable)
    except (SingularSystem, Unstable) as exc:
        raise Unstable(f"no quadratic stability certificate exists: {exc}") from exc


def _warn_if_indefinite(task: VerificationTask, tol: Tolerances) -> None:
    if sym_eig(task.objective.Q, tol).lmin < -tol.psd_eig_floor:
        warnings.warn(
            "objective matrix has a negative eigenvalue; per-step maxima over "
            "vertices may underestimate the true supremum on the polytope",
            RuntimeWarning,
            stacklevel=3,
        )


def _vertex_max_values(
    A: np.ndarray, Q: np.ndarray, q: np.ndarray, verts: np.ndarray, k_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Constant-free step values and arg-max vertex indices for k = 0..k_max.

    Long scans split each power as A^k = A^(a*m) A^r with m ~ sqrt(k_max),
    which keeps the number of array operations at O(sqrt(k_max)) instead of
    O(k_max) without changing the max/argmax reductions.
    """
    steps = k_max + 1
    values = np.empty(steps)
    argmax = np.empty(steps, dtype=int)
    m = max(1, math.isqrt(steps - 1) + 1)
    blocked = steps > 64 and m * verts.shape[0] * verts.shape[1] <= 20_000_000
    if not blocked:
        x = verts.copy()
        for k in range(steps):
            vals = np.einsum("ni,ij,nj->n", x, Q, x) + x @ q
            values[k] = vals.max()
            argmax[k] = int(vals.argmax())
            if k + 1 < steps:
                x = x @ A.T
        return values, argmax

    powers = np.empty((m, A.shape[0], A.shape[0]))
    powers[0] = np.eye(A.shape[0])
    for r in range(1, m):
        powers[r] = powers[r - 1] @ A
    block_step = powers[m - 1] @ A  # A^m
    x_r = np.einsum("nj,rij->rni", verts, powers)  # (m, n, d): A^r v rows
    outer = np.eye(A.shape[0])  # A^(a*m)
    blocks = -(-steps // m)
    for a in range(blocks):
        y = x_r @ outer.T
        vals = np.einsum("rni,ij,rnj->rn", y, Q, y) + y @ q
        lo = a * m
        hi = min(lo + m, steps)
        values[lo:hi] = vals.max(axis=1)[: hi - lo]
        argmax[lo:hi] = vals.argmax(axis=1)[: hi - lo]
        if a + 1 < blocks:
            outer = outer @ block_step
    return values, argmax


def nu(task: VerificationTask, k: int, tol: Tolerances = DEFAULTS) -> NuResult:
    """Largest objective value over initial vertices propagated k steps.

    Requires a homogenized task; includes the objective's constant, so the
    result equals the original objective's value at step k.
    """
    _require_linear(task)
    if k < 0:
        raise ValueError("step index must be nonnegative")
    power = mat_pow(task.system.A, k)
    images = task.init.vertices @ power.T
    vals = task.objective.values(images)
    idx = int(vals.argmax())
    return NuResult(float(vals[idx]), task.init.vertices[idx], idx)


def nu_sequence(
    task: VerificationTask,
    k_max: int,
    include_constant: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Step values for k = 0..k_max plus per-step arg-max vertex indices."""
    _require_linear(task)
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    obj = task.objective
    values, argmax = _vertex_max_values(
        task.system.A, obj.Q, obj.q, task.init.vertices, k_max
    )
    if include_constant and obj.constant:
        values = values + obj.constant
    return values, argmax


def _nu0(task: VerificationTask, k: int) -> float:
    """Constant-free step value at a single index."""
    power = mat_pow(task.system.A, k)
    images = task.init.vertices @ power.T
    obj = task.objective
    vals = np.einsum("ni,ij,nj->n", images, obj.Q, images) + images @ obj.q
    return float(vals.max())


def _fast_path_zero(task: VerificationTask, tol: Tolerances) -> bool:
    """Syntactic conditions under which the first positive step index is 0.

    Requires Q nonzero and positive semidefinite, and then one of: q = 0 with
    Q definite and a nonzero vertex; q = 0 with a box of nonempty interior;
    q != 0 with 0 interior to the box.  Interior tests only apply to box
    inputs, where open axes are known syntactically; plain vertex lists fall
    back to the scan.
    """
    obj = task.objective
    if not obj.Q.any():
        return False
    eig = sym_eig(obj.Q, tol)
    if eig.lmin < -tol.psd_eig_floor:
        return False
    box = task.init.box
    if not obj.q.any():
        if eig.lmin > tol.pd_rel * max(1.0, eig.lmax) and task.init.vertices.any():
            return True
        return box is not None and bool(np.all(box[0] < box[1]))
    return (
        box is not None and bool(np.all(box[0] < 0.0)) and bool(np.all(box[1] > 0.0))
    )


def find_k_strict(
    task: VerificationTask,
    cap: int = DEFAULT_KSTRICT_CAP,
    tol: Tolerances = DEFAULTS,
) -> int | None:
    """First k with a strictly positive constant-free step value, or None.

    The decidable fast path returns 0 without scanning; otherwise step
    values are scanned for k = 0..cap and None means not found within the
    cap, which downgrades the pipeline to tail-bound mode.
    """
    _require_linear(task)
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if _fast_path_zero(task, tol):
        return 0
    obj = task.objective
    A_t = task.system.A.T
    x = task.init.vertices.copy()
    for k in range(cap + 1):
        vals = np.einsum("ni,ij,nj->n", x, obj.Q, x) + x @ obj.q
        if float(vals.max()) > tol.strict_pos:
            return k
        if k < cap:
            x = x @ A_t
    return None


def s_value(task: VerificationTask, k_strict: int, tol: Tolerances = DEFAULTS) -> float:
    """Positive threshold S = min(sup x^T Q x, nu_{k_strict}) over vertices.

    Raises :class:`AssumptionViolated` when the result is not strictly
    positive; the verifier then falls back to tail-bound mode.
    """
    _require_linear(task)
    verts = task.init.vertices
    sup_q = float(np.einsum("ni,ij,nj->n", verts, task.objective.Q, verts).max())
    s = min(sup_q, _nu0(task, k_strict))
    if s <= tol.strict_pos:
        raise AssumptionViolated(
            f"threshold S = {s:.3e} is not positive; the horizon bound is undefined"
        )
    return s


def mu(p_matrix, init: InitialSet) -> float:
    """Largest P-weighted norm over initial vertices (sqrt taken after the max)."""
    p = np.asarray(p_matrix, dtype=float)
    verts = init.vertices
    return math.sqrt(max(float(np.einsum("ni,ij,nj->n", verts, p, verts).max()), 0.0))


def _k_formula(
    t: float,
    P: np.ndarray,
    task: VerificationTask,
    S: float,
    tol: Tolerances,
) -> tuple[int, float, float, StabilityCertificate]:
    """Evaluate the cutoff formula, returning (K, V, mu(P), certificate)."""
    if t <= 0.0:
        raise InfeasiblePair(f"scaling t = {t} must be positive")
    cert = _certificate_for(task.system.A, P, tol)
    q_mat = task.objective.Q
    feas = sym_eig(t * P - q_mat, tol).lmin
    if feas < -tol.psd_slack_rel * frobenius(q_mat):
        raise InfeasiblePair(
            f"t*P - Q has negative eigenvalue {feas:.3e}; pair is infeasible"
        )
    v_term = float(np.linalg.norm(task.objective.q)) / (2.0 * math.sqrt(t * cert.lmin_P))
    mu_val = mu(P, task.init)
    if mu_val <= 0.0:
        raise AssumptionViolated("initial set is reduced to the origin")
    # sqrt(S + V^2) - V evaluated as S / (sqrt(S + V^2) + V) to avoid
    # cancellation when V dominates S
    g = S / ((math.sqrt(S + v_term * v_term) + v_term) * math.sqrt(t) * mu_val)
    if not 0.0 < g <= 1.0 + tol.log_arg_slack:
        raise NumeratorOutOfRange(
            f"log argument {g:.15g} outside (0, 1]: S or (t, P) violates a precondition"
        )
    ratio = math.log(min(g, 1.0)) / math.log(cert.norm_A_P)
    k_val = int(math.floor(ratio + tol.log_arg_slack)) + 1
    if k_val < 1:
        raise NumeratorOutOfRange(f"computed cutoff {k_val} below one")
    return k_val, v_term, mu_val, cert


def K_of(
    t: float,
    p_matrix,
    task: VerificationTask,
    S: float,
    tol: Tolerances = DEFAULTS,
) -> int:
    """Certified cutoff K(t, P) for a feasible pair; always a positive integer."""
    _require_linear(task)
    p = as_matrix(p_matrix, "P")
    k_val, _, _, _ = _k_formula(float(t), p, task, float(S), tol)
    return k_val


def tail_bound(k: int, scalars: BoundScalars, norm_A_P: float) -> float:
    """Decreasing upper envelope U(k) = (sqrt(t) mu |A|_P^k + V)^2 - V^2.

    Bounds every constant-free step value from above for the pair that
    produced ``scalars``; tends to zero geometrically.  Evaluated as
    a^2 + 2 a V, which is the same quantity without cancellation.
    """
    a = math.sqrt(scalars.t) * scalars.mu * norm_A_P**k
    return a * a + 2.0 * a * scalars.V


def objective_scores(
    p_matrix, q_matrix, init: InitialSet
) -> tuple[float, float, float, float, float]:
    """Ranking functionals (F0..F4) used to compare candidate shape matrices.

    F0/F2 are the max/sum of vertex P-energies, F1/F3 the same on P - Q, and
    F4 the largest eigenvalue of P.  Scores only rank and report candidates;
    they never affect soundness.
    """
    p = as_matrix(p_matrix, "P")
    q = as_matrix(q_matrix, "Q")
    verts = init.vertices
    energies_p = np.einsum("ni,ij,nj->n", verts, p, verts)
    energies_pq = np.einsum("ni,ij,nj->n", verts, p - q, verts)
    f4 = sym_eig(0.5 * (p + p.T)).lmax
    return (
        float(energies_p.max()),
        float(energies_pq.max()),
        float(energies_p.sum()),
        float(energies_pq.sum()),
        float(f4),
    )


def candidate_Ps(
    a_matrix,
    q_matrix,
    strategy: str = "auto",
    user_P=None,
    epsilon: float = DEFAULT_EPSILON,
    tol: Tolerances = DEFAULTS,
) -> list[Candidate]:
    """Produce feasible (t, P) pairs from the built-in strategies.

    - ``identity``: P0 solving P - A^T P A = Id, with its minimal feasible t.
    - ``q-augmented`` (Q >= 0 only): P1 solving P - A^T P A = Id + Q, scaled
      so that t = 1 is feasible.
    - ``blend``: convex combinations of P0 and P1, each with minimal t.
    - ``user``: a supplied P, validated against P - A^T P A >= epsilon*Id and
      P >= 0; paired with its minimal t and, when P - Q >= 0, also with t = 1.

    ``auto`` runs every applicable strategy.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    a = as_matrix(a_matrix, "A")
    q = as_matrix(q_matrix, "Q")
    d = a.shape[0]
    out: list[Candidate] = []

    p0 = p1 = None
    if strategy in ("auto", "identity", "blend"):
        p0 = lyapunov_solve(a, np.eye(d), tol)
    q_is_psd = sym_eig(q, tol).lmin >= -tol.psd_eig_floor
    if strategy in ("auto", "q-augmented", "blend") and q_is_psd:
        p1 = lyapunov_solve(a, np.eye(d) + q, tol)

    if strategy in ("auto", "identity") and p0 is not None:
        t0 = generalized_lmax(q, p0, tol)
        if t0 > 0.0:
            out.append(Candidate("identity", t0, p0))
    if strategy in ("auto", "q-augmented") and p1 is not None:
        scale = max(1.0, generalized_lmax(q, p1, tol))
        out.append(Candidate("q-augmented", 1.0, scale * p1))
    if strategy in ("auto", "blend") and p0 is not None and p1 is not None:
        for theta in BLEND_WEIGHTS:
            blend = theta * p0 + (1.0 - theta) * p1
            t_blend = generalized_lmax(q, blend, tol)
            if t_blend > 0.0:
                out.append(Candidate(f"blend-{theta:g}", t_blend, blend))

    if user_P is not None and strategy in ("auto", "user"):
        out.extend(_user_candidates(a, q, user_P, epsilon, tol))
    elif strategy == "user":
        raise InvalidUserP("strategy 'user' requires a supplied P matrix")
    return out


def _user_candidates(
    a: np.ndarray, q: np.ndarray, user_P, epsilon: float, tol: Tolerances
) -> list[Candidate]:
    try:
        p = as_matrix(user_P, "user P")
        eig = sym_eig(p, tol)
    except (ValueError, NotPositiveDefinite) as exc:
        raise InvalidUserP(f"user P is not a valid symmetric matrix: {exc}") from exc
    slack = tol.psd_slack_rel * max(1.0, frobenius(p))
    if eig.lmin < -slack:
        raise InvalidUserP(f"user P is not positive semidefinite (lmin {eig.lmin:.3e})")
    margin = sym_eig(p - a.T @ p @ a - epsilon * np.eye(a.shape[0]), tol).lmin
    if margin < -slack:
        raise InvalidUserP(
            f"user P violates P - A^T P A >= {epsilon}*Id by {-margin:.3e}"
        )
    out = []
    t_min = generalized_lmax(q, p, tol)
    if t_min > 0.0:
        out.append(Candidate("user-min-scale", t_min, p))
    if sym_eig(p - q, tol).lmin >= -tol.psd_slack_rel * frobenius(q):
        out.append(Candidate("user-unit-scale", 1.0, p))
    if not out:
        raise InvalidUserP("user P admits no feasible scaling against Q")
    return out


def evaluate_candidates(
    task: VerificationTask,
    k_strict: int | None = None,
    S: float | None = None,
    strategy: str = "auto",
    user_P=None,
    epsilon: float = DEFAULT_EPSILON,
    kstrict_cap: int = DEFAULT_KSTRICT_CAP,
    tol: Tolerances = DEFAULTS,
) -> list[CandidateBound]:
    """Evaluate the cutoff for every applicable candidate pair.

    ``k_strict`` and ``S`` are computed from the task when not supplied.
    Raises :class:`AssumptionViolated` when no strictly positive step value
    exists within the scan cap.
    """
    _require_linear(task)
    _warn_if_indefinite(task, tol)
    if k_strict is None:
        k_strict = find_k_strict(task, kstrict_cap, tol)
        if k_strict is None:
            raise AssumptionViolated(
                f"no strictly positive step value within cap {kstrict_cap}"
            )
    if S is None:
        S = s_value(task, k_strict, tol)
    results: list[CandidateBound] = []
    for cand in candidate_Ps(
        task.system.A, task.objective.Q, strategy, user_P, epsilon, tol
    ):
        try:
            k_val, v_term, mu_val, cert = _k_formula(cand.t, cand.P, task, S, tol)
        except (InfeasiblePair, NumeratorOutOfRange):
            continue
        scalars = BoundScalars(
            t=cand.t, S=S, V=v_term, mu=mu_val, k_strict=int(k_strict)
        )
        results.append(
            CandidateBound(
                bound=HorizonBound(k_val, scalars, cert, cand.strategy_id),
                scores=objective_scores(cand.P, task.objective.Q, task.init),
            )
        )
    if not results:
        raise InfeasiblePair("no candidate pair produced a feasible cutoff")
    return results


def best_K(
    task: VerificationTask,
    k_strict: int | None = None,
    S: float | None = None,
    strategy: str = "auto",
    user_P=None,
    epsilon: float = DEFAULT_EPSILON,
    kstrict_cap: int = DEFAULT_KSTRICT_CAP,
    tol: Tolerances = DEFAULTS,
) -> HorizonBound:
    """Smallest cutoff over all candidate pairs, with full provenance."""
    evaluated = evaluate_candidates(
        task, k_strict, S, strategy, user_P, epsilon, kstrict_cap, tol
    )
    return min(evaluated, key=lambda cb: cb.bound.K).bound
