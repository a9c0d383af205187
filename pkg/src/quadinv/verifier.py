"""End-to-end decision procedure and the brute-force oracle.

``optimize`` computes the exact supremum of the objective over the reachable
set by homogenizing, certifying stability, bounding the horizon and
enumerating vertex trajectories up to the cutoff.  ``verify`` turns that
into Proved / Disproved verdicts with witnesses; when the positivity
assumption behind the cutoff fails it falls back to a tail-bound argument
that can still prove levels above the sequence's limit, or disprove from
samples.  ``brute_force_oracle`` scans the raw step-value sequence and
reports the empirical stopping ranks, independently of the bound engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import AssumptionViolated
from .horizon import (
    DEFAULT_EPSILON,
    DEFAULT_KSTRICT_CAP,
    HorizonBound,
    _warn_if_indefinite,
    best_K,
    mu,
    nu_sequence,
    stability_certificate,
)
from .matcore import generalized_lmax
from .model import AffineSystem, VerificationTask, homogenize

__all__ = [
    "VerdictStatus",
    "Optimum",
    "TailInfo",
    "Verdict",
    "OracleReport",
    "trajectory",
    "optimize",
    "verify",
    "brute_force_oracle",
]

DEFAULT_TAIL_CAP = 10_000


class VerdictStatus(str, Enum):
    PROVED = "Proved"
    DISPROVED = "Disproved"
    PROVED_TAIL = "ProvedByTailBound"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Optimum:
    """Supremum of the objective over reachable states, with its maximizer."""

    value: float
    arg_k: int
    arg_vertex: np.ndarray
    bound: HorizonBound


@dataclass(frozen=True)
class TailInfo:
    """Scan horizon and the decreasing envelope's value there."""

    horizon: int
    bound: float


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    alpha: float
    optimum: Optimum | None = None
    witness: np.ndarray | None = None
    tail_info: TailInfo | None = None
    message: str = ""


@dataclass(frozen=True)
class OracleReport:
    """Empirical stopping ranks read off a finite scan of step values.

    ``k_strict_emp``/``k_geq_emp`` are the first strictly/weakly positive
    indices; ``K_strict_emp``/``K_geq_emp`` the first indices whose running
    maximum strictly/weakly dominates the remaining tail of the scan.  None
    encodes "not found within the horizon".
    """

    horizon: int
    nu_samples: np.ndarray
    sup_emp: float
    k_strict_emp: int | None
    k_geq_emp: int | None
    K_strict_emp: int | None
    K_geq_emp: int | None


def trajectory(system: AffineSystem, x0, k: int) -> np.ndarray:
    """States x_0..x_k of the iterated map, as rows of a (k+1, d) array."""
    if k < 0:
        raise ValueError("trajectory length must be nonnegative")
    x = np.asarray(x0, dtype=float)
    out = np.empty((k + 1, system.dim))
    out[0] = x
    for i in range(k):
        out[i + 1] = system.step(out[i])
    return out


def optimize(
    task: VerificationTask,
    kstrict_cap: int = DEFAULT_KSTRICT_CAP,
    strategy: str = "auto",
    user_P=None,
    epsilon: float = DEFAULT_EPSILON,
    tol: Tolerances = DEFAULTS,
) -> Optimum:
    """Exact supremum of the objective over all reachable states.

    The maximizer is reported in original coordinates.  Propagates
    :class:`Unstable` and :class:`AssumptionViolated` from the pipeline.
    """
    stability_certificate(task.system.A, tol)
    hom = homogenize(task, tol)
    bound = best_K(
        hom,
        strategy=strategy,
        user_P=user_P,
        epsilon=epsilon,
        kstrict_cap=kstrict_cap,
        tol=tol,
    )
    values, argmax = nu_sequence(hom, bound.K)
    arg_k = int(values.argmax())
    vertex = task.init.vertices[int(argmax[arg_k])]
    return Optimum(
        value=float(values[arg_k]), arg_k=arg_k, arg_vertex=vertex, bound=bound
    )


def verify(
    task: VerificationTask,
    alpha: float | None = None,
    kstrict_cap: int = DEFAULT_KSTRICT_CAP,
    tail_cap: int = DEFAULT_TAIL_CAP,
    strategy: str = "auto",
    user_P=None,
    epsilon: float = DEFAULT_EPSILON,
    tol: Tolerances = DEFAULTS,
) -> Verdict:
    """Decide whether the sublevel set {objective <= alpha} is invariant.

    Proved means the computed supremum is at most alpha; Disproved comes with
    a witness trajectory whose endpoint exceeds alpha by more than the
    decision slack.  Values inside the slack band are reported Inconclusive
    with both numbers.  When the horizon bound is unavailable the tail-bound
    fallback scans up to ``tail_cap`` steps.
    """
    if alpha is None:
        alpha = task.objective.alpha
    if alpha is None:
        raise ValueError("verify requires a level alpha on the objective or as argument")
    alpha = float(alpha)
    try:
        optimum = optimize(task, kstrict_cap, strategy, user_P, epsilon, tol)
    except AssumptionViolated:
        return _tail_verdict(task, alpha, tail_cap, tol)
    slack = tol.alpha_slack
    if optimum.value <= alpha:
        return Verdict(
            status=VerdictStatus.PROVED,
            alpha=alpha,
            optimum=optimum,
            message=f"supremum {optimum.value:.12g} <= {alpha:.12g}",
        )
    witness = trajectory(task.system, optimum.arg_vertex, optimum.arg_k)
    if optimum.value > alpha + slack:
        return Verdict(
            status=VerdictStatus.DISPROVED,
            alpha=alpha,
            optimum=optimum,
            witness=witness,
            message=(
                f"objective reaches {optimum.value:.12g} > {alpha:.12g} "
                f"at step {optimum.arg_k}"
            ),
        )
    return Verdict(
        status=VerdictStatus.INCONCLUSIVE,
        alpha=alpha,
        optimum=optimum,
        message=(
            f"supremum {optimum.value:.17g} and level {alpha:.17g} differ by "
            f"less than the decision slack {slack:g}"
        ),
    )


def _tail_verdict(
    task: VerificationTask, alpha: float, cap: int, tol: Tolerances
) -> Verdict:
    """Fallback when no strictly positive step value was found.

    The decreasing envelope U(k) bounds the constant-free step values for
    any feasible pair, so once U drops below alpha minus the objective's
    constant, no later step can violate the level.
    """
    hom = homogenize(task, tol)
    cert = stability_certificate(task.system.A, tol)
    obj = hom.objective
    # any scaling >= lmax(P^-1/2 Q P^-1/2) is feasible, and the envelope
    # improves as t shrinks; the floor keeps V = |q|/(2 sqrt(t lmin)) finite
    t = max(generalized_lmax(obj.Q, cert.P, tol), tol.strict_pos)
    mu_val = mu(cert.P, hom.init)
    v_term = float(np.linalg.norm(obj.q)) / (2.0 * math.sqrt(t * cert.lmin_P))
    sqrt_t_mu = math.sqrt(t) * mu_val

    def envelope(k: int) -> float:
        a = sqrt_t_mu * cert.norm_A_P**k
        return a * a + 2.0 * a * v_term

    target = alpha - obj.constant
    horizon = cap
    if mu_val == 0.0:
        horizon = 0
    elif target > 0.0:
        g = target / ((math.sqrt(target + v_term**2) + v_term) * sqrt_t_mu)
        if g >= 1.0:
            horizon = 0
        else:
            needed = int(math.ceil(math.log(g) / math.log(cert.norm_A_P)))
            horizon = min(max(needed, 0), cap)
            while not envelope(horizon) < target and horizon < cap:
                horizon += 1
    # capped: the envelope never strictly certified the tail within the cap
    capped = not envelope(horizon) < target

    values, argmax = nu_sequence(hom, horizon)
    arg_k = int(values.argmax())
    peak = float(values[arg_k])
    tail = TailInfo(horizon=horizon, bound=envelope(horizon))
    if peak > alpha + tol.alpha_slack:
        vertex = task.init.vertices[int(argmax[arg_k])]
        return Verdict(
            status=VerdictStatus.DISPROVED,
            alpha=alpha,
            witness=trajectory(task.system, vertex, arg_k),
            tail_info=tail,
            message=f"sampled objective {peak:.12g} > {alpha:.12g} at step {arg_k}",
        )
    if not capped and peak <= alpha:
        return Verdict(
            status=VerdictStatus.PROVED_TAIL,
            alpha=alpha,
            tail_info=tail,
            message=(
                f"samples up to step {horizon} stay at or below {alpha:.12g} and the "
                f"tail envelope {tail.bound:.12g} rules out later violations"
            ),
        )
    return Verdict(
        status=VerdictStatus.INCONCLUSIVE,
        alpha=alpha,
        tail_info=tail,
        message=(
            f"no violation sampled up to step {horizon}, but the tail envelope "
            f"{tail.bound:.12g} does not fall below the level {alpha:.12g}"
        ),
    )


def _first_index(mask: np.ndarray) -> int | None:
    hits = np.nonzero(mask)[0]
    return int(hits[0]) if hits.size else None


def brute_force_oracle(
    task: VerificationTask, horizon: int, tol: Tolerances = DEFAULTS
) -> OracleReport:
    """Scan step values up to the horizon and read off empirical ranks.

    Works directly on affine dynamics (no homogenization or stability
    needed); sample k holds the maximum objective value over all length-k
    trajectories from initial vertices.
    """
    if horizon < 1:
        raise ValueError("oracle horizon must be at least 1")
    _warn_if_indefinite(task, tol)
    if task.system.is_linear:
        values, _ = nu_sequence(task, horizon)
    else:
        x = task.init.vertices.copy()
        values = np.empty(horizon + 1)
        for k in range(horizon + 1):
            values[k] = float(task.objective.values(x).max())
            if k < horizon:
                x = x @ task.system.A.T + task.system.b
    running = np.maximum.accumulate(values)
    # tail_max[k] = max over j in (k, horizon]; only defined for k < horizon
    tail_max = np.maximum.accumulate(values[::-1])[::-1][1:]
    weak = _first_index(running[:-1] >= tail_max)
    strict = _first_index(running[:-1] > tail_max)
    return OracleReport(
        horizon=horizon,
        nu_samples=values,
        sup_emp=float(values.max()),
        k_strict_emp=_first_index(values > tol.strict_pos),
        k_geq_emp=_first_index(values >= -tol.strict_pos),
        K_strict_emp=strict,
        K_geq_emp=weak,
    )
