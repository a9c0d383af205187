"""Shared builders for paper systems and random task generation."""

from __future__ import annotations

import numpy as np

from quadinv import (
    AffineSystem,
    InitialSet,
    QuadraticObjective,
    VerificationTask,
    box_to_vertices,
)

HARMONIC_A = np.array([[1.0, 0.01], [-0.01, 0.99]])

_theta = np.pi / 6
ROTATION_A = 0.8 * np.array(
    [[np.cos(_theta), np.sin(_theta)], [-np.sin(_theta), np.cos(_theta)]]
)
ROTATION_B = np.array([1.0, -1.0])


def harmonic_task(Q, q=(0.0, 0.0), alpha=None) -> VerificationTask:
    return VerificationTask(
        system=AffineSystem(A=HARMONIC_A, b=np.zeros(2)),
        init=box_to_vertices([-1.0, -1.0], [1.0, 1.0]),
        objective=QuadraticObjective(Q=Q, q=q, alpha=alpha),
    )


def rotation_task(Q, q=(0.0, 0.0), alpha=None, translated=True) -> VerificationTask:
    if translated:
        b, box = ROTATION_B, ([-1.0, -1.0], [2.0, 2.0])
    else:
        b, box = np.zeros(2), ([-1.0, -1.0], [1.0, 1.0])
    return VerificationTask(
        system=AffineSystem(A=ROTATION_A, b=b),
        init=box_to_vertices(*box),
        objective=QuadraticObjective(Q=Q, q=q, alpha=alpha),
    )


def counterexample_task(alpha=None) -> VerificationTask:
    """One-dimensional task whose step values stay negative but tend to zero."""
    return VerificationTask(
        system=AffineSystem(A=[[0.5]], b=[0.0]),
        init=InitialSet.from_vertices([[0.25], [0.5]]),
        objective=QuadraticObjective(Q=[[1.0]], q=[-1.0], alpha=alpha),
    )


def spectral_radius_estimate(A: np.ndarray, iters: int = 120) -> float:
    """Power-iteration estimate of the spectral radius (geometric mean growth)."""
    d = A.shape[0]
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(d)
    x /= np.linalg.norm(x)
    growths = []
    for _ in range(iters):
        y = A @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        growths.append(norm)
        x = y / norm
    tail = np.array(growths[iters // 2 :])
    return float(np.exp(np.mean(np.log(tail))))


def random_stable_matrix(rng, d: int, target: float | None = None) -> np.ndarray:
    """Random matrix rescaled so the power-iteration radius estimate is < 0.95."""
    a = rng.standard_normal((d, d))
    if target is None:
        target = rng.uniform(0.2, 0.8)
    estimate = spectral_radius_estimate(a)
    return a * (target / max(estimate, 1e-9))


def random_psd(rng, d: int) -> np.ndarray:
    b = rng.standard_normal((d, d))
    m = b @ b.T
    return m / max(np.trace(m) / d, 1e-9)


def random_box(rng, d: int, straddle: bool) -> tuple[np.ndarray, np.ndarray]:
    if straddle:
        lower = -rng.uniform(0.2, 1.5, d)
        upper = rng.uniform(0.2, 1.5, d)
    else:
        lower = rng.uniform(-1.5, 0.5, d)
        upper = lower + rng.uniform(0.2, 2.0, d)
    return lower, upper


def random_linear_task(rng, d: int | None = None) -> VerificationTask:
    """Random stable linear task with a PSD objective and a box initial set."""
    if d is None:
        d = int(rng.integers(1, 5))
    system = AffineSystem(A=random_stable_matrix(rng, d), b=np.zeros(d))
    lower, upper = random_box(rng, d, straddle=bool(rng.integers(0, 2)))
    objective = QuadraticObjective(
        Q=random_psd(rng, d), q=rng.normal(0.0, 0.5, d)
    )
    return VerificationTask(
        system=system, init=box_to_vertices(lower, upper), objective=objective
    )
