"""Dense real symmetric linear algebra used by the verification pipeline.

The kernels are deliberately simple and self-contained: a cyclic Jacobi
eigensolver for symmetric matrices, Gaussian elimination with partial
pivoting for linear solves, and the Kronecker formulation of the discrete
Lyapunov equation.  numpy supplies storage and elementwise arithmetic only;
no black-box factorizations sit on the certified path.

All functions are pure: inputs are never mutated, outputs are fresh arrays,
and results do not depend on call order, so values can be shared freely
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import (
    ConvergenceFailure,
    NotPositiveDefinite,
    NotSymmetric,
    SingularSystem,
)

__all__ = [
    "SymEig",
    "as_matrix",
    "as_vector",
    "frobenius",
    "sym_eig",
    "solve_linear",
    "lyapunov_solve",
    "inv_sqrt",
    "mat_pow",
    "weighted_opnorm",
    "generalized_lmax",
]


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array."""
    m = np.array(value, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(value, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 1-D array."""
    v = np.array(value, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def frobenius(m: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.asarray(m, dtype=float) ** 2)))


def _require_square(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")


def _check_symmetric(m: np.ndarray, tol: Tolerances, name: str) -> np.ndarray:
    """Validate symmetry within tolerance and return the symmetrized copy."""
    _require_square(m, name)
    asym = frobenius(m - m.T)
    if asym > tol.symmetry_rel * max(1.0, frobenius(m)):
        raise NotSymmetric(f"{name} is not symmetric (asymmetry {asym:.3e})")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class SymEig:
    """Spectral decomposition of a symmetric matrix.

    ``values`` is sorted ascending and ``vectors`` holds the matching
    eigenvectors as columns, orthogonal to working precision, so that
    ``vectors @ diag(values) @ vectors.T`` reconstructs the input.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def lmin(self) -> float:
        return float(self.values[0])

    @property
    def lmax(self) -> float:
        return float(self.values[-1])


def _offdiag_norm(a: np.ndarray) -> float:
    return math.sqrt(2.0 * float(np.sum(np.tril(a, -1) ** 2)))


def sym_eig(matrix, tol: Tolerances = DEFAULTS) -> SymEig:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol.eig_offdiag_rel`` times the input's Frobenius norm, or raise
    :class:`ConvergenceFailure` after ``tol.eig_max_sweeps`` sweeps.
    """
    a = _check_symmetric(as_matrix(matrix, "matrix"), tol, "matrix")
    n = a.shape[0]
    v = np.eye(n)
    if n > 1:
        thresh = tol.eig_offdiag_rel * frobenius(a)
        _jacobi_sweeps(a, v, thresh, tol.eig_max_sweeps)
    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return SymEig(values=values[order], vectors=v[:, order])


def _jacobi_sweeps(a: np.ndarray, v: np.ndarray, thresh: float, max_sweeps: int) -> None:
    """Run cyclic Jacobi rotations in place on ``a``, accumulating into ``v``."""
    n = a.shape[0]
    skip = thresh / (2.0 * n)
    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= thresh:
            return
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(tau) + math.hypot(tau, 1.0))
                if tau < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if _offdiag_norm(a) > thresh:
        raise ConvergenceFailure(
            f"Jacobi iteration did not converge within {max_sweeps} sweeps"
        )


def solve_linear(matrix, rhs, tol: Tolerances = DEFAULTS) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` by Gaussian elimination with partial pivoting.

    ``rhs`` may be a vector or a matrix of stacked right-hand sides.  Raises
    :class:`SingularSystem` when a pivot falls below ``tol.pivot_rel`` times
    the magnitude of the largest input entry.
    """
    a = as_matrix(matrix, "matrix").copy()
    _require_square(a, "matrix")
    b = np.array(rhs, dtype=float)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"rhs has {b.shape[0]} rows, expected {n}")
    pivot_floor = tol.pivot_rel * max(1.0, float(np.max(np.abs(a))) if n else 1.0)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= pivot_floor:
            raise SingularSystem(f"pivot {a[p, j]:.3e} at column {j} below threshold")
        if p != j:
            a[[j, p]] = a[[p, j]]
            b[[j, p]] = b[[p, j]]
        factors = a[j + 1 :, j] / a[j, j]
        a[j + 1 :, j:] -= factors[:, None] * a[j, j:]
        b[j + 1 :] -= factors[:, None] * b[j]
    x = np.empty_like(b)
    for j in range(n - 1, -1, -1):
        x[j] = (b[j] - a[j, j + 1 :] @ x[j + 1 :]) / a[j, j]
    return x[:, 0] if vector_rhs else x


def lyapunov_solve(a_matrix, c_matrix, tol: Tolerances = DEFAULTS) -> np.ndarray:
    """Solve the discrete Lyapunov equation ``P - A^T P A = C`` for symmetric C.

    The equation is flattened to the d^2-dimensional linear system
    ``(Id - kron(A^T, A^T)) vec(P) = vec(C)`` and eliminated with partial
    pivoting.  The result is symmetrized and its residual checked against
    ``tol.lyap_residual * (1 + |C|_F)``.
    """
    a = as_matrix(a_matrix, "A")
    _require_square(a, "A")
    c = _check_symmetric(as_matrix(c_matrix, "C"), tol, "C")
    if c.shape != a.shape:
        raise ValueError(f"C has shape {c.shape}, expected {a.shape}")
    d = a.shape[0]
    system = np.eye(d * d) - np.kron(a.T, a.T)
    p = solve_linear(system, c.reshape(-1), tol).reshape(d, d)
    p = 0.5 * (p + p.T)
    residual = frobenius(p - a.T @ p @ a - c)
    if residual > tol.lyap_residual * (1.0 + frobenius(c)):
        raise SingularSystem(
            f"Lyapunov solve residual {residual:.3e} exceeds tolerance; "
            "the system is too close to the stability boundary"
        )
    return p


def inv_sqrt(matrix, tol: Tolerances = DEFAULTS) -> np.ndarray:
    """Inverse square root of a symmetric positive definite matrix.

    Returns ``V diag(values^-1/2) V^T``; raises :class:`NotPositiveDefinite`
    when the smallest eigenvalue fails ``tol.pd_rel * max(1, lmax)``.
    """
    eig = sym_eig(matrix, tol)
    if eig.lmin <= tol.pd_rel * max(1.0, eig.lmax):
        raise NotPositiveDefinite(
            f"matrix is not positive definite (lmin {eig.lmin:.3e}, lmax {eig.lmax:.3e})"
        )
    return (eig.vectors * eig.values**-0.5) @ eig.vectors.T


def mat_pow(matrix, k: int) -> np.ndarray:
    """k-th power of a square matrix by repeated squaring; ``A^0`` is Id."""
    a = as_matrix(matrix, "matrix")
    _require_square(a, "matrix")
    if k < 0 or int(k) != k:
        raise ValueError(f"exponent must be a nonnegative integer, got {k}")
    k = int(k)
    result = np.eye(a.shape[0])
    base = a.copy()
    while k:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def weighted_opnorm(a_matrix, p_matrix, tol: Tolerances = DEFAULTS) -> float:
    """Operator norm of A in the metric induced by positive definite P.

    Computed as ``sqrt(lmax(P^-1/2 A^T P A P^-1/2))``; invariant under
    positive scaling of P.
    """
    a = as_matrix(a_matrix, "A")
    _require_square(a, "A")
    p = _check_symmetric(as_matrix(p_matrix, "P"), tol, "P")
    root = inv_sqrt(p, tol)
    middle = root @ (a.T @ p @ a) @ root
    middle = 0.5 * (middle + middle.T)
    return math.sqrt(max(sym_eig(middle, tol).lmax, 0.0))


def generalized_lmax(q_matrix, p_matrix, tol: Tolerances = DEFAULTS) -> float:
    """Largest generalized eigenvalue ``lmax(P^-1/2 Q P^-1/2)``.

    This is the smallest scaling t with ``t*P - Q`` positive semidefinite.
    """
    q = _check_symmetric(as_matrix(q_matrix, "Q"), tol, "Q")
    p = _check_symmetric(as_matrix(p_matrix, "P"), tol, "P")
    if q.shape != p.shape:
        raise ValueError(f"Q has shape {q.shape}, expected {p.shape}")
    root = inv_sqrt(p, tol)
    middle = root @ q @ root
    middle = 0.5 * (middle + middle.T)
    return sym_eig(middle, tol).lmax
