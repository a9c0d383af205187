"""Data model: affine systems, vertex-list initial sets, quadratic properties.

Initial sets are stored as explicit vertex lists; the pipeline only ever
evaluates objectives at vertices.  Box inputs additionally remember their
bounds, which later enables the syntactic interior tests used by the
fast path for the first strictly positive step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import (
    DegenerateRange,
    DimensionMismatch,
    DimensionTooLarge,
    EmptyBox,
    SingularShift,
    SingularSystem,
)
from .matcore import _check_symmetric, as_matrix, as_vector, solve_linear

__all__ = [
    "AffineSystem",
    "InitialSet",
    "QuadraticObjective",
    "VerificationTask",
    "box_to_vertices",
    "linear_range_property",
    "fixed_point",
    "homogenize",
]

MAX_BOX_DIM = 24


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class AffineSystem:
    """Discrete-time dynamics x' = A x + b."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {a.shape}")
        b = as_vector(self.b, "b")
        if b.shape[0] != a.shape[0]:
            raise DimensionMismatch(f"b has length {b.shape[0]}, expected {a.shape[0]}")
        object.__setattr__(self, "A", _freeze(a))
        object.__setattr__(self, "b", _freeze(b))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def is_linear(self) -> bool:
        return not self.b.any()

    def step(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b


def _canonical_key(vertex: np.ndarray, sig_digits: int) -> tuple:
    fmt = f"%.{sig_digits - 1}e"
    return tuple("0" if x == 0 else fmt % x for x in vertex)


@dataclass(frozen=True)
class InitialSet:
    """Polytope of initial states given by its extreme points.

    ``vertices`` is an (n, d) array, one vertex per row.  ``box`` carries
    (lower, upper) bounds when the set came from a box; it is metadata and
    never consulted for the vertex list itself.

    Construct via :meth:`from_vertices` to drop duplicate vertices (exact
    comparison after rounding to 12 significant digits); the raw constructor
    keeps rows one-to-one, which shifted copies rely on.
    """

    vertices: np.ndarray
    box: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise DimensionMismatch(
                f"vertices must form a nonempty 2-D array, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices contain non-finite entries")
        object.__setattr__(self, "vertices", _freeze(v))
        if self.box is not None:
            lower = _freeze(as_vector(self.box[0], "lower"))
            upper = _freeze(as_vector(self.box[1], "upper"))
            if lower.shape != upper.shape or lower.shape[0] != v.shape[1]:
                raise DimensionMismatch("box bounds do not match vertex dimension")
            object.__setattr__(self, "box", (lower, upper))

    @classmethod
    def from_vertices(cls, vertices, tol: Tolerances = DEFAULTS) -> InitialSet:
        v = np.atleast_2d(np.array(vertices, dtype=float))
        seen: set[tuple] = set()
        keep: list[int] = []
        for i, row in enumerate(v):
            key = _canonical_key(row, tol.vertex_sig_digits)
            if key not in seen:
                seen.add(key)
                keep.append(i)
        return cls(vertices=v[keep])

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def shifted(self, offset: np.ndarray) -> InitialSet:
        """Translate every vertex (and box bounds) by ``-offset``, keeping order."""
        box = None
        if self.box is not None:
            box = (self.box[0] - offset, self.box[1] - offset)
        return InitialSet(vertices=self.vertices - offset, box=box)


def box_to_vertices(lower, upper, tol: Tolerances = DEFAULTS) -> InitialSet:
    """Expand a box into its corner vertices.

    Degenerate axes (lower == upper) contribute a single value, so the
    result has 2^m vertices for m non-degenerate axes.
    """
    lo = as_vector(lower, "lower")
    hi = as_vector(upper, "upper")
    if lo.shape != hi.shape:
        raise DimensionMismatch("lower and upper bounds differ in length")
    d = lo.shape[0]
    if d > MAX_BOX_DIM:
        raise DimensionTooLarge(f"box dimension {d} exceeds limit {MAX_BOX_DIM}")
    if np.any(lo > hi):
        bad = int(np.argmax(lo > hi))
        raise EmptyBox(f"lower[{bad}] = {lo[bad]} exceeds upper[{bad}] = {hi[bad]}")
    axes = [(l,) if l == u else (l, u) for l, u in zip(lo, hi)]
    corners = np.array(list(itertools.product(*axes)), dtype=float)
    return InitialSet(vertices=corners, box=(lo, hi))


@dataclass(frozen=True)
class QuadraticObjective:
    """Quadratic form x^T Q x + q^T x + constant with optional level alpha.

    The constant offset is zero for user-posed properties; homogenization
    of an affine system folds the translation's contribution into it.
    """

    Q: np.ndarray
    q: np.ndarray
    alpha: float | None = None
    constant: float = 0.0

    def __post_init__(self):
        q_mat = _check_symmetric(as_matrix(self.Q, "Q"), DEFAULTS, "Q")
        q_vec = as_vector(self.q, "q")
        if q_vec.shape[0] != q_mat.shape[0]:
            raise DimensionMismatch(
                f"q has length {q_vec.shape[0]}, expected {q_mat.shape[0]}"
            )
        object.__setattr__(self, "Q", _freeze(q_mat))
        object.__setattr__(self, "q", _freeze(q_vec))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x + self.q @ x + self.constant)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at each row of an (n, d) array."""
        p = np.asarray(points, dtype=float)
        return np.einsum("ni,ij,nj->n", p, self.Q, p) + p @ self.q + self.constant


def linear_range_property(c, lower: float, upper: float) -> QuadraticObjective:
    """Encode the band ``lower <= c^T x <= upper`` as a quadratic sublevel set.

    The band equals ``{x : (c^T x - lower)(c^T x - upper) <= 0}``, i.e.
    Q = c c^T, q = -(lower + upper) c and level -lower*upper.
    """
    c = as_vector(c, "c")
    lower = float(lower)
    upper = float(upper)
    if lower >= upper:
        raise DegenerateRange(f"range [{lower}, {upper}] is empty or a point")
    if not c.any():
        raise DegenerateRange("direction vector c is zero")
    return QuadraticObjective(
        Q=np.outer(c, c), q=-(lower + upper) * c, alpha=-lower * upper
    )


@dataclass(frozen=True)
class VerificationTask:
    """A system, an initial set and a quadratic property, dimensions agreeing."""

    system: AffineSystem
    init: InitialSet
    objective: QuadraticObjective

    def __post_init__(self):
        d = self.system.dim
        if self.init.dim != d:
            raise DimensionMismatch(
                f"initial set dimension {self.init.dim} != system dimension {d}"
            )
        if self.objective.dim != d:
            raise DimensionMismatch(
                f"objective dimension {self.objective.dim} != system dimension {d}"
            )

    @property
    def dim(self) -> int:
        return self.system.dim


def fixed_point(system: AffineSystem, tol: Tolerances = DEFAULTS) -> np.ndarray:
    """Fixed point (Id - A)^-1 b of the affine map."""
    if system.is_linear:
        return np.zeros(system.dim)
    try:
        return solve_linear(np.eye(system.dim) - system.A, system.b, tol)
    except SingularSystem as exc:
        raise SingularShift("Id - A is numerically singular") from exc


def homogenize(task: VerificationTask, tol: Tolerances = DEFAULTS) -> VerificationTask:
    """Rewrite an affine task as an equivalent linear one (b = 0).

    With the shift s = (Id - A)^-1 b, trajectories satisfy x_k = A^k y_0 + s
    for y_0 = x_0 - s, so vertices move by -s, the linear coefficient becomes
    2 Q s + q, and s^T Q s + q^T s joins the objective's constant.  Objective
    values along matching trajectories are unchanged; vertex order is kept.
    """
    if task.system.is_linear:
        return task
    shift = fixed_point(task.system, tol)
    obj = task.objective
    new_objective = QuadraticObjective(
        Q=obj.Q,
        q=2.0 * (obj.Q @ shift) + obj.q,
        alpha=obj.alpha,
        constant=obj.constant + float(shift @ obj.Q @ shift + obj.q @ shift),
    )
    return VerificationTask(
        system=AffineSystem(A=task.system.A, b=np.zeros(task.dim)),
        init=task.init.shifted(shift),
        objective=new_objective,
    )
