"""Local n-foliations: affine, graph and curve-driven constructions."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateFrameError, DimensionError, EvaluationError, TransversalityError
from .field import DiffeoMap, fd_jacobian, identity_map
from .linalg import as_vector, mat_det, rotation_between, unit
from .projective import OrthonormalBasis, canonicalize, lift_path

BASE_TOL = 1e-10
DET_TOL = 1e-8
TRANSVERSAL_TOL = 1e-6
SHRINK_TOL = 1e-6
ARC_LENGTH_BOUNDS = (0.5, 2.0)


@dataclass(frozen=True)
class Foliation:
    """A diffeomorphism Phi(s, y) whose leaves are s = const, based at ``base``."""

    map: DiffeoMap
    base: np.ndarray
    provenance: str  # "affine" | "graph" | "curve" | "identity" | "registry"
    frame: Optional[Callable[[float], np.ndarray]] = None
    interval: Optional[tuple[float, float]] = None
    notes: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.map.dim

    def __call__(self, w) -> np.ndarray:
        return self.map(w)

    def jacobian(self, w) -> np.ndarray:
        return self.map.jacobian(w)

    @property
    def origin(self) -> np.ndarray:
        return np.zeros(self.dim)


def _validated(f: Foliation, check_det: bool = True) -> Foliation:
    phi0 = f.map(f.origin)
    if np.linalg.norm(phi0 - f.base) > BASE_TOL:
        raise DegenerateFrameError(f"Phi(0) = {phi0} does not hit the base point {f.base}")
    if check_det:
        det = mat_det(f.jacobian(f.origin))
        if abs(det) <= DET_TOL:
            raise DegenerateFrameError(f"Phi'(0) is singular (det {det:.3e})")
    return f


def from_map(m: DiffeoMap, provenance: str = "registry") -> Foliation:
    """Wrap an existing diffeomorphism; the base point is ``m(0)``."""
    base = m(np.zeros(m.dim))
    return _validated(Foliation(m, base, provenance))


def identity_foliation(p0) -> Foliation:
    """Phi(s, y) = p0 + (s, y)."""
    p0 = as_vector(p0, "p0")
    d = p0.size
    if not np.any(p0):
        return _validated(Foliation(identity_map(d), p0, "identity"))
    m = DiffeoMap(d, lambda w: w + p0, lambda z: z - p0, lambda w: np.eye(d), name="identity-foliation")
    return _validated(Foliation(m, p0, "identity"))


def _basis_columns(v_basis) -> np.ndarray:
    if isinstance(v_basis, OrthonormalBasis):
        return v_basis.columns
    cols = np.array([as_vector(c) for c in v_basis], dtype=float).T
    return cols


def affine_foliation(p0, w, v_basis) -> Foliation:
    """Phi(s, y) = p0 + s w + sum_i y_i b_i, leaves are translates of span(b_i)."""
    p0 = as_vector(p0, "p0")
    w = as_vector(w, "w")
    cols = _basis_columns(v_basis)
    d = p0.size
    if w.size != d or cols.shape != (d, d - 1):
        raise DimensionError(f"need w in R^{d} and {d - 1} basis vectors of R^{d}")
    q, _ = np.linalg.qr(cols)
    w_perp = w - q @ (q.T @ w)
    if np.linalg.norm(w_perp) <= 1e-8:
        raise DegenerateFrameError("w lies in the leaf hyperplane V")
    b = np.column_stack([w, cols])
    b_inv = np.linalg.inv(b)
    m = DiffeoMap(d, lambda x: p0 + x @ b.T, lambda z: (z - p0) @ b_inv.T,
                  lambda x: b.copy(), name="affine-foliation")
    return _validated(Foliation(m, p0, "affine"))


def graph_foliation(g: Callable[[np.ndarray], np.ndarray], n: int = 1,
                    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> Foliation:
    """Phi(s, y) = (y, s + g(y)) with inverse (z_1..z_n, z_{n+1}) -> (z_{n+1} - g(z_1..z_n), z_1..z_n).

    ``g`` maps arrays of shape ``(..., n)`` to ``(...)``; ``grad`` (optional)
    returns its gradient at a single point.
    """
    d = n + 1

    def g_eval(y):
        with np.errstate(all="ignore"):
            out = np.asarray(g(y), dtype=float)
        return np.broadcast_to(out, y.shape[:-1])

    def forward(w):
        s, y = w[..., 0], w[..., 1:]
        return np.concatenate([y, (s + g_eval(y))[..., None]], axis=-1)

    def inverse(z):
        y = z[..., :n]
        return np.concatenate([(z[..., n] - g_eval(y))[..., None], y], axis=-1)

    def jac(w):
        y = w[1:]
        dg = as_vector(grad(y)) if grad is not None else fd_jacobian(lambda u: g_eval(u), y)[0]
        j = np.zeros((d, d))
        j[:n, 1:] = np.eye(n)
        j[n, 0] = 1.0
        j[n, 1:] = dg
        return j

    m = DiffeoMap(d, forward, inverse, jac, name="graph-foliation")
    try:
        base = m(np.zeros(d))
    except EvaluationError as exc:
        raise EvaluationError(f"g cannot be evaluated at 0: {exc}") from exc
    return _validated(Foliation(m, base, "graph"))


@dataclass(frozen=True)
class CurveFrame:
    """A C^1 path (gamma1, gamma2) into points x directions, on ``interval`` containing 0."""

    gamma1: Callable[[float], Sequence[float]]
    gamma2: Callable[[float], Sequence[float]]
    interval: tuple[float, float]
    gamma1_deriv: Optional[Callable[[float], Sequence[float]]] = None

    def point(self, t: float) -> np.ndarray:
        return as_vector(self.gamma1(t), "gamma1")

    def velocity(self, t: float) -> np.ndarray:
        if self.gamma1_deriv is not None:
            return as_vector(self.gamma1_deriv(t), "gamma1'")
        h = 1e-6 * max(1.0, abs(t))
        return (self.point(t + h) - self.point(t - h)) / (2.0 * h)


class _CurveChart:
    """Evaluates A(s) = R_{e1}^{lift(s)} on demand with the lift's sign."""

    def __init__(self, frame: CurveFrame, grid: np.ndarray, lifted: list[np.ndarray], lo: float, hi: float):
        self.frame = frame
        self.grid = grid
        self.lifted = lifted
        self.lo, self.hi = lo, hi
        self.e1 = unit(0, lifted[0].size)

    def direction(self, s: float) -> np.ndarray:
        if not self.lo <= s <= self.hi:
            raise EvaluationError(f"s = {s} lies outside the working interval [{self.lo}, {self.hi}]")
        rep = canonicalize(self.frame.gamma2(s)).vector
        i = bisect.bisect_left(self.grid, s)
        cand = [j for j in (i - 1, i) if 0 <= j < len(self.grid)]
        j = min(cand, key=lambda j: abs(self.grid[j] - s))
        return rep if rep @ self.lifted[j] >= 0 else -rep

    def frame_matrix(self, s: float) -> np.ndarray:
        return rotation_between(self.e1, self.direction(float(s)))

    def forward(self, w: np.ndarray) -> np.ndarray:
        flat = w.reshape(-1, w.shape[-1])
        out = np.empty_like(flat)
        for k, row in enumerate(flat):
            a = self.frame_matrix(row[0])
            out[k] = self.frame.point(row[0]) + a[:, 1:] @ row[1:]
        return out.reshape(w.shape)


def curve_foliation(frame: CurveFrame, samples: int = 64, require_transversal: bool = True) -> Foliation:
    """Phi(s, y) = gamma1(s) + A(s) (0, y) with A(s) the rotation taking e1 to the lifted gamma2(s).

    Checks transversality ``|<gamma1'(0), lift(0)>| > 1e-6`` unless
    ``require_transversal`` is false, and shrinks the working interval
    where the lift approaches ``-e1``; the shrink is recorded in ``notes``.
    """
    a, b = frame.interval
    if not a < 0.0 < b:
        raise ValueError("the curve interval must contain 0 in its interior")
    if samples < 2:
        raise ValueError("need at least two samples")
    grid = np.union1d(np.linspace(a, b, samples), [0.0])
    i0 = int(np.searchsorted(grid, 0.0))

    speeds = [np.linalg.norm(frame.velocity(t)) for t in grid]
    lo_speed, hi_speed = ARC_LENGTH_BOUNDS
    if min(speeds) < lo_speed or max(speeds) > hi_speed:
        raise ValueError(
            f"|gamma1'| ranges over [{min(speeds):.3g}, {max(speeds):.3g}], outside [{lo_speed}, {hi_speed}]"
        )

    dirs = [frame.gamma2(t) for t in grid]
    fwd = lift_path(dirs[i0:])
    bwd = lift_path(dirs[: i0 + 1][::-1])
    # both halves start from the same canonical choice at s = 0
    lifted = bwd[::-1][:-1] + fwd

    p0 = frame.point(0.0)
    d = p0.size
    if lifted[0].size != d:
        raise DimensionError("gamma1 and gamma2 dimensions differ")

    # A sample is usable when its angle to -e1 exceeds the angular step to its
    # neighbours plus a margin, so the pole cannot hide between two samples.
    angles = [float(np.arccos(np.clip(-v[0], -1.0, 1.0))) for v in lifted]
    steps = [float(np.arccos(np.clip(a @ b, -1.0, 1.0))) for a, b in zip(lifted, lifted[1:])]
    margin = float(np.sqrt(2.0 * SHRINK_TOL))
    ok = []
    for i, ang in enumerate(angles):
        near = max(steps[i - 1] if i > 0 else 0.0, steps[i] if i < len(steps) else 0.0)
        ok.append(ang > near + margin)
    lo_i = i0
    while lo_i > 0 and ok[lo_i - 1]:
        lo_i -= 1
    hi_i = i0
    while hi_i < len(grid) - 1 and ok[hi_i + 1]:
        hi_i += 1
    notes = []
    if lo_i > 0 or hi_i < len(grid) - 1:
        notes.append(f"working interval shrunk to [{grid[lo_i]:.6g}, {grid[hi_i]:.6g}] "
                     f"where the lift nears -e1")

    tangency = float(frame.velocity(0.0) @ lifted[i0])
    if require_transversal and abs(tangency) <= TRANSVERSAL_TOL:
        raise TransversalityError(f"gamma1'(0) is orthogonal to gamma2(0) (inner product {tangency:.3e})")

    chart = _CurveChart(frame, grid[lo_i:hi_i + 1], lifted[lo_i:hi_i + 1], grid[lo_i], grid[hi_i])
    m = DiffeoMap(d, chart.forward, name="curve-foliation")
    fol = Foliation(m, p0, "curve", frame=chart.frame_matrix,
                    interval=(float(grid[lo_i]), float(grid[hi_i])), notes=tuple(notes))
    return _validated(fol, check_det=require_transversal)
