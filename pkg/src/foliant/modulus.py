"""Modulus of continuity of a field along the hyperplane through p normal to v.

``modulus_sample`` gives a sampled lower bound of the supremum of
``|F(x) - F(y)| / |x - y|`` over pairs in the slice; ``modulus_gradient`` is
the C^1 oracle: the operator norm of the Jacobian restricted to the slice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, EvaluationError
from .field import VectorField
from .linalg import as_vector, op_norm
from .projective import ProjectivePoint, canonicalize, hyperplane_basis, lift_path
from .sampling import stratified_probe, uniform_ball

DEFAULT_BUDGET = 4096
DEFAULT_SEED = 42
DEFAULT_DELTA = 1e-3


@dataclass(frozen=True)
class ModulusQuery:
    field: VectorField
    p: np.ndarray
    v: ProjectivePoint
    delta: float = DEFAULT_DELTA
    budget: int = DEFAULT_BUDGET
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        p = as_vector(self.p, "p")
        v = self.v if isinstance(self.v, ProjectivePoint) else canonicalize(self.v)
        if not (p.size == self.field.dim == v.dim):
            raise DimensionError("p, v and the field must share one dimension")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class ModulusEstimate:
    value: float
    delta: float
    pairs_used: int
    strata: tuple[tuple[float, float], ...]
    blowup: bool
    seed: int
    growth: float


def slice_quotients(field: VectorField, p: np.ndarray, basis: np.ndarray,
                    a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Difference quotients for slice coordinates ``a``, ``b`` (rows)."""
    x = p + a @ basis.T
    y = p + b @ basis.T
    fx, fy = field(x), field(y)
    return np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(x - y, axis=1)


def modulus_sample(q: ModulusQuery) -> ModulusEstimate:
    basis = hyperplane_basis(q.v).columns
    n = basis.shape[1]
    delta = q.delta
    origin = np.zeros(n)

    def draw(rng, centre, r, m):
        a = centre + r * uniform_ball(rng, m, n)
        b = centre + r * uniform_ball(rng, m, n)
        inside = (np.linalg.norm(a, axis=1) < delta) & (np.linalg.norm(b, axis=1) < delta)
        a, b = a[inside], b[inside]
        return a, b, np.linalg.norm(a - b, axis=1)

    def quotients(a, b, sep):
        x = q.p + a @ basis.T
        y = q.p + b @ basis.T
        fx, fy = q.field(x), q.field(y)
        mag = np.maximum(np.linalg.norm(fx, axis=1), np.linalg.norm(fy, axis=1))
        return np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(x - y, axis=1), mag

    res = stratified_probe(draw, quotients, origin, delta, q.budget, q.seed)
    return ModulusEstimate(value=res.value, delta=delta, pairs_used=res.pairs_used,
                           strata=res.strata, blowup=res.blowup, seed=q.seed, growth=res.growth)


def modulus_gradient(field: VectorField, p, v) -> float:
    """Operator norm of ``J_F(p)`` restricted to the hyperplane normal to ``v``."""
    p = as_vector(p, "p")
    v = v if isinstance(v, ProjectivePoint) else canonicalize(v)
    try:
        jac = field.jacobian(p)
    except EvaluationError:
        raise
    if not np.all(np.isfinite(jac)):
        raise EvaluationError("Jacobian is not finite at p")
    return op_norm(jac @ hyperplane_basis(v).columns)


@dataclass(frozen=True)
class CurveModulus:
    estimates: tuple[ModulusEstimate, ...]
    params: tuple[float, ...]
    max_value: float
    any_blowup: bool

    @property
    def uniform_bound(self) -> bool:
        return not self.any_blowup and np.isfinite(self.max_value)


def modulus_along_curve(field: VectorField, gamma1: Callable[[float], Sequence[float]],
                        gamma2: Callable[[float], Sequence[float]], params: Sequence[float],
                        delta: float = DEFAULT_DELTA, budget: int = DEFAULT_BUDGET,
                        seed: int = DEFAULT_SEED) -> CurveModulus:
    """One modulus estimate at each curve sample ``(gamma1(t), gamma2(t))``."""
    ts = [float(t) for t in params]
    if len(ts) < 16:
        raise ValueError("modulus_along_curve needs at least 16 parameter samples")
    # The lift only checks sampling density here; the modulus ignores the sign.
    lift_path([gamma2(t) for t in ts])
    ests = []
    for i, t in enumerate(ts):
        q = ModulusQuery(field, as_vector(gamma1(t)), canonicalize(gamma2(t)), delta, budget, seed + i)
        ests.append(modulus_sample(q))
    return CurveModulus(tuple(ests), tuple(ts), max(e.value for e in ests),
                        any(e.blowup for e in ests))
