"""Pullback of a field through a foliation, transversality and Lipschitz probes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FoliantError, SingularMatrixError
from .field import VectorField, fd_jacobian
from .foliation import Foliation
from .linalg import as_vector, mat_det, mat_inverse
from .sampling import stratified_probe

DEFAULT_RADIUS = 0.25
TRANSVERSALITY_THRESHOLD = 1e-6
_PULLBACK_DET_TOL = 1e-10


class PulledBackField:
    """h(w) = Phi'(w)^{-1} F(Phi(w)), the field in foliation coordinates."""

    def __init__(self, base_field: VectorField, foliation: Foliation):
        if base_field.dim != foliation.dim:
            raise FoliantError("field and foliation dimensions differ")
        self.base_field = base_field
        self.foliation = foliation
        self.dim = base_field.dim

    def _one(self, w: np.ndarray) -> np.ndarray:
        jac = self.foliation.jacobian(w)
        if abs(mat_det(jac)) <= _PULLBACK_DET_TOL:
            raise SingularMatrixError(f"Phi' is singular at {w}")
        return mat_inverse(jac) @ self.base_field(self.foliation(w))

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            return self._one(w)
        flat = w.reshape(-1, self.dim)
        return np.array([self._one(row) for row in flat]).reshape(w.shape)

    def as_field(self) -> VectorField:
        return VectorField(self.dim, self.__call__, name=f"pullback({self.base_field.name})")


def pullback_field(field: VectorField, foliation: Foliation) -> PulledBackField:
    return PulledBackField(field, foliation)


@dataclass(frozen=True)
class Transversality:
    value: float
    normal: np.ndarray


def transversality(field: VectorField, foliation: Foliation) -> Transversality:
    """``e1^T Phi'(0)^{-1} F(p0)`` and the normal row ``e1^T Phi'(0)^{-1}``."""
    jinv = mat_inverse(foliation.jacobian(foliation.origin))
    normal = jinv[0].copy()
    return Transversality(float(normal @ field(foliation.base)), normal)


def transversality_via_inverse(field: VectorField, foliation: Foliation) -> Transversality:
    """Same quantity from the finite-difference gradient of the first component of Phi^{-1} at p0."""
    inv = foliation.map.inverse_map()
    grad = fd_jacobian(inv, foliation.base)[0]
    return Transversality(float(grad @ field(foliation.base)), grad)


@dataclass(frozen=True)
class LipschitzEstimate:
    constant: float
    region: float
    pairs_used: int
    blowup: bool
    seed: int
    strata: tuple[tuple[float, float], ...] = ()
    growth: float = 1.0


def _flat(g: Callable, pts: np.ndarray) -> np.ndarray:
    out = np.asarray(g(pts), dtype=float)
    return out.reshape(pts.shape[0], -1)


def lipschitz_fixing_first(g: Callable[[np.ndarray], np.ndarray], dim: int,
                           radius: float = DEFAULT_RADIUS, budget: int = 4096,
                           seed: int = 42, centre=None) -> LipschitzEstimate:
    """Sampled Lipschitz constant of ``g`` on a box, pairs sharing their first coordinate.

    ``g`` takes arrays of shape ``(m, dim)``; its values are flattened
    row-major and compared in the 2-norm. The box is ``centre + [-r, r]^dim``
    with ``centre`` defaulting to the origin.
    """
    if dim < 2:
        raise ValueError("need at least one coordinate besides the pinned one")
    if not radius > 0:
        raise ValueError("radius must be positive")
    c0 = np.zeros(dim) if centre is None else as_vector(centre)

    def draw(rng, centre_pt, r, m):
        s = centre_pt[0] + r * rng.uniform(-1.0, 1.0, (m, 1))
        y1 = centre_pt[1:] + r * rng.uniform(-1.0, 1.0, (m, dim - 1))
        y2 = centre_pt[1:] + r * rng.uniform(-1.0, 1.0, (m, dim - 1))
        a = np.concatenate([s, y1], axis=1)
        b = np.concatenate([s, y2], axis=1)
        inside = (np.max(np.abs(a - c0), axis=1) <= radius) & (np.max(np.abs(b - c0), axis=1) <= radius)
        a, b = a[inside], b[inside]
        return a, b, np.linalg.norm(a[:, 1:] - b[:, 1:], axis=1)

    def quotients(a, b, sep):
        ga, gb = _flat(g, a), _flat(g, b)
        mag = np.maximum(np.linalg.norm(ga, axis=1), np.linalg.norm(gb, axis=1))
        return np.linalg.norm(ga - gb, axis=1) / sep, mag

    res = stratified_probe(draw, quotients, c0, radius, budget, seed)
    return LipschitzEstimate(res.value, radius, res.pairs_used, res.blowup, seed, res.strata, res.growth)


def lipschitz_along_direction(f: Callable[[np.ndarray], np.ndarray], centre, u,
                              radius: float = DEFAULT_RADIUS, budget: int = 4096,
                              seed: int = 42) -> LipschitzEstimate:
    """Sampled sup of ``|f(p) - f(p + k u)| / |k|`` for p in the box around ``centre``."""
    c0 = as_vector(centre)
    u = as_vector(u)
    dim = c0.size

    def draw(rng, centre_pt, r, m):
        a = centre_pt + r * rng.uniform(-1.0, 1.0, (m, dim))
        k = r * rng.uniform(-1.0, 1.0, (m, 1))
        b = a + k * u
        inside = np.max(np.abs(a - c0), axis=1) <= radius
        return a[inside], b[inside], np.abs(k[inside, 0])

    def quotients(a, b, sep):
        fa, fb = _flat(f, a), _flat(f, b)
        mag = np.maximum(np.linalg.norm(fa, axis=1), np.linalg.norm(fb, axis=1))
        return np.linalg.norm(fa - fb, axis=1) / sep, mag

    res = stratified_probe(draw, quotients, c0, radius, budget, seed)
    return LipschitzEstimate(res.value, radius, res.pairs_used, res.blowup, seed, res.strata, res.growth)


def composed(field: VectorField, foliation: Foliation) -> Callable[[np.ndarray], np.ndarray]:
    """w -> F(Phi(w))."""
    return lambda w: field(foliation(w))


def inverse_jacobian(foliation: Foliation) -> Callable[[np.ndarray], np.ndarray]:
    """w -> Phi'(w)^{-1}, flattened row-major, for a batch of points."""

    def fn(w):
        w = np.atleast_2d(w)
        return np.array([mat_inverse(foliation.jacobian(row)).reshape(-1) for row in w])

    return fn
