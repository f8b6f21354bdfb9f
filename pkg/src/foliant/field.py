"""Vector fields, diffeomorphisms, finite-difference Jacobians and a registry.

Maps are vectorized: they take an array whose last axis holds coordinates
and return an array of the same leading shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, EvaluationError, FoliantError, RegistryError
from .expr import Expr, eval_expr, parse_expr
from .linalg import as_vector

MapFn = Callable[[np.ndarray], np.ndarray]
JacFn = Callable[[np.ndarray], np.ndarray]


def _apply(fn: MapFn, points: np.ndarray, out_dim: int | None, what: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(fn(pts), dtype=float)
    except FoliantError:
        raise
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"{what} failed: {exc}") from exc
    if out_dim is not None and out.shape != pts.shape[:-1] + (out_dim,):
        raise DimensionError(f"{what} returned shape {out.shape} for input {pts.shape}")
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return out


class VectorField:
    """F: R^d -> R^d, optionally with an analytic Jacobian."""

    def __init__(self, dim: int, fn: MapFn, jacobian: Optional[JacFn] = None,
                 name: str = "field", exprs: Sequence[Expr] | None = None):
        if dim < 1:
            raise DimensionError("field dimension must be positive")
        self.dim = dim
        self._fn = fn
        self._jac = jacobian
        self.name = name
        self.exprs = tuple(exprs) if exprs is not None else None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise DimensionError(f"{self.name} expects points of dimension {self.dim}")
        return _apply(self._fn, x, self.dim, self.name)

    @property
    def has_jacobian(self) -> bool:
        return self._jac is not None

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        x = as_vector(x)
        if self._jac is not None:
            j = _apply(self._jac, x, None, f"{self.name} jacobian")
            return j.reshape(self.dim, self.dim)
        return fd_jacobian(self, x, h)

    @classmethod
    def from_expressions(cls, texts: Sequence[str], name: str = "expr-field") -> "VectorField":
        dim = len(texts)
        exprs = [parse_expr(t, dim) for t in texts]

        def fn(z):
            return np.stack([np.broadcast_to(eval_expr(e, z), z.shape[:-1]) for e in exprs], axis=-1)

        return cls(dim, fn, name=name, exprs=exprs)

    def __repr__(self) -> str:
        return f"VectorField({self.name!r}, dim={self.dim})"


class DiffeoMap:
    """A map (s, y) -> z with optional inverse and analytic Jacobian."""

    def __init__(self, dim: int, forward: MapFn, inverse: Optional[MapFn] = None,
                 jacobian: Optional[JacFn] = None, name: str = "map"):
        self.dim = dim
        self._forward = forward
        self._inverse = inverse
        self._jac = jacobian
        self.name = name

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape[-1:] != (self.dim,):
            raise DimensionError(f"{self.name} expects points of dimension {self.dim}")
        return _apply(self._forward, w, self.dim, self.name)

    @property
    def has_inverse(self) -> bool:
        return self._inverse is not None

    @property
    def has_jacobian(self) -> bool:
        return self._jac is not None

    def inverse(self, z) -> np.ndarray:
        if self._inverse is None:
            raise FoliantError(f"{self.name} has no inverse")
        z = np.asarray(z, dtype=float)
        return _apply(self._inverse, z, self.dim, f"{self.name} inverse")

    def inverse_map(self) -> "DiffeoMap":
        if self._inverse is None:
            raise FoliantError(f"{self.name} has no inverse")
        return DiffeoMap(self.dim, self._inverse, self._forward, name=f"{self.name}^-1")

    def jacobian(self, w, h: float | None = None) -> np.ndarray:
        w = as_vector(w)
        if self._jac is not None:
            return _apply(self._jac, w, None, f"{self.name} jacobian").reshape(self.dim, self.dim)
        return fd_jacobian(self, w, h)

    def __repr__(self) -> str:
        return f"DiffeoMap({self.name!r}, dim={self.dim})"


@dataclass(frozen=True)
class IVP:
    field: VectorField
    p0: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        p0 = as_vector(self.p0, "p0")
        if p0.size != self.field.dim:
            raise DimensionError("p0 dimension does not match the field")
        object.__setattr__(self, "p0", p0)


def default_step(x: np.ndarray) -> float:
    return 1e-6 * max(1.0, float(np.linalg.norm(x)))


def fd_jacobian(fn, point, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian; column j is (f(x+h e_j) - f(x-h e_j)) / 2h."""
    x = as_vector(point, "point")
    if h is None:
        h = default_step(x)
    if not 1e-9 <= h <= 1e-2:
        raise ValueError(f"finite-difference step {h!r} outside [1e-9, 1e-2]")
    d = x.size
    offsets = h * np.eye(d)
    stencil = np.concatenate([x + offsets, x - offsets])
    vals = np.asarray(fn(stencil), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("non-finite value inside the finite-difference stencil")
    return ((vals[:d] - vals[d:]) / (2.0 * h)).T


# -- registry ----------------------------------------------------------------


def identity_field(dim: int = 2) -> VectorField:
    return VectorField(dim, lambda z: z.copy(), lambda z: np.eye(dim), name="identity-field")


def linear_field(a) -> VectorField:
    """F(z) = A z."""
    a = np.array(a, dtype=float)
    d = a.shape[0]
    return VectorField(d, lambda z: z @ a.T, lambda z: a.copy(), name="linear-field")


def identity_map(dim: int = 2) -> DiffeoMap:
    return DiffeoMap(dim, lambda w: w.copy(), lambda z: z.copy(), lambda w: np.eye(dim),
                     name="identity-foliation")


def _parabola_field(z):
    return np.stack([np.ones(z.shape[:-1]), 1.0 + np.cbrt(z[..., 1] - z[..., 0] ** 2) ** 2], axis=-1)


def _parabola_field_jac(z):
    d = z[1] - z[0] ** 2
    if d == 0.0:
        raise EvaluationError("parabola-field is not differentiable on z2 = z1^2")
    g = (2.0 / 3.0) / np.cbrt(d)
    return np.array([[0.0, 0.0], [-2.0 * z[0] * g, g]])


def _peano_field(z):
    return np.stack([np.ones(z.shape[:-1]), np.cbrt(z[..., 1]) ** 2], axis=-1)


def _peano_field_jac(z):
    if z[1] == 0.0:
        raise EvaluationError("peano-field is not differentiable on z2 = 0")
    return np.array([[0.0, 0.0], [0.0, (2.0 / 3.0) / np.cbrt(z[1])]])


def _parabola_forward(w):
    s, y = w[..., 0], w[..., 1]
    return np.stack([y, s + y**2], axis=-1)


def _parabola_inverse(z):
    return np.stack([z[..., 1] - z[..., 0] ** 2, z[..., 0]], axis=-1)


def _parabola_jac(w):
    return np.array([[0.0, 1.0], [1.0, 2.0 * w[1]]])


def _pendulum(z):
    return np.stack([z[..., 1], -np.sin(z[..., 0])], axis=-1)


def _pendulum_jac(z):
    return np.array([[0.0, 1.0], [-np.cos(z[0]), 0.0]])


def _duffing(z):
    return np.stack([z[..., 1], z[..., 0] - z[..., 0] ** 3], axis=-1)


def _duffing_jac(z):
    return np.array([[0.0, 1.0], [1.0 - 3.0 * z[0] ** 2, 0.0]])


_SIGMA, _RHO, _BETA = 10.0, 28.0, 8.0 / 3.0


def _lorenz(z):
    x, y, w = z[..., 0], z[..., 1], z[..., 2]
    return np.stack([_SIGMA * (y - x), x * (_RHO - w) - y, x * y - _BETA * w], axis=-1)


def _lorenz_jac(z):
    x, y, w = z
    return np.array([[-_SIGMA, _SIGMA, 0.0], [_RHO - w, -1.0, -x], [y, x, -_BETA]])


def _build_registry() -> dict[str, Callable[[], object]]:
    return {
        "parabola-field": lambda: VectorField(2, _parabola_field, _parabola_field_jac,
                                              name="parabola-field"),
        "parabola-foliation": lambda: DiffeoMap(2, _parabola_forward, _parabola_inverse,
                                                _parabola_jac, name="parabola-foliation"),
        "peano-field": lambda: VectorField(2, _peano_field, _peano_field_jac, name="peano-field"),
        "identity-foliation": lambda: identity_map(2),
        "identity-field": lambda: identity_field(2),
        "linear-field": lambda: VectorField(
            2, lambda z: np.stack([np.ones(z.shape[:-1]), z[..., 1]], axis=-1),
            lambda z: np.array([[0.0, 0.0], [0.0, 1.0]]), name="linear-field"),
        "pendulum-field": lambda: VectorField(2, _pendulum, _pendulum_jac, name="pendulum-field"),
        "duffing-field": lambda: VectorField(2, _duffing, _duffing_jac, name="duffing-field"),
        "lorenz-field": lambda: VectorField(3, _lorenz, _lorenz_jac, name="lorenz-field"),
    }


_REGISTRY = _build_registry()

#: Registry entries that are C^1 everywhere.
SMOOTH_FIELDS = ("pendulum-field", "duffing-field", "lorenz-field")


def registry_names() -> list[str]:
    return sorted(_REGISTRY)


def registry_get(name: str):
    """Return a fresh registry object (:class:`VectorField` or :class:`DiffeoMap`)."""
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise RegistryError(f"unknown registry entry {name!r}; known: {', '.join(registry_names())}") from None
