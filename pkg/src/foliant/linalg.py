"""Small dense linear algebra and the rotation formula.

Vectors and matrices are plain float64 numpy arrays. Everything here is a
pure function of its inputs.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .errors import (
    AntipodalError,
    DimensionError,
    NonFiniteError,
    NonUnitVectorError,
    SingularMatrixError,
)

ANTIPODAL_TOL = 1e-8
UNIT_TOL = 1e-9
SINGULAR_RTOL = 1e-13

_POWER_MAX_ITER = 500
_POWER_RTOL = 1e-12
_POWER_SEED = 20170417
_POWER_SQUARINGS = 6


def as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.array(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else np.array(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return v


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return a


def unit(e: int, dim: int) -> np.ndarray:
    """The standard basis vector e_{e+1} of R^dim (0-based index)."""
    v = np.zeros(dim)
    v[e] = 1.0
    return v


def normalize(x) -> np.ndarray:
    v = as_vector(x)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise NonUnitVectorError("cannot normalize the zero vector")
    return v / n


def max_norm(x) -> float:
    """Max-norm of a vector or induced infinity-norm of a matrix."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        return float(np.max(np.abs(a)))
    return float(np.max(np.sum(np.abs(a), axis=1)))


def skew_outer(x, y) -> np.ndarray:
    """Return ``y x^T - x y^T``."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    return np.outer(y, x) - np.outer(x, y)


def _check_unit(v: np.ndarray, name: str) -> None:
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise NonUnitVectorError(f"{name} is not a unit vector (norm {np.linalg.norm(v)!r})")


def rotation_between(u, v, antipodal_tol: float = ANTIPODAL_TOL) -> np.ndarray:
    """Rotation in SO(n+1) sending the unit vector ``u`` to ``v``.

    Computed as ``Id + K + K^2 / (1 + <u, v>)`` with ``K = v u^T - u v^T``.
    The formula has a pole at ``v = -u``; inputs with ``1 + <u, v>`` at or
    below ``antipodal_tol`` raise :class:`AntipodalError`.
    """
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.size} vs {v.size}")
    _check_unit(u, "u")
    _check_unit(v, "v")
    c = 1.0 + float(u @ v)
    if c <= antipodal_tol:
        raise AntipodalError(f"u and v are antipodal (1 + <u,v> = {c:.3e})")
    k = skew_outer(u, v)
    return np.eye(u.size) + k + (k @ k) / c


def rotation_limit_probe(u, wbar, t: float) -> np.ndarray:
    """``rotation_between(u, v)`` for ``v = (t*wbar - u)/|t*wbar - u|``.

    As ``t -> 0`` the target approaches ``-u`` along the direction ``wbar``;
    the limit depends on ``wbar`` as soon as the dimension is at least 3.
    """
    u = as_vector(u, "u")
    wbar = as_vector(wbar, "wbar")
    if u.shape != wbar.shape:
        raise DimensionError(f"dimension mismatch: {u.size} vs {wbar.size}")
    _check_unit(wbar, "wbar")
    if abs(float(u @ wbar)) > 1e-10:
        raise ValueError("wbar must be orthogonal to u")
    if not 0.0 < t <= 1e-2:
        raise ValueError(f"probe parameter t must lie in (0, 1e-2], got {t!r}")
    w = t * wbar - u
    # 1 + <u, v> is about t^2/2 here, far below the default refusal threshold.
    return rotation_between(u, w / np.linalg.norm(w), antipodal_tol=0.0)


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")


def mat_det(m) -> float:
    a = as_matrix(m)
    _require_square(a)
    return float(np.linalg.det(a))


def mat_inverse(m) -> np.ndarray:
    """Inverse of a square matrix.

    Refuses when the smallest singular value is at most ``1e-13`` times the
    largest, i.e. when the matrix is numerically singular.
    """
    a = as_matrix(m)
    _require_square(a)
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= SINGULAR_RTOL * s[0]:
        raise SingularMatrixError(f"matrix is singular (det {np.linalg.det(a):.3e}, "
                                  f"singular values {s[0]:.3e} .. {s[-1]:.3e})")
    return np.linalg.inv(a)


def _power_iteration(g: np.ndarray, x: np.ndarray) -> float:
    lam = 0.0
    for _ in range(_POWER_MAX_ITER):
        y = g @ x
        ny = math.sqrt(float(y @ y))
        if ny == 0.0:
            return 0.0
        new = float(x @ y)
        x = y / ny
        if abs(new - lam) <= _POWER_RTOL * abs(new):
            return new
        lam = new
    return lam


def _squared_power(g: np.ndarray, squarings: int) -> np.ndarray:
    # g^(2^squarings), rescaled each step; same top eigenvector, wider spectral gap
    p = g
    for _ in range(squarings):
        scale = np.max(np.abs(p))
        if scale == 0.0:
            break
        p = p / scale
        p = p @ p
    return p


@functools.lru_cache(maxsize=32)
def _starts(k: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.random.default_rng(_POWER_SEED).standard_normal(k)
    return np.ones(k) / np.sqrt(k), r / np.linalg.norm(r)


def op_norm(m) -> float:
    """Spectral norm by power iteration on ``M^T M``.

    Starts from the normalized all-ones vector; a second start drawn from a
    fixed seed covers the case where the first is orthogonal to the top
    singular vector. Each start is first pushed through a few products with
    ``(M^T M)^64``, then iterated on ``M^T M`` to the relative tolerance.
    """
    a = as_matrix(m)
    g = a.T @ a
    k = g.shape[0]
    starts = _starts(k)
    # warm each start on g^64 so close singular values do not stall the iteration
    p = _squared_power(g, _POWER_SQUARINGS)
    warmed = []
    for x in starts:
        for _ in range(8):
            y = p @ x
            ny = math.sqrt(float(y @ y))
            if ny == 0.0:
                break
            x = y / ny
        warmed.append(x)
    lam = max(_power_iteration(g, x) for x in warmed)
    return float(np.sqrt(max(lam, 0.0)))
