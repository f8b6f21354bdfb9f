"""Uniqueness verdicts from transversality and Lipschitz-along-leaves evidence.

A SUPPORTED verdict is numerical evidence, never a proof.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import FoliantError
from .field import VectorField
from .foliation import Foliation, affine_foliation, identity_foliation
from .linalg import as_vector, normalize
from .projective import OrthonormalBasis
from .transform import (
    DEFAULT_RADIUS,
    TRANSVERSALITY_THRESHOLD,
    LipschitzEstimate,
    composed,
    inverse_jacobian,
    lipschitz_along_direction,
    lipschitz_fixing_first,
    transversality,
)


class Verdict(str, enum.Enum):
    SUPPORTED = "SUPPORTED"
    TRANSVERSALITY_FAILS = "TRANSVERSALITY_FAILS"
    LIPSCHITZ_BLOWUP = "LIPSCHITZ_BLOWUP"
    INCONCLUSIVE = "INCONCLUSIVE"


EXIT_CODES = {
    Verdict.SUPPORTED: 0,
    Verdict.TRANSVERSALITY_FAILS: 2,
    Verdict.LIPSCHITZ_BLOWUP: 3,
    Verdict.INCONCLUSIVE: 4,
}


@dataclass(frozen=True)
class CheckParams:
    radius: float = DEFAULT_RADIUS
    budget: int = 4096
    seed: int = 42
    threshold: float = TRANSVERSALITY_THRESHOLD


@dataclass(frozen=True)
class UniquenessReport:
    theorem: str  # main | cid | hyperplane | stettner-nowak
    verdict: Verdict
    transversality_value: float
    normal_at_p0: Optional[np.ndarray]
    lip_F_phi: Optional[LipschitzEstimate]
    lip_inv_jac: Optional[LipschitzEstimate]
    params: CheckParams
    p0: Optional[np.ndarray] = None
    reason: str = ""
    extra: dict = field(default_factory=dict)


def decide(value: float, lips: list[LipschitzEstimate], threshold: float) -> Verdict:
    """Transversality failure outranks any Lipschitz flag."""
    if not abs(value) > threshold:
        return Verdict.TRANSVERSALITY_FAILS
    if any(est.blowup for est in lips):
        return Verdict.LIPSCHITZ_BLOWUP
    return Verdict.SUPPORTED


def _inconclusive(theorem: str, params: CheckParams, p0, exc: Exception) -> UniquenessReport:
    return UniquenessReport(theorem, Verdict.INCONCLUSIVE, float("nan"), None, None, None,
                            params, p0, reason=f"{type(exc).__name__}: {exc}")


def check_main(field_: VectorField, foliation: Foliation, params: CheckParams = CheckParams(),
               p0=None, theorem: str = "main") -> UniquenessReport:
    try:
        if p0 is not None:
            p0 = as_vector(p0, "p0")
            if np.linalg.norm(p0 - foliation.base) > 1e-10:
                raise FoliantError(f"foliation base {foliation.base} differs from p0 {p0}")
        tr = transversality(field_, foliation)
        lip_f = lipschitz_fixing_first(composed(field_, foliation), foliation.dim,
                                       params.radius, params.budget, params.seed)
        lip_j = lipschitz_fixing_first(inverse_jacobian(foliation), foliation.dim,
                                       params.radius, params.budget, params.seed + 1)
    except (FoliantError, ArithmeticError, ValueError) as exc:
        return _inconclusive(theorem, params, foliation.base, exc)
    verdict = decide(tr.value, [lip_f, lip_j], params.threshold)
    return UniquenessReport(theorem, verdict, tr.value, tr.normal, lip_f, lip_j, params,
                            foliation.base.copy())


def check_cid(field_: VectorField, p0, params: CheckParams = CheckParams()) -> UniquenessReport:
    """Lipschitz fixing the first variable plus F_1(p0) != 0: the identity foliation."""
    try:
        fol = identity_foliation(p0)
    except (FoliantError, ValueError) as exc:
        return _inconclusive("cid", params, None, exc)
    return check_main(field_, fol, params, theorem="cid")


def hyperplane_normal(v_basis) -> np.ndarray:
    if isinstance(v_basis, OrthonormalBasis):
        return v_basis.normal.copy()
    cols = np.array([as_vector(c) for c in v_basis], dtype=float).T
    u, _, _ = np.linalg.svd(cols, full_matrices=True)
    w = u[:, -1]
    # deterministic sign: first clearly nonzero coordinate positive
    k = int(np.argmax(np.abs(w) > 1e-12))
    return w if w[k] > 0 else -w


def check_hyperplane(field_: VectorField, p0, v_basis, params: CheckParams = CheckParams()) -> UniquenessReport:
    """Lipschitz along the hyperplane V and F(p0) not in V, via an affine foliation."""
    try:
        w = hyperplane_normal(v_basis)
        fol = affine_foliation(p0, w, v_basis)
    except (FoliantError, ValueError) as exc:
        return _inconclusive("hyperplane", params, None, exc)
    return check_main(field_, fol, params, theorem="hyperplane")


def _scalar(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, VectorField):
        if f.dim != 2:
            raise FoliantError("Stettner-Nowak checks need a planar field (1, f)")
        return lambda z: f(z)[..., 1]
    return f


def check_stettner_nowak(f, t0x0, u, params: CheckParams = CheckParams()) -> UniquenessReport:
    """``u2 - f(t0, x0) u1 != 0`` and ``|f(p) - f(p + k u)| <= L |k|`` near (t0, x0).

    ``f`` is a scalar map on arrays of shape ``(..., 2)`` or a planar
    :class:`VectorField` ``(1, f)``, whose second component is used.
    """
    theorem = "stettner-nowak"
    try:
        p0 = as_vector(t0x0, "(t0, x0)")
        u = as_vector(u, "u")
        if p0.size != 2 or u.size != 2:
            raise FoliantError("Stettner-Nowak checks are planar")
        if not np.any(u):
            raise FoliantError("u must be nonzero")
        fs = _scalar(f)
        f0 = float(np.asarray(fs(p0[None, :]))[0])
        value = float(u[1] - f0 * u[0])
        normal = np.array([u[1], -u[0]])
        lip_f = lipschitz_along_direction(fs, p0, u, params.radius, params.budget, params.seed)
        # the coordinate change is linear, so its inverse Jacobian is constant
        uh = normalize(u)
        fol = affine_foliation(p0, np.array([uh[1], -uh[0]]), [uh])
        lip_j = lipschitz_fixing_first(inverse_jacobian(fol), 2, params.radius, params.budget,
                                       params.seed + 1)
    except (FoliantError, ArithmeticError, ValueError) as exc:
        return _inconclusive(theorem, params, None, exc)
    verdict = decide(value, [lip_f, lip_j], params.threshold)
    return UniquenessReport(theorem, verdict, value, normal, lip_f, lip_j, params, p0)
