"""Points of projective space, hyperplane frames and continuous lifts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NonUnitVectorError, PathGapError
from .linalg import ANTIPODAL_TOL, as_vector, rotation_between, unit

ZERO_THRESHOLD = 1e-12
LIFT_MAX_GAP = math.pi / 4


@dataclass(frozen=True)
class ProjectivePoint:
    """A line through the origin, stored as a canonical unit representative.

    The first coordinate with magnitude above ``ZERO_THRESHOLD`` is positive.
    ``flipped`` records whether canonicalization negated the input.
    """

    rep: tuple[float, ...]
    flipped: bool = field(default=False, compare=False)

    @classmethod
    def from_vector(cls, x) -> "ProjectivePoint":
        v = as_vector(x, "direction")
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise NonUnitVectorError("the zero vector does not define a projective point")
        v = v / n
        flipped = False
        for c in v:
            if abs(c) > ZERO_THRESHOLD:
                if c < 0:
                    v = -v
                    flipped = True
                break
        return cls(tuple(float(c) for c in v), flipped)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.rep)

    @property
    def dim(self) -> int:
        return len(self.rep)


def canonicalize(p) -> ProjectivePoint:
    """Canonical projective point for a vector or an existing point."""
    if isinstance(p, ProjectivePoint):
        v = np.array(p.rep)
        lead = next((c for c in v if abs(c) > ZERO_THRESHOLD), 0.0)
        if lead > 0 and abs(np.linalg.norm(v) - 1.0) <= 1e-15:
            return p  # already canonical; renormalizing could move it by an ulp
        return ProjectivePoint.from_vector(p.rep)
    return ProjectivePoint.from_vector(p)


@dataclass(frozen=True)
class OrthonormalBasis:
    """``columns`` (shape ``(n+1, n)``) span the hyperplane orthogonal to ``normal``."""

    columns: np.ndarray
    normal: np.ndarray
    flipped: bool = False

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    def vectors(self) -> list[np.ndarray]:
        return [self.columns[:, j].copy() for j in range(self.columns.shape[1])]


def hyperplane_basis(v) -> OrthonormalBasis:
    """Orthonormal basis of ``v``'s orthogonal hyperplane.

    The basis is the last n columns of the rotation taking ``e1`` to the
    representative of ``v``. A representative at ``-e1`` (the pole of the
    rotation formula) is replaced by its negative, and the flip recorded.
    Accepts a :class:`ProjectivePoint` or a raw unit vector used as-is.
    """
    rep = v.vector if isinstance(v, ProjectivePoint) else as_vector(v, "normal")
    rep = rep / np.linalg.norm(rep)
    e1 = unit(0, rep.size)
    flipped = False
    if 1.0 + float(rep @ e1) <= ANTIPODAL_TOL:
        rep = -rep
        flipped = True
    r = rotation_between(e1, rep)
    return OrthonormalBasis(columns=r[:, 1:].copy(), normal=rep, flipped=flipped)


def lift_path(samples: Sequence, max_gap: float = LIFT_MAX_GAP) -> list[np.ndarray]:
    """Choose signs for projective samples so consecutive representatives agree.

    Successive representatives have positive inner product. The first is
    kept away from ``-e1``. Raises :class:`PathGapError` when two neighbours
    are more than ``max_gap`` radians apart as lines.
    """
    points = [canonicalize(s) for s in samples]
    if not points:
        return []
    first = points[0].vector
    if 1.0 + first[0] <= ANTIPODAL_TOL:
        first = -first
    out = [first]
    for i, p in enumerate(points[1:], start=1):
        cur = p.vector
        dot = float(out[-1] @ cur)
        gap = math.acos(min(1.0, abs(dot)))
        if gap > max_gap:
            raise PathGapError(
                f"angular gap {gap:.4f} rad between samples {i - 1} and {i} exceeds {max_gap:.4f}"
            )
        out.append(cur if dot >= 0 else -cur)
    return out
