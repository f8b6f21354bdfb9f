"""Stratified difference-quotient probing shared by modulus and Lipschitz estimates.

A probe runs over strata k = 0..12 with radius ``radius * 2**-k``. Each
stratum draws pairs around two centres: the base point, and a "hot spot"
at the midpoint of the worst pair found in the previous stratum. Pairs in a
stratum are separated by at least an eighth of its radius, which keeps the
quotients above the rounding floor.

A sampled supremum can never certify +inf; instead the probe flags blow-up
when the finest stratum maximum is at least ``GROWTH_FACTOR`` times the
maximum four strata coarser.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

N_STRATA = 13
FINE_FROM = 9  # strata whose pair separations are below radius * 2**-8
GROWTH_FACTOR = 2.0
GROWTH_SPAN = 4
MIN_BUDGET = 100
MIN_SEP_FRACTION = 1.0 / 8.0
_EPS = np.finfo(float).eps

# draw(rng, centre, r, m) -> (a, b, sep) candidate pairs in local coordinates
Drawer = Callable[[np.random.Generator, np.ndarray, float, int], tuple[np.ndarray, np.ndarray, np.ndarray]]
# quotients(a, b, sep) -> (quotient per pair, magnitude of the values used)
Quotients = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ProbeResult:
    value: float
    strata: tuple[tuple[float, float], ...]
    pairs_used: int
    blowup: bool
    growth: float


def stratum_sizes(budget: int) -> list[int]:
    """Half the budget goes to the four finest strata, half to the rest."""
    if budget < MIN_BUDGET:
        raise ValueError(f"budget must be at least {MIN_BUDGET}, got {budget}")
    fine = budget // 2
    coarse = budget - fine
    n_coarse, n_fine = FINE_FROM, N_STRATA - FINE_FROM
    sizes = [coarse // n_coarse + (1 if i < coarse % n_coarse else 0) for i in range(n_coarse)]
    sizes += [fine // n_fine + (1 if i < fine % n_fine else 0) for i in range(n_fine)]
    return sizes


def _take(draw: Drawer, rng, centre, r, m):
    """Draw ``m`` admissible pairs (fewer only if the region is nearly empty)."""
    got_a, got_b, got_s = [], [], []
    have = 0
    for _ in range(20):
        a, b, sep = draw(rng, centre, r, 4 * m + 8)
        ok = sep >= MIN_SEP_FRACTION * r
        a, b, sep = a[ok], b[ok], sep[ok]
        got_a.append(a)
        got_b.append(b)
        got_s.append(sep)
        have += len(sep)
        if have >= m:
            break
    a = np.concatenate(got_a)[:m]
    b = np.concatenate(got_b)[:m]
    sep = np.concatenate(got_s)[:m]
    return a, b, sep


def stratified_probe(draw: Drawer, quotients: Quotients, base: np.ndarray, radius: float,
                     budget: int, seed: int) -> ProbeResult:
    sizes = stratum_sizes(budget)
    rng = np.random.default_rng(seed)
    hot = np.array(base, dtype=float)
    strata: list[tuple[float, float]] = []
    floors: list[float] = []
    used = 0
    for k, m in enumerate(sizes):
        r = radius * 2.0**-k
        m_base = (m + 1) // 2
        a1, b1, s1 = _take(draw, rng, base, r, m_base)
        a2, b2, s2 = _take(draw, rng, hot, r, m - m_base)
        a = np.concatenate([a1, a2])
        b = np.concatenate([b1, b2])
        sep = np.concatenate([s1, s2])
        if len(sep) == 0:
            strata.append((r, 0.0))
            floors.append(0.0)
            continue
        q, mag = quotients(a, b, sep)
        used += len(q)
        i = int(np.argmax(q))
        strata.append((r, float(q[i])))
        floors.append(float(np.max(64.0 * _EPS * mag / sep)))
        hot = 0.5 * (a[i] + b[i])
    maxima = [s[1] for s in strata]
    last, ref = maxima[-1], maxima[-1 - GROWTH_SPAN]
    growth = last / ref if ref > 0 else (np.inf if last > 0 else 1.0)
    blowup = bool(growth >= GROWTH_FACTOR and last > 100.0 * floors[-1])
    return ProbeResult(value=float(max(maxima)), strata=tuple(strata), pairs_used=used,
                       blowup=blowup, growth=float(growth))


def uniform_ball(rng: np.random.Generator, m: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((m, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((m, 1)) ** (1.0 / dim)
