"""Fixed-step RK4 trajectories, perturbation funnels and solution residuals.

The integrator picks one solution even where several exist, so
non-uniqueness is shown with ``residual`` on closed-form candidates instead.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError
from .field import IVP, VectorField
from .linalg import as_vector

MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float
    method: str = "rk4"

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate_rk4(ivp: IVP, t_end: float, step: float) -> Trajectory:
    """Classical RK4 from ``ivp.t0`` to ``t_end``.

    The step is shrunk slightly so an integer number of steps lands exactly
    on ``t_end``; ``t_end < t0`` integrates backwards.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    span = t_end - ivp.t0
    n = math.ceil(abs(span) / step - 1e-9) if span else 0
    if n > MAX_STEPS:
        raise ValueError(f"{n} steps exceeds the limit of {MAX_STEPS}")
    f = ivp.field
    h = span / n if n else 0.0
    times = ivp.t0 + h * np.arange(n + 1)
    if n:
        times[-1] = t_end
    states = np.empty((n + 1, f.dim))
    z = ivp.p0.astype(float)
    states[0] = z
    for i in range(n):
        k1 = f(z)
        k2 = f(z + 0.5 * h * k1)
        k3 = f(z + 0.5 * h * k2)
        k4 = f(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise EvaluationError(f"state became non-finite at t = {times[i + 1]}")
        states[i + 1] = z
    return Trajectory(times, states, abs(h), "rk4")


def spread_directions(dim: int, count: int) -> np.ndarray:
    """``count`` deterministic, evenly spread unit vectors in R^dim."""
    if dim == 1:
        base = np.array([[1.0], [-1.0]])
        return base[np.arange(count) % 2]
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    eye = np.eye(dim)
    axes = np.concatenate([eye, -eye])
    return axes[np.arange(count) % (2 * dim)]


@dataclass(frozen=True)
class FunnelReport:
    epsilon: float
    trajectories: tuple[Trajectory, ...]
    times: np.ndarray
    diameter: np.ndarray

    @property
    def count(self) -> int:
        return len(self.trajectories)

    @property
    def final_diameter(self) -> float:
        return float(self.diameter[-1])


def _diameter(states: np.ndarray) -> np.ndarray:
    # states: (trajectories, times, dim)
    diff = states[:, None, :, :] - states[None, :, :, :]
    return np.max(np.linalg.norm(diff, axis=-1), axis=(0, 1))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FOLIANT_THREADS", "1")))
    except ValueError:
        return 1


def funnel(ivp: IVP, epsilons: Sequence[float], t_end: float, step: float,
           directions: int = 8) -> list[FunnelReport]:
    """Integrate from ``p0 + eps * d_i`` for evenly spread unit ``d_i``."""
    dirs = spread_directions(ivp.field.dim, directions)
    reports = []
    for eps in epsilons:
        eps = float(eps)
        if eps < 0:
            raise ValueError("perturbation radius must be nonnegative")
        starts = [ivp.p0] if eps == 0.0 else [ivp.p0 + eps * d for d in dirs]
        probs = [IVP(ivp.field, s, ivp.t0) for s in starts]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            trajs = list(pool.map(lambda pr: integrate_rk4(pr, t_end, step), probs))
        states = np.stack([t.states for t in trajs])
        reports.append(FunnelReport(eps, tuple(trajs), trajs[0].times, _diameter(states)))
    return reports


def residual(field: VectorField, candidate: Callable[[float], Sequence[float]],
             grid: Sequence[float], h: float = 1e-6) -> float:
    """max over the grid of |c'(t) - F(c(t))| with a central-difference c'."""
    worst = 0.0
    for t in grid:
        t = float(t)
        c = as_vector(candidate(t))
        dc = (as_vector(candidate(t + h)) - as_vector(candidate(t - h))) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(dc - field(c))))
    return worst
