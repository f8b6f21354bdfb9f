"""Canonical text reports: ``[section]`` headers and ``key = value`` lines.

Floats are printed with 17 significant digits so reports round-trip and
diff cleanly; section and key order is fixed by the writer.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .checker import UniquenessReport
from .modulus import ModulusEstimate
from .ode import FunnelReport, Trajectory
from .transform import LipschitzEstimate


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    if isinstance(x, np.ndarray) or isinstance(x, (list, tuple)):
        return ", ".join(fmt(v) for v in np.asarray(x, dtype=float).ravel())
    if x is None:
        return "none"
    return str(x)


class Report:
    def __init__(self):
        self.sections: list[tuple[str, list[tuple[str, str]]]] = []

    def section(self, name: str, items: Iterable[tuple[str, object]]) -> None:
        self.sections.append((name, [(k, fmt(v)) for k, v in items]))

    def text(self) -> str:
        out = []
        for name, items in self.sections:
            out.append(f"[{name}]")
            out.extend(f"{k} = {v}" for k, v in items)
            out.append("")
        return "\n".join(out)


def header(command: str, config_hash: str, seed) -> list[tuple[str, object]]:
    return [("tool", "foliant"), ("version", __version__), ("command", command),
            ("config_sha256", config_hash), ("seed", seed)]


def _lipschitz(rep: Report, name: str, est: LipschitzEstimate | None) -> None:
    if est is None:
        rep.section(name, [("available", False)])
        return
    rep.section(name, [("constant", est.constant), ("region", est.region),
                       ("pairs_used", est.pairs_used), ("blowup", est.blowup),
                       ("growth", est.growth), ("seed", est.seed)])
    rep.section(f"{name}.strata", [(str(k), (s, m)) for k, (s, m) in enumerate(est.strata)])


def add_uniqueness(rep: Report, r: UniquenessReport) -> None:
    rep.section("result", [
        ("theorem", r.theorem),
        ("verdict", r.verdict.value),
        ("transversality_value", r.transversality_value),
        ("normal_at_p0", r.normal_at_p0),
        ("p0", r.p0),
        ("reason", r.reason or "none"),
    ])
    rep.section("parameters", [("radius", r.params.radius), ("budget", r.params.budget),
                               ("seed", r.params.seed), ("threshold", r.params.threshold)])
    _lipschitz(rep, "lip_F_phi", r.lip_F_phi)
    _lipschitz(rep, "lip_inv_jac", r.lip_inv_jac)


def add_modulus(rep: Report, est: ModulusEstimate, gradient: float | str) -> None:
    rep.section("modulus", [("value", est.value), ("delta", est.delta),
                            ("pairs_used", est.pairs_used), ("blowup", est.blowup),
                            ("growth", est.growth), ("seed", est.seed),
                            ("gradient_oracle", gradient)])
    rep.section("modulus.strata", [(str(k), (s, m)) for k, (s, m) in enumerate(est.strata)])


def add_funnel(rep: Report, reports: list[FunnelReport]) -> None:
    for i, fr in enumerate(reports):
        rep.section(f"funnel.{i}", [("epsilon", fr.epsilon), ("trajectories", fr.count),
                                    ("initial_diameter", float(fr.diameter[0])),
                                    ("final_diameter", fr.final_diameter)])


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    dim = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"z{i + 1}" for i in range(dim)])
        for t, z in zip(traj.times, traj.states):
            w.writerow([fmt(float(t))] + [fmt(float(c)) for c in z])
