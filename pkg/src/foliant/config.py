"""Problem definitions loaded from INI-style files.

Example::

    [problem]
    p0 = 0, 0
    t0 = 0

    [field]
    F1 = 1
    F2 = 1 + (z2 - z1^2)^(2/3)

    [foliation]
    kind = graph
    g = y1^2

Vectors are comma-separated reals; multiple vectors and curve components
are separated by ``;``. Every default is filled in on load.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .checker import CheckParams
from .errors import ConfigError, FoliantError
from .expr import ExprError, eval_expr, parse_expr
from .field import DiffeoMap, VectorField, registry_get
from .foliation import (
    CurveFrame,
    Foliation,
    affine_foliation,
    curve_foliation,
    from_map,
    graph_foliation,
    identity_foliation,
)
from .modulus import DEFAULT_BUDGET, DEFAULT_DELTA, DEFAULT_SEED

FOLIATION_KINDS = ("identity", "registry", "affine", "graph", "curve")
THEOREMS = ("main", "cid", "hyperplane", "stettner-nowak")


@dataclass
class ProblemConfig:
    path: str
    sha256: str
    dimension: int
    field_spec: str
    field: VectorField
    p0: np.ndarray
    t0: float
    foliation_kind: str
    foliation: Optional[Foliation]
    theorem: str
    check: CheckParams
    basis: Optional[list[np.ndarray]] = None
    u: Optional[np.ndarray] = None
    modulus_p: Optional[np.ndarray] = None
    modulus_v: Optional[np.ndarray] = None
    delta: float = DEFAULT_DELTA
    modulus_budget: int = DEFAULT_BUDGET
    modulus_seed: int = DEFAULT_SEED
    t_end: float = 1.0
    step: float = 1e-3
    epsilons: list[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    directions: int = 8
    foliation_spec: dict = field(default_factory=dict)


def parse_vector(text: str) -> np.ndarray:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"empty vector {text!r}")
    try:
        v = np.array([float(p) for p in parts])
    except ValueError:
        raise ValueError(f"not a comma-separated list of reals: {text!r}") from None
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite entry in {text!r}")
    return v


class _Loader:
    def __init__(self, path: Path):
        self.path = path
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        self.sha = hashlib.sha256(raw).hexdigest()
        try:
            self.text = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise ConfigError(f"{path}: not UTF-8 text") from None
        self.cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            self.cp.read_string(self.text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def locate(self, section: str, key: str) -> tuple[int, int]:
        """1-based (line, column of the value start) of ``key`` in ``section``."""
        current = None
        for lineno, line in enumerate(self.text.splitlines(), start=1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                current = m.group(1).strip()
                continue
            if current == section:
                m = re.match(rf"\s*({re.escape(key)})\s*[=:]\s*", line, re.IGNORECASE)
                if m:
                    return lineno, m.end() + 1
        return 0, 0

    def get(self, section: str, key: str, default=None) -> Optional[str]:
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return default

    def error(self, section: str, key: str, msg: str) -> ConfigError:
        line, col = self.locate(section, key)
        where = f"{self.path}:{line}:{col}" if line else str(self.path)
        return ConfigError(f"{where}: [{section}] {key}: {msg}")

    def vector(self, section: str, key: str, default=None) -> Optional[np.ndarray]:
        text = self.get(section, key)
        if text is None:
            return None if default is None else np.asarray(default, dtype=float)
        try:
            return parse_vector(text)
        except ValueError as exc:
            raise self.error(section, key, str(exc)) from None

    def number(self, section: str, key: str, default, kind=float):
        text = self.get(section, key)
        if text is None:
            return default
        try:
            return kind(text)
        except ValueError:
            raise self.error(section, key, f"expected {kind.__name__}, got {text!r}") from None

    def expression(self, section: str, key: str, text: str, dimension: int, names=None, offset: int = 0):
        try:
            return parse_expr(text, dimension, names)
        except ExprError as exc:
            line, col = self.locate(section, key)
            if exc.position is not None and line:
                col += offset + exc.position
            where = f"{self.path}:{line}:{col}" if line else str(self.path)
            raise ConfigError(f"{where}: [{section}] {key}: {exc}") from None

    def components(self, section: str, key: str, dimension: int, names) -> list:
        text = self.get(section, key)
        if text is None:
            raise self.error(section, key, "missing")
        out, offset = [], 0
        for part in text.split(";"):
            lead = len(part) - len(part.lstrip())
            out.append(self.expression(section, key, part.strip(), dimension, names, offset + lead))
            offset += len(part) + 1
        return out


def _field(ld: _Loader, dimension_hint: Optional[int]) -> tuple[str, VectorField]:
    name = ld.get("problem", "field")
    if name is not None:
        try:
            obj = registry_get(name)
        except FoliantError as exc:
            raise ld.error("problem", "field", str(exc)) from None
        if not isinstance(obj, VectorField):
            raise ld.error("problem", "field", f"{name!r} is not a vector field")
        return name, obj
    if not ld.cp.has_section("field"):
        raise ConfigError(f"{ld.path}: need [problem] field = <registry name> or a [field] section")
    d = dimension_hint or len(ld.cp.options("field"))
    exprs = []
    for i in range(d):
        key = f"f{i + 1}"
        text = ld.get("field", key)
        if text is None:
            raise ConfigError(f"{ld.path}: [field] is missing component F{i + 1}")
        exprs.append((text, ld.expression("field", key, text, d)))
    trees = [e for _, e in exprs]

    def fn(z):
        return np.stack([np.broadcast_to(eval_expr(e, z), z.shape[:-1]) for e in trees], axis=-1)

    spec = "; ".join(t for t, _ in exprs)
    return spec, VectorField(d, fn, name="config-field", exprs=trees)


def _foliation(ld: _Loader, kind: str, p0: np.ndarray) -> tuple[Optional[Foliation], dict]:
    d = p0.size
    spec: dict = {"kind": kind}
    try:
        if kind == "identity":
            return identity_foliation(p0), spec
        if kind == "registry":
            name = ld.get("foliation", "name")
            if name is None:
                raise ld.error("foliation", "name", "missing")
            obj = registry_get(name)
            if not isinstance(obj, DiffeoMap):
                raise ld.error("foliation", "name", f"{name!r} is not a foliation map")
            spec["name"] = name
            return from_map(obj), spec
        if kind == "affine":
            w = ld.vector("foliation", "w")
            basis_text = ld.get("foliation", "basis")
            if w is None or basis_text is None:
                raise ConfigError(f"{ld.path}: affine foliation needs w and basis")
            basis = [parse_vector(b) for b in basis_text.split(";")]
            spec.update(w=w, basis="; ".join(", ".join("%.17g" % c for c in b) for b in basis))
            return affine_foliation(p0, w, basis), spec
        if kind == "graph":
            text = ld.get("foliation", "g")
            if text is None:
                raise ld.error("foliation", "g", "missing")
            n = d - 1
            e = ld.expression("foliation", "g", text, n, {f"y{i + 1}": i for i in range(n)})
            spec["g"] = text
            return graph_foliation(lambda y: eval_expr(e, y), n), spec
        if kind == "curve":
            g1 = ld.components("foliation", "gamma1", 1, {"s": 0})
            g2 = ld.components("foliation", "gamma2", 1, {"s": 0})
            interval = ld.vector("foliation", "interval", (-0.5, 0.5))
            samples = ld.number("foliation", "samples", 64, int)
            if len(g1) != d or len(g2) != d:
                raise ConfigError(f"{ld.path}: curve components must have dimension {d}")

            def curve(parts):
                return lambda t: np.array([eval_expr(e, [t]) for e in parts])

            frame = CurveFrame(curve(g1), curve(g2), (float(interval[0]), float(interval[1])))
            spec.update(gamma1=ld.get("foliation", "gamma1"), gamma2=ld.get("foliation", "gamma2"),
                        interval=interval, samples=samples)
            return curve_foliation(frame, samples), spec
    except ConfigError:
        raise
    except (FoliantError, ValueError) as exc:
        raise ConfigError(f"{ld.path}: [foliation] {exc}") from None
    raise ld.error("foliation", "kind", f"unknown kind {kind!r}; expected one of {', '.join(FOLIATION_KINDS)}")


def load_config(path) -> ProblemConfig:
    ld = _Loader(Path(path))
    if not ld.cp.has_section("problem"):
        raise ConfigError(f"{ld.path}: missing [problem] section")
    dim_hint = ld.number("problem", "dimension", None, int)
    spec, fld = _field(ld, dim_hint)
    d = fld.dim
    if dim_hint is not None and dim_hint != d:
        raise ld.error("problem", "dimension", f"field has dimension {d}")
    p0 = ld.vector("problem", "p0", np.zeros(d))
    if p0.size != d:
        raise ld.error("problem", "p0", f"expected {d} entries")
    t0 = ld.number("problem", "t0", 0.0)

    theorem = ld.get("check", "theorem", "main")
    if theorem not in THEOREMS:
        raise ld.error("check", "theorem", f"unknown theorem {theorem!r}")
    kind = ld.get("foliation", "kind", "identity")
    needs_foliation = theorem == "main"
    fol, fspec = _foliation(ld, kind, p0) if needs_foliation else (None, {"kind": "none"})

    params = CheckParams(
        radius=ld.number("check", "radius", 0.25),
        budget=ld.number("check", "budget", 4096, int),
        seed=ld.number("check", "seed", 42, int),
        threshold=ld.number("check", "threshold", 1e-6),
    )
    basis = None
    if theorem == "hyperplane":
        text = ld.get("check", "basis")
        if text is None:
            raise ld.error("check", "basis", "hyperplane checks need a basis")
        try:
            basis = [parse_vector(b) for b in text.split(";")]
        except ValueError as exc:
            raise ld.error("check", "basis", str(exc)) from None
    u = ld.vector("check", "u") if theorem == "stettner-nowak" else None
    if theorem == "stettner-nowak" and u is None:
        raise ld.error("check", "u", "Stettner-Nowak checks need a direction u")

    cfg = ProblemConfig(
        path=str(path), sha256=ld.sha, dimension=d, field_spec=spec, field=fld, p0=p0, t0=t0,
        foliation_kind=kind if needs_foliation else "none", foliation=fol, theorem=theorem,
        check=params, basis=basis, u=u, foliation_spec=fspec,
    )
    cfg.modulus_p = ld.vector("modulus", "p")
    cfg.modulus_v = ld.vector("modulus", "v")
    cfg.delta = ld.number("modulus", "delta", DEFAULT_DELTA)
    cfg.modulus_budget = ld.number("modulus", "budget", DEFAULT_BUDGET, int)
    cfg.modulus_seed = ld.number("modulus", "seed", DEFAULT_SEED, int)
    cfg.t_end = ld.number("funnel", "t_end", 1.0)
    cfg.step = ld.number("funnel", "step", 1e-3)
    eps = ld.vector("funnel", "epsilons")
    if eps is not None:
        cfg.epsilons = [float(e) for e in eps]
    cfg.directions = ld.number("funnel", "directions", 8, int)
    return cfg
