"""Acceptance criteria, each at its stated tolerance.

A summary line per criterion is printed at the end of the run.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from foliant.checker import Verdict, check_main
from foliant.cli import main
from foliant.field import IVP, SMOOTH_FIELDS, registry_get
from foliant.foliation import CurveFrame, affine_foliation, curve_foliation, from_map
from foliant.linalg import mat_det, mat_inverse, op_norm, rotation_between, rotation_limit_probe, unit
from foliant.modulus import ModulusQuery, modulus_along_curve, modulus_gradient, modulus_sample
from foliant.field import fd_jacobian
from foliant.ode import funnel, integrate_rk4, residual
from foliant.projective import canonicalize
from foliant.transform import pullback_field, transversality, transversality_via_inverse

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
acceptance = pytest.mark.acceptance


@acceptance("1 rotation group: orthogonal, det 1, sends u to v (n = 1..6, 1000 pairs each)")
def test_criterion_1_rotation_group():
    rng = np.random.default_rng(1)
    for n in range(1, 7):
        d = n + 1
        done = 0
        while done < 1000:
            u, v = rng.standard_normal(d), rng.standard_normal(d)
            u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
            if 1.0 + u @ v <= 1e-3:
                continue
            r = rotation_between(u, v)
            assert np.linalg.norm(r.T @ r - np.eye(d), 2) <= 1e-10
            assert abs(mat_det(r) - 1.0) <= 1e-10
            assert np.linalg.norm(r @ u - v) <= 1e-10
            done += 1


@acceptance("2 antipodal extension: -Id for n = 1, direction-dependent limits for n = 2")
def test_criterion_2_extension_dichotomy():
    r1 = rotation_limit_probe([1.0, 0.0], [0.0, 1.0], 1e-3)
    assert np.linalg.norm(r1 + np.eye(2), 2) <= 2e-3
    u = unit(0, 3)
    probes = {}
    for i in (1, 2):
        w = unit(i, 3)
        probes[i] = rotation_limit_probe(u, w, 1e-4)
        derived = np.eye(3) - 2.0 * (np.outer(w, w) + np.outer(u, u))
        assert np.linalg.norm(probes[i] - derived, 2) <= 1e-3
    assert np.linalg.norm(probes[1] - probes[2], 2) >= 1.0


@acceptance("3 modulus sampling within [0.7, 1.1] of the gradient oracle (3 fields x 25)")
def test_criterion_3_modulus_oracle():
    rng = np.random.default_rng(3)
    for name in SMOOTH_FIELDS:
        f = registry_get(name)
        for _ in range(25):
            p = rng.uniform(-1.5, 1.5, f.dim)
            v = canonicalize(rng.standard_normal(f.dim))
            oracle = modulus_gradient(f, p, v)
            est = modulus_sample(ModulusQuery(f, p, v, delta=1e-3, budget=4096))
            assert 0.7 * oracle <= est.value <= 1.1 * oracle, (name, p, v.rep, est.value, oracle)


@acceptance("4 parabola modulus: tangent <= 0.05 without blowup, transverse blowup with growth >= 2")
def test_criterion_4_parabola_modulus():
    f = registry_get("parabola-field")
    tangent = modulus_sample(ModulusQuery(f, [1.0, 1.0], np.array([-2.0, 1.0]) / math.sqrt(5.0)))
    assert tangent.value <= 0.05 and not tangent.blowup
    transverse = modulus_sample(ModulusQuery(f, [1.0, 1.0], [1.0, 0.0]))
    assert transverse.blowup
    maxima = [m for _, m in transverse.strata]
    assert maxima[-1] / maxima[-5] >= 2.0


@acceptance("5 parabola pullback, transversality 1, SUPPORTED, both transversality routes agree")
def test_criterion_5_parabola_pipeline():
    f = registry_get("parabola-field")
    fol = from_map(registry_get("parabola-foliation"))
    xs = np.linspace(-0.5, 0.5, 21)
    pts = np.array([(s, y) for s in xs for y in xs])
    expected = np.column_stack([1.0 + np.cbrt(pts[:, 0]) ** 2 - 2.0 * pts[:, 1], np.ones(len(pts))])
    assert np.max(np.abs(pullback_field(f, fol)(pts) - expected)) <= 1e-8
    tr = transversality(f, fol).value
    assert abs(tr - 1.0) <= 1e-8
    assert check_main(f, fol).verdict is Verdict.SUPPORTED
    assert abs(transversality_via_inverse(f, fol).value - tr) <= 1e-6


@acceptance("6 peano negative control: transversality fails, two solutions with small residuals")
def test_criterion_6_negative_controls():
    f = registry_get("peano-field")
    rep = check_main(f, affine_foliation([0.0, 0.0], [0.0, 1.0], [[1.0, 0.0]]))
    assert rep.verdict is Verdict.TRANSVERSALITY_FAILS
    assert abs(rep.transversality_value) <= 1e-10
    grid = np.linspace(0.0, 2.0, 41)
    assert residual(f, lambda t: (t, 0.0), grid) <= 1e-6
    assert residual(f, lambda t: (t, (t / 3.0) ** 3), grid) <= 1e-6


def _conditioned(rng, n, cond):
    u, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return u @ np.diag(np.exp(rng.uniform(0.0, math.log(cond), n))) @ w.T


@acceptance("7 norm inequality and inverse-Lipschitz bound over 1000 seeded instances")
def test_criterion_7_norm_and_inverse_bounds():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        a, c = _conditioned(rng, n, 1e3), _conditioned(rng, n, 1e3)
        b = rng.standard_normal((n, n))
        lower = op_norm(b) / (op_norm(mat_inverse(a)) * op_norm(mat_inverse(c)))
        assert op_norm(a @ b @ c) >= lower - 1e-9

    for _ in range(1000):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        e = rng.standard_normal((n, n))
        e /= op_norm(e)
        xs = rng.uniform(-0.5, 0.5, (8, m))  # |x1| <= 1/2 keeps ||x1 E|| <= 1/2
        gs = [np.eye(n) + x[0] * e for x in xs]
        inv = [mat_inverse(g) for g in gs]
        pairs = [(i, j) for i in range(len(xs)) for j in range(i + 1, len(xs))]
        # g(x) - g(y) = (x1 - y1) E, so each sampled quotient is |x1 - y1| ||E|| / |x - y|
        k1 = max(abs(xs[i, 0] - xs[j, 0]) / np.linalg.norm(xs[i] - xs[j]) for i, j in pairs)
        k2 = max(op_norm(h) for h in inv)
        for i, j in pairs:
            lhs = op_norm(inv[i] - inv[j])
            assert lhs <= k1 * k2**2 * np.linalg.norm(xs[i] - xs[j]) + 1e-9


# Criterion 8: the parabola frame gamma1(t) = (t, t^2), gamma2(t) = [(-2t, 1)].

def _parabola_frame():
    return CurveFrame(lambda t: (t, t * t), lambda t: (-2.0 * t, 1.0), (-0.5, 0.5),
                      gamma1_deriv=lambda t: (1.0, 2.0 * t))


@pytest.fixture(scope="module")
def parabola_curve_foliation():
    # built without the transversality guard so every sub-check can be measured
    return curve_foliation(_parabola_frame(), samples=64, require_transversal=False)


@acceptance("8a curve foliation: Phi(0,0) = p0")
def test_criterion_8a_base_point(parabola_curve_foliation):
    fol = parabola_curve_foliation
    assert np.linalg.norm(fol(fol.origin) - np.array([0.0, 0.0])) <= 1e-10


@acceptance("8b curve foliation: |det Phi'(0,0)| >= 0.5")
def test_criterion_8b_jacobian_determinant(parabola_curve_foliation):
    fol = parabola_curve_foliation
    det = mat_det(fd_jacobian(fol, fol.origin))
    assert abs(det) >= 0.5, f"|det Phi'(0,0)| = {abs(det):.3e}: gamma1'(0) lies in gamma2(0)'s hyperplane"


@acceptance("8c curve foliation: frame columns orthonormal at 64 samples")
def test_criterion_8c_frame_columns(parabola_curve_foliation):
    fol = parabola_curve_foliation
    for s in np.linspace(-0.5, 0.5, 64):
        a = fol.frame(s)
        cols = a[:, 1:]
        assert np.max(np.abs(cols.T @ cols - np.eye(1))) <= 1e-9
        normal = np.array([-2.0 * s, 1.0]) / math.hypot(2.0 * s, 1.0)
        assert np.max(np.abs(normal @ cols)) <= 1e-9


@acceptance("8d curve foliation: modulus along the curve is uniformly bounded, no blowup")
def test_criterion_8d_modulus_along_curve():
    frame = _parabola_frame()
    res = modulus_along_curve(registry_get("parabola-field"), frame.gamma1, frame.gamma2,
                              np.linspace(-0.5, 0.5, 64), budget=1024)
    assert res.uniform_bound and not res.any_blowup


@acceptance("9 RK4 reduction factor in [14, 18]; linear funnel within 5% of 2 eps e^t")
def test_criterion_9_rk4_and_funnel():
    f = registry_get("linear-field")
    errs = [abs(integrate_rk4(IVP(f, [0.0, 1.0]), 1.0, h).final[1] - math.e) for h in (1e-2, 5e-3, 2.5e-3)]
    for a, b in zip(errs, errs[1:]):
        assert 14.0 <= a / b <= 18.0
    for fr in funnel(IVP(f, [0.0, 1.0]), [1e-2, 1e-3, 1e-4], 1.0, 1e-3):
        expected = 2.0 * fr.epsilon * np.exp(fr.times)
        assert np.max(np.abs(fr.diameter / expected - 1.0)) <= 0.05


@acceptance("10 check reports byte-identical for identical config and seed")
def test_criterion_10_reproducible_reports(tmp_path):
    outs = []
    for name in ("a.txt", "b.txt"):
        path = tmp_path / name
        code = main(["check", "--config", str(CONFIGS / "parabola.ini"), "--seed", "42", "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
