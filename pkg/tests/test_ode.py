import math

import numpy as np
import pytest

from foliant.errors import EvaluationError
from foliant.field import IVP, SMOOTH_FIELDS, VectorField, registry_get
from foliant.ode import funnel, integrate_rk4, residual, spread_directions


@pytest.fixture(scope="module")
def linear():
    return registry_get("linear-field")


class TestRk4:
    def test_exponential(self, linear):
        traj = integrate_rk4(IVP(linear, [0.0, 1.0]), 1.0, 1e-3)
        assert traj.final[1] == pytest.approx(math.e, abs=1e-9)
        assert traj.times[-1] == 1.0
        assert traj.states.shape == (1001, 2)

    def test_order(self, linear):
        errs = [abs(integrate_rk4(IVP(linear, [0.0, 1.0]), 1.0, h).final[1] - math.e)
                for h in (1e-2, 5e-3, 2.5e-3)]
        for a, b in zip(errs, errs[1:]):
            assert 14.0 <= a / b <= 18.0

    def test_parabola_self_convergence(self):
        ivp = IVP(registry_get("parabola-field"), [0.0, 0.0])
        a = integrate_rk4(ivp, 0.5, 1e-4).final
        b = integrate_rk4(ivp, 0.5, 5e-5).final
        assert np.linalg.norm(a - b) <= 1e-6

    @pytest.mark.parametrize("name", SMOOTH_FIELDS)
    def test_time_reversal(self, name):
        f = registry_get(name)
        p0 = np.full(f.dim, 0.3)
        fwd = integrate_rk4(IVP(f, p0), 0.5, 1e-4)
        back = integrate_rk4(IVP(f, fwd.final, 0.5), 0.0, 1e-4)
        np.testing.assert_allclose(back.final, p0, atol=1e-7)

    def test_step_lands_on_end(self, linear):
        traj = integrate_rk4(IVP(linear, [0.0, 1.0]), 1.0, 0.3)
        assert len(traj.times) == 5 and traj.times[-1] == 1.0
        assert traj.step == pytest.approx(0.25)

    def test_zero_step(self, linear):
        with pytest.raises(ValueError):
            integrate_rk4(IVP(linear, [0.0, 1.0]), 1.0, 0.0)

    def test_step_overflow(self, linear):
        with pytest.raises(ValueError, match="exceeds"):
            integrate_rk4(IVP(linear, [0.0, 1.0]), 1e6, 1e-3)

    def test_blow_up(self):
        f = VectorField(1, lambda z: z**2)
        with pytest.raises(EvaluationError):
            integrate_rk4(IVP(f, [1.0]), 2.0, 1e-2)


class TestFunnel:
    def test_linear_growth(self, linear):
        reports = funnel(IVP(linear, [0.0, 1.0]), [1e-2, 1e-3], 1.0, 1e-3)
        for fr in reports:
            expected = 2 * fr.epsilon * np.exp(fr.times)
            np.testing.assert_allclose(fr.diameter, expected, rtol=0.05)

    def test_parabola_scaling(self):
        ivp = IVP(registry_get("parabola-field"), [0.0, 0.0])
        eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 1e-3, 1e-4, 1e-5]
        reports = funnel(ivp, eps, 0.5, 1e-3)
        ratios = [fr.final_diameter / fr.epsilon for fr in reports]
        assert max(ratios) <= 10.0
        finals = [fr.final_diameter for fr in reports]
        assert finals == sorted(finals, reverse=True)

    def test_zero_radius(self, linear):
        (fr,) = funnel(IVP(linear, [0.0, 1.0]), [0.0], 1.0, 1e-2)
        assert fr.count == 1
        assert np.all(fr.diameter == 0.0)

    def test_threads_do_not_change_results(self, linear, monkeypatch):
        ivp = IVP(registry_get("duffing-field"), [0.1, 0.0])
        monkeypatch.setenv("FOLIANT_THREADS", "1")
        a = funnel(ivp, [1e-3], 1.0, 1e-2)
        monkeypatch.setenv("FOLIANT_THREADS", "4")
        b = funnel(ivp, [1e-3], 1.0, 1e-2)
        np.testing.assert_array_equal(a[0].diameter, b[0].diameter)

    @pytest.mark.parametrize("dim, count", [(1, 2), (2, 8), (3, 12), (5, 10)])
    def test_directions_are_unit(self, dim, count):
        d = spread_directions(dim, count)
        assert d.shape == (count, dim)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)


class TestResidual:
    grid = np.linspace(0.0, 2.0, 41)

    def test_peano_zero_solution(self):
        assert residual(registry_get("peano-field"), lambda t: (t, 0.0), self.grid) <= 1e-10

    def test_peano_cubic_solution(self):
        assert residual(registry_get("peano-field"), lambda t: (t, (t / 3) ** 3), self.grid) <= 1e-6

    def test_linear(self):
        assert residual(registry_get("linear-field"), lambda t: (t, math.exp(t)), self.grid) <= 1e-6

    def test_wrong_candidate(self):
        assert residual(registry_get("linear-field"), lambda t: (t, 1.0 + t), self.grid) > 0.1
